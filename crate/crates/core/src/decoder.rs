//! Viterbi search for the most likely concept labeling.
//!
//! The dynamic program runs over (lattice arc, concept) pairs, which makes it
//! exact for the bigram emission model: the emission of an arc depends only on
//! its own concept and on the concept and word of the arc before it.

use crate::error::{Error, Result};
use crate::lexicon::Lattice;
use crate::model::ConceptHmm;
use crate::segment::SegmentedSentence;
use crate::superword::Superword;

pub const BRUTE_FORCE_MAX_CONCEPTS: usize = 6;
pub const BRUTE_FORCE_MAX_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub segmentation: SegmentedSentence,
    pub log_prob: f64,
    /// Lattice arcs of the chosen path.
    pub arcs: Vec<usize>,
    /// Token span `[start, end)` covered by each superword.
    pub spans: Vec<(usize, usize)>,
    /// Every labeling had probability zero; the labeling is the tie-break
    /// choice and carries no information.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    /// Candidate scores computed for non-initial nodes.
    pub relaxations: u64,
}

pub fn viterbi_decode(model: &ConceptHmm, words: &[Superword]) -> Result<DecodeResult> {
    viterbi_decode_with_stats(model, words).map(|(r, _)| r)
}

pub fn viterbi_decode_with_stats(model: &ConceptHmm, words: &[Superword]) -> Result<(DecodeResult, DecodeStats)> {
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    viterbi_decode_lattice_with_stats(model, &Lattice::from_sequence(words)?)
}

pub fn viterbi_decode_lattice(model: &ConceptHmm, lattice: &Lattice) -> Result<DecodeResult> {
    viterbi_decode_lattice_with_stats(model, lattice).map(|(r, _)| r)
}

/// Ties are broken toward the smaller (concept index, arc index) node.
pub fn viterbi_decode_lattice_with_stats(
    model: &ConceptHmm,
    lattice: &Lattice,
) -> Result<(DecodeResult, DecodeStats)> {
    let n = model.num_concepts();
    let arcs = lattice.arcs();
    let word: Vec<Option<usize>> = arcs.iter().map(|a| model.word_index(&a.superword)).collect();
    let mut score = vec![f64::NEG_INFINITY; arcs.len() * n];
    let mut back: Vec<Option<(usize, usize)>> = vec![None; arcs.len() * n];
    let mut stats = DecodeStats::default();

    // Arcs are sorted by start, so predecessors are always final before use.
    for (a, arc) in arcs.iter().enumerate() {
        if arc.start == 0 {
            for c in 0..n {
                score[a * n + c] = model.log_initial(c) + model.log_emission(c, None, word[a]);
            }
            continue;
        }
        let incoming = lattice.incoming(arc.start);
        for c in 0..n {
            let mut best: Option<(f64, usize, usize)> = None;
            for pc in 0..n {
                let trans = model.log_transition(pc, c);
                for &b in incoming {
                    stats.relaxations += 1;
                    let cand = score[b * n + pc] + trans + model.log_emission(c, Some((pc, word[b])), word[a]);
                    if best.is_none_or(|(s, _, _)| cand > s) {
                        best = Some((cand, pc, b));
                    }
                }
            }
            if let Some((s, pc, b)) = best {
                score[a * n + c] = s;
                back[a * n + c] = Some((b, pc));
            }
        }
    }

    let mut best: Option<(f64, usize, usize)> = None;
    let ending = lattice.incoming(lattice.len());
    for c in 0..n {
        for &b in ending {
            let total = score[b * n + c] + model.log_final(c);
            if best.is_none_or(|(s, _, _)| total > s) {
                best = Some((total, c, b));
            }
        }
    }
    let (log_prob, mut c, mut a) = best.ok_or_else(|| Error::Invalid("lattice has no final arc".into()))?;

    let mut path = Vec::new();
    loop {
        path.push((a, c));
        match back[a * n + c] {
            Some((pa, pc)) => {
                a = pa;
                c = pc;
            }
            None => break,
        }
    }
    path.reverse();
    Ok((build_result(model, lattice, &path, log_prob), stats))
}

/// `log P(W)`: the joint probability summed over every labeling, by the
/// forward recursion.
pub fn forward_log_marginal(model: &ConceptHmm, words: &[Superword]) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    let n = model.num_concepts();
    let w: Vec<Option<usize>> = words.iter().map(|x| model.word_index(x)).collect();
    let mut alpha: Vec<f64> = (0..n)
        .map(|c| model.log_initial(c) + model.log_emission(c, None, w[0]))
        .collect();
    for i in 1..w.len() {
        alpha = (0..n)
            .map(|c| {
                log_sum_exp((0..n).map(|pc| {
                    alpha[pc] + model.log_transition(pc, c) + model.log_emission(c, Some((pc, w[i - 1])), w[i])
                }))
            })
            .collect();
    }
    Ok(log_sum_exp((0..n).map(|c| alpha[c] + model.log_final(c))))
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn build_result(model: &ConceptHmm, lattice: &Lattice, path: &[(usize, usize)], log_prob: f64) -> DecodeResult {
    let arcs = lattice.arcs();
    let dict = model.dictionary();
    let segmentation = SegmentedSentence {
        words: path.iter().map(|&(a, _)| arcs[a].superword.clone()).collect(),
        labels: path.iter().map(|&(_, c)| dict.name(c).to_string()).collect(),
    };
    DecodeResult {
        segmentation,
        log_prob,
        arcs: path.iter().map(|&(a, _)| a).collect(),
        spans: path.iter().map(|&(a, _)| (arcs[a].start, arcs[a].end)).collect(),
        degenerate: log_prob == f64::NEG_INFINITY,
    }
}

/// Exhaustive search over every path and every labeling. Only for small
/// problems; used as a reference for the dynamic program.
pub fn brute_force_decode(model: &ConceptHmm, words: &[Superword]) -> Result<DecodeResult> {
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    brute_force_decode_lattice(model, &Lattice::from_sequence(words)?)
}

/// One fully labeled path with the running score after every node.
struct Candidate {
    nodes: Vec<(usize, usize)>,
    prefix: Vec<f64>,
    total: f64,
}

impl Candidate {
    /// The order the dynamic program induces on complete paths: higher total,
    /// then (walking back from the last node) smaller (concept, arc) key, then
    /// higher running score at that node, and so on.
    fn beats(&self, other: &Candidate) -> bool {
        if self.total != other.total {
            return self.total > other.total;
        }
        let (mut i, mut j) = (self.nodes.len(), other.nodes.len());
        while i > 0 && j > 0 {
            i -= 1;
            j -= 1;
            let (a, c) = self.nodes[i];
            let (b, d) = other.nodes[j];
            if (c, a) != (d, b) {
                return (c, a) < (d, b);
            }
            if self.prefix[i] != other.prefix[j] {
                return self.prefix[i] > other.prefix[j];
            }
        }
        false
    }
}

pub fn brute_force_decode_lattice(model: &ConceptHmm, lattice: &Lattice) -> Result<DecodeResult> {
    let n = model.num_concepts();
    let limit = Error::SizeLimit {
        max_concepts: BRUTE_FORCE_MAX_CONCEPTS,
        max_len: BRUTE_FORCE_MAX_LEN,
    };
    if n > BRUTE_FORCE_MAX_CONCEPTS {
        return Err(limit);
    }
    let paths = lattice.arc_paths(usize::MAX);
    if paths.iter().any(|p| p.len() > BRUTE_FORCE_MAX_LEN) {
        return Err(limit);
    }
    let arcs = lattice.arcs();
    let mut best: Option<Candidate> = None;
    for path in &paths {
        let words: Vec<Option<usize>> = path.iter().map(|&a| model.word_index(&arcs[a].superword)).collect();
        let mut labels = vec![0usize; path.len()];
        loop {
            let mut prefix = Vec::with_capacity(labels.len());
            let mut s = model.log_initial(labels[0]) + model.log_emission(labels[0], None, words[0]);
            prefix.push(s);
            for i in 1..labels.len() {
                s = s
                    + model.log_transition(labels[i - 1], labels[i])
                    + model.log_emission(labels[i], Some((labels[i - 1], words[i - 1])), words[i]);
                prefix.push(s);
            }
            let cand = Candidate {
                nodes: path.iter().copied().zip(labels.iter().copied()).collect(),
                total: s + model.log_final(labels[labels.len() - 1]),
                prefix,
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
            // Odometer over n^len labelings.
            let mut i = 0;
            while i < labels.len() {
                labels[i] += 1;
                if labels[i] < n {
                    break;
                }
                labels[i] = 0;
                i += 1;
            }
            if i == labels.len() {
                break;
            }
        }
    }
    let best = best.ok_or_else(|| Error::Invalid("lattice has no complete path".into()))?;
    Ok(build_result(model, lattice, &best.nodes, best.total))
}
