//! Learning from answers instead of labels, and aligning pseudo-English
//! annotations whose concepts come in a different order than the sentence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::concept::ConceptDictionary;
use crate::corpus::{gold_segmentation, Corpus, CorpusEntry};
use crate::dialog::DialogState;
use crate::error::{Error, Result};
use crate::model::{ConceptHmm, Vocabulary};
use crate::pipeline::{Outcome, Pipeline};
use crate::query::score_answer;
use crate::segment::SegmentedSentence;
use crate::superword::Superword;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The set of correct sentences did not change between two iterations.
    Converged,
    MaxIters,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max-iters",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationReport {
    pub iteration: usize,
    pub correct: usize,
    pub problem: usize,
    /// Hash of the model that classified the corpus in this iteration.
    pub snapshot: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopReport {
    pub iterations: Vec<IterationReport>,
    pub termination: Termination,
    /// Ids of the correct sentences in the last iteration.
    pub final_correct: BTreeSet<String>,
}

impl LoopReport {
    pub fn render(&self) -> String {
        let mut s = String::from("iteration\tcorrect\tproblem\tsnapshot\n");
        for it in &self.iterations {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", it.iteration, it.correct, it.problem, it.snapshot);
        }
        let _ = writeln!(s, "termination\t{}", self.termination.as_str());
        s
    }
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
pub fn snapshot_id(model: &ConceptHmm) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in model.to_text().bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Decodes one entry and decides whether the system got it right: by the
/// reference answers when there are any, else by the gold segmentation, else
/// by the annotation's template. Returns the decoded segmentation when right.
fn classify(pipeline: &Pipeline, entry: &CorpusEntry) -> Option<SegmentedSentence> {
    let (_, turn) = pipeline.respond(&DialogState::new(), &entry.text).ok()?;
    let decode = &turn.understanding.decode;
    if decode.degenerate {
        return None;
    }
    let right = if let (Some(lo), Some(hi)) = (&entry.minimal, &entry.maximal) {
        matches!(&turn.outcome, Outcome::Answered { answer, .. } if score_answer(answer, lo, hi))
    } else if entry.gold.is_some() {
        gold_segmentation(entry, &pipeline.artifacts.lexicon).ok().flatten().as_ref() == Some(&decode.segmentation)
    } else if let Some(win) = &entry.win {
        pipeline
            .win_template(win)
            .map(|t| t.to_string() == turn.understanding.template.to_string())
            .unwrap_or(false)
    } else {
        false
    };
    right.then(|| decode.segmentation.clone())
}

/// Iterates: classify every entry with the current model, then retrain on the
/// seed segmentations plus the decoded segmentations of the unlabeled entries
/// that came out right. Stops when the set of correct entries repeats or
/// after `max_iters` classification passes.
pub fn run_training_loop(
    corpus: &Corpus,
    seed: &[SegmentedSentence],
    pipeline: &Pipeline,
    max_iters: usize,
) -> Result<(ConceptHmm, LoopReport)> {
    if max_iters == 0 {
        return Err(Error::Invalid("max_iters must be at least 1".into()));
    }
    if seed.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let k = pipeline.model.k();
    let dictionary = pipeline.model.dictionary().clone();
    let base_vocab: BTreeSet<String> = pipeline.model.vocabulary().iter().map(str::to_string).collect();
    let mut current = pipeline.clone();
    let mut previous: Option<BTreeSet<String>> = None;
    let mut iterations = Vec::new();

    for iteration in 1..=max_iters {
        let mut correct = BTreeSet::new();
        let mut kept = Vec::new();
        for entry in &corpus.entries {
            if let Some(seg) = classify(&current, entry) {
                correct.insert(entry.id.clone());
                if entry.gold.is_none() {
                    kept.push(seg);
                }
            }
        }
        iterations.push(IterationReport {
            iteration,
            correct: correct.len(),
            problem: corpus.entries.len() - correct.len(),
            snapshot: snapshot_id(&current.model),
        });
        if previous.as_ref() == Some(&correct) {
            let report = LoopReport {
                iterations,
                termination: Termination::Converged,
                final_correct: correct,
            };
            return Ok((current.model, report));
        }

        let mut training: Vec<SegmentedSentence> = seed.to_vec();
        training.extend(kept);
        let mut vocab = base_vocab.clone();
        for s in &training {
            vocab.extend(s.words.iter().map(|w| w.id.clone()));
        }
        let model = ConceptHmm::train_mle(&training, &dictionary, &Vocabulary::new(vocab)?, k)?;
        current = current.with_model(model);

        if iteration == max_iters {
            let report = LoopReport {
                iterations,
                termination: Termination::MaxIters,
                final_correct: correct,
            };
            return Ok((current.model, report));
        }
        previous = Some(correct);
    }
    unreachable!("loop returns from its last iteration")
}

/// What a concept contributes to the constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Free,
    Counted(usize),
    Forbidden,
}

struct Constraint {
    slots: Vec<Slot>,
    required: Vec<usize>,
    radix: Vec<usize>,
    states: usize,
}

impl Constraint {
    fn new(dictionary: &ConceptDictionary, keywords: &[String]) -> Self {
        let mut req: BTreeMap<&str, usize> = BTreeMap::new();
        for k in keywords {
            *req.entry(k.as_str()).or_default() += 1;
        }
        let names: Vec<&str> = req.keys().copied().collect();
        let required: Vec<usize> = req.values().copied().collect();
        let slots = (0..dictionary.len())
            .map(|c| {
                let name = dictionary.name(c);
                if dictionary.is_special(name) {
                    Slot::Free
                } else {
                    match names.iter().position(|n| *n == dictionary.keyword(name)) {
                        Some(i) => Slot::Counted(i),
                        None => Slot::Forbidden,
                    }
                }
            })
            .collect();
        let mut radix = Vec::with_capacity(required.len());
        let mut states = 1;
        for r in &required {
            radix.push(states);
            states *= r + 1;
        }
        Constraint {
            slots,
            required,
            radix,
            states,
        }
    }

    fn digit(&self, s: usize, i: usize) -> usize {
        (s / self.radix[i]) % (self.required[i] + 1)
    }

    fn full(&self) -> usize {
        self.required.iter().zip(&self.radix).map(|(r, x)| r * x).sum()
    }

    /// Counter state before entering `c` as a new segment, given the state
    /// after it.
    fn before_new_segment(&self, c: usize, s: usize) -> Option<usize> {
        match self.slots[c] {
            Slot::Free => Some(s),
            Slot::Forbidden => None,
            Slot::Counted(i) => (self.digit(s, i) > 0).then(|| s - self.radix[i]),
        }
    }

    fn satisfied_by(&self, dictionary: &ConceptDictionary, labels: &[usize]) -> bool {
        let mut counts = vec![0; self.required.len()];
        for (i, &c) in labels.iter().enumerate() {
            if i > 0 && labels[i - 1] == c {
                continue;
            }
            match self.slots[c] {
                Slot::Free => {}
                Slot::Forbidden => return false,
                Slot::Counted(k) => counts[k] += 1,
            }
        }
        let _ = dictionary;
        counts == self.required
    }
}

fn keywords_of(win: &crate::template::Template) -> Vec<String> {
    win.tokens.iter().map(|t| t.keyword.clone()).collect()
}

/// Best labeling of `words` whose non-special segments carry exactly the
/// multiset of keywords in `win`, in any order, together with its log
/// probability. Viterbi over (concept, keyword counter) states.
pub fn align_win_scored(
    words: &[Superword],
    win: &crate::template::Template,
    model: &ConceptHmm,
) -> Result<(SegmentedSentence, f64)> {
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    let dict = model.dictionary();
    let cons = Constraint::new(dict, &keywords_of(win));
    let n = dict.len();
    let ns = cons.states;
    let len = words.len();
    let w: Vec<Option<usize>> = words.iter().map(|x| model.word_index(x)).collect();
    let idx = |c: usize, s: usize| c * ns + s;
    let mut score = vec![f64::NEG_INFINITY; n * ns];
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(len);
    let mut alive = vec![false; n * ns];

    for c in 0..n {
        let s = match cons.slots[c] {
            Slot::Free => 0,
            Slot::Counted(i) => cons.radix[i],
            Slot::Forbidden => continue,
        };
        score[idx(c, s)] = model.log_initial(c) + model.log_emission(c, None, w[0]);
        alive[idx(c, s)] = true;
    }
    back.push(vec![usize::MAX; n * ns]);

    for i in 1..len {
        let mut next = vec![f64::NEG_INFINITY; n * ns];
        let mut next_alive = vec![false; n * ns];
        let mut bp = vec![usize::MAX; n * ns];
        for c in 0..n {
            for s in 0..ns {
                let mut best: Option<(f64, usize)> = None;
                for pc in 0..n {
                    let ps = if pc == c {
                        Some(s)
                    } else {
                        cons.before_new_segment(c, s)
                    };
                    let Some(ps) = ps else { continue };
                    if !alive[idx(pc, ps)] {
                        continue;
                    }
                    let cand = score[idx(pc, ps)]
                        + model.log_transition(pc, c)
                        + model.log_emission(c, Some((pc, w[i - 1])), w[i]);
                    if best.is_none_or(|(b, _)| cand > b) {
                        best = Some((cand, idx(pc, ps)));
                    }
                }
                if let Some((b, from)) = best {
                    next[idx(c, s)] = b;
                    next_alive[idx(c, s)] = true;
                    bp[idx(c, s)] = from;
                }
            }
        }
        score = next;
        alive = next_alive;
        back.push(bp);
    }

    let full = cons.full();
    let mut best: Option<(f64, usize)> = None;
    for c in 0..n {
        if !alive[idx(c, full)] {
            continue;
        }
        let total = score[idx(c, full)] + model.log_final(c);
        if best.is_none_or(|(b, _)| total > b) {
            best = Some((total, idx(c, full)));
        }
    }
    let (log_prob, mut node) = match best {
        Some((lp, node)) if lp > f64::NEG_INFINITY => (lp, node),
        _ => return Err(Error::Infeasible),
    };
    let mut labels = vec![0; len];
    for i in (0..len).rev() {
        labels[i] = node / ns;
        node = back[i][node];
    }
    let seg = SegmentedSentence::new(
        words.to_vec(),
        labels.iter().map(|&c| dict.name(c).to_string()).collect(),
    )?;
    Ok((seg, log_prob))
}

pub fn align_win(
    words: &[Superword],
    win: &crate::template::Template,
    model: &ConceptHmm,
) -> Result<SegmentedSentence> {
    align_win_scored(words, win, model).map(|(s, _)| s)
}

/// Exhaustive reference for [`align_win_scored`]: the best score among all
/// labelings meeting the constraint, and one labeling reaching it.
pub fn brute_force_align(
    words: &[Superword],
    win: &crate::template::Template,
    model: &ConceptHmm,
) -> Result<(SegmentedSentence, f64)> {
    use crate::decoder::{BRUTE_FORCE_MAX_CONCEPTS, BRUTE_FORCE_MAX_LEN};
    let dict = model.dictionary();
    let n = dict.len();
    if n > BRUTE_FORCE_MAX_CONCEPTS || words.len() > BRUTE_FORCE_MAX_LEN {
        return Err(Error::SizeLimit {
            max_concepts: BRUTE_FORCE_MAX_CONCEPTS,
            max_len: BRUTE_FORCE_MAX_LEN,
        });
    }
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    let cons = Constraint::new(dict, &keywords_of(win));
    let w: Vec<Option<usize>> = words.iter().map(|x| model.word_index(x)).collect();
    let mut labels = vec![0usize; words.len()];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        if cons.satisfied_by(dict, &labels) {
            let s = model.score_indices(&labels, &w);
            if best.as_ref().is_none_or(|(_, b)| s > *b) {
                best = Some((labels.clone(), s));
            }
        }
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
    match best {
        Some((l, s)) if s > f64::NEG_INFINITY => Ok((
            SegmentedSentence::new(words.to_vec(), l.iter().map(|&c| dict.name(c).to_string()).collect())?,
            s,
        )),
        _ => Err(Error::Infeasible),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::viterbi_decode;
    use crate::template::Template;

    fn seg(s: &str) -> SegmentedSentence {
        SegmentedSentence::parse(s).unwrap()
    }

    fn model(k: f64) -> ConceptHmm {
        let d = ConceptDictionary::flat(&["question", "origin", "destin", "airline"]).unwrap();
        let corpus = [
            seg("question:[LIST] origin:[FROM WASHINGTON] destin:[TO PHILADELPHIA] airline:[AMERICAN]"),
            seg("airline:[AMERICAN] origin:[FROM WASHINGTON]"),
            seg("question:[LIST] airline:[AMERICAN] destin:[TO PHILADELPHIA] dummy:[PLEASE]"),
        ];
        let mut vocab: BTreeSet<String> = corpus.iter().flat_map(|s| s.words.iter().map(|w| w.id.clone())).collect();
        vocab.insert("ONE".into());
        ConceptHmm::train_mle(&corpus, &d, &Vocabulary::new(vocab).unwrap(), k).unwrap()
    }

    fn words(s: &str) -> Vec<Superword> {
        s.split_whitespace().map(Superword::word).collect()
    }

    #[test]
    fn inactive_constraint_matches_viterbi() {
        let m = model(0.01);
        let w = words("LIST FROM WASHINGTON TO PHILADELPHIA");
        let free = viterbi_decode(&m, &w).unwrap();
        let keywords: Vec<String> = free
            .segmentation
            .segments()
            .iter()
            .filter(|s| !m.dictionary().is_special(s.concept))
            .map(|s| format!("({},x)", s.concept))
            .collect();
        let win = Template::parse(&keywords.join(" ")).unwrap();
        let (aligned, lp) = align_win_scored(&w, &win, &m).unwrap();
        assert_eq!(aligned, free.segmentation);
        assert_eq!(lp, free.log_prob);
    }

    #[test]
    fn matches_exhaustive_search() {
        let m = model(0.01);
        let w = words("AMERICAN FROM WASHINGTON TO PHILADELPHIA");
        let win = Template::parse("(destin,PPHL) (origin,WWAS) (airline,AA)").unwrap();
        let (aligned, lp) = align_win_scored(&w, &win, &m).unwrap();
        let (oracle, olp) = brute_force_align(&w, &win, &m).unwrap();
        assert_eq!(lp.to_bits(), olp.to_bits());
        assert_eq!(aligned, oracle);
        let concepts: Vec<&str> = aligned
            .segments()
            .iter()
            .map(|s| s.concept)
            .filter(|c| !m.dictionary().is_special(c))
            .collect();
        assert_eq!(concepts, ["airline", "origin", "destin"]);
    }

    #[test]
    fn infeasible_constraints() {
        let m = model(0.0);
        let w = words("FROM WASHINGTON");
        let win = Template::parse("(origin,WWAS) (destin,PPHL) (airline,AA)").unwrap();
        assert_eq!(align_win(&w, &win, &m).unwrap_err(), Error::Infeasible);
        assert_eq!(brute_force_align(&w, &win, &m).unwrap_err(), Error::Infeasible);
        let unseen = Template::parse("(question,list) (origin,WWAS)").unwrap();
        assert_eq!(align_win(&words("ONE WASHINGTON"), &unseen, &m).unwrap_err(), Error::Infeasible);
    }

    #[test]
    fn repeated_keywords_need_separate_segments() {
        let m = model(0.01);
        let w = words("FROM WASHINGTON TO PHILADELPHIA FROM WASHINGTON");
        let win = Template::parse("(origin,WWAS) (origin,WWAS) (destin,PPHL)").unwrap();
        let aligned = align_win(&w, &win, &m).unwrap();
        let origins = aligned.segments().iter().filter(|s| s.concept == "origin").count();
        assert_eq!(origins, 2);
        let (_, lp) = brute_force_align(&w, &win, &m).unwrap();
        assert_eq!(align_win_scored(&w, &win, &m).unwrap().1.to_bits(), lp.to_bits());
    }
}
