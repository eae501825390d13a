//! First-order concept HMM: concept transitions plus one word-bigram model per
//! concept, estimated by relative frequency with add-k smoothing.
//!
//! Probabilities are stored at the precision of the model file (12
//! significant digits) so that a written model reads back bit-for-bit. Every
//! table keeps both the linear value and its natural log; an impossible event
//! has probability 0 and log `-inf`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::concept::ConceptDictionary;
use crate::error::{Error, Result};
use crate::segment::SegmentedSentence;
use crate::superword::{Superword, UNKNOWN};

/// Begin-of-segment context row in every bigram table, and the initial row
/// of the transition model.
pub const BEGIN: &str = "<s>";
/// Final-state column of the transition model.
pub const FINAL: &str = "</s>";

pub const MODEL_HEADER: &str = "chronus-model v1";
pub const DEFAULT_K: f64 = 0.001;

/// Tolerance used by [`ConceptHmm::check_normalization`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        for w in &set {
            if w.is_empty() || w.contains(['\t', '\n']) || w == BEGIN || w == FINAL || w == "*" {
                return Err(Error::Invalid(format!("`{w}` cannot be a vocabulary entry")));
            }
        }
        let words: Vec<String> = set.into_iter().collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Vocabulary { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn index_of(&self, w: &str) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn contains(&self, w: &str) -> bool {
        self.index.contains_key(w)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    cols: usize,
    prob: Vec<f64>,
    logp: Vec<f64>,
}

impl Table {
    fn new(cols: usize, prob: Vec<f64>) -> Self {
        debug_assert_eq!(prob.len() % cols, 0);
        let logp = prob.iter().map(|p| p.ln()).collect();
        Table { cols, prob, logp }
    }

    fn rows(&self) -> usize {
        self.prob.len() / self.cols
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.prob[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    fn log(&self, r: usize, c: usize) -> f64 {
        self.logp[r * self.cols + c]
    }

    #[inline]
    fn p(&self, r: usize, c: usize) -> f64 {
        self.prob[r * self.cols + c]
    }

    fn bits_eq(&self, other: &Table) -> bool {
        self.cols == other.cols
            && self.prob.len() == other.prob.len()
            && self
                .prob
                .iter()
                .zip(&other.prob)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Rounds to the 12 significant digits the model file stores.
pub fn quantize(p: f64) -> f64 {
    format!("{p:.11e}").parse().expect("formatted float parses")
}

fn format_prob(p: f64) -> String {
    format!("{p:.11e}")
}

/// Add-k estimate of one row of counts. A row with no mass at all (no counts
/// and k = 0) becomes uniform.
fn estimate_row(counts: &[f64], k: f64, out: &mut Vec<f64>) {
    let cols = counts.len() as f64;
    let total: f64 = counts.iter().sum();
    let denom = total + k * cols;
    if denom <= 0.0 {
        let u = quantize(1.0 / cols);
        out.extend(std::iter::repeat_n(u, counts.len()));
        return;
    }
    let floor = quantize(k / denom);
    out.extend(counts.iter().map(|&c| {
        if c == 0.0 {
            floor
        } else {
            quantize((c + k) / denom)
        }
    }));
}

/// Raw (possibly fractional, after synonym tying) event counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Counts {
    /// `n` entries.
    pub initial: Vec<f64>,
    /// `n x (n + 1)`, last column is the final state.
    pub transition: Vec<f64>,
    /// Per concept `(V + 1) x V`, last row is the begin marker.
    pub bigram: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParameterCounts {
    pub concepts: usize,
    pub vocabulary: usize,
    pub transition_rows: usize,
    /// Distinct observed initial, transition and final events.
    pub transition_observed: usize,
    pub bigram_rows: usize,
    /// Distinct observed (concept, context, word) events.
    pub bigram_observed: usize,
}

#[derive(Debug, Clone)]
pub struct ConceptHmm {
    dictionary: ConceptDictionary,
    vocab: Vocabulary,
    k: f64,
    initial: Table,
    transition: Table,
    bigram: Vec<Table>,
    counts: Option<Counts>,
}

/// Per concept, groups of words whose bigram statistics are tied.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymGroups {
    pub groups: BTreeMap<String, Vec<Vec<String>>>,
}

impl SynonymGroups {
    /// `concept<TAB>WORD<TAB>WORD...` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut groups: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = crate::lexicon::strip_comment(raw);
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t').map(str::trim).filter(|f| !f.is_empty());
            let concept = fields.next().ok_or_else(|| Error::parse(i + 1, "missing concept"))?;
            let words: Vec<String> = fields.map(str::to_string).collect();
            if words.is_empty() {
                return Err(Error::parse(i + 1, "group has no words"));
            }
            groups.entry(concept.to_string()).or_default().push(words);
        }
        Ok(SynonymGroups { groups })
    }
}

impl ConceptHmm {
    /// Relative-frequency estimate with add-k smoothing over the full event
    /// space of every table.
    pub fn train_mle(
        corpus: &[SegmentedSentence],
        dictionary: &ConceptDictionary,
        vocab: &Vocabulary,
        k: f64,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::Invalid(format!("smoothing constant must be >= 0, got {k}")));
        }
        let n = dictionary.len();
        let v = vocab.len();
        if v == 0 {
            return Err(Error::Invalid("empty vocabulary".into()));
        }
        let mut counts = Counts {
            initial: vec![0.0; n],
            transition: vec![0.0; n * (n + 1)],
            bigram: vec![vec![0.0; (v + 1) * v]; n],
        };
        for sentence in corpus {
            let labels = sentence
                .labels
                .iter()
                .map(|l| dictionary.require(l))
                .collect::<Result<Vec<_>>>()?;
            let words = sentence
                .words
                .iter()
                .map(|w| vocab.index_of(&w.id).ok_or_else(|| Error::UnknownWord(w.id.clone())))
                .collect::<Result<Vec<_>>>()?;
            counts.initial[labels[0]] += 1.0;
            for i in 0..labels.len() {
                let c = labels[i];
                let ctx = if i > 0 && labels[i - 1] == c { words[i - 1] } else { v };
                if i > 0 {
                    counts.transition[labels[i - 1] * (n + 1) + c] += 1.0;
                }
                counts.bigram[c][ctx * v + words[i]] += 1.0;
            }
            counts.transition[labels[labels.len() - 1] * (n + 1) + n] += 1.0;
        }
        Ok(Self::from_counts(dictionary.clone(), vocab.clone(), k, counts))
    }

    fn from_counts(dictionary: ConceptDictionary, vocab: Vocabulary, k: f64, counts: Counts) -> Self {
        let n = dictionary.len();
        let v = vocab.len();
        let mut initial = Vec::with_capacity(n);
        estimate_row(&counts.initial, k, &mut initial);
        let mut transition = Vec::with_capacity(n * (n + 1));
        for row in counts.transition.chunks(n + 1) {
            estimate_row(row, k, &mut transition);
        }
        let bigram = counts
            .bigram
            .iter()
            .map(|table| {
                let mut probs = Vec::with_capacity(table.len());
                for row in table.chunks(v) {
                    estimate_row(row, k, &mut probs);
                }
                Table::new(v, probs)
            })
            .collect();
        ConceptHmm {
            dictionary,
            vocab,
            k,
            initial: Table::new(n, initial),
            transition: Table::new(n + 1, transition),
            bigram,
            counts: Some(counts),
        }
    }

    /// Builds a model from explicit probability tables (rows must each sum to
    /// one). Values are rounded to file precision.
    ///
    /// `bigram[c]` has `V + 1` rows, the last being the begin-marker row.
    pub fn from_probabilities(
        dictionary: ConceptDictionary,
        vocab: Vocabulary,
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
        bigram: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = dictionary.len();
        let v = vocab.len();
        let shape = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{what} has the wrong shape")))
            }
        };
        shape(initial.len() == n, "initial")?;
        shape(transition.len() == n && transition.iter().all(|r| r.len() == n + 1), "transition")?;
        shape(
            bigram.len() == n && bigram.iter().all(|t| t.len() == v + 1 && t.iter().all(|r| r.len() == v)),
            "bigram",
        )?;
        let q = |row: &[f64]| row.iter().map(|&p| quantize(p)).collect::<Vec<_>>();
        let model = ConceptHmm {
            initial: Table::new(n, q(&initial)),
            transition: Table::new(n + 1, transition.iter().flat_map(|r| q(r)).collect()),
            bigram: bigram
                .iter()
                .map(|t| Table::new(v, t.iter().flat_map(|r| q(r)).collect()))
                .collect(),
            dictionary,
            vocab,
            k: 0.0,
            counts: None,
        };
        model.check_normalization()?;
        Ok(model)
    }

    pub fn dictionary(&self) -> &ConceptDictionary {
        &self.dictionary
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn counts(&self) -> Option<&Counts> {
        self.counts.as_ref()
    }

    pub fn num_concepts(&self) -> usize {
        self.dictionary.len()
    }

    /// Vocabulary index for a superword; out-of-vocabulary ids fall back to
    /// the unknown marker when the vocabulary has one.
    pub fn word_index(&self, w: &Superword) -> Option<usize> {
        self.vocab
            .index_of(&w.id)
            .or_else(|| self.vocab.index_of(UNKNOWN))
    }

    #[inline]
    pub fn log_initial(&self, c: usize) -> f64 {
        self.initial.log(0, c)
    }

    #[inline]
    pub fn log_transition(&self, from: usize, to: usize) -> f64 {
        self.transition.log(from, to)
    }

    #[inline]
    pub fn log_final(&self, c: usize) -> f64 {
        self.transition.log(c, self.dictionary.len())
    }

    /// `log P(word | prev, concept)`; `prev = None` is the begin marker.
    #[inline]
    pub fn log_bigram(&self, concept: usize, prev: Option<usize>, word: usize) -> f64 {
        let row = prev.unwrap_or(self.vocab.len());
        self.bigram[concept].log(row, word)
    }

    pub fn initial_prob(&self, c: usize) -> f64 {
        self.initial.p(0, c)
    }

    pub fn transition_prob(&self, from: usize, to: usize) -> f64 {
        self.transition.p(from, to)
    }

    pub fn final_prob(&self, c: usize) -> f64 {
        self.transition.p(c, self.dictionary.len())
    }

    pub fn bigram_prob(&self, concept: usize, prev: Option<usize>, word: usize) -> f64 {
        let row = prev.unwrap_or(self.vocab.len());
        self.bigram[concept].p(row, word)
    }

    /// Emission score of `word` at a position labeled `concept`, given the
    /// previous position's label and word (`None` at sentence start).
    /// Unresolvable words score `-inf`.
    #[inline]
    pub fn log_emission(
        &self,
        concept: usize,
        prev: Option<(usize, Option<usize>)>,
        word: Option<usize>,
    ) -> f64 {
        let Some(w) = word else {
            return f64::NEG_INFINITY;
        };
        match prev {
            Some((pc, pw)) if pc == concept => match pw {
                Some(pw) => self.log_bigram(concept, Some(pw), w),
                None => f64::NEG_INFINITY,
            },
            _ => self.log_bigram(concept, None, w),
        }
    }

    /// `log P(W, C)` under the first-order model. Impossible events yield
    /// `-inf`.
    ///
    /// The summation order (initial + emission, then `(score + transition) +
    /// emission` per position, then the final transition) is the order every
    /// decoder in this crate uses, so equal labelings produce equal bits.
    pub fn sequence_log_prob(&self, sentence: &SegmentedSentence) -> Result<f64> {
        let labels = sentence
            .labels
            .iter()
            .map(|l| self.dictionary.require(l))
            .collect::<Result<Vec<_>>>()?;
        let words: Vec<Option<usize>> = sentence.words.iter().map(|w| self.word_index(w)).collect();
        Ok(self.score_indices(&labels, &words))
    }

    pub(crate) fn score_indices(&self, labels: &[usize], words: &[Option<usize>]) -> f64 {
        let mut s = self.log_initial(labels[0]) + self.log_emission(labels[0], None, words[0]);
        for i in 1..labels.len() {
            s = s
                + self.log_transition(labels[i - 1], labels[i])
                + self.log_emission(labels[i], Some((labels[i - 1], words[i - 1])), words[i]);
        }
        s + self.log_final(labels[labels.len() - 1])
    }

    /// Every row of every table sums to one within [`NORMALIZATION_TOLERANCE`].
    pub fn check_normalization(&self) -> Result<()> {
        let check = |name: String, row: &[f64]| {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE || row.iter().any(|p| *p < 0.0) {
                Err(Error::Invalid(format!("{name} row sums to {sum}")))
            } else {
                Ok(())
            }
        };
        check("initial".into(), self.initial.row(0))?;
        for r in 0..self.transition.rows() {
            check(format!("transition {}", self.dictionary.name(r)), self.transition.row(r))?;
        }
        for (c, table) in self.bigram.iter().enumerate() {
            for r in 0..table.rows() {
                check(format!("bigram {} row {r}", self.dictionary.name(c)), table.row(r))?;
            }
        }
        Ok(())
    }

    /// Ties the bigram statistics of synonym groups: the context rows of the
    /// group members are replaced by their pooled counts shared equally, and
    /// in every row the group's columns share their summed count equally.
    /// Probabilities are then re-estimated with the model's `k`.
    pub fn apply_synonym_smoothing(&self, groups: &SynonymGroups) -> Result<ConceptHmm> {
        let mut counts = self.counts.clone().ok_or(Error::MissingCounts)?;
        let v = self.vocab.len();
        for (concept, concept_groups) in &groups.groups {
            let c = self.dictionary.require(concept)?;
            let mut seen = BTreeSet::new();
            let mut resolved = Vec::new();
            for group in concept_groups {
                let mut ids = Vec::new();
                for w in group {
                    let id = self.vocab.index_of(w).ok_or_else(|| Error::UnknownWord(w.clone()))?;
                    if !seen.insert(id) {
                        return Err(Error::Invalid(format!(
                            "`{w}` appears in two synonym groups of `{concept}`"
                        )));
                    }
                    ids.push(id);
                }
                resolved.push(ids);
            }
            let table = &mut counts.bigram[c];
            for ids in resolved.iter().filter(|ids| ids.len() > 1) {
                tie_rows(table, v, ids);
                for row in table.chunks_mut(v) {
                    share_equally(ids.to_vec().as_slice(), row);
                }
            }
        }
        Ok(Self::from_counts(
            self.dictionary.clone(),
            self.vocab.clone(),
            self.k,
            counts,
        ))
    }

    pub fn parameter_counts(&self) -> ParameterCounts {
        let n = self.dictionary.len();
        let v = self.vocab.len();
        let (transition_observed, bigram_observed) = match &self.counts {
            Some(c) => (
                c.initial.iter().chain(&c.transition).filter(|&&x| x > 0.0).count(),
                c.bigram.iter().flatten().filter(|&&x| x > 0.0).count(),
            ),
            // Without counts, an entry above its row's floor was observed.
            None => {
                let floor_free = |t: &Table| {
                    (0..t.rows())
                        .map(|r| {
                            let row = t.row(r);
                            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
                            row.iter().filter(|&&p| p > min).count()
                        })
                        .sum::<usize>()
                };
                (
                    floor_free(&self.initial) + floor_free(&self.transition),
                    self.bigram.iter().map(floor_free).sum(),
                )
            }
        };
        ParameterCounts {
            concepts: n,
            vocabulary: v,
            transition_rows: n + 1,
            transition_observed,
            bigram_rows: n * (v + 1),
            bigram_observed,
        }
    }

    /// Bitwise comparison of every probability table.
    pub fn tables_identical(&self, other: &ConceptHmm) -> bool {
        self.dictionary == other.dictionary
            && self.vocab == other.vocab
            && self.initial.bits_eq(&other.initial)
            && self.transition.bits_eq(&other.transition)
            && self.bigram.len() == other.bigram.len()
            && self.bigram.iter().zip(&other.bigram).all(|(a, b)| a.bits_eq(b))
    }

    pub fn to_text(&self) -> String {
        let n = self.dictionary.len();
        let v = self.vocab.len();
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_HEADER}");
        let _ = writeln!(s, "k\t{}", format_prob(self.k));
        s.push_str("[concepts]\n");
        s.push_str(&self.dictionary.to_text());
        s.push_str("[vocab]\n");
        for w in self.vocab.iter() {
            let _ = writeln!(s, "{w}");
        }
        let concept_name = |c: usize| -> &str {
            if c == n {
                FINAL
            } else {
                self.dictionary.name(c)
            }
        };
        s.push_str("[initial]\n");
        write_row(&mut s, BEGIN, self.initial.row(0), |c| self.dictionary.name(c));
        s.push_str("[transition]\n");
        for r in 0..n {
            write_row(&mut s, self.dictionary.name(r), self.transition.row(r), concept_name);
        }
        for (c, table) in self.bigram.iter().enumerate() {
            let _ = writeln!(s, "[bigram {}]", self.dictionary.name(c));
            for r in 0..=v {
                let row_name = if r == v { BEGIN } else { self.vocab.word(r) };
                write_row(&mut s, row_name, table.row(r), |w| self.vocab.word(w));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().peekable();
        match lines.next() {
            Some((_, l)) if l.trim() == MODEL_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected `{MODEL_HEADER}` header"))),
        }
        let k = match lines.next() {
            Some((i, l)) => match l.split('\t').collect::<Vec<_>>().as_slice() {
                ["k", value] => value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(i + 1, "bad smoothing constant"))?,
                _ => return Err(Error::parse(i + 1, "expected `k<TAB>value`")),
            },
            None => return Err(Error::parse(2, "truncated model")),
        };

        // Gather raw section bodies first; tables need the dictionary and vocabulary.
        let mut sections: Vec<(String, usize, Vec<(usize, &str)>)> = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            if let Some(h) = line.trim().strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
                sections.push((h.to_string(), i + 1, Vec::new()));
            } else {
                match sections.last_mut() {
                    Some(sec) => sec.2.push((i + 1, line)),
                    None => return Err(Error::parse(i + 1, "entry outside of any section")),
                }
            }
        }
        let find = |name: &str| sections.iter().find(|(h, _, _)| h == name);
        let (_, dline, dict_lines) = find("concepts").ok_or_else(|| Error::parse(0, "missing [concepts]"))?;
        let dict_text: String = dict_lines.iter().map(|(_, l)| format!("{l}\n")).collect();
        let dictionary = ConceptDictionary::parse(&dict_text).map_err(|e| match e {
            Error::Parse { line, msg } => Error::parse(dline + line, msg),
            other => other,
        })?;
        let (_, _, vocab_lines) = find("vocab").ok_or_else(|| Error::parse(0, "missing [vocab]"))?;
        let vocab = Vocabulary::new(vocab_lines.iter().map(|(_, l)| l.trim().to_string()))?;
        let n = dictionary.len();
        let v = vocab.len();

        let concept_col = |name: &str| -> Option<usize> {
            if name == FINAL {
                Some(n)
            } else {
                dictionary.index_of(name)
            }
        };
        let (_, _, init_lines) = find("initial").ok_or_else(|| Error::parse(0, "missing [initial]"))?;
        let initial = read_rows(init_lines, 1, n, |r| (r == BEGIN).then_some(0), |c| dictionary.index_of(c))?;
        let (_, _, trans_lines) = find("transition").ok_or_else(|| Error::parse(0, "missing [transition]"))?;
        let transition = read_rows(trans_lines, n, n + 1, |r| dictionary.index_of(r), concept_col)?;
        let mut bigram = Vec::with_capacity(n);
        for c in 0..n {
            let name = format!("bigram {}", dictionary.name(c));
            let (_, _, lines) = find(&name).ok_or_else(|| Error::parse(0, format!("missing [{name}]")))?;
            let table = read_rows(
                lines,
                v + 1,
                v,
                |r| if r == BEGIN { Some(v) } else { vocab.index_of(r) },
                |w| vocab.index_of(w),
            )?;
            bigram.push(Table::new(v, table));
        }
        let model = ConceptHmm {
            dictionary,
            vocab,
            k,
            initial: Table::new(n, initial),
            transition: Table::new(n + 1, transition),
            bigram,
            counts: None,
        };
        Ok(model)
    }
}

/// Within-group context rows replaced by the pooled counts split equally.
fn tie_rows(table: &mut [f64], v: usize, ids: &[usize]) {
    let first = &table[ids[0] * v..(ids[0] + 1) * v];
    let all_equal = ids
        .iter()
        .all(|&w| table[w * v..(w + 1) * v] == *first);
    if all_equal {
        return;
    }
    let mut pooled = vec![0.0; v];
    for &w in ids {
        for (p, x) in pooled.iter_mut().zip(&table[w * v..(w + 1) * v]) {
            *p += x;
        }
    }
    let share = ids.len() as f64;
    for &w in ids {
        for (dst, p) in table[w * v..(w + 1) * v].iter_mut().zip(&pooled) {
            *dst = p / share;
        }
    }
}

fn share_equally(ids: &[usize], row: &mut [f64]) {
    let first = row[ids[0]];
    if ids.iter().all(|&w| row[w] == first) {
        return;
    }
    let total: f64 = ids.iter().map(|&w| row[w]).sum();
    let each = total / ids.len() as f64;
    for &w in ids {
        row[w] = each;
    }
}

/// Writes one row as a `*` default line (the most frequent value) plus the
/// entries that differ from it.
fn write_row<'a>(s: &mut String, row_name: &str, row: &[f64], col_name: impl Fn(usize) -> &'a str) {
    let mut freq: BTreeMap<u64, usize> = BTreeMap::new();
    for p in row {
        *freq.entry(p.to_bits()).or_default() += 1;
    }
    let floor_bits = freq
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(b, _)| *b)
        .unwrap_or(0);
    let _ = writeln!(s, "{row_name}\t*\t{}", format_prob(f64::from_bits(floor_bits)));
    for (c, p) in row.iter().enumerate() {
        if p.to_bits() != floor_bits {
            let _ = writeln!(s, "{row_name}\t{}\t{}", col_name(c), format_prob(*p));
        }
    }
}

fn read_rows(
    lines: &[(usize, &str)],
    rows: usize,
    cols: usize,
    row_index: impl Fn(&str) -> Option<usize>,
    col_index: impl Fn(&str) -> Option<usize>,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; rows * cols];
    for &(lineno, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        let [row, col, value] = fields.as_slice() else {
            return Err(Error::parse(lineno, "expected ROW<TAB>COL<TAB>probability"));
        };
        let r = row_index(row).ok_or_else(|| Error::parse(lineno, format!("unknown row `{row}`")))?;
        let p: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad probability `{value}`")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::parse(lineno, format!("probability {p} out of range")));
        }
        if *col == "*" {
            out[r * cols..(r + 1) * cols].iter_mut().for_each(|x| *x = p);
        } else {
            let c = col_index(col).ok_or_else(|| Error::parse(lineno, format!("unknown column `{col}`")))?;
            out[r * cols + c] = p;
        }
    }
    Ok(out)
}
