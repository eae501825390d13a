//! Synthetic corpora with known structure.
//!
//! * a five-concept, thirty-word concept HMM to sample labeled sentences from;
//! * flight-style sentences with city-name and numeral spans, lexed with the
//!   bundled city and number grammars;
//! * aligned corpora whose test entries carry a shuffled win template;
//! * small random (model, lattice) pairs for exhaustive-search checks.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::concept::ConceptDictionary;
use crate::corpus::{Corpus, CorpusEntry};
use crate::demo;
use crate::error::{Error, Result};
use crate::lexicon::{Lattice, LatticeArc, SuperwordLexicon};
use crate::model::{ConceptHmm, Vocabulary};
use crate::segment::SegmentedSentence;
use crate::superword::Superword;
use crate::template::{Template, TemplateToken};

/// Named restriction concepts of the synthetic HMM; `dummy` and `and` are
/// added by the dictionary.
pub const HMM_CONCEPTS: [&str; 3] = ["question", "origin", "destin"];
pub const HMM_VOCAB: usize = 30;
/// Longest sentence the sampler keeps.
pub const MAX_SAMPLE_LEN: usize = 24;

/// Probability mass spread evenly over every word in each bigram row.
const WORD_NOISE: f64 = 0.02;
const TRANSITION_NOISE: f64 = 0.02;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A generated data set in the same file layout the CLI reads.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub dictionary: ConceptDictionary,
    pub lexicon: SuperwordLexicon,
    pub train: Corpus,
    pub test: Corpus,
    /// The generating model, when there is one.
    pub model: Option<ConceptHmm>,
}

impl SyntheticCorpus {
    /// File name and contents of every artifact.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        let mut files = vec![
            ("dictionary.txt", self.dictionary.to_text()),
            ("lexicon.txt", self.lexicon.to_text()),
            ("train.txt", self.train.to_text()),
            ("test.txt", self.test.to_text()),
        ];
        if let Some(m) = &self.model {
            files.push(("true.model", m.to_text()));
        }
        files
    }
}

pub fn hmm_word(i: usize) -> String {
    format!("W{i:02}")
}

pub fn hmm_dictionary() -> Result<ConceptDictionary> {
    ConceptDictionary::flat(&HMM_CONCEPTS)
}

// Word layout of the synthetic HMM.
const QUESTION_START: [usize; 3] = [0, 1, 2];
const QUESTION_REST: [usize; 2] = [3, 4];
const ORIGIN_MARK: [usize; 2] = [5, 7];
const DESTIN_MARK: [usize; 2] = [6, 8];
const FILLER: usize = 9;
const CITY: std::ops::Range<usize> = 10..20;
const SUFFIX: std::ops::Range<usize> = 20..25;
const DUMMY_WORDS: [usize; 3] = [25, 26, 27];
const AND_WORDS: [usize; 2] = [28, 29];

/// Words a segment of `concept` may continue with after `prev` (or start
/// with, for `None`). Origin and destination share their city and suffix
/// words and differ only in their marker words.
fn support(concept: &str, prev: Option<usize>) -> Vec<usize> {
    let cities = || CITY.collect::<Vec<_>>();
    match concept {
        "question" => match prev {
            None => QUESTION_START.to_vec(),
            Some(0) => QUESTION_REST.to_vec(),
            Some(1) => vec![3],
            Some(2) => vec![4],
            Some(_) => vec![3, 4, FILLER],
        },
        "origin" | "destin" => {
            let marks = if concept == "origin" { ORIGIN_MARK } else { DESTIN_MARK };
            match prev {
                None => marks.to_vec(),
                Some(w) if marks.contains(&w) => cities(),
                Some(w) if CITY.contains(&w) => SUFFIX.collect(),
                Some(_) => cities(),
            }
        }
        "dummy" => match prev {
            None => DUMMY_WORDS.to_vec(),
            Some(_) => vec![25, 26, 27, FILLER],
        },
        _ => AND_WORDS.to_vec(),
    }
}

fn normalized(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Random weights on `support` mixed with a uniform share of `noise`.
fn noisy_row(rng: &mut impl Rng, size: usize, support: &[usize], noise: f64) -> Vec<f64> {
    let mut w = vec![0.0; size];
    for &i in support {
        w[i] = rng.gen_range(0.5..1.5);
    }
    normalized(&w)
        .into_iter()
        .map(|p| (1.0 - noise) * p + noise / size as f64)
        .collect()
}

/// The generating model for the synthetic-recovery corpus. The seed only
/// perturbs the weights; the sparsity pattern is fixed.
pub fn hmm_model(seed: u64) -> Result<ConceptHmm> {
    let mut rng = rng(seed);
    let dictionary = hmm_dictionary()?;
    let vocab = Vocabulary::new((0..HMM_VOCAB).map(hmm_word))?;
    let names: Vec<String> = dictionary.concepts().iter().map(|c| c.name.clone()).collect();
    let n = names.len();
    let idx = |name: &str| dictionary.index_of(name).expect("synthetic concept");

    let (q, o, d, dm, and) = (idx("question"), idx("origin"), idx("destin"), idx("dummy"), idx("and"));
    let mut initial = vec![0.0; n];
    initial[q] = 0.7;
    initial[o] = 0.1;
    initial[d] = 0.1;
    initial[dm] = 0.1;
    let initial: Vec<f64> = initial.iter().map(|p| (1.0 - TRANSITION_NOISE) * p + TRANSITION_NOISE / n as f64).collect();

    // Columns: concepts in dictionary order, then the final state.
    let mut weights = vec![vec![0.0; n + 1]; n];
    let fin = n;
    for (row, pairs) in [
        (q, vec![(q, 0.55), (o, 0.25), (d, 0.12), (dm, 0.05), (fin, 0.03)]),
        (o, vec![(q, 0.02), (o, 0.6), (d, 0.2), (dm, 0.04), (and, 0.08), (fin, 0.06)]),
        (d, vec![(q, 0.02), (o, 0.15), (d, 0.6), (dm, 0.05), (and, 0.08), (fin, 0.1)]),
        (dm, vec![(q, 0.3), (o, 0.25), (d, 0.25), (dm, 0.1), (fin, 0.1)]),
        (and, vec![(o, 0.4), (d, 0.4), (and, 0.15), (fin, 0.05)]),
    ] {
        for (col, p) in pairs {
            weights[row][col] = p * rng.gen_range(0.8..1.25);
        }
    }
    let transition: Vec<Vec<f64>> = weights
        .iter()
        .map(|r| {
            normalized(r)
                .into_iter()
                .map(|p| (1.0 - TRANSITION_NOISE) * p + TRANSITION_NOISE / (n + 1) as f64)
                .collect()
        })
        .collect();

    let bigram = names
        .iter()
        .map(|c| {
            let mut rows: Vec<Vec<f64>> = (0..HMM_VOCAB)
                .map(|prev| noisy_row(&mut rng, HMM_VOCAB, &support(c, Some(prev)), WORD_NOISE))
                .collect();
            rows.push(noisy_row(&mut rng, HMM_VOCAB, &support(c, None), WORD_NOISE));
            rows
        })
        .collect();
    ConceptHmm::from_probabilities(dictionary, vocab, initial, transition, bigram)
}

/// Draws one labeled word sequence from `model`.
pub fn sample_sentence(model: &ConceptHmm, rng: &mut impl Rng) -> Result<SegmentedSentence> {
    let n = model.num_concepts();
    let v = model.vocabulary().len();
    let pick = |rng: &mut dyn RngCore, weights: Vec<f64>| -> Result<usize> {
        let dist = WeightedIndex::new(weights).map_err(|e| Error::Invalid(format!("cannot sample: {e}")))?;
        Ok(dist.sample(rng))
    };
    loop {
        let mut labels = Vec::new();
        let mut words = Vec::new();
        let mut c = pick(rng, (0..n).map(|c| model.initial_prob(c)).collect())?;
        let mut w = pick(rng, (0..v).map(|w| model.bigram_prob(c, None, w)).collect())?;
        labels.push(c);
        words.push(w);
        loop {
            let mut row: Vec<f64> = (0..n).map(|to| model.transition_prob(c, to)).collect();
            row.push(model.final_prob(c));
            let next = pick(rng, row)?;
            if next == n || words.len() > MAX_SAMPLE_LEN {
                break;
            }
            let prev = (next == c).then_some(w);
            w = pick(rng, (0..v).map(|x| model.bigram_prob(next, prev, x)).collect())?;
            c = next;
            labels.push(c);
            words.push(w);
        }
        if words.len() > MAX_SAMPLE_LEN {
            continue;
        }
        let d = model.dictionary();
        return SegmentedSentence::new(
            words.iter().map(|&w| Superword::word(model.vocabulary().word(w))).collect(),
            labels.iter().map(|&c| d.name(c).to_string()).collect(),
        );
    }
}

fn entry(id: String, words: &[String], labels: &[String]) -> CorpusEntry {
    CorpusEntry {
        id,
        text: words.join(" "),
        gold: Some(words.iter().cloned().zip(labels.iter().cloned()).collect()),
        ..CorpusEntry::default()
    }
}

fn segmented_entry(id: String, s: &SegmentedSentence) -> CorpusEntry {
    let words: Vec<String> = s.words.iter().map(|w| w.id.clone()).collect();
    entry(id, &words, &s.labels)
}

/// Sentences sampled from [`hmm_model`].
pub fn hmm_corpus(seed: u64, n_train: usize, n_test: usize) -> Result<SyntheticCorpus> {
    let model = hmm_model(seed)?;
    let mut rng = rng(seed.wrapping_add(1));
    let mut draw = |prefix: &str, count: usize| -> Result<Corpus> {
        let entries = (0..count)
            .map(|i| Ok(segmented_entry(format!("{prefix}{:04}", i + 1), &sample_sentence(&model, &mut rng)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus { entries })
    };
    let train = draw("tr", n_train)?;
    let test = draw("te", n_test)?;
    Ok(SyntheticCorpus {
        dictionary: model.dictionary().clone(),
        lexicon: SuperwordLexicon::new((0..HMM_VOCAB).map(hmm_word), [], vec![], [])?,
        train,
        test,
        model: Some(model),
    })
}

/// Like [`hmm_corpus`], with a win template on every test entry: one token
/// per non-special gold segment, keyed by concept and valued by the
/// segment's last word, in shuffled order.
pub fn align_corpus(seed: u64, n_train: usize, n_test: usize) -> Result<SyntheticCorpus> {
    let mut corpus = hmm_corpus(seed, n_train, n_test)?;
    let mut rng = rng(seed.wrapping_add(2));
    for e in &mut corpus.test.entries {
        let gold = e.gold.as_ref().expect("generated entries carry gold");
        let words: Vec<Superword> = gold.iter().map(|(w, _)| Superword::word(w.clone())).collect();
        let labels: Vec<String> = gold.iter().map(|(_, c)| c.clone()).collect();
        let seg = SegmentedSentence::new(words, labels)?;
        let mut tokens: Vec<TemplateToken> = seg
            .segments()
            .iter()
            .filter(|s| !corpus.dictionary.is_special(s.concept))
            .map(|s| TemplateToken::new(s.concept, s.words.last().expect("segments are non-empty").id.clone()))
            .collect();
        tokens.shuffle(&mut rng);
        e.win = Some(Template { tokens, unmatched: 0 }.to_string());
    }
    Ok(corpus)
}

/// Restriction concepts of the superword corpus.
pub const SUPERWORD_CONCEPTS: [&str; 5] = ["question", "subject", "origin", "destin", "number"];

const CITIES: [&str; 11] = [
    "BOSTON",
    "DALLAS",
    "ATLANTA",
    "DENVER",
    "PHILADELPHIA",
    "PITTSBURGH",
    "BALTIMORE",
    "SAN FRANCISCO",
    "NEW YORK",
    "WASHINGTON",
    "WASHINGTON D C",
];
const UNITS: [&str; 9] = ["ONE", "TWO", "THREE", "FOUR", "FIVE", "SIX", "SEVEN", "EIGHT", "NINE"];
const TEENS: [&str; 10] = [
    "TEN",
    "ELEVEN",
    "TWELVE",
    "THIRTEEN",
    "FOURTEEN",
    "FIFTEEN",
    "SIXTEEN",
    "SEVENTEEN",
    "EIGHTEEN",
    "NINETEEN",
];
const TENS: [&str; 8] = ["TWENTY", "THIRTY", "FORTY", "FIFTY", "SIXTY", "SEVENTY", "EIGHTY", "NINETY"];

/// Spoken form of 1..=999 as the number grammar accepts it.
pub fn spell_number(n: u32) -> String {
    assert!((1..1000).contains(&n), "only 1..=999 is spelled");
    let mut parts = Vec::new();
    let (h, rest) = (n / 100, n % 100);
    if h > 0 {
        parts.push(UNITS[h as usize - 1].to_string());
        parts.push("HUNDRED".to_string());
    }
    match rest {
        0 => {}
        1..=9 => parts.push(UNITS[rest as usize - 1].to_string()),
        10..=19 => parts.push(TEENS[rest as usize - 10].to_string()),
        _ => {
            parts.push(TENS[rest as usize / 10 - 2].to_string());
            if rest % 10 > 0 {
                parts.push(UNITS[rest as usize % 10 - 1].to_string());
            }
        }
    }
    parts.join(" ")
}

fn phrase(rng: &mut impl Rng, options: &[&str]) -> Vec<String> {
    options
        .choose(rng)
        .expect("non-empty options")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn flight_sentence(rng: &mut impl Rng) -> (Vec<String>, Vec<String>) {
    let mut segs: Vec<(&str, Vec<String>)> = Vec::new();
    if rng.gen_bool(0.1) {
        segs.push(("dummy", phrase(rng, &["WELL", "OK", "HELLO"])));
    }
    segs.push(("question", phrase(rng, &["SHOW ME", "LIST", "WHAT ARE", "I NEED", "GIVE ME"])));
    segs.push(("subject", phrase(rng, &["FLIGHTS", "ALL FLIGHTS", "FLIGHT"])));
    let city = |rng: &mut dyn RngCore| CITIES.choose(rng).expect("cities").to_string();
    let mut restrictions: Vec<(&str, Vec<String>)> = Vec::new();
    if rng.gen_bool(0.85) {
        let mut w = phrase(rng, &["FROM", "LEAVING", "LEAVING FROM", "OUT OF"]);
        w.extend(city(rng).split(' ').map(str::to_string));
        restrictions.push(("origin", w));
    }
    if rng.gen_bool(0.85) {
        let mut w = phrase(rng, &["TO", "ARRIVING IN", "GOING TO", "INTO"]);
        w.extend(city(rng).split(' ').map(str::to_string));
        restrictions.push(("destin", w));
    }
    if rng.gen_bool(0.4) {
        let mut w = phrase(rng, &["NUMBER", "FLIGHT NUMBER"]);
        w.extend(spell_number(rng.gen_range(1..1000)).split(' ').map(str::to_string));
        restrictions.push(("number", w));
    }
    restrictions.shuffle(rng);
    for (i, r) in restrictions.into_iter().enumerate() {
        if i > 0 && rng.gen_bool(0.15) {
            segs.push(("and", vec!["AND".to_string()]));
        }
        segs.push(r);
    }
    if rng.gen_bool(0.15) {
        segs.push(("dummy", phrase(rng, &["PLEASE", "THANK YOU"])));
    }
    let mut words = Vec::new();
    let mut labels = Vec::new();
    for (c, ws) in segs {
        labels.extend(std::iter::repeat_n(c.to_string(), ws.len()));
        words.extend(ws);
    }
    (words, labels)
}

/// Flight requests whose city names and flight numbers span several words.
/// The lexicon carries the bundled `city` and `number` grammars; see
/// [`without_grammars`] for the plain-word counterpart.
pub fn superword_corpus(seed: u64, n_train: usize, n_test: usize) -> Result<SyntheticCorpus> {
    let mut rng = rng(seed);
    let mut all_words = std::collections::BTreeSet::new();
    let mut draw = |prefix: &str, count: usize| {
        let entries = (0..count)
            .map(|i| {
                let (w, l) = flight_sentence(&mut rng);
                all_words.extend(w.iter().cloned());
                entry(format!("{prefix}{:04}", i + 1), &w, &l)
            })
            .collect();
        Corpus { entries }
    };
    let train = draw("tr", n_train);
    let test = draw("te", n_test);

    let demo_lexicon = SuperwordLexicon::parse(demo::LEXICON)?;
    let grammars: Vec<_> = demo_lexicon
        .grammars()
        .iter()
        .filter(|g| g.id == "city" || g.id == "number")
        .cloned()
        .collect();
    let covered: std::collections::BTreeSet<&str> = grammars.iter().flat_map(|g| g.alphabet()).collect();
    let plain: Vec<String> = all_words.iter().filter(|w| !covered.contains(w.as_str())).cloned().collect();
    Ok(SyntheticCorpus {
        dictionary: ConceptDictionary::flat(&SUPERWORD_CONCEPTS)?,
        lexicon: SuperwordLexicon::new(plain, [], grammars, [])?,
        train,
        test,
        model: None,
    })
}

/// The same lexicon with every grammar dissolved into plain words.
pub fn without_grammars(lexicon: &SuperwordLexicon) -> Result<SuperwordLexicon> {
    let mut words = lexicon.plain_words().clone();
    for g in lexicon.grammars() {
        words.extend(g.alphabet().into_iter().map(str::to_string));
    }
    SuperwordLexicon::new(
        words,
        lexicon.inflections().clone(),
        vec![],
        lexicon.stop_words().iter().cloned(),
    )
}

/// A random distribution over `size` outcomes. Some entries are zero, and
/// `coarse` rows use small integer weights so that exact ties are common.
fn random_row(rng: &mut impl Rng, size: usize, coarse: bool) -> Vec<f64> {
    let mut w: Vec<f64> = (0..size)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else if coarse {
                f64::from(rng.gen_range(1..=2u8))
            } else {
                rng.gen_range(0.01..1.0)
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..size)] = 1.0;
    }
    normalized(&w)
}

/// A random model over at most `max_concepts` concepts (at least the two
/// special ones) and `max_vocab` words, with a lattice of at most
/// `max_len` positions drawn over the same vocabulary.
pub fn random_instance(
    rng: &mut impl Rng,
    max_concepts: usize,
    max_vocab: usize,
    max_len: usize,
) -> Result<(ConceptHmm, Lattice)> {
    if max_concepts < 2 || max_vocab == 0 || max_len == 0 {
        return Err(Error::Invalid("random instances need two concepts, a word and a position".into()));
    }
    let named = rng.gen_range(0..=max_concepts - 2);
    let names: Vec<String> = (0..named).map(|i| format!("c{i}")).collect();
    let dictionary = ConceptDictionary::flat(&names)?;
    let n = dictionary.len();
    let v = rng.gen_range(1..=max_vocab);
    let vocab = Vocabulary::new((0..v).map(|i| format!("V{i}")))?;
    let coarse = rng.gen_bool(0.5);
    let initial = random_row(rng, n, coarse);
    let transition = (0..n).map(|_| random_row(rng, n + 1, coarse)).collect();
    let bigram = (0..n)
        .map(|_| (0..=v).map(|_| random_row(rng, v, coarse)).collect())
        .collect();
    let model = ConceptHmm::from_probabilities(dictionary, vocab, initial, transition, bigram)?;

    let len = rng.gen_range(1..=max_len);
    let word = |rng: &mut dyn RngCore| Superword::word(format!("V{}", rng.gen_range(0..v)));
    let mut arcs: Vec<LatticeArc> = (0..len).map(|i| LatticeArc::new(i, i + 1, word(rng))).collect();
    for start in 0..len {
        for end in start + 1..=len {
            if rng.gen_bool(0.25) {
                let arc = LatticeArc::new(start, end, word(rng));
                if !arcs.contains(&arc) {
                    arcs.push(arc);
                }
            }
        }
    }
    let tokens = (0..len).map(|i| format!("t{i}")).collect();
    Ok((model, Lattice::new(tokens, arcs)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spelled_numbers_are_accepted() {
        let lex = SuperwordLexicon::parse(demo::LEXICON).unwrap();
        let number = lex.grammars().iter().find(|g| g.id == "number").unwrap();
        for n in [1, 9, 10, 19, 20, 21, 99, 100, 101, 110, 342, 999] {
            let words: Vec<String> = spell_number(n).split(' ').map(str::to_string).collect();
            assert_eq!(number.normalize(&words), n.to_string(), "{n}");
        }
    }

    #[test]
    fn cities_are_single_superwords() {
        let c = superword_corpus(7, 20, 0).unwrap();
        for city in CITIES {
            let lattice = c.lexicon.lex_parse(city).unwrap();
            let whole = lattice.arcs().iter().any(|a| a.start == 0 && a.end == lattice.len());
            assert!(whole, "{city}");
        }
    }

    #[test]
    fn samples_respect_the_support() {
        let m = hmm_model(3).unwrap();
        let mut r = rng(4);
        for _ in 0..50 {
            let s = sample_sentence(&m, &mut r).unwrap();
            assert!(!s.is_empty() && s.len() <= MAX_SAMPLE_LEN);
        }
        assert_eq!(m.num_concepts(), 5);
        assert_eq!(m.vocabulary().len(), HMM_VOCAB);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = align_corpus(11, 5, 5).unwrap();
        let b = align_corpus(11, 5, 5).unwrap();
        assert_eq!(a.files(), b.files());
        assert!(a.test.entries.iter().all(|e| e.win.is_some()));
    }

    #[test]
    fn random_instances_stay_in_bounds() {
        let mut r = rng(5);
        for _ in 0..100 {
            let (m, l) = random_instance(&mut r, 5, 8, 6).unwrap();
            assert!(m.num_concepts() <= 5 && m.vocabulary().len() <= 8 && l.len() <= 6);
        }
    }
}
