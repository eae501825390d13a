//! Finite-state acceptors over surface words, plus the built-in normalizers
//! that turn an accepted word sequence into a canonical value string.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalizer {
    /// Word numerals to a decimal integer (`THIRTY SEVEN` -> `37`).
    Digits,
    /// Concatenation with single number words turned into digits
    /// (`D C TEN` -> `DC10`, `D F W` -> `DFW`).
    Join,
    /// Space-joined words, unchanged.
    Identity,
}

impl Normalizer {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "digits" => Some(Normalizer::Digits),
            "join" => Some(Normalizer::Join),
            "identity" => Some(Normalizer::Identity),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Normalizer::Digits => "digits",
            Normalizer::Join => "join",
            Normalizer::Identity => "identity",
        }
    }

    pub fn apply(self, words: &[String]) -> String {
        match self {
            Normalizer::Digits => match numeral_value(words) {
                Some(n) => n.to_string(),
                None => words.join(" "),
            },
            Normalizer::Join => words
                .iter()
                .map(|w| match small_number(w) {
                    Some(n) => n.to_string(),
                    None => w.clone(),
                })
                .collect(),
            Normalizer::Identity => words.join(" "),
        }
    }
}

fn small_number(word: &str) -> Option<u32> {
    let n = match word {
        "ZERO" | "OH" | "OW" => 0,
        "ONE" => 1,
        "TWO" => 2,
        "THREE" => 3,
        "FOUR" => 4,
        "FIVE" => 5,
        "SIX" => 6,
        "SEVEN" => 7,
        "EIGHT" => 8,
        "NINE" => 9,
        "TEN" => 10,
        "ELEVEN" => 11,
        "TWELVE" => 12,
        "THIRTEEN" => 13,
        "FOURTEEN" => 14,
        "FIFTEEN" => 15,
        "SIXTEEN" => 16,
        "SEVENTEEN" => 17,
        "EIGHTEEN" => 18,
        "NINETEEN" => 19,
        "TWENTY" => 20,
        "THIRTY" => 30,
        "FORTY" => 40,
        "FIFTY" => 50,
        "SIXTY" => 60,
        "SEVENTY" => 70,
        "EIGHTY" => 80,
        "NINETY" => 90,
        _ => return None,
    };
    Some(n)
}

/// Value of a standard English numeral. Structure is not validated here; the
/// grammar that accepted the words is responsible for that.
fn numeral_value(words: &[String]) -> Option<u32> {
    let mut total = 0;
    let mut current = 0;
    for w in words {
        match w.as_str() {
            "HUNDRED" => current = current.max(1) * 100,
            "THOUSAND" => {
                total += current.max(1) * 1000;
                current = 0;
            }
            other => current += small_number(other)?,
        }
    }
    Some(total + current)
}

/// A deterministic acceptor obtained from the (possibly nondeterministic)
/// transition list by subset construction.
#[derive(Debug, Clone)]
pub struct Dfa {
    transitions: Vec<BTreeMap<String, usize>>,
    accepting: Vec<bool>,
}

impl Dfa {
    const START: usize = 0;

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn accepts<S: AsRef<str>>(&self, words: &[S]) -> bool {
        let mut state = Self::START;
        for w in words {
            match self.transitions[state].get(w.as_ref()) {
                Some(&next) => state = next,
                None => return false,
            }
        }
        self.accepting[state]
    }

    /// End (exclusive) of the longest non-empty accepted span starting at `from`.
    pub fn longest_match<S: AsRef<str>>(&self, words: &[S], from: usize) -> Option<usize> {
        let mut state = Self::START;
        let mut best = None;
        for (i, w) in words.iter().enumerate().skip(from) {
            match self.transitions[state].get(w.as_ref()) {
                Some(&next) => state = next,
                None => break,
            }
            if self.accepting[state] {
                best = Some(i + 1);
            }
        }
        best
    }
}

/// Source form of a grammar as written in a lexicon file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrammarSource {
    pub start: Option<String>,
    pub transitions: Vec<(String, String, String)>,
    pub accept: Vec<String>,
    pub normalize: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FsaGrammar {
    pub id: String,
    pub dfa: Dfa,
    pub normalizer: Normalizer,
    source: GrammarSource,
}

impl FsaGrammar {
    /// Default start state name when the source does not declare one.
    pub const DEFAULT_START: &'static str = "0";

    pub fn compile(id: &str, source: GrammarSource) -> Result<Self> {
        let bad = |msg: String| Error::Lexicon(format!("grammar `{id}`: {msg}"));
        let normalizer = match source.normalize.as_deref() {
            None => Normalizer::Identity,
            Some(name) => {
                Normalizer::from_name(name).ok_or_else(|| bad(format!("unknown normalizer `{name}`")))?
            }
        };
        if source.transitions.is_empty() {
            return Err(bad("no transitions".into()));
        }
        if source.accept.is_empty() {
            return Err(bad("no accepting states".into()));
        }

        // State 0 is the start state.
        let start_name = source.start.as_deref().unwrap_or(Self::DEFAULT_START);
        let mut states: BTreeMap<&str, usize> = BTreeMap::from([(start_name, 0)]);
        let mut nfa: Vec<(usize, &str, usize)> = Vec::new();
        for (from, word, to) in &source.transitions {
            let n = states.len();
            let f = *states.entry(from.as_str()).or_insert(n);
            let n = states.len();
            let t = *states.entry(to.as_str()).or_insert(n);
            nfa.push((f, word.as_str(), t));
        }
        let mut accept = BTreeSet::new();
        for a in &source.accept {
            match states.get(a.as_str()) {
                Some(&i) => {
                    accept.insert(i);
                }
                None => return Err(bad(format!("accepting state `{a}` has no transitions"))),
            }
        }

        // Subset construction; there are no epsilon moves.
        let mut subsets: Vec<BTreeSet<usize>> = vec![BTreeSet::from([0])];
        let mut index: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::from([(subsets[0].clone(), 0)]);
        let mut transitions: Vec<BTreeMap<String, usize>> = Vec::new();
        let mut i = 0;
        while i < subsets.len() {
            let mut moves: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
            for &(f, w, t) in &nfa {
                if subsets[i].contains(&f) {
                    moves.entry(w).or_default().insert(t);
                }
            }
            let mut row = BTreeMap::new();
            for (w, target) in moves {
                let w = w.to_string();
                let id = match index.get(&target) {
                    Some(&id) => id,
                    None => {
                        subsets.push(target.clone());
                        index.insert(target, subsets.len() - 1);
                        subsets.len() - 1
                    }
                };
                row.insert(w, id);
            }
            transitions.push(row);
            i += 1;
        }
        let accepting = subsets
            .iter()
            .map(|s| s.iter().any(|q| accept.contains(q)))
            .collect();

        Ok(FsaGrammar {
            id: id.to_string(),
            dfa: Dfa {
                transitions,
                accepting,
            },
            normalizer,
            source,
        })
    }

    pub fn source(&self) -> &GrammarSource {
        &self.source
    }

    /// Every surface word that labels some transition.
    pub fn alphabet(&self) -> BTreeSet<&str> {
        self.source
            .transitions
            .iter()
            .map(|(_, w, _)| w.as_str())
            .collect()
    }

    pub fn normalize(&self, words: &[String]) -> String {
        self.normalizer.apply(words)
    }
}
