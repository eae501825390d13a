//! Lexical parsing: raw sentence to a lattice of superwords.
//!
//! A sentence is tokenized, articles are deleted, each remaining token gets a
//! plain-word, inflection-group or unknown-marker arc, and every maximal match
//! of every grammar is added as a parallel arc carrying its normalized value.

pub mod fsa;
pub mod lattice;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::superword::{grammar_id, Superword, UNKNOWN};

pub use fsa::{Dfa, FsaGrammar, GrammarSource, Normalizer};
pub use lattice::{Lattice, LatticeArc};

#[derive(Debug, Clone, Default)]
pub struct SuperwordLexicon {
    words: BTreeSet<String>,
    inflections: BTreeMap<String, String>,
    grammars: Vec<FsaGrammar>,
    stop: BTreeSet<String>,
}

/// Splits on whitespace, uppercases, and drops punctuation other than
/// apostrophes. Tokens that end up empty are discarded.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .split_whitespace()
        .map(|t| {
            t.chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .flat_map(char::to_uppercase)
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

impl SuperwordLexicon {
    pub fn new(
        words: impl IntoIterator<Item = String>,
        inflections: impl IntoIterator<Item = (String, String)>,
        grammars: Vec<FsaGrammar>,
        stop: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let mut infl = BTreeMap::new();
        for (surface, group) in inflections {
            if let Some(prev) = infl.insert(surface.clone(), group.clone()) {
                if prev != group {
                    return Err(Error::Lexicon(format!(
                        "`{surface}` belongs to two inflection groups ({prev}, {group})"
                    )));
                }
            }
        }
        let lex = SuperwordLexicon {
            words: words.into_iter().collect(),
            inflections: infl,
            grammars,
            stop: stop.into_iter().collect(),
        };
        lex.validate()?;
        Ok(lex)
    }

    fn validate(&self) -> Result<()> {
        let unk_used = self.words.contains(UNKNOWN)
            || self.inflections.contains_key(UNKNOWN)
            || self.stop.contains(UNKNOWN)
            || self.grammars.iter().any(|g| g.alphabet().contains(UNKNOWN));
        if unk_used {
            return Err(Error::Lexicon(format!("`{UNKNOWN}` is reserved")));
        }
        let mut ids = BTreeSet::new();
        for g in &self.grammars {
            if !ids.insert(g.id.as_str()) {
                return Err(Error::Lexicon(format!("grammar `{}` defined twice", g.id)));
            }
            if let Some(w) = g.alphabet().into_iter().find(|w| self.stop.contains(*w)) {
                return Err(Error::Lexicon(format!(
                    "stop word `{w}` used in grammar `{}`",
                    g.id
                )));
            }
        }
        Ok(())
    }

    pub fn plain_words(&self) -> &BTreeSet<String> {
        &self.words
    }

    pub fn inflections(&self) -> &BTreeMap<String, String> {
        &self.inflections
    }

    pub fn grammars(&self) -> &[FsaGrammar] {
        &self.grammars
    }

    pub fn stop_words(&self) -> &BTreeSet<String> {
        &self.stop
    }

    /// Every superword id the lexer can emit, including the unknown marker.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut v: BTreeSet<String> = self.words.iter().cloned().collect();
        v.extend(self.inflections.values().cloned());
        v.extend(self.grammars.iter().map(|g| grammar_id(&g.id)));
        v.insert(UNKNOWN.to_string());
        v
    }

    /// Tokens that survive stop-word deletion.
    pub fn content_tokens(&self, sentence: &str) -> Result<Vec<String>> {
        let tokens = tokenize(sentence);
        if tokens.is_empty() {
            return Err(Error::EmptySentence);
        }
        let kept: Vec<String> = tokens.into_iter().filter(|t| !self.stop.contains(t)).collect();
        if kept.is_empty() {
            return Err(Error::EmptyAfterDeletion);
        }
        Ok(kept)
    }

    /// Superword arcs for one token, ignoring grammars.
    fn word_arcs(&self, pos: usize, token: &str, out: &mut Vec<LatticeArc>) {
        let before = out.len();
        if let Some(group) = self.inflections.get(token) {
            out.push(LatticeArc::new(pos, pos + 1, Superword::word(group.clone())));
        }
        if self.words.contains(token) {
            out.push(LatticeArc::new(pos, pos + 1, Superword::word(token)));
        }
        if out.len() == before {
            out.push(LatticeArc::new(pos, pos + 1, Superword::word(UNKNOWN)));
        }
    }

    pub fn lex_parse(&self, sentence: &str) -> Result<Lattice> {
        let tokens = self.content_tokens(sentence)?;
        self.lex_tokens(tokens)
    }

    /// Lattice over already tokenized, stop-word-free input.
    pub fn lex_tokens(&self, tokens: Vec<String>) -> Result<Lattice> {
        let mut arcs = Vec::new();
        for (i, t) in tokens.iter().enumerate() {
            self.word_arcs(i, t, &mut arcs);
        }
        for g in &self.grammars {
            let spans: Vec<(usize, usize)> = (0..tokens.len())
                .filter_map(|i| g.dfa.longest_match(&tokens, i).map(|end| (i, end)))
                .collect();
            for &(s, e) in &spans {
                let contained = spans
                    .iter()
                    .any(|&(s2, e2)| (s2, e2) != (s, e) && s2 <= s && e <= e2);
                if !contained {
                    let value = g.normalize(&tokens[s..e]);
                    arcs.push(LatticeArc::new(s, e, Superword::grammar(&g.id, value)));
                }
            }
        }
        Lattice::new(tokens, arcs)
    }

    pub fn parse(text: &str) -> Result<Self> {
        enum Section {
            None,
            Words,
            Inflect,
            Stop,
            Grammar,
        }
        let mut section = Section::None;
        let mut words = Vec::new();
        let mut inflect = Vec::new();
        let mut stop = Vec::new();
        let mut sources: Vec<(String, GrammarSource)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = strip_comment(raw);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(header) = line.trim().strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let mut parts = header.split_whitespace();
                section = match (parts.next(), parts.next(), parts.next()) {
                    (Some("words"), None, _) => Section::Words,
                    (Some("inflect"), None, _) => Section::Inflect,
                    (Some("stop"), None, _) => Section::Stop,
                    (Some("grammar"), Some(id), None) => {
                        if sources.iter().any(|(g, _)| g == id) {
                            return Err(Error::parse(lineno, format!("grammar `{id}` defined twice")));
                        }
                        sources.push((id.to_string(), GrammarSource::default()));
                        Section::Grammar
                    }
                    _ => return Err(Error::parse(lineno, format!("unknown section `[{header}]`"))),
                };
                continue;
            }
            match &section {
                Section::None => return Err(Error::parse(lineno, "entry outside of any section")),
                Section::Words => words.extend(line.split_whitespace().map(str::to_string)),
                Section::Stop => stop.extend(line.split_whitespace().map(str::to_string)),
                Section::Inflect => {
                    let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
                    match fields.as_slice() {
                        [surface, group] if !surface.is_empty() && !group.is_empty() => {
                            inflect.push((surface.to_string(), group.to_string()))
                        }
                        _ => return Err(Error::parse(lineno, "expected SURFACE<TAB>SUPERWORD")),
                    }
                }
                Section::Grammar => {
                    let src = &mut sources.last_mut().expect("grammar section open").1;
                    let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
                    match fields.as_slice() {
                        ["accept", state] => src.accept.push(state.to_string()),
                        ["start", state] => src.start = Some(state.to_string()),
                        ["normalize", rule] => {
                            if Normalizer::from_name(rule).is_none() {
                                return Err(Error::parse(lineno, format!("unknown normalizer `{rule}`")));
                            }
                            src.normalize = Some(rule.to_string());
                        }
                        [from, word, to] => src
                            .transitions
                            .push((from.to_string(), word.to_string(), to.to_string())),
                        _ => return Err(Error::parse(lineno, "expected state<TAB>word<TAB>state")),
                    }
                }
            }
        }

        let grammars = sources
            .into_iter()
            .map(|(id, src)| FsaGrammar::compile(&id, src))
            .collect::<Result<Vec<_>>>()?;
        SuperwordLexicon::new(words, inflect, grammars, stop)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("[words]\n");
        for w in &self.words {
            let _ = writeln!(s, "{w}");
        }
        s.push_str("[inflect]\n");
        for (surface, group) in &self.inflections {
            let _ = writeln!(s, "{surface}\t{group}");
        }
        s.push_str("[stop]\n");
        for w in &self.stop {
            let _ = writeln!(s, "{w}");
        }
        for g in &self.grammars {
            let src = g.source();
            let _ = writeln!(s, "[grammar {}]", g.id);
            if let Some(start) = &src.start {
                let _ = writeln!(s, "start\t{start}");
            }
            for (f, w, t) in &src.transitions {
                let _ = writeln!(s, "{f}\t{w}\t{t}");
            }
            for a in &src.accept {
                let _ = writeln!(s, "accept\t{a}");
            }
            let _ = writeln!(s, "normalize\t{}", g.normalizer.name());
        }
        s
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}
