//! Block-structured sentence corpora.
//!
//! Records are separated by blank lines. Each line is a tab-separated field:
//!
//! ```text
//! id      s01
//! text    SHOW ME THE FLIGHTS TO BOSTON
//! gold    SHOW:question   ME:question   THE:question   FLIGHTS:subject   TO:destin   BOSTON:destin
//! win     (question,display) (subject,flight) (destin,BBOS)
//! after   s00
//! min:    rows
//! AA      101
//! max:    rows
//! AA      101     480     720
//! ```
//!
//! `gold` labels surface tokens; stop words may be labeled or left out. A
//! `min:`/`max:` line opens a reference answer whose payload runs until the
//! next field line.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lexicon::{tokenize, Lattice, SuperwordLexicon};
use crate::query::{Answer, AnswerKind, Value};
use crate::segment::SegmentedSentence;
use crate::superword::{grammar_name, Superword, UNKNOWN};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusEntry {
    pub id: String,
    pub text: String,
    pub gold: Option<Vec<(String, String)>>,
    pub win: Option<String>,
    /// Id of the entry whose dialog context this entry continues.
    pub after: Option<String>,
    pub minimal: Option<Answer>,
    pub maximal: Option<Answer>,
}

impl CorpusEntry {
    pub fn has_references(&self) -> bool {
        self.minimal.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
}

const FIELDS: [&str; 5] = ["id", "text", "gold", "win", "after"];

impl Corpus {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut block: Vec<(usize, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim_end();
            if trimmed.trim().is_empty() {
                if !block.is_empty() {
                    entries.push(parse_entry(&block)?);
                    block.clear();
                }
            } else if !trimmed.trim_start().starts_with('#') {
                block.push((i + 1, trimmed));
            }
        }
        if !block.is_empty() {
            entries.push(parse_entry(&block)?);
        }
        let mut ids = BTreeSet::new();
        for e in &entries {
            if !ids.insert(e.id.as_str()) {
                return Err(Error::Invalid(format!("duplicate corpus id `{}`", e.id)));
            }
        }
        for e in &entries {
            if let Some(a) = &e.after {
                if !ids.contains(a.as_str()) {
                    return Err(Error::Invalid(format!("`{}` continues unknown entry `{a}`", e.id)));
                }
            }
        }
        Ok(Corpus { entries })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            let _ = writeln!(s, "id\t{}", e.id);
            let _ = writeln!(s, "text\t{}", e.text);
            if let Some(g) = &e.gold {
                let pairs: Vec<String> = g.iter().map(|(w, c)| format!("{w}:{c}")).collect();
                let _ = writeln!(s, "gold\t{}", pairs.join("\t"));
            }
            if let Some(w) = &e.win {
                let _ = writeln!(s, "win\t{w}");
            }
            if let Some(a) = &e.after {
                let _ = writeln!(s, "after\t{a}");
            }
            for (tag, ans) in [("min:", &e.minimal), ("max:", &e.maximal)] {
                if let Some(ans) = ans {
                    let _ = writeln!(s, "{tag}\t{}", ans.kind().as_str());
                    if !matches!(ans, Answer::Rows(r) if r.is_empty()) {
                        s.push_str(&ans.render());
                    }
                }
            }
        }
        s
    }

    pub fn get(&self, id: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

fn parse_entry(block: &[(usize, &str)]) -> Result<CorpusEntry> {
    let first_line = block[0].0;
    let mut e = CorpusEntry::default();
    let mut i = 0;
    while i < block.len() {
        let (lineno, line) = block[i];
        let (tag, rest) = line.split_once('\t').unwrap_or((line, ""));
        let rest = rest.trim();
        i += 1;
        match tag {
            "id" => e.id = rest.to_string(),
            "text" => e.text = rest.to_string(),
            "win" => e.win = Some(rest.to_string()),
            "after" => e.after = Some(rest.to_string()),
            "gold" => {
                let mut pairs = Vec::new();
                for f in rest.split('\t').map(str::trim).filter(|f| !f.is_empty()) {
                    let (w, c) = f
                        .rsplit_once(':')
                        .filter(|(w, c)| !w.is_empty() && !c.is_empty())
                        .ok_or_else(|| Error::parse(lineno, format!("expected WORD:concept, got `{f}`")))?;
                    pairs.push((w.to_uppercase(), c.to_string()));
                }
                if pairs.is_empty() {
                    return Err(Error::parse(lineno, "empty gold labeling"));
                }
                e.gold = Some(pairs);
            }
            "min:" | "max:" => {
                let kind = AnswerKind::parse(rest)
                    .ok_or_else(|| Error::parse(lineno, format!("unknown answer kind `{rest}`")))?;
                let start = i;
                while i < block.len() {
                    let tag = block[i].1.split('\t').next().unwrap_or("");
                    if FIELDS.contains(&tag) || tag == "min:" || tag == "max:" {
                        break;
                    }
                    i += 1;
                }
                let lines: Vec<&str> = block[start..i].iter().map(|(_, l)| *l).collect();
                let ans = Answer::parse(kind, &lines).map_err(|err| Error::parse(lineno, err.to_string()))?;
                if tag == "min:" {
                    e.minimal = Some(ans);
                } else {
                    e.maximal = Some(ans);
                }
            }
            _ => return Err(Error::parse(lineno, format!("unknown field `{tag}`"))),
        }
    }
    if e.id.is_empty() || e.text.is_empty() {
        return Err(Error::parse(first_line, "record needs `id` and `text`"));
    }
    match (&e.minimal, &e.maximal) {
        (Some(_), None) | (None, Some(_)) => {
            return Err(Error::parse(first_line, format!("`{}`: min and max come together", e.id)))
        }
        (Some(a), Some(b)) if a.kind() != b.kind() => {
            return Err(Error::parse(first_line, format!("`{}`: min and max differ in kind", e.id)))
        }
        _ => {}
    }
    if e.gold.is_none() && e.minimal.is_none() && e.win.is_none() {
        return Err(Error::parse(first_line, format!("`{}` has nothing to learn from", e.id)));
    }
    Ok(e)
}

/// Per content token concept labels, after checking that the gold words line
/// up with the tokens the lexicon keeps.
pub fn gold_token_labels(entry: &CorpusEntry, lexicon: &SuperwordLexicon) -> Result<Option<Vec<String>>> {
    let Some(gold) = &entry.gold else {
        return Ok(None);
    };
    let tokens = lexicon.content_tokens(&entry.text)?;
    let kept: Vec<&(String, String)> = gold.iter().filter(|(w, _)| !lexicon.stop_words().contains(w)).collect();
    let words: Vec<&str> = kept.iter().map(|(w, _)| w.as_str()).collect();
    let toks: Vec<&str> = tokens.iter().map(String::as_str).collect();
    if words != toks {
        return Err(Error::Segmentation(format!(
            "`{}`: gold words {:?} do not match tokens {:?}",
            entry.id, words, toks
        )));
    }
    Ok(Some(kept.iter().map(|(_, c)| c.clone()).collect()))
}

fn arc_rank(w: &Superword, token: &str, lexicon: &SuperwordLexicon) -> u8 {
    if grammar_name(&w.id).is_some() {
        0
    } else if lexicon.inflections().get(token) == Some(&w.id) {
        1
    } else if w.id != UNKNOWN {
        2
    } else {
        3
    }
}

/// The superword reading of a gold labeling: from each position take the
/// longest arc whose tokens all carry one label, preferring grammar matches,
/// then inflection groups, then plain words, then the unknown marker.
pub fn gold_path(lattice: &Lattice, labels: &[String], lexicon: &SuperwordLexicon) -> Result<(SegmentedSentence, Vec<(usize, usize)>)> {
    if labels.len() != lattice.len() {
        return Err(Error::Segmentation(format!(
            "{} labels for {} tokens",
            labels.len(),
            lattice.len()
        )));
    }
    let arcs = lattice.arcs();
    let mut pos = 0;
    let mut words = Vec::new();
    let mut out_labels = Vec::new();
    let mut spans = Vec::new();
    while pos < lattice.len() {
        let best = lattice
            .outgoing(pos)
            .iter()
            .map(|&a| &arcs[a])
            .filter(|a| labels[a.start..a.end].iter().all(|l| *l == labels[a.start]))
            .min_by_key(|a| {
                (
                    std::cmp::Reverse(a.end),
                    arc_rank(&a.superword, &lattice.tokens()[a.start], lexicon),
                    a.superword.id.clone(),
                )
            })
            .ok_or_else(|| Error::Segmentation(format!("no arc leaves position {pos}")))?;
        words.push(best.superword.clone());
        out_labels.push(labels[pos].clone());
        spans.push((best.start, best.end));
        pos = best.end;
    }
    Ok((SegmentedSentence::new(words, out_labels)?, spans))
}

/// Gold segmentation of an entry over the lexicon's superwords.
pub fn gold_segmentation(entry: &CorpusEntry, lexicon: &SuperwordLexicon) -> Result<Option<SegmentedSentence>> {
    let Some(labels) = gold_token_labels(entry, lexicon)? else {
        return Ok(None);
    };
    let lattice = lexicon.lex_parse(&entry.text)?;
    Ok(Some(gold_path(&lattice, &labels, lexicon)?.0))
}

/// Gold segmentations of every labeled entry.
pub fn training_set(corpus: &Corpus, lexicon: &SuperwordLexicon) -> Result<Vec<SegmentedSentence>> {
    let mut out = Vec::new();
    for e in &corpus.entries {
        if let Some(s) = gold_segmentation(e, lexicon)? {
            out.push(s);
        }
    }
    Ok(out)
}

/// Lexicon vocabulary plus every superword the segmentations use.
pub fn vocabulary_for(lexicon: &SuperwordLexicon, sentences: &[SegmentedSentence]) -> BTreeSet<String> {
    let mut v = lexicon.vocabulary();
    for s in sentences {
        v.extend(s.words.iter().map(|w| w.id.clone()));
    }
    v
}

/// Token-level labels from a decoded path (each superword's label repeated
/// over its span).
pub fn token_labels(segmentation: &SegmentedSentence, spans: &[(usize, usize)]) -> Vec<String> {
    let mut out = Vec::new();
    for (label, &(s, e)) in segmentation.labels.iter().zip(spans) {
        out.extend(std::iter::repeat_n(label.clone(), e - s));
    }
    out
}

/// Segments as (concept, token start, token end) runs.
pub fn label_runs(labels: &[String]) -> Vec<(String, usize, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            runs.push((labels[start].clone(), start, i));
            start = i;
        }
    }
    runs
}

/// Convenience for building references in code.
pub fn rows(rows: &[&[&str]]) -> Answer {
    Answer::Rows(rows.iter().map(|r| r.iter().map(|v| Value::infer(v)).collect()).collect())
}

/// Tokenized words of a text, for synthetic corpora that skip the lexicon.
pub fn words_of(text: &str) -> Vec<Superword> {
    tokenize(text).into_iter().map(Superword::word).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CORPUS: &str = "\
id\ts01
text\tShow me the flights to Boston
gold\tSHOW:question\tME:question\tTHE:question\tFLIGHTS:subject\tTO:destin\tBOSTON:destin
win\t(question,display) (subject,flight) (destin,BBOS)
min:\trows
AA\t101
max:\trows
AA\t101\t480\t720

# a continuation
id\ts02
text\twhat about dallas
after\ts01
min:\trows
max:\trows
";

    #[test]
    fn parses_blocks() {
        let c = Corpus::parse(CORPUS).unwrap();
        assert_eq!(c.entries.len(), 2);
        let e = &c.entries[0];
        assert_eq!(e.gold.as_ref().unwrap().len(), 6);
        assert_eq!(e.minimal, Some(rows(&[&["AA", "101"]])));
        assert_eq!(c.entries[1].after.as_deref(), Some("s01"));
        assert_eq!(c.entries[1].minimal, Some(Answer::Rows(vec![])));
        assert_eq!(Corpus::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_records() {
        assert!(Corpus::parse("id\tx\ntext\ty\n").is_err());
        assert!(Corpus::parse("id\tx\ntext\ty\nmin:\trows\n").is_err());
        assert!(Corpus::parse("id\tx\ntext\ty\ngold\tY\n").is_err());
        assert!(Corpus::parse("id\tx\ntext\ty\ngold\tY:a\nafter\tz\n").is_err());
        let dup = "id\tx\ntext\ty\ngold\tY:a\n\nid\tx\ntext\ty\ngold\tY:a\n";
        assert!(Corpus::parse(dup).is_err());
        assert!(matches!(
            Corpus::parse("id\tx\ntext\ty\ncolour\tred\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn gold_path_prefers_grammar_arcs() {
        let lex = SuperwordLexicon::parse(
            "[words]\nTO FARE\n[stop]\nTHE\n[grammar number]\n0\tTHIRTY\t1\n1\tSEVEN\t2\naccept\t1\naccept\t2\nnormalize\tdigits\n",
        )
        .unwrap();
        let e = CorpusEntry {
            id: "x".into(),
            text: "THE FARE THIRTY SEVEN".into(),
            gold: Some(vec![
                ("FARE".into(), "fare".into()),
                ("THIRTY".into(), "fare".into()),
                ("SEVEN".into(), "fare".into()),
            ]),
            ..Default::default()
        };
        let s = gold_segmentation(&e, &lex).unwrap().unwrap();
        assert_eq!(s.to_string(), "fare:[FARE ((number)37)]");

        let split = CorpusEntry {
            gold: Some(vec![
                ("FARE".into(), "fare".into()),
                ("THIRTY".into(), "fare".into()),
                ("SEVEN".into(), "other".into()),
            ]),
            ..e
        };
        let s = gold_segmentation(&split, &lex).unwrap().unwrap();
        assert_eq!(s.to_string(), "fare:[FARE <unk>] other:[<unk>]");
    }

    #[test]
    fn runs_and_token_labels() {
        let s = SegmentedSentence::parse("fare:[FARE ((number)37)] other:[X]").unwrap();
        let labels = token_labels(&s, &[(0, 1), (1, 3), (3, 4)]);
        assert_eq!(labels, vec!["fare", "fare", "fare", "other"]);
        assert_eq!(
            label_runs(&labels),
            vec![("fare".to_string(), 0, 3), ("other".to_string(), 3, 4)]
        );
    }
}
