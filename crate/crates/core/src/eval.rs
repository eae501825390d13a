//! Corpus metrics: concept and sentence accuracy against gold segmentations,
//! answer accuracy against reference answers, and attribution of every miss
//! to the first pipeline stage that went wrong.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::corpus::{gold_segmentation, gold_token_labels, label_runs, token_labels, Corpus};
use crate::decoder::viterbi_decode_lattice;
use crate::dialog::DialogState;
use crate::error::Result;
use crate::lexicon::SuperwordLexicon;
use crate::model::ConceptHmm;
use crate::pipeline::{Outcome, Pipeline};
use crate::query::score_answer;
use crate::segment::SegmentedSentence;
use crate::superword::Superword;
use crate::template::Template;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorCategory {
    Decoding,
    Template,
    Dialog,
    Translator,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Decoding => "decoding",
            ErrorCategory::Template => "template",
            ErrorCategory::Dialog => "dialog",
            ErrorCategory::Translator => "translator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Correct,
    Wrong,
    Rejected,
    /// No reference answers to score against.
    Unscored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceResult {
    pub id: String,
    pub segments: Option<String>,
    pub template: Option<String>,
    /// (gold segments matched exactly, gold segments) when gold exists.
    pub concept_score: Option<(usize, usize)>,
    pub verdict: Verdict,
    pub category: Option<ErrorCategory>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub sentences: Vec<SentenceResult>,
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

impl EvalReport {
    pub fn segment_counts(&self) -> (usize, usize) {
        self.sentences
            .iter()
            .filter_map(|s| s.concept_score)
            .fold((0, 0), |(a, b), (c, t)| (a + c, b + t))
    }

    /// Percentage of gold segments reproduced exactly (span and label).
    pub fn concept_accuracy(&self) -> Option<f64> {
        let (c, t) = self.segment_counts();
        pct(c, t)
    }

    pub fn sentence_counts(&self) -> (usize, usize) {
        let scored: Vec<_> = self.sentences.iter().filter_map(|s| s.concept_score).collect();
        (scored.iter().filter(|(c, t)| c == t).count(), scored.len())
    }

    /// Percentage of gold-labeled sentences with every segment right.
    pub fn sentence_accuracy(&self) -> Option<f64> {
        let (c, t) = self.sentence_counts();
        pct(c, t)
    }

    pub fn verdict_count(&self, v: Verdict) -> usize {
        self.sentences.iter().filter(|s| s.verdict == v).count()
    }

    /// Correct, wrong and rejected percentages over scored sentences.
    pub fn answer_breakdown(&self) -> Option<(f64, f64, f64)> {
        let scored = self.sentences.len() - self.verdict_count(Verdict::Unscored);
        Some((
            pct(self.verdict_count(Verdict::Correct), scored)?,
            pct(self.verdict_count(Verdict::Wrong), scored)?,
            pct(self.verdict_count(Verdict::Rejected), scored)?,
        ))
    }

    pub fn error_counts(&self) -> BTreeMap<ErrorCategory, usize> {
        let mut m = BTreeMap::new();
        for c in self.sentences.iter().filter_map(|s| s.category) {
            *m.entry(c).or_insert(0) += 1;
        }
        m
    }

    pub fn render(&self, per_sentence: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sentences\t{}", self.sentences.len());
        let (sc, st) = self.segment_counts();
        let (nc, nt) = self.sentence_counts();
        match self.concept_accuracy() {
            Some(a) => {
                let _ = writeln!(s, "concept accuracy\t{a:.2}\t({sc}/{st})");
            }
            None => s.push_str("concept accuracy\tn/a\n"),
        }
        match self.sentence_accuracy() {
            Some(a) => {
                let _ = writeln!(s, "sentence accuracy\t{a:.2}\t({nc}/{nt})");
            }
            None => s.push_str("sentence accuracy\tn/a\n"),
        }
        if let Some((c, w, r)) = self.answer_breakdown() {
            let _ = writeln!(s, "answers correct\t{c:.2}\t({})", self.verdict_count(Verdict::Correct));
            let _ = writeln!(s, "answers wrong\t{w:.2}\t({})", self.verdict_count(Verdict::Wrong));
            let _ = writeln!(s, "answers rejected\t{r:.2}\t({})", self.verdict_count(Verdict::Rejected));
        }
        let errors = self.error_counts();
        for cat in [
            ErrorCategory::Decoding,
            ErrorCategory::Template,
            ErrorCategory::Dialog,
            ErrorCategory::Translator,
        ] {
            let _ = writeln!(s, "errors {}\t{}", cat.as_str(), errors.get(&cat).copied().unwrap_or(0));
        }
        if per_sentence {
            for r in &self.sentences {
                let verdict = match r.verdict {
                    Verdict::Correct => "correct",
                    Verdict::Wrong => "wrong",
                    Verdict::Rejected => "rejected",
                    Verdict::Unscored => "-",
                };
                let _ = writeln!(
                    s,
                    "{}\t{verdict}\t{}\t{}\t{}",
                    r.id,
                    r.category.map_or("-", ErrorCategory::as_str),
                    r.segments.as_deref().unwrap_or("-"),
                    r.template.as_deref().unwrap_or("-"),
                );
            }
        }
        s
    }
}

/// Gold segments reproduced exactly, and the gold segment count.
pub fn segment_matches(gold: &[String], hyp: &[String]) -> (usize, usize) {
    let g = label_runs(gold);
    let h = label_runs(hyp);
    (g.iter().filter(|run| h.contains(run)).count(), g.len())
}

fn same_tokens(a: &Template, b: &Template) -> bool {
    let key = |t: &Template| {
        let mut v: Vec<(String, String)> = t.tokens.iter().map(|t| (t.keyword.clone(), t.value.clone())).collect();
        v.sort();
        v
    };
    key(a) == key(b)
}

/// Runs every entry through the pipeline. Entries with `after` start from
/// the dialog state the referenced entry left behind.
pub fn evaluate(pipeline: &Pipeline, corpus: &Corpus) -> Result<EvalReport> {
    let lexicon = &pipeline.artifacts.lexicon;
    let mut states: HashMap<String, DialogState> = HashMap::new();
    let mut report = EvalReport::default();
    for entry in &corpus.entries {
        let state = entry
            .after
            .as_ref()
            .and_then(|a| states.get(a).cloned())
            .unwrap_or_default();
        let gold = gold_token_labels(entry, lexicon)?;
        let scored = entry.has_references();
        let mut result = SentenceResult {
            id: entry.id.clone(),
            segments: None,
            template: None,
            concept_score: gold.as_ref().map(|g| (0, label_runs(g).len())),
            verdict: if scored { Verdict::Rejected } else { Verdict::Unscored },
            category: None,
        };
        let (next, decoding_ok, template_ok) = match pipeline.respond(&state, &entry.text) {
            Err(_) => (state.clone(), false, false),
            Ok((next, turn)) => {
                let u = &turn.understanding;
                let hyp = token_labels(&u.decode.segmentation, &u.decode.spans);
                result.segments = Some(u.decode.segmentation.to_string());
                result.template = Some(u.template.to_string());
                let decoding_ok = match &gold {
                    Some(g) => {
                        let score = segment_matches(g, &hyp);
                        result.concept_score = Some(score);
                        score.0 == score.1 && label_runs(g).len() == label_runs(&hyp).len()
                    }
                    None => true,
                };
                let template_ok = match &entry.win {
                    Some(w) => pipeline.win_template(w).map(|t| same_tokens(&t, &u.template)).unwrap_or(true),
                    None => true,
                };
                if let (Some(lo), Some(hi)) = (&entry.minimal, &entry.maximal) {
                    result.verdict = match &turn.outcome {
                        Outcome::Answered { answer, .. } if score_answer(answer, lo, hi) => Verdict::Correct,
                        Outcome::Answered { .. } | Outcome::Untranslatable(_) => Verdict::Wrong,
                        Outcome::Rejected { .. } => Verdict::Rejected,
                    };
                }
                (next, decoding_ok, template_ok)
            }
        };
        if matches!(result.verdict, Verdict::Wrong | Verdict::Rejected) {
            result.category = Some(if !decoding_ok {
                ErrorCategory::Decoding
            } else if !template_ok {
                ErrorCategory::Template
            } else if entry.after.is_some() {
                ErrorCategory::Dialog
            } else {
                ErrorCategory::Translator
            });
        }
        states.insert(entry.id.clone(), next);
        report.sentences.push(result);
    }
    Ok(report)
}

/// Decodes every entry with gold labels using `model` alone and sums
/// [`segment_matches`] over them.
pub fn concept_score(model: &ConceptHmm, lexicon: &SuperwordLexicon, corpus: &Corpus) -> Result<(usize, usize)> {
    let mut total = (0, 0);
    for entry in &corpus.entries {
        let Some(gold) = gold_token_labels(entry, lexicon)? else {
            continue;
        };
        let decode = viterbi_decode_lattice(model, &lexicon.lex_parse(&entry.text)?)?;
        let (m, t) = segment_matches(&gold, &token_labels(&decode.segmentation, &decode.spans));
        total.0 += m;
        total.1 += t;
    }
    Ok(total)
}

/// Labels every word with the concept it most often carried in training.
#[derive(Debug, Clone)]
pub struct UnigramTagger {
    best: HashMap<String, String>,
    fallback: String,
}

impl UnigramTagger {
    pub fn train(corpus: &[SegmentedSentence]) -> Self {
        let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
        let mut overall: BTreeMap<&str, usize> = BTreeMap::new();
        for s in corpus {
            for (w, l) in s.words.iter().zip(&s.labels) {
                *counts.entry(&w.id).or_default().entry(l).or_default() += 1;
                *overall.entry(l).or_default() += 1;
            }
        }
        let argmax = |m: &BTreeMap<&str, usize>| {
            // Ties go to the alphabetically first label.
            m.iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(l, _)| l.to_string())
                .unwrap_or_default()
        };
        UnigramTagger {
            best: counts.iter().map(|(w, m)| (w.to_string(), argmax(m))).collect(),
            fallback: argmax(&overall),
        }
    }

    /// [`segment_matches`] summed over gold-labeled entries, tagging the gold
    /// superword path.
    pub fn score(&self, lexicon: &SuperwordLexicon, corpus: &Corpus) -> Result<(usize, usize)> {
        let mut total = (0, 0);
        for entry in &corpus.entries {
            if let Some(gold) = gold_segmentation(entry, lexicon)? {
                let (m, t) = segment_matches(&gold.labels, &self.tag(&gold.words));
                total.0 += m;
                total.1 += t;
            }
        }
        Ok(total)
    }

    pub fn tag(&self, words: &[Superword]) -> Vec<String> {
        words
            .iter()
            .map(|w| self.best.get(&w.id).cloned().unwrap_or_else(|| self.fallback.clone()))
            .collect()
    }
}
