//! The full chain: lexical parse, decode, template, dialog merge, query.

use crate::concept::ConceptDictionary;
use crate::decoder::{viterbi_decode_lattice, DecodeResult};
use crate::dialog::{merge_context, DialogState};
use crate::error::{Error, Result};
use crate::lexicon::{Lattice, SuperwordLexicon};
use crate::model::ConceptHmm;
use crate::query::{execute, plan_query, Answer, Conventions, MiniDb, QueryPlan};
use crate::template::{generate_template, should_reject, Template, ValueTable, DEFAULT_REJECT_THRESHOLD};

/// Everything but the trained model.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub lexicon: SuperwordLexicon,
    pub dictionary: ConceptDictionary,
    pub tables: ValueTable,
    pub db: MiniDb,
    pub conventions: Conventions,
}

impl Artifacts {
    pub fn parse(lexicon: &str, dictionary: &str, tables: &str, db: &str, conventions: &str) -> Result<Self> {
        let dictionary = ConceptDictionary::parse(dictionary)?;
        Ok(Artifacts {
            lexicon: SuperwordLexicon::parse(lexicon)?,
            tables: ValueTable::parse(tables, &dictionary)?,
            dictionary,
            db: MiniDb::parse(db)?,
            conventions: Conventions::parse(conventions)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub artifacts: Artifacts,
    pub model: ConceptHmm,
    pub reject_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct Understanding {
    pub lattice: Lattice,
    pub decode: DecodeResult,
    pub template: Template,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Answered { plan: QueryPlan, answer: Answer },
    /// Matched fraction of the merged template (`None` for 0/0).
    Rejected { fraction: Option<f64> },
    /// The template could not be compiled into a query.
    Untranslatable(Error),
}

#[derive(Debug, Clone)]
pub struct Turn {
    pub understanding: Understanding,
    pub merged: Template,
    pub outcome: Outcome,
}

impl Pipeline {
    pub fn new(artifacts: Artifacts, model: ConceptHmm) -> Result<Self> {
        if model.dictionary() != &artifacts.dictionary {
            return Err(Error::Invalid("model and dictionary disagree on the concept set".into()));
        }
        Ok(Pipeline {
            artifacts,
            model,
            reject_threshold: DEFAULT_REJECT_THRESHOLD,
        })
    }

    pub fn with_model(&self, model: ConceptHmm) -> Pipeline {
        Pipeline {
            artifacts: self.artifacts.clone(),
            model,
            reject_threshold: self.reject_threshold,
        }
    }

    pub fn understand(&self, text: &str) -> Result<Understanding> {
        let lattice = self.artifacts.lexicon.lex_parse(text)?;
        let decode = viterbi_decode_lattice(&self.model, &lattice)?;
        let template = generate_template(&decode.segmentation, &self.artifacts.tables, &self.artifacts.dictionary)?;
        Ok(Understanding {
            lattice,
            decode,
            template,
        })
    }

    pub fn answer_template(&self, template: &Template) -> Result<(QueryPlan, Answer)> {
        let plan = plan_query(template, &self.artifacts.db, &self.artifacts.conventions)?;
        let answer = execute(&plan, &self.artifacts.db);
        Ok((plan, answer))
    }

    /// One dialog turn. The rejection test runs on the merged template, so a
    /// fragment that carries no value of its own is only answered when there
    /// is context to complete it. Rejected turns leave the context alone.
    pub fn respond(&self, state: &DialogState, text: &str) -> Result<(DialogState, Turn)> {
        let understanding = self.understand(text)?;
        let (next, merged) = merge_context(state, &understanding.template, &self.artifacts.dictionary);
        if should_reject(&merged, self.reject_threshold) {
            let turn = Turn {
                outcome: Outcome::Rejected {
                    fraction: merged.matched_fraction(),
                },
                understanding,
                merged,
            };
            return Ok((state.clone(), turn));
        }
        let outcome = match self.answer_template(&merged) {
            Ok((plan, answer)) => Outcome::Answered { plan, answer },
            Err(e) => Outcome::Untranslatable(e),
        };
        Ok((
            next,
            Turn {
                understanding,
                merged,
                outcome,
            },
        ))
    }

    /// Meaning of a pseudo-English annotation. A string that already looks
    /// like a template is taken literally.
    pub fn win_template(&self, win: &str) -> Result<Template> {
        if win.trim_start().starts_with('(') {
            Template::parse(win)
        } else {
            Ok(self.understand(win)?.template)
        }
    }
}
