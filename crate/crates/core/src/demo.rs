//! The bundled flight-information data set: ten cities, ten flights, a
//! fourteen-concept dictionary and the corpora used by the acceptance suite.

use crate::corpus::{training_set, vocabulary_for, Corpus};
use crate::error::Result;
use crate::model::{ConceptHmm, SynonymGroups, Vocabulary, DEFAULT_K};
use crate::pipeline::{Artifacts, Pipeline};

pub const DICTIONARY: &str = include_str!("../data/demo/dictionary.txt");
pub const LEXICON: &str = include_str!("../data/demo/lexicon.txt");
pub const VALUES: &str = include_str!("../data/demo/values.txt");
pub const DATABASE: &str = include_str!("../data/demo/db.txt");
pub const CONVENTIONS: &str = include_str!("../data/demo/conventions.txt");
pub const SYNONYMS: &str = include_str!("../data/demo/synonyms.txt");
pub const TRAIN: &str = include_str!("../data/demo/train.txt");
pub const EVAL: &str = include_str!("../data/demo/eval.txt");
pub const LOOP: &str = include_str!("../data/demo/loop.txt");
/// `TRAIN` trained with the default k and `SYNONYMS` applied.
pub const MODEL: &str = include_str!("../data/demo/demo.model");

pub fn artifacts() -> Result<Artifacts> {
    Artifacts::parse(LEXICON, DICTIONARY, VALUES, DATABASE, CONVENTIONS)
}

/// Retrains the bundled model from the bundled sources.
pub fn train_model() -> Result<ConceptHmm> {
    let a = artifacts()?;
    let corpus = Corpus::parse(TRAIN)?;
    let seg = training_set(&corpus, &a.lexicon)?;
    let vocab = Vocabulary::new(vocabulary_for(&a.lexicon, &seg))?;
    let model = ConceptHmm::train_mle(&seg, &a.dictionary, &vocab, DEFAULT_K)?;
    model.apply_synonym_smoothing(&SynonymGroups::parse(SYNONYMS)?)
}

pub fn model() -> Result<ConceptHmm> {
    ConceptHmm::from_text(MODEL)
}

pub fn pipeline() -> Result<Pipeline> {
    Pipeline::new(artifacts()?, model()?)
}
