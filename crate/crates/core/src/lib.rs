//! Conceptual decoding for spoken-language database queries.
//!
//! A sentence is lexically parsed into a lattice of superwords, decoded into
//! concept segments by a concept HMM, turned into a template of
//! (keyword, value) tokens, merged with the dialog context and finally
//! translated into a database query.

pub mod concept;
pub mod corpus;
pub mod decoder;
pub mod demo;
pub mod dialog;
pub mod eval;
pub mod error;
pub mod lexicon;
pub mod model;
pub mod pipeline;
pub mod query;
pub mod segment;
pub mod superword;
pub mod synth;
pub mod template;
pub mod training;

pub use concept::{Concept, ConceptDictionary, Role};
pub use error::{Error, Result};
pub use lexicon::{Lattice, LatticeArc, SuperwordLexicon};
pub use model::{ConceptHmm, SynonymGroups, Vocabulary};
pub use segment::SegmentedSentence;
pub use superword::Superword;
