use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("sentence is empty")]
    EmptySentence,

    #[error("sentence is empty after stop-word deletion")]
    EmptyAfterDeletion,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("unknown concept label `{0}`")]
    UnknownLabel(String),

    #[error("word `{0}` is not in the vocabulary")]
    UnknownWord(String),

    #[error("invalid dictionary: {0}")]
    Dictionary(String),

    #[error("invalid lexicon: {0}")]
    Lexicon(String),

    #[error("invalid value table: {0}")]
    ValueTable(String),

    #[error("invalid database: {0}")]
    Database(String),

    #[error("invalid segmentation: {0}")]
    Segmentation(String),

    #[error("model carries no training counts; re-train before smoothing")]
    MissingCounts,

    #[error("brute-force decoding limited to {max_concepts} concepts and paths of {max_len} words")]
    SizeLimit { max_concepts: usize, max_len: usize },

    #[error("no labeling satisfies the concept constraint")]
    Infeasible,

    #[error("no compilation rule for template token ({keyword},{value})")]
    UnknownKeyword { keyword: String, value: String },

    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
