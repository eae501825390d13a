use std::fmt;

/// Reserved identifier for out-of-vocabulary words.
pub const UNKNOWN: &str = "<unk>";

/// A lexical unit as seen by the concept model.
///
/// Plain words and inflection groups carry no value. A grammar match carries
/// the grammar identifier `((id))` plus the normalized value, and renders as
/// `((id)VALUE)`. The model only ever looks at `id`, so all matches of one
/// grammar share their statistics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Superword {
    pub id: String,
    pub value: Option<String>,
}

impl Superword {
    pub fn word(id: impl Into<String>) -> Self {
        Superword {
            id: id.into(),
            value: None,
        }
    }

    pub fn grammar(grammar: &str, value: impl Into<String>) -> Self {
        Superword {
            id: grammar_id(grammar),
            value: Some(value.into()),
        }
    }

    /// Grammar name when this superword came out of an FSA grammar.
    pub fn grammar_name(&self) -> Option<&str> {
        grammar_name(&self.id)
    }

    /// Parses the rendered form (`SHOW`, `((city)BOSTON)`, `((number))`).
    pub fn parse(text: &str) -> Self {
        if let Some(rest) = text.strip_prefix("((") {
            if let Some(close) = rest.find(')') {
                let name = &rest[..close];
                let tail = &rest[close + 1..];
                if let Some(value) = tail.strip_suffix(')') {
                    if !name.is_empty() {
                        return if value.is_empty() {
                            Superword::word(grammar_id(name))
                        } else {
                            Superword::grammar(name, value)
                        };
                    }
                }
            }
        }
        Superword::word(text)
    }
}

impl fmt::Display for Superword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.value, self.grammar_name()) {
            (Some(value), Some(name)) => write!(f, "(({name}){value})"),
            _ => f.write_str(&self.id),
        }
    }
}

pub fn grammar_id(name: &str) -> String {
    format!("(({name}))")
}

pub fn grammar_name(id: &str) -> Option<&str> {
    id.strip_prefix("((")?.strip_suffix("))")
}
