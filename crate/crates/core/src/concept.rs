//! The concept dictionary: labels the decoder can assign, their syntactic
//! role, and the rank used when merging dialog context.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lexicon::strip_comment;

pub const DUMMY: &str = "dummy";
pub const AND: &str = "and";
pub const Q_ATTR: &str = "q_attr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Question,
    Subject,
    Restriction,
    Attribute,
    Special,
}

impl Role {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "question" => Role::Question,
            "subject" => Role::Subject,
            "restriction" => Role::Restriction,
            "attribute" => Role::Attribute,
            "special" => Role::Special,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Question => "question",
            Role::Subject => "subject",
            Role::Restriction => "restriction",
            Role::Attribute => "attribute",
            Role::Special => "special",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub name: String,
    pub role: Role,
    /// Hierarchy rank; smaller is higher. Rank 0 concepts restart the dialog
    /// context when their value changes.
    pub rank: u32,
    /// For attribute concepts, the restriction concept they mirror.
    pub mirror: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptDictionary {
    concepts: Vec<Concept>,
    index: HashMap<String, usize>,
}

impl ConceptDictionary {
    pub fn new(concepts: Vec<Concept>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, c) in concepts.iter().enumerate() {
            if c.name.is_empty() || c.name.contains(char::is_whitespace) {
                return Err(Error::Dictionary(format!("bad concept name `{}`", c.name)));
            }
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::Dictionary(format!("concept `{}` defined twice", c.name)));
            }
        }
        for c in &concepts {
            match (c.role, &c.mirror) {
                (Role::Attribute, Some(m)) => {
                    let target = index.get(m).map(|&i| &concepts[i]);
                    if target.map(|t| t.role) != Some(Role::Restriction) {
                        return Err(Error::Dictionary(format!(
                            "attribute `{}` mirrors `{m}`, which is not a restriction concept",
                            c.name
                        )));
                    }
                }
                (Role::Attribute, None) => {
                    return Err(Error::Dictionary(format!("attribute `{}` mirrors nothing", c.name)))
                }
                (_, Some(_)) => {
                    return Err(Error::Dictionary(format!(
                        "only attribute concepts may mirror another (`{}`)",
                        c.name
                    )))
                }
                _ => {}
            }
        }
        for special in [DUMMY, AND] {
            match index.get(special) {
                Some(&i) if concepts[i].role == Role::Special => {}
                _ => {
                    return Err(Error::Dictionary(format!(
                        "`{special}` must exist with role special"
                    )))
                }
            }
        }
        Ok(ConceptDictionary { concepts, index })
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn get(&self, i: usize) -> &Concept {
        &self.concepts[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.concepts[i].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn by_name(&self, name: &str) -> Option<&Concept> {
        self.index_of(name).map(|i| &self.concepts[i])
    }

    /// Template keyword for a concept: attributes fold onto their restriction.
    pub fn keyword<'a>(&'a self, name: &'a str) -> &'a str {
        match self.by_name(name) {
            Some(Concept {
                role: Role::Attribute,
                mirror: Some(m),
                ..
            }) => m,
            _ => name,
        }
    }

    pub fn is_special(&self, name: &str) -> bool {
        self.by_name(name).map(|c| c.role == Role::Special).unwrap_or(false)
    }

    /// Hierarchy rank of a template keyword; unknown keywords rank lowest.
    pub fn rank(&self, keyword: &str) -> u32 {
        self.by_name(keyword).map(|c| c.rank).unwrap_or(u32::MAX)
    }

    /// `name<TAB>role<TAB>rank[<TAB>mirror]` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut concepts = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let (name, role, rank, mirror) = match fields.as_slice() {
                [n, r, k] => (n, r, k, None),
                [n, r, k, m] => (n, r, k, Some(m.to_string())),
                _ => return Err(Error::parse(i + 1, "expected name<TAB>role<TAB>rank[<TAB>mirror]")),
            };
            let role = Role::parse(role).ok_or_else(|| Error::parse(i + 1, format!("unknown role `{role}`")))?;
            let rank = rank
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad rank `{rank}`")))?;
            concepts.push(Concept {
                name: name.to_string(),
                role,
                rank,
                mirror,
            });
        }
        ConceptDictionary::new(concepts)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.concepts {
            let _ = write!(s, "{}\t{}\t{}", c.name, c.role.as_str(), c.rank);
            if let Some(m) = &c.mirror {
                let _ = write!(s, "\t{m}");
            }
            s.push('\n');
        }
        s
    }

    /// A dictionary of `names` as restrictions (rank = position) plus the two
    /// mandatory special concepts. Handy for synthetic models.
    pub fn flat<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut concepts: Vec<Concept> = names
            .iter()
            .enumerate()
            .filter(|(_, n)| n.as_ref() != DUMMY && n.as_ref() != AND)
            .map(|(i, n)| Concept {
                name: n.as_ref().to_string(),
                role: Role::Restriction,
                rank: i as u32,
                mirror: None,
            })
            .collect();
        for special in [DUMMY, AND] {
            concepts.push(Concept {
                name: special.to_string(),
                role: Role::Special,
                rank: u32::MAX,
                mirror: None,
            });
        }
        ConceptDictionary::new(concepts)
    }
}
