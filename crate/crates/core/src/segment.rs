use std::fmt;

use crate::error::{Error, Result};
use crate::superword::Superword;

/// A sentence with one concept label per superword. Runs of equal labels are
/// the segments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SegmentedSentence {
    pub words: Vec<Superword>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment<'a> {
    pub concept: &'a str,
    pub start: usize,
    pub end: usize,
    pub words: &'a [Superword],
}

impl SegmentedSentence {
    pub fn new(words: Vec<Superword>, labels: Vec<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::Segmentation("empty sentence".into()));
        }
        if words.len() != labels.len() {
            return Err(Error::Segmentation(format!(
                "{} words but {} labels",
                words.len(),
                labels.len()
            )));
        }
        Ok(SegmentedSentence { words, labels })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn segments(&self) -> Vec<Segment<'_>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.labels.len() {
            if i == self.labels.len() || self.labels[i] != self.labels[start] {
                out.push(Segment {
                    concept: &self.labels[start],
                    start,
                    end: i,
                    words: &self.words[start..i],
                });
                start = i;
            }
        }
        out
    }

    /// Parses the rendered form `concept:[w1 w2] concept:[w3]`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Segmentation(format!("{msg} in `{text}`"));
        let mut words = Vec::new();
        let mut labels = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let open = rest.find(":[").ok_or_else(|| bad("missing `:[`"))?;
            let concept = rest[..open].trim();
            if concept.is_empty() {
                return Err(bad("missing concept"));
            }
            let body_start = open + 2;
            let close = rest[body_start..].find(']').ok_or_else(|| bad("missing `]`"))? + body_start;
            let body = &rest[body_start..close];
            let before = words.len();
            for token in split_superwords(body) {
                words.push(Superword::parse(&token));
                labels.push(concept.to_string());
            }
            if words.len() == before {
                return Err(bad("empty segment"));
            }
            rest = rest[close + 1..].trim_start();
        }
        SegmentedSentence::new(words, labels)
    }
}

/// Splits on spaces that are not inside `((grammar)value)` parentheses.
pub(crate) fn split_superwords(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if ch == ' ' && depth <= 0 {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

impl fmt::Display for SegmentedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segments().iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}:[", seg.concept)?;
            for (j, w) in seg.words.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{w}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_are_label_runs() {
        let s = SegmentedSentence::parse("question:[SHOW ME] subject:[FLIGHTS] destin:[TO ((city)SAN FRANCISCO)]")
            .unwrap();
        assert_eq!(s.len(), 5);
        let segs = s.segments();
        assert_eq!(segs.len(), 3);
        assert_eq!((segs[2].concept, segs[2].start, segs[2].end), ("destin", 3, 5));
        assert_eq!(segs[2].words[1].value.as_deref(), Some("SAN FRANCISCO"));
        assert_eq!(
            s.to_string(),
            "question:[SHOW ME] subject:[FLIGHTS] destin:[TO ((city)SAN FRANCISCO)]"
        );
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(SegmentedSentence::parse("question SHOW").is_err());
        assert!(SegmentedSentence::parse("question:[]").is_err());
        assert!(SegmentedSentence::parse("").is_err());
        assert!(SegmentedSentence::new(vec![Superword::word("A")], vec![]).is_err());
    }
}
