//! From segments to meaning: per-concept lookup tables map the words of each
//! segment to a (keyword, value) token.

use std::collections::BTreeMap;
use std::fmt;

use crate::concept::{ConceptDictionary, Role};
use crate::error::{Error, Result};
use crate::lexicon::strip_comment;
use crate::segment::SegmentedSentence;
use crate::superword::grammar_name;

pub const DEFAULT_REJECT_THRESHOLD: f64 = 0.75;

/// Pattern value that stands for the normalized value of the pattern's
/// grammar slot.
pub const SLOT_VALUE: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Item,
    Attribute,
    Logic,
    Operator,
}

impl Category {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "item" => Category::Item,
            "attribute" => Category::Attribute,
            "logic" => Category::Logic,
            "operator" => Category::Operator,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Item => "item",
            Category::Attribute => "attribute",
            Category::Logic => "logic",
            Category::Operator => "operator",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    /// Superword ids; `((g))` is a grammar slot.
    pub words: Vec<String>,
    pub value: String,
    pub category: Category,
}

impl Pattern {
    fn slot(&self) -> Option<usize> {
        self.words.iter().position(|w| grammar_name(w).is_some())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueTable {
    tables: BTreeMap<String, Vec<Pattern>>,
    /// Per grammar, normalized value to database value (e.g. BOSTON -> BBOS).
    maps: BTreeMap<String, BTreeMap<String, String>>,
}

impl ValueTable {
    pub fn patterns(&self, keyword: &str) -> Option<&[Pattern]> {
        self.tables.get(keyword).map(Vec::as_slice)
    }

    pub fn map(&self, grammar: &str) -> Option<&BTreeMap<String, String>> {
        self.maps.get(grammar)
    }

    /// Sections `[concept <name>]` with `PATTERN WORDS<TAB>value<TAB>category`
    /// lines and `[map <grammar>]` with `NORMALIZED<TAB>value` lines.
    ///
    /// Attribute concepts share their restriction's table and may not have
    /// one of their own.
    pub fn parse(text: &str, dictionary: &ConceptDictionary) -> Result<Self> {
        enum Section {
            None,
            Concept(String),
            Map(String),
        }
        let mut section = Section::None;
        let mut vt = ValueTable::default();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = strip_comment(raw);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(h) = line.trim().strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
                let parts: Vec<&str> = h.split_whitespace().collect();
                section = match parts.as_slice() {
                    ["concept", name] => {
                        let c = dictionary
                            .by_name(name)
                            .ok_or_else(|| Error::parse(lineno, format!("unknown concept `{name}`")))?;
                        if matches!(c.role, Role::Attribute | Role::Special) {
                            return Err(Error::parse(
                                lineno,
                                format!("`{name}` has no table of its own ({} concept)", c.role.as_str()),
                            ));
                        }
                        if vt.tables.contains_key(*name) {
                            return Err(Error::parse(lineno, format!("table `{name}` defined twice")));
                        }
                        vt.tables.insert(name.to_string(), Vec::new());
                        Section::Concept(name.to_string())
                    }
                    ["map", g] => {
                        vt.maps.entry(g.to_string()).or_default();
                        Section::Map(g.to_string())
                    }
                    _ => return Err(Error::parse(lineno, format!("unknown section `[{h}]`"))),
                };
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            match &section {
                Section::None => return Err(Error::parse(lineno, "entry outside of any section")),
                Section::Map(g) => match fields.as_slice() {
                    [from, to] if !from.is_empty() && !to.is_empty() => {
                        vt.maps.get_mut(g).expect("map section").insert(from.to_string(), to.to_string());
                    }
                    _ => return Err(Error::parse(lineno, "expected NORMALIZED<TAB>value")),
                },
                Section::Concept(name) => {
                    let [words, value, category] = fields.as_slice() else {
                        return Err(Error::parse(lineno, "expected PATTERN<TAB>value<TAB>category"));
                    };
                    let words: Vec<String> = words.split_whitespace().map(str::to_string).collect();
                    if words.is_empty() || value.is_empty() || value.contains([',', '(', ')', ' ']) {
                        return Err(Error::parse(lineno, "empty pattern or malformed value"));
                    }
                    let category = Category::parse(category)
                        .ok_or_else(|| Error::parse(lineno, format!("unknown category `{category}`")))?;
                    let pattern = Pattern {
                        words,
                        value: value.to_string(),
                        category,
                    };
                    if pattern.value == SLOT_VALUE && pattern.slot().is_none() {
                        return Err(Error::parse(lineno, "`*` value needs a ((grammar)) slot"));
                    }
                    let table = vt.tables.get_mut(name).expect("concept section");
                    if let Some(prefix) = table
                        .iter()
                        .find(|p| p.words.len() < pattern.words.len() && pattern.words.starts_with(&p.words))
                    {
                        return Err(Error::parse(
                            lineno,
                            format!("pattern listed after its prefix `{}`", prefix.words.join(" ")),
                        ));
                    }
                    table.push(pattern);
                }
            }
        }
        Ok(vt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateToken {
    pub keyword: String,
    pub value: String,
    pub category: Option<Category>,
    /// Index of the producing segment; `None` for tokens that did not come
    /// from decoding (parsed templates, dialog context).
    pub segment: Option<usize>,
    /// Concept that produced the token (differs from `keyword` for attributes).
    pub concept: String,
}

impl TemplateToken {
    pub fn new(keyword: impl Into<String>, value: impl Into<String>) -> Self {
        let keyword = keyword.into();
        TemplateToken {
            concept: keyword.clone(),
            keyword,
            value: value.into(),
            category: None,
            segment: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Template {
    pub tokens: Vec<TemplateToken>,
    /// Non-special segments for which no pattern matched.
    pub unmatched: usize,
}

impl Template {
    pub fn matched(&self) -> usize {
        self.tokens.len()
    }

    /// `None` for 0/0.
    pub fn matched_fraction(&self) -> Option<f64> {
        let total = self.matched() + self.unmatched;
        (total > 0).then(|| self.matched() as f64 / total as f64)
    }

    pub fn get(&self, keyword: &str) -> Option<&str> {
        self.tokens.iter().find(|t| t.keyword == keyword).map(|t| t.value.as_str())
    }

    /// Parses the rendered `(k,v) (k,v)` form.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .and_then(|r| r.find(')').map(|close| (&r[..close], &r[close + 1..])));
            let Some((body, tail)) = body else {
                return Err(Error::Invalid(format!("malformed template `{text}`")));
            };
            let (k, v) = body
                .split_once(',')
                .filter(|(k, v)| !k.trim().is_empty() && !v.trim().is_empty())
                .ok_or_else(|| Error::Invalid(format!("malformed token `({body})`")))?;
            tokens.push(TemplateToken::new(k.trim(), v.trim()));
            rest = tail.trim_start();
        }
        Ok(Template { tokens, unmatched: 0 })
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "({},{})", t.keyword, t.value)?;
        }
        Ok(())
    }
}

/// One token per non-special segment, from the leftmost pattern occurrence
/// in the segment (longest pattern first at equal position, then table
/// order).
pub fn generate_template(
    segmentation: &SegmentedSentence,
    tables: &ValueTable,
    dictionary: &ConceptDictionary,
) -> Result<Template> {
    let mut template = Template::default();
    for (idx, seg) in segmentation.segments().iter().enumerate() {
        dictionary.require(seg.concept)?;
        if dictionary.is_special(seg.concept) {
            continue;
        }
        let keyword = dictionary.keyword(seg.concept);
        let found = tables.patterns(keyword).and_then(|patterns| best_match(seg.words, patterns, tables));
        match found {
            Some((value, category)) => template.tokens.push(TemplateToken {
                keyword: keyword.to_string(),
                value,
                category: Some(category),
                segment: Some(idx),
                concept: seg.concept.to_string(),
            }),
            None => template.unmatched += 1,
        }
    }
    Ok(template)
}

fn best_match(
    words: &[crate::superword::Superword],
    patterns: &[Pattern],
    tables: &ValueTable,
) -> Option<(String, Category)> {
    let mut best: Option<((usize, std::cmp::Reverse<usize>, usize), String, Category)> = None;
    for (order, p) in patterns.iter().enumerate() {
        if p.words.len() > words.len() {
            continue;
        }
        for start in 0..=words.len() - p.words.len() {
            let window = &words[start..start + p.words.len()];
            if !window.iter().zip(&p.words).all(|(w, pw)| &w.id == pw) {
                continue;
            }
            let key = (start, std::cmp::Reverse(p.words.len()), order);
            if best.as_ref().is_some_and(|(k, _, _)| *k <= key) {
                break;
            }
            if let Some(value) = pattern_value(p, window, tables) {
                best = Some((key, value, p.category));
                break;
            }
        }
    }
    best.map(|(_, v, c)| (v, c))
}

/// A slot value passes through the grammar's map when one exists; an
/// unmapped value means the pattern does not apply.
fn pattern_value(p: &Pattern, window: &[crate::superword::Superword], tables: &ValueTable) -> Option<String> {
    if p.value != SLOT_VALUE {
        return Some(p.value.clone());
    }
    let slot = p.slot()?;
    let raw = window[slot].value.as_deref()?;
    let grammar = grammar_name(&p.words[slot])?;
    match tables.map(grammar) {
        Some(map) => map.get(raw).cloned(),
        None => Some(raw.replace(' ', "_")),
    }
}

/// True when too few decoded concepts found a value; an empty meaning is
/// always rejected.
pub fn should_reject(template: &Template, threshold: f64) -> bool {
    match template.matched_fraction() {
        Some(f) => f < threshold,
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DICT: &str = "\
question\tquestion\t9
subject\tsubject\t9
destin\trestriction\t0
fare\trestriction\t2
a_fare\tattribute\t2\tfare
dummy\tspecial\t99
and\tspecial\t99
";

    const TABLES: &str = "\
[concept question]
SHOW ME\tdisplay\tlogic
SHOW\tdisplay\tlogic
[concept subject]
FLIGHT(S)\tflight\tattribute
[concept destin]
TO ((city))\t*\titem
((city))\t*\titem
[concept fare]
ECONOMY\teconomy\titem
[map city]
BOSTON\tBBOS
";

    fn setup() -> (ConceptDictionary, ValueTable) {
        let d = ConceptDictionary::parse(DICT).unwrap();
        let t = ValueTable::parse(TABLES, &d).unwrap();
        (d, t)
    }

    fn gen(s: &str) -> Template {
        let (d, t) = setup();
        generate_template(&SegmentedSentence::parse(s).unwrap(), &t, &d).unwrap()
    }

    #[test]
    fn table_one_first_sentence() {
        let tpl = gen("question:[SHOW ME] subject:[FLIGHT(S)] destin:[TO ((city)BOSTON)]");
        assert_eq!(tpl.to_string(), "(question,display) (subject,flight) (destin,BBOS)");
        assert_eq!(tpl.unmatched, 0);
        assert_eq!(tpl.tokens[2].segment, Some(2));
    }

    #[test]
    fn attributes_fold_onto_restrictions() {
        let a = gen("a_fare:[ECONOMY]");
        let r = gen("fare:[ECONOMY]");
        assert_eq!(a.to_string(), "(fare,economy)");
        assert_eq!(a.to_string(), r.to_string());
        assert_eq!(a.tokens[0].concept, "a_fare");
    }

    #[test]
    fn specials_and_misses() {
        let tpl = gen("dummy:[PLEASE]");
        assert!(tpl.tokens.is_empty());
        assert_eq!(tpl.unmatched, 0);
        assert!(should_reject(&tpl, 0.75));

        let tpl = gen("question:[SHOW] destin:[TO ((city)DENVER)]");
        assert_eq!(tpl.to_string(), "(question,display)");
        assert_eq!(tpl.unmatched, 1);
        assert!(should_reject(&tpl, 0.75));
        assert!(!should_reject(&tpl, 0.5));
    }

    #[test]
    fn leftmost_then_longest() {
        let tpl = gen("question:[PLEASE SHOW ME]");
        assert_eq!(tpl.to_string(), "(question,display)");
        let (d, _) = setup();
        let t = ValueTable::parse("[concept question]\nWHAT\twhat\tlogic\nSHOW\tdisplay\tlogic\n", &d).unwrap();
        let seg = SegmentedSentence::parse("question:[SHOW WHAT]").unwrap();
        assert_eq!(generate_template(&seg, &t, &d).unwrap().to_string(), "(question,display)");
    }

    #[test]
    fn rejection_rule() {
        let mut t = Template::parse("(a,1) (b,2) (c,3)").unwrap();
        assert!(!should_reject(&t, 0.5));
        t = Template::parse("(a,1)").unwrap();
        t.unmatched = 1;
        assert!(should_reject(&t, 0.75));
        assert!(should_reject(&Template::default(), 0.0));
    }

    #[test]
    fn table_file_errors() {
        let d = ConceptDictionary::parse(DICT).unwrap();
        assert!(ValueTable::parse("[concept a_fare]\nX\tx\titem\n", &d).is_err());
        assert!(ValueTable::parse("[concept nowhere]\n", &d).is_err());
        assert!(ValueTable::parse("[concept fare]\nX\tx\tcolour\n", &d).is_err());
        assert!(ValueTable::parse("[concept fare]\nX\t*\titem\n", &d).is_err());
        let prefix_first = "[concept question]\nSHOW\tdisplay\tlogic\nSHOW ME\tdisplay\tlogic\n";
        assert!(matches!(ValueTable::parse(prefix_first, &d), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn template_text_round_trip() {
        let t = Template::parse("(question,display) (subject,flight) (destin,BBOS)").unwrap();
        assert_eq!(t.to_string(), "(question,display) (subject,flight) (destin,BBOS)");
        assert_eq!(t.get("destin"), Some("BBOS"));
        assert!(Template::parse("(question display)").is_err());
    }
}
