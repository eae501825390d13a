//! Template to query plan to answer, over a small in-memory flight database.

mod db;

pub use db::{ColumnType, MiniDb, Table, Value, DB_HEADER, MINUTES_PER_DAY, SCHEMA};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lexicon::strip_comment;
use crate::template::Template;

pub const DEFAULT_SUBJECT: &str = "flight";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: &str, column: &str) -> Self {
        ColumnRef {
            table: table.to_string(),
            column: column.to_string(),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        let (t, c) = s.split_once('.')?;
        Some(ColumnRef::new(t, c))
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

/// Interpretation conventions that the template alone does not fix: time
/// intervals, what to list for each subject, and subjects that are really
/// restrictions (IS BREAKFAST SERVED).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Conventions {
    pub intervals: BTreeMap<String, (i64, i64)>,
    pub projections: BTreeMap<String, Vec<ColumnRef>>,
    pub subject_filters: BTreeMap<String, ColumnRef>,
}

impl Conventions {
    /// Sections `[interval]` (`name<TAB>from<TAB>to`, minutes, half-open),
    /// `[projection]` (`subject<TAB>table.col table.col`) and
    /// `[subject-filter]` (`value<TAB>table.col`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut conv = Conventions::default();
        let mut section = "";
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = strip_comment(raw);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(h) = line.trim().strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
                section = match h {
                    "interval" | "projection" | "subject-filter" => h,
                    _ => return Err(Error::parse(lineno, format!("unknown section `[{h}]`"))),
                };
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let col = |s: &str| {
                ColumnRef::parse(s).ok_or_else(|| Error::parse(lineno, format!("expected table.column, got `{s}`")))
            };
            match (section, fields.as_slice()) {
                ("interval", [name, from, to]) => {
                    let bound = |s: &str| {
                        s.parse::<i64>()
                            .ok()
                            .filter(|m| (0..=MINUTES_PER_DAY).contains(m))
                            .ok_or_else(|| Error::parse(lineno, format!("bad minute `{s}`")))
                    };
                    let (a, b) = (bound(from)?, bound(to)?);
                    if a >= b {
                        return Err(Error::parse(lineno, "empty interval"));
                    }
                    conv.intervals.insert(name.to_string(), (a, b));
                }
                ("projection", [subject, cols]) => {
                    let cols = cols.split_whitespace().map(col).collect::<Result<Vec<_>>>()?;
                    if cols.is_empty() {
                        return Err(Error::parse(lineno, "empty projection"));
                    }
                    conv.projections.insert(subject.to_string(), cols);
                }
                ("subject-filter", [value, c]) => {
                    conv.subject_filters.insert(value.to_string(), col(c)?);
                }
                ("", _) => return Err(Error::parse(lineno, "entry outside of any section")),
                _ => return Err(Error::parse(lineno, format!("malformed `{section}` entry"))),
            }
        }
        if !conv.projections.contains_key(DEFAULT_SUBJECT) {
            return Err(Error::parse(0, format!("no projection for the default subject `{DEFAULT_SUBJECT}`")));
        }
        Ok(conv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ge,
    Lt,
}

impl Comparator {
    fn holds(self, a: &Value, b: &Value) -> bool {
        match self {
            Comparator::Eq => a == b,
            Comparator::Ge => a >= b,
            Comparator::Lt => a < b,
        }
    }

    fn sql(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ge => ">=",
            Comparator::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub column: ColumnRef,
    pub cmp: Comparator,
    pub value: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    Minimum,
    Maximum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregate {
    pub kind: AggregateKind,
    pub column: ColumnRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerKind {
    Rows,
    Number,
    Boolean,
}

impl AnswerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnswerKind::Rows => "rows",
            AnswerKind::Number => "number",
            AnswerKind::Boolean => "bool",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "rows" => AnswerKind::Rows,
            "number" => AnswerKind::Number,
            "bool" => AnswerKind::Boolean,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    pub subject: String,
    /// Tables linked to `flight` (only `fare` exists in the schema).
    pub joins: Vec<String>,
    pub predicates: Vec<Predicate>,
    pub projection: Vec<ColumnRef>,
    pub aggregate: Option<Aggregate>,
    pub kind: AnswerKind,
}

impl QueryPlan {
    pub fn to_sql(&self) -> String {
        let from = if self.joins.iter().any(|j| j == "fare") {
            "flight JOIN fare ON fare.flight_id = flight.flight_id"
        } else {
            "flight"
        };
        let mut conds: Vec<String> = self
            .predicates
            .iter()
            .map(|p| {
                let v = match &p.value {
                    Value::Int(i) => i.to_string(),
                    Value::Text(s) => format!("'{s}'"),
                };
                format!("{} {} {v}", p.column, p.cmp.sql())
            })
            .collect();
        let base_where = if conds.is_empty() {
            String::new()
        } else {
            format!(" WHERE {}", conds.join(" AND "))
        };
        if let Some(agg) = &self.aggregate {
            let f = match agg.kind {
                AggregateKind::Minimum => "MIN",
                AggregateKind::Maximum => "MAX",
            };
            conds.push(format!("{} = (SELECT {f}({}) FROM {from}{base_where})", agg.column, agg.column));
        }
        let where_clause = if conds.is_empty() {
            String::new()
        } else {
            format!(" WHERE {}", conds.join(" AND "))
        };
        let cols: Vec<String> = self.projection.iter().map(ToString::to_string).collect();
        let select = format!("SELECT DISTINCT {} FROM {from}{where_clause}", cols.join(", "));
        match self.kind {
            AnswerKind::Rows => format!("{select};"),
            AnswerKind::Number => format!("SELECT COUNT(*) FROM ({select});"),
            AnswerKind::Boolean => format!("SELECT EXISTS ({select});"),
        }
    }
}

fn unknown(keyword: &str, value: &str) -> Error {
    Error::UnknownKeyword {
        keyword: keyword.to_string(),
        value: value.to_string(),
    }
}

/// City code for a city code, city name or airport code.
fn resolve_city(db: &MiniDb, value: &str) -> Option<String> {
    let key = Value::Text(value.to_string());
    let city = db.expect("city");
    if city.lookup(&key).is_some() {
        return Some(value.to_string());
    }
    let by_name = city.rows.iter().find(|r| r[1] == key || r[1] == Value::Text(value.replace('_', " ")));
    if let Some(r) = by_name {
        return Some(r[0].to_string());
    }
    db.expect("airport").lookup(&key).map(|r| r[1].to_string())
}

/// Compiles a template. A template without a subject uses the default
/// subject; fare subjects, fare classes and fare operators pull in the
/// flight-fare link.
pub fn plan_query(template: &Template, db: &MiniDb, conventions: &Conventions) -> Result<QueryPlan> {
    let mut kind = None;
    let mut q_attr_kind = None;
    let mut subject: Option<String> = None;
    let mut joins: BTreeSet<String> = BTreeSet::new();
    let mut predicates = Vec::new();
    let mut aggregate = None;
    let text = |v: &str| Value::Text(v.to_string());

    for t in &template.tokens {
        let (k, v) = (t.keyword.as_str(), t.value.as_str());
        match k {
            "question" | "q_attr" => {
                let parsed = match v {
                    "display" => AnswerKind::Rows,
                    "yes-no" => AnswerKind::Boolean,
                    "count" => AnswerKind::Number,
                    _ => return Err(unknown(k, v)),
                };
                if k == "question" {
                    kind = Some(parsed);
                } else {
                    q_attr_kind = Some(parsed);
                }
            }
            "subject" => {
                if let Some(col) = conventions.subject_filters.get(v) {
                    predicates.push(Predicate {
                        column: col.clone(),
                        cmp: Comparator::Eq,
                        value: text(v),
                    });
                    if col.table == "fare" {
                        joins.insert("fare".into());
                    }
                } else if let Some(cols) = conventions.projections.get(v) {
                    if cols.iter().any(|c| c.table == "fare") {
                        joins.insert("fare".into());
                    }
                    subject = Some(v.to_string());
                } else {
                    return Err(unknown(k, v));
                }
            }
            "origin" | "destin" => {
                let code = resolve_city(db, v).ok_or_else(|| unknown(k, v))?;
                let col = if k == "origin" { "from_city" } else { "to_city" };
                predicates.push(Predicate {
                    column: ColumnRef::new("flight", col),
                    cmp: Comparator::Eq,
                    value: Value::Text(code),
                });
            }
            "airline" | "meal" | "aircraft" => predicates.push(Predicate {
                column: ColumnRef::new("flight", k),
                cmp: Comparator::Eq,
                value: text(v),
            }),
            "depart-time" => {
                let &(from, to) = conventions.intervals.get(v).ok_or_else(|| unknown(k, v))?;
                let col = ColumnRef::new("flight", "depart_min");
                predicates.push(Predicate {
                    column: col.clone(),
                    cmp: Comparator::Ge,
                    value: Value::Int(from),
                });
                predicates.push(Predicate {
                    column: col,
                    cmp: Comparator::Lt,
                    value: Value::Int(to),
                });
            }
            "fare" => {
                joins.insert("fare".into());
                predicates.push(Predicate {
                    column: ColumnRef::new("fare", "fare_class"),
                    cmp: Comparator::Eq,
                    value: text(v),
                });
            }
            "operator" => {
                let (kind, column) = match v {
                    "minimum" => (AggregateKind::Minimum, ColumnRef::new("fare", "one_way_cost")),
                    "maximum" => (AggregateKind::Maximum, ColumnRef::new("fare", "one_way_cost")),
                    "earliest" => (AggregateKind::Minimum, ColumnRef::new("flight", "depart_min")),
                    "latest" => (AggregateKind::Maximum, ColumnRef::new("flight", "depart_min")),
                    _ => return Err(unknown(k, v)),
                };
                if column.table == "fare" {
                    joins.insert("fare".into());
                }
                aggregate = Some(Aggregate { kind, column });
            }
            _ => return Err(unknown(k, v)),
        }
    }

    let subject = subject.unwrap_or_else(|| DEFAULT_SUBJECT.to_string());
    let projection = conventions.projections[&subject].clone();
    let plan = QueryPlan {
        subject,
        joins: joins.into_iter().collect(),
        predicates,
        projection,
        aggregate,
        kind: q_attr_kind.or(kind).unwrap_or(AnswerKind::Rows),
    };
    check_plan(&plan, db)?;
    Ok(plan)
}

fn check_plan(plan: &QueryPlan, db: &MiniDb) -> Result<()> {
    let visible = |c: &ColumnRef| {
        (c.table == "flight" || plan.joins.contains(&c.table))
            && db.table(&c.table).and_then(|t| t.column_type(&c.column)).is_some()
    };
    let cols = plan
        .projection
        .iter()
        .chain(plan.predicates.iter().map(|p| &p.column))
        .chain(plan.aggregate.iter().map(|a| &a.column));
    for c in cols {
        if !visible(c) {
            return Err(Error::Database(format!("plan references unavailable column {c}")));
        }
    }
    if let Some(a) = &plan.aggregate {
        if db.expect(&a.column.table).column_type(&a.column.column) != Some(ColumnType::Int) {
            return Err(Error::Database(format!("aggregate over non-numeric column {}", a.column)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Rows(Vec<Vec<Value>>),
    Number(i64),
    Boolean(bool),
}

impl Answer {
    pub fn kind(&self) -> AnswerKind {
        match self {
            Answer::Rows(_) => AnswerKind::Rows,
            Answer::Number(_) => AnswerKind::Number,
            Answer::Boolean(_) => AnswerKind::Boolean,
        }
    }

    /// Tab-separated rows, one per line; `(no rows)` when empty.
    pub fn render(&self) -> String {
        match self {
            Answer::Rows(rows) if rows.is_empty() => "(no rows)\n".to_string(),
            Answer::Rows(rows) => {
                let mut s = String::new();
                for r in rows {
                    let cells: Vec<String> = r.iter().map(Value::to_string).collect();
                    let _ = writeln!(s, "{}", cells.join("\t"));
                }
                s
            }
            Answer::Number(n) => format!("{n}\n"),
            Answer::Boolean(b) => format!("{}\n", if *b { "yes" } else { "no" }),
        }
    }

    /// Reference block body: the kind plus its payload lines.
    pub fn parse(kind: AnswerKind, lines: &[&str]) -> Result<Self> {
        let bad = |msg: String| Error::Invalid(format!("reference answer: {msg}"));
        match kind {
            AnswerKind::Rows => Ok(Answer::Rows(
                lines
                    .iter()
                    .map(|l| l.split('\t').map(|f| Value::infer(f.trim())).collect())
                    .collect(),
            )),
            AnswerKind::Number => match lines {
                [n] => n.trim().parse().map(Answer::Number).map_err(|_| bad(format!("bad number `{n}`"))),
                _ => Err(bad("a number answer has exactly one line".into())),
            },
            AnswerKind::Boolean => match lines {
                [b] if b.trim() == "yes" => Ok(Answer::Boolean(true)),
                [b] if b.trim() == "no" => Ok(Answer::Boolean(false)),
                _ => Err(bad("a boolean answer is one `yes` or `no` line".into())),
            },
        }
    }
}

/// Combined row over `flight` and (when linked) one `fare` row.
struct JoinedRow<'a> {
    flight: &'a [Value],
    fare: Option<&'a [Value]>,
}

impl JoinedRow<'_> {
    fn get(&self, db: &MiniDb, c: &ColumnRef) -> &Value {
        let row = if c.table == "fare" {
            self.fare.expect("fare column on a linked row")
        } else {
            self.flight
        };
        &row[db.expect(&c.table).column(&c.column).expect("checked column")]
    }
}

/// Rows come out in primary-key order with duplicates removed after
/// projection; an aggregate keeps every row that reaches the extremum.
pub fn execute(plan: &QueryPlan, db: &MiniDb) -> Answer {
    let flights = db.expect("flight");
    let fares = db.expect("fare");
    let linked = plan.joins.iter().any(|j| j == "fare");
    let mut rows: Vec<JoinedRow> = Vec::new();
    for f in &flights.rows {
        if linked {
            for fare in fares.rows.iter().filter(|fare| fare[1] == f[0]) {
                rows.push(JoinedRow {
                    flight: f,
                    fare: Some(fare),
                });
            }
        } else {
            rows.push(JoinedRow { flight: f, fare: None });
        }
    }
    rows.retain(|r| plan.predicates.iter().all(|p| p.cmp.holds(r.get(db, &p.column), &p.value)));
    if let Some(agg) = &plan.aggregate {
        let values = rows.iter().map(|r| r.get(db, &agg.column));
        let extreme = match agg.kind {
            AggregateKind::Minimum => values.min(),
            AggregateKind::Maximum => values.max(),
        }
        .cloned();
        if let Some(e) = extreme {
            rows.retain(|r| *r.get(db, &agg.column) == e);
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in &rows {
        let projected: Vec<Value> = plan.projection.iter().map(|c| r.get(db, c).clone()).collect();
        if seen.insert(projected.clone()) {
            out.push(projected);
        }
    }
    match plan.kind {
        AnswerKind::Rows => Answer::Rows(out),
        AnswerKind::Number => Answer::Number(out.len() as i64),
        AnswerKind::Boolean => Answer::Boolean(!out.is_empty()),
    }
}

fn value_sets(rows: &[Vec<Value>]) -> Vec<BTreeSet<String>> {
    rows.iter().map(|r| r.iter().map(Value::to_string).collect()).collect()
}

/// Correct when the answer holds all the information of the minimal
/// reference and nothing beyond the maximal one. Rows are compared as
/// value sets: every minimal row must be contained in some answer row and
/// every answer row in some maximal row.
pub fn score_answer(answer: &Answer, minimal: &Answer, maximal: &Answer) -> bool {
    match (answer, minimal, maximal) {
        (Answer::Rows(a), Answer::Rows(lo), Answer::Rows(hi)) => {
            let (a, lo, hi) = (value_sets(a), value_sets(lo), value_sets(hi));
            lo.iter().all(|m| a.iter().any(|r| m.is_subset(r))) && a.iter().all(|r| hi.iter().any(|m| r.is_subset(m)))
        }
        (Answer::Number(a), Answer::Number(lo), Answer::Number(hi)) => lo == a && a == hi,
        (Answer::Boolean(a), Answer::Boolean(lo), Answer::Boolean(hi)) => lo == a && a == hi,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DB: &str = "chronus-db v1
[table flight]
flight_id:int\tairline:text\tnumber:int\tfrom_city:text\tto_city:text\tdepart_min:int\tarrive_min:int\taircraft:text\tmeal:text
1\tAA\t101\tBBOS\tDDFW\t480\t720\tM80\tbreakfast
2\tDL\t202\tBBOS\tDDFW\t1230\t1400\tB737\tnone
3\tUA\t303\tMATL\tBBOS\t600\t780\tB737\tlunch
[table fare]
fare_id:int\tflight_id:int\tone_way_cost:int\tfare_class:text
1\t1\t300\tcoach
2\t2\t250\tcoach
3\t2\t600\tfirst
4\t3\t250\tcoach
[table city]
city_code:text\tcity_name:text
BBOS\tBOSTON
DDFW\tDALLAS
MATL\tATLANTA
[table airport]
airport_code:text\tcity_code:text
ATL\tMATL
BOS\tBBOS
DFW\tDDFW
";

    const CONV: &str = "\
[interval]
morning\t0\t720
late-evening\t1200\t1440
[projection]
flight\tflight.airline flight.number flight.depart_min flight.arrive_min
fare\tflight.airline flight.number fare.one_way_cost fare.fare_class
[subject-filter]
breakfast\tflight.meal
";

    fn run(t: &str) -> (QueryPlan, Answer) {
        let db = MiniDb::parse(DB).unwrap();
        let conv = Conventions::parse(CONV).unwrap();
        let plan = plan_query(&Template::parse(t).unwrap(), &db, &conv).unwrap();
        let ans = execute(&plan, &db);
        (plan, ans)
    }

    fn rows(s: &[&str]) -> Answer {
        Answer::parse(AnswerKind::Rows, s).unwrap()
    }

    #[test]
    fn destination_filter() {
        let (plan, ans) = run("(question,display) (subject,flight) (destin,BBOS)");
        assert_eq!(plan.subject, "flight");
        assert!(plan.joins.is_empty());
        assert_eq!(plan.predicates.len(), 1);
        assert_eq!(ans, rows(&["UA\t303\t600\t780"]));
    }

    #[test]
    fn default_subject_and_empty_result() {
        let (plan, ans) = run("(origin,DALLAS)");
        assert_eq!(plan.subject, DEFAULT_SUBJECT);
        assert_eq!(ans, Answer::Rows(vec![]));
        let (_, all) = run("(question,display)");
        assert!(matches!(all, Answer::Rows(r) if r.len() == 3));
    }

    #[test]
    fn cheapest_keeps_ties() {
        let (plan, ans) = run("(question,display) (subject,fare) (operator,minimum)");
        assert_eq!(plan.joins, vec!["fare".to_string()]);
        assert_eq!(ans, rows(&["DL\t202\t250\tcoach", "UA\t303\t250\tcoach"]));
        let (_, ans) = run("(question,display) (subject,fare) (origin,BBOS) (operator,minimum)");
        assert_eq!(ans, rows(&["DL\t202\t250\tcoach"]));
        assert!(plan.to_sql().contains("MIN(fare.one_way_cost)"));
    }

    #[test]
    fn yes_no_and_count() {
        let (plan, ans) = run("(question,yes-no) (subject,breakfast)");
        assert_eq!(plan.kind, AnswerKind::Boolean);
        assert_eq!(ans, Answer::Boolean(true));
        let (_, ans) = run("(question,count) (origin,BBOS) (depart-time,late-evening)");
        assert_eq!(ans, Answer::Number(1));
        let (_, ans) = run("(question,yes-no) (origin,ATL) (meal,breakfast)");
        assert_eq!(ans, Answer::Boolean(false));
    }

    #[test]
    fn unknown_tokens() {
        let db = MiniDb::parse(DB).unwrap();
        let conv = Conventions::parse(CONV).unwrap();
        let err = plan_query(&Template::parse("(destin,GOTHAM)").unwrap(), &db, &conv).unwrap_err();
        assert_eq!(
            err,
            Error::UnknownKeyword {
                keyword: "destin".into(),
                value: "GOTHAM".into()
            }
        );
        assert!(plan_query(&Template::parse("(weather,sunny)").unwrap(), &db, &conv).is_err());
    }

    #[test]
    fn scoring() {
        let min = rows(&["AA\t101"]);
        let max = rows(&["AA\t101\t480\t720\tM80", "DL\t202\t1230\t1400"]);
        assert!(score_answer(&min, &min, &min));
        assert!(score_answer(&rows(&["101\tAA\t480"]), &min, &max));
        assert!(score_answer(&rows(&["AA\t101", "DL\t202"]), &min, &max));
        assert!(!score_answer(&rows(&["DL\t202"]), &min, &max));
        assert!(!score_answer(&rows(&["AA\t101\tlunch"]), &min, &max));
        assert!(!score_answer(&Answer::Number(1), &min, &max));
        assert!(score_answer(&Answer::Boolean(true), &Answer::Boolean(true), &Answer::Boolean(true)));
    }
}
