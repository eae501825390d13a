use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lexicon::strip_comment;

pub const DB_HEADER: &str = "chronus-db v1";
pub const MINUTES_PER_DAY: i64 = 1440;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Text(String),
}

impl Value {
    /// Integer when the text parses as one.
    pub fn infer(s: &str) -> Value {
        s.parse().map(Value::Int).unwrap_or_else(|_| Value::Text(s.to_string()))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Text(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Int,
    Text,
}

impl ColumnType {
    fn name(self) -> &'static str {
        match self {
            ColumnType::Int => "int",
            ColumnType::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(String, ColumnType)>,
    /// Sorted by the first column, which is the primary key.
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(c, _)| c == name)
    }

    pub fn column_type(&self, name: &str) -> Option<ColumnType> {
        self.columns.iter().find(|(c, _)| c == name).map(|(_, t)| *t)
    }

    /// Row whose primary key equals `key`.
    pub fn lookup(&self, key: &Value) -> Option<&[Value]> {
        self.rows
            .binary_search_by(|r| r[0].cmp(key))
            .ok()
            .map(|i| self.rows[i].as_slice())
    }
}

/// The fixed schema the query planner compiles against.
pub const SCHEMA: &[(&str, &[(&str, ColumnType)])] = &[
    (
        "flight",
        &[
            ("flight_id", ColumnType::Int),
            ("airline", ColumnType::Text),
            ("number", ColumnType::Int),
            ("from_city", ColumnType::Text),
            ("to_city", ColumnType::Text),
            ("depart_min", ColumnType::Int),
            ("arrive_min", ColumnType::Int),
            ("aircraft", ColumnType::Text),
            ("meal", ColumnType::Text),
        ],
    ),
    (
        "fare",
        &[
            ("fare_id", ColumnType::Int),
            ("flight_id", ColumnType::Int),
            ("one_way_cost", ColumnType::Int),
            ("fare_class", ColumnType::Text),
        ],
    ),
    ("city", &[("city_code", ColumnType::Text), ("city_name", ColumnType::Text)]),
    ("airport", &[("airport_code", ColumnType::Text), ("city_code", ColumnType::Text)]),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniDb {
    tables: BTreeMap<String, Table>,
}

impl MiniDb {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    pub(crate) fn expect(&self, name: &str) -> &Table {
        &self.tables[name]
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.tables.values()
    }

    /// `[table <name>]` sections; the first line of a section names the
    /// columns as `name:type`, the rest are tab-separated rows.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == DB_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected `{DB_HEADER}` header"))),
        }
        let mut tables: BTreeMap<String, Table> = BTreeMap::new();
        let mut current: Option<(String, bool)> = None;
        for (i, raw) in lines {
            let lineno = i + 1;
            let line = strip_comment(raw);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(h) = line.trim().strip_prefix("[table ").and_then(|h| h.strip_suffix(']')) {
                let name = h.trim().to_string();
                if tables.contains_key(&name) {
                    return Err(Error::parse(lineno, format!("table `{name}` defined twice")));
                }
                tables.insert(
                    name.clone(),
                    Table {
                        name: name.clone(),
                        columns: Vec::new(),
                        rows: Vec::new(),
                    },
                );
                current = Some((name, false));
                continue;
            }
            let Some((name, has_header)) = current.as_mut() else {
                return Err(Error::parse(lineno, "row outside of any table"));
            };
            let table = tables.get_mut(name.as_str()).expect("open table");
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if !*has_header {
                for f in fields {
                    let (col, ty) = f
                        .split_once(':')
                        .ok_or_else(|| Error::parse(lineno, format!("column `{f}` needs a type")))?;
                    let ty = match ty {
                        "int" => ColumnType::Int,
                        "text" => ColumnType::Text,
                        _ => return Err(Error::parse(lineno, format!("unknown column type `{ty}`"))),
                    };
                    table.columns.push((col.to_string(), ty));
                }
                *has_header = true;
                continue;
            }
            if fields.len() != table.columns.len() {
                return Err(Error::parse(
                    lineno,
                    format!("expected {} fields, found {}", table.columns.len(), fields.len()),
                ));
            }
            let mut row = Vec::with_capacity(fields.len());
            for (f, (col, ty)) in fields.iter().zip(&table.columns) {
                row.push(match ty {
                    ColumnType::Int => Value::Int(
                        f.parse()
                            .map_err(|_| Error::parse(lineno, format!("`{col}` must be an integer, got `{f}`")))?,
                    ),
                    ColumnType::Text => Value::Text(f.to_string()),
                });
            }
            table.rows.push(row);
        }
        let db = MiniDb { tables };
        db.validate()?;
        Ok(db)
    }

    fn validate(&self) -> Result<()> {
        for (name, columns) in SCHEMA {
            let table = self
                .tables
                .get(*name)
                .ok_or_else(|| Error::Database(format!("missing table `{name}`")))?;
            let expected: Vec<(String, ColumnType)> = columns.iter().map(|(c, t)| (c.to_string(), *t)).collect();
            if table.columns != expected {
                return Err(Error::Database(format!("table `{name}` does not have the expected columns")));
            }
        }
        let mut sorted = self.tables.clone();
        for table in sorted.values_mut() {
            table.rows.sort_by(|a, b| a[0].cmp(&b[0]));
            if let Some(w) = table.rows.windows(2).find(|w| w[0][0].cmp(&w[1][0]) == Ordering::Equal) {
                return Err(Error::Database(format!("duplicate key {} in `{}`", w[0][0], table.name)));
            }
        }
        if sorted != self.tables {
            return Err(Error::Database("rows must be listed in primary-key order".into()));
        }
        let flight = self.expect("flight");
        for fare in &self.expect("fare").rows {
            if flight.lookup(&fare[1]).is_none() {
                return Err(Error::Database(format!("fare {} references missing flight {}", fare[0], fare[1])));
            }
        }
        let city = self.expect("city");
        for ap in &self.expect("airport").rows {
            if city.lookup(&ap[1]).is_none() {
                return Err(Error::Database(format!("airport {} references missing city {}", ap[0], ap[1])));
            }
        }
        for row in &flight.rows {
            for col in ["depart_min", "arrive_min"] {
                let m = row[flight.column(col).expect("schema")].as_int().expect("int column");
                if !(0..MINUTES_PER_DAY).contains(&m) {
                    return Err(Error::Database(format!("flight {}: {col} {m} outside one day", row[0])));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{DB_HEADER}\n");
        for (name, _) in SCHEMA {
            let t = self.expect(name);
            let _ = writeln!(s, "[table {name}]");
            let header: Vec<String> = t.columns.iter().map(|(c, ty)| format!("{c}:{}", ty.name())).collect();
            let _ = writeln!(s, "{}", header.join("\t"));
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(Value::to_string).collect();
                let _ = writeln!(s, "{}", cells.join("\t"));
            }
        }
        s
    }
}
