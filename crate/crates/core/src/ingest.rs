//! CSV loading, schema-driven discretization and transaction encoding.
//!
//! Schemas are TOML files. Top-level keys:
//!
//! ```toml
//! name = "example"
//! target = "Final_grade"
//! delimiter = ";"          # optional, default ","
//! drop = ["school"]        # source columns ignored on purpose
//! missing = ["", "?"]      # optional, tokens treated as missing
//!
//! [[attribute]]
//! name = "Sex"             # item attribute name
//! column = "sex"           # source column, defaults to `name`
//! kind = "categorical"
//! values = ["F", "M"]      # accepted raw values
//! labels = ["Female", "Male"]  # optional item values, same length
//!
//! [[attribute]]
//! name = "Age"
//! column = "age"
//! kind = "numeric"
//! edges = [0, 18, 100]     # bins [0,18) and [18,100]
//! labels = ["<18", ">=18"]
//! ```
//!
//! Numeric bins are left-closed; the last bin is also closed on the right.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{TransactionDb, TransactionDbBuilder};

#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub n_source_rows: usize,
}

impl RawTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Appends the rows of `other`, which must share this header.
    pub fn append(&mut self, other: RawTable) -> Result<()> {
        if other.header != self.header {
            return Err(Error::Schema(format!(
                "cannot merge tables with headers {:?} and {:?}",
                self.header, other.header
            )));
        }
        self.n_source_rows += other.n_source_rows;
        self.rows.extend(other.rows);
        Ok(())
    }
}

pub fn parse_csv(text: &str, delimiter: u8) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(h) => h?.iter().map(|s| s.trim().to_string()).collect(),
        None => return Err(Error::MissingHeader),
    };
    if header.iter().all(String::is_empty) {
        return Err(Error::MissingHeader);
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                row: i + 1,
                expected: header.len(),
                got: rec.len(),
            });
        }
        rows.push(rec.iter().map(|s| s.trim().to_string()).collect());
    }
    Ok(RawTable {
        n_source_rows: rows.len(),
        header,
        rows,
    })
}

/// Reads a delimited file with a header row. Row indices in errors are
/// 1-based data rows.
pub fn load_csv(path: impl AsRef<Path>, delimiter: u8) -> Result<RawTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, delimiter)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical {
        values: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Numeric {
        edges: Vec<f64>,
        labels: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(flatten)]
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub drop: bool,
}

impl AttributeSpec {
    pub fn column(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }

    /// Item labels this attribute can produce.
    pub fn labels(&self) -> &[String] {
        match &self.kind {
            AttributeKind::Categorical { values, labels } => labels.as_deref().unwrap_or(values),
            AttributeKind::Numeric { labels, .. } => labels,
        }
    }

    /// Maps one raw cell to its item label.
    pub fn map(&self, cell: &str) -> Option<&str> {
        match &self.kind {
            AttributeKind::Categorical { values, labels } => {
                let i = values.iter().position(|v| v == cell)?;
                Some(labels.as_ref().map_or(values[i].as_str(), |l| l[i].as_str()))
            }
            AttributeKind::Numeric { edges, labels } => {
                let x: f64 = cell.parse().ok()?;
                let last = edges.len() - 1;
                if !(x >= edges[0] && x <= edges[last]) {
                    return None;
                }
                let bin = edges[1..last].iter().take_while(|&&e| x >= e).count();
                Some(labels[bin].as_str())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Schema(format!("attribute {}: {msg}", self.name)));
        match &self.kind {
            AttributeKind::Categorical { values, labels } => {
                if values.is_empty() {
                    return bad("no categories".into());
                }
                if values.iter().collect::<HashSet<_>>().len() != values.len() {
                    return bad("duplicate categories".into());
                }
                if let Some(l) = labels {
                    if l.len() != values.len() {
                        return bad(format!("{} labels for {} values", l.len(), values.len()));
                    }
                }
            }
            AttributeKind::Numeric { edges, labels } => {
                if edges.len() < 2 || labels.len() != edges.len() - 1 {
                    return bad(format!("{} edges need {} labels", edges.len(), edges.len().saturating_sub(1)));
                }
                if !edges.windows(2).all(|w| w[0] < w[1]) {
                    return bad("bin edges must be strictly increasing".into());
                }
                if labels.iter().collect::<HashSet<_>>().len() != labels.len() {
                    return bad("duplicate bin labels".into());
                }
            }
        }
        Ok(())
    }
}

fn default_delimiter() -> String {
    ",".into()
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "?".into(), "NA".into()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub name: String,
    pub target: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default)]
    pub drop: Vec<String>,
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
    #[serde(rename = "attribute")]
    pub attributes: Vec<AttributeSpec>,
}

impl Schema {
    pub fn from_toml(text: &str) -> Result<Schema> {
        let schema: Schema = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Schema> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for a in &self.attributes {
            if !names.insert(a.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute {}", a.name)));
            }
            a.validate()?;
        }
        if !self.retained().any(|a| a.name == self.target) {
            return Err(Error::Schema(format!("target {} is not a retained attribute", self.target)));
        }
        self.delimiter_byte()?;
        Ok(())
    }

    pub fn delimiter_byte(&self) -> Result<u8> {
        match self.delimiter.as_bytes() {
            [b] => Ok(*b),
            _ if self.delimiter == "\\t" => Ok(b'\t'),
            _ => Err(Error::Schema(format!("delimiter {:?} is not one byte", self.delimiter))),
        }
    }

    pub fn retained(&self) -> impl Iterator<Item = &AttributeSpec> {
        self.attributes.iter().filter(|a| !a.drop)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Retained attributes other than the target.
    pub fn features(&self) -> Vec<&str> {
        self.retained()
            .filter(|a| a.name != self.target)
            .map(|a| a.name.as_str())
            .collect()
    }

    /// Every column categorical with its observed values; used for tables
    /// that are already discretized.
    pub fn infer(raw: &RawTable, target: &str) -> Result<Schema> {
        let missing = default_missing();
        let attributes = raw
            .header
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let mut values: Vec<String> = Vec::new();
                for row in &raw.rows {
                    if !missing.contains(&row[c]) && !values.contains(&row[c]) {
                        values.push(row[c].clone());
                    }
                }
                values.sort();
                AttributeSpec {
                    name: name.clone(),
                    column: None,
                    kind: AttributeKind::Categorical { values, labels: None },
                    drop: false,
                }
            })
            .collect();
        let schema = Schema {
            name: "inferred".into(),
            target: target.into(),
            delimiter: default_delimiter(),
            drop: Vec::new(),
            missing,
            attributes,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Schema of the already-encoded form written by [`write_db_csv`].
    pub fn encoded(&self) -> Schema {
        Schema {
            name: format!("{}-encoded", self.name),
            target: self.target.clone(),
            delimiter: default_delimiter(),
            drop: Vec::new(),
            missing: Vec::new(),
            attributes: self
                .retained()
                .map(|a| AttributeSpec {
                    name: a.name.clone(),
                    column: None,
                    kind: AttributeKind::Categorical {
                        values: a.labels().to_vec(),
                        labels: None,
                    },
                    drop: false,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dataset {
    Dataset1,
    Dataset2,
}

impl std::str::FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataset1" => Ok(Dataset::Dataset1),
            "dataset2" => Ok(Dataset::Dataset2),
            other => Err(Error::UnknownDataset(other.into())),
        }
    }
}

const DATASET1: &str = include_str!("../schemas/dataset1.toml");
const DATASET2: &str = include_str!("../schemas/dataset2.toml");

pub fn builtin_schema(dataset: Dataset) -> Schema {
    let text = match dataset {
        Dataset::Dataset1 => DATASET1,
        Dataset::Dataset2 => DATASET2,
    };
    Schema::from_toml(text).expect("built-in schema is valid")
}

/// Looks up a built-in schema by tag.
pub fn builtin_schema_by_name(tag: &str) -> Result<Schema> {
    Ok(builtin_schema(tag.parse()?))
}

/// Counts of what preprocessing removed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PreprocessStats {
    pub source_rows: usize,
    pub missing_rows: usize,
    pub duplicate_rows: usize,
    pub kept_rows: usize,
}

pub fn preprocess(raw: &RawTable, schema: &Schema) -> Result<TransactionDb> {
    preprocess_with_stats(raw, schema).map(|(db, _)| db)
}

/// Removes rows with missing cells, bins and maps every retained column,
/// drops duplicate rows (judged on the retained attributes) and encodes the
/// rest. Dictionary order is first occurrence.
pub fn preprocess_with_stats(raw: &RawTable, schema: &Schema) -> Result<(TransactionDb, PreprocessStats)> {
    schema.validate()?;
    let attrs: Vec<&AttributeSpec> = schema.retained().collect();
    let mut cols = Vec::with_capacity(attrs.len());
    for a in &attrs {
        let c = raw
            .column(a.column())
            .ok_or_else(|| Error::Schema(format!("column {} not found in input", a.column())))?;
        cols.push(c);
    }
    let covered: HashSet<&str> = schema
        .attributes
        .iter()
        .map(|a| a.column())
        .chain(schema.drop.iter().map(String::as_str))
        .collect();
    if let Some(extra) = raw.header.iter().find(|h| !covered.contains(h.as_str())) {
        return Err(Error::Schema(format!("column {extra} is neither mapped nor dropped")));
    }

    let mut stats = PreprocessStats {
        source_rows: raw.rows.len(),
        ..Default::default()
    };
    let mut builder = TransactionDbBuilder::with_attributes(attrs.iter().map(|a| a.name.clone()));
    let mut seen: HashSet<Vec<&str>> = HashSet::new();
    for (r, row) in raw.rows.iter().enumerate() {
        if cols.iter().any(|&c| schema.missing.contains(&row[c])) {
            stats.missing_rows += 1;
            continue;
        }
        let mut mapped = Vec::with_capacity(attrs.len());
        for (a, &c) in attrs.iter().zip(&cols) {
            let v = a.map(&row[c]).ok_or_else(|| Error::OutOfDomain {
                attribute: a.name.clone(),
                row: r + 1,
                value: row[c].clone(),
            })?;
            mapped.push(v);
        }
        if !seen.insert(mapped.clone()) {
            stats.duplicate_rows += 1;
            continue;
        }
        builder.push_row(&mapped)?;
    }
    let db = builder.build(Some(&schema.target))?;
    stats.kept_rows = db.n_rows();
    Ok((db, stats))
}

/// Loads every file with the schema's delimiter, unions the rows and preprocesses.
pub fn load_and_preprocess<P: AsRef<Path>>(paths: &[P], schema: &Schema) -> Result<(TransactionDb, PreprocessStats)> {
    let delim = schema.delimiter_byte()?;
    let mut tables = paths.iter().map(|p| load_csv(p, delim));
    let mut raw = tables
        .next()
        .ok_or_else(|| Error::InvalidArgument("no input files".into()))??;
    for t in tables {
        raw.append(t?)?;
    }
    preprocess_with_stats(&raw, schema)
}

/// Writes the encoded rows back out as a comma-separated table, one column
/// per attribute, readable with [`Schema::encoded`].
pub fn write_db_csv<W: Write>(db: &TransactionDb, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(db.attributes())?;
    let mut cells = vec![String::new(); db.attributes().len()];
    for t in db.transactions() {
        cells.iter_mut().for_each(String::clear);
        for &i in t.items() {
            cells[db.attribute_of(i)].push_str(&db.item(i)?.value);
        }
        w.write_record(&cells)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn db_to_csv_string(db: &TransactionDb) -> Result<String> {
    let mut buf = Vec::new();
    write_db_csv(db, &mut buf)?;
    Ok(String::from_utf8(buf).expect("encoded table is UTF-8"))
}
