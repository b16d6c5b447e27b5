//! Shipped hand-checkable fixtures and the naive counting oracle.
//!
//! Each fixture is a small CSV whose columns are attributes and whose cells
//! are already categorical. The side file `<name>.expected.csv` lists the
//! count of every itemset that occurs in at least one row, computed by an
//! exhaustive scan outside this crate (`fixtures/gen_expected.py`).

use crate::error::{Error, Result};
use crate::ingest::parse_csv;
use crate::types::{Itemset, TransactionDb, TransactionDbBuilder};

/// Rows of `db` containing every item of `itemset`: one pass, one membership
/// probe per item per row, no indexing or ordering assumptions.
pub fn naive_count(db: &TransactionDb, itemset: &Itemset) -> u64 {
    let mut n = 0;
    for t in db.transactions() {
        if itemset.items().iter().all(|i| t.items().iter().any(|x| x == i)) {
            n += 1;
        }
    }
    n
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub csv: &'static str,
    pub expected_csv: &'static str,
    pub target: Option<&'static str>,
}

macro_rules! fixture {
    ($name:literal, $target:expr) => {
        Fixture {
            name: $name,
            csv: include_str!(concat!("../fixtures/", $name, ".csv")),
            expected_csv: include_str!(concat!("../fixtures/", $name, ".expected.csv")),
            target: $target,
        }
    };
}

/// Five rows over A, B, C, D for the basic measures.
pub fn measure5() -> Fixture {
    fixture!("measure5", None)
}

/// 25 rows with sup(X)=0.4, sup(Y)=0.6, sup(XY)=0.36.
pub fn cpir25() -> Fixture {
    fixture!("cpir25", None)
}

/// Class is determined by Shape alone.
pub fn separable() -> Fixture {
    fixture!("separable", Some("Class"))
}

/// Items a2, a3, b3, b4, c2, c3, c4 are infrequent at support 0.3, and three
/// rows hold nothing else.
pub fn pruning() -> Fixture {
    fixture!("pruning", None)
}

pub fn all() -> Vec<Fixture> {
    vec![measure5(), cpir25(), separable(), pruning()]
}

impl Fixture {
    /// The fixture as a database: every column an attribute, rows kept
    /// verbatim (duplicates included).
    pub fn db(&self) -> Result<TransactionDb> {
        let raw = parse_csv(self.csv, b',')?;
        let mut b = TransactionDbBuilder::with_attributes(raw.header.iter().cloned());
        for row in &raw.rows {
            b.push_row(row)?;
        }
        b.build(self.target)
    }

    /// `(itemset, count)` pairs from the side file, resolved against `db`.
    pub fn expected(&self, db: &TransactionDb) -> Result<Vec<(Itemset, u64)>> {
        let raw = parse_csv(self.expected_csv, b',')?;
        let mut out = Vec::with_capacity(raw.rows.len());
        for row in &raw.rows {
            let mut ids = Vec::new();
            for token in row[0].split(" & ").filter(|t| !t.is_empty()) {
                let (a, v) = token
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidArgument(format!("bad item {token:?}")))?;
                ids.push(
                    db.id_of(a, v)
                        .ok_or_else(|| Error::InvalidArgument(format!("unknown item {token:?}")))?,
                );
            }
            let count = row[1]
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad count {:?}", row[1])))?;
            out.push((Itemset::new(ids), count));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_itemset_counts_every_row() {
        let db = measure5().db().unwrap();
        assert_eq!(naive_count(&db, &Itemset::empty()), 5);
    }

    #[test]
    fn singleton_matches_dictionary_frequency() {
        let db = measure5().db().unwrap();
        let counts = db.item_counts();
        for (id, _) in db.items() {
            assert_eq!(naive_count(&db, &Itemset::new([id])), counts[id.index()]);
        }
    }
}
