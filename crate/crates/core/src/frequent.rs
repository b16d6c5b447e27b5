use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Itemset, Thresholds, TransactionDb};
use crate::{apriori, faster, fpgrowth};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Apriori,
    FpGrowth,
    Faster,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Apriori, Algorithm::FpGrowth, Algorithm::Faster];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Apriori => "apriori",
            Algorithm::FpGrowth => "fpgrowth",
            Algorithm::Faster => "faster",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "apriori" => Ok(Algorithm::Apriori),
            "fptree" | "fpgrowth" | "fp-growth" => Ok(Algorithm::FpGrowth),
            "faster" => Ok(Algorithm::Faster),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Shape of the reduced database at the start of one mining iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub level: usize,
    pub rows: usize,
    pub items: usize,
    pub total_length: usize,
}

/// Identifies one Faster Apriori job so its prefilter report and output can
/// be matched up later.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobTag {
    pub db_fingerprint: String,
    pub min_prob_bits: u64,
}

/// Output of any miner: every itemset meeting the support floor, with its
/// raw count against the original row count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequentItemsets {
    pub algorithm: Algorithm,
    pub by_level: BTreeMap<usize, Vec<(Itemset, u64)>>,
    pub n_rows: usize,
    pub min_support: f64,
    pub candidate_count: u64,
    pub iteration_count: usize,
    pub db_fingerprint: String,
    /// Per-iteration shape of the reduced database (Faster Apriori only).
    pub reduction: Vec<ReductionStep>,
    pub job: Option<JobTag>,
}

impl FrequentItemsets {
    pub(crate) fn new(algorithm: Algorithm, db: &TransactionDb, min_support: f64) -> Self {
        FrequentItemsets {
            algorithm,
            by_level: BTreeMap::new(),
            n_rows: db.n_rows(),
            min_support,
            candidate_count: 0,
            iteration_count: 0,
            db_fingerprint: db.fingerprint().to_string(),
            reduction: Vec::new(),
            job: None,
        }
    }

    /// Stores one level, sorted into canonical order. Empty levels are skipped.
    pub(crate) fn insert_level(&mut self, level: usize, mut sets: Vec<(Itemset, u64)>) {
        if sets.is_empty() {
            return;
        }
        sets.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        self.by_level.insert(level, sets);
    }

    /// Total number of frequent itemsets (the `m` of the complexity analysis).
    pub fn len(&self) -> usize {
        self.by_level.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn level(&self, k: usize) -> &[(Itemset, u64)] {
        self.by_level.get(&k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn max_level(&self) -> usize {
        self.by_level.keys().next_back().copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Itemset, u64)> {
        self.by_level.values().flatten()
    }

    pub fn counts(&self) -> HashMap<&Itemset, u64> {
        self.iter().map(|(s, c)| (s, *c)).collect()
    }

    /// Itemsets and counts only, ignoring counters and provenance.
    pub fn same_itemsets(&self, other: &FrequentItemsets) -> bool {
        self.n_rows == other.n_rows && self.by_level == other.by_level
    }

    /// Keeps only itemsets with support at or above `min_support`.
    pub fn restricted_to(&self, min_support: f64) -> FrequentItemsets {
        let floor = crate::types::min_count(min_support, self.n_rows).max(1);
        let mut out = self.clone();
        out.min_support = min_support;
        out.by_level = self
            .by_level
            .iter()
            .map(|(&k, sets)| {
                let kept: Vec<_> = sets.iter().filter(|(_, c)| *c >= floor).cloned().collect();
                (k, kept)
            })
            .filter(|(_, v)| !v.is_empty())
            .collect();
        out
    }
}

/// Runs the chosen miner at the thresholds' mining floor.
pub fn mine(db: &TransactionDb, algorithm: Algorithm, thresholds: &Thresholds) -> Result<FrequentItemsets> {
    thresholds.validate()?;
    let floor = thresholds.mining_floor();
    match algorithm {
        Algorithm::Apriori => apriori::mine_frequent_apriori(db, floor),
        Algorithm::FpGrowth => fpgrowth::mine_fpgrowth(db, floor),
        Algorithm::Faster => faster::mine_frequent_faster(db, thresholds),
    }
}

/// Prefix join of sorted level-(k-1) itemsets followed by the subset prune.
/// `prev` must be sorted; returned candidates are sorted.
pub(crate) fn join_and_prune(prev: &[(Itemset, u64)]) -> Vec<Itemset> {
    let known: std::collections::HashSet<&[crate::types::ItemId]> =
        prev.iter().map(|(s, _)| s.items()).collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < prev.len() {
        let k1 = prev[start].0.len();
        let prefix = &prev[start].0.items()[..k1 - 1];
        let mut end = start + 1;
        while end < prev.len() && &prev[end].0.items()[..k1 - 1] == prefix {
            end += 1;
        }
        for i in start..end {
            for j in (i + 1)..end {
                let mut cand = prev[i].0.items().to_vec();
                cand.push(prev[j].0.items()[k1 - 1]);
                if all_subsets_known(&cand, &known) {
                    out.push(Itemset::from_sorted(cand));
                }
            }
        }
        start = end;
    }
    out
}

/// Checks the (k-1)-subsets that drop one of the first k-2 items; the two
/// generating parents are known by construction.
pub(crate) fn all_subsets_known(
    cand: &[crate::types::ItemId],
    known: &std::collections::HashSet<&[crate::types::ItemId]>,
) -> bool {
    let k = cand.len();
    if k <= 2 {
        return true;
    }
    let mut buf = Vec::with_capacity(k - 1);
    for skip in 0..(k - 2) {
        buf.clear();
        buf.extend(cand.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x));
        if !known.contains(buf.as_slice()) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ItemId;

    fn set(v: &[u32]) -> (Itemset, u64) {
        (Itemset::new(v.iter().map(|&i| ItemId(i))), 1)
    }

    #[test]
    fn join_produces_pruned_candidates() {
        // {0,1},{0,2},{1,2},{1,3}: {0,1,2} survives, {1,2,3} needs {2,3}.
        let prev = vec![set(&[0, 1]), set(&[0, 2]), set(&[1, 2]), set(&[1, 3])];
        let cands = join_and_prune(&prev);
        assert_eq!(cands, vec![Itemset::new([ItemId(0), ItemId(1), ItemId(2)])]);
    }

    #[test]
    fn join_of_singletons_is_all_pairs() {
        let prev = vec![set(&[0]), set(&[2]), set(&[5])];
        assert_eq!(join_and_prune(&prev).len(), 3);
    }

    #[test]
    fn algorithm_names_parse() {
        assert_eq!("fptree".parse::<Algorithm>().unwrap(), Algorithm::FpGrowth);
        assert_eq!("faster".parse::<Algorithm>().unwrap(), Algorithm::Faster);
        assert!("eclat".parse::<Algorithm>().is_err());
    }
}
