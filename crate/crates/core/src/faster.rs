//! Faster Apriori: a probability prefilter over single items and item pairs,
//! followed by level-wise mining over a reduced database that is rebuilt after
//! every level.
//!
//! The reduced database keeps the original row count `N` as the support
//! denominator. After level `k`, items that occur in no frequent `k`-itemset
//! are deleted and rows left empty are dropped. Supports are counted over the
//! reduced rows with per-itemset row bitsets, so each candidate costs one
//! bitwise AND over the surviving rows.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequent::{all_subsets_known, Algorithm, FrequentItemsets, JobTag, ReductionStep};
use crate::types::{min_count, ItemId, Itemset, Thresholds, TransactionDb};

/// Result of the probability prefilter.
#[derive(Clone, Debug)]
pub struct PrefilterReport {
    pub min_prob: f64,
    pub surviving_items: Vec<ItemId>,
    pub removed_items: Vec<ItemId>,
    /// Pairs of surviving items with joint probability at or above `min_prob`.
    pub surviving_pairs: Vec<Itemset>,
    /// Pairs of surviving items excluded from level-2 seeding.
    pub excluded_pairs: u64,
    pub db_reduced: TransactionDb,
    pub rows_before: usize,
    pub rows_after: usize,
    pub job: JobTag,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountingMode {
    #[default]
    Sequential,
    /// Candidates of one level are counted on the rayon pool; results are
    /// merged in candidate order, so output is bit-identical to sequential.
    Parallel,
}

fn job_tag(db: &TransactionDb, min_prob: f64) -> JobTag {
    JobTag {
        db_fingerprint: db.fingerprint().to_string(),
        min_prob_bits: min_prob.to_bits(),
    }
}

/// Co-occurrence counts for pairs of surviving items.
enum PairCounts {
    Dense { slots: usize, counts: Vec<u32> },
    Sparse(HashMap<(u32, u32), u32>),
}

impl PairCounts {
    const DENSE_LIMIT: usize = 2048;

    fn new(slots: usize) -> Self {
        if slots <= Self::DENSE_LIMIT {
            PairCounts::Dense {
                slots,
                counts: vec![0; slots * slots.saturating_sub(1) / 2],
            }
        } else {
            PairCounts::Sparse(HashMap::new())
        }
    }

    #[inline]
    fn offset(slots: usize, a: usize, b: usize) -> usize {
        // Row-major upper triangle, a < b.
        a * (2 * slots - a - 1) / 2 + (b - a - 1)
    }

    fn bump(&mut self, a: usize, b: usize) {
        match self {
            PairCounts::Dense { slots, counts } => counts[Self::offset(*slots, a, b)] += 1,
            PairCounts::Sparse(map) => *map.entry((a as u32, b as u32)).or_default() += 1,
        }
    }

    fn get(&self, a: usize, b: usize) -> u64 {
        match self {
            PairCounts::Dense { slots, counts } => counts[Self::offset(*slots, a, b)] as u64,
            PairCounts::Sparse(map) => map.get(&(a as u32, b as u32)).copied().unwrap_or(0) as u64,
        }
    }
}

/// Removes items with `P_X < min_prob`, scores all pairs of the surviving
/// items, and projects the database onto the surviving items.
pub fn prefilter(db: &TransactionDb, min_prob: f64) -> Result<PrefilterReport> {
    if !(0.0..=1.0).contains(&min_prob) {
        return Err(Error::InvalidArgument(format!(
            "min-prob {min_prob} is not in [0, 1]"
        )));
    }
    let n = db.n_rows();
    let cutoff = min_count(min_prob, n);
    let counts = db.item_counts();
    let (surviving_items, removed_items): (Vec<ItemId>, Vec<ItemId>) = (0..counts.len())
        .map(|i| ItemId(i as u32))
        .partition(|i| counts[i.index()] >= cutoff);

    let mut slot = vec![usize::MAX; counts.len()];
    for (s, i) in surviving_items.iter().enumerate() {
        slot[i.index()] = s;
    }
    let mut pairs = PairCounts::new(surviving_items.len());
    let mut buf = Vec::new();
    for t in db.transactions() {
        buf.clear();
        buf.extend(t.items().iter().map(|i| slot[i.index()]).filter(|&s| s != usize::MAX));
        // Items are ascending, and slots follow item order.
        for (x, &a) in buf.iter().enumerate() {
            for &b in &buf[x + 1..] {
                pairs.bump(a, b);
            }
        }
    }
    let mut surviving_pairs = Vec::new();
    let mut excluded_pairs = 0u64;
    for a in 0..surviving_items.len() {
        for b in (a + 1)..surviving_items.len() {
            if pairs.get(a, b) >= cutoff {
                surviving_pairs.push(Itemset::from_sorted(vec![
                    surviving_items[a],
                    surviving_items[b],
                ]));
            } else {
                excluded_pairs += 1;
            }
        }
    }

    let keep: HashSet<ItemId> = surviving_items.iter().copied().collect();
    let db_reduced = db.project(|i| keep.contains(&i));
    Ok(PrefilterReport {
        min_prob,
        rows_after: db_reduced.n_rows(),
        rows_before: n,
        surviving_items,
        removed_items,
        surviving_pairs,
        excluded_pairs,
        db_reduced,
        job: job_tag(db, min_prob),
    })
}

type Bits = Vec<u64>;

#[inline]
fn popcount(bits: &[u64]) -> u64 {
    bits.iter().map(|w| w.count_ones() as u64).sum()
}

#[inline]
fn and(a: &[u64], b: &[u64]) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

#[inline]
fn and_count(a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as u64).sum()
}

/// Drops the rows not listed in `kept` (ascending) and packs the rest.
fn compact(bits: &[u64], kept: &[usize]) -> Bits {
    let mut out = vec![0u64; kept.len().div_ceil(64)];
    for (new, &old) in kept.iter().enumerate() {
        if bits[old / 64] >> (old % 64) & 1 == 1 {
            out[new / 64] |= 1 << (new % 64);
        }
    }
    out
}

/// The reduced database in both layouts.
struct Reduced {
    rows: Vec<Vec<ItemId>>,
}

impl Reduced {
    fn step(&self, level: usize) -> ReductionStep {
        let items: HashSet<ItemId> = self.rows.iter().flatten().copied().collect();
        ReductionStep {
            level,
            rows: self.rows.len(),
            items: items.len(),
            total_length: self.rows.iter().map(Vec::len).sum(),
        }
    }

    fn item_bits(&self, n_items: usize) -> Vec<Option<Bits>> {
        let words = self.rows.len().div_ceil(64);
        let mut bits: Vec<Option<Bits>> = vec![None; n_items];
        for (r, row) in self.rows.iter().enumerate() {
            for i in row {
                bits[i.index()].get_or_insert_with(|| vec![0; words])[r / 64] |= 1 << (r % 64);
            }
        }
        bits
    }

    /// Deletes items outside `live`, drops emptied rows and returns the
    /// indices of the rows kept.
    fn retain(&mut self, live: &HashSet<ItemId>) -> Vec<usize> {
        let mut kept = Vec::with_capacity(self.rows.len());
        let mut rows = Vec::with_capacity(self.rows.len());
        for (r, row) in std::mem::take(&mut self.rows).into_iter().enumerate() {
            let row: Vec<ItemId> = row.into_iter().filter(|i| live.contains(i)).collect();
            if !row.is_empty() {
                kept.push(r);
                rows.push(row);
            }
        }
        self.rows = rows;
        kept
    }
}

/// A frequent itemset together with its row bitset over the reduced database.
struct Tracked {
    set: Itemset,
    count: u64,
    bits: Bits,
}

/// Faster Apriori configured with explicit prefilter and support floors.
#[derive(Clone, Copy, Debug)]
pub struct FasterMiner {
    pub min_prob: f64,
    pub min_support: f64,
    pub mode: CountingMode,
}

impl FasterMiner {
    pub fn new(min_prob: f64, min_support: f64) -> Self {
        FasterMiner {
            min_prob,
            min_support,
            mode: CountingMode::Sequential,
        }
    }

    pub fn from_thresholds(thresholds: &Thresholds) -> Self {
        Self::new(thresholds.min_prob, thresholds.mining_floor())
    }

    pub fn mode(mut self, mode: CountingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn run(&self, db: &TransactionDb) -> Result<(PrefilterReport, FrequentItemsets)> {
        if db.is_empty() {
            return Err(Error::EmptyDb);
        }
        if !(0.0..=1.0).contains(&self.min_support) {
            return Err(Error::InvalidArgument(format!(
                "min-support {} is not in [0, 1]",
                self.min_support
            )));
        }
        let floor = min_count(self.min_support, db.n_rows()).max(1);
        let report = prefilter(db, self.min_prob)?;
        let mut out = FrequentItemsets::new(Algorithm::Faster, db, self.min_support);
        out.job = Some(report.job.clone());

        let mut reduced = Reduced {
            rows: report
                .db_reduced
                .transactions()
                .iter()
                .map(|t| t.items().to_vec())
                .collect(),
        };

        // Level 1: the surviving items.
        out.reduction.push(reduced.step(1));
        out.iteration_count = 1;
        out.candidate_count += report.surviving_items.len() as u64;
        let item_bits = reduced.item_bits(db.n_items());
        let level1: Vec<Tracked> = report
            .surviving_items
            .iter()
            .filter_map(|&i| {
                let bits = item_bits[i.index()].clone()?;
                let count = popcount(&bits);
                (count >= floor).then(|| Tracked {
                    set: Itemset::from_sorted(vec![i]),
                    count,
                    bits,
                })
            })
            .collect();
        let mut current = self.advance(&mut out, &mut reduced, 1, level1);
        if current.is_empty() {
            return Ok((report, out));
        }

        // Level 2: pairs that passed the prefilter, restricted to frequent items.
        let slot: HashMap<ItemId, usize> = current
            .iter()
            .enumerate()
            .map(|(s, t)| (t.set.items()[0], s))
            .collect();
        let seeds: Vec<(usize, usize, Itemset)> = report
            .surviving_pairs
            .iter()
            .filter_map(|p| {
                let a = *slot.get(&p.items()[0])?;
                let b = *slot.get(&p.items()[1])?;
                Some((a, b, p.clone()))
            })
            .collect();
        if seeds.is_empty() {
            return Ok((report, out));
        }
        out.reduction.push(reduced.step(2));
        out.iteration_count = 2;
        out.candidate_count += seeds.len() as u64;
        let level2 = self.count(&current, seeds, floor);
        current = self.advance(&mut out, &mut reduced, 2, level2);

        // Levels 3 and up: prefix join of the previous level with subset prune.
        let mut k = 3;
        while current.len() > 1 {
            let candidates = join(&current);
            if candidates.is_empty() {
                break;
            }
            out.reduction.push(reduced.step(k));
            out.iteration_count = k;
            out.candidate_count += candidates.len() as u64;
            let next = self.count(&current, candidates, floor);
            current = self.advance(&mut out, &mut reduced, k, next);
            k += 1;
        }
        Ok((report, out))
    }

    fn count(
        &self,
        parents: &[Tracked],
        candidates: Vec<(usize, usize, Itemset)>,
        floor: u64,
    ) -> Vec<Tracked> {
        let eval = |(a, b, set): (usize, usize, Itemset)| -> Option<Tracked> {
            let (pa, pb) = (&parents[a].bits, &parents[b].bits);
            let count = and_count(pa, pb);
            (count >= floor).then(|| Tracked {
                set,
                count,
                bits: and(pa, pb),
            })
        };
        match self.mode {
            CountingMode::Sequential => candidates.into_iter().filter_map(eval).collect(),
            CountingMode::Parallel => candidates.into_par_iter().filter_map(eval).collect(),
        }
    }

    /// Records level `k`, then rebuilds the reduced database around its items.
    fn advance(
        &self,
        out: &mut FrequentItemsets,
        reduced: &mut Reduced,
        k: usize,
        mut level: Vec<Tracked>,
    ) -> Vec<Tracked> {
        level.sort_unstable_by(|a, b| a.set.cmp(&b.set));
        out.insert_level(k, level.iter().map(|t| (t.set.clone(), t.count)).collect());
        let live: HashSet<ItemId> = level.iter().flat_map(|t| t.set.items()).copied().collect();
        let before = reduced.rows.len();
        let kept = reduced.retain(&live);
        if kept.len() < before {
            for t in &mut level {
                t.bits = compact(&t.bits, &kept);
            }
        }
        level
    }
}

/// Prefix join over sorted frequent itemsets, returning parent indices.
fn join(prev: &[Tracked]) -> Vec<(usize, usize, Itemset)> {
    let known: HashSet<&[ItemId]> = prev.iter().map(|t| t.set.items()).collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < prev.len() {
        let k1 = prev[start].set.len();
        let prefix = &prev[start].set.items()[..k1 - 1];
        let mut end = start + 1;
        while end < prev.len() && &prev[end].set.items()[..k1 - 1] == prefix {
            end += 1;
        }
        for i in start..end {
            for j in (i + 1)..end {
                let mut cand = prev[i].set.items().to_vec();
                cand.push(prev[j].set.items()[k1 - 1]);
                if all_subsets_known(&cand, &known) {
                    out.push((i, j, Itemset::from_sorted(cand)));
                }
            }
        }
        start = end;
    }
    out
}

/// Mines with the thresholds' prefilter and mining floor.
pub fn mine_frequent_faster(db: &TransactionDb, thresholds: &Thresholds) -> Result<FrequentItemsets> {
    thresholds.validate()?;
    FasterMiner::from_thresholds(thresholds).run(db).map(|(_, f)| f)
}

/// Audit trail of how the reduced database shrank over one job.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub rows_original: usize,
    pub rows_after_prefilter: usize,
    pub items_removed_by_prefilter: usize,
    pub pairs_excluded_by_prefilter: u64,
    pub steps: Vec<ReductionStep>,
}

impl ReductionTrace {
    /// True when every step is at most as large as the one before it.
    pub fn is_non_increasing(&self) -> bool {
        self.steps.windows(2).all(|w| {
            w[1].rows <= w[0].rows
                && w[1].items <= w[0].items
                && w[1].total_length <= w[0].total_length
        })
    }
}

pub fn explain_reduction(report: &PrefilterReport, freq: &FrequentItemsets) -> Result<ReductionTrace> {
    if freq.job.as_ref() != Some(&report.job) {
        return Err(Error::JobMismatch);
    }
    Ok(ReductionTrace {
        rows_original: report.rows_before,
        rows_after_prefilter: report.rows_after,
        items_removed_by_prefilter: report.removed_items.len(),
        pairs_excluded_by_prefilter: report.excluded_pairs,
        steps: freq.reduction.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apriori::mine_frequent_apriori;
    use crate::types::TransactionDbBuilder;

    fn db(rows: &[&[(&str, &str)]]) -> TransactionDb {
        let mut b = TransactionDbBuilder::new();
        for r in rows {
            b.push(r).unwrap();
        }
        b.build(None).unwrap()
    }

    fn sample() -> TransactionDb {
        db(&[
            &[("A", "a1"), ("B", "b1"), ("C", "c1")],
            &[("A", "a1"), ("B", "b1"), ("C", "c2")],
            &[("A", "a1"), ("B", "b2"), ("C", "c1")],
            &[("A", "a2"), ("B", "b1"), ("C", "c1")],
            &[("A", "a1"), ("B", "b1"), ("C", "c1")],
        ])
    }

    #[test]
    fn pair_offsets_cover_the_triangle() {
        let slots = 7;
        let mut seen = HashSet::new();
        for a in 0..slots {
            for b in (a + 1)..slots {
                assert!(seen.insert(PairCounts::offset(slots, a, b)));
            }
        }
        assert_eq!(seen.len(), slots * (slots - 1) / 2);
        assert_eq!(*seen.iter().max().unwrap(), seen.len() - 1);
    }

    #[test]
    fn zero_threshold_is_identity() {
        let d = sample();
        let r = prefilter(&d, 0.0).unwrap();
        assert_eq!(r.surviving_items.len(), d.n_items());
        assert!(r.removed_items.is_empty());
        assert_eq!(r.db_reduced.transactions(), d.transactions());
    }

    #[test]
    fn full_threshold_keeps_universal_items() {
        let d = db(&[&[("A", "x"), ("B", "p")], &[("A", "x"), ("B", "q")]]);
        let r = prefilter(&d, 1.0).unwrap();
        assert_eq!(r.surviving_items, vec![d.id_of("A", "x").unwrap()]);
    }

    #[test]
    fn single_transaction_makes_everything_frequent() {
        let d = db(&[&[("A", "x"), ("B", "y"), ("C", "z"), ("D", "w")]]);
        for theta in [0.1, 0.5, 1.0] {
            let f = FasterMiner::new(0.0, theta).run(&d).unwrap().1;
            assert_eq!(f.len(), 15);
        }
    }

    #[test]
    fn matches_apriori_on_sample() {
        let d = sample();
        let a = mine_frequent_apriori(&d, 0.4).unwrap();
        let (_, f) = FasterMiner::new(0.4, 0.4).run(&d).unwrap();
        assert!(a.same_itemsets(&f));
        assert!(f.candidate_count <= a.candidate_count);
    }

    #[test]
    fn parallel_counting_is_identical() {
        let d = sample();
        let s = FasterMiner::new(0.2, 0.2).run(&d).unwrap().1;
        let p = FasterMiner::new(0.2, 0.2)
            .mode(CountingMode::Parallel)
            .run(&d)
            .unwrap()
            .1;
        assert!(s.same_itemsets(&p));
        assert_eq!(s.candidate_count, p.candidate_count);
        assert_eq!(s.reduction, p.reduction);
    }

    #[test]
    fn mismatched_job_is_rejected() {
        let d = sample();
        let (r1, _) = FasterMiner::new(0.2, 0.4).run(&d).unwrap();
        let (_, f2) = FasterMiner::new(0.4, 0.4).run(&d).unwrap();
        assert!(matches!(explain_reduction(&r1, &f2), Err(Error::JobMismatch)));
        let a = mine_frequent_apriori(&d, 0.4).unwrap();
        assert!(explain_reduction(&r1, &a).is_err());
    }

    #[test]
    fn compact_keeps_listed_rows() {
        let bits = vec![0b1011_0110u64];
        let out = compact(&bits, &[1, 2, 3, 5]);
        assert_eq!(out, vec![0b1011]);
    }
}
