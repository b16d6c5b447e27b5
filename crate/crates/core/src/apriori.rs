//! Classic level-wise Apriori. Every level rescans the original database,
//! testing each candidate against each transaction with a sorted merge.

use crate::error::{Error, Result};
use crate::frequent::{join_and_prune, Algorithm, FrequentItemsets};
use crate::types::{min_count, ItemId, Itemset, TransactionDb};

pub fn mine_frequent_apriori(db: &TransactionDb, min_support: f64) -> Result<FrequentItemsets> {
    if db.is_empty() {
        return Err(Error::EmptyDb);
    }
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "min-support {min_support} is not in (0, 1]"
        )));
    }
    let floor = min_count(min_support, db.n_rows()).max(1);
    let mut out = FrequentItemsets::new(Algorithm::Apriori, db, min_support);

    // Level 1: every dictionary item is a candidate.
    let counts = db.item_counts();
    out.candidate_count += counts.len() as u64;
    out.iteration_count = 1;
    let mut current: Vec<(Itemset, u64)> = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c >= floor)
        .map(|(i, &c)| (Itemset::from_sorted(vec![ItemId(i as u32)]), c))
        .collect();
    out.insert_level(1, current.clone());

    let mut k = 2;
    while !current.is_empty() {
        current.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let candidates = join_and_prune(&current);
        if candidates.is_empty() {
            break;
        }
        out.candidate_count += candidates.len() as u64;
        out.iteration_count = k;
        let mut tallies = vec![0u64; candidates.len()];
        for t in db.transactions() {
            if t.len() < k {
                continue;
            }
            for (cand, tally) in candidates.iter().zip(tallies.iter_mut()) {
                if t.contains_all(cand) {
                    *tally += 1;
                }
            }
        }
        current = candidates
            .into_iter()
            .zip(tallies)
            .filter(|&(_, c)| c >= floor)
            .collect();
        out.insert_level(k, current.clone());
        k += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TransactionDbBuilder;

    fn db(rows: &[&[(&str, &str)]]) -> TransactionDb {
        let mut b = TransactionDbBuilder::new();
        for r in rows {
            b.push(r).unwrap();
        }
        b.build(None).unwrap()
    }

    #[test]
    fn full_support_keeps_only_universal_items() {
        let d = db(&[
            &[("A", "x"), ("B", "p")],
            &[("A", "x"), ("B", "q")],
            &[("A", "x"), ("B", "p")],
        ]);
        let f = mine_frequent_apriori(&d, 1.0).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.level(1)[0], (Itemset::new([d.id_of("A", "x").unwrap()]), 3));
    }

    #[test]
    fn unreachable_support_stops_after_one_iteration() {
        let d = db(&[&[("A", "x")], &[("A", "y")]]);
        let f = mine_frequent_apriori(&d, 0.75).unwrap();
        assert!(f.is_empty());
        assert_eq!(f.iteration_count, 1);
    }

    #[test]
    fn empty_db_errors() {
        let d = TransactionDbBuilder::new().build(None).unwrap();
        assert!(matches!(mine_frequent_apriori(&d, 0.5), Err(Error::EmptyDb)));
    }

    #[test]
    fn rejects_zero_support() {
        let d = db(&[&[("A", "x")]]);
        assert!(mine_frequent_apriori(&d, 0.0).is_err());
    }
}
