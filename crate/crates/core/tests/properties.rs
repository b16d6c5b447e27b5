mod common;

use std::collections::HashMap;

use arm_forge::apriori::mine_frequent_apriori;
use arm_forge::fixtures::naive_count;
use arm_forge::fpgrowth::{build_fptree, mine_fpgrowth};
use arm_forge::measures::{confidence, cpir_positive, support};
use arm_forge::{
    brute_force_oracle, explain_reduction, generate_rules, min_count, mine, prefilter, Algorithm, FasterMiner, ItemId,
    Itemset, RuleKind, Thresholds,
};
use common::{random_class_db, random_db, small_db_params, thresholds_strategy};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn itemsets_are_sorted_and_deduplicated(ids in prop::collection::vec(0u32..40, 0..12)) {
        let set = Itemset::new(ids.iter().copied().map(ItemId));
        let mut expect: Vec<u32> = ids.clone();
        expect.sort_unstable();
        expect.dedup();
        prop_assert_eq!(set.items().iter().map(|i| i.0).collect::<Vec<_>>(), expect);
        let mut reversed = ids;
        reversed.reverse();
        prop_assert_eq!(Itemset::new(reversed.into_iter().map(ItemId)), set);
    }

    #[test]
    fn support_is_anti_monotone((seed, a, v, n, skew) in small_db_params(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..4), extra in any::<prop::sample::Index>()) {
        let db = random_db(seed, a, v, n, skew);
        let d = db.n_items();
        let base = Itemset::new(picks.iter().map(|p| ItemId(p.index(d) as u32)));
        let grown = base.with(ItemId(extra.index(d) as u32));
        prop_assert!(support(&db, &base).unwrap() >= support(&db, &grown).unwrap());
    }

    #[test]
    fn naive_count_agrees_with_support((seed, a, v, n, skew) in small_db_params(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..4)) {
        let db = random_db(seed, a, v, n, skew);
        let set = Itemset::new(picks.iter().map(|p| ItemId(p.index(db.n_items()) as u32)));
        let s = support(&db, &set).unwrap();
        prop_assert!((s * n as f64 - naive_count(&db, &set) as f64).abs() < 1e-12 * n as f64);
    }

    #[test]
    fn cpir_is_bounded_and_tied_to_confidence((seed, a, v, n, skew) in small_db_params(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..3), y in any::<prop::sample::Index>()) {
        let db = random_db(seed, a, v, n, skew);
        let d = db.n_items();
        let y = ItemId(y.index(d) as u32);
        let x = Itemset::new(picks.iter().map(|p| ItemId(p.index(d) as u32))).without(y);
        prop_assume!(!x.is_empty());
        if let (Ok(conf), Ok(cpir)) = (confidence(&db, &x, y), cpir_positive(&db, &x, y)) {
            prop_assert!(cpir <= 1.0 + 1e-12);
            prop_assert_eq!((conf - 1.0).abs() <= 1e-12, (cpir - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn miners_agree_on_itemsets_and_counts((seed, a, v, n, skew) in small_db_params(), sup in 0.05f64..0.9) {
        let db = random_db(seed, a, v, n, skew);
        let ap = mine_frequent_apriori(&db, sup).unwrap();
        let fp = mine_fpgrowth(&db, sup).unwrap();
        prop_assert!(ap.same_itemsets(&fp));
        for (set, c) in ap.iter() {
            prop_assert_eq!(*c, naive_count(&db, set));
        }
    }

    #[test]
    fn apriori_output_is_downward_closed((seed, a, v, n, skew) in small_db_params(), sup in 0.05f64..0.9) {
        let db = random_db(seed, a, v, n, skew);
        let f = mine_frequent_apriori(&db, sup).unwrap();
        let counts = f.counts();
        for (set, _) in f.iter() {
            for &i in set.items() {
                let sub = set.without(i);
                prop_assert!(sub.is_empty() || counts.contains_key(&sub));
            }
        }
    }

    #[test]
    fn apriori_matches_exhaustive_enumeration((seed, a, v, n, skew) in small_db_params(), sup in 0.05f64..0.9) {
        let db = random_db(seed, a, v, n, skew);
        let f = mine_frequent_apriori(&db, sup).unwrap();
        let floor = min_count(sup, n).max(1);
        let d = db.n_items() as u32;
        let mut expect = HashMap::new();
        for mask in 1u32..(1 << d) {
            let set = Itemset::new((0..d).filter(|i| mask >> i & 1 == 1).map(ItemId));
            let c = naive_count(&db, &set);
            if c >= floor {
                expect.insert(set, c);
            }
        }
        let got: HashMap<Itemset, u64> = f.iter().cloned().collect();
        prop_assert_eq!(got, expect);
    }

    #[test]
    fn fptree_paths_rebuild_the_projected_database((seed, a, v, n, skew) in small_db_params(), sup in 0.05f64..0.9) {
        let db = random_db(seed, a, v, n, skew);
        let tree = build_fptree(&db, sup).unwrap();
        let floor = min_count(sup, n).max(1);
        let counts = db.item_counts();
        let mut expect: HashMap<Vec<ItemId>, u64> = HashMap::new();
        for t in db.transactions() {
            let mut kept: Vec<ItemId> = t.items().iter().copied().filter(|i| counts[i.index()] >= floor).collect();
            kept.sort_unstable();
            if !kept.is_empty() {
                *expect.entry(kept).or_default() += 1;
            }
        }
        let mut got: HashMap<Vec<ItemId>, u64> = HashMap::new();
        for (mut path, c) in tree.weighted_paths() {
            path.sort_unstable();
            *got.entry(path).or_default() += c;
        }
        prop_assert_eq!(got, expect);
    }

    #[test]
    fn faster_is_lossless_above_the_prefilter((seed, a, v, n, skew) in small_db_params(), sup in 0.05f64..0.9, slack in 0.0f64..1.0) {
        let db = random_db(seed, a, v, n, skew);
        let min_prob = sup * slack;
        let (_, f) = FasterMiner::new(min_prob, sup).run(&db).unwrap();
        let ap = mine_frequent_apriori(&db, sup).unwrap();
        prop_assert!(f.restricted_to(sup).same_itemsets(&ap));
    }

    #[test]
    fn faster_does_no_more_work_than_apriori((seed, a, v, n, skew) in small_db_params(), sup in 0.05f64..0.9) {
        let db = random_db(seed, a, v, n, skew);
        let (_, f) = FasterMiner::new(sup, sup).run(&db).unwrap();
        let ap = mine_frequent_apriori(&db, sup).unwrap();
        prop_assert!(f.candidate_count <= ap.candidate_count);
    }

    #[test]
    fn reduced_database_only_shrinks((seed, a, v, n, skew) in small_db_params(), sup in 0.05f64..0.9) {
        let db = random_db(seed, a, v, n, skew);
        let (report, f) = FasterMiner::new(sup, sup).run(&db).unwrap();
        let trace = explain_reduction(&report, &f).unwrap();
        prop_assert!(trace.is_non_increasing());
        for w in f.reduction.windows(2) {
            prop_assert!(w[1].items <= w[0].items);
            prop_assert!(w[1].total_length <= w[0].total_length);
            prop_assert!(w[1].rows <= w[0].rows);
        }
    }

    #[test]
    fn prefilter_keeps_every_probable_item((seed, a, v, n, skew) in small_db_params(), p in 0.0f64..1.0) {
        let db = random_db(seed, a, v, n, skew);
        let report = prefilter(&db, p).unwrap();
        for (id, _) in db.items() {
            let prob = naive_count(&db, &Itemset::new([id])) as f64 / n as f64;
            if prob >= p {
                prop_assert!(report.surviving_items.contains(&id));
            }
        }
    }

    #[test]
    fn every_miner_reproduces_the_oracle((seed, a, v, n, skew) in small_db_params(), th in thresholds_strategy(), targeted in any::<bool>()) {
        let db = if targeted { random_class_db(seed, a, v, n, skew) } else { random_db(seed, a, v, n, skew) };
        let target = db.target();
        let oracle = brute_force_oracle(&db, &th, target).unwrap();
        for alg in Algorithm::ALL {
            let f = mine(&db, alg, &th).unwrap();
            let rules = generate_rules(&f, &db, &th, target).unwrap();
            prop_assert!(rules.matches(&oracle, 0.0), "{} differs from the oracle", alg);
        }
    }

    #[test]
    fn emitted_rules_satisfy_the_recount_identity((seed, a, v, n, skew) in small_db_params(), th in thresholds_strategy()) {
        let db = random_db(seed, a, v, n, skew);
        let f = mine(&db, Algorithm::Faster, &th).unwrap();
        let rules = generate_rules(&f, &db, &th, None).unwrap();
        for r in &rules.rules {
            let joint = naive_count(&db, &r.antecedent.with(r.consequent));
            let ante = naive_count(&db, &r.antecedent);
            let cons = naive_count(&db, &Itemset::new([r.consequent]));
            let nf = n as f64;
            let (sx, sy, sxy) = (ante as f64 / nf, cons as f64 / nf, joint as f64 / nf);
            prop_assert!((r.support - sxy).abs() <= 1e-12);
            prop_assert!((r.confidence - sxy / sx).abs() <= 1e-12);
            prop_assert!((r.cpir - (sxy - sx * sy) / (sx * (1.0 - sy))).abs() <= 1e-12);
            prop_assert!(r.kind != RuleKind::Reference);
            // Kinds are disjoint by support range.
            let common = r.support >= th.min_support;
            prop_assert_eq!(r.kind == RuleKind::Common, common);
        }
    }
}

#[test]
fn default_thresholds_prefilter_at_the_exception_floor() {
    let th = Thresholds::default();
    assert_eq!(th.min_prob, th.exception_support.lo);
    assert_eq!(th.mining_floor(), th.exception_support.lo);
}
