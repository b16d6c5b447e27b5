use arm_forge::fixtures::{self, naive_count};
use arm_forge::measures::{
    combo_probability, confidence, cpir_negative, cpir_negative_from_supports, cpir_positive,
    cpir_positive_from_supports, item_probability, support,
};
use arm_forge::{prefilter, FasterMiner, Itemset, TransactionDb};

fn ids(db: &TransactionDb, items: &[(&str, &str)]) -> Itemset {
    Itemset::new(items.iter().map(|(a, v)| db.id_of(a, v).unwrap()))
}

#[test]
fn expected_tables_match_the_naive_scan() {
    for f in fixtures::all() {
        let db = f.db().unwrap();
        let expected = f.expected(&db).unwrap();
        assert!(!expected.is_empty(), "{} has no expected rows", f.name);
        for (set, count) in expected {
            assert_eq!(naive_count(&db, &set), count, "{} {}", f.name, db.render_itemset(&set));
        }
    }
}

#[test]
fn expected_tables_list_every_occurring_itemset() {
    for f in fixtures::all() {
        let db = f.db().unwrap();
        let listed = f.expected(&db).unwrap().len();
        // Every row contributes all subsets of itself; count the distinct ones.
        let mut seen = std::collections::HashSet::new();
        for t in db.transactions() {
            let items = t.items();
            for mask in 0u32..(1 << items.len()) {
                seen.insert(Itemset::new(
                    (0..items.len()).filter(|b| mask >> b & 1 == 1).map(|b| items[b]),
                ));
            }
        }
        assert_eq!(listed, seen.len(), "{}", f.name);
    }
}

#[test]
fn five_row_measures() {
    let db = fixtures::measure5().db().unwrap();
    assert_eq!(item_probability(&db, db.id_of("C", "c2").unwrap()).unwrap(), 0.4);
    assert_eq!(combo_probability(&db, &ids(&db, &[("A", "a1"), ("B", "b1")])).unwrap(), 0.6);
    assert_eq!(support(&db, &ids(&db, &[("A", "a1"), ("B", "b1"), ("D", "d1")])).unwrap(), 0.2);
    let a1 = ids(&db, &[("A", "a1")]);
    assert_eq!(confidence(&db, &a1, db.id_of("B", "b1").unwrap()).unwrap(), 0.75);
}

#[test]
fn twenty_five_row_cpir() {
    let db = fixtures::cpir25().db().unwrap();
    let x = ids(&db, &[("X", "x")]);
    let y = db.id_of("Y", "y").unwrap();
    assert_eq!(support(&db, &x).unwrap(), 0.4);
    assert_eq!(support(&db, &Itemset::new([y])).unwrap(), 0.6);
    assert_eq!(support(&db, &x.with(y)).unwrap(), 0.36);
    let pos = cpir_positive(&db, &x, y).unwrap();
    let neg = cpir_negative(&db, &x, y).unwrap();
    assert!((pos - 0.75).abs() < 1e-12, "{pos}");
    assert!((neg + 0.5).abs() < 1e-12, "{neg}");
    assert!((cpir_positive_from_supports(0.36, 0.4, 0.6) - 0.75).abs() < 1e-12);
    assert!((cpir_negative_from_supports(0.36, 0.4, 0.6) + 0.5).abs() < 1e-12);
}

#[test]
fn five_row_prefilter_drops_single_occurrences() {
    let db = fixtures::measure5().db().unwrap();
    let report = prefilter(&db, 0.4).unwrap();
    for (id, _) in db.items() {
        let count = naive_count(&db, &Itemset::new([id]));
        assert_eq!(report.surviving_items.contains(&id), count > 1, "{}", db.render(id));
    }
}

#[test]
fn pruning_fixture_narrows_the_reduced_database() {
    let db = fixtures::pruning().db().unwrap();
    let (report, f) = FasterMiner::new(0.3, 0.3).run(&db).unwrap();
    assert_eq!(report.removed_items.len(), 7);
    assert_eq!(report.rows_before, 10);
    assert_eq!(report.rows_after, 7);
    let first = &f.reduction[0];
    let last = f.reduction.last().unwrap();
    assert_eq!(first.rows, 7);
    assert!(f.reduction.len() >= 2);
    assert!(last.total_length < db.transactions().iter().map(|t| t.len()).sum::<usize>());
}
