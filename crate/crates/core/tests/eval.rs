mod common;

use arm_forge::eval::{
    kfold_cv, lr_loss_and_grad, select_features, stratified_folds, write_cv_csv, Encoded, Model, CV_COLUMNS,
};
use arm_forge::fixtures;
use arm_forge::{generate_rules, mine, Algorithm, Error, RuleKind, Thresholds, TransactionDbBuilder};
use common::random_class_db;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn tree_is_perfect_on_the_separable_fixture() {
    let db = fixtures::separable().db().unwrap();
    let r = kfold_cv(&db, Model::DecisionTree, 3, None, 5).unwrap();
    assert_eq!(r.mean, 1.0, "{:?}", r.accuracies);
}

#[test]
fn majority_baseline_tracks_the_modal_class() {
    let db = random_class_db(9, 4, 3, 200, 0.6);
    let enc = Encoded::from_db(&db, None).unwrap();
    let mut counts = vec![0usize; enc.n_classes()];
    for &y in &enc.labels {
        counts[y] += 1;
    }
    let modal = *counts.iter().max().unwrap() as f64 / enc.labels.len() as f64;
    let r = kfold_cv(&db, Model::Majority, 10, None, 1).unwrap();
    // Each held-out fold has about 20 rows.
    assert!((r.mean - modal).abs() <= 1.0 / 20.0, "{} vs {modal}", r.mean);
}

#[test]
fn same_seed_same_result() {
    let db = random_class_db(4, 5, 3, 120, 0.5);
    for m in Model::ALL {
        assert_eq!(kfold_cv(&db, m, 5, None, 77).unwrap(), kfold_cv(&db, m, 5, None, 77).unwrap());
    }
}

#[test]
fn too_few_rows_per_class_is_a_stratification_error() {
    let db = fixtures::separable().db().unwrap();
    let err = kfold_cv(&db, Model::NaiveBayes, 20, None, 1).unwrap_err();
    assert!(matches!(err, Error::Stratification { .. }), "{err}");
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let dim = rng.random_range(2..8);
        let n = rng.random_range(3..15);
        let x: Vec<Vec<usize>> = (0..n)
            .map(|_| {
                let mut cols = vec![0];
                cols.extend((1..dim).filter(|_| rng.random::<f64>() < 0.5));
                cols
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() < 0.5) as u8 as f64).collect();
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, g) = lr_loss_and_grad(&w, &x, &y, 1e-4);
        for j in 0..dim {
            let h = 1e-6;
            let mut up = w.clone();
            up[j] += h;
            let mut down = w.clone();
            down[j] -= h;
            let fd = (lr_loss_and_grad(&up, &x, &y, 1e-4).0 - lr_loss_and_grad(&down, &x, &y, 1e-4).0) / (2.0 * h);
            let rel = (fd - g[j]).abs() / fd.abs().max(g[j].abs()).max(1e-8);
            assert!(rel <= 1e-5, "component {j}: analytic {} numeric {fd}", g[j]);
        }
    }
}

#[test]
fn features_are_antecedent_attributes() {
    let db = random_class_db(31, 5, 2, 60, 0.7);
    let th = Thresholds::new(0.5, 0.6, 0.0, (0.05, 0.5)).unwrap();
    let f = mine(&db, Algorithm::Faster, &th).unwrap();
    let rules = generate_rules(&f, &db, &th, db.target()).unwrap();
    assert!(!rules.is_empty());
    let fs = select_features(&rules).unwrap();
    let mut expect = std::collections::BTreeSet::new();
    for r in rules.rules.iter().filter(|r| r.kind != RuleKind::Reference) {
        for &i in r.antecedent.items() {
            expect.insert(rules.item(i).attribute.clone());
        }
    }
    assert_eq!(fs.attributes, expect);
    assert!(!fs.attributes.contains("Class"));
    assert_eq!(fs.provenance.len(), 64);
}

#[test]
fn no_rules_means_no_features() {
    let mut b = TransactionDbBuilder::with_attributes(["A", "Class"]);
    b.push_row(&["a", "x"]).unwrap();
    b.push_row(&["a", "y"]).unwrap();
    let db = b.build(Some("Class")).unwrap();
    let th = Thresholds::default();
    let f = mine(&db, Algorithm::Apriori, &th).unwrap();
    let rules = generate_rules(&f, &db, &th, db.target()).unwrap();
    assert!(matches!(select_features(&rules), Err(Error::NoRules)));
}

#[test]
fn cv_csv_has_one_row_per_fold() {
    let db = fixtures::separable().db().unwrap();
    let r = kfold_cv(&db, Model::NaiveBayes, 4, None, 3).unwrap();
    let mut buf = Vec::new();
    write_cv_csv(&[r.clone(), r], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CV_COLUMNS.join(","));
    assert_eq!(lines.count(), 8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_partition_rows_with_balanced_classes(labels in prop::collection::vec(0usize..3, 30..120), k in 2usize..6, seed in any::<u64>()) {
        let classes: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let mut per_class = [0usize; 3];
        for &y in &labels {
            per_class[y] += 1;
        }
        let fold = match stratified_folds(&labels, &classes, k, seed) {
            Ok(f) => f,
            Err(Error::Stratification { count, .. }) => {
                prop_assert!(count < k);
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(fold.len(), labels.len());
        prop_assert!(fold.iter().all(|&f| f < k));
        for f in 0..k {
            for (c, &size) in per_class.iter().enumerate() {
                let got = labels.iter().zip(&fold).filter(|(&y, &g)| y == c && g == f).count() as f64;
                let ideal = size as f64 / k as f64;
                prop_assert!((got - ideal).abs() <= 1.0, "fold {} class {}: {} vs {}", f, c, got, ideal);
            }
        }
        prop_assert_eq!(stratified_folds(&labels, &classes, k, seed).unwrap(), fold);
    }
}
