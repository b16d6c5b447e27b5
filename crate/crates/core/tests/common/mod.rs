#![allow(dead_code)]

use arm_forge::{Thresholds, TransactionDb, TransactionDbBuilder};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random categorical table: every row takes one value per attribute, the
/// modal value `v0` with probability `skew`.
pub fn random_db(seed: u64, attributes: usize, values: usize, rows: usize, skew: f64) -> TransactionDb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..attributes).map(|a| format!("A{a}")).collect();
    let mut b = TransactionDbBuilder::with_attributes(names);
    for _ in 0..rows {
        let row: Vec<String> = (0..attributes)
            .map(|_| {
                let v = if values == 1 || rng.random::<f64>() < skew {
                    0
                } else {
                    rng.random_range(1..values)
                };
                format!("v{v}")
            })
            .collect();
        b.push_row(&row).unwrap();
    }
    b.build(None).unwrap()
}

/// Like [`random_db`], with the last attribute named `Class` and set as target.
pub fn random_class_db(seed: u64, attributes: usize, values: usize, rows: usize, skew: f64) -> TransactionDb {
    let db = random_db(seed, attributes, values, rows, skew);
    let mut names: Vec<String> = db.attributes().to_vec();
    *names.last_mut().unwrap() = "Class".into();
    let mut b = TransactionDbBuilder::with_attributes(names);
    for t in db.transactions() {
        let row: Vec<String> = t.items().iter().map(|&i| db.item(i).unwrap().value.clone()).collect();
        b.push_row(&row).unwrap();
    }
    b.build(Some("Class")).unwrap()
}

/// `(seed, attributes, values, rows, skew)` with at most 12 distinct items
/// and at most 64 rows.
pub fn small_db_params() -> impl Strategy<Value = (u64, usize, usize, usize, f64)> {
    (2usize..=4, 2usize..=3)
        .prop_flat_map(|(a, v)| {
            (
                any::<u64>(),
                Just(a),
                Just(v),
                1usize..=64,
                prop_oneof![Just(0.3), Just(0.6), Just(0.9)],
            )
        })
        .prop_filter("at most 12 items", |(_, a, v, _, _)| a * v <= 12)
}

/// Thresholds spanning the interesting range, all valid.
pub fn thresholds_strategy() -> impl Strategy<Value = Thresholds> {
    (0.3f64..0.9, 0.5f64..1.0, -0.5f64..1.0, 0.05f64..0.25, 0.05f64..0.5).prop_filter_map(
        "valid thresholds",
        |(sup, conf, cpir, lo, width)| {
            let hi = (lo + width).min(sup);
            Thresholds::new(sup, conf, cpir, (lo, hi)).ok()
        },
    )
}
