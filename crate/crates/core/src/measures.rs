//! Interestingness measures: item and pair probability, support, confidence
//! and the positive/negative conditional-probability increment ratio (CPIR).
//!
//! Every measure is evaluated from exact integer counts. The CPIR forms are
//! rewritten over counts (numerator and denominator scaled by `N^2`) so that a
//! rule with confidence 1 scores exactly 1.0.

use crate::error::{Error, Result};
use crate::types::{ItemId, Itemset, TransactionDb};

#[inline]
pub fn ratio(num: u64, den: u64) -> f64 {
    num as f64 / den as f64
}

/// Rows of `db` containing every item of `itemset`.
pub fn count(db: &TransactionDb, itemset: &Itemset) -> u64 {
    db.transactions()
        .iter()
        .filter(|t| t.contains_all(itemset))
        .count() as u64
}

fn nonempty(db: &TransactionDb) -> Result<u64> {
    match db.n_rows() {
        0 => Err(Error::EmptyDb),
        n => Ok(n as u64),
    }
}

/// `P_X = freq(X) / N` for a single item.
pub fn item_probability(db: &TransactionDb, item: ItemId) -> Result<f64> {
    let n = nonempty(db)?;
    db.item(item)?;
    let freq = db
        .transactions()
        .iter()
        .filter(|t| t.contains(item))
        .count() as u64;
    Ok(ratio(freq, n))
}

/// Joint relative frequency of a two-item combination.
pub fn combo_probability(db: &TransactionDb, pair: &Itemset) -> Result<f64> {
    if pair.len() != 2 {
        return Err(Error::Arity {
            expected: 2,
            got: pair.len(),
        });
    }
    let n = nonempty(db)?;
    db.check_itemset(pair)?;
    Ok(ratio(count(db, pair), n))
}

/// Fraction of rows containing the whole itemset. The empty itemset has support 1.
pub fn support(db: &TransactionDb, itemset: &Itemset) -> Result<f64> {
    let n = nonempty(db)?;
    if itemset.is_empty() {
        return Ok(1.0);
    }
    db.check_itemset(itemset)?;
    Ok(ratio(count(db, itemset), n))
}

struct RuleCounts {
    antecedent: u64,
    joint: u64,
    consequent: u64,
    n: u64,
}

fn rule_counts(db: &TransactionDb, antecedent: &Itemset, consequent: ItemId) -> Result<RuleCounts> {
    let n = nonempty(db)?;
    db.check_itemset(antecedent)?;
    db.item(consequent)?;
    let joint_set = antecedent.with(consequent);
    let mut c = RuleCounts {
        antecedent: 0,
        joint: 0,
        consequent: 0,
        n,
    };
    for t in db.transactions() {
        let has_x = t.contains_all(antecedent);
        let has_y = t.contains(consequent);
        c.antecedent += has_x as u64;
        c.consequent += has_y as u64;
        c.joint += (has_x && t.contains_all(&joint_set)) as u64;
    }
    Ok(c)
}

/// `freq(X u Y) / freq(X)`.
pub fn confidence(db: &TransactionDb, antecedent: &Itemset, consequent: ItemId) -> Result<f64> {
    let c = rule_counts(db, antecedent, consequent)?;
    if c.antecedent == 0 {
        return Err(Error::ZeroAntecedent);
    }
    Ok(ratio(c.joint, c.antecedent))
}

/// `CPIR(X => Y) = (sup(XY) - sup(X)sup(Y)) / (sup(X)(1 - sup(Y)))`.
pub fn cpir_positive(db: &TransactionDb, antecedent: &Itemset, consequent: ItemId) -> Result<f64> {
    let c = rule_counts(db, antecedent, consequent)?;
    cpir_positive_from_counts(c.antecedent, c.joint, c.consequent, c.n)
}

/// `CPIR(X => not Y) = (sup(X u notY) - sup(X)sup(notY)) / (sup(X)sup(Y))`.
pub fn cpir_negative(db: &TransactionDb, antecedent: &Itemset, consequent: ItemId) -> Result<f64> {
    let c = rule_counts(db, antecedent, consequent)?;
    cpir_negative_from_counts(c.antecedent, c.joint, c.consequent, c.n)
}

/// Positive CPIR over counts: `(j*N - a*c) / (a*(N - c))`.
pub fn cpir_positive_from_counts(
    antecedent: u64,
    joint: u64,
    consequent: u64,
    n: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyDb);
    }
    if antecedent == 0 {
        return Err(Error::ZeroAntecedent);
    }
    if consequent >= n {
        return Err(Error::DegenerateConsequent {
            support: ratio(consequent, n),
        });
    }
    let num = joint as i128 * n as i128 - antecedent as i128 * consequent as i128;
    let den = antecedent as i128 * (n - consequent) as i128;
    Ok(num as f64 / den as f64)
}

/// Negative CPIR over counts: `(a*c - j*N) / (a*c)`, using
/// `sup(X u notY) = sup(X) - sup(XY)` and `sup(notY) = 1 - sup(Y)`.
pub fn cpir_negative_from_counts(
    antecedent: u64,
    joint: u64,
    consequent: u64,
    n: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyDb);
    }
    if antecedent == 0 {
        return Err(Error::ZeroAntecedent);
    }
    if consequent == 0 {
        return Err(Error::DegenerateConsequent { support: 0.0 });
    }
    let ac = antecedent as i128 * consequent as i128;
    let num = ac - joint as i128 * n as i128;
    Ok(num as f64 / ac as f64)
}

/// The textbook support-space form of positive CPIR, kept for cross-checks.
pub fn cpir_positive_from_supports(sup_xy: f64, sup_x: f64, sup_y: f64) -> f64 {
    (sup_xy - sup_x * sup_y) / (sup_x * (1.0 - sup_y))
}

/// The textbook support-space form of negative CPIR.
pub fn cpir_negative_from_supports(sup_xy: f64, sup_x: f64, sup_y: f64) -> f64 {
    let sup_x_not_y = sup_x - sup_xy;
    (sup_x_not_y - sup_x * (1.0 - sup_y)) / (sup_x * sup_y)
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
    fn empty_db_errors() {
        let d = TransactionDbBuilder::new().build(None).unwrap();
        assert!(matches!(item_probability(&d, ItemId(0)), Err(Error::EmptyDb)));
        assert!(matches!(support(&d, &Itemset::empty()), Err(Error::EmptyDb)));
    }

    #[test]
    fn everywhere_and_absent_items() {
        let d = db(&[&[("A", "x"), ("B", "p")], &[("A", "x"), ("B", "q")]]);
        let x = d.id_of("A", "x").unwrap();
        let q = d.id_of("B", "q").unwrap();
        assert_eq!(item_probability(&d, x).unwrap(), 1.0);
        let d2 = db(&[&[("A", "x")], &[("A", "y")], &[("A", "x")]]);
        let y = d2.id_of("A", "y").unwrap();
        assert!((item_probability(&d2, y).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(item_probability(&d, q).unwrap(), 0.5);
    }

    #[test]
    fn same_attribute_pair_is_exclusive() {
        let d = db(&[&[("A", "x")], &[("A", "y")]]);
        let pair = Itemset::new([d.id_of("A", "x").unwrap(), d.id_of("A", "y").unwrap()]);
        assert_eq!(combo_probability(&d, &pair).unwrap(), 0.0);
    }

    #[test]
    fn duplicated_pair_is_rejected() {
        let d = db(&[&[("A", "x")]]);
        let x = d.id_of("A", "x").unwrap();
        let dup = Itemset::new([x, x]);
        assert!(matches!(
            combo_probability(&d, &dup),
            Err(Error::Arity { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn empty_itemset_has_full_support() {
        let d = db(&[&[("A", "x")], &[("A", "y")]]);
        assert_eq!(support(&d, &Itemset::empty()).unwrap(), 1.0);
    }

    #[test]
    fn zero_antecedent() {
        let d = db(&[&[("A", "x"), ("B", "p")], &[("A", "y"), ("B", "q")]]);
        let x = d.id_of("A", "x").unwrap();
        let q = d.id_of("B", "q").unwrap();
        let p = d.id_of("B", "p").unwrap();
        assert!(matches!(
            confidence(&d, &Itemset::new([x, q]), p),
            Err(Error::ZeroAntecedent)
        ));
    }

    #[test]
    fn certain_consequent_is_degenerate_for_positive_cpir() {
        let d = db(&[&[("A", "x"), ("B", "p")], &[("A", "y"), ("B", "p")]]);
        let x = d.id_of("A", "x").unwrap();
        let p = d.id_of("B", "p").unwrap();
        assert!(matches!(
            cpir_positive(&d, &Itemset::new([x]), p),
            Err(Error::DegenerateConsequent { .. })
        ));
        // The negated form is defined here.
        assert!(cpir_negative(&d, &Itemset::new([x]), p).is_ok());
    }

    #[test]
    fn perfect_implication_scores_exactly_one() {
        for n in 2..40u64 {
            for c in 1..n {
                for a in 1..=c {
                    assert_eq!(cpir_positive_from_counts(a, a, c, n).unwrap(), 1.0);
                    let neg = cpir_negative_from_counts(a, a, c, n).unwrap();
                    let expect = -((n - c) as f64 / n as f64) / (c as f64 / n as f64);
                    assert!((neg - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn count_forms_match_support_forms() {
        // sup(X)=0.4, sup(Y)=0.6, sup(XY)=0.36 on 25 rows.
        let pos = cpir_positive_from_counts(10, 9, 15, 25).unwrap();
        let neg = cpir_negative_from_counts(10, 9, 15, 25).unwrap();
        assert!((pos - cpir_positive_from_supports(0.36, 0.4, 0.6)).abs() < 1e-12);
        assert!((neg - cpir_negative_from_supports(0.36, 0.4, 0.6)).abs() < 1e-12);
    }
}
