//! Domain types shared by every miner: the item dictionary, canonical
//! itemsets, the encoded transaction database, thresholds and scored rules.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measures;

/// Dense index into a database's item dictionary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One `attribute=value` token.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Item {
    pub attribute: String,
    pub value: String,
}

impl Item {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        Item {
            attribute: attribute.into(),
            value: value.into(),
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

/// A set of items in canonical form: strictly ascending, no duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Itemset(Vec<ItemId>);

impl Itemset {
    pub fn new(items: impl IntoIterator<Item = ItemId>) -> Self {
        let mut items: Vec<ItemId> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Itemset(items)
    }

    pub fn empty() -> Self {
        Itemset(Vec::new())
    }

    /// Wraps a vector the caller guarantees is already strictly ascending.
    pub(crate) fn from_sorted(items: Vec<ItemId>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Itemset(items)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// Copy of the itemset with `item` removed.
    pub fn without(&self, item: ItemId) -> Itemset {
        Itemset(self.0.iter().copied().filter(|&i| i != item).collect())
    }

    /// Copy of the itemset with `item` added.
    pub fn with(&self, item: ItemId) -> Itemset {
        let mut items = self.0.clone();
        if let Err(pos) = items.binary_search(&item) {
            items.insert(pos, item);
        }
        Itemset(items)
    }

    pub fn is_subset_of(&self, other: &Itemset) -> bool {
        is_sorted_subset(&self.0, &other.0)
    }
}

impl From<Vec<ItemId>> for Itemset {
    fn from(items: Vec<ItemId>) -> Self {
        Itemset::new(items)
    }
}

/// Merge-based subset test over two ascending slices.
#[inline]
pub(crate) fn is_sorted_subset(needle: &[ItemId], haystack: &[ItemId]) -> bool {
    if needle.len() > haystack.len() {
        return false;
    }
    let mut h = haystack.iter();
    'outer: for n in needle {
        for x in h.by_ref() {
            if x == n {
                continue 'outer;
            }
            if x > n {
                return false;
            }
        }
        return false;
    }
    true
}

/// One encoded row: ascending item ids, at most one per source attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transaction(Vec<ItemId>);

impl Transaction {
    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn contains_all(&self, itemset: &Itemset) -> bool {
        is_sorted_subset(itemset.items(), &self.0)
    }
}

/// Encoded item-basket view of a tabular dataset. Immutable once built.
#[derive(Clone, Debug)]
pub struct TransactionDb {
    attributes: Vec<String>,
    items: Vec<Item>,
    item_attribute: Vec<usize>,
    lookup: HashMap<Item, ItemId>,
    transactions: Vec<Transaction>,
    target: Option<String>,
    fingerprint: OnceLock<String>,
}

impl TransactionDb {
    pub fn n_rows(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn item(&self, id: ItemId) -> Result<&Item> {
        self.items.get(id.index()).ok_or(Error::UnknownItem(id.0))
    }

    pub fn items(&self) -> impl Iterator<Item = (ItemId, &Item)> {
        self.items
            .iter()
            .enumerate()
            .map(|(i, item)| (ItemId(i as u32), item))
    }

    pub fn item_id(&self, item: &Item) -> Option<ItemId> {
        self.lookup.get(item).copied()
    }

    /// Looks up `attribute=value`.
    pub fn id_of(&self, attribute: &str, value: &str) -> Option<ItemId> {
        self.lookup.get(&Item::new(attribute, value)).copied()
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    /// Index into [`attributes`](Self::attributes) of the item's attribute.
    pub fn attribute_of(&self, id: ItemId) -> usize {
        self.item_attribute[id.index()]
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == name)
    }

    /// Item ids belonging to one attribute, ascending.
    pub fn items_of_attribute(&self, attribute: usize) -> Vec<ItemId> {
        self.item_attribute
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a == attribute)
            .map(|(i, _)| ItemId(i as u32))
            .collect()
    }

    pub fn target(&self) -> Option<&str> {
        self.target.as_deref()
    }

    pub fn render(&self, id: ItemId) -> String {
        match self.items.get(id.index()) {
            Some(item) => item.to_string(),
            None => id.to_string(),
        }
    }

    pub fn render_itemset(&self, itemset: &Itemset) -> String {
        itemset
            .items()
            .iter()
            .map(|&i| self.render(i))
            .collect::<Vec<_>>()
            .join(" & ")
    }

    pub fn check_itemset(&self, itemset: &Itemset) -> Result<()> {
        match itemset.items().iter().find(|i| i.index() >= self.items.len()) {
            Some(bad) => Err(Error::UnknownItem(bad.0)),
            None => Ok(()),
        }
    }

    /// Per-item frequencies, indexed by item id.
    pub fn item_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.items.len()];
        for t in &self.transactions {
            for &i in t.items() {
                counts[i.index()] += 1;
            }
        }
        counts
    }

    /// Content hash over attributes, dictionary, rows and target.
    pub fn fingerprint(&self) -> &str {
        self.fingerprint.get_or_init(|| {
            let mut h = Sha256::new();
            for a in &self.attributes {
                h.update(a.as_bytes());
                h.update([0x1f]);
            }
            h.update([0x1e]);
            for item in &self.items {
                h.update(item.attribute.as_bytes());
                h.update([0x1f]);
                h.update(item.value.as_bytes());
                h.update([0x1e]);
            }
            for t in &self.transactions {
                for i in t.items() {
                    h.update(i.0.to_le_bytes());
                }
                h.update([0xff, 0xff, 0xff, 0xff]);
            }
            if let Some(target) = &self.target {
                h.update(target.as_bytes());
            }
            hex::encode(h.finalize())
        })
    }

    /// Same dictionary, rows projected onto the items accepted by `keep`;
    /// rows left empty are dropped. The target marker is cleared because the
    /// projection may remove target items.
    pub fn project(&self, keep: impl Fn(ItemId) -> bool) -> TransactionDb {
        let transactions = self
            .transactions
            .iter()
            .map(|t| {
                Transaction(t.items().iter().copied().filter(|&i| keep(i)).collect())
            })
            .filter(|t| !t.is_empty())
            .collect();
        TransactionDb {
            attributes: self.attributes.clone(),
            items: self.items.clone(),
            item_attribute: self.item_attribute.clone(),
            lookup: self.lookup.clone(),
            transactions,
            target: None,
            fingerprint: OnceLock::new(),
        }
    }

    /// Copy of the database keeping only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> TransactionDb {
        TransactionDb {
            attributes: self.attributes.clone(),
            items: self.items.clone(),
            item_attribute: self.item_attribute.clone(),
            lookup: self.lookup.clone(),
            transactions: rows.iter().map(|&r| self.transactions[r].clone()).collect(),
            target: self.target.clone(),
            fingerprint: OnceLock::new(),
        }
    }
}

impl PartialEq for TransactionDb {
    fn eq(&self, other: &Self) -> bool {
        self.attributes == other.attributes
            && self.items == other.items
            && self.transactions == other.transactions
            && self.target == other.target
    }
}

/// Incremental constructor for [`TransactionDb`]. Items enter the dictionary
/// in first-occurrence order.
#[derive(Debug, Default)]
pub struct TransactionDbBuilder {
    attributes: Vec<String>,
    items: Vec<Item>,
    item_attribute: Vec<usize>,
    lookup: HashMap<Item, ItemId>,
    transactions: Vec<Transaction>,
}

impl TransactionDbBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pre-declares attributes so their order is fixed up front.
    pub fn with_attributes<S: Into<String>>(attributes: impl IntoIterator<Item = S>) -> Self {
        TransactionDbBuilder {
            attributes: attributes.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    fn attribute_index(&mut self, name: &str) -> usize {
        match self.attributes.iter().position(|a| a == name) {
            Some(i) => i,
            None => {
                self.attributes.push(name.to_string());
                self.attributes.len() - 1
            }
        }
    }

    pub fn intern(&mut self, attribute: &str, value: &str) -> ItemId {
        let key = Item::new(attribute, value);
        if let Some(&id) = self.lookup.get(&key) {
            return id;
        }
        let attr = self.attribute_index(attribute);
        let id = ItemId(self.items.len() as u32);
        self.items.push(key.clone());
        self.item_attribute.push(attr);
        self.lookup.insert(key, id);
        id
    }

    /// Adds one transaction given as `(attribute, value)` pairs.
    pub fn push<A: AsRef<str>, V: AsRef<str>>(&mut self, cells: &[(A, V)]) -> Result<()> {
        let mut ids: Vec<ItemId> = cells
            .iter()
            .map(|(a, v)| self.intern(a.as_ref(), v.as_ref()))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let mut seen = vec![false; self.attributes.len()];
        for &i in &ids {
            let a = self.item_attribute[i.index()];
            if seen[a] {
                return Err(Error::InvalidArgument(format!(
                    "transaction {} holds two values of attribute {}",
                    self.transactions.len(),
                    self.attributes[a]
                )));
            }
            seen[a] = true;
        }
        self.transactions.push(Transaction(ids));
        Ok(())
    }

    /// Adds one row with a value per pre-declared attribute, in order.
    pub fn push_row<V: AsRef<str>>(&mut self, values: &[V]) -> Result<()> {
        if values.len() != self.attributes.len() {
            return Err(Error::InvalidArgument(format!(
                "row has {} values, expected {}",
                values.len(),
                self.attributes.len()
            )));
        }
        let attrs = self.attributes.clone();
        let cells: Vec<(&str, &str)> = attrs
            .iter()
            .zip(values)
            .map(|(a, v)| (a.as_str(), v.as_ref()))
            .collect();
        self.push(&cells)
    }

    pub fn build(self, target: Option<&str>) -> Result<TransactionDb> {
        if let Some(target) = target {
            let attr = self
                .attributes
                .iter()
                .position(|a| a == target)
                .ok_or_else(|| Error::Schema(format!("target attribute {target} not present")))?;
            for (row, t) in self.transactions.iter().enumerate() {
                let n = t
                    .items()
                    .iter()
                    .filter(|i| self.item_attribute[i.index()] == attr)
                    .count();
                if n != 1 {
                    return Err(Error::Schema(format!(
                        "row {row} holds {n} values of target {target}"
                    )));
                }
            }
        }
        Ok(TransactionDb {
            attributes: self.attributes,
            items: self.items,
            item_attribute: self.item_attribute,
            lookup: self.lookup,
            transactions: self.transactions,
            target: target.map(str::to_string),
            fingerprint: OnceLock::new(),
        })
    }
}

/// Half-open support interval `(lo, hi]` used for exception rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SupportInterval {
    pub fn contains(&self, support: f64) -> bool {
        support > self.lo && support <= self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_prob: f64,
    pub min_support: f64,
    pub min_confidence: f64,
    pub min_cpir: f64,
    pub exception_support: SupportInterval,
}

impl Default for Thresholds {
    /// Support 0.7, confidence 0.9, CPIR 0.6, exception support (0.2, 0.4];
    /// the probability prefilter sits at the exception lower bound.
    fn default() -> Self {
        Thresholds {
            min_prob: 0.2,
            min_support: 0.7,
            min_confidence: 0.9,
            min_cpir: 0.6,
            exception_support: SupportInterval { lo: 0.2, hi: 0.4 },
        }
    }
}

impl Thresholds {
    /// Builds thresholds with the prefilter at the exception lower bound.
    pub fn new(
        min_support: f64,
        min_confidence: f64,
        min_cpir: f64,
        exception: (f64, f64),
    ) -> Result<Self> {
        let t = Thresholds {
            min_prob: exception.0,
            min_support,
            min_confidence,
            min_cpir,
            exception_support: SupportInterval {
                lo: exception.0,
                hi: exception.1,
            },
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_min_prob(mut self, min_prob: f64) -> Result<Self> {
        self.min_prob = min_prob;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [
            ("min-prob", self.min_prob),
            ("min-support", self.min_support),
            ("min-confidence", self.min_confidence),
            ("exception lo", self.exception_support.lo),
            ("exception hi", self.exception_support.hi),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidThresholds(format!("{name} = {v} is not in [0, 1]")));
            }
        }
        // CPIR may legitimately be negative, but never above 1.
        if self.min_cpir.is_nan() || self.min_cpir > 1.0 {
            return Err(Error::InvalidThresholds(format!(
                "min-cpir = {} exceeds 1",
                self.min_cpir
            )));
        }
        let SupportInterval { lo, hi } = self.exception_support;
        if !(lo < hi && hi <= self.min_support) {
            return Err(Error::InvalidThresholds(format!(
                "exception interval ({lo}, {hi}] must satisfy lo < hi <= min-support {}",
                self.min_support
            )));
        }
        Ok(())
    }

    /// Lowest support any emitted rule family can have; miners run at this floor.
    pub fn mining_floor(&self) -> f64 {
        self.min_support.min(self.exception_support.lo)
    }

    pub fn classify(&self, support: f64, confidence: f64, cpir: f64) -> RuleKind {
        if confidence < self.min_confidence || cpir < self.min_cpir {
            return RuleKind::Reference;
        }
        if support >= self.min_support {
            RuleKind::Common
        } else if self.exception_support.contains(support) {
            RuleKind::Exception
        } else {
            RuleKind::Reference
        }
    }
}

/// Smallest count `c` with `c / n >= fraction` under f64 comparison.
pub fn min_count(fraction: f64, n: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    let nf = n as f64;
    let mut c = (fraction * nf).ceil().max(0.0) as u64;
    while c > 0 && (c - 1) as f64 / nf >= fraction {
        c -= 1;
    }
    while (c as f64) / nf < fraction {
        c += 1;
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Common,
    Exception,
    Reference,
}

impl RuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Common => "common",
            RuleKind::Exception => "exception",
            RuleKind::Reference => "reference",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "common" => Ok(RuleKind::Common),
            "exception" => Ok(RuleKind::Exception),
            "reference" => Ok(RuleKind::Reference),
            other => Err(Error::InvalidArgument(format!("unknown rule kind {other:?}"))),
        }
    }
}

/// A scored implication `antecedent => consequent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Itemset,
    pub consequent: ItemId,
    pub support: f64,
    pub confidence: f64,
    pub cpir: f64,
    pub kind: RuleKind,
    pub antecedent_count: u64,
    pub joint_count: u64,
    pub consequent_count: u64,
    pub n_rows: u64,
}

impl Rule {
    /// Scores a rule from raw counts. Returns `None` when CPIR is undefined
    /// (the consequent holds in every row).
    pub fn score(
        antecedent: Itemset,
        consequent: ItemId,
        antecedent_count: u64,
        joint_count: u64,
        consequent_count: u64,
        n_rows: u64,
        thresholds: &Thresholds,
    ) -> Option<Rule> {
        let cpir = measures::cpir_positive_from_counts(
            antecedent_count,
            joint_count,
            consequent_count,
            n_rows,
        )
        .ok()?;
        let support = measures::ratio(joint_count, n_rows);
        let confidence = measures::ratio(joint_count, antecedent_count);
        Some(Rule {
            antecedent,
            consequent,
            support,
            confidence,
            cpir,
            kind: thresholds.classify(support, confidence, cpir),
            antecedent_count,
            joint_count,
            consequent_count,
            n_rows,
        })
    }

    /// Same rule, same counts, same measures: identical up to float bits.
    pub fn same_as(&self, other: &Rule) -> bool {
        self.antecedent == other.antecedent
            && self.consequent == other.consequent
            && self.kind == other.kind
            && self.antecedent_count == other.antecedent_count
            && self.joint_count == other.joint_count
            && self.consequent_count == other.consequent_count
            && self.n_rows == other.n_rows
            && self.support.to_bits() == other.support.to_bits()
            && self.confidence.to_bits() == other.confidence.to_bits()
            && self.cpir.to_bits() == other.cpir.to_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<ItemId> {
        v.iter().map(|&i| ItemId(i)).collect()
    }

    #[test]
    fn itemset_is_canonical() {
        let a = Itemset::new(ids(&[3, 1, 2, 3, 1]));
        let b = Itemset::new(ids(&[1, 2, 3]));
        assert_eq!(a, b);
        assert_eq!(a.items(), ids(&[1, 2, 3]).as_slice());
    }

    #[test]
    fn subset_merge() {
        let hay = ids(&[1, 3, 5, 7]);
        assert!(is_sorted_subset(&ids(&[]), &hay));
        assert!(is_sorted_subset(&ids(&[3, 7]), &hay));
        assert!(!is_sorted_subset(&ids(&[3, 4]), &hay));
        assert!(!is_sorted_subset(&ids(&[8]), &hay));
        assert!(!is_sorted_subset(&ids(&[0]), &hay));
    }

    #[test]
    fn min_count_agrees_with_float_comparison() {
        for n in 1..200usize {
            for f in [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.9, 1.0] {
                let c = min_count(f, n);
                assert!(c as f64 / n as f64 >= f);
                if c > 0 {
                    assert!(((c - 1) as f64 / n as f64) < f);
                }
            }
        }
    }

    #[test]
    fn thresholds_reject_bad_interval() {
        assert!(Thresholds::default().validate().is_ok());
        assert!(Thresholds::new(0.7, 0.9, 0.6, (0.4, 0.2)).is_err());
        assert!(Thresholds::new(0.3, 0.9, 0.6, (0.2, 0.4)).is_err());
        assert!(Thresholds::new(1.01, 0.9, 0.6, (0.2, 0.4)).is_err());
    }

    #[test]
    fn classification_partitions_by_support() {
        let t = Thresholds::default();
        assert_eq!(t.classify(0.7, 0.95, 0.8), RuleKind::Common);
        assert_eq!(t.classify(0.4, 0.95, 0.8), RuleKind::Exception);
        assert_eq!(t.classify(0.2, 0.95, 0.8), RuleKind::Reference);
        assert_eq!(t.classify(0.5, 0.95, 0.8), RuleKind::Reference);
        assert_eq!(t.classify(0.8, 0.85, 0.8), RuleKind::Reference);
        assert_eq!(t.classify(0.8, 0.95, 0.5), RuleKind::Reference);
    }

    #[test]
    fn builder_rejects_two_values_of_one_attribute() {
        let mut b = TransactionDbBuilder::new();
        assert!(b.push(&[("A", "x"), ("A", "y")]).is_err());
    }

    #[test]
    fn builder_checks_target_presence() {
        let mut b = TransactionDbBuilder::new();
        b.push(&[("A", "x"), ("C", "p")]).unwrap();
        b.push(&[("A", "y")]).unwrap();
        assert!(b.build(Some("C")).is_err());
    }
}
