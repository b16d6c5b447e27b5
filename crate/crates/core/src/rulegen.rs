//! Rule generation, classification, export, and the brute-force oracle.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequent::FrequentItemsets;
use crate::types::{Item, ItemId, Itemset, Rule, RuleKind, Thresholds, TransactionDb};

/// Largest dictionary the exhaustive oracle will enumerate.
pub const ORACLE_ITEM_LIMIT: usize = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub thresholds: Thresholds,
    pub db_fingerprint: String,
    pub target: Option<String>,
    /// Item dictionary of the mined database, for rendering.
    pub dictionary: Vec<Item>,
}

impl RuleSet {
    fn new(db: &TransactionDb, thresholds: &Thresholds, target: Option<&str>, mut rules: Vec<Rule>) -> Self {
        rules.retain(|r| r.kind != RuleKind::Reference);
        rules.sort_by(rule_order);
        RuleSet {
            rules,
            thresholds: *thresholds,
            db_fingerprint: db.fingerprint().to_string(),
            target: target.map(str::to_string),
            dictionary: db.items().map(|(_, item)| item.clone()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn count(&self, kind: RuleKind) -> usize {
        self.rules.iter().filter(|r| r.kind == kind).count()
    }

    pub fn item(&self, id: ItemId) -> &Item {
        &self.dictionary[id.index()]
    }

    pub fn render_antecedent(&self, rule: &Rule) -> String {
        rule.antecedent
            .items()
            .iter()
            .map(|&i| self.item(i).to_string())
            .collect::<Vec<_>>()
            .join(" & ")
    }

    /// Rule-for-rule equality including kinds, with measures within `tol`.
    pub fn matches(&self, other: &RuleSet, tol: f64) -> bool {
        self.rules.len() == other.rules.len()
            && self.rules.iter().zip(&other.rules).all(|(a, b)| {
                a.antecedent == b.antecedent
                    && a.consequent == b.consequent
                    && a.kind == b.kind
                    && a.joint_count == b.joint_count
                    && a.antecedent_count == b.antecedent_count
                    && (a.support - b.support).abs() <= tol
                    && (a.confidence - b.confidence).abs() <= tol
                    && (a.cpir - b.cpir).abs() <= tol
            })
    }
}

/// Kind, then descending confidence, descending CPIR, antecedent, consequent.
pub fn rule_order(a: &Rule, b: &Rule) -> Ordering {
    a.kind
        .cmp(&b.kind)
        .then_with(|| b.confidence.total_cmp(&a.confidence))
        .then_with(|| b.cpir.total_cmp(&a.cpir))
        .then_with(|| a.antecedent.cmp(&b.antecedent))
        .then_with(|| a.consequent.cmp(&b.consequent))
}

fn target_filter(db: &TransactionDb, target: Option<&str>) -> Result<Option<usize>> {
    target
        .map(|t| {
            db.attribute_index(t)
                .ok_or_else(|| Error::Schema(format!("target attribute {t} not present")))
        })
        .transpose()
}

/// Scores every single-consequent split of every frequent itemset of size
/// two or more, and keeps the common and exception rules. With a target,
/// only consequents of that attribute are considered.
pub fn generate_rules(
    freq: &FrequentItemsets,
    db: &TransactionDb,
    thresholds: &Thresholds,
    target: Option<&str>,
) -> Result<RuleSet> {
    let target_attr = target_filter(db, target)?;
    generate_with(freq, db, thresholds, target, |y| {
        target_attr.is_none_or(|a| db.attribute_of(y) == a)
    })
}

/// Rules whose consequent is exactly `class`.
pub fn generate_class_rules(
    freq: &FrequentItemsets,
    db: &TransactionDb,
    thresholds: &Thresholds,
    class: ItemId,
) -> Result<RuleSet> {
    db.item(class)?;
    let target = db.attributes()[db.attribute_of(class)].clone();
    generate_with(freq, db, thresholds, Some(&target), |y| y == class)
}

fn generate_with(
    freq: &FrequentItemsets,
    db: &TransactionDb,
    thresholds: &Thresholds,
    target: Option<&str>,
    keep: impl Fn(ItemId) -> bool,
) -> Result<RuleSet> {
    thresholds.validate()?;
    if freq.db_fingerprint != db.fingerprint() {
        return Err(Error::FingerprintMismatch {
            expected: db.fingerprint().to_string(),
            found: freq.db_fingerprint.clone(),
        });
    }
    if freq.min_support > thresholds.mining_floor() {
        return Err(Error::IncompleteItemsets(format!(
            "itemsets were mined at support {}, rules need {}",
            freq.min_support,
            thresholds.mining_floor()
        )));
    }
    let counts = freq.counts();
    let n = freq.n_rows as u64;
    let lookup = |set: &Itemset| -> Result<u64> {
        counts
            .get(set)
            .copied()
            .ok_or_else(|| Error::IncompleteItemsets(db.render_itemset(set)))
    };

    let mut rules = Vec::new();
    for (set, joint) in freq.iter().filter(|(s, _)| s.len() >= 2) {
        for &y in set.items() {
            if !keep(y) {
                continue;
            }
            let antecedent = set.without(y);
            let a = lookup(&antecedent)?;
            let c = lookup(&Itemset::new([y]))?;
            if let Some(rule) = Rule::score(antecedent, y, a, *joint, c, n, thresholds) {
                rules.push(rule);
            }
        }
    }
    Ok(RuleSet::new(db, thresholds, target, rules))
}

/// Exhaustive ground truth: counts every subset of the dictionary by a
/// per-row bitmask scan and scores every split.
pub fn brute_force_oracle(
    db: &TransactionDb,
    thresholds: &Thresholds,
    target: Option<&str>,
) -> Result<RuleSet> {
    thresholds.validate()?;
    let d = db.n_items();
    if d > ORACLE_ITEM_LIMIT {
        return Err(Error::OracleTooLarge {
            items: d,
            limit: ORACLE_ITEM_LIMIT,
        });
    }
    let target_attr = target_filter(db, target)?;
    if d == 0 || db.is_empty() {
        return Ok(RuleSet::new(db, thresholds, target, Vec::new()));
    }
    let rows: Vec<u32> = db
        .transactions()
        .iter()
        .map(|t| t.items().iter().fold(0u32, |m, i| m | 1 << i.0))
        .collect();
    let count = |mask: u32| rows.iter().filter(|&&r| r & mask == mask).count() as u64;
    let n = db.n_rows() as u64;

    let mut rules = Vec::new();
    for mask in 1u32..(1u32 << d) {
        if mask.count_ones() < 2 {
            continue;
        }
        let joint = count(mask);
        if joint == 0 {
            continue;
        }
        for y in 0..d as u32 {
            if mask >> y & 1 == 0 {
                continue;
            }
            let yid = ItemId(y);
            if target_attr.is_some_and(|a| db.attribute_of(yid) != a) {
                continue;
            }
            let ante = mask & !(1 << y);
            let antecedent = Itemset::new((0..d as u32).filter(|i| ante >> i & 1 == 1).map(ItemId));
            if let Some(rule) = Rule::score(antecedent, yid, count(ante), joint, count(1 << y), n, thresholds) {
                rules.push(rule);
            }
        }
    }
    Ok(RuleSet::new(db, thresholds, target, rules))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for RuleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(RuleFormat::Csv),
            "jsonl" => Ok(RuleFormat::Jsonl),
            other => Err(Error::InvalidArgument(format!("unknown rule format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: [&str; 6] = ["antecedent", "consequent", "support", "confidence", "cpir", "kind"];

/// One exported rule, as read back from a CSV or JSONL file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportedRule {
    pub antecedent: Vec<String>,
    pub consequent: String,
    pub support: f64,
    pub confidence: f64,
    pub cpir: f64,
    pub kind: RuleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antecedent_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consequent_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rows: Option<u64>,
}

impl ExportedRule {
    pub fn from_rule(rules: &RuleSet, rule: &Rule) -> Self {
        ExportedRule {
            antecedent: rule
                .antecedent
                .items()
                .iter()
                .map(|&i| rules.item(i).to_string())
                .collect(),
            consequent: rules.item(rule.consequent).to_string(),
            support: rule.support,
            confidence: rule.confidence,
            cpir: rule.cpir,
            kind: rule.kind,
            antecedent_count: Some(rule.antecedent_count),
            joint_count: Some(rule.joint_count),
            consequent_count: Some(rule.consequent_count),
            n_rows: Some(rule.n_rows),
        }
    }
}

pub fn write_rules<W: Write>(rules: &RuleSet, format: RuleFormat, sink: W) -> Result<()> {
    match format {
        RuleFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(CSV_HEADER)?;
            for r in &rules.rules {
                w.write_record([
                    rules.render_antecedent(r),
                    rules.item(r.consequent).to_string(),
                    format!("{:.6}", r.support),
                    format!("{:.6}", r.confidence),
                    format!("{:.6}", r.cpir),
                    r.kind.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::Csv(e.into()))?;
        }
        RuleFormat::Jsonl => {
            let mut w = sink;
            for r in &rules.rules {
                serde_json::to_writer(&mut w, &ExportedRule::from_rule(rules, r))?;
                w.write_all(b"\n").map_err(|e| Error::io("<jsonl sink>", e))?;
            }
            w.flush().map_err(|e| Error::io("<jsonl sink>", e))?;
        }
    }
    Ok(())
}

pub fn rules_to_string(rules: &RuleSet, format: RuleFormat) -> Result<String> {
    let mut buf = Vec::new();
    write_rules(rules, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("rule export is UTF-8"))
}

pub fn export_rules(rules: &RuleSet, format: RuleFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_rules(rules, format, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rules(format: RuleFormat, path: impl AsRef<Path>) -> Result<Vec<ExportedRule>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        RuleFormat::Csv => {
            let mut r = csv::Reader::from_reader(file);
            let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
            if header != CSV_HEADER {
                return Err(Error::MissingHeader);
            }
            let mut out = Vec::new();
            for rec in r.records() {
                let rec = rec?;
                let num = |i: usize| -> Result<f64> {
                    rec[i].parse().map_err(|_| {
                        Error::InvalidArgument(format!("bad number {:?} in {}", &rec[i], path.display()))
                    })
                };
                out.push(ExportedRule {
                    antecedent: rec[0].split(" & ").map(str::to_string).collect(),
                    consequent: rec[1].to_string(),
                    support: num(2)?,
                    confidence: num(3)?,
                    cpir: num(4)?,
                    kind: rec[5].parse()?,
                    antecedent_count: None,
                    joint_count: None,
                    consequent_count: None,
                    n_rows: None,
                });
            }
            Ok(out)
        }
        RuleFormat::Jsonl => {
            let mut out = Vec::new();
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if !line.trim().is_empty() {
                    out.push(serde_json::from_str(&line)?);
                }
            }
            Ok(out)
        }
    }
}

/// Per-kind tallies for summaries.
pub fn kind_counts(rules: &RuleSet) -> HashMap<RuleKind, usize> {
    let mut out = HashMap::new();
    for r in &rules.rules {
        *out.entry(r.kind).or_default() += 1;
    }
    out
}
