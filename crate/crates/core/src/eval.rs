//! Rule-based feature selection and stratified k-fold cross-validation with
//! categorical naive Bayes, one-vs-rest logistic regression, a Gini decision
//! tree and a majority-class baseline.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rulegen::{rules_to_string, RuleFormat, RuleSet};
use crate::types::{RuleKind, TransactionDb};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub attributes: BTreeSet<String>,
    /// SHA-256 of the CSV export of the rule set the attributes came from.
    pub provenance: String,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }
}

/// Attributes appearing in the antecedent of any retained rule.
pub fn select_features(rules: &RuleSet) -> Result<FeatureSet> {
    let kept = rules
        .rules
        .iter()
        .filter(|r| matches!(r.kind, RuleKind::Common | RuleKind::Exception));
    let attributes: BTreeSet<String> = kept
        .flat_map(|r| r.antecedent.items().iter().map(|&i| rules.item(i).attribute.clone()))
        .collect();
    if attributes.is_empty() {
        return Err(Error::NoRules);
    }
    let csv = rules_to_string(rules, RuleFormat::Csv)?;
    Ok(FeatureSet {
        attributes,
        provenance: hex::encode(Sha256::digest(csv.as_bytes())),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    NaiveBayes,
    LogisticRegression,
    DecisionTree,
    Majority,
}

impl Model {
    pub const ALL: [Model; 4] = [
        Model::NaiveBayes,
        Model::LogisticRegression,
        Model::DecisionTree,
        Model::Majority,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Model::NaiveBayes => "naive_bayes",
            Model::LogisticRegression => "logistic_regression",
            Model::DecisionTree => "decision_tree",
            Model::Majority => "majority",
        }
    }

    /// Fixed hyperparameters, recorded with every result.
    pub fn params(self) -> String {
        match self {
            Model::NaiveBayes => format!("alpha={NB_ALPHA}"),
            Model::LogisticRegression => format!("lr={LR_RATE};epochs={LR_EPOCHS};l2={LR_L2}"),
            Model::DecisionTree => format!("criterion=gini;max_depth={DT_MAX_DEPTH}"),
            Model::Majority => String::new(),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nb" | "naive_bayes" => Ok(Model::NaiveBayes),
            "lr" | "logistic_regression" => Ok(Model::LogisticRegression),
            "dt" | "decision_tree" => Ok(Model::DecisionTree),
            "majority" => Ok(Model::Majority),
            other => Err(Error::InvalidArgument(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    All,
    Selected,
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::All => "all",
            FeatureMode::Selected => "selected",
        })
    }
}

pub const NB_ALPHA: f64 = 1.0;
pub const LR_RATE: f64 = 0.1;
pub const LR_EPOCHS: usize = 500;
pub const LR_L2: f64 = 1e-4;
pub const DT_MAX_DEPTH: usize = 8;

/// Categorical rows: per feature, the value's index within its attribute.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub features: Vec<String>,
    pub n_values: Vec<usize>,
    pub rows: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl Encoded {
    /// Encodes `db` over the given feature attributes (all non-target
    /// attributes when `None`). The database must have a target.
    pub fn from_db(db: &TransactionDb, features: Option<&FeatureSet>) -> Result<Encoded> {
        let target = db
            .target()
            .ok_or_else(|| Error::InvalidArgument("database has no target attribute".into()))?;
        let t = db.attribute_index(target).expect("target is an attribute");
        let names: Vec<String> = match features {
            Some(fs) => {
                for a in &fs.attributes {
                    if a == target || db.attribute_index(a).is_none() {
                        return Err(Error::InvalidArgument(format!("feature {a} is not a non-target attribute")));
                    }
                }
                db.attributes().iter().filter(|a| fs.attributes.contains(*a)).cloned().collect()
            }
            None => db.attributes().iter().filter(|a| a.as_str() != target).cloned().collect(),
        };
        let attr_idx: Vec<usize> = names.iter().map(|a| db.attribute_index(a).unwrap()).collect();
        // Local value index of every item within its attribute.
        let mut local = vec![0usize; db.n_items()];
        let mut n_values = vec![0usize; db.attributes().len()];
        for (id, _) in db.items() {
            let a = db.attribute_of(id);
            local[id.index()] = n_values[a];
            n_values[a] += 1;
        }
        let slot: Vec<Option<usize>> = (0..db.attributes().len())
            .map(|a| attr_idx.iter().position(|&x| x == a))
            .collect();
        let mut rows = Vec::with_capacity(db.n_rows());
        let mut labels = Vec::with_capacity(db.n_rows());
        for tr in db.transactions() {
            let mut row = vec![usize::MAX; names.len()];
            let mut label = None;
            for &i in tr.items() {
                let a = db.attribute_of(i);
                if a == t {
                    label = Some(local[i.index()]);
                } else if let Some(s) = slot[a] {
                    row[s] = local[i.index()];
                }
            }
            rows.push(row);
            labels.push(label.expect("every row has a target value"));
        }
        Ok(Encoded {
            n_values: attr_idx.iter().map(|&a| n_values[a]).collect(),
            features: names,
            rows,
            labels,
            classes: db.items_of_attribute(t).iter().map(|&i| db.item(i).unwrap().value.clone()).collect(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn subset(&self, idx: &[usize]) -> (Vec<&[usize]>, Vec<usize>) {
        (
            idx.iter().map(|&i| self.rows[i].as_slice()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

/// A trained classifier over categorical rows.
pub trait Classifier: Send + Sync {
    fn predict(&self, row: &[usize]) -> usize;
}

pub struct MajorityModel {
    class: usize,
}

impl MajorityModel {
    pub fn fit(labels: &[usize], n_classes: usize) -> Self {
        let mut counts = vec![0usize; n_classes];
        for &y in labels {
            counts[y] += 1;
        }
        // Ties go to the lowest class index.
        let class = (0..n_classes).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap_or(0);
        MajorityModel { class }
    }
}

impl Classifier for MajorityModel {
    fn predict(&self, _row: &[usize]) -> usize {
        self.class
    }
}

/// Categorical naive Bayes with Laplace smoothing. Classes absent from the
/// training data are never predicted; values never seen in training are
/// skipped.
pub struct NaiveBayes {
    log_prior: Vec<Option<f64>>,
    /// `[feature][class][value]` log-likelihoods.
    log_lik: Vec<Vec<Vec<f64>>>,
    seen: Vec<Vec<bool>>,
}

impl NaiveBayes {
    pub fn fit(rows: &[&[usize]], labels: &[usize], n_values: &[usize], n_classes: usize) -> Self {
        let n = labels.len() as f64;
        let mut class_n = vec![0usize; n_classes];
        for &y in labels {
            class_n[y] += 1;
        }
        let present = class_n.iter().filter(|&&c| c > 0).count() as f64;
        let log_prior = class_n
            .iter()
            .map(|&c| (c > 0).then(|| ((c as f64 + NB_ALPHA) / (n + NB_ALPHA * present)).ln()))
            .collect();
        let mut log_lik = Vec::with_capacity(n_values.len());
        let mut seen = Vec::with_capacity(n_values.len());
        for (f, &v) in n_values.iter().enumerate() {
            let mut counts = vec![vec![0usize; v]; n_classes];
            let mut s = vec![false; v];
            for (row, &y) in rows.iter().zip(labels) {
                if row[f] < v {
                    counts[y][row[f]] += 1;
                    s[row[f]] = true;
                }
            }
            log_lik.push(
                counts
                    .iter()
                    .enumerate()
                    .map(|(c, cv)| {
                        let den = class_n[c] as f64 + NB_ALPHA * v as f64;
                        cv.iter().map(|&k| ((k as f64 + NB_ALPHA) / den).ln()).collect()
                    })
                    .collect(),
            );
            seen.push(s);
        }
        NaiveBayes { log_prior, log_lik, seen }
    }
}

impl Classifier for NaiveBayes {
    fn predict(&self, row: &[usize]) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (c, prior) in self.log_prior.iter().enumerate() {
            let Some(prior) = prior else { continue };
            let mut score = *prior;
            for (f, &v) in row.iter().enumerate() {
                if v < self.seen[f].len() && self.seen[f][v] {
                    score += self.log_lik[f][c][v];
                }
            }
            if score > best.0 {
                best = (score, c);
            }
        }
        best.1
    }
}

/// Sparse one-hot encoding: active column indices per row. Column 0 is the bias.
fn one_hot(rows: &[&[usize]], n_values: &[usize], known: &[Vec<bool>]) -> (Vec<Vec<usize>>, usize) {
    let mut offset = Vec::with_capacity(n_values.len());
    let mut dim = 1;
    for &v in n_values {
        offset.push(dim);
        dim += v;
    }
    let x = rows
        .iter()
        .map(|row| {
            let mut cols = vec![0];
            for (f, &v) in row.iter().enumerate() {
                if v < n_values[f] && known[f][v] {
                    cols.push(offset[f] + v);
                }
            }
            cols
        })
        .collect();
    (x, dim)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary log-loss plus `l2/2 * |w[1..]|^2` and its gradient, for
/// sparse binary rows (`x[i]` lists the columns equal to 1; column 0 is the
/// bias and is not regularized).
pub fn lr_loss_and_grad(w: &[f64], x: &[Vec<usize>], y: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; w.len()];
    for (cols, &t) in x.iter().zip(y) {
        let z: f64 = cols.iter().map(|&c| w[c]).sum();
        // log(1 + e^z) - t z, computed stably.
        let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        loss += softplus - t * z;
        let r = sigmoid(z) - t;
        for &c in cols {
            grad[c] += r;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for j in 1..w.len() {
        loss += 0.5 * l2 * w[j] * w[j];
        grad[j] += l2 * w[j];
    }
    (loss, grad)
}

/// One-vs-rest logistic regression trained by full-batch gradient descent.
pub struct LogisticRegression {
    weights: Vec<Vec<f64>>,
    n_values: Vec<usize>,
    known: Vec<Vec<bool>>,
}

impl LogisticRegression {
    pub fn fit(rows: &[&[usize]], labels: &[usize], n_values: &[usize], n_classes: usize) -> Self {
        let known: Vec<Vec<bool>> = n_values
            .iter()
            .enumerate()
            .map(|(f, &v)| {
                let mut k = vec![false; v];
                for row in rows {
                    if row[f] < v {
                        k[row[f]] = true;
                    }
                }
                k
            })
            .collect();
        let (x, dim) = one_hot(rows, n_values, &known);
        let weights = (0..n_classes)
            .map(|c| {
                let y: Vec<f64> = labels.iter().map(|&l| (l == c) as u8 as f64).collect();
                let mut w = vec![0.0; dim];
                for _ in 0..LR_EPOCHS {
                    let (_, g) = lr_loss_and_grad(&w, &x, &y, LR_L2);
                    for (wj, gj) in w.iter_mut().zip(g) {
                        *wj -= LR_RATE * gj;
                    }
                }
                w
            })
            .collect();
        LogisticRegression {
            weights,
            n_values: n_values.to_vec(),
            known,
        }
    }
}

impl Classifier for LogisticRegression {
    fn predict(&self, row: &[usize]) -> usize {
        let (x, _) = one_hot(&[row], &self.n_values, &self.known);
        let mut best = (f64::NEG_INFINITY, 0);
        for (c, w) in self.weights.iter().enumerate() {
            let z: f64 = x[0].iter().map(|&j| w[j]).sum();
            if z > best.0 {
                best = (z, c);
            }
        }
        best.1
    }
}

enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        value: usize,
        present: Box<Node>,
        absent: Box<Node>,
    },
}

/// CART-style tree with binary `feature == value` splits chosen by Gini gain.
pub struct DecisionTree {
    root: Node,
}

fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    (0..counts.len()).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap_or(0)
}

impl DecisionTree {
    pub fn fit(rows: &[&[usize]], labels: &[usize], n_values: &[usize], n_classes: usize) -> Self {
        let idx: Vec<usize> = (0..rows.len()).collect();
        DecisionTree {
            root: Self::grow(rows, labels, n_values, n_classes, &idx, 0),
        }
    }

    fn grow(
        rows: &[&[usize]],
        labels: &[usize],
        n_values: &[usize],
        n_classes: usize,
        idx: &[usize],
        depth: usize,
    ) -> Node {
        let mut counts = vec![0usize; n_classes];
        for &i in idx {
            counts[labels[i]] += 1;
        }
        let parent = gini(&counts);
        if depth >= DT_MAX_DEPTH || parent == 0.0 || idx.len() < 2 {
            return Node::Leaf(majority(&counts));
        }
        let n = idx.len() as f64;
        let mut best: Option<(f64, usize, usize)> = None;
        for (f, &v) in n_values.iter().enumerate() {
            // Class counts per value of this feature.
            let mut by_value = vec![vec![0usize; n_classes]; v];
            for &i in idx {
                if rows[i][f] < v {
                    by_value[rows[i][f]][labels[i]] += 1;
                }
            }
            for (val, inside) in by_value.iter().enumerate() {
                let k: usize = inside.iter().sum();
                if k == 0 || k == idx.len() {
                    continue;
                }
                let outside: Vec<usize> = counts.iter().zip(inside).map(|(a, b)| a - b).collect();
                let w = k as f64 / n;
                let impurity = w * gini(inside) + (1.0 - w) * gini(&outside);
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, val));
                }
            }
        }
        let Some((_, feature, value)) = best else {
            return Node::Leaf(majority(&counts));
        };
        let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][feature] == value);
        Node::Split {
            feature,
            value,
            present: Box::new(Self::grow(rows, labels, n_values, n_classes, &yes, depth + 1)),
            absent: Box::new(Self::grow(rows, labels, n_values, n_classes, &no, depth + 1)),
        }
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { present, absent, .. } => 1 + d(present).max(d(absent)),
            }
        }
        d(&self.root)
    }
}

impl Classifier for DecisionTree {
    fn predict(&self, row: &[usize]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(c) => return *c,
                Node::Split {
                    feature,
                    value,
                    present,
                    absent,
                } => node = if row[*feature] == *value { present } else { absent },
            }
        }
    }
}

pub fn train(model: Model, rows: &[&[usize]], labels: &[usize], n_values: &[usize], n_classes: usize) -> Box<dyn Classifier> {
    match model {
        Model::NaiveBayes => Box::new(NaiveBayes::fit(rows, labels, n_values, n_classes)),
        Model::LogisticRegression => Box::new(LogisticRegression::fit(rows, labels, n_values, n_classes)),
        Model::DecisionTree => Box::new(DecisionTree::fit(rows, labels, n_values, n_classes)),
        Model::Majority => Box::new(MajorityModel::fit(labels, n_classes)),
    }
}

/// Fold index per row. Each class is shuffled with the seed and dealt
/// round-robin, continuing from where the previous class stopped, so every
/// fold's class counts are within one of the global proportion.
pub fn stratified_folds(labels: &[usize], classes: &[String], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("folds must be at least 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::InvalidArgument(format!("{k} folds exceed {} rows", labels.len())));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    for (c, rows) in by_class.iter().enumerate() {
        if !rows.is_empty() && rows.len() < k {
            return Err(Error::Stratification {
                class: classes[c].clone(),
                count: rows.len(),
                folds: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0usize; labels.len()];
    let mut next = 0;
    for mut rows in by_class {
        rows.shuffle(&mut rng);
        for i in rows {
            fold[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(fold)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub model: Model,
    pub mode: FeatureMode,
    pub folds: usize,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub seed: u64,
    pub n_features: usize,
    pub params: String,
}

pub fn kfold_cv(db: &TransactionDb, model: Model, k: usize, features: Option<&FeatureSet>, seed: u64) -> Result<CvResult> {
    let enc = Encoded::from_db(db, features)?;
    let fold = stratified_folds(&enc.labels, &enc.classes, k, seed)?;
    let accuracies: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..fold.len()).filter(|&i| fold[i] != f).collect();
            let test_idx: Vec<usize> = (0..fold.len()).filter(|&i| fold[i] == f).collect();
            let (rows, labels) = enc.subset(&train_idx);
            let clf = train(model, &rows, &labels, &enc.n_values, enc.n_classes());
            let hits = test_idx
                .iter()
                .filter(|&&i| clf.predict(&enc.rows[i]) == enc.labels[i])
                .count();
            hits as f64 / test_idx.len() as f64
        })
        .collect();
    Ok(CvResult {
        model,
        mode: if features.is_some() { FeatureMode::Selected } else { FeatureMode::All },
        folds: k,
        mean: accuracies.iter().sum::<f64>() / k as f64,
        accuracies,
        seed,
        n_features: enc.features.len(),
        params: model.params(),
    })
}

pub const CV_COLUMNS: [&str; 8] = ["model", "mode", "fold", "accuracy", "mean", "n_features", "seed", "params"];

pub fn write_cv_csv<W: Write>(results: &[CvResult], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CV_COLUMNS)?;
    for r in results {
        for (f, acc) in r.accuracies.iter().enumerate() {
            w.write_record([
                r.model.to_string(),
                r.mode.to_string(),
                (f + 1).to_string(),
                format!("{acc:.6}"),
                format!("{:.6}", r.mean),
                r.n_features.to_string(),
                r.seed.to_string(),
                r.params.clone(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
