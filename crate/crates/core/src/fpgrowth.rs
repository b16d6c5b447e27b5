//! FP-Growth: a prefix tree over frequency-ordered transactions, mined by
//! recursive conditional trees with a single-path shortcut.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::frequent::{Algorithm, FrequentItemsets};
use crate::types::{min_count, ItemId, Itemset, TransactionDb};

const ROOT: usize = 0;

#[derive(Clone, Debug)]
pub struct FpNode {
    pub item: Option<ItemId>,
    pub count: u64,
    pub parent: usize,
    pub children: Vec<(ItemId, usize)>,
}

#[derive(Clone, Debug)]
pub struct FpTree {
    pub nodes: Vec<FpNode>,
    /// `(item, node chain)` in descending frequency, ties by ascending item id.
    pub header: Vec<(ItemId, Vec<usize>)>,
}

impl FpTree {
    fn with_order(order: &[ItemId]) -> Self {
        FpTree {
            nodes: vec![FpNode {
                item: None,
                count: 0,
                parent: ROOT,
                children: Vec::new(),
            }],
            header: order.iter().map(|&i| (i, Vec::new())).collect(),
        }
    }

    /// Builds a tree from weighted paths already filtered and ordered.
    fn insert(&mut self, path: &[ItemId], count: u64, slot: &HashMap<ItemId, usize>) {
        let mut cur = ROOT;
        for &item in path {
            let next = self.nodes[cur]
                .children
                .iter()
                .find(|(i, _)| *i == item)
                .map(|&(_, n)| n);
            cur = match next {
                Some(n) => {
                    self.nodes[n].count += count;
                    n
                }
                None => {
                    let n = self.nodes.len();
                    self.nodes.push(FpNode {
                        item: Some(item),
                        count,
                        parent: cur,
                        children: Vec::new(),
                    });
                    self.nodes[cur].children.push((item, n));
                    self.header[slot[&item]].1.push(n);
                    n
                }
            };
        }
    }

    pub fn root(&self) -> &FpNode {
        &self.nodes[ROOT]
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Sum of counts along an item's header chain.
    pub fn item_count(&self, item: ItemId) -> u64 {
        self.header
            .iter()
            .find(|(i, _)| *i == item)
            .map(|(_, chain)| chain.iter().map(|&n| self.nodes[n].count).sum())
            .unwrap_or(0)
    }

    fn path_to_root(&self, node: usize) -> Vec<ItemId> {
        let mut path = Vec::new();
        let mut cur = self.nodes[node].parent;
        while cur != ROOT {
            path.push(self.nodes[cur].item.expect("non-root node has an item"));
            cur = self.nodes[cur].parent;
        }
        path.reverse();
        path
    }

    /// The single root-to-leaf path, when the tree has no branching.
    fn single_path(&self) -> Option<Vec<(ItemId, u64)>> {
        let mut out = Vec::new();
        let mut cur = ROOT;
        loop {
            match self.nodes[cur].children.as_slice() {
                [] => return Some(out),
                [(item, n)] => {
                    out.push((*item, self.nodes[*n].count));
                    cur = *n;
                }
                _ => return None,
            }
        }
    }

    /// Multiset of root paths weighted by how many transactions end there.
    /// Reproduces the frequent-item projection of the source database.
    pub fn weighted_paths(&self) -> Vec<(Vec<ItemId>, u64)> {
        let mut out = Vec::new();
        for n in 1..self.nodes.len() {
            let node = &self.nodes[n];
            let below: u64 = node.children.iter().map(|&(_, c)| self.nodes[c].count).sum();
            if node.count > below {
                let mut path = self.path_to_root(n);
                path.push(node.item.expect("non-root node has an item"));
                out.push((path, node.count - below));
            }
        }
        out
    }
}

/// Orders items by descending count, ties by ascending id.
fn frequency_order(counts: &HashMap<ItemId, u64>, floor: u64) -> Vec<ItemId> {
    let mut order: Vec<ItemId> = counts
        .iter()
        .filter(|&(_, &c)| c >= floor)
        .map(|(&i, _)| i)
        .collect();
    order.sort_unstable_by(|a, b| counts[b].cmp(&counts[a]).then(a.cmp(b)));
    order
}

fn build_from_paths<'a>(
    paths: impl IntoIterator<Item = (&'a [ItemId], u64)> + Clone,
    floor: u64,
) -> (FpTree, usize) {
    let mut counts: HashMap<ItemId, u64> = HashMap::new();
    for (path, c) in paths.clone() {
        for &i in path {
            *counts.entry(i).or_default() += c;
        }
    }
    let tallied = counts.len();
    let order = frequency_order(&counts, floor);
    let slot: HashMap<ItemId, usize> = order.iter().enumerate().map(|(s, &i)| (i, s)).collect();
    let mut tree = FpTree::with_order(&order);
    let mut buf = Vec::new();
    for (path, c) in paths {
        buf.clear();
        buf.extend(path.iter().copied().filter(|i| slot.contains_key(i)));
        buf.sort_unstable_by_key(|i| slot[i]);
        if !buf.is_empty() {
            tree.insert(&buf, c, &slot);
        }
    }
    (tree, tallied)
}

pub fn build_fptree(db: &TransactionDb, min_support: f64) -> Result<FpTree> {
    if db.is_empty() {
        return Err(Error::EmptyDb);
    }
    check_support(min_support)?;
    let floor = min_count(min_support, db.n_rows()).max(1);
    let (tree, _) = build_from_paths(db.transactions().iter().map(|t| (t.items(), 1u64)), floor);
    Ok(tree)
}

fn check_support(min_support: f64) -> Result<()> {
    if min_support > 0.0 && min_support <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "min-support {min_support} is not in (0, 1]"
        )))
    }
}

struct Miner {
    floor: u64,
    found: Vec<(Itemset, u64)>,
    tallied: u64,
    depth: usize,
}

impl Miner {
    fn emit(&mut self, suffix: &[ItemId], count: u64) {
        self.found.push((Itemset::new(suffix.iter().copied()), count));
    }

    fn mine(&mut self, tree: &FpTree, suffix: &mut Vec<ItemId>, depth: usize) {
        self.depth = self.depth.max(depth);
        if let Some(path) = tree.single_path() {
            self.enumerate_path(&path, suffix);
            return;
        }
        for (item, chain) in tree.header.iter().rev() {
            let count: u64 = chain.iter().map(|&n| tree.nodes[n].count).sum();
            suffix.push(*item);
            self.emit(suffix, count);
            let base: Vec<(Vec<ItemId>, u64)> = chain
                .iter()
                .map(|&n| (tree.path_to_root(n), tree.nodes[n].count))
                .filter(|(p, _)| !p.is_empty())
                .collect();
            let (cond, tallied) =
                build_from_paths(base.iter().map(|(p, c)| (p.as_slice(), *c)), self.floor);
            self.tallied += tallied as u64;
            if !cond.is_empty() {
                self.mine(&cond, suffix, depth + 1);
            }
            suffix.pop();
        }
    }

    /// Every nonempty combination of a single path's nodes is frequent; its
    /// count is the count of the deepest chosen node.
    fn enumerate_path(&mut self, path: &[(ItemId, u64)], suffix: &mut Vec<ItemId>) {
        fn rec(
            miner: &mut Miner,
            path: &[(ItemId, u64)],
            from: usize,
            suffix: &mut Vec<ItemId>,
        ) {
            for i in from..path.len() {
                let (item, count) = path[i];
                suffix.push(item);
                miner.emit(suffix, count);
                rec(miner, path, i + 1, suffix);
                suffix.pop();
            }
        }
        rec(self, path, 0, suffix);
    }
}

pub fn mine_fpgrowth(db: &TransactionDb, min_support: f64) -> Result<FrequentItemsets> {
    if db.is_empty() {
        return Err(Error::EmptyDb);
    }
    check_support(min_support)?;
    let floor = min_count(min_support, db.n_rows()).max(1);
    let (tree, tallied) =
        build_from_paths(db.transactions().iter().map(|t| (t.items(), 1u64)), floor);
    let mut miner = Miner {
        floor,
        found: Vec::new(),
        tallied: tallied as u64,
        depth: 0,
    };
    if !tree.is_empty() {
        miner.mine(&tree, &mut Vec::new(), 1);
    }
    let mut out = FrequentItemsets::new(Algorithm::FpGrowth, db, min_support);
    out.candidate_count = miner.tallied;
    out.iteration_count = miner.depth.max(1);
    let mut levels: std::collections::BTreeMap<usize, Vec<(Itemset, u64)>> = Default::default();
    for (set, c) in miner.found {
        levels.entry(set.len()).or_default().push((set, c));
    }
    for (k, sets) in levels {
        out.insert_level(k, sets);
    }
    Ok(out)
}
