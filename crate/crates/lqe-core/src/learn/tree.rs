//! CART decision tree: binary Gini splits with minimal cost-complexity
//! pruning.
//!
//! Growth searches every candidate threshold between distinct consecutive
//! values of each candidate feature, maximizing the Gini impurity decrease,
//! and stops on purity, the depth cap, or the minimum leaf size. Pruning
//! follows the weakest-link construction: the internal node with the
//! smallest effective alpha `g(t) = (R(leaf t) - R(subtree t)) / (|leaves|
//! - 1)` is collapsed while `g < alpha`, with `R` measured as training
//! misclassification fraction. The alpha is picked from a grid by balanced
//! accuracy on an internal stratified 80/20 split, ties toward the smaller
//! (less pruning) alpha.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::cmp::Reverse;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{FeatureMatrix, TreeParams};
use crate::rng::{stream, stream_rng};

pub(crate) const MAX_CLASSES: usize = 3;

/// A binary split: rows with `feature <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Split {
    pub feature: u32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
}

/// One tree node with its training class counts.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TreeNode {
    pub counts: [u32; MAX_CLASSES],
    pub prediction: u8,
    pub split: Option<Split>,
}

impl TreeNode {
    fn n_samples(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Misclassification count if this node were a leaf.
    fn misclass(&self) -> u64 {
        self.n_samples() - self.counts[self.prediction as usize] as u64
    }
}

/// A fitted CART in pre-order arena layout (children after parents).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tree {
    nodes: Vec<TreeNode>,
    n_features: usize,
    n_classes: usize,
}

impl Tree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], id: usize) -> usize {
            match &nodes[id].split {
                None => 0,
                Some(s) => {
                    1 + walk(nodes, s.left as usize).max(walk(nodes, s.right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    /// Local class index of the leaf a row falls into.
    pub fn predict_one(&self, row: &[f64]) -> u8 {
        let mut id = 0usize;
        while let Some(split) = &self.nodes[id].split {
            id = if row[split.feature as usize] <= split.threshold {
                split.left as usize
            } else {
                split.right as usize
            };
        }
        self.nodes[id].prediction
    }

    /// Leaf training-class distribution for a row, normalized.
    pub fn class_distribution(&self, row: &[f64]) -> Vec<f64> {
        let mut id = 0usize;
        while let Some(split) = &self.nodes[id].split {
            id = if row[split.feature as usize] <= split.threshold {
                split.left as usize
            } else {
                split.right as usize
            };
        }
        let node = &self.nodes[id];
        let total = node.n_samples().max(1) as f64;
        node.counts[..self.n_classes]
            .iter()
            .map(|&c| c as f64 / total)
            .collect()
    }

    fn predict_collapsed(&self, row: &[f64], collapsed: &[bool]) -> u8 {
        let mut id = 0usize;
        loop {
            if collapsed[id] {
                return self.nodes[id].prediction;
            }
            match &self.nodes[id].split {
                None => return self.nodes[id].prediction,
                Some(split) => {
                    id = if row[split.feature as usize] <= split.threshold {
                        split.left as usize
                    } else {
                        split.right as usize
                    };
                }
            }
        }
    }

    /// A copy with every collapsed subtree folded into a leaf.
    fn compact(&self, collapsed: &[bool]) -> Tree {
        fn copy(
            src: &[TreeNode],
            collapsed: &[bool],
            id: usize,
            out: &mut Vec<TreeNode>,
        ) -> u32 {
            let new_id = out.len() as u32;
            let node = &src[id];
            if collapsed[id] || node.split.is_none() {
                out.push(TreeNode { counts: node.counts, prediction: node.prediction, split: None });
                return new_id;
            }
            out.push(TreeNode { counts: node.counts, prediction: node.prediction, split: None });
            let split = node.split.as_ref().unwrap();
            let left = copy(src, collapsed, split.left as usize, out);
            let right = copy(src, collapsed, split.right as usize, out);
            out[new_id as usize].split = Some(Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            });
            new_id
        }
        let mut nodes = Vec::new();
        copy(&self.nodes, collapsed, 0, &mut nodes);
        Tree { nodes, n_features: self.n_features, n_classes: self.n_classes }
    }
}

/// Grows an unpruned tree over the given row indices.
///
/// `m_features < d` samples that many distinct candidate features per split
/// from `rng` (the random-forest case); candidates are examined in sorted
/// order so growth is deterministic for a given rng state.
pub(crate) fn grow_tree(
    x: &FeatureMatrix,
    y: &[u8],
    n_classes: usize,
    min_leaf: usize,
    max_depth: usize,
    mut indices: Vec<u32>,
    m_features: usize,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    debug_assert!(n_classes <= MAX_CLASSES);
    let mut builder = Builder {
        x,
        y,
        min_leaf: min_leaf.max(1),
        max_depth,
        m_features: m_features.min(x.cols()).max(1),
        nodes: Vec::new(),
        scratch: Vec::new(),
        feature_buf: Vec::new(),
    };
    builder.grow(&mut indices, 0, &mut rng);
    Tree { nodes: builder.nodes, n_features: x.cols(), n_classes }
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    y: &'a [u8],
    min_leaf: usize,
    max_depth: usize,
    m_features: usize,
    nodes: Vec<TreeNode>,
    scratch: Vec<(f64, u8)>,
    feature_buf: Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn grow(&mut self, indices: &mut [u32], depth: usize, rng: &mut Option<&mut ChaCha8Rng>) -> u32 {
        let n = indices.len();
        let mut counts = [0u32; MAX_CLASSES];
        for &i in indices.iter() {
            counts[self.y[i as usize] as usize] += 1;
        }
        let prediction = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(c, _)| c as u8)
            .unwrap_or(0);
        let node_id = self.nodes.len() as u32;
        self.nodes.push(TreeNode { counts, prediction, split: None });

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || n < 2 * self.min_leaf {
            return node_id;
        }

        let d = self.x.cols();
        self.feature_buf.clear();
        if self.m_features < d {
            let rng = rng.as_deref_mut().expect("feature subsetting needs an rng");
            let mut all: Vec<usize> = (0..d).collect();
            all.shuffle(rng);
            self.feature_buf.extend(all.into_iter().take(self.m_features));
            self.feature_buf.sort_unstable();
        } else {
            self.feature_buf.extend(0..d);
        }

        // score to beat: sum of squared counts over n for the unsplit node
        let parent_score: f64 =
            counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>() / n as f64;
        let mut best: Option<BestSplit> = None;
        let features = core::mem::take(&mut self.feature_buf);
        for &feature in &features {
            let mut scratch = core::mem::take(&mut self.scratch);
            scratch.clear();
            scratch.extend(
                indices
                    .iter()
                    .map(|&i| (self.x.row(i as usize)[feature], self.y[i as usize])),
            );
            scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0u64; MAX_CLASSES];
            let mut right = [0u64; MAX_CLASSES];
            for (c, r) in counts.iter().zip(right.iter_mut()) {
                *r = *c as u64;
            }
            for p in 1..n {
                let label = scratch[p - 1].1 as usize;
                left[label] += 1;
                right[label] -= 1;
                if p < self.min_leaf || n - p < self.min_leaf {
                    continue;
                }
                let (prev, next) = (scratch[p - 1].0, scratch[p].0);
                if prev >= next {
                    continue;
                }
                let sl: f64 = left.iter().map(|&c| (c * c) as f64).sum::<f64>() / p as f64;
                let sr: f64 =
                    right.iter().map(|&c| (c * c) as f64).sum::<f64>() / (n - p) as f64;
                let score = sl + sr;
                if best.as_ref().map_or(true, |b| score > b.score) {
                    let mut threshold = prev + (next - prev) / 2.0;
                    if !(threshold > prev && threshold < next) {
                        threshold = prev;
                    }
                    best = Some(BestSplit { feature, threshold, score });
                }
            }
            self.scratch = scratch;
        }
        self.feature_buf = features;

        let Some(best) = best else { return node_id };
        // require a genuine impurity decrease, up to roundoff
        if best.score - parent_score <= 1e-12 * n as f64 {
            return node_id;
        }

        // partition in place: `<= threshold` to the left
        let (feature, threshold) = (best.feature, best.threshold);
        let mut lo = 0usize;
        let mut hi = indices.len();
        while lo < hi {
            if self.x.row(indices[lo] as usize)[feature] <= threshold {
                lo += 1;
            } else {
                hi -= 1;
                indices.swap(lo, hi);
            }
        }
        if lo == 0 || lo == indices.len() {
            return node_id;
        }
        let (left_slice, right_slice) = indices.split_at_mut(lo);
        let left = self.grow(left_slice, depth + 1, rng);
        let right = self.grow(right_slice, depth + 1, rng);
        self.nodes[node_id as usize].split =
            Some(Split { feature: feature as u32, threshold, left, right });
        node_id
    }
}

/// Weakest-link cost-complexity pruner over a grown tree.
///
/// `advance_to(alpha)` collapses nodes while the smallest effective alpha is
/// strictly below `alpha`; calls must use non-decreasing alphas (the pruned
/// sequence is nested).
struct Pruner<'t> {
    tree: &'t Tree,
    n_total: f64,
    collapsed: Vec<bool>,
    dead: Vec<bool>,
    parent: Vec<u32>,
    leaves: Vec<i64>,
    r_sub: Vec<u64>,
    version: Vec<u32>,
    heap: BinaryHeap<Reverse<HeapEntry>>,
}

struct HeapEntry {
    g: f64,
    node: u32,
    version: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.g
            .total_cmp(&other.g)
            .then(self.node.cmp(&other.node))
            .then(self.version.cmp(&other.version))
    }
}

impl<'t> Pruner<'t> {
    fn new(tree: &'t Tree) -> Self {
        let n_nodes = tree.nodes.len();
        let mut parent = alloc::vec![u32::MAX; n_nodes];
        for (id, node) in tree.nodes.iter().enumerate() {
            if let Some(split) = &node.split {
                parent[split.left as usize] = id as u32;
                parent[split.right as usize] = id as u32;
            }
        }
        let mut leaves = alloc::vec![0i64; n_nodes];
        let mut r_sub = alloc::vec![0u64; n_nodes];
        // children always follow parents in the arena, so one reverse pass
        // aggregates bottom-up
        for id in (0..n_nodes).rev() {
            match &tree.nodes[id].split {
                None => {
                    leaves[id] = 1;
                    r_sub[id] = tree.nodes[id].misclass();
                }
                Some(split) => {
                    leaves[id] = leaves[split.left as usize] + leaves[split.right as usize];
                    r_sub[id] = r_sub[split.left as usize] + r_sub[split.right as usize];
                }
            }
        }
        let mut pruner = Pruner {
            tree,
            n_total: tree.nodes[0].n_samples() as f64,
            collapsed: alloc::vec![false; n_nodes],
            dead: alloc::vec![false; n_nodes],
            parent,
            leaves,
            r_sub,
            version: alloc::vec![0; n_nodes],
            heap: BinaryHeap::new(),
        };
        for id in 0..n_nodes {
            if pruner.tree.nodes[id].split.is_some() {
                pruner.push_entry(id);
            }
        }
        pruner
    }

    fn effective_alpha(&self, id: usize) -> f64 {
        let r_node = self.tree.nodes[id].misclass() as f64 / self.n_total;
        let r_sub = self.r_sub[id] as f64 / self.n_total;
        let extra_leaves = (self.leaves[id] - 1).max(1) as f64;
        (r_node - r_sub) / extra_leaves
    }

    fn push_entry(&mut self, id: usize) {
        self.heap.push(Reverse(HeapEntry {
            g: self.effective_alpha(id),
            node: id as u32,
            version: self.version[id],
        }));
    }

    fn advance_to(&mut self, alpha: f64) {
        loop {
            let Some(Reverse(entry)) = self.heap.peek() else { return };
            let id = entry.node as usize;
            let stale = self.dead[id]
                || self.collapsed[id]
                || entry.version != self.version[id];
            if stale {
                self.heap.pop();
                continue;
            }
            if !(entry.g < alpha) {
                return;
            }
            let Some(Reverse(entry)) = self.heap.pop() else { return };
            self.collapse(entry.node as usize);
        }
    }

    fn collapse(&mut self, id: usize) {
        self.collapsed[id] = true;
        // descendants die with the subtree
        let mut stack = alloc::vec![id];
        while let Some(current) = stack.pop() {
            if let Some(split) = &self.tree.nodes[current].split {
                for child in [split.left as usize, split.right as usize] {
                    if !self.dead[child] {
                        self.dead[child] = true;
                        stack.push(child);
                    }
                }
            }
        }
        let delta_leaves = 1 - self.leaves[id];
        let delta_r = self.tree.nodes[id].misclass() as i64 - self.r_sub[id] as i64;
        self.leaves[id] = 1;
        self.r_sub[id] = self.tree.nodes[id].misclass();
        let mut a = self.parent[id];
        while a != u32::MAX {
            let ai = a as usize;
            self.leaves[ai] += delta_leaves;
            self.r_sub[ai] = (self.r_sub[ai] as i64 + delta_r) as u64;
            self.version[ai] += 1;
            if !self.collapsed[ai] && !self.dead[ai] {
                self.push_entry(ai);
            }
            a = self.parent[ai];
        }
    }
}

/// Balanced accuracy (mean per-class recall over classes present).
fn balanced_accuracy(
    tree: &Tree,
    collapsed: &[bool],
    x: &FeatureMatrix,
    y: &[u8],
    indices: &[u32],
    n_classes: usize,
) -> f64 {
    let mut hit = alloc::vec![0u64; n_classes];
    let mut total = alloc::vec![0u64; n_classes];
    for &i in indices {
        let actual = y[i as usize] as usize;
        total[actual] += 1;
        if tree.predict_collapsed(x.row(i as usize), collapsed) as usize == actual {
            hit[actual] += 1;
        }
    }
    let mut acc = 0.0;
    let mut present = 0;
    for c in 0..n_classes {
        if total[c] > 0 {
            acc += hit[c] as f64 / total[c] as f64;
            present += 1;
        }
    }
    if present == 0 {
        0.0
    } else {
        acc / present as f64
    }
}

/// Internal stratified 80/20 split; validation takes every class's first
/// fifth after a seeded shuffle.
fn prune_split(y: &[u8], n_classes: usize, seed: u64) -> Option<(Vec<u32>, Vec<u32>)> {
    let mut per_class: Vec<Vec<u32>> = alloc::vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        per_class[c as usize].push(i as u32);
    }
    // selection needs enough members for a meaningful split
    if per_class.iter().any(|m| !m.is_empty() && m.len() < 5) {
        return None;
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (class, members) in per_class.iter_mut().enumerate() {
        let mut rng = stream_rng(seed, &[stream::TREE_PRUNE_SPLIT, class as u64]);
        members.shuffle(&mut rng);
        let n_val = (members.len() / 5).max(1).min(members.len().saturating_sub(1));
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Some((train, val))
}

/// Grows and prunes a CART per the configured parameters.
pub(crate) fn fit_tree(
    x: &FeatureMatrix,
    y: &[u8],
    n_classes: usize,
    params: &TreeParams,
    seed: u64,
) -> Tree {
    let mut grid: Vec<f64> = params.ccp_alpha_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let alpha = if grid.len() <= 1 {
        grid.first().copied().unwrap_or(0.0)
    } else {
        select_alpha(x, y, n_classes, params, seed, &grid)
    };

    let full = grow_tree(
        x,
        y,
        n_classes,
        params.min_samples_leaf,
        params.max_depth,
        (0..x.rows() as u32).collect(),
        x.cols(),
        None,
    );
    if alpha <= 0.0 {
        return full;
    }
    let mut pruner = Pruner::new(&full);
    pruner.advance_to(alpha);
    let collapsed = pruner.collapsed;
    full.compact(&collapsed)
}

fn select_alpha(
    x: &FeatureMatrix,
    y: &[u8],
    n_classes: usize,
    params: &TreeParams,
    seed: u64,
    grid: &[f64],
) -> f64 {
    let Some((train, val)) = prune_split(y, n_classes, seed) else {
        return grid[0];
    };
    if train.is_empty() || val.is_empty() {
        return grid[0];
    }
    let tree = grow_tree(
        x,
        y,
        n_classes,
        params.min_samples_leaf,
        params.max_depth,
        train,
        x.cols(),
        None,
    );
    let mut pruner = Pruner::new(&tree);
    let mut best_alpha = grid[0];
    let mut best_score = f64::NEG_INFINITY;
    for &alpha in grid {
        pruner.advance_to(alpha);
        let score = balanced_accuracy(&tree, &pruner.collapsed, x, y, &val, n_classes);
        if score > best_score {
            best_score = score;
            best_alpha = alpha;
        }
    }
    best_alpha
}
