use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::logrank::logrank_sorted;
use super::{ForestParams, TrainingSet, TreeMode};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::survival::{nelson_aalen_sorted, StepFunction};

/// Binary survival tree over augmented covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// Observations with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        hazard: StepFunction,
        member_count: usize,
    },
}

impl TreeNode {
    pub fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut node = self;
        while let TreeNode::Split { feature, threshold, left, right } = node {
            node = if x[*feature] <= *threshold { left } else { right };
        }
        node
    }

    pub fn hazard_for(&self, x: &[f64]) -> &StepFunction {
        match self.leaf_for(x) {
            TreeNode::Leaf { hazard, .. } => hazard,
            TreeNode::Split { .. } => unreachable!("leaf_for always ends at a leaf"),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Number of splits on every root-to-leaf path.
    pub fn path_depths(&self) -> Vec<usize> {
        fn walk(node: &TreeNode, depth: usize, out: &mut Vec<usize>) {
            match node {
                TreeNode::Leaf { .. } => out.push(depth),
                TreeNode::Split { left, right, .. } => {
                    walk(left, depth + 1, out);
                    walk(right, depth + 1, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, 0, &mut out);
        out
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut stack = vec![self];
        let mut out = Vec::new();
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf { .. } => out.push(node),
                TreeNode::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    pub(crate) fn hash_into(&self, h: &mut Sha256) {
        match self {
            TreeNode::Split { feature, threshold, left, right } => {
                h.update([0u8]);
                h.update((*feature as u64).to_le_bytes());
                h.update(threshold.to_bits().to_le_bytes());
                left.hash_into(h);
                right.hash_into(h);
            }
            TreeNode::Leaf { hazard, member_count } => {
                h.update([1u8]);
                h.update((*member_count as u64).to_le_bytes());
                h.update((hazard.len() as u64).to_le_bytes());
                for (k, v) in hazard.knots().iter().zip(hazard.values()) {
                    h.update(k.to_bits().to_le_bytes());
                    h.update(v.to_bits().to_le_bytes());
                }
            }
        }
    }

    /// Hex digest of the tree structure and leaf estimates.
    pub fn structure_hash(&self) -> String {
        let mut h = Sha256::new();
        self.hash_into(&mut h);
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stops recursion for pathological inputs.
const MAX_DEPTH: usize = 64;

pub(crate) fn fit_tree_on(data: &TrainingSet, params: &ForestParams, rng: &mut Rng) -> Result<TreeNode> {
    let n = data.len();
    match params.mode {
        TreeMode::Practical => {
            if n < 2 * params.min_leaf_events {
                return Err(Error::Fit(format!(
                    "{n} observations cannot support leaves of {} events",
                    params.min_leaf_events
                )));
            }
            let mtry = params.resolved_mtry(data.width)?;
            let order = data.time_order();
            Ok(grow_practical(data, order, params.min_leaf_events, mtry, rng, 0))
        }
        TreeMode::Theoretical { k_n } => {
            if k_n == 0 {
                return Err(Error::Config("k_n must be at least 1".into()));
            }
            let depth = ceil_log2(k_n);
            let covariate_dim = data.width - 1;
            let order = data.time_order();
            let cell = vec![(0.0, 1.0); covariate_dim];
            Ok(grow_midpoint(data, &order, &order, cell, depth, 0, rng))
        }
    }
}

pub(crate) fn ceil_log2(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

fn leaf(data: &TrainingSet, members: &[usize]) -> TreeNode {
    TreeNode::Leaf {
        hazard: nelson_aalen_sorted(members.iter().map(|&i| (data.times[i], data.events[i]))),
        member_count: members.len(),
    }
}

fn grow_practical(
    data: &TrainingSet,
    members: Vec<usize>,
    min_events: usize,
    mtry: usize,
    rng: &mut Rng,
    depth: usize,
) -> TreeNode {
    let node_events = members.iter().filter(|&&i| data.events[i]).count();
    if node_events < 2 * min_events || depth >= MAX_DEPTH {
        return leaf(data, &members);
    }

    let mut best: Option<(f64, usize, f64)> = None;
    let mut in_left = vec![false; members.len()];
    for feature in sample(rng, data.width, mtry).into_iter() {
        let (lo, hi) = members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = data.value(i, feature);
            (lo.min(v), hi.max(v))
        });
        if !(hi > lo) {
            continue;
        }
        let threshold = rng.random_range(lo..hi);
        let mut left_events = 0;
        for (flag, &i) in in_left.iter_mut().zip(&members) {
            *flag = data.value(i, feature) <= threshold;
            if *flag && data.events[i] {
                left_events += 1;
            }
        }
        if left_events < min_events || node_events - left_events < min_events {
            continue;
        }
        let score = logrank_sorted(&members, |&i| data.times[i], |&i| data.events[i], &in_left);
        if score > 0.0 && best.is_none_or(|(s, _, _)| score > s) {
            best = Some((score, feature, threshold));
        }
    }

    let Some((_, feature, threshold)) = best else {
        return leaf(data, &members);
    };
    let (left, right): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| data.value(i, feature) <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow_practical(data, left, min_events, mtry, rng, depth + 1)),
        right: Box::new(grow_practical(data, right, min_events, mtry, rng, depth + 1)),
    }
}

/// Midpoint-split tree on the unit cube with a forced treatment split at the root.
fn grow_midpoint(
    data: &TrainingSet,
    members: &[usize],
    fallback: &[usize],
    cell: Vec<(f64, f64)>,
    remaining: usize,
    depth: usize,
    rng: &mut Rng,
) -> TreeNode {
    if remaining == 0 {
        // empty cells borrow the estimate of their nearest nonempty ancestor
        let source = if members.is_empty() { fallback } else { members };
        let mut node = leaf(data, source);
        if let TreeNode::Leaf { member_count, .. } = &mut node {
            *member_count = members.len();
        }
        return node;
    }
    let fallback = if members.is_empty() { fallback } else { members };
    let treatment_index = cell.len();
    let (feature, threshold) = if depth == 0 {
        (treatment_index, 0.0)
    } else {
        let j = rng.random_range(0..cell.len());
        (j, 0.5 * (cell[j].0 + cell[j].1))
    };
    let (left, right): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| data.value(i, feature) <= threshold);
    let (mut left_cell, mut right_cell) = (cell.clone(), cell);
    if feature < treatment_index {
        left_cell[feature].1 = threshold;
        right_cell[feature].0 = threshold;
    }
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow_midpoint(data, &left, fallback, left_cell, remaining - 1, depth + 1, rng)),
        right: Box::new(grow_midpoint(data, &right, fallback, right_cell, remaining - 1, depth + 1, rng)),
    }
}
