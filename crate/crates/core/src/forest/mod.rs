//! Extremely randomized survival trees with Nelson-Aalen leaves.
//!
//! Two growth modes are available. [`TreeMode::Practical`] draws `mtry`
//! candidate features per node, one uniform threshold each, and keeps the
//! candidate with the largest log-rank statistic. [`TreeMode::Theoretical`]
//! grows a complete tree of depth `ceil(log2 k_n)` on the unit cube: the
//! root splits on the treatment, every other node cuts a uniformly chosen
//! covariate at the midpoint of its cell.
//!
//! Forest predictions average leaf cumulative hazards across trees.

mod logrank;
mod tree;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use logrank::logrank_statistic;
pub use tree::TreeNode;

use crate::dataset::{Scale, SurvivalDataset, Treatment};
use crate::error::{Error, Result};
use crate::rng::{substream, tag, Rng};
use crate::survival::{hazard_to_survival_on, StepFunction, SurvivalCurve};

/// How a record's covariates and treatment are laid out for splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    /// `(x, a)`, length `d + 1`.
    Raw,
    /// `(x, a, a * x)`, length `2d + 1`.
    TreatmentAugmented,
}

impl Augmentation {
    pub fn width(self, d: usize) -> usize {
        match self {
            Augmentation::Raw => d + 1,
            Augmentation::TreatmentAugmented => 2 * d + 1,
        }
    }

    pub fn apply(self, x: &[f64], a: Treatment) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width(x.len()));
        self.extend(&mut out, x, a);
        out
    }

    fn extend(self, out: &mut Vec<f64>, x: &[f64], a: Treatment) {
        let s = a.value();
        out.extend_from_slice(x);
        out.push(s);
        if self == Augmentation::TreatmentAugmented {
            out.extend(x.iter().map(|v| s * v));
        }
    }
}

/// `(x_1..x_d, a, a x_1..a x_d)`.
pub fn augment(x: &[f64], a: Treatment) -> Vec<f64> {
    Augmentation::TreatmentAugmented.apply(x, a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TreeMode {
    Practical,
    Theoretical { k_n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate features per split; `floor(sqrt(width))` when unset.
    pub mtry: Option<usize>,
    pub min_leaf_events: usize,
    pub mode: TreeMode,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 50, mtry: None, min_leaf_events: 6, mode: TreeMode::Practical, seed: 0 }
    }
}

impl ForestParams {
    pub fn theoretical(n_trees: usize, k_n: usize, seed: u64) -> Self {
        Self { n_trees, mode: TreeMode::Theoretical { k_n }, seed, ..Self::default() }
    }

    pub fn augmentation(&self) -> Augmentation {
        match self.mode {
            TreeMode::Practical => Augmentation::TreatmentAugmented,
            TreeMode::Theoretical { .. } => Augmentation::Raw,
        }
    }

    pub(crate) fn resolved_mtry(&self, width: usize) -> Result<usize> {
        let mtry = self.mtry.unwrap_or_else(|| ((width as f64).sqrt().floor() as usize).max(1));
        if mtry == 0 || mtry > width {
            return Err(Error::Config(format!("mtry={mtry} must lie in 1..={width}")));
        }
        Ok(mtry)
    }

    fn validate(&self, width: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.min_leaf_events == 0 {
            return Err(Error::Config("min_leaf_events must be at least 1".into()));
        }
        match self.mode {
            TreeMode::Practical => self.resolved_mtry(width).map(|_| ()),
            TreeMode::Theoretical { k_n } if k_n == 0 => Err(Error::Config("theoretical mode needs k_n >= 1".into())),
            TreeMode::Theoretical { .. } => Ok(()),
        }
    }
}

/// Row-major augmented design plus outcomes.
pub(crate) struct TrainingSet {
    features: Vec<f64>,
    width: usize,
    times: Vec<f64>,
    events: Vec<bool>,
}

impl TrainingSet {
    fn new(dataset: &SurvivalDataset, augmentation: Augmentation) -> Self {
        let width = augmentation.width(dataset.dim());
        let mut features = Vec::with_capacity(width * dataset.len());
        for r in dataset.records() {
            augmentation.extend(&mut features, &r.covariates, r.treatment);
        }
        Self { features, width, times: dataset.times(), events: dataset.events() }
    }

    fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    fn value(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.width + feature]
    }

    fn time_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.times[a].total_cmp(&self.times[b]));
        order
    }
}

/// Fits one tree with the augmentation implied by `params.mode`.
pub fn fit_tree(dataset: &SurvivalDataset, params: &ForestParams, rng: &mut Rng) -> Result<TreeNode> {
    let augmentation = params.augmentation();
    params.validate(augmentation.width(dataset.dim()))?;
    tree::fit_tree_on(&TrainingSet::new(dataset, augmentation), params, rng)
}

/// Anything that predicts a conditional survival curve at `(x, a)`.
pub trait SurvivalPredictor: Sync {
    fn predict_curve(&self, x: &[f64], a: Treatment) -> Result<SurvivalCurve>;
    fn tau(&self) -> f64;
    fn scale(&self) -> Scale;
}

pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalForest {
    trees: Vec<TreeNode>,
    params: ForestParams,
    tau: f64,
    origin: f64,
    scale: Scale,
    dim: usize,
    augmentation: Augmentation,
}

/// Fits `params.n_trees` trees; tree `j` draws from stream `(seed, TREE, j)`.
pub fn fit_forest(dataset: &SurvivalDataset, params: &ForestParams) -> Result<SurvivalForest> {
    let augmentation = params.augmentation();
    params.validate(augmentation.width(dataset.dim()))?;
    let data = TrainingSet::new(dataset, augmentation);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(params.seed, &[tag::TREE, j as u64]);
            tree::fit_tree_on(&data, params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurvivalForest {
        trees,
        params: params.clone(),
        tau: dataset.tau(),
        origin: dataset.origin(),
        scale: dataset.scale(),
        dim: dataset.dim(),
        augmentation,
    })
}

impl SurvivalForest {
    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn augmentation(&self) -> Augmentation {
        self.augmentation
    }

    /// Concatenates forests fitted on the same axis and design.
    pub fn pool(parts: Vec<SurvivalForest>) -> Result<SurvivalForest> {
        let mut it = parts.into_iter();
        let mut first = it.next().ok_or_else(|| Error::Fit("no forests to pool".into()))?;
        for f in it {
            if f.tau != first.tau
                || f.scale != first.scale
                || f.dim != first.dim
                || f.augmentation != first.augmentation
            {
                return Err(Error::Fit("pooled forests disagree on tau, scale or design".into()));
            }
            first.origin = first.origin.min(f.origin);
            first.trees.extend(f.trees);
        }
        first.params.n_trees = first.trees.len();
        Ok(first)
    }

    #[cfg(test)]
    pub(crate) fn with_trees(&self, trees: Vec<TreeNode>) -> SurvivalForest {
        let mut f = self.clone();
        f.params.n_trees = trees.len();
        f.trees = trees;
        f
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::Fit("forest has no fitted trees".into()));
        }
        if x.len() != self.dim {
            return Err(Error::Domain(format!("query has {} covariates, forest expects {}", x.len(), self.dim)));
        }
        Ok(())
    }

    /// Average of the cumulative hazards of the leaves containing `(x, a)`.
    pub fn predict_hazard(&self, x: &[f64], a: Treatment) -> Result<StepFunction> {
        self.check_query(x)?;
        let z = self.augmentation.apply(x, a);
        let leaves: Vec<&StepFunction> = self.trees.iter().map(|t| t.hazard_for(&z)).collect();
        Ok(StepFunction::average(&leaves))
    }

    /// Digest over every tree, in order.
    pub fn structure_hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.trees {
            t.hash_into(&mut h);
        }
        tree::hex(&h.finalize())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ForestFile { format: "survowl-forest".into(), version: FOREST_FORMAT_VERSION, forest: self.clone() };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ForestFile = serde_json::from_str(text)?;
        if file.format != "survowl-forest" || file.version != FOREST_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported forest file {} v{}", file.format, file.version)));
        }
        Ok(file.forest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ForestFile {
    format: String,
    version: u32,
    forest: SurvivalForest,
}

impl SurvivalPredictor for SurvivalForest {
    fn predict_curve(&self, x: &[f64], a: Treatment) -> Result<SurvivalCurve> {
        let h = self.predict_hazard(x, a)?;
        hazard_to_survival_on(&h, self.tau, self.origin)
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn scale(&self) -> Scale {
        self.scale
    }
}
