//! Random forests of Gini decision trees with majority-vote prediction and
//! mean-decrease-impurity feature importances.

mod io;
mod params;
mod tree;

use rayon::prelude::*;
use rand::Rng;

use crate::balance::LabeledMatrix;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::seed;
use crate::vectorize::{feature_names, FeatureSpace, Preprocessing, SparseVector};

pub use io::{load_model, model_from_str, model_to_string, save_model, FORMAT_VERSION};
pub use params::{HyperParams, MaxFeatures};
pub use tree::{Node, Tree};

use tree::{TreeBuilder, TreeSettings};

/// A fitted ensemble over `dims` features.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    params: HyperParams,
    importances: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Fraction of trees voting positive.
    pub score: f64,
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    /// Normalised importances; sum to 1 when any tree split, else all zero.
    pub fn importances(&self) -> &[f64] {
        &self.importances
    }

    pub fn dims(&self) -> usize {
        self.importances.len()
    }

    /// Score is the share of positive tree votes; the label is positive only
    /// when strictly more than half the trees vote positive.
    pub fn predict(&self, x: &SparseVector) -> Prediction {
        let votes = self.trees.iter().filter(|t| t.votes_positive(x)).count();
        let score = votes as f64 / self.trees.len() as f64;
        Prediction {
            label: Label::from_bool(score > 0.5),
            score,
        }
    }

    pub(crate) fn from_parts(trees: Vec<Tree>, params: HyperParams, importances: Vec<f64>) -> Self {
        Forest {
            trees,
            params,
            importances,
        }
    }
}

/// Trains `n_estimators` trees. Tree `t` is seeded from `(seed, t)` alone,
/// so the result does not depend on how many worker threads run.
pub fn fit_forest(train: &LabeledMatrix, params: &HyperParams) -> Result<Forest> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let pos = train.count(Label::Positive);
    let neg = train.count(Label::Negative);
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass(format!(
            "training set has {pos} positive and {neg} negative rows"
        )));
    }
    let dims = train.dims();
    if dims == 0 {
        return Err(Error::NoFeatures);
    }
    let max_features = params.max_features.resolve(dims)?;
    let n = train.len();

    let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let rng = seed::rng(seed::derive(params.seed, seed::TREE, t as u64));
            let settings = TreeSettings {
                max_features,
                max_depth: params.max_depth,
                min_samples_split: params.min_samples_split,
            };
            let mut builder = TreeBuilder::new(train.rows(), dims, settings, rng);
            let sample: Vec<usize> = if params.bootstrap {
                let rng = builder.rng();
                (0..n).map(|_| rng.gen_range(0..n as u32) as usize).collect()
            } else {
                (0..n).collect()
            };
            builder.build(sample)
        })
        .collect();

    let mut importances = vec![0.0; dims];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, imp) in grown {
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for (acc, v) in importances.iter_mut().zip(&imp) {
                *acc += v / total;
            }
        }
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    Ok(Forest {
        trees,
        params: params.clone(),
        importances,
    })
}

/// A forest together with the feature space and text settings its inputs
/// come from.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub forest: Forest,
    pub space: FeatureSpace,
    pub preprocessing: Preprocessing,
}

impl ForestModel {
    pub fn new(forest: Forest, space: FeatureSpace, preprocessing: Preprocessing) -> Result<Self> {
        if forest.dims() != space.len() {
            return Err(Error::InvalidArgument(format!(
                "forest has {} features, vocabulary has {}",
                forest.dims(),
                space.len()
            )));
        }
        Ok(ForestModel {
            forest,
            space,
            preprocessing,
        })
    }

    pub fn predict(&self, x: &SparseVector) -> Prediction {
        self.forest.predict(x)
    }
}

/// Top-`n` features as `(term, importance × 100)`, descending; equal
/// importances are ordered by term.
pub fn top_features(model: &ForestModel, n: usize) -> Vec<(String, f64)> {
    let names = feature_names(&model.space);
    let mut ranked: Vec<(&String, f64)> = names
        .iter()
        .zip(model.forest.importances().iter().copied())
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(n)
        .map(|(t, v)| (t.clone(), v * 100.0))
        .collect()
}
