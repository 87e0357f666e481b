//! Random hyper-parameter search with inner k-fold cross-validation.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{smote, LabeledMatrix};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::evaluate::{kfold_indices, metrics, Confusion};
use crate::forest::{fit_forest, HyperParams, MaxFeatures};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub n_estimators: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
    pub max_depth: Vec<Option<usize>>,
    pub bootstrap: Vec<bool>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            n_estimators: vec![100, 200, 300, 400, 600, 800, 1000],
            max_features: vec![MaxFeatures::Sqrt, MaxFeatures::Log2],
            max_depth: vec![None, Some(10), Some(30), Some(50), Some(80), Some(110)],
            bootstrap: vec![true, false],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators.is_empty()
            || self.max_features.is_empty()
            || self.max_depth.is_empty()
            || self.bootstrap.is_empty()
        {
            return Err(Error::InvalidArgument("every search-space list must be non-empty".into()));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.n_estimators.len() * self.max_features.len() * self.max_depth.len() * self.bootstrap.len()
    }

    /// All combinations in nested list order.
    pub fn combinations(&self, base: &HyperParams) -> Vec<HyperParams> {
        let mut out = Vec::with_capacity(self.size());
        for &n_estimators in &self.n_estimators {
            for &max_features in &self.max_features {
                for &max_depth in &self.max_depth {
                    for &bootstrap in &self.bootstrap {
                        out.push(HyperParams {
                            n_estimators,
                            max_features,
                            max_depth,
                            bootstrap,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    F1,
    F05,
    F2,
    Accuracy,
}

impl Objective {
    pub fn score(self, c: &Confusion) -> f64 {
        let s = metrics(c).scores;
        match self {
            Objective::F1 => s.f1,
            Objective::F05 => s.f05,
            Objective::F2 => s.f2,
            Objective::Accuracy => s.accuracy,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::F1 => "f1",
            Objective::F05 => "f05",
            Objective::F2 => "f2",
            Objective::Accuracy => "accuracy",
        })
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Objective::F1),
            "f05" | "f0.5" => Ok(Objective::F05),
            "f2" => Ok(Objective::F2),
            "accuracy" | "acc" => Ok(Objective::Accuracy),
            other => Err(Error::InvalidArgument(format!("unknown objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub params: HyperParams,
    pub mean_score: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub objective: Objective,
    pub inner_k: usize,
    pub space_size: usize,
    /// Set when fewer trials ran than requested because the space ran out.
    pub exhausted: bool,
    pub fits: usize,
    pub trials: Vec<Trial>,
    pub best: HyperParams,
    pub best_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub iterations: usize,
    pub inner_k: usize,
    pub objective: Objective,
    /// SMOTE neighbours inside inner training folds; `None` disables it.
    pub smote_k: Option<usize>,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            iterations: 100,
            inner_k: 3,
            objective: Objective::F1,
            smote_k: Some(5),
            seed: 0,
        }
    }
}

/// Samples parameter combinations without replacement and scores each by
/// inner k-fold cross-validation on `train`. All trials share the same
/// folds; the best trial is the first one with the maximal mean score.
pub fn random_search(train: &LabeledMatrix, space: &SearchSpace, opts: &SearchOptions) -> Result<SearchResult> {
    space.validate()?;
    if opts.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be at least 1".into()));
    }
    if opts.inner_k < 2 || opts.inner_k > train.len() {
        return Err(Error::InvalidArgument(format!(
            "inner_k = {} with {} rows",
            opts.inner_k,
            train.len()
        )));
    }
    if train.count(Label::Positive) == 0 || train.count(Label::Negative) == 0 {
        return Err(Error::SingleClass("tuning rows".into()));
    }

    let mut combos = space.combinations(&HyperParams::default());
    combos.shuffle(&mut seed::rng(seed::derive(opts.seed, seed::TRIAL, 0)));
    let exhausted = opts.iterations > combos.len();
    if exhausted {
        log::warn!(
            "search space has only {} combinations; evaluating each once instead of {} iterations",
            combos.len(),
            opts.iterations
        );
    }
    combos.truncate(opts.iterations);

    let folds = kfold_indices(train.len(), opts.inner_k, seed::derive(opts.seed, seed::SPLIT, 2));
    let fold_train: Vec<LabeledMatrix> = folds
        .iter()
        .enumerate()
        .map(|(f, (tr, _))| {
            let m = train.select(tr);
            match opts.smote_k {
                Some(k) => smote(&m, k, seed::derive(opts.seed, seed::SMOTE, f as u64)),
                None => Ok(m),
            }
        })
        .collect::<Result<_>>()?;

    let fits = AtomicUsize::new(0);
    let trials: Vec<Trial> = combos
        .into_par_iter()
        .enumerate()
        .map(|(t, params)| {
            let params = params.with_seed(seed::derive(opts.seed, seed::TRIAL, t as u64 + 1));
            let mut fold_scores = Vec::with_capacity(folds.len());
            for ((_, test), m) in folds.iter().zip(&fold_train) {
                let forest = fit_forest(m, &params)?;
                fits.fetch_add(1, Ordering::Relaxed);
                let mut c = Confusion::default();
                for &i in test {
                    let row = &train.rows()[i];
                    c.record(row.label, forest.predict(&row.vector).label);
                }
                fold_scores.push(opts.objective.score(&c));
            }
            let mean_score = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
            log::debug!("trial {t}: {params:?} -> {mean_score:.3}");
            Ok(Trial {
                params,
                mean_score,
                fold_scores,
            })
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.mean_score > trials[best].mean_score {
            best = i;
        }
    }
    let fits = fits.into_inner();
    log::info!("random search: {} trials, {fits} fits", trials.len());
    Ok(SearchResult {
        objective: opts.objective,
        inner_k: opts.inner_k,
        space_size: space.size(),
        exhausted,
        fits,
        best: trials[best].params.clone(),
        best_score: trials[best].mean_score,
        trials,
    })
}
