//! Hold-out, k-fold and leave-one-specification-out validation.
//!
//! Every fold fits its own vocabulary, SMOTE and forest on the training side
//! only. Rows carry their corpus index through SMOTE, and each fold checks
//! that no test row reached the balancing step.

mod metrics;
pub(crate) mod report;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{smote, LabeledMatrix, Origin};
use crate::corpus::{Corpus, Label, SpecType};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestModel, HyperParams};
use crate::seed;
use crate::textproc::{preprocess, TokenStream};
use crate::vectorize::{fit_features, transform, Preprocessing, TfidfMode};

pub use metrics::{cohen_kappa, f_beta, metrics, Confusion, Kappa, Metrics, Scores};
pub use report::{compare_reports, report_from_json, DeltaRow, DeltaTable, ReportFormat};

/// Everything needed to turn labelled text into a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub extend_stopwords: bool,
    pub tfidf: TfidfMode,
    pub l2_normalize: bool,
    /// `None` disables SMOTE.
    pub smote_k: Option<usize>,
    pub params: HyperParams,
    pub seed: u64,
    /// Stratify the hold-out split by label.
    pub stratify: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            extend_stopwords: false,
            tfidf: TfidfMode::default(),
            l2_normalize: false,
            smote_k: Some(5),
            params: HyperParams::default(),
            seed: 0,
            stratify: false,
        }
    }
}

impl PipelineConfig {
    pub fn preprocessing(&self) -> Preprocessing {
        Preprocessing {
            extend_stopwords: self.extend_stopwords,
            l2_normalize: self.l2_normalize,
        }
    }
}

/// A trained model plus bookkeeping from the fit.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: ForestModel,
    pub n_real: usize,
    pub n_synthetic: usize,
}

/// Preprocesses every requirement once; folds then select by index.
pub fn tokenize_corpus(corpus: &Corpus, config: &PipelineConfig) -> Vec<TokenStream> {
    let stops = config.preprocessing().stop_words();
    corpus
        .requirements()
        .par_iter()
        .map(|r| preprocess(&r.text, &stops))
        .collect()
}

fn labels_of(corpus: &Corpus) -> Result<Vec<Label>> {
    corpus
        .requirements()
        .iter()
        .map(|r| {
            r.label.ok_or_else(|| {
                Error::InvalidCorpus(format!(
                    "requirement ({}, {}) is unlabeled",
                    r.spec_id, r.req_id
                ))
            })
        })
        .collect()
}

/// Fits vocabulary, SMOTE and forest on the rows in `train`. `forest_seed`
/// seeds the trees and SMOTE.
pub fn fit_on_rows(
    tokens: &[TokenStream],
    labels: &[Label],
    train: &[usize],
    config: &PipelineConfig,
    forest_seed: u64,
) -> Result<(Trained, LabeledMatrix)> {
    let streams: Vec<TokenStream> = train.iter().map(|&i| tokens[i].clone()).collect();
    let space = fit_features(&streams, config.tfidf)?;
    let mut matrix = LabeledMatrix::new(space.len());
    for (&i, s) in train.iter().zip(&streams) {
        matrix.push_real(transform(s, &space, config.l2_normalize), labels[i], i)?;
    }
    let n_real = matrix.len();
    let balanced = match config.smote_k {
        Some(k) => smote(&matrix, k, forest_seed)?,
        None => matrix,
    };
    let n_synthetic = balanced.len() - n_real;
    let forest = fit_forest(&balanced, &config.params.clone().with_seed(forest_seed))?;
    let model = ForestModel::new(forest, space, config.preprocessing())?;
    Ok((
        Trained {
            model,
            n_real,
            n_synthetic,
        },
        balanced,
    ))
}

/// Trains on the whole (fully labelled) corpus.
pub fn train_model(corpus: &Corpus, config: &PipelineConfig) -> Result<Trained> {
    let labels = labels_of(corpus)?;
    let tokens = tokenize_corpus(corpus, config);
    let all: Vec<usize> = (0..labels.len()).collect();
    Ok(fit_on_rows(&tokens, &labels, &all, config, config.seed)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub synthetic_rows: usize,
    pub confusion: Confusion,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: String,
    pub folds: Vec<FoldResult>,
    /// Unweighted means of the per-fold scores.
    pub averages: Scores,
}

impl EvalReport {
    fn new(protocol: impl Into<String>, folds: Vec<FoldResult>) -> Self {
        let averages = Scores::mean(folds.iter().map(|f| &f.metrics.scores));
        EvalReport {
            protocol: protocol.into(),
            folds,
            averages,
        }
    }
}

/// Row indices of one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSpec {
    pub id: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn run_fold(
    tokens: &[TokenStream],
    labels: &[Label],
    fold: &FoldSpec,
    index: usize,
    config: &PipelineConfig,
) -> Result<FoldResult> {
    let (pos, neg) = fold.train.iter().fold((0, 0), |(p, n), &i| {
        if labels[i].is_positive() {
            (p + 1, n)
        } else {
            (p, n + 1)
        }
    });
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass(format!(
            "fold {}: training side has {pos} positive and {neg} negative rows",
            fold.id
        )));
    }
    let fold_seed = seed::derive(config.seed, seed::FOLD, index as u64);
    let (trained, balanced) = fit_on_rows(tokens, labels, &fold.train, config, fold_seed)?;
    check_isolation(&balanced, &fold.train, &fold.test, &fold.id)?;

    let model = &trained.model;
    let mut confusion = Confusion::default();
    for &i in &fold.test {
        let x = transform(&tokens[i], &model.space, config.l2_normalize);
        confusion.record(labels[i], model.predict(&x).label);
    }
    Ok(FoldResult {
        fold: fold.id.clone(),
        train_rows: fold.train.len(),
        test_rows: fold.test.len(),
        synthetic_rows: trained.n_synthetic,
        metrics: metrics(&confusion),
        confusion,
    })
}

/// Fails with [`Error::Invariant`] unless train and test are disjoint and
/// every real row in `balanced` (the SMOTE output) is a training row.
pub fn check_isolation(balanced: &LabeledMatrix, train: &[usize], test: &[usize], fold: &str) -> Result<()> {
    let train: HashSet<usize> = train.iter().copied().collect();
    let test: HashSet<usize> = test.iter().copied().collect();
    if !train.is_disjoint(&test) {
        return Err(Error::Invariant(format!("fold {fold}: train and test rows overlap")));
    }
    for row in balanced.rows() {
        if let Origin::Real { row } = row.origin {
            if !train.contains(&row) || test.contains(&row) {
                return Err(Error::Invariant(format!(
                    "fold {fold}: row {row} entered SMOTE but is not a training row"
                )));
            }
        }
    }
    Ok(())
}

fn run_folds(protocol: &str, corpus: &Corpus, folds: &[FoldSpec], config: &PipelineConfig) -> Result<EvalReport> {
    let labels = labels_of(corpus)?;
    let tokens = tokenize_corpus(corpus, config);
    let results: Vec<Result<FoldResult>> = folds
        .par_iter()
        .enumerate()
        .map(|(i, f)| run_fold(&tokens, &labels, f, i, config))
        .collect();
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(protocol, folds))
}

/// Seeded 80/20 split: `ceil(0.2·n)` test rows, chosen uniformly (or per
/// class when `config.stratify` is set).
pub fn run_holdout(corpus: &Corpus, config: &PipelineConfig) -> Result<EvalReport> {
    let labels = labels_of(corpus)?;
    if labels.len() < 2 {
        return Err(Error::InvalidCorpus("hold-out needs at least 2 rows".into()));
    }
    let mut rng = seed::rng(seed::derive(config.seed, seed::SPLIT, 0));
    let mut test = Vec::new();
    let mut train = Vec::new();
    let groups: Vec<Vec<usize>> = if config.stratify {
        [Label::Negative, Label::Positive]
            .iter()
            .map(|&l| (0..labels.len()).filter(|&i| labels[i] == l).collect())
            .collect()
    } else {
        vec![(0..labels.len()).collect()]
    };
    for mut g in groups {
        g.shuffle(&mut rng);
        let n_test = (g.len() * 2).div_ceil(10);
        test.extend_from_slice(&g[..n_test]);
        train.extend_from_slice(&g[n_test..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    let fold = FoldSpec {
        id: "holdout".into(),
        train,
        test,
    };
    run_folds("holdout-80-20", corpus, &[fold], config).map_err(|e| match e {
        Error::SingleClass(m) => Error::SingleClass(format!("{m}; try another --seed")),
        other => other,
    })
}

/// Seeded row-level k-fold.
pub fn run_kfold(corpus: &Corpus, config: &PipelineConfig, k: usize) -> Result<EvalReport> {
    let n = corpus.len();
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} with {n} rows")));
    }
    let folds = kfold_indices(n, k, seed::derive(config.seed, seed::SPLIT, 1))
        .into_iter()
        .enumerate()
        .map(|(i, (train, test))| FoldSpec {
            id: format!("{}", i + 1),
            train,
            test,
        })
        .collect::<Vec<_>>();
    run_folds(&format!("kfold-{k}"), corpus, &folds, config)
}

/// Shuffles `0..n` and deals it into `k` contiguous test blocks whose sizes
/// differ by at most one. Returns `(train, test)` pairs, both sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        let mut test = order[start..start + size].to_vec();
        let mut train: Vec<usize> = order[..start].iter().chain(&order[start + size..]).copied().collect();
        test.sort_unstable();
        train.sort_unstable();
        out.push((train, test));
        start += size;
    }
    out
}

/// One fold per specification, in metadata order: train on all the others,
/// test on it. `spec_type` restricts the corpus first.
pub fn run_cross_project(
    corpus: &Corpus,
    config: &PipelineConfig,
    spec_type: Option<SpecType>,
) -> Result<EvalReport> {
    let filtered;
    let corpus = match spec_type {
        Some(t) => {
            filtered = corpus.filter_spec_type(t);
            &filtered
        }
        None => corpus,
    };
    let folds = cross_project_folds(corpus)?;
    let protocol = match spec_type {
        Some(t) => format!("leave-one-spec-out ({t})"),
        None => "leave-one-spec-out".to_string(),
    };
    run_folds(&protocol, corpus, &folds, config)
}

/// One fold per specification with rows, in metadata order.
pub fn cross_project_folds(corpus: &Corpus) -> Result<Vec<FoldSpec>> {
    let reqs = corpus.requirements();
    let folds: Vec<FoldSpec> = corpus
        .specs()
        .iter()
        .map(|s| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..reqs.len()).partition(|&i| reqs[i].spec_id == s.spec_id);
            FoldSpec {
                id: s.spec_id.clone(),
                train,
                test,
            }
        })
        .filter(|f| !f.test.is_empty())
        .collect();
    if folds.len() < 2 {
        return Err(Error::InvalidCorpus(format!(
            "cross-project validation needs at least 2 specifications, found {}",
            folds.len()
        )));
    }
    Ok(folds)
}

/// Which validation protocol to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPlan {
    Holdout,
    LeaveOneSpecOut { spec_type: Option<SpecType> },
    KFold(usize),
}

pub fn run_plan(corpus: &Corpus, config: &PipelineConfig, plan: SplitPlan) -> Result<EvalReport> {
    match plan {
        SplitPlan::Holdout => run_holdout(corpus, config),
        SplitPlan::LeaveOneSpecOut { spec_type } => run_cross_project(corpus, config, spec_type),
        SplitPlan::KFold(k) => run_kfold(corpus, config, k),
    }
}
