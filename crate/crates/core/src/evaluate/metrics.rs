//! Confusion counts, precision/recall/Fβ and Cohen's kappa.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_labels(actual: &[Label], predicted: &[Label]) -> Self {
        assert_eq!(actual.len(), predicted.len());
        let mut c = Confusion::default();
        for (a, p) in actual.iter().zip(predicted) {
            c.record(*a, *p);
        }
        c
    }

    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual.is_positive(), predicted.is_positive()) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Percentages in `[0, 100]`, unrounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f05: f64,
    pub f2: f64,
}

impl Scores {
    /// Builds the tuple from precision and recall given as percentages.
    pub fn from_precision_recall(accuracy: f64, precision: f64, recall: f64) -> Self {
        Scores {
            accuracy,
            precision,
            recall,
            f1: f_beta(precision, recall, 1.0),
            f05: f_beta(precision, recall, 0.5),
            f2: f_beta(precision, recall, 2.0),
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.accuracy, self.precision, self.recall, self.f1, self.f05, self.f2]
    }

    /// Unweighted column means.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Scores>) -> Scores {
        let mut sum = [0.0; 6];
        let mut n = 0usize;
        for s in items {
            for (acc, v) in sum.iter_mut().zip(s.as_array()) {
                *acc += v;
            }
            n += 1;
        }
        if n == 0 {
            return Scores::default();
        }
        let m = sum.map(|v| v / n as f64);
        Scores {
            accuracy: m[0],
            precision: m[1],
            recall: m[2],
            f1: m[3],
            f05: m[4],
            f2: m[5],
        }
    }
}

/// Scores for one confusion matrix. Zero denominators yield 0 and set the
/// matching flag instead of failing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(flatten)]
    pub scores: Scores,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

impl Metrics {
    pub fn is_degenerate(&self) -> bool {
        self.precision_undefined || self.recall_undefined
    }
}

pub fn metrics(c: &Confusion) -> Metrics {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            (0.0, true)
        } else {
            (100.0 * num as f64 / den as f64, false)
        }
    };
    let (accuracy, _) = ratio(c.tp + c.tn, c.total());
    let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
    Metrics {
        scores: Scores::from_precision_recall(accuracy, precision, recall),
        precision_undefined,
        recall_undefined,
    }
}

/// `(1 + β²)·P·R / (β²·P + R)`; 0 when both inputs are 0. Works on any
/// common scale (fractions or percentages).
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    if precision == recall {
        // Exact identity; the general formula can be off by an ulp.
        return precision;
    }
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        return 0.0;
    }
    (1.0 + b2) * precision * recall / den
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    pub value: f64,
    pub observed: f64,
    pub expected: f64,
    /// Set when chance agreement is 1 and the ratio is undefined.
    pub degenerate: bool,
}

pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<Kappa> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "label lists differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("label lists are empty".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let pa = a.iter().filter(|&&x| x).count() as f64 / n;
    let pb = b.iter().filter(|&&x| x).count() as f64 / n;
    let observed = agree / n;
    let expected = pa * pb + (1.0 - pa) * (1.0 - pb);
    if expected == 1.0 {
        let value = if observed == 1.0 { 1.0 } else { 0.0 };
        return Ok(Kappa {
            value,
            observed,
            expected,
            degenerate: true,
        });
    }
    Ok(Kappa {
        value: (observed - expected) / (1.0 - expected),
        observed,
        expected,
        degenerate: false,
    })
}
