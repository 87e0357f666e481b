//! SMOTE oversampling of the minority class.

use rand::Rng;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::seed;
use crate::vectorize::SparseVector;

/// Where a training row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// A real requirement; `row` is its position in the caller's row set.
    Real { row: usize },
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub vector: SparseVector,
    pub label: Label,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    rows: Vec<LabeledRow>,
    dims: usize,
}

impl LabeledMatrix {
    pub fn new(dims: usize) -> Self {
        LabeledMatrix {
            rows: Vec::new(),
            dims,
        }
    }

    /// Appends a real row tagged with its source position.
    pub fn push_real(&mut self, vector: SparseVector, label: Label, row: usize) -> Result<()> {
        self.push(LabeledRow {
            vector,
            label,
            origin: Origin::Real { row },
        })
    }

    fn push(&mut self, row: LabeledRow) -> Result<()> {
        if row.vector.min_dims() > self.dims {
            return Err(Error::InvalidArgument(format!(
                "vector index {} out of range for {} features",
                row.vector.min_dims() - 1,
                self.dims
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Builds a matrix from dense rows; row `i` gets origin `Real { row: i }`.
    pub fn from_dense(rows: &[Vec<f64>], labels: &[Label]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument("rows and labels differ in length".into()));
        }
        let dims = rows.first().map_or(0, Vec::len);
        let mut m = LabeledMatrix::new(dims);
        for (i, (row, &label)) in rows.iter().zip(labels).enumerate() {
            if row.len() != dims {
                return Err(Error::InvalidArgument("dense rows differ in length".into()));
            }
            m.push_real(SparseVector::from_dense(row)?, label, i)?;
        }
        Ok(m)
    }

    pub fn rows(&self) -> &[LabeledRow] {
        &self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.rows.iter().filter(|r| r.label == label).count()
    }

    /// Sub-matrix of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> LabeledMatrix {
        LabeledMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            dims: self.dims,
        }
    }

    /// Source positions of all real rows.
    pub fn real_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().filter_map(|r| match r.origin {
            Origin::Real { row } => Some(row),
            Origin::Synthetic => None,
        })
    }
}

/// Calls `f(index, a_i, b_i)` for every index in the union of both supports.
fn for_each_union(a: &SparseVector, b: &SparseVector, mut f: impl FnMut(usize, f64, f64)) {
    let (a, b) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(ia, wa)), Some(&(ib, wb))) if ia == ib => {
                f(ia, wa, wb);
                i += 1;
                j += 1;
            }
            (Some(&(ia, wa)), Some(&(ib, _))) if ia < ib => {
                f(ia, wa, 0.0);
                i += 1;
            }
            (Some(&(ia, wa)), None) => {
                f(ia, wa, 0.0);
                i += 1;
            }
            (_, Some(&(ib, wb))) => {
                f(ib, 0.0, wb);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
}

fn squared_distance(a: &SparseVector, b: &SparseVector) -> f64 {
    let mut sum = 0.0;
    for_each_union(a, b, |_, wa, wb| sum += (wa - wb) * (wa - wb));
    sum
}

/// `x + gap · (neighbor − x)` over the union of both supports.
fn interpolate(x: &SparseVector, neighbor: &SparseVector, gap: f64) -> SparseVector {
    let mut out = Vec::with_capacity(x.nnz().max(neighbor.nnz()));
    for_each_union(x, neighbor, |idx, xa, xb| {
        let w = xa + gap * (xb - xa);
        if w > 0.0 {
            out.push((idx, w));
        }
    });
    SparseVector::from_sorted_unchecked(out)
}

/// For each minority row, the indices (into `minority`) of its `k` nearest
/// other minority rows by Euclidean distance; ties go to the lower index.
fn nearest_neighbors(minority: &[&SparseVector], k: usize) -> Vec<Vec<usize>> {
    minority
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut d: Vec<(f64, usize)> = minority
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, y)| (squared_distance(x, y), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Synthesises minority rows until both classes have the same count.
///
/// Base points cycle round-robin through the minority rows; each synthetic
/// row is `x + g · (x_nn − x)` with `x_nn` drawn uniformly from the
/// `min(k, m − 1)` nearest minority neighbours and `g ~ U[0, 1)`. Input rows
/// are kept unchanged and in order; synthetics are appended.
pub fn smote(train: &LabeledMatrix, k: usize, seed: u64) -> Result<LabeledMatrix> {
    if k == 0 {
        return Err(Error::InvalidArgument("SMOTE needs k >= 1".into()));
    }
    let pos = train.count(Label::Positive);
    let neg = train.count(Label::Negative);
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass(format!(
            "SMOTE input has {pos} positive and {neg} negative rows"
        )));
    }
    let (minority_label, needed) = if pos <= neg {
        (Label::Positive, neg - pos)
    } else {
        (Label::Negative, pos - neg)
    };
    let mut out = train.clone();
    if needed == 0 {
        return Ok(out);
    }

    let minority: Vec<&SparseVector> = train
        .rows
        .iter()
        .filter(|r| r.label == minority_label)
        .map(|r| &r.vector)
        .collect();
    let k_eff = k.min(minority.len() - 1);
    let neighbors = nearest_neighbors(&minority, k_eff);
    let mut rng = seed::rng(seed::derive(seed, seed::SMOTE, 0));

    out.rows.reserve(needed);
    for t in 0..needed {
        let base = t % minority.len();
        let vector = if k_eff == 0 {
            minority[base].clone()
        } else {
            let nn = neighbors[base][rng.gen_range(0..k_eff as u32) as usize];
            let gap: f64 = rng.gen();
            interpolate(minority[base], minority[nn], gap)
        };
        out.rows.push(LabeledRow {
            vector,
            label: minority_label,
            origin: Origin::Synthetic,
        });
    }
    Ok(out)
}
