//! Gini CART trees over sparse rows.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::balance::LabeledRow;
use crate::vectorize::SparseVector;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        positive_fraction: f64,
        samples: usize,
    },
}

/// Nodes stored in an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_for(&self, x: &SparseVector) -> (f64, usize) {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x.get(feature) <= threshold { left } else { right },
                Node::Leaf {
                    positive_fraction,
                    samples,
                } => return (positive_fraction, samples),
            }
        }
    }

    /// Hard vote: positive iff the leaf's positive fraction exceeds 0.5.
    pub fn votes_positive(&self, x: &SparseVector) -> bool {
        self.leaf_for(x).0 > 0.5
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_splits(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }
}

/// Sum of squared class counts divided by the node size; larger is purer.
/// The sample-weighted Gini decrease of a split is
/// `purity(left) + purity(right) − purity(parent)`.
fn purity(neg: usize, pos: usize) -> f64 {
    let n = (neg + pos) as f64;
    ((neg * neg + pos * pos) as f64) / n
}

/// Best split found so far at a node.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Candidate {
    /// Higher score wins; near-equal scores break to the lower feature, then
    /// the lower threshold.
    fn beats(&self, other: &Candidate, tol: f64) -> bool {
        if (self.score - other.score).abs() > tol {
            return self.score > other.score;
        }
        (self.feature, self.threshold) < (other.feature, other.threshold)
    }
}

pub(crate) struct TreeSettings {
    pub max_features: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

pub(crate) struct TreeBuilder<'a> {
    rows: &'a [LabeledRow],
    labels: Vec<bool>,
    settings: TreeSettings,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    // Per-feature (value, position-in-node) buckets, reused across nodes.
    buckets: Vec<Vec<(f64, u32)>>,
    touched: Vec<usize>,
}

impl<'a> TreeBuilder<'a> {
    pub fn new(rows: &'a [LabeledRow], dims: usize, settings: TreeSettings, rng: ChaCha8Rng) -> Self {
        TreeBuilder {
            rows,
            labels: rows.iter().map(|r| r.label.is_positive()).collect(),
            settings,
            rng,
            nodes: Vec::new(),
            importance: vec![0.0; dims],
            buckets: vec![Vec::new(); dims],
            touched: Vec::new(),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Grows a tree on `sample` (row indices, repeats allowed). Returns the
    /// tree and its unnormalised per-feature impurity decreases.
    pub fn build(mut self, mut sample: Vec<usize>) -> (Tree, Vec<f64>) {
        self.grow(&mut sample, 0);
        (Tree { nodes: self.nodes }, self.importance)
    }

    fn leaf(&mut self, neg: usize, pos: usize) -> usize {
        self.nodes.push(Node::Leaf {
            positive_fraction: pos as f64 / (neg + pos) as f64,
            samples: neg + pos,
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, sample: &mut [usize], depth: usize) -> usize {
        let n = sample.len();
        let pos = sample.iter().filter(|&&r| self.labels[r]).count();
        let neg = n - pos;
        if pos == 0
            || neg == 0
            || n < self.settings.min_samples_split
            || self.settings.max_depth.is_some_and(|d| depth >= d)
        {
            return self.leaf(neg, pos);
        }

        let Some((best, right_mask)) = self.find_split(sample, neg, pos) else {
            return self.leaf(neg, pos);
        };
        let decrease = (best.score - purity(neg, pos)).max(0.0);
        self.importance[best.feature] += decrease;

        // Stable partition: left rows first, then right rows.
        let side = |goes_right: bool| {
            sample
                .iter()
                .zip(&right_mask)
                .filter(move |&(_, &r)| r == goes_right)
                .map(|(&row, _)| row)
        };
        let mut ordered: Vec<usize> = side(false).collect();
        let n_left = ordered.len();
        ordered.extend(side(true));
        sample.copy_from_slice(&ordered);

        let me = self.nodes.len();
        self.nodes.push(Node::Leaf {
            positive_fraction: 0.0,
            samples: 0,
        });
        let (lo, hi) = sample.split_at_mut(n_left);
        let left = self.grow(lo, depth + 1);
        let right = self.grow(hi, depth + 1);
        self.nodes[me] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        me
    }

    /// Samples up to `max_features` features among those that are not
    /// constant within the node and returns the best strictly improving split
    /// with a mask of which node rows go right.
    fn find_split(&mut self, sample: &[usize], neg: usize, pos: usize) -> Option<(Candidate, Vec<bool>)> {
        let n = sample.len();
        for (p, &r) in sample.iter().enumerate() {
            for &(f, v) in self.rows[r].vector.entries() {
                if self.buckets[f].is_empty() {
                    self.touched.push(f);
                }
                self.buckets[f].push((v, p as u32));
            }
        }

        let mut candidates: Vec<usize> = self
            .touched
            .iter()
            .copied()
            .filter(|&f| {
                let b = &self.buckets[f];
                b.len() < n || b.iter().any(|&(v, _)| v != b[0].0)
            })
            .collect();
        candidates.sort_unstable();
        let take = self.settings.max_features.min(candidates.len());
        for i in 0..take {
            let j = i + self.rng.gen_range(0..(candidates.len() - i) as u32) as usize;
            candidates.swap(i, j);
        }

        let tol = 1e-12 * n as f64;
        let mut best: Option<Candidate> = None;
        for &f in &candidates[..take] {
            let bucket = &mut self.buckets[f];
            bucket.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some(c) = best_threshold(f, bucket, &self.labels, sample, (neg, pos), tol) {
                // Zero-gain splits are accepted, so impure nodes keep
                // splitting while any sampled feature varies.
                if best.is_none_or(|b| c.beats(&b, tol)) {
                    best = Some(c);
                }
            }
        }

        let result = best.map(|b| {
            let mut mask = vec![false; n];
            for &(v, p) in &self.buckets[b.feature] {
                if v > b.threshold {
                    mask[p as usize] = true;
                }
            }
            (b, mask)
        });
        for f in self.touched.drain(..) {
            self.buckets[f].clear();
        }
        result
    }
}

/// Best threshold on one feature; `bucket` holds the node's non-zero values
/// sorted ascending, the remaining rows are implicit zeros.
fn best_threshold(
    feature: usize,
    bucket: &[(f64, u32)],
    labels: &[bool],
    sample: &[usize],
    (neg, pos): (usize, usize),
    tol: f64,
) -> Option<Candidate> {
    let n = neg + pos;
    let zeros = n - bucket.len();
    let bucket_pos = bucket.iter().filter(|&&(_, p)| labels[sample[p as usize]]).count();
    let (mut l_pos, mut l_neg) = (pos - bucket_pos, zeros - (pos - bucket_pos));
    let mut prev = if zeros > 0 { Some(0.0) } else { None };
    let mut best: Option<Candidate> = None;

    let mut i = 0;
    while i < bucket.len() {
        let value = bucket[i].0;
        if let Some(lower) = prev {
            let mut threshold = lower + (value - lower) / 2.0;
            if threshold >= value {
                threshold = lower;
            }
            let r_pos = pos - l_pos;
            let r_neg = neg - l_neg;
            let score = purity(l_neg, l_pos) + purity(r_neg, r_pos);
            let cand = Candidate {
                feature,
                threshold,
                score,
            };
            // Ascending scan: only a clearly larger score replaces, so ties
            // keep the lower threshold.
            if best.is_none_or(|b| score - b.score > tol) {
                best = Some(cand);
            }
        }
        // Absorb the whole run of equal values into the left side.
        while i < bucket.len() && bucket[i].0 == value {
            if labels[sample[bucket[i].1 as usize]] {
                l_pos += 1;
            } else {
                l_neg += 1;
            }
            i += 1;
        }
        prev = Some(value);
    }
    best
}
