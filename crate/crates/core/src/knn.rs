//! Brute-force K-nearest-neighbour classifier with a fully deterministic
//! tie-break chain.
//!
//! Neighbours are ordered by Euclidean distance, then by training index.
//! The vote is a plain majority; tied labels are separated by the distance of
//! their nearest representative, then by canonical class order.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{HarError, Result};
use crate::label::ActivityLabel;

#[derive(Debug, Clone)]
pub struct KnnModel {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<ActivityLabel>,
    k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub distance: f64,
    pub index: usize,
}

fn by_distance_then_index(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index))
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

impl KnnModel {
    /// Stores the training set; no other work happens at fit time.
    pub fn fit(features: &[Vec<f64>], labels: &[ActivityLabel], k: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(HarError::InvalidInput(format!(
                "{} feature vectors but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if features.is_empty() {
            return Err(HarError::InvalidInput("KNN needs at least one training point".into()));
        }
        if k == 0 || k > features.len() {
            return Err(HarError::InvalidInput(format!(
                "k = {k} must lie in 1..={} (training size)",
                features.len()
            )));
        }
        let dim = features[0].len();
        let mut points = Vec::with_capacity(dim * features.len());
        for f in features {
            if f.len() != dim {
                return Err(HarError::DimensionMismatch { expected: dim, got: f.len() });
            }
            points.extend_from_slice(f);
        }
        Ok(KnnModel {
            dim,
            points,
            labels: labels.to_vec(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(HarError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// The `k` nearest training points, closest first.
    pub fn neighbors(&self, x: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        self.check(x)?;
        let k = k.min(self.len());
        let mut all: Vec<Neighbor> = self
            .points
            .chunks_exact(self.dim.max(1))
            .take(self.len())
            .enumerate()
            .map(|(index, p)| Neighbor {
                distance: if self.dim == 0 { 0.0 } else { euclidean(x, p) },
                index,
            })
            .collect();
        if k == 0 {
            return Ok(Vec::new());
        }
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, by_distance_then_index);
            all.truncate(k);
        }
        all.sort_unstable_by(by_distance_then_index);
        Ok(all)
    }

    /// Majority label of an ordered neighbour list.
    pub fn vote(&self, neighbors: &[Neighbor]) -> ActivityLabel {
        let mut counts = [0usize; ActivityLabel::COUNT];
        let mut nearest = [f64::INFINITY; ActivityLabel::COUNT];
        for n in neighbors {
            let l = self.labels[n.index].index();
            counts[l] += 1;
            if n.distance < nearest[l] {
                nearest[l] = n.distance;
            }
        }
        let mut best = 0;
        for l in 1..ActivityLabel::COUNT {
            let better = match counts[l].cmp(&counts[best]) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => nearest[l] < nearest[best],
            };
            if better {
                best = l;
            }
        }
        ActivityLabel::from_index(best).expect("index within class count")
    }

    pub fn predict(&self, x: &[f64]) -> Result<ActivityLabel> {
        Ok(self.vote(&self.neighbors(x, self.k)?))
    }

    /// Predictions for several `k` values from one neighbour search.
    pub fn predict_for_ks(&self, x: &[f64], ks: &[usize]) -> Result<Vec<ActivityLabel>> {
        let kmax = ks.iter().copied().max().unwrap_or(0);
        if ks.iter().any(|&k| k == 0 || k > self.len()) {
            return Err(HarError::InvalidInput(format!("k values {ks:?} must lie in 1..={}", self.len())));
        }
        let nn = self.neighbors(x, kmax)?;
        Ok(ks.iter().map(|&k| self.vote(&nn[..k])).collect())
    }

    /// Parallel batch prediction; output order matches input order.
    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<ActivityLabel>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }
}
