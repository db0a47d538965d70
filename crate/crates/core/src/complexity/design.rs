//! Minimum-L1 design weights `w*(i,j) = argmin { ‖w‖₁ : X w = x_i − x_j }`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use super::simplex::{self, LpOutcome};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DesignWeights {
    pub pair: (usize, usize),
    /// One weight per arm.
    pub weights: Vec<f64>,
    pub l1: f64,
    /// `‖X w − (x_i − x_j)‖₂`.
    pub residual: f64,
}

impl DesignWeights {
    fn negated(&self) -> Self {
        Self {
            pair: (self.pair.1, self.pair.0),
            weights: self.weights.iter().map(|w| -w).collect(),
            l1: self.l1,
            residual: self.residual,
        }
    }

    /// Arms with a non-zero weight.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| w.abs() > tol)
            .map(|(a, _)| a)
            .collect()
    }
}

/// Solves the split program `min Σ(u+v)  s.t.  X(u − v) = x_i − x_j, u, v ≥ 0`.
///
/// `features` holds one vector per arm (the columns of `X`).
pub fn solve_l1_design(features: &[Vec<f64>], i: usize, j: usize) -> Result<DesignWeights> {
    let k = features.len();
    if i >= k || j >= k {
        return Err(Error::invalid(format!("pair ({i}, {j}) out of range for {k} arms")));
    }
    let dim = features[0].len();
    if i == j {
        return Ok(DesignWeights {
            pair: (i, j),
            weights: vec![0.0; k],
            l1: 0.0,
            residual: 0.0,
        });
    }
    let target: Vec<f64> = (0..dim).map(|r| features[i][r] - features[j][r]).collect();
    let a: Vec<Vec<f64>> = (0..dim)
        .map(|r| {
            let mut row = Vec::with_capacity(2 * k);
            row.extend(features.iter().map(|x| x[r]));
            row.extend(features.iter().map(|x| -x[r]));
            row
        })
        .collect();
    let cost = vec![1.0; 2 * k];
    match simplex::solve(&a, &target, &cost) {
        LpOutcome::Optimal { x, .. } => {
            let weights: Vec<f64> = (0..k).map(|a| x[a] - x[k + a]).collect();
            let l1 = weights.iter().map(|w| w.abs()).sum();
            let residual = (0..dim)
                .map(|r| {
                    let v: f64 = features.iter().zip(&weights).map(|(x, w)| x[r] * w).sum();
                    (v - target[r]).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            if residual > 1e-8 {
                return Err(Error::Infeasible { i, j });
            }
            Ok(DesignWeights {
                pair: (i, j),
                weights,
                l1,
                residual,
            })
        }
        LpOutcome::Infeasible | LpOutcome::Unbounded => Err(Error::Infeasible { i, j }),
        LpOutcome::IterationLimit => Err(Error::SolverStalled { i, j }),
    }
}

/// Per-pair cache of design weights over fixed features. Concurrent inserts
/// of the same pair store identical values.
#[derive(Debug)]
pub struct DesignCache {
    features: Vec<Vec<f64>>,
    solved: RwLock<HashMap<(usize, usize), Arc<DesignWeights>>>,
}

impl DesignCache {
    pub fn new(features: Vec<Vec<f64>>) -> Self {
        Self {
            features,
            solved: RwLock::new(HashMap::new()),
        }
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    fn canonical(&self, lo: usize, hi: usize) -> Result<Arc<DesignWeights>> {
        if let Some(w) = self.solved.read().expect("cache lock").get(&(lo, hi)) {
            return Ok(Arc::clone(w));
        }
        let w = Arc::new(solve_l1_design(&self.features, lo, hi)?);
        let mut map = self.solved.write().expect("cache lock");
        Ok(Arc::clone(map.entry((lo, hi)).or_insert(w)))
    }

    /// `w*(i, j)`; the reversed pair is the negation of the stored one.
    pub fn get(&self, i: usize, j: usize) -> Result<DesignWeights> {
        if i <= j {
            Ok((*self.canonical(i, j)?).clone())
        } else {
            Ok(self.canonical(j, i)?.negated())
        }
    }

    /// `max_a |w*_a(i,j)|`-style lookups only need magnitudes; this avoids the
    /// clone of [`DesignCache::get`].
    pub fn abs_weights(&self, i: usize, j: usize) -> Result<Arc<DesignWeights>> {
        self.canonical(i.min(j), i.max(j))
    }

    pub fn len(&self) -> usize {
        self.solved.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
