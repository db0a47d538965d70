//! Gap indices `B_{i,j}(t) = Δ̂_{i,j}(t) + W_t(i,j)` and the confidence
//! thresholds `C_{δ,t}` that scale their widths.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdKind {
    Theoretical,
    Heuristic,
    Classical,
}

impl FromStr for ThresholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(Self::Theoretical),
            "heuristic" => Ok(Self::Heuristic),
            "classical" => Ok(Self::Classical),
            other => Err(Error::invalid(format!("unknown threshold kind `{other}`"))),
        }
    }
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Theoretical => "theoretical",
            Self::Heuristic => "heuristic",
            Self::Classical => "classical",
        })
    }
}

/// Problem constants a threshold may depend on.
#[derive(Clone, Copy, Debug)]
pub struct ProblemDims {
    pub arms: usize,
    pub dim: usize,
    /// `L ≥ max_a ‖x_a‖`.
    pub feature_bound: f64,
    /// `S ≥ ‖θ‖`.
    pub param_bound: Option<f64>,
    pub lambda: f64,
    pub sigma: f64,
}

/// A fully parameterized threshold function `t ↦ C_{δ,t}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Threshold {
    /// `√(2 ln(1/δ) + N ln(1 + tL²/(λN))) + √λ S/σ`.
    Theoretical {
        delta: f64,
        dim: usize,
        feature_bound: f64,
        param_bound: f64,
        lambda: f64,
        sigma: f64,
    },
    /// `√(2 ln((ln t + 1)/δ))`, clamped at 0.
    Heuristic { delta: f64 },
    /// `√(2β)` with `β = ln(5Kt⁴/(4δ))`; with canonical features and
    /// `σ = 1/2` the width `C σ/√N_a` equals `√(β/(2N_a))`.
    Classical { delta: f64, arms: usize },
    /// Constant value, for ablations.
    Constant(f64),
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("δ must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

impl ThresholdKind {
    pub fn build(self, delta: f64, dims: &ProblemDims) -> Result<Threshold> {
        check_delta(delta)?;
        match self {
            Self::Heuristic => Ok(Threshold::Heuristic { delta }),
            Self::Classical => {
                if dims.arms < 1 {
                    return Err(Error::invalid("classical threshold needs K ≥ 1"));
                }
                Ok(Threshold::Classical {
                    delta,
                    arms: dims.arms,
                })
            }
            Self::Theoretical => {
                let param_bound = dims.param_bound.ok_or_else(|| {
                    Error::invalid("theoretical threshold needs a parameter bound S")
                })?;
                for (name, v) in [
                    ("L", dims.feature_bound),
                    ("S", param_bound),
                    ("λ", dims.lambda),
                    ("σ", dims.sigma),
                ] {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::invalid(format!(
                            "theoretical threshold needs {name} > 0, got {v}"
                        )));
                    }
                }
                if dims.dim == 0 {
                    return Err(Error::invalid("theoretical threshold needs N ≥ 1"));
                }
                Ok(Threshold::Theoretical {
                    delta,
                    dim: dims.dim,
                    feature_bound: dims.feature_bound,
                    param_bound,
                    lambda: dims.lambda,
                    sigma: dims.sigma,
                })
            }
        }
    }
}

impl Threshold {
    /// `C_{δ,t}` for `t ≥ 1` (real `t` is accepted for the bound solver).
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 1.0) {
            return Err(Error::invalid(format!("threshold needs t ≥ 1, got {t}")));
        }
        Ok(match *self {
            Threshold::Heuristic { delta } => {
                let inner = 2.0 * ((t.ln() + 1.0) / delta).ln();
                inner.max(0.0).sqrt()
            }
            Threshold::Theoretical {
                delta,
                dim,
                feature_bound,
                param_bound,
                lambda,
                sigma,
            } => {
                let n = dim as f64;
                let log_det = n * (1.0 + t * feature_bound * feature_bound / (lambda * n)).ln();
                (2.0 * (1.0 / delta).ln() + log_det).sqrt() + lambda.sqrt() * param_bound / sigma
            }
            Threshold::Classical { delta, arms } => {
                let beta = (5.0 * arms as f64 * t.powi(4) / (4.0 * delta)).ln();
                (2.0 * beta).max(0.0).sqrt()
            }
            Threshold::Constant(c) => c,
        })
    }

    pub fn delta(&self) -> Option<f64> {
        match *self {
            Threshold::Theoretical { delta, .. }
            | Threshold::Heuristic { delta }
            | Threshold::Classical { delta, .. } => Some(delta),
            Threshold::Constant(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    /// Width `C ‖x_i − x_j‖_Σ̂`.
    Paired,
    /// Width `C (‖x_i‖_Σ̂ + ‖x_j‖_Σ̂)`.
    Individual,
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paired" | "pair" => Ok(Self::Paired),
            "individual" | "ind" => Ok(Self::Individual),
            other => Err(Error::invalid(format!("unknown index kind `{other}`"))),
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Paired => "paired",
            Self::Individual => "individual",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexConfig {
    pub kind: IndexKind,
    pub threshold: Threshold,
}

/// Threshold evaluated at round `t` (number of samples so far, floored at 1).
fn threshold_at(config: &IndexConfig, t: u64) -> Result<f64> {
    config.threshold.value(t.max(1) as f64)
}

/// Single gap index, computed directly from deviation norms.
pub fn gap_index(
    est: &EstimatorState,
    i: usize,
    j: usize,
    config: &IndexConfig,
    t: u64,
) -> Result<f64> {
    let c = threshold_at(config, t)?;
    let width = match config.kind {
        IndexKind::Paired => {
            let diff: Vec<f64> = est.features()[i]
                .iter()
                .zip(&est.features()[j])
                .map(|(a, b)| a - b)
                .collect();
            c * est.deviation(&diff)?
        }
        IndexKind::Individual => c * (est.arm_deviation(i) + est.arm_deviation(j)),
    };
    Ok(est.empirical_gap(i, j) + width)
}

/// All `B_{i,j}(t)` of a round together with their widths.
#[derive(Clone, Debug)]
pub struct IndexMatrix {
    arms: usize,
    /// Row `i`, column `j` holds `B_{i,j}`.
    values: Vec<f64>,
    /// Symmetric `W_t(i,j)`.
    widths: Vec<f64>,
    /// `σ ‖x_a‖_{B̂⁻¹}` per arm (without the threshold factor).
    arm_deviations: Vec<f64>,
    threshold: f64,
}

impl IndexMatrix {
    /// Builds a matrix from raw values (widths unknown, set to zero).
    pub fn from_values(arms: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != arms * arms {
            return Err(Error::DimensionMismatch {
                expected: arms * arms,
                actual: values.len(),
            });
        }
        Ok(Self {
            arms,
            values,
            widths: vec![0.0; arms * arms],
            arm_deviations: vec![0.0; arms],
            threshold: 0.0,
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.arms + j]
    }

    #[inline]
    pub fn width(&self, i: usize, j: usize) -> f64 {
        self.widths[i * self.arms + j]
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn arm_deviation(&self, a: usize) -> f64 {
        self.arm_deviations[a]
    }

    /// `C_{δ,t}` used for this round.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// m-th largest of `{B_{i,j} : i ≠ j}`.
    pub fn mth_largest_in_column(&self, j: usize, m: usize) -> f64 {
        let mut col: Vec<f64> = (0..self.arms)
            .filter(|&i| i != j)
            .map(|i| self.get(i, j))
            .collect();
        mth_largest(&mut col, m)
    }

    /// `max_{i ∉ set} B_{i,j}`.
    pub fn max_outside(&self, j: usize, in_set: &[bool]) -> f64 {
        (0..self.arms)
            .filter(|&i| !in_set[i])
            .map(|i| self.get(i, j))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// m-th largest entry (1-based `m`); reorders `values`.
pub fn mth_largest(values: &mut [f64], m: usize) -> f64 {
    assert!(m >= 1 && m <= values.len(), "m out of range");
    let (_, v, _) = values.select_nth_unstable_by(m - 1, |a, b| {
        b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal)
    });
    *v
}

/// All gap indices of a round from a single Gram matrix `Xᵀ B̂⁻¹ X`.
pub fn index_matrix(est: &EstimatorState, config: &IndexConfig, t: u64) -> Result<IndexMatrix> {
    let c = threshold_at(config, t)?;
    let k = est.arms();
    let sigma = est.sigma();
    let gram = est.gram();
    let arm_deviations: Vec<f64> = (0..k)
        .map(|a| sigma * gram[a * k + a].max(0.0).sqrt())
        .collect();
    let mut widths = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let w = match config.kind {
                IndexKind::Paired => {
                    let q = gram[i * k + i] + gram[j * k + j] - 2.0 * gram[i * k + j];
                    c * sigma * q.max(0.0).sqrt()
                }
                IndexKind::Individual => c * (arm_deviations[i] + arm_deviations[j]),
            };
            widths[i * k + j] = w;
            widths[j * k + i] = w;
        }
        if config.kind == IndexKind::Individual {
            widths[i * k + i] = 2.0 * c * arm_deviations[i];
        }
    }
    let means = est.means();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            values[i * k + j] = means[i] - means[j] + widths[i * k + j];
        }
    }
    Ok(IndexMatrix {
        arms: k,
        values,
        widths,
        arm_deviations,
        threshold: c,
    })
}
