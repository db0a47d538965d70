//! Bandit problem instances: arm features, ground truth and reward law.

mod io;

pub use io::{load_instance, save_instance};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Default noise scale used by the generators.
pub const DEFAULT_SIGMA: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub enum RewardLaw {
    /// `μ_a + N(0, σ²)`.
    GaussianLinear,
    /// Uniform draw from the stored observations of the arm.
    EmpiricalTable(Vec<Vec<f64>>),
}

/// Arm identity is the column index; means are never re-sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    /// One feature vector per arm, each of length `dim`.
    features: Vec<Vec<f64>>,
    dim: usize,
    theta: Option<Vec<f64>>,
    means: Vec<f64>,
    sigma: f64,
    feature_bound: f64,
    param_bound: Option<f64>,
    reward_law: RewardLaw,
}

fn validate_features(features: &[Vec<f64>]) -> Result<usize> {
    if features.len() < 2 {
        return Err(Error::invalid(format!(
            "an instance needs at least 2 arms, got {}",
            features.len()
        )));
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::invalid("feature dimension must be positive"));
    }
    for (a, x) in features.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::invalid(format!(
                "arm {a} has {} features, expected {dim}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("arm {a} has non-finite features")));
        }
    }
    Ok(dim)
}

fn validate_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "noise scale must be finite and non-negative, got {sigma}"
        )));
    }
    Ok(())
}

fn max_norm(features: &[Vec<f64>]) -> f64 {
    features
        .iter()
        .map(|x| dot(x, x).sqrt())
        .fold(0.0, f64::max)
}

impl Instance {
    /// Linear instance `μ_a = θᵀ x_a`.
    pub fn linear(features: Vec<Vec<f64>>, theta: Vec<f64>, sigma: f64) -> Result<Self> {
        let dim = validate_features(&features)?;
        validate_sigma(sigma)?;
        if theta.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: theta.len(),
            });
        }
        let means = features.iter().map(|x| dot(&theta, x)).collect();
        let param_bound = Some(dot(&theta, &theta).sqrt());
        Ok(Self {
            feature_bound: max_norm(&features),
            features,
            dim,
            theta: Some(theta),
            means,
            sigma,
            param_bound,
            reward_law: RewardLaw::GaussianLinear,
        })
    }

    /// Instance given by explicit means; features need not explain them.
    pub fn with_means(features: Vec<Vec<f64>>, means: Vec<f64>, sigma: f64) -> Result<Self> {
        let dim = validate_features(&features)?;
        validate_sigma(sigma)?;
        if means.len() != features.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: means.len(),
            });
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("means must be finite"));
        }
        Ok(Self {
            feature_bound: max_norm(&features),
            features,
            dim,
            theta: None,
            means,
            sigma,
            param_bound: None,
            reward_law: RewardLaw::GaussianLinear,
        })
    }

    /// Table-driven instance; the truth is the per-arm average of the table.
    pub fn from_reward_table(
        features: Vec<Vec<f64>>,
        table: Vec<Vec<f64>>,
        sigma: f64,
    ) -> Result<Self> {
        if table.len() != features.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: table.len(),
            });
        }
        let mut means = Vec::with_capacity(table.len());
        for (a, rows) in table.iter().enumerate() {
            if rows.is_empty() {
                return Err(Error::EmptyRewardTable(a));
            }
            means.push(rows.iter().sum::<f64>() / rows.len() as f64);
        }
        Self::with_means(features, means, sigma)?.with_reward_table(table)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        validate_sigma(sigma)?;
        self.sigma = sigma;
        Ok(self)
    }

    pub fn with_param_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::invalid(format!(
                "parameter bound must be positive, got {bound}"
            )));
        }
        self.param_bound = Some(bound);
        Ok(self)
    }

    /// Switches the reward law to uniform draws from `table` (one row per arm).
    pub fn with_reward_table(mut self, table: Vec<Vec<f64>>) -> Result<Self> {
        if table.len() != self.arms() {
            return Err(Error::DimensionMismatch {
                expected: self.arms(),
                actual: table.len(),
            });
        }
        if let Some(a) = table.iter().position(|rows| rows.is_empty()) {
            return Err(Error::EmptyRewardTable(a));
        }
        self.reward_law = RewardLaw::EmpiricalTable(table);
        Ok(self)
    }

    pub fn arms(&self) -> usize {
        self.features.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn feature(&self, arm: usize) -> &[f64] {
        &self.features[arm]
    }

    pub fn theta(&self) -> Option<&[f64]> {
        self.theta.as_deref()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `L = max_a ‖x_a‖`.
    pub fn feature_bound(&self) -> f64 {
        self.feature_bound
    }

    /// `S ≥ ‖θ‖`, when known or supplied.
    pub fn param_bound(&self) -> Option<f64> {
        self.param_bound
    }

    pub fn reward_law(&self) -> &RewardLaw {
        &self.reward_law
    }

    /// `true` when the features are the canonical basis of `R^K`.
    pub fn is_canonical(&self) -> bool {
        is_canonical_basis(&self.features)
    }

    pub fn gap_profile(&self, m: usize) -> Result<GapProfile> {
        GapProfile::new(&self.means, m)
    }

    /// One reward from `arm`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<f64> {
        if arm >= self.arms() {
            return Err(Error::invalid(format!(
                "arm {arm} out of range for {} arms",
                self.arms()
            )));
        }
        match &self.reward_law {
            RewardLaw::GaussianLinear => {
                if self.sigma == 0.0 {
                    return Ok(self.means[arm]);
                }
                let z: f64 = StandardNormal.sample(rng);
                Ok(self.means[arm] + self.sigma * z)
            }
            RewardLaw::EmpiricalTable(table) => {
                let rows = &table[arm];
                if rows.is_empty() {
                    return Err(Error::EmptyRewardTable(arm));
                }
                Ok(rows[rng.random_range(0..rows.len())])
            }
        }
    }
}

pub(crate) fn is_canonical_basis(features: &[Vec<f64>]) -> bool {
    let k = features.len();
    features.iter().enumerate().all(|(a, x)| {
        x.len() == k
            && x
                .iter()
                .enumerate()
                .all(|(i, &v)| v == if i == a { 1.0 } else { 0.0 })
    })
}

fn unit(dim: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[k] = 1.0;
    e
}

/// The "hard" instance family with angle `ω` between the `m+1`-th arm and
/// the span of the best arms. Arms are 0-based: arm 0 is `e₀`, arms
/// `1..m` are `e₀ + e_a`, arm `m` is `cos ω e₀ + sin ω e_m` and the
/// remaining arms are `e_{a-1}`; `θ = e₀`, `N = K − 1`.
pub fn make_classic_instance(arms: usize, m: usize, omega: f64) -> Result<Instance> {
    if arms < 3 {
        return Err(Error::invalid(format!("classic instance needs K ≥ 3, got {arms}")));
    }
    if m < 1 || m > arms - 2 {
        return Err(Error::invalid(format!(
            "classic instance needs 1 ≤ m ≤ K − 2, got m = {m}, K = {arms}"
        )));
    }
    if !(omega > 0.0 && omega <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::invalid(format!(
            "omega must lie in (0, π/2], got {omega}"
        )));
    }
    let dim = arms - 1;
    let mut features = Vec::with_capacity(arms);
    features.push(unit(dim, 0));
    for a in 1..m {
        let mut x = unit(dim, 0);
        x[a] = 1.0;
        features.push(x);
    }
    let mut near = vec![0.0; dim];
    near[0] = omega.cos();
    near[m] = omega.sin();
    features.push(near);
    for a in (m + 1)..arms {
        features.push(unit(dim, a - 1));
    }
    Instance::linear(features, unit(dim, 0), DEFAULT_SIGMA)
}

/// `K` unit-norm feature vectors in `R^N` obtained by normalizing i.i.d.
/// `N(0, D)` draws; `θ = e₀`.
pub fn make_random_unit_instance(
    arms: usize,
    dim: usize,
    variance: f64,
    seed: u64,
) -> Result<Instance> {
    if arms < 2 || dim < 1 {
        return Err(Error::invalid(format!(
            "random instance needs K ≥ 2 and N ≥ 1, got K = {arms}, N = {dim}"
        )));
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::invalid(format!("variance must be positive, got {variance}")));
    }
    let normal = Normal::new(0.0, variance.sqrt())
        .map_err(|e| Error::invalid(format!("gaussian: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(arms);
    for _ in 0..arms {
        let raw: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        let norm = dot(&raw, &raw).sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("drew a zero feature vector"));
        }
        features.push(raw.into_iter().map(|v| v / norm).collect());
    }
    Instance::linear(features, unit(dim, 0), DEFAULT_SIGMA)
}

/// Classical bandit embedded in the linear model: `X = I_K`, `θ = μ`.
pub fn make_canonical_instance(mu: &[f64]) -> Result<Instance> {
    let k = mu.len();
    if k < 2 {
        return Err(Error::invalid(format!(
            "canonical instance needs at least 2 arms, got {k}"
        )));
    }
    let features = (0..k).map(|a| unit(k, a)).collect();
    Instance::linear(features, mu.to_vec(), DEFAULT_SIGMA)
}

/// Oracle view of the means: the true top-m set and per-arm gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct GapProfile {
    pub m: usize,
    /// Arms sorted by decreasing mean (ties by index).
    pub order: Vec<usize>,
    /// `S*_m`, in decreasing-mean order.
    pub true_top_m: Vec<usize>,
    /// `Δ_k = μ_k − μ_{m+1}` inside the top-m, `μ_m − μ_k` outside.
    pub gaps: Vec<f64>,
    /// `μ_m − μ_{m+1}`.
    pub min_gap: f64,
    /// `μ_m`, the m-th largest mean.
    pub mth_mean: f64,
    in_top: Vec<bool>,
}

impl GapProfile {
    pub fn new(means: &[f64], m: usize) -> Result<Self> {
        let k = means.len();
        if m < 1 || m >= k {
            return Err(Error::invalid(format!(
                "m must satisfy 1 ≤ m < K, got m = {m}, K = {k}"
            )));
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            means[b]
                .partial_cmp(&means[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mth_mean = means[order[m - 1]];
        let next_mean = means[order[m]];
        let mut in_top = vec![false; k];
        for &a in &order[..m] {
            in_top[a] = true;
        }
        let gaps = (0..k)
            .map(|a| {
                if in_top[a] {
                    means[a] - next_mean
                } else {
                    mth_mean - means[a]
                }
            })
            .collect();
        Ok(Self {
            m,
            true_top_m: order[..m].to_vec(),
            order,
            gaps,
            min_gap: mth_mean - next_mean,
            mth_mean,
            in_top,
        })
    }

    pub fn in_top(&self, arm: usize) -> bool {
        self.in_top[arm]
    }

    /// Membership in `S*^ε_m = {a : μ_a ≥ μ_m − ε}`.
    pub fn is_epsilon_good(&self, means: &[f64], arm: usize, epsilon: f64) -> bool {
        means[arm] >= self.mth_mean - epsilon
    }

    /// `recommendation ⊆ S*^ε_m`.
    pub fn is_correct(&self, means: &[f64], recommendation: &[usize], epsilon: f64) -> bool {
        recommendation
            .iter()
            .all(|&a| self.is_epsilon_good(means, a, epsilon))
    }
}
