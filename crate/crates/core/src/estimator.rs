//! Online regularized least-squares estimate of the parameter vector.

use crate::error::{Error, Result};
use crate::instances::is_canonical_basis;
use crate::linalg::{dot, PosDefState};

/// `B̂ = λI + Σ_a N_a x_a x_aᵀ`, `b = Σ_s r_s x_{a_s}`, `θ̂ = B̂⁻¹ b`.
#[derive(Clone, Debug)]
pub struct EstimatorState {
    features: Vec<Vec<f64>>,
    design: PosDefState,
    response: Vec<f64>,
    counts: Vec<u64>,
    round: u64,
    lambda: f64,
    sigma: f64,
    theta_hat: Vec<f64>,
    means: Vec<f64>,
}

fn check_features(features: &[Vec<f64>]) -> Result<usize> {
    let dim = features.first().map(Vec::len).unwrap_or(0);
    if features.is_empty() || dim == 0 {
        return Err(Error::invalid("estimator needs at least one arm and one feature"));
    }
    if let Some(x) = features.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.len(),
        });
    }
    Ok(dim)
}

impl EstimatorState {
    /// Fresh estimator with `λ > 0`.
    pub fn new(features: Vec<Vec<f64>>, lambda: f64, sigma: f64) -> Result<Self> {
        Self::from_batch(features, lambda, sigma, &[])
    }

    /// Estimator after the pulls in `batch`, assembled directly.
    ///
    /// `λ = 0` is accepted only for canonical features when every arm
    /// appears in the batch, so the design is invertible from the start.
    pub fn from_batch(
        features: Vec<Vec<f64>>,
        lambda: f64,
        sigma: f64,
        batch: &[(usize, f64)],
    ) -> Result<Self> {
        let dim = check_features(&features)?;
        let arms = features.len();
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("regularization must be ≥ 0, got {lambda}")));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("noise scale must be ≥ 0, got {sigma}")));
        }
        let mut counts = vec![0u64; arms];
        for &(a, _) in batch {
            if a >= arms {
                return Err(Error::invalid(format!("arm {a} out of range")));
            }
            counts[a] += 1;
        }
        if lambda == 0.0 && (!is_canonical_basis(&features) || counts.contains(&0)) {
            return Err(Error::invalid(
                "λ = 0 requires canonical features and one initial pull of every arm",
            ));
        }

        let mut matrix = vec![0.0; dim * dim];
        for k in 0..dim {
            matrix[k * dim + k] = lambda;
        }
        let mut response = vec![0.0; dim];
        for (a, x) in features.iter().enumerate() {
            let n = counts[a] as f64;
            if n == 0.0 {
                continue;
            }
            for r in 0..dim {
                for c in 0..dim {
                    matrix[r * dim + c] += n * x[r] * x[c];
                }
            }
        }
        for &(a, reward) in batch {
            for (acc, &v) in response.iter_mut().zip(&features[a]) {
                *acc += reward * v;
            }
        }
        let design = if batch.is_empty() {
            PosDefState::scaled_identity(dim, lambda)?
        } else {
            PosDefState::from_matrix(dim, matrix)?
        };

        let mut state = Self {
            features,
            design,
            response,
            counts,
            round: batch.len() as u64,
            lambda,
            sigma,
            theta_hat: vec![0.0; dim],
            means: vec![0.0; arms],
        };
        state.refresh_estimate();
        Ok(state)
    }

    fn refresh_estimate(&mut self) {
        self.theta_hat = self
            .design
            .apply_inverse(&self.response)
            .expect("response has the design dimension");
        for (mean, x) in self.means.iter_mut().zip(&self.features) {
            *mean = dot(&self.theta_hat, x);
        }
    }

    /// Records `reward` for `arm`.
    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.arms() {
            return Err(Error::invalid(format!("arm {arm} out of range")));
        }
        self.design.rank_one_update(&self.features[arm])?;
        for (acc, &v) in self.response.iter_mut().zip(&self.features[arm]) {
            *acc += reward * v;
        }
        self.counts[arm] += 1;
        self.round += 1;
        self.refresh_estimate();
        Ok(())
    }

    pub fn arms(&self) -> usize {
        self.features.len()
    }

    pub fn dim(&self) -> usize {
        self.design.dim()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn design(&self) -> &PosDefState {
        &self.design
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total number of samples, `Σ_a N_a`.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    /// `μ̂_a = θ̂ᵀ x_a` for every arm.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn empirical_mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    /// `Δ̂_{i,j} = μ̂_i − μ̂_j`.
    pub fn empirical_gap(&self, i: usize, j: usize) -> f64 {
        self.means[i] - self.means[j]
    }

    /// `σ ‖y‖_{B̂⁻¹}`.
    pub fn deviation(&self, y: &[f64]) -> Result<f64> {
        Ok(self.sigma * self.design.quad_form(y)?.sqrt())
    }

    pub fn arm_deviation(&self, arm: usize) -> f64 {
        self.sigma
            * self
                .design
                .quad_form(&self.features[arm])
                .expect("feature has the design dimension")
                .sqrt()
    }

    /// `σ ‖y‖` measured in `(B̂ + x_a x_aᵀ)⁻¹`, without mutating the state.
    pub fn deviation_after_pull(&self, arm: usize, y: &[f64]) -> Result<f64> {
        let q = self.design.quad_form_after_update(&self.features[arm], y)?;
        Ok(self.sigma * q.sqrt())
    }

    /// `G = Xᵀ B̂⁻¹ X` (`K × K`, row-major), symmetric by construction.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.arms();
        let projected: Vec<Vec<f64>> = self
            .features
            .iter()
            .map(|x| self.design.apply_inverse(x).expect("dimension"))
            .collect();
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let v = dot(&self.features[i], &projected[j]);
                g[i * k + j] = v;
                g[j * k + i] = v;
            }
        }
        g
    }

    /// Max-entry distance between the maintained design and the one implied
    /// by `λ` and the counts.
    pub fn design_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let mut want = if r == c { self.lambda } else { 0.0 };
                for (a, x) in self.features.iter().enumerate() {
                    want += self.counts[a] as f64 * x[r] * x[c];
                }
                worst = worst.max((self.design.matrix()[r * n + c] - want).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical(k: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|a| (0..k).map(|i| if i == a { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn closed_form_after_one_pull() {
        let mut est = EstimatorState::new(canonical(2), 0.1, 0.5).unwrap();
        assert_eq!(est.theta_hat(), &[0.0, 0.0]);
        est.update(0, 1.0).unwrap();
        assert_close!(est.theta_hat()[0], 1.0 / 1.1, 1e-14);
        assert_eq!(est.theta_hat()[1], 0.0);
        assert_eq!(est.round(), 1);
    }

    #[test]
    fn fresh_state_means_and_gaps_vanish() {
        let est = EstimatorState::new(canonical(3), 0.1, 0.5).unwrap();
        for i in 0..3 {
            assert_eq!(est.empirical_mean(i), 0.0);
            for j in 0..3 {
                assert_eq!(est.empirical_gap(i, j), 0.0);
            }
        }
    }

    #[test]
    fn canonical_mean_is_shrunk_average() {
        let mut est = EstimatorState::new(canonical(3), 0.1, 0.5).unwrap();
        let pulls = [(0, 1.0), (0, 0.5), (2, 0.2), (0, 0.3), (2, -0.1)];
        for &(a, r) in &pulls {
            est.update(a, r).unwrap();
        }
        assert_close!(est.empirical_mean(0), 1.8 / 3.1, 1e-14);
        assert_close!(est.empirical_mean(2), 0.1 / 2.1, 1e-14);
        assert_eq!(est.empirical_mean(1), 0.0);
        for i in 0..3 {
            assert_eq!(est.empirical_gap(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(est.empirical_gap(i, j), -est.empirical_gap(j, i));
            }
        }
    }

    #[test]
    fn deviation_examples() {
        let est = EstimatorState::new(canonical(2), 0.1, 0.5).unwrap();
        assert_close!(est.deviation(&[1.0, 0.0]).unwrap(), 0.5 * 10f64.sqrt(), 1e-12);

        let mut est = EstimatorState::new(canonical(3), 0.1, 0.5).unwrap();
        for &a in &[0, 0, 1, 0, 2, 2] {
            est.update(a, 0.0).unwrap();
        }
        for a in 0..3 {
            let n = est.counts()[a] as f64;
            assert_close!(est.arm_deviation(a), 0.5 / (0.1 + n).sqrt(), 1e-12);
        }
        assert!(est.deviation(&[1.0]).is_err());
    }

    #[test]
    fn zero_lambda_needs_canonical_initialization() {
        let feats = canonical(2);
        assert!(EstimatorState::new(feats.clone(), 0.0, 0.5).is_err());
        assert!(EstimatorState::from_batch(feats.clone(), 0.0, 0.5, &[(0, 1.0)]).is_err());
        let est = EstimatorState::from_batch(feats, 0.0, 0.5, &[(0, 1.0), (1, 0.25)]).unwrap();
        assert_eq!(est.means(), &[1.0, 0.25]);
        assert_close!(est.arm_deviation(1), 0.5, 1e-15);

        let linear = vec![vec![1.0, 0.0], vec![0.6, 0.8]];
        assert!(EstimatorState::from_batch(linear, 0.0, 0.5, &[(0, 1.0), (1, 0.0)]).is_err());
        assert!(EstimatorState::new(canonical(2), -1.0, 0.5).is_err());
    }

    #[test]
    fn batch_and_incremental_agree() {
        let feats = vec![vec![1.0, 0.2], vec![0.3, -0.7], vec![0.5, 0.5]];
        let pulls = [(0, 0.4), (1, -0.2), (2, 0.9), (0, 0.1), (1, 0.3)];
        let mut inc = EstimatorState::new(feats.clone(), 0.05, 0.5).unwrap();
        for &(a, r) in &pulls {
            inc.update(a, r).unwrap();
        }
        let batch = EstimatorState::from_batch(feats, 0.05, 0.5, &pulls).unwrap();
        for (a, b) in inc.theta_hat().iter().zip(batch.theta_hat()) {
            assert_close!(*a, *b, 1e-12);
        }
        assert!(inc.design_residual() < 1e-12);
        assert_eq!(inc.counts(), batch.counts());
    }

    #[test]
    fn gram_matches_quadratic_forms() {
        let feats = vec![vec![1.0, 0.2], vec![0.3, -0.7], vec![0.5, 0.5]];
        let mut est = EstimatorState::new(feats, 0.05, 0.5).unwrap();
        est.update(1, 0.3).unwrap();
        let g = est.gram();
        for a in 0..3 {
            let q = est.design().quad_form(&est.features()[a]).unwrap();
            assert_close!(g[a * 3 + a], q, 1e-12);
        }
    }
}
