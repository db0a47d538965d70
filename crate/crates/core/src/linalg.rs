//! Dense symmetric positive-definite state with an explicitly maintained
//! inverse.
//!
//! The design matrix of a regularized least-squares estimator only ever grows
//! by rank-one terms `x xᵀ`, so the inverse is kept up to date with the
//! Sherman-Morrison identity and periodically recomputed from the accumulated
//! matrix to bound floating-point drift.

use crate::error::{Error, Result};

/// Number of rank-one updates between full recomputations of the inverse.
pub const DEFAULT_REFRESH_INTERVAL: usize = 1000;

#[derive(Clone, Debug)]
pub struct PosDefState {
    dim: usize,
    /// Row-major `dim × dim`.
    matrix: Vec<f64>,
    /// Row-major `dim × dim`, kept equal to `matrix⁻¹`.
    inverse: Vec<f64>,
    updates_since_refresh: usize,
    refresh_interval: usize,
}

impl PosDefState {
    /// `λ I` with `λ > 0`.
    pub fn scaled_identity(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!(
                "regularization must be positive and finite, got {lambda}"
            )));
        }
        let mut matrix = vec![0.0; dim * dim];
        let mut inverse = vec![0.0; dim * dim];
        for k in 0..dim {
            matrix[k * dim + k] = lambda;
            inverse[k * dim + k] = 1.0 / lambda;
        }
        Ok(Self {
            dim,
            matrix,
            inverse,
            updates_since_refresh: 0,
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
        })
    }

    /// Builds the state from an explicit row-major matrix, inverting it by
    /// Cholesky factorization.
    pub fn from_matrix(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: matrix.len(),
            });
        }
        let inverse = invert_spd(dim, &matrix)?;
        Ok(Self {
            dim,
            matrix,
            inverse,
            updates_since_refresh: 0,
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
        })
    }

    pub fn with_refresh_interval(mut self, interval: usize) -> Self {
        self.refresh_interval = interval.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn inverse(&self) -> &[f64] {
        &self.inverse
    }

    #[inline]
    pub fn inverse_entry(&self, r: usize, c: usize) -> f64 {
        self.inverse[r * self.dim + c]
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// `A ← A + x xᵀ` with the inverse updated by Sherman-Morrison.
    pub fn rank_one_update(&mut self, x: &[f64]) -> Result<()> {
        self.check_len(x)?;
        if x.iter().all(|&v| v == 0.0) {
            return Ok(());
        }
        let n = self.dim;
        for r in 0..n {
            for c in 0..n {
                self.matrix[r * n + c] += x[r] * x[c];
            }
        }

        self.updates_since_refresh += 1;
        if self.updates_since_refresh >= self.refresh_interval {
            return self.refresh();
        }

        let ax = self.apply_inverse_unchecked(x);
        let denom = 1.0 + dot(x, &ax);
        for r in 0..n {
            for c in 0..n {
                self.inverse[r * n + c] -= ax[r] * ax[c] / denom;
            }
        }
        self.symmetrize_inverse();
        Ok(())
    }

    /// Recomputes the inverse from the accumulated matrix.
    pub fn refresh(&mut self) -> Result<()> {
        self.inverse = invert_spd(self.dim, &self.matrix)?;
        self.updates_since_refresh = 0;
        Ok(())
    }

    fn symmetrize_inverse(&mut self) {
        let n = self.dim;
        for r in 0..n {
            for c in (r + 1)..n {
                let avg = 0.5 * (self.inverse[r * n + c] + self.inverse[c * n + r]);
                self.inverse[r * n + c] = avg;
                self.inverse[c * n + r] = avg;
            }
        }
    }

    fn apply_inverse_unchecked(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|r| dot(&self.inverse[r * n..(r + 1) * n], y))
            .collect()
    }

    /// `A⁻¹ y`.
    pub fn apply_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y)?;
        Ok(self.apply_inverse_unchecked(y))
    }

    /// `xᵀ A⁻¹ y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(dot(x, &self.apply_inverse(y)?))
    }

    /// `yᵀ A⁻¹ y`, i.e. the squared norm of `y` in the inverse metric.
    pub fn quad_form(&self, y: &[f64]) -> Result<f64> {
        self.check_len(y)?;
        Ok(dot(y, &self.apply_inverse_unchecked(y)).max(0.0))
    }

    /// `yᵀ (A + x xᵀ)⁻¹ y` without mutating the state.
    pub fn quad_form_after_update(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        self.check_len(y)?;
        let ax = self.apply_inverse_unchecked(x);
        let ay = self.apply_inverse_unchecked(y);
        let cross = dot(y, &ax);
        let q = dot(y, &ay) - cross * cross / (1.0 + dot(x, &ax));
        Ok(q.max(0.0))
    }

    /// Max-entry error of `A · A⁻¹ − I`.
    pub fn identity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let v: f64 = (0..n)
                    .map(|k| self.matrix[r * n + k] * self.inverse[k * n + c])
                    .sum();
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor of a row-major symmetric matrix.
pub fn cholesky(dim: usize, matrix: &[f64]) -> Result<Vec<f64>> {
    let n = dim;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = matrix[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = matrix[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn invert_spd(dim: usize, matrix: &[f64]) -> Result<Vec<f64>> {
    let n = dim;
    let l = cholesky(n, matrix)?;
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for c in 0..n {
        // L z = e_c
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i * n + k] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        // Lᵀ w = z
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = 0.5 * (inv[r * n + c] + inv[c * n + r]);
            inv[r * n + c] = avg;
            inv[c * n + r] = avg;
        }
    }
    Ok(inv)
}
