//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use topm_core::indices::IndexMatrix;

pub fn to_dmatrix(dim: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(dim, dim, row_major)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Dense inverse of `λI + Σ x xᵀ` over the given update vectors.
pub fn batch_inverse(dim: usize, lambda: f64, updates: &[Vec<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::identity(dim, dim) * lambda;
    for x in updates {
        let v = DVector::from_column_slice(x);
        m += &v * v.transpose();
    }
    m.try_inverse().expect("regularized design is invertible")
}

/// `(λI + Σ x_{a_s} x_{a_s}ᵀ)⁻¹ Σ r_s x_{a_s}`.
pub fn batch_theta(features: &[Vec<f64>], lambda: f64, pulls: &[(usize, f64)]) -> Vec<f64> {
    let dim = features[0].len();
    let xs: Vec<Vec<f64>> = pulls.iter().map(|&(a, _)| features[a].clone()).collect();
    let inv = batch_inverse(dim, lambda, &xs);
    let mut b = DVector::<f64>::zeros(dim);
    for &(a, r) in pulls {
        b += DVector::from_column_slice(&features[a]) * r;
    }
    (inv * b).iter().copied().collect()
}

/// `yᵀ M⁻¹ y` for `M = λI + Σ N_a x_a x_aᵀ`.
pub fn quad_with_counts(features: &[Vec<f64>], counts: &[u64], lambda: f64, y: &[f64]) -> f64 {
    let xs: Vec<Vec<f64>> = features
        .iter()
        .zip(counts)
        .flat_map(|(x, &n)| std::iter::repeat_n(x.clone(), n as usize))
        .collect();
    let inv = batch_inverse(features[0].len(), lambda, &xs);
    let y = DVector::from_column_slice(y);
    (y.transpose() * inv * &y)[(0, 0)]
}

/// Minimum L1 norm of `w` with `Σ_a w_a x_a = x_i − x_j`, by enumerating
/// every basic solution (supports of linearly independent columns).
pub fn l1_by_enumeration(features: &[Vec<f64>], i: usize, j: usize) -> Option<f64> {
    let k = features.len();
    let n = features[0].len();
    let y = DVector::from_fn(n, |r, _| features[i][r] - features[j][r]);
    if y.norm() == 0.0 {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|a| mask & (1 << a) != 0).collect();
        if support.len() > n {
            continue;
        }
        let xs = DMatrix::from_fn(n, support.len(), |r, c| features[support[c]][r]);
        let svd = xs.clone().svd(true, true);
        let rank = svd.rank(1e-10);
        if rank < support.len() {
            continue;
        }
        let Ok(w) = svd.solve(&y, 1e-12) else { continue };
        if (&xs * &w - &y).norm() > 1e-9 {
            continue;
        }
        let l1 = w.iter().map(|v| v.abs()).sum::<f64>();
        best = Some(best.map_or(l1, |b: f64| b.min(l1)));
    }
    best
}

pub fn random_matrix<R: Rng>(rng: &mut R, k: usize) -> IndexMatrix {
    // a coarse grid makes exact ties common
    let values = (0..k * k).map(|_| f64::from(rng.random_range(-4i32..=4)) * 0.5).collect();
    IndexMatrix::from_values(k, values).unwrap()
}

/// All size-`m` subsets of `0..k`.
pub fn subsets(k: usize, m: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << k))
        .filter(|mask| mask.count_ones() as usize == m)
        .map(|mask| (0..k).filter(|a| mask & (1 << a) != 0).collect())
        .collect()
}

/// m-th largest of `{B_{i,j} : i ≠ j}` by full sort.
pub fn mth_largest_oracle(b: &IndexMatrix, j: usize, m: usize) -> f64 {
    let mut col: Vec<f64> = (0..b.arms()).filter(|&i| i != j).map(|i| b.get(i, j)).collect();
    col.sort_by(|x, y| y.partial_cmp(x).unwrap());
    col[m - 1]
}

/// Checks Lemma 1 and `max_{j∈J} max^m ≤ max_{j∈J} max_{i∉J}` on every
/// size-`m` set; returns the number of violations.
pub fn lemma1_violations(b: &IndexMatrix, m: usize) -> usize {
    let k = b.arms();
    let mut bad = 0;
    for set in subsets(k, m) {
        let outside: Vec<usize> = (0..k).filter(|a| !set.contains(a)).collect();
        let mut ugape = f64::NEG_INFINITY;
        let mut lucb = f64::NEG_INFINITY;
        for &j in &set {
            let mth = mth_largest_oracle(b, j, m);
            let out = outside.iter().map(|&i| b.get(i, j)).fold(f64::NEG_INFINITY, f64::max);
            if mth > out {
                bad += 1;
            }
            ugape = ugape.max(mth);
            lucb = lucb.max(out);
        }
        if ugape > lucb {
            bad += 1;
        }
    }
    bad
}

pub fn random_unit_features<R: Rng>(rng: &mut R, k: usize, n: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}
