//! Sample-complexity constants, the fixed-point stopping-time bound and the
//! random-instance comparison of complexity constants.

mod design;
pub mod simplex;

pub use design::{solve_l1_design, DesignCache, DesignWeights};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::Threshold;
use crate::instances::{make_random_unit_instance, GapProfile, Instance};
use crate::seeding::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComplexityKind {
    #[serde(rename = "lucb")]
    Lucb,
    #[serde(rename = "ugape")]
    Ugape,
    /// m-LinGapE with the largest-variance rule.
    #[serde(rename = "m-lingape-1")]
    MLinGapELargestVariance,
    /// m-LinGapE with the optimized rule.
    #[serde(rename = "m-lingape-2")]
    MLinGapEOptimized,
}

impl ComplexityKind {
    pub const ALL: [ComplexityKind; 4] = [
        Self::Lucb,
        Self::Ugape,
        Self::MLinGapELargestVariance,
        Self::MLinGapEOptimized,
    ];
}

impl FromStr for ComplexityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lucb" => Ok(Self::Lucb),
            "ugape" => Ok(Self::Ugape),
            "m-lingape-1" => Ok(Self::MLinGapELargestVariance),
            "m-lingape-2" => Ok(Self::MLinGapEOptimized),
            other => Err(Error::invalid(format!("unknown complexity kind `{other}`"))),
        }
    }
}

impl fmt::Display for ComplexityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lucb => "lucb",
            Self::Ugape => "ugape",
            Self::MLinGapELargestVariance => "m-lingape-1",
            Self::MLinGapEOptimized => "m-lingape-2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub kind: ComplexityKind,
    /// `H = Σ_a per_arm_terms[a]`.
    pub h: f64,
    pub per_arm_terms: Vec<f64>,
    pub gaps: Vec<f64>,
}

/// Complexity constant of `kind` on `instance`.
pub fn h_constant(
    kind: ComplexityKind,
    instance: &Instance,
    m: usize,
    epsilon: f64,
    sigma: f64,
) -> Result<ComplexityReport> {
    let cache = DesignCache::new(instance.features().to_vec());
    h_constant_with_cache(kind, instance, m, epsilon, sigma, &cache)
}

pub fn h_constant_with_cache(
    kind: ComplexityKind,
    instance: &Instance,
    m: usize,
    epsilon: f64,
    sigma: f64,
    cache: &DesignCache,
) -> Result<ComplexityReport> {
    let profile = instance.gap_profile(m)?;
    let per_arm_terms = per_arm_terms(kind, &profile, epsilon, sigma, cache)?;
    Ok(ComplexityReport {
        kind,
        h: per_arm_terms.iter().sum(),
        per_arm_terms,
        gaps: profile.gaps,
    })
}

fn per_arm_terms(
    kind: ComplexityKind,
    profile: &GapProfile,
    epsilon: f64,
    sigma: f64,
    cache: &DesignCache,
) -> Result<Vec<f64>> {
    if !(epsilon >= 0.0) {
        return Err(Error::invalid(format!("ε must be ≥ 0, got {epsilon}")));
    }
    let gaps = &profile.gaps;
    if epsilon == 0.0 {
        if let Some(arm) = gaps.iter().position(|&g| g <= 0.0) {
            return Err(Error::ZeroGap { arm });
        }
    }
    let eps = epsilon;
    let terms = match kind {
        ComplexityKind::Lucb => gaps
            .iter()
            .map(|&g| 2.0 / (eps / 2.0).max(g).powi(2))
            .collect(),
        ComplexityKind::Ugape => gaps
            .iter()
            .map(|&g| 2.0 / eps.max((eps + g) / 2.0).powi(2))
            .collect(),
        ComplexityKind::MLinGapELargestVariance => gaps
            .iter()
            .map(|&g| 4.0 * sigma * sigma / eps.max((eps + g) / 3.0).powi(2))
            .collect(),
        ComplexityKind::MLinGapEOptimized => {
            let k = gaps.len();
            if cache.features().len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    actual: cache.features().len(),
                });
            }
            let mut terms = vec![0.0f64; k];
            for i in 0..k {
                for j in (i + 1)..k {
                    let w = cache.abs_weights(i, j)?;
                    let denom = eps.max((eps + gaps[i]) / 3.0).max((eps + gaps[j]) / 3.0);
                    let denom = denom * denom;
                    for (a, term) in terms.iter_mut().enumerate() {
                        *term = term.max(w.weights[a].abs() / denom);
                    }
                }
            }
            terms.iter().map(|t| sigma * sigma * t).collect()
        }
    };
    Ok(terms)
}

/// Smallest integer `u` with `u > 1 + H·C²_{δ,u} + init_term`.
pub fn sample_complexity_bound(h: f64, threshold: &Threshold, init_term: u64) -> Result<u64> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!("H must be finite and ≥ 0, got {h}")));
    }
    let holds = |u: u64| -> Result<bool> {
        let c = threshold.value(u as f64)?;
        Ok(u as f64 > 1.0 + h * c * c + init_term as f64)
    };
    const LIMIT: u64 = 1 << 63;
    let mut lo = 1u64;
    let mut hi = 2u64;
    while !holds(hi)? {
        lo = hi;
        if hi >= LIMIT {
            return Err(Error::Overflow);
        }
        hi *= 2;
    }
    // invariant: !holds(lo), holds(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FractionReport {
    pub arms: usize,
    pub dim: usize,
    pub variance: f64,
    pub m: usize,
    pub reps: usize,
    pub sigma: f64,
    /// Share of non-skipped instances with `H_{m-LinGapE(2)} ≤ H_{UGapE}`.
    pub fraction: f64,
    pub skips: usize,
}

/// Target-set size used by the random-instance comparison.
pub fn comparison_set_size(arms: usize) -> usize {
    arms / 3 + 1
}

/// Noise scale of the random-instance comparison. With `N = K` the design
/// weights are `e_i − e_j`, so `H_{m-LinGapE(2)} = 9σ² Σ Δ⁻²` against
/// `H_{UGapE} = 8 Σ Δ⁻²`; a zero hit rate there requires `σ² ≥ 8/9`.
pub const COMPARISON_SIGMA: f64 = 1.0;

/// Draws `reps` random unit instances and counts how often
/// `H_{m-LinGapE(2)} ≤ H_{UGapE}` at `ε = 0` and `σ = COMPARISON_SIGMA`.
pub fn complexity_fraction_experiment(
    arms: usize,
    dim: usize,
    variance: f64,
    reps: usize,
    seed: u64,
) -> Result<FractionReport> {
    complexity_fraction_experiment_with_sigma(arms, dim, variance, reps, seed, COMPARISON_SIGMA)
}

pub fn complexity_fraction_experiment_with_sigma(
    arms: usize,
    dim: usize,
    variance: f64,
    reps: usize,
    seed: u64,
    sigma: f64,
) -> Result<FractionReport> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("σ must be positive, got {sigma}")));
    }
    if reps < 1 {
        return Err(Error::invalid("reps must be ≥ 1"));
    }
    let m = comparison_set_size(arms);
    if m >= arms {
        return Err(Error::invalid(format!("K = {arms} is too small for m = {m}")));
    }
    // validate generator parameters once so errors are not counted as skips
    make_random_unit_instance(arms, dim, variance, seed)?;

    let outcomes: Vec<Option<bool>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let inst = make_random_unit_instance(arms, dim, variance, derive_seed(seed, rep as u64))
                .ok()?;
            let cache = DesignCache::new(inst.features().to_vec());
            let lin = h_constant_with_cache(
                ComplexityKind::MLinGapEOptimized,
                &inst,
                m,
                0.0,
                sigma,
                &cache,
            );
            let ugape = h_constant_with_cache(ComplexityKind::Ugape, &inst, m, 0.0, sigma, &cache);
            match (lin, ugape) {
                (Ok(l), Ok(u)) => Some(l.h <= u.h),
                (Err(e), _) | (_, Err(e)) => {
                    log::warn!("skipping instance {rep}: {e}");
                    None
                }
            }
        })
        .collect();
    let skips = outcomes.iter().filter(|o| o.is_none()).count();
    let hits = outcomes.iter().filter(|o| **o == Some(true)).count();
    let used = reps - skips;
    Ok(FractionReport {
        arms,
        dim,
        variance,
        m,
        reps,
        sigma,
        fraction: if used == 0 { 0.0 } else { hits as f64 / used as f64 },
        skips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_canonical_instance, make_classic_instance};
    use std::f64::consts::PI;

    #[test]
    fn classic_lucb_and_ugape_constants() {
        let inst = make_classic_instance(4, 2, PI / 6.0).unwrap();
        let g = 1.0 - (PI / 6.0).cos();
        let lucb = h_constant(ComplexityKind::Lucb, &inst, 2, 0.0, 0.5).unwrap();
        assert_close!(lucb.h, 2.0 * (3.0 / (g * g) + 1.0), 1e-9);
        assert_close!(lucb.h, 336.1, 0.5);
        let ugape = h_constant(ComplexityKind::Ugape, &inst, 2, 0.0, 0.5).unwrap();
        assert_close!(ugape.h, 8.0 * (3.0 / (g * g) + 1.0), 1e-9);
        assert_close!(ugape.h, 1344.5, 1.0);
        assert_close!(lucb.per_arm_terms.iter().sum::<f64>(), lucb.h, 1e-12);
    }

    #[test]
    fn largest_variance_constant_is_36_sigma_squared() {
        let inst = make_canonical_instance(&[0.9, 0.7, 0.4, 0.1, 0.05]).unwrap();
        let gp = inst.gap_profile(2).unwrap();
        let direct: f64 = gp.gaps.iter().map(|g| 1.0 / (g * g)).sum::<f64>() * 36.0 * 0.3 * 0.3;
        let r = h_constant(ComplexityKind::MLinGapELargestVariance, &inst, 2, 0.0, 0.3).unwrap();
        assert_close!(r.h, direct, 1e-9 * direct);
    }

    #[test]
    fn constants_vanish_for_huge_epsilon() {
        let inst = make_classic_instance(4, 2, PI / 6.0).unwrap();
        for kind in ComplexityKind::ALL {
            let r = h_constant(kind, &inst, 2, 1e9, 0.5).unwrap();
            assert!(r.h < 1e-15, "{kind}: {}", r.h);
        }
    }

    #[test]
    fn zero_gap_names_the_arm() {
        let inst = make_canonical_instance(&[1.0, 0.5, 0.5, 0.0]).unwrap();
        let err = h_constant(ComplexityKind::Lucb, &inst, 2, 0.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::ZeroGap { arm: 1 }));
        assert!(h_constant(ComplexityKind::Lucb, &inst, 2, 0.1, 0.5).is_ok());
    }

    #[test]
    fn scaling_gaps_scales_constants() {
        let mu = [0.9, 0.7, 0.4, 0.1];
        let s = 3.0;
        let scaled: Vec<f64> = mu.iter().map(|v| v * s).collect();
        let a = make_canonical_instance(&mu).unwrap();
        let b = make_canonical_instance(&scaled).unwrap();
        for kind in ComplexityKind::ALL {
            let ha = h_constant(kind, &a, 2, 0.0, 0.5).unwrap().h;
            let hb = h_constant(kind, &b, 2, 0.0, 0.5).unwrap().h;
            assert_close!(hb, ha / (s * s), 1e-9 * ha);
        }
    }

    #[test]
    fn bound_with_zero_h() {
        let th = Threshold::Heuristic { delta: 0.05 };
        assert_eq!(sample_complexity_bound(0.0, &th, 0).unwrap(), 2);
        assert_eq!(sample_complexity_bound(0.0, &th, 4).unwrap(), 6);
    }

    fn scan(h: f64, th: &Threshold, init: u64) -> u64 {
        let mut u = 1u64;
        loop {
            let c = th.value(u as f64).unwrap();
            if u as f64 > 1.0 + h * c * c + init as f64 {
                return u;
            }
            u += 1;
        }
    }

    #[test]
    fn bound_matches_linear_scan() {
        let th = Threshold::Heuristic { delta: 0.05 };
        assert_eq!(scan(100.0, &th, 0), 1015);
        assert_eq!(sample_complexity_bound(100.0, &th, 0).unwrap(), 1015);

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let h = rng.random_range(0.0..300.0);
            let delta = rng.random_range(0.001..0.5);
            let th = Threshold::Heuristic { delta };
            assert_eq!(sample_complexity_bound(h, &th, 3).unwrap(), scan(h, &th, 3));
            let th = Threshold::Classical { delta, arms: 5 };
            assert_eq!(sample_complexity_bound(h, &th, 0).unwrap(), scan(h, &th, 0));
        }
    }

    #[test]
    fn bound_overflows_on_constant_growth() {
        // C² ≥ 1 with H = 2^64 can never be crossed below 2^63
        let th = Threshold::Constant(1.0);
        assert!(matches!(
            sample_complexity_bound(1.8e19, &th, 0),
            Err(Error::Overflow)
        ));
    }

    #[test]
    fn single_rep_fraction_is_binary() {
        let r = complexity_fraction_experiment(6, 3, 0.25, 1, 3).unwrap();
        assert!(r.fraction == 0.0 || r.fraction == 1.0);
        assert_eq!(r.m, 3);
    }

    #[test]
    fn square_designs_decide_the_comparison_by_sigma() {
        // N = K: weights are e_i − e_j, so the outcome is 9σ² vs 8 on every instance
        let high = complexity_fraction_experiment_with_sigma(6, 6, 0.25, 20, 3, 1.0).unwrap();
        assert_eq!(high.fraction, 0.0);
        let low = complexity_fraction_experiment_with_sigma(6, 6, 0.25, 20, 3, 0.5).unwrap();
        assert_eq!(low.fraction, 1.0);
        assert_eq!(high.skips + low.skips, 0);
    }
}
