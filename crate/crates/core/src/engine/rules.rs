//! The four pluggable rule slots of the gap-index loop.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::complexity::DesignCache;
use crate::error::{Error, Result};
use crate::estimator::EstimatorState;
use crate::indices::IndexMatrix;
use crate::seeding::TieBreak;

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal $(| $alias:literal)*),+ $(,)? }) => {
        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text $(| $alias)* => Ok(Self::$variant),)+
                    other => Err(Error::invalid(format!(
                        concat!("unknown ", stringify!($name), " `{}`"), other
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $text,)+ })
            }
        }
    };
}

/// How the candidate set `J(t)` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JRule {
    /// The m arms of largest empirical mean.
    TopMEmpirical,
    /// The m arms of smallest `max^m_{i≠j} B_{i,j}`.
    MinMaxIndex,
}

/// How the anchor `b_t ∈ J(t)` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BRule {
    /// `argmax_{j∈J} max_{i∉J} B_{i,j}`.
    MaxOverOutside,
    /// `argmax_{j∈J} max^m_{i≠j} B_{i,j}`.
    MaxOverMth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    LargestVariance,
    Greedy,
    Optimized,
    BothArms,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingRule {
    /// `B_{c_t,b_t}(t) ≤ ε`.
    Lucb,
    /// `max_{j∈J} max^m_{i≠j} B_{i,j}(t) ≤ ε`.
    Ugape,
}

/// Which feature vectors the learner uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMap {
    /// The instance features.
    Linear,
    /// The canonical basis of `R^K`, i.e. a classical bandit that ignores
    /// the features.
    Canonical,
}

string_enum!(JRule { TopMEmpirical => "top-m-empirical" | "empirical", MinMaxIndex => "min-max-index" | "index" });
string_enum!(BRule { MaxOverOutside => "max-over-outside" | "outside", MaxOverMth => "max-over-mth" | "mth" });
string_enum!(SelectionRule {
    LargestVariance => "largest-variance" | "variance",
    Greedy => "greedy",
    Optimized => "optimized",
    BothArms => "both-arms" | "both",
});
string_enum!(StoppingRule { Lucb => "lucb", Ugape => "ugape" });
string_enum!(FeatureMap { Linear => "linear", Canonical => "canonical" });

fn check_set_size(k: usize, m: usize) -> Result<()> {
    if m < 1 || m >= k {
        return Err(Error::invalid(format!("need 1 ≤ m < K, got m = {m}, K = {k}")));
    }
    Ok(())
}

/// `J(t)` as a sorted arm list.
pub fn compute_jt(
    rule: JRule,
    means: &[f64],
    index: &IndexMatrix,
    m: usize,
    ties: &TieBreak,
) -> Result<Vec<usize>> {
    let k = means.len();
    check_set_size(k, m)?;
    if index.arms() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: index.arms(),
        });
    }
    let mut set = match rule {
        JRule::TopMEmpirical => ties.top_m_desc(means, m),
        JRule::MinMaxIndex => {
            let scores: Vec<f64> = (0..k).map(|j| index.mth_largest_in_column(j, m)).collect();
            ties.bottom_m_asc(&scores, m)
        }
    };
    set.sort_unstable();
    Ok(set)
}

pub fn membership(arms: usize, set: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; arms];
    for &a in set {
        mask[a] = true;
    }
    mask
}

pub fn compute_bt(
    rule: BRule,
    set: &[usize],
    index: &IndexMatrix,
    m: usize,
    ties: &TieBreak,
) -> Result<usize> {
    let k = index.arms();
    if set.is_empty() || set.len() >= k {
        return Err(Error::invalid("J(t) must be a non-empty proper subset"));
    }
    let mask = membership(k, set);
    let best = match rule {
        BRule::MaxOverOutside => ties.argmax(set.iter().copied(), |j| index.max_outside(j, &mask)),
        BRule::MaxOverMth => ties.argmax(set.iter().copied(), |j| index.mth_largest_in_column(j, m)),
    };
    best.ok_or_else(|| Error::invalid("empty candidate set"))
}

/// `c_t = argmax_{a∉J} B_{a,b}`.
pub fn compute_ct(set: &[usize], b: usize, index: &IndexMatrix, ties: &TieBreak) -> Result<usize> {
    let mask = membership(index.arms(), set);
    ties.argmax((0..index.arms()).filter(|&a| !mask[a]), |a| index.get(a, b))
        .ok_or_else(|| Error::invalid("J(t) has an empty complement"))
}

pub fn stopping_stat(
    rule: StoppingRule,
    set: &[usize],
    b: usize,
    c: usize,
    index: &IndexMatrix,
    m: usize,
) -> f64 {
    match rule {
        StoppingRule::Lucb => index.get(c, b),
        StoppingRule::Ugape => set
            .iter()
            .map(|&j| index.mth_largest_in_column(j, m))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Arms to pull this round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    One(usize),
    Both(usize, usize),
}

impl Selection {
    pub fn arms(&self) -> Vec<usize> {
        match *self {
            Selection::One(a) => vec![a],
            Selection::Both(a, b) => vec![a, b],
        }
    }
}

pub struct SelectionContext<'a> {
    pub estimator: &'a EstimatorState,
    pub index: &'a IndexMatrix,
    pub designs: &'a DesignCache,
    pub ties: &'a TieBreak,
    /// Use `argmax_{a: w_a > 0}` for the optimized rule instead of the
    /// proportion-tracking `argmin`.
    pub paper_literal_optimized: bool,
}

fn greedy(b: usize, c: usize, ctx: &SelectionContext<'_>) -> Result<usize> {
    let est = ctx.estimator;
    let y: Vec<f64> = est.features()[b]
        .iter()
        .zip(&est.features()[c])
        .map(|(u, v)| u - v)
        .collect();
    let widths = (0..est.arms())
        .map(|a| est.design().quad_form_after_update(&est.features()[a], &y))
        .collect::<Result<Vec<f64>>>()?;
    ctx.ties
        .argmin(0..est.arms(), |a| widths[a])
        .ok_or_else(|| Error::invalid("no arms"))
}

const WEIGHT_TOL: f64 = 1e-12;

fn optimized(b: usize, c: usize, ctx: &SelectionContext<'_>) -> Result<Option<usize>> {
    let w = ctx.designs.get(b, c)?;
    let counts = ctx.estimator.counts();
    let ratio = |a: usize| counts[a] as f64 * w.l1 / w.weights[a].abs();
    let pick = if ctx.paper_literal_optimized {
        let cands = (0..counts.len()).filter(|&a| w.weights[a] > WEIGHT_TOL);
        ctx.ties.argmax(cands, ratio)
    } else {
        let cands = (0..counts.len()).filter(|&a| w.weights[a].abs() > WEIGHT_TOL);
        ctx.ties.argmin(cands, ratio)
    };
    Ok(pick)
}

pub fn select_arm(
    rule: SelectionRule,
    b: usize,
    c: usize,
    ctx: &SelectionContext<'_>,
) -> Result<Selection> {
    if b == c {
        return Err(Error::invalid("b_t and c_t must differ"));
    }
    match rule {
        SelectionRule::LargestVariance => {
            let a = ctx
                .ties
                .argmax([b, c], |a| ctx.index.arm_deviation(a))
                .expect("two candidates");
            Ok(Selection::One(a))
        }
        SelectionRule::Greedy => Ok(Selection::One(greedy(b, c, ctx)?)),
        SelectionRule::Optimized => match optimized(b, c, ctx) {
            Ok(Some(a)) => Ok(Selection::One(a)),
            Ok(None) => {
                log::warn!("design weights for ({b}, {c}) have no usable support; using greedy");
                Ok(Selection::One(greedy(b, c, ctx)?))
            }
            Err(e @ Error::Infeasible { .. }) => {
                log::warn!("{e}; using greedy");
                Ok(Selection::One(greedy(b, c, ctx)?))
            }
            Err(e) => Err(e),
        },
        SelectionRule::BothArms => Ok(Selection::Both(b, c)),
    }
}
