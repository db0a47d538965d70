//! The gap-index focused main loop and the named algorithm presets.

pub mod rules;

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use rules::{
    compute_bt, compute_ct, compute_jt, select_arm, stopping_stat, BRule, FeatureMap, JRule,
    Selection, SelectionContext, SelectionRule, StoppingRule,
};

use crate::complexity::DesignCache;
use crate::error::{Error, Result};
use crate::estimator::EstimatorState;
use crate::indices::{
    index_matrix, IndexConfig, IndexKind, IndexMatrix, ProblemDims, Threshold, ThresholdKind,
};
use crate::instances::{GapProfile, Instance};
use crate::seeding::{reward_rng, TieBreak};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Lucb,
    Ugape,
    #[serde(rename = "lingape")]
    LinGapE,
    #[serde(rename = "m-lingape")]
    MLinGapE,
    #[serde(rename = "lingifa")]
    LinGifa,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Lucb,
        Preset::Ugape,
        Preset::LinGapE,
        Preset::MLinGapE,
        Preset::LinGifa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Lucb => "lucb",
            Preset::Ugape => "ugape",
            Preset::LinGapE => "lingape",
            Preset::MLinGapE => "m-lingape",
            Preset::LinGifa => "lingifa",
        }
    }

    /// Whether `spec` is one of the rule combinations this family allows.
    pub fn admits(self, spec: &AlgorithmSpec) -> bool {
        use SelectionRule::*;
        match self {
            Preset::Lucb => {
                spec.j_rule == JRule::TopMEmpirical
                    && spec.b_rule == BRule::MaxOverOutside
                    && matches!(spec.selection, LargestVariance | BothArms)
                    && spec.stopping == StoppingRule::Lucb
                    && spec.index == IndexKind::Individual
            }
            Preset::Ugape => {
                spec.j_rule == JRule::MinMaxIndex
                    && spec.b_rule == BRule::MaxOverOutside
                    && spec.selection == LargestVariance
                    && spec.stopping == StoppingRule::Ugape
                    && spec.index == IndexKind::Individual
            }
            Preset::LinGapE => {
                spec.j_rule == JRule::TopMEmpirical
                    && matches!(spec.selection, Greedy | Optimized)
                    && spec.stopping == StoppingRule::Lucb
                    && spec.index == IndexKind::Paired
            }
            Preset::MLinGapE => {
                spec.j_rule == JRule::TopMEmpirical
                    && spec.b_rule == BRule::MaxOverOutside
                    && matches!(spec.selection, LargestVariance | Greedy | Optimized)
                    && spec.stopping == StoppingRule::Lucb
                    && spec.index == IndexKind::Paired
            }
            Preset::LinGifa => {
                spec.j_rule == JRule::MinMaxIndex
                    && spec.b_rule == BRule::MaxOverMth
                    && matches!(spec.selection, LargestVariance | Greedy)
                    && spec.stopping == StoppingRule::Ugape
                    && spec.index == IndexKind::Paired
            }
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}`")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One point in the rule taxonomy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    pub preset: Option<Preset>,
    pub j_rule: JRule,
    pub b_rule: BRule,
    pub selection: SelectionRule,
    pub stopping: StoppingRule,
    pub index: IndexKind,
    pub threshold: ThresholdKind,
    pub features: FeatureMap,
    /// Pull every arm once before the loop. Forced on when `λ = 0`.
    pub init_pass: bool,
    pub paper_literal_optimized: bool,
}

impl AlgorithmSpec {
    pub fn preset(preset: Preset) -> Self {
        use SelectionRule::*;
        let (j_rule, b_rule, selection, stopping, index, features, init_pass) = match preset {
            Preset::Lucb => (
                JRule::TopMEmpirical,
                BRule::MaxOverOutside,
                LargestVariance,
                StoppingRule::Lucb,
                IndexKind::Individual,
                FeatureMap::Canonical,
                true,
            ),
            Preset::Ugape => (
                JRule::MinMaxIndex,
                BRule::MaxOverOutside,
                LargestVariance,
                StoppingRule::Ugape,
                IndexKind::Individual,
                FeatureMap::Canonical,
                true,
            ),
            Preset::LinGapE | Preset::MLinGapE => (
                JRule::TopMEmpirical,
                BRule::MaxOverOutside,
                Greedy,
                StoppingRule::Lucb,
                IndexKind::Paired,
                FeatureMap::Linear,
                false,
            ),
            Preset::LinGifa => (
                JRule::MinMaxIndex,
                BRule::MaxOverMth,
                LargestVariance,
                StoppingRule::Ugape,
                IndexKind::Paired,
                FeatureMap::Linear,
                false,
            ),
        };
        Self {
            name: preset.name().to_string(),
            preset: Some(preset),
            j_rule,
            b_rule,
            selection,
            stopping,
            index,
            threshold: ThresholdKind::Heuristic,
            features,
            init_pass,
            paper_literal_optimized: false,
        }
    }

    pub fn named(name: &str) -> Result<Self> {
        Ok(Self::preset(name.parse()?))
    }

    pub fn with_selection(mut self, selection: SelectionRule) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_index(mut self, index: IndexKind) -> Self {
        self.index = index;
        self
    }

    pub fn with_threshold(mut self, threshold: ThresholdKind) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub m: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub max_rounds: u64,
    /// Defaults to `σ/20`.
    pub lambda: Option<f64>,
    pub trace: bool,
}

impl TrialConfig {
    pub const DEFAULT_MAX_ROUNDS: u64 = 10_000_000;

    pub fn new(m: usize, epsilon: f64, delta: f64) -> Self {
        Self {
            m,
            epsilon,
            delta,
            max_rounds: Self::DEFAULT_MAX_ROUNDS,
            lambda: None,
            trace: false,
        }
    }
}

/// One logged round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Samples drawn before this round.
    pub t: u64,
    pub candidates: Vec<usize>,
    pub b: usize,
    pub c: usize,
    /// Empty on the stopping round.
    pub pulled: Vec<usize>,
    /// Statistic of the configured stopping rule.
    pub stat: f64,
    pub lucb_stat: f64,
    pub ugape_stat: f64,
    pub threshold: f64,
    pub index_hash: u64,
    /// Row-major `B_{i,j}`; `None` once stripped.
    pub index: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    /// Samples drawn before stopping.
    pub tau: u64,
    /// Sorted arm ids.
    pub recommendation: Vec<usize>,
    pub correct: bool,
    /// `μ_i − μ_j ≤ B_{i,j}(t)` for every pair at every round.
    pub event_e_held: bool,
    pub truncated: bool,
    pub trace: Option<Vec<TraceRecord>>,
}

fn hash_values(values: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in values {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn canonical_features(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|a| (0..k).map(|i| if i == a { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// First pair violating `μ_i − μ_j ≤ B_{i,j}`, if any.
pub fn event_violation(means: &[f64], index: &IndexMatrix) -> Option<(usize, usize)> {
    let k = means.len();
    (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .find(|&(i, j)| means[i] - means[j] > index.get(i, j))
}

/// Validated, reusable setup for running many trials of one configuration.
#[derive(Debug)]
pub struct TrialRunner<'a> {
    spec: &'a AlgorithmSpec,
    instance: &'a Instance,
    config: TrialConfig,
    features: Vec<Vec<f64>>,
    lambda: f64,
    init_pass: bool,
    index: IndexConfig,
    designs: Arc<DesignCache>,
    profile: GapProfile,
}

impl<'a> TrialRunner<'a> {
    pub fn new(spec: &'a AlgorithmSpec, instance: &'a Instance, config: TrialConfig) -> Result<Self> {
        let k = instance.arms();
        let profile = instance.gap_profile(config.m)?;
        if spec.preset == Some(Preset::LinGapE) && config.m != 1 {
            return Err(Error::invalid("lingape identifies a single arm; use m = 1"));
        }
        if !(config.epsilon >= 0.0) || !config.epsilon.is_finite() {
            return Err(Error::invalid(format!("ε must be ≥ 0, got {}", config.epsilon)));
        }
        if config.epsilon == 0.0 && profile.min_gap <= 0.0 {
            return Err(Error::invalid(
                "ε = 0 needs a unique top-m set (μ_m > μ_{m+1})",
            ));
        }
        if config.max_rounds < k as u64 {
            return Err(Error::invalid(format!(
                "max_rounds must be at least K = {k}, got {}",
                config.max_rounds
            )));
        }
        let sigma = instance.sigma();
        let lambda = config.lambda.unwrap_or(sigma / 20.0);
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("λ must be ≥ 0, got {lambda}")));
        }
        let (features, feature_bound, param_bound) = match spec.features {
            FeatureMap::Linear => (
                instance.features().to_vec(),
                instance.feature_bound(),
                instance.param_bound(),
            ),
            FeatureMap::Canonical => {
                let norm = instance.means().iter().map(|m| m * m).sum::<f64>().sqrt();
                (canonical_features(k), 1.0, Some(norm.max(f64::MIN_POSITIVE)))
            }
        };
        let dims = ProblemDims {
            arms: k,
            dim: features[0].len(),
            feature_bound,
            param_bound,
            lambda,
            sigma,
        };
        let threshold = spec.threshold.build(config.delta, &dims)?;
        let designs = Arc::new(DesignCache::new(features.clone()));
        Ok(Self {
            spec,
            instance,
            init_pass: spec.init_pass || lambda == 0.0,
            config,
            features,
            lambda,
            index: IndexConfig {
                kind: spec.index,
                threshold,
            },
            designs,
            profile,
        })
    }

    /// Shares a design cache built for the same learner features.
    pub fn with_design_cache(mut self, designs: Arc<DesignCache>) -> Result<Self> {
        if designs.features() != self.features.as_slice() {
            return Err(Error::invalid("design cache was built for other features"));
        }
        self.designs = designs;
        Ok(self)
    }

    /// Replaces the threshold built from the spec.
    pub fn with_threshold(mut self, threshold: Threshold) -> Self {
        self.index.threshold = threshold;
        self
    }

    pub fn design_cache(&self) -> Arc<DesignCache> {
        Arc::clone(&self.designs)
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn index_config(&self) -> &IndexConfig {
        &self.index
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn run(&self, seed: u64) -> Result<RunResult> {
        let k = self.instance.arms();
        let m = self.config.m;
        let means = self.instance.means();
        let mut rng = reward_rng(seed);
        let ties = TieBreak::from_seed(k, seed);

        let mut batch = Vec::new();
        if self.init_pass {
            for a in 0..k {
                batch.push((a, self.instance.sample_reward(a, &mut rng)?));
            }
        }
        let mut est =
            EstimatorState::from_batch(self.features.clone(), self.lambda, self.instance.sigma(), &batch)?;

        let mut event_held = true;
        let mut trace = self.config.trace.then(Vec::new);
        loop {
            let t = est.round();
            let index = index_matrix(&est, &self.index, t)?;
            if event_held && event_violation(means, &index).is_some() {
                event_held = false;
            }
            let set = compute_jt(self.spec.j_rule, est.means(), &index, m, &ties)?;
            let b = compute_bt(self.spec.b_rule, &set, &index, m, &ties)?;
            let c = compute_ct(&set, b, &index, &ties)?;
            let stat = stopping_stat(self.spec.stopping, &set, b, c, &index, m);
            let stop = stat <= self.config.epsilon;
            let truncated = !stop && t >= self.config.max_rounds;

            let pulls = if stop || truncated {
                Vec::new()
            } else {
                let ctx = SelectionContext {
                    estimator: &est,
                    index: &index,
                    designs: &self.designs,
                    ties: &ties,
                    paper_literal_optimized: self.spec.paper_literal_optimized,
                };
                select_arm(self.spec.selection, b, c, &ctx)?.arms()
            };

            if let Some(log) = trace.as_mut() {
                log.push(TraceRecord {
                    t,
                    candidates: set.clone(),
                    b,
                    c,
                    pulled: pulls.clone(),
                    stat,
                    lucb_stat: stopping_stat(StoppingRule::Lucb, &set, b, c, &index, m),
                    ugape_stat: stopping_stat(StoppingRule::Ugape, &set, b, c, &index, m),
                    threshold: index.threshold(),
                    index_hash: hash_values(index.values()),
                    index: Some(index.values().to_vec()),
                });
            }

            if stop || truncated {
                let correct = self.profile.is_correct(means, &set, self.config.epsilon);
                return Ok(RunResult {
                    seed,
                    tau: t,
                    recommendation: set,
                    correct,
                    event_e_held: event_held,
                    truncated,
                    trace,
                });
            }
            for a in pulls {
                let reward = self.instance.sample_reward(a, &mut rng)?;
                est.update(a, reward)?;
            }
        }
    }
}

/// Runs a single trial.
pub fn run_trial(
    spec: &AlgorithmSpec,
    instance: &Instance,
    config: &TrialConfig,
    seed: u64,
) -> Result<RunResult> {
    TrialRunner::new(spec, instance, config.clone())?.run(seed)
}
