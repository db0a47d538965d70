//! Seeded Monte-Carlo campaigns, run statistics, trace validation, file
//! outputs and the command-line front end.

pub mod cli;
mod output;
mod trace;

pub use output::{emit_outputs, read_runs_csv, write_quantiles_csv, write_runs_csv, write_summary_json, OutputPaths, RunRow};
pub use trace::{validate_trace, EventReport, Violation};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{AlgorithmSpec, RunResult, TrialConfig, TrialRunner};
use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::seeding::derive_seed;

/// Levels reported by [`RunSummary`], in percent.
pub const QUANTILE_LEVELS: [u32; 5] = [5, 25, 50, 75, 95];

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub instance: Instance,
    pub algorithms: Vec<AlgorithmSpec>,
    pub trial: TrialConfig,
    pub runs: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl CampaignConfig {
    pub fn new(instance: Instance, algorithm: AlgorithmSpec, trial: TrialConfig, runs: usize, seed: u64) -> Self {
        Self {
            instance,
            algorithms: vec![algorithm],
            trial,
            runs,
            seed,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::invalid("runs must be ≥ 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("no algorithm given"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be ≥ 1"));
        }
        Ok(())
    }
}

/// Nearest-rank quantile of sorted data: the value at rank `⌈p·n/100⌉`.
pub fn nearest_rank(sorted: &[u64], percent: u32) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len() as u64;
    let rank = (u64::from(percent) * n).div_ceil(100).max(1);
    Some(sorted[(rank - 1) as usize])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub percent: u32,
    pub tau: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub runs: usize,
    pub errors: usize,
    /// `errors / runs`, zero for an empty campaign.
    pub error_frequency: f64,
    pub mean_tau: Option<f64>,
    pub quantiles: Vec<Quantile>,
    pub truncations: usize,
    pub event_violations: usize,
}

impl RunSummary {
    pub fn from_rows<'a>(algorithm: &str, rows: impl IntoIterator<Item = &'a RunRow>) -> Self {
        let rows: Vec<&RunRow> = rows.into_iter().collect();
        let runs = rows.len();
        let errors = rows.iter().filter(|r| !r.correct).count();
        let mut taus: Vec<u64> = rows.iter().map(|r| r.tau).collect();
        taus.sort_unstable();
        let total: u128 = taus.iter().map(|&t| u128::from(t)).sum();
        Self {
            algorithm: algorithm.to_string(),
            runs,
            errors,
            error_frequency: if runs == 0 { 0.0 } else { errors as f64 / runs as f64 },
            mean_tau: (runs > 0).then(|| total as f64 / runs as f64),
            quantiles: QUANTILE_LEVELS
                .iter()
                .filter_map(|&p| nearest_rank(&taus, p).map(|tau| Quantile { percent: p, tau }))
                .collect(),
            truncations: rows.iter().filter(|r| r.truncated).count(),
            event_violations: rows.iter().filter(|r| !r.event_e_held).count(),
        }
    }

    pub fn from_results(algorithm: &str, results: &[RunResult]) -> Self {
        let rows: Vec<RunRow> = results.iter().map(RunRow::from).collect();
        Self::from_rows(algorithm, &rows)
    }

    pub fn quantile(&self, percent: u32) -> Option<u64> {
        self.quantiles.iter().find(|q| q.percent == percent).map(|q| q.tau)
    }

    pub fn median(&self) -> Option<u64> {
        self.quantile(50)
    }
}

#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub algorithm: AlgorithmSpec,
    pub summary: RunSummary,
    /// In trial order.
    pub results: Vec<RunResult>,
}

fn run_trials(runner: &TrialRunner<'_>, runs: usize, seed: u64) -> Result<Vec<RunResult>> {
    (0..runs)
        .into_par_iter()
        .map(|i| runner.run(derive_seed(seed, i as u64)))
        .collect()
}

/// Runs every algorithm of `config` on `runs` trials; trial `i` uses seed
/// `derive_seed(config.seed, i)` for every algorithm.
pub fn run_campaign(config: &CampaignConfig) -> Result<Vec<CampaignOutcome>> {
    config.validate()?;
    let body = || -> Result<Vec<CampaignOutcome>> {
        let mut outcomes = Vec::with_capacity(config.algorithms.len());
        for spec in &config.algorithms {
            let runner = TrialRunner::new(spec, &config.instance, config.trial.clone())?;
            let results = run_trials(&runner, config.runs, config.seed)?;
            outcomes.push(CampaignOutcome {
                algorithm: spec.clone(),
                summary: RunSummary::from_results(&spec.name, &results),
                results,
            });
        }
        Ok(outcomes)
    };
    match config.threads {
        None => body(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?
            .install(body),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Preset;
    use crate::instances::make_classic_instance;
    use std::f64::consts::PI;

    #[test]
    fn nearest_rank_definition() {
        let data: Vec<u64> = (1..=20).collect();
        assert_eq!(nearest_rank(&data, 5), Some(1));
        assert_eq!(nearest_rank(&data, 25), Some(5));
        assert_eq!(nearest_rank(&data, 50), Some(10));
        assert_eq!(nearest_rank(&data, 95), Some(19));
        assert_eq!(nearest_rank(&[7], 5), Some(7));
        assert_eq!(nearest_rank(&[], 50), None);
    }

    #[test]
    fn single_run_quantiles_coincide() {
        let inst = make_classic_instance(4, 2, PI / 6.0).unwrap();
        let cfg = CampaignConfig::new(
            inst,
            AlgorithmSpec::preset(Preset::MLinGapE),
            TrialConfig::new(2, 0.0, 0.05),
            1,
            4,
        );
        let out = run_campaign(&cfg).unwrap();
        let s = &out[0].summary;
        let tau = out[0].results[0].tau;
        assert_eq!(s.quantiles.len(), 5);
        assert!(s.quantiles.iter().all(|q| q.tau == tau));
        assert_eq!(s.mean_tau, Some(tau as f64));
    }

    #[test]
    fn rejects_empty_campaigns() {
        let inst = make_classic_instance(4, 2, PI / 6.0).unwrap();
        let cfg = CampaignConfig::new(
            inst,
            AlgorithmSpec::preset(Preset::MLinGapE),
            TrialConfig::new(2, 0.0, 0.05),
            0,
            4,
        );
        assert!(run_campaign(&cfg).is_err());
    }

    #[test]
    fn empty_summary() {
        let s = RunSummary::from_rows("x", &[]);
        assert_eq!(s.error_frequency, 0.0);
        assert_eq!(s.mean_tau, None);
        assert!(s.quantiles.is_empty());
    }
}
