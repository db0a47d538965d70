//! `topm` command-line interface.

use std::ffi::OsString;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{emit_outputs, run_campaign, validate_trace, CampaignConfig, OutputPaths, RunRow};
use crate::complexity::{
    complexity_fraction_experiment_with_sigma, h_constant, sample_complexity_bound, ComplexityKind, COMPARISON_SIGMA,
};
use crate::engine::{
    AlgorithmSpec, BRule, FeatureMap, JRule, SelectionRule, StoppingRule, TrialConfig,
};
use crate::error::{Error, Result};
use crate::indices::{IndexKind, ProblemDims, ThresholdKind};
use crate::instances::{
    load_instance, make_canonical_instance, make_classic_instance, make_random_unit_instance,
    save_instance, DEFAULT_SIGMA,
};

#[derive(Parser, Debug)]
#[command(name = "topm", version, about = "Top-m arm identification in linear bandits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a problem instance and write it to disk.
    GenInstance(GenInstanceArgs),
    /// Run a seeded Monte-Carlo campaign.
    Run(RunArgs),
    /// Print complexity constants of an instance.
    Complexity(ComplexityArgs),
    /// Solve the stopping-time bound for a complexity constant.
    Bound(BoundArgs),
    /// Random-instance comparison of complexity constants.
    Table3(Table3Args),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum InstanceKind {
    Classic,
    Random,
    Canonical,
}

#[derive(Args, Debug)]
pub struct GenInstanceArgs {
    #[arg(long, value_enum)]
    pub kind: InstanceKind,
    #[arg(long = "K")]
    pub arms: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long = "N")]
    pub dim: Option<usize>,
    #[arg(long = "D")]
    pub variance: Option<f64>,
    /// Comma-separated means of a canonical instance.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Vec<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub algo: String,
    #[arg(long)]
    pub jrule: Option<JRule>,
    #[arg(long)]
    pub brule: Option<BRule>,
    #[arg(long)]
    pub selection: Option<SelectionRule>,
    #[arg(long)]
    pub stopping: Option<StoppingRule>,
    #[arg(long)]
    pub index: Option<IndexKind>,
    #[arg(long)]
    pub features: Option<FeatureMap>,
    #[arg(long = "init-pass")]
    pub init_pass: Option<bool>,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record every round and check the concentration event on the log.
    #[arg(long)]
    pub trace: bool,
    /// JSON-lines file receiving the per-round traces.
    #[arg(long = "trace-out")]
    pub trace_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub quantiles: Option<PathBuf>,
    #[arg(long = "max-rounds", default_value_t = TrialConfig::DEFAULT_MAX_ROUNDS)]
    pub max_rounds: u64,
    #[arg(long)]
    pub threshold: Option<ThresholdKind>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long = "paper-literal-optimized")]
    pub paper_literal_optimized: bool,
}

#[derive(Clone, Copy, Debug)]
pub enum KindChoice {
    One(ComplexityKind),
    All,
}

fn parse_kind_choice(s: &str) -> std::result::Result<KindChoice, String> {
    if s == "all" {
        return Ok(KindChoice::All);
    }
    s.parse().map(KindChoice::One).map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct ComplexityArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Defaults to the instance noise scale.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = parse_kind_choice, default_value = "all")]
    pub kind: KindChoice,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long = "H")]
    pub h: f64,
    #[arg(long, default_value = "heuristic")]
    pub threshold: ThresholdKind,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Samples spent by an initialization pass.
    #[arg(long = "init-K", default_value_t = 0)]
    pub init_k: u64,
    #[arg(long = "K")]
    pub arms: Option<usize>,
    #[arg(long = "N")]
    pub dim: Option<usize>,
    #[arg(long = "L", default_value_t = 1.0)]
    pub feature_bound: f64,
    #[arg(long = "S")]
    pub param_bound: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
}

#[derive(Args, Debug)]
pub struct Table3Args {
    #[arg(long = "K")]
    pub arms: usize,
    #[arg(long = "N")]
    pub dim: usize,
    #[arg(long = "D")]
    pub variance: f64,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = COMPARISON_SIGMA)]
    pub sigma: f64,
}

fn required<T>(value: Option<T>, flag: &str, kind: &str) -> Result<T> {
    value.ok_or_else(|| Error::invalid(format!("--{flag} is required for --kind {kind}")))
}

fn gen_instance(args: GenInstanceArgs) -> Result<()> {
    let inst = match args.kind {
        InstanceKind::Classic => make_classic_instance(
            required(args.arms, "K", "classic")?,
            required(args.m, "m", "classic")?,
            required(args.omega, "omega", "classic")?,
        )?,
        InstanceKind::Random => make_random_unit_instance(
            required(args.arms, "K", "random")?,
            required(args.dim, "N", "random")?,
            required(args.variance, "D", "random")?,
            args.seed,
        )?,
        InstanceKind::Canonical => {
            if args.mu.is_empty() {
                return Err(Error::invalid("--mu is required for --kind canonical"));
            }
            make_canonical_instance(&args.mu)?
        }
    };
    let inst = match args.sigma {
        Some(s) => inst.with_sigma(s)?,
        None => inst,
    };
    save_instance(&inst, &args.out)
}

fn build_spec(args: &RunArgs) -> Result<AlgorithmSpec> {
    let mut spec = AlgorithmSpec::named(&args.algo)?;
    let mut overrides = Vec::new();
    macro_rules! apply {
        ($arg:ident => $field:ident) => {
            if let Some(v) = args.$arg {
                if v != spec.$field {
                    overrides.push(format!("{}={}", stringify!($arg), v));
                }
                spec.$field = v;
            }
        };
    }
    apply!(jrule => j_rule);
    apply!(brule => b_rule);
    apply!(selection => selection);
    apply!(stopping => stopping);
    apply!(index => index);
    apply!(features => features);
    apply!(threshold => threshold);
    apply!(init_pass => init_pass);
    spec.paper_literal_optimized = args.paper_literal_optimized;
    if let Some(preset) = spec.preset {
        if !preset.admits(&spec) {
            log::warn!("rule overrides leave the {preset} family");
        }
    }
    if !overrides.is_empty() {
        spec.name = format!("{}[{}]", spec.name, overrides.join(","));
    }
    Ok(spec)
}

fn run(args: RunArgs) -> Result<()> {
    let spec = build_spec(&args)?;
    let mut instance = load_instance(&args.instance)?;
    if let Some(s) = args.sigma {
        instance = instance.with_sigma(s)?;
    }
    let trial = TrialConfig {
        m: args.m,
        epsilon: args.epsilon,
        delta: args.delta,
        max_rounds: args.max_rounds,
        lambda: args.lambda,
        trace: args.trace || args.trace_out.is_some(),
    };
    let mut config = CampaignConfig::new(instance, spec, trial, args.runs, args.seed);
    config.threads = args.threads;
    let outcomes = run_campaign(&config)?;
    let outcome = &outcomes[0];

    if config.trial.trace {
        let mut violated = 0usize;
        for r in &outcome.results {
            let trace = r.trace.as_deref().unwrap_or_default();
            let report = validate_trace(trace, &config.instance, args.m)?;
            if let Some(v) = report.first_violation {
                violated += 1;
                log::info!(
                    "seed {}: event violated at t = {} on ({}, {})",
                    r.seed, v.t, v.i, v.j
                );
            }
        }
        eprintln!("event E violated in {violated} of {} traced runs", outcome.results.len());
        if let Some(path) = &args.trace_out {
            let mut w = BufWriter::new(std::fs::File::create(path)?);
            for r in &outcome.results {
                for rec in r.trace.as_deref().unwrap_or_default() {
                    serde_json::to_writer(&mut w, &serde_json::json!({ "run_seed": r.seed, "round": rec }))?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
        }
    }

    let rows: Vec<RunRow> = outcome.results.iter().map(RunRow::from).collect();
    let summaries = [outcome.summary.clone()];
    emit_outputs(
        &summaries,
        &rows,
        &OutputPaths {
            runs_csv: args.out.clone(),
            summary_json: args.summary.clone(),
            quantiles_csv: args.quantiles.clone(),
        },
    )?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &outcome.summary)?;
    writeln!(out)?;
    Ok(())
}

fn complexity(args: ComplexityArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let sigma = args.sigma.unwrap_or(instance.sigma());
    let kinds: Vec<ComplexityKind> = match args.kind {
        KindChoice::One(k) => vec![k],
        KindChoice::All => ComplexityKind::ALL.to_vec(),
    };
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["kind", "arm", "gap", "term"])?;
    for kind in kinds {
        let report = h_constant(kind, &instance, args.m, args.epsilon, sigma)?;
        for (a, (gap, term)) in report.gaps.iter().zip(&report.per_arm_terms).enumerate() {
            w.write_record([kind.to_string(), a.to_string(), gap.to_string(), term.to_string()])?;
        }
        w.write_record([kind.to_string(), "total".into(), String::new(), report.h.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn bound(args: BoundArgs) -> Result<()> {
    let lambda = args.lambda.unwrap_or(args.sigma / 20.0);
    let dims = ProblemDims {
        arms: args.arms.unwrap_or(1),
        dim: args.dim.unwrap_or(0),
        feature_bound: args.feature_bound,
        param_bound: args.param_bound,
        lambda,
        sigma: args.sigma,
    };
    if args.threshold == ThresholdKind::Classical && args.arms.is_none() {
        return Err(Error::invalid("--K is required for the classical threshold"));
    }
    let threshold = args.threshold.build(args.delta, &dims)?;
    let t = sample_complexity_bound(args.h, &threshold, args.init_k)?;
    println!("{t}");
    Ok(())
}

fn table3(args: Table3Args) -> Result<()> {
    let r = complexity_fraction_experiment_with_sigma(
        args.arms,
        args.dim,
        args.variance,
        args.reps,
        args.seed,
        args.sigma,
    )?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["K", "N", "D", "m", "sigma", "reps", "fraction", "skips"])?;
    w.write_record([
        r.arms.to_string(),
        r.dim.to_string(),
        r.variance.to_string(),
        r.m.to_string(),
        r.sigma.to_string(),
        r.reps.to_string(),
        r.fraction.to_string(),
        r.skips.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenInstance(a) => gen_instance(a),
        Command::Run(a) => run(a),
        Command::Complexity(a) => complexity(a),
        Command::Bound(a) => bound(a),
        Command::Table3(a) => table3(a),
    }
}

/// Parses `args` and runs the command; returns the process exit code
/// (0 success, 1 usage error, 2 runtime error).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidParameter(_) => 1,
                _ => 2,
            }
        }
    }
}
