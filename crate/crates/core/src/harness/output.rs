use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunSummary;
use crate::engine::RunResult;
use crate::error::{Error, Result};

/// One line of the per-run CSV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRow {
    pub run_seed: u64,
    pub tau: u64,
    pub correct: bool,
    pub truncated: bool,
    pub recommended: Vec<usize>,
    pub event_e_held: bool,
}

impl From<&RunResult> for RunRow {
    fn from(r: &RunResult) -> Self {
        Self {
            run_seed: r.seed,
            tau: r.tau,
            correct: r.correct,
            truncated: r.truncated,
            recommended: r.recommendation.clone(),
            event_e_held: r.event_e_held,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    run_seed: u64,
    tau: u64,
    correct: bool,
    truncated: bool,
    recommended: String,
    event_e_held: bool,
}

const HEADER: [&str; 6] = ["run_seed", "tau", "correct", "truncated", "recommended", "event_e_held"];

fn join_arms(arms: &[usize]) -> String {
    arms.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn split_arms(path: &Path, field: &str) -> Result<Vec<usize>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|a| {
            a.parse()
                .map_err(|_| Error::parse(path, format!("bad arm id `{a}` in `{field}`")))
        })
        .collect()
}

pub fn write_runs_csv<'a>(path: impl AsRef<Path>, rows: impl IntoIterator<Item = &'a RunRow>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    // written explicitly so that an empty campaign still gets a header
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.run_seed.to_string(),
            r.tau.to_string(),
            r.correct.to_string(),
            r.truncated.to_string(),
            join_arms(&r.recommended),
            r.event_e_held.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs_csv(path: impl AsRef<Path>) -> Result<Vec<RunRow>> {
    let path = path.as_ref();
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(Error::parse(path, format!("unexpected header {header:?}")));
    }
    rd.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            Ok(RunRow {
                run_seed: row.run_seed,
                tau: row.tau,
                correct: row.correct,
                truncated: row.truncated,
                recommended: split_arms(path, &row.recommended)?,
                event_e_held: row.event_e_held,
            })
        })
        .collect()
}

pub fn write_summary_json(path: impl AsRef<Path>, summaries: &[RunSummary]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    if let [single] = summaries {
        serde_json::to_writer_pretty(&mut w, single)?;
    } else {
        serde_json::to_writer_pretty(&mut w, summaries)?;
    }
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Long-format table `algorithm,percent,tau` for plotting.
pub fn write_quantiles_csv(path: impl AsRef<Path>, summaries: &[RunSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["algorithm", "percent", "tau"])?;
    for s in summaries {
        for q in &s.quantiles {
            w.write_record([s.algorithm.clone(), q.percent.to_string(), q.tau.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct OutputPaths {
    pub runs_csv: Option<PathBuf>,
    pub summary_json: Option<PathBuf>,
    pub quantiles_csv: Option<PathBuf>,
}

/// Writes whichever outputs have a path.
pub fn emit_outputs(summaries: &[RunSummary], rows: &[RunRow], paths: &OutputPaths) -> Result<()> {
    if let Some(p) = &paths.runs_csv {
        write_runs_csv(p, rows)?;
    }
    if let Some(p) = &paths.summary_json {
        write_summary_json(p, summaries)?;
    }
    if let Some(p) = &paths.quantiles_csv {
        write_quantiles_csv(p, summaries)?;
    }
    Ok(())
}
