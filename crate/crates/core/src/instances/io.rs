//! CSV + JSON sidecar persistence for instances.
//!
//! `<name>.csv` holds `arm_id,f1,...,fN[,mu]` with one row per arm;
//! `<name>.json` holds `sigma`, optional `theta`, `reward_law`, optional
//! `param_bound`, optional `dim` and an optional `reward_table` path (relative
//! to the sidecar) pointing at a long-format `arm_id,reward` CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Instance, RewardLaw};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum LawTag {
    GaussianLinear,
    EmpiricalTable,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<f64>>,
    #[serde(default = "default_law")]
    reward_law: LawTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    param_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reward_table: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

fn default_law() -> LawTag {
    LawTag::GaussianLinear
}

/// Strips a `.csv`/`.json` extension if present.
fn base_path(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// 17 significant digits.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let base = base_path(path.as_ref());
    let csv_path = with_suffix(&base, ".csv");
    let json_path = with_suffix(&base, ".json");

    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(|e| Error::parse(&csv_path, e.to_string()))?;
    let mut header = vec!["arm_id".to_string()];
    header.extend((1..=instance.dim()).map(|k| format!("f{k}")));
    header.push("mu".into());
    w.write_record(&header)?;
    for (a, x) in instance.features().iter().enumerate() {
        let mut row = vec![a.to_string()];
        row.extend(x.iter().map(|&v| fmt_f64(v)));
        row.push(fmt_f64(instance.means()[a]));
        w.write_record(&row)?;
    }
    w.flush()?;

    let (law, table_ref) = match instance.reward_law() {
        RewardLaw::GaussianLinear => (LawTag::GaussianLinear, None),
        RewardLaw::EmpiricalTable(table) => {
            let table_path = with_suffix(&base, ".rewards.csv");
            let mut tw = csv::Writer::from_path(&table_path)?;
            tw.write_record(["arm_id", "reward"])?;
            for (a, rows) in table.iter().enumerate() {
                for &r in rows {
                    tw.write_record([a.to_string(), fmt_f64(r)])?;
                }
            }
            tw.flush()?;
            let name = table_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            (LawTag::EmpiricalTable, Some(name))
        }
    };

    let sidecar = Sidecar {
        sigma: instance.sigma(),
        theta: instance.theta().map(<[f64]>::to_vec),
        reward_law: law,
        param_bound: instance.param_bound(),
        reward_table: table_ref,
        dim: Some(instance.dim()),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn parse_num(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(path, format!("line {line}: cannot parse {field:?} as a number")))
}

fn read_reward_table(path: &Path, arms: usize) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "arm_id" || &headers[1] != "reward" {
        return Err(Error::parse(path, "expected header `arm_id,reward`"));
    }
    let mut table = vec![Vec::new(); arms];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != 2 {
            return Err(Error::parse(path, format!("line {line}: expected 2 fields")));
        }
        let arm: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, format!("line {line}: bad arm id")))?;
        if arm >= arms {
            return Err(Error::parse(path, format!("line {line}: arm {arm} out of range")));
        }
        table[arm].push(parse_num(path, line, &rec[1])?);
    }
    Ok(table)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let base = base_path(path.as_ref());
    let csv_path = with_suffix(&base, ".csv");
    let json_path = with_suffix(&base, ".json");

    let text = fs::read_to_string(&json_path).map_err(|e| Error::parse(&json_path, e.to_string()))?;
    let sidecar: Sidecar = serde_json::from_str(&text)
        .map_err(|e| Error::parse(&json_path, e.to_string()))?;

    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(&csv_path)?;
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || &headers[0] != "arm_id" {
        return Err(Error::parse(&csv_path, "header must start with `arm_id`"));
    }
    let has_mu = &headers[headers.len() - 1] == "mu";
    let dim = headers.len() - 1 - usize::from(has_mu);
    if dim == 0 {
        return Err(Error::parse(&csv_path, "no feature columns"));
    }
    for k in 0..dim {
        if headers[k + 1] != *format!("f{}", k + 1) {
            return Err(Error::parse(
                &csv_path,
                format!("column {} should be `f{}`, found `{}`", k + 2, k + 1, &headers[k + 1]),
            ));
        }
    }
    if let Some(declared) = sidecar.dim {
        if declared != dim {
            return Err(Error::parse(
                &csv_path,
                format!("{dim} feature columns but dimension {declared} declared"),
            ));
        }
    }

    let mut features = Vec::new();
    let mut mus = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != headers.len() {
            return Err(Error::parse(
                &csv_path,
                format!("line {line}: {} fields, expected {}", rec.len(), headers.len()),
            ));
        }
        let id: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(&csv_path, format!("line {line}: bad arm id")))?;
        if id != k {
            return Err(Error::parse(
                &csv_path,
                format!("line {line}: arm ids must be 0..K in order, found {id}"),
            ));
        }
        let x = (1..=dim)
            .map(|c| parse_num(&csv_path, line, &rec[c]))
            .collect::<Result<Vec<_>>>()?;
        features.push(x);
        if has_mu {
            mus.push(parse_num(&csv_path, line, &rec[dim + 1])?);
        }
    }

    let table = match (sidecar.reward_law, &sidecar.reward_table) {
        (LawTag::EmpiricalTable, Some(rel)) => {
            let dir = json_path.parent().unwrap_or_else(|| Path::new("."));
            Some(read_reward_table(&dir.join(rel), features.len())?)
        }
        (LawTag::EmpiricalTable, None) => {
            return Err(Error::parse(
                &json_path,
                "empirical-table law requires a `reward_table` path",
            ))
        }
        (LawTag::GaussianLinear, _) => None,
    };

    let mut instance = match (&sidecar.theta, has_mu, table) {
        (Some(theta), _, table) => {
            if theta.len() != dim {
                return Err(Error::parse(
                    &json_path,
                    format!("theta has length {} but {dim} feature columns", theta.len()),
                ));
            }
            let inst = Instance::linear(features, theta.clone(), sidecar.sigma)?;
            if has_mu {
                for (a, (&stored, &implied)) in mus.iter().zip(inst.means()).enumerate() {
                    let scale = stored.abs().max(implied.abs()).max(1.0);
                    if (stored - implied).abs() > 1e-9 * scale {
                        return Err(Error::parse(
                            &csv_path,
                            format!("mu of arm {a} disagrees with theta"),
                        ));
                    }
                }
            }
            match table {
                Some(t) => inst.with_reward_table(t)?,
                None => inst,
            }
        }
        (None, true, table) => {
            let inst = Instance::with_means(features, mus, sidecar.sigma)?;
            match table {
                Some(t) => inst.with_reward_table(t)?,
                None => inst,
            }
        }
        (None, false, Some(t)) => Instance::from_reward_table(features, t, sidecar.sigma)?,
        (None, false, None) => {
            return Err(Error::parse(&csv_path, "neither theta nor a mu column is given"))
        }
    };
    if let Some(s) = sidecar.param_bound {
        instance = instance.with_param_bound(s)?;
    }
    Ok(instance)
}
