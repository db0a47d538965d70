use serde::Serialize;

use crate::engine::TraceRecord;
use crate::error::{Error, Result};
use crate::instances::Instance;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub t: u64,
    pub i: usize,
    pub j: usize,
    /// `μ_i − μ_j`.
    pub gap: f64,
    /// `B_{i,j}(t)`.
    pub index: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventReport {
    pub rounds: usize,
    pub held: bool,
    pub first_violation: Option<Violation>,
}

/// Checks `μ_i − μ_j ≤ B_{i,j}(t)` for every logged round and ordered pair.
pub fn validate_trace(trace: &[TraceRecord], instance: &Instance, m: usize) -> Result<EventReport> {
    let k = instance.arms();
    let means = instance.means();
    for rec in trace {
        let values = rec.index.as_ref().ok_or(Error::MissingTraceData(rec.t))?;
        if values.len() != k * k {
            return Err(Error::DimensionMismatch {
                expected: k * k,
                actual: values.len(),
            });
        }
        if rec.candidates.len() != m {
            return Err(Error::invalid(format!(
                "round {} logs {} candidates, expected {m}",
                rec.t,
                rec.candidates.len()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let gap = means[i] - means[j];
                let index = values[i * k + j];
                if gap > index {
                    return Ok(EventReport {
                        rounds: trace.len(),
                        held: false,
                        first_violation: Some(Violation { t: rec.t, i, j, gap, index }),
                    });
                }
            }
        }
    }
    Ok(EventReport {
        rounds: trace.len(),
        held: true,
        first_violation: None,
    })
}
