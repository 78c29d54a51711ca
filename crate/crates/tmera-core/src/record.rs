//! Deterministic artifact emission: records CSV, histogram CSV, sweep CSV,
//! serialized states, and run metadata.
//!
//! Every writer here is byte-deterministic for identical inputs: a fixed
//! column set, a header row always present, floats printed with 17
//! significant digits, and no wall-clock or hostname data in the CSV files
//! (timing lives only in `meta.json`, which is explicitly non-deterministic
//! provenance).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::costmodel::{classical_cost, quantum_cost_qae, quantum_cost_sampling};
use crate::error::{Error, Result};
use crate::network::TMeraState;
use crate::schemes::{Histogram, RunRecord};

/// Column set of `records.csv`, in order. The accuracy and cost columns are
/// empty when no reference energy exists for the model.
pub const RECORDS_CSV_COLUMNS: &[&str] = &[
    "seed",
    "scheme",
    "model",
    "n_sites",
    "layers",
    "q",
    "q0",
    "trotter_steps",
    "layout",
    "parametrization",
    "kappa",
    "energy",
    "accuracy",
    "iterations",
    "average_abs_angle",
    "converged",
    "stalled",
    "cost_classical",
    "cost_quantum_sampling",
    "cost_quantum_qae",
    "cost_quantum_qae_caption",
];

/// One run flattened for CSV emission, with the cost-model columns attached.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub record: RunRecord,
    pub cost_classical: f64,
    /// Quantum costs need a target accuracy eps = e - e_gs; absent without a
    /// reference energy or when the run beat the reference.
    pub cost_quantum_sampling: Option<f64>,
    pub cost_quantum_qae: Option<f64>,
    pub cost_quantum_qae_caption: Option<f64>,
}

impl ResultRow {
    /// Attaches cost columns: classical chi^7 (modified binary), quantum
    /// costs at eps = accuracy when a positive accuracy is available.
    pub fn from_record(record: RunRecord) -> Result<ResultRow> {
        let c = &record.config;
        let cost_classical = classical_cost(c.chi(), 7)?;
        let eps = record.accuracy.filter(|&a| a > 0.0 && a < 1.0);
        let (sampling, qae, caption) = match eps {
            Some(eps) => {
                let s = quantum_cost_sampling(c.q, c.trotter_steps, c.layers, eps)?;
                let a = quantum_cost_qae(c.q, c.trotter_steps, c.layers, eps)?;
                (Some(s), Some(a.full), Some(a.caption_metric))
            }
            None => (None, None, None),
        };
        Ok(ResultRow {
            record,
            cost_classical,
            cost_quantum_sampling: sampling,
            cost_quantum_qae: qae,
            cost_quantum_qae_caption: caption,
        })
    }
}

/// 17 significant digits; round-trips any f64 exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

/// Kebab-case label of a serde-serializable unit enum value.
fn enum_label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => panic!("expected a string-serializable enum, got {other:?}"),
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

/// Writes `records.csv`. Negative accuracies indicate an energy below the
/// thermodynamic reference and are rejected as a bug.
pub fn write_records_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    for row in rows {
        if let Some(a) = row.record.accuracy {
            if a < -1e-9 {
                return Err(Error::Numerical(format!(
                    "seed {}: accuracy {a} is negative — energy below the reference bound",
                    row.record.seed
                )));
            }
        }
    }
    let mut out = csv_line(&RECORDS_CSV_COLUMNS.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for row in rows {
        let r = &row.record;
        let c = &r.config;
        out.push_str(&csv_line(&[
            r.seed.to_string(),
            r.scheme.clone(),
            r.model.clone(),
            c.n_sites.to_string(),
            c.layers.to_string(),
            c.q.to_string(),
            c.q0.to_string(),
            c.trotter_steps.to_string(),
            enum_label(&c.layout),
            enum_label(&c.parametrization),
            format_f64(r.kappa),
            format_f64(r.energy),
            format_opt(r.accuracy),
            r.iterations.to_string(),
            format_opt(r.average_abs_angle),
            r.converged.to_string(),
            r.stalled.to_string(),
            format_f64(row.cost_classical),
            format_opt(row.cost_quantum_sampling),
            format_opt(row.cost_quantum_qae),
            format_opt(row.cost_quantum_qae_caption),
        ]));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes `histogram.csv` with one row per bin: `bin_lo,bin_hi,count`.
pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    let mut out = csv_line(&["bin_lo".into(), "bin_hi".into(), "count".into()]);
    for (k, &count) in h.counts.iter().enumerate() {
        out.push_str(&csv_line(&[
            format_f64(h.edges[k]),
            format_f64(h.edges[k + 1]),
            count.to_string(),
        ]));
    }
    fs::write(path, out)?;
    Ok(())
}

/// One cell of an accuracy-versus-cost sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub trotter_steps: usize,
    pub q: usize,
    pub layers: usize,
    pub chi: usize,
    pub energy: f64,
    pub accuracy: Option<f64>,
    pub cost_classical: f64,
    pub cost_quantum_sampling: Option<f64>,
    pub cost_quantum_qae: Option<f64>,
    pub cost_quantum_qae_caption: Option<f64>,
}

pub const SWEEP_CSV_COLUMNS: &[&str] = &[
    "trotter_steps",
    "q",
    "layers",
    "chi",
    "energy",
    "accuracy",
    "cost_classical",
    "cost_quantum_sampling",
    "cost_quantum_qae",
    "cost_quantum_qae_caption",
];

/// Writes `sweep.csv`, sorted by classical cost ascending (ties broken by
/// the structural columns so the order is total).
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.cost_classical
            .total_cmp(&b.cost_classical)
            .then(a.trotter_steps.cmp(&b.trotter_steps))
            .then(a.q.cmp(&b.q))
            .then(a.layers.cmp(&b.layers))
    });
    let mut out = csv_line(&SWEEP_CSV_COLUMNS.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for r in sorted {
        out.push_str(&csv_line(&[
            r.trotter_steps.to_string(),
            r.q.to_string(),
            r.layers.to_string(),
            r.chi.to_string(),
            format_f64(r.energy),
            format_opt(r.accuracy),
            format_f64(r.cost_classical),
            format_opt(r.cost_quantum_sampling),
            format_opt(r.cost_quantum_qae),
            format_opt(r.cost_quantum_qae_caption),
        ]));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Serializes a state to `state.bin` (compact) and back.
pub fn write_state_bin(path: &Path, state: &TMeraState) -> Result<()> {
    let bytes = bincode::serialize(state)
        .map_err(|e| Error::InvalidArgument(format!("state serialization failed: {e}")))?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_state_bin(path: &Path) -> Result<TMeraState> {
    let bytes = fs::read(path)?;
    bincode::deserialize(&bytes)
        .map_err(|e| Error::InvalidArgument(format!("state deserialization failed: {e}")))
}

/// Run provenance. Wall time lives here, not in the CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool_version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub total_wall_time: f64,
}

pub fn write_meta_json(path: &Path, meta: &RunMeta) -> Result<()> {
    let body = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::InvalidArgument(format!("meta serialization failed: {e}")))?;
    fs::write(path, body)?;
    Ok(())
}
