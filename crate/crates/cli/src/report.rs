//! Result rows and their CSV / JSON-lines encodings.

use std::io::Write;

use anyhow::Result;
use qutel_core::protocol::AttemptStats;
use serde::Serialize;

/// One aggregated batch. Field order is the column order of the CSV
/// output: dim, b0_squared, p_success_analytic, p_success_empirical,
/// trials, mean_attempts, min_fidelity_success, min_fidelity_recovery,
/// wall_time_ms. Optional fields serialize as empty CSV cells / JSON null.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub dim: usize,
    pub b0_squared: f64,
    pub p_success_analytic: f64,
    pub p_success_empirical: f64,
    pub trials: u64,
    pub mean_attempts: Option<f64>,
    pub min_fidelity_success: Option<f64>,
    pub min_fidelity_recovery: Option<f64>,
    pub wall_time_ms: Option<u64>,
}

impl ResultRow {
    pub fn new(
        dim: usize,
        b0_squared: f64,
        analytic: f64,
        trials: u64,
        stats: &AttemptStats,
        wall_time_ms: Option<u64>,
    ) -> Self {
        ResultRow {
            dim,
            b0_squared,
            p_success_analytic: analytic.clamp(0.0, 1.0),
            p_success_empirical: stats.empirical_success_rate(),
            trials,
            mean_attempts: stats.mean_attempts_to_success(),
            min_fidelity_success: stats.min_fidelity_success(),
            min_fidelity_recovery: stats.min_fidelity_recovery(),
            wall_time_ms,
        }
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(rows: &[ResultRow], mut sink: W) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut sink, row)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}
