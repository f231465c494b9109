//! Small-data stability sweep over perturbation amplitudes.

use rayon::prelude::*;

use crate::coupler::{Coupler, RunError};
use crate::error::SolverError;
use crate::experiments::config::{InitialKind, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum SweepStatus {
    Ok,
    Failed { t: f64, error: SolverError },
}

impl SweepStatus {
    pub fn label(&self) -> String {
        match self {
            SweepStatus::Ok => "ok".into(),
            SweepStatus::Failed { t, error } => format!("failed at t = {t}: {error}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    /// `sup_t F_sur` over the emitted records (up to the failure, if any).
    pub sup_f: f64,
    /// `|E_total(end) - E_total(0)|`.
    pub energy_drift: f64,
    /// Largest `max |div u|` over the emitted records.
    pub div_max: f64,
    pub status: SweepStatus,
}

impl SweepRow {
    /// `sup F_sur / δ`, undefined for `δ = 0`.
    pub fn normalized(&self) -> Option<f64> {
        (self.delta > 0.0).then(|| self.sup_f / self.delta)
    }
}

fn summarize(delta: f64, records: &[crate::norms::DiagnosticsRecord<f64>], status: SweepStatus) -> SweepRow {
    let sup_f = records.iter().map(|r| r.f_sur).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let energy_drift = match (records.first(), records.last()) {
        (Some(a), Some(b)) => (b.e_total - a.e_total).abs(),
        _ => 0.0,
    };
    let div_max = records.iter().map(|r| r.div_max).fold(0.0, f64::max);
    SweepRow { delta, sup_f, energy_drift, div_max, status }
}

/// Runs `base` once per amplitude (in parallel). Failures become rows.
pub fn stability_sweep(base: &RunConfig, deltas: &[f64]) -> Result<Vec<SweepRow>, SolverError> {
    let coupler = Coupler::new(base.grid, base.viscosity, base.director_bc, base.coupler)?;
    Ok(deltas
        .par_iter()
        .map(|&delta| {
            let mut cfg = base.clone();
            cfg.initial.kind = InitialKind::Perturbation;
            cfg.initial.perturbation.delta = delta;
            match coupler.run(&cfg.initial_state()) {
                Ok(out) => summarize(delta, &out.records, SweepStatus::Ok),
                Err(RunError { t, records, source, .. }) => {
                    summarize(delta, &records, SweepStatus::Failed { t, error: source })
                }
            }
        })
        .collect())
}
