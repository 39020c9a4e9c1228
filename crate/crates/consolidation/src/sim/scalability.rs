//! Scalability sweep: times the greedy consolidation across scaled copies
//! of the replication system.
//!
//! Each (f_pm, f_app) combination builds its own seeded inventory; per-app
//! demand scales with the fleet-to-app ratio (growing the fleet raises
//! demand, adding apps splits it). Rows report the per-decision mean wall
//! time and the run's ORD.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::replication::{replication_problem, replication_traces, ReplicationConfig};
use super::{run_sim, SimConfig, SimError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchConfig {
    #[serde(default)]
    pub replication: ReplicationConfig,
    /// Simulated periods per row (truncates the generated traces).
    #[serde(default = "default_periods")]
    pub periods: usize,
    /// Worker threads for independent rows.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Fleet scale factors to sweep.
    #[serde(default = "default_factors")]
    pub f_pm: Vec<u32>,
    /// Application scale factors to sweep.
    #[serde(default = "default_factors")]
    pub f_app: Vec<u32>,
}

fn default_periods() -> usize {
    96
}

fn default_jobs() -> usize {
    1
}

fn default_factors() -> Vec<u32> {
    vec![1]
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            replication: ReplicationConfig::default(),
            periods: default_periods(),
            jobs: default_jobs(),
            f_pm: default_factors(),
            f_app: default_factors(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.replication.validate()?;
        if self.periods == 0 || self.periods > self.replication.num_periods() {
            return Err(SimError::Config(format!(
                "periods must lie in 1..={}",
                self.replication.num_periods()
            )));
        }
        if self.jobs == 0 {
            return Err(SimError::Config("jobs must be at least 1".into()));
        }
        if self.f_pm.is_empty() || self.f_app.is_empty() {
            return Err(SimError::Config("factor lists must be non-empty".into()));
        }
        if self.f_pm.iter().chain(&self.f_app).any(|f| *f == 0) {
            return Err(SimError::Config("scale factors must be at least 1".into()));
        }
        Ok(())
    }
}

/// One sweep row: system size, mean decision time, accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub p: usize,
    pub a: usize,
    pub mean_time_ms: f64,
    pub ord: f64,
}

fn run_row(cfg: &BenchConfig, f_pm: u32, f_app: u32) -> Result<ScaleRow, SimError> {
    let rep = ReplicationConfig { f_pm, f_app, ..cfg.replication };
    let problem = replication_problem(&rep)?;
    let mut traces = replication_traces(&problem, &rep)?;
    for t in &mut traces {
        t.demands.truncate(cfg.periods);
    }
    let sim = SimConfig { f_pm, f_app, ..SimConfig::default() };
    let out = run_sim(&problem, &traces, &sim)?;
    Ok(ScaleRow {
        p: problem.num_pms(),
        a: problem.num_apps(),
        mean_time_ms: out.metrics.mean_time_ms(),
        ord: out.metrics.ord,
    })
}

/// Runs the cross product of the factor lists (f_pm outer) and returns the
/// rows in that order. Rows are independent; with `jobs > 1` they execute
/// on worker threads and are merged back into input order.
pub fn run_scalability(cfg: &BenchConfig) -> Result<Vec<ScaleRow>, SimError> {
    cfg.validate()?;
    let combos: Vec<(u32, u32)> = cfg
        .f_pm
        .iter()
        .flat_map(|fp| cfg.f_app.iter().map(move |fa| (*fp, *fa)))
        .collect();

    if cfg.jobs == 1 || combos.len() == 1 {
        let mut rows = Vec::with_capacity(combos.len());
        for (fp, fa) in combos {
            rows.push(run_row(cfg, fp, fa)?);
        }
        return Ok(rows);
    }

    let next = AtomicUsize::new(0);
    let collected: Mutex<Vec<(usize, Result<ScaleRow, SimError>)>> =
        Mutex::new(Vec::with_capacity(combos.len()));
    std::thread::scope(|scope| {
        for _ in 0..cfg.jobs.min(combos.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= combos.len() {
                    break;
                }
                let (fp, fa) = combos[idx];
                let row = run_row(cfg, fp, fa);
                collected.lock().expect("workers do not panic with the lock").push((idx, row));
            });
        }
    });
    let mut collected = collected.into_inner().expect("workers finished");
    collected.sort_by_key(|(idx, _)| *idx);
    let mut rows = Vec::with_capacity(collected.len());
    for (_, row) in collected {
        rows.push(row?);
    }
    Ok(rows)
}
