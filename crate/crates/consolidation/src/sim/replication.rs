//! Synthetic replication system: a small heterogeneous fleet, the full
//! VM type grid, seeded performance profiles, and diurnal demand traces.
//!
//! The fleet has three PM classes (ten machines each at scale 1): two
//! eight-core/8 GB classes with different per-core speed and one
//! four-core/4 GB class, all with 2000 Mbps of network. VM types span
//! 1-4 VCPUs, 1-4 x 512 MB and 1-5 x 200 Mbps (80 types). Applications are
//! network-bound: a VM's throughput scales with its NIC share, topping out
//! at a per-app base rate that varies by PM class. Demand traces follow a
//! noisy day-night sine with mild day-over-day growth, scaled so each
//! app's peak equals its provisioning target.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::model::{
    Application, ConsolidationProblem, PerformanceProfile, PhysicalMachine, ResourceType,
    ResourceVector, VmType,
};
use crate::workload::{max_throughput_target, TraceSeries};

/// (cpu cores, memory MB, network Mbps, per-class throughput multiplier).
const PM_CLASSES: [(f64, f64, f64, f64); 3] = [
    (8.0, 8192.0, 2000.0, 1.0),
    (8.0, 8192.0, 2000.0, 0.85),
    (4.0, 4096.0, 2000.0, 0.6),
];

/// Base per-VM request rate range, requests/second at full NIC share on
/// the fastest class.
const BASE_RATE_RANGE: (f64, f64) = (180.0, 320.0);

const TRACE_SEED_SALT: u64 = 0x7261_6365; // distinct stream from the profile

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationConfig {
    /// Unscaled application count.
    #[serde(default = "default_apps")]
    pub apps: usize,
    /// PMs per class before scaling.
    #[serde(default = "default_pms_per_class")]
    pub pms_per_class: usize,
    #[serde(default = "default_days")]
    pub days: usize,
    #[serde(default = "default_periods_per_day")]
    pub periods_per_day: usize,
    /// Fleet scale: every class is replicated this many times over.
    #[serde(default = "default_factor")]
    pub f_pm: u32,
    /// Application scale; per-app demand shrinks by the same factor.
    #[serde(default = "default_factor")]
    pub f_app: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_apps() -> usize {
    5
}

fn default_pms_per_class() -> usize {
    10
}

fn default_days() -> usize {
    5
}

fn default_periods_per_day() -> usize {
    96
}

fn default_factor() -> u32 {
    1
}

impl Default for ReplicationConfig {
    fn default() -> Self {
        ReplicationConfig {
            apps: default_apps(),
            pms_per_class: default_pms_per_class(),
            days: default_days(),
            periods_per_day: default_periods_per_day(),
            f_pm: 1,
            f_app: 1,
            seed: 0,
        }
    }
}

impl ReplicationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.apps == 0 || self.pms_per_class == 0 {
            return Err(SimError::Config("apps and pms_per_class must be positive".into()));
        }
        if self.days == 0 || self.periods_per_day == 0 {
            return Err(SimError::Config("days and periods_per_day must be positive".into()));
        }
        if self.f_pm == 0 || self.f_app == 0 {
            return Err(SimError::Config("scale factors must be at least 1".into()));
        }
        Ok(())
    }

    pub fn num_apps(&self) -> usize {
        self.apps * self.f_app as usize
    }

    pub fn num_pms(&self) -> usize {
        PM_CLASSES.len() * self.pms_per_class * self.f_pm as usize
    }

    pub fn num_periods(&self) -> usize {
        self.days * self.periods_per_day
    }
}

/// Builds the seeded replication problem. Demands are set to each app's
/// provisioning target (the trace peak).
pub fn replication_problem(cfg: &ReplicationConfig) -> Result<ConsolidationProblem, SimError> {
    cfg.validate()?;
    let a = cfg.num_apps();
    let per_class = cfg.pms_per_class * cfg.f_pm as usize;
    let p = cfg.num_pms();

    let resources = vec![
        ResourceType { name: "cpu".into(), unit: "cores".into() },
        ResourceType { name: "memory".into(), unit: "MB".into() },
        ResourceType { name: "network".into(), unit: "Mbps".into() },
    ];

    let mut pms = Vec::with_capacity(p);
    for (class, (cpu, mem, nic, _)) in PM_CLASSES.iter().enumerate() {
        for n in 0..per_class {
            pms.push(PhysicalMachine {
                id: format!("pm-{:04}", class * per_class + n),
                capacity: ResourceVector(vec![*cpu, *mem, *nic]),
            });
        }
    }

    let mut vm_types = Vec::with_capacity(80);
    for cpu in 1..=4u32 {
        for mem in 1..=4u32 {
            for nic in 1..=5u32 {
                vm_types.push(VmType {
                    id: format!("vm-{cpu}c{mem}m{nic}n"),
                    config: ResourceVector(vec![
                        cpu as f64,
                        512.0 * mem as f64,
                        200.0 * nic as f64,
                    ]),
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bases: Vec<f64> = (0..a)
        .map(|_| BASE_RATE_RANGE.0 + (BASE_RATE_RANGE.1 - BASE_RATE_RANGE.0) * rng.gen::<f64>())
        .collect();

    let entries: Vec<Vec<Vec<f64>>> = (0..a)
        .map(|i| {
            (0..p)
                .map(|k| {
                    let mult = PM_CLASSES[k / per_class].3;
                    vm_types
                        .iter()
                        .map(|vm| bases[i] * mult * (vm.config.get(2) / 1000.0))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut problem = ConsolidationProblem {
        resources,
        applications: (0..a)
            .map(|i| Application { id: format!("app-{i:03}"), required_throughput: 0.0 })
            .collect(),
        pms,
        vm_types,
        profile: PerformanceProfile { entries },
    };
    for i in 0..a {
        problem.applications[i].required_throughput =
            max_throughput_target(&problem, i) / cfg.f_app as f64;
    }
    Ok(problem)
}

/// Generates one diurnal trace per application, scaled so each peak equals
/// the app's stored demand. Interval length is fixed at 900 seconds.
pub fn replication_traces(
    problem: &ConsolidationProblem,
    cfg: &ReplicationConfig,
) -> Result<Vec<TraceSeries>, SimError> {
    cfg.validate()?;
    let periods = cfg.num_periods();
    let ppd = cfg.periods_per_day as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ TRACE_SEED_SALT);
    let a = problem.num_apps();

    let mut out = Vec::with_capacity(a);
    for (i, app) in problem.applications.iter().enumerate() {
        let phase = 2.0 * std::f64::consts::PI * i as f64 / a as f64;
        let mut shape = Vec::with_capacity(periods);
        for t in 0..periods {
            let day = (t / cfg.periods_per_day) as f64;
            let pos = (t % cfg.periods_per_day) as f64 / ppd;
            let diurnal = 0.75 + 0.25 * (2.0 * std::f64::consts::PI * pos + phase).sin();
            let growth = 1.0 + 0.02 * day;
            let jitter = 0.02 * (2.0 * rng.gen::<f64>() - 1.0);
            shape.push(diurnal * growth + jitter);
        }
        let max = shape.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let factor = app.required_throughput / max;
        out.push(TraceSeries {
            app: app.id.clone(),
            interval_seconds: 900,
            demands: shape.into_iter().map(|s| s * factor).collect(),
        });
    }
    Ok(out)
}
