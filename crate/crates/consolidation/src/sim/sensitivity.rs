//! Request-level sensitivity experiment: how detector-estimated workloads
//! degrade consolidation accuracy and how often they trigger changes.
//!
//! Per-app request rates are redrawn for each combination and held for a
//! fixed stretch of seconds. In detector mode every arrival updates that
//! app's detector; each accepted estimate change (after all apps have
//! initial estimates) triggers one consolidation with the current estimate
//! vector. Oracle mode consolidates once per combination with the true
//! rates. Accuracy is sampled at 1 Hz against the true rates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::replication::{replication_problem, ReplicationConfig};
use super::SimError;
use crate::heuristic::three_max_with_demands;
use crate::model::{ConsolidationProblem, DeploymentPlan};
use crate::workload::{
    exponential_sample, DetectorConfig, DetectorState, DetectorTest, EstimateUpdate,
};

/// Fraction of each app's provisioning target the random rates span.
const RATE_SPAN: (f64, f64) = (0.25, 0.85);

const RATE_SEED_SALT: u64 = 0x7261_7465;
const ARRIVAL_SEED_SALT: u64 = 0x6172_7276;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConfig {
    #[serde(default)]
    pub replication: ReplicationConfig,
    #[serde(default = "default_combinations")]
    pub combinations: usize,
    #[serde(default = "default_combo_seconds")]
    pub seconds_per_combination: u64,
    /// Unset runs the ground-truth oracle.
    #[serde(default)]
    pub detector: Option<DetectorConfig>,
    #[serde(default)]
    pub seed: u64,
}

fn default_combinations() -> usize {
    20
}

fn default_combo_seconds() -> u64 {
    100
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            replication: ReplicationConfig::default(),
            combinations: default_combinations(),
            seconds_per_combination: default_combo_seconds(),
            detector: None,
            seed: 0,
        }
    }
}

impl SensitivityConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.replication.validate()?;
        if self.combinations == 0 {
            return Err(SimError::Config("combinations must be at least 1".into()));
        }
        if self.seconds_per_combination == 0 {
            return Err(SimError::Config("seconds_per_combination must be positive".into()));
        }
        Ok(())
    }
}

/// One sensitivity run's outcome. `detector` is `chi2`, `f`, or `oracle`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityMetrics {
    pub detector: String,
    /// Mean over apps of mean_t |estimated - true| / true; absent in
    /// oracle mode.
    pub detector_ord: Option<f64>,
    /// Mean over apps of mean_t |provided - true| / true.
    pub consolidation_ord: f64,
    /// Evaluated-workload changes (accepted estimate changes after
    /// initialization; true rate switches in oracle mode).
    pub count_e: u64,
    /// Triggered consolidations that changed the placement multiset.
    pub count_t: u64,
    /// Triggered consolidations that left it unchanged.
    pub count_cnt: u64,
}

fn draw_rates(
    problem: &ConsolidationProblem,
    combinations: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ RATE_SEED_SALT);
    (0..combinations)
        .map(|_| {
            problem
                .applications
                .iter()
                .map(|app| {
                    let u: f64 = rng.gen();
                    (RATE_SPAN.0 + (RATE_SPAN.1 - RATE_SPAN.0) * u) * app.required_throughput
                })
                .collect()
        })
        .collect()
}

pub fn run_sensitivity(cfg: &SensitivityConfig) -> Result<SensitivityMetrics, SimError> {
    cfg.validate()?;
    let problem = replication_problem(&cfg.replication)?;
    let rates = draw_rates(&problem, cfg.combinations, cfg.seed);
    match cfg.detector {
        None => run_oracle(&problem, &rates),
        Some(dc) => run_detector(&problem, &rates, dc, cfg),
    }
}

fn run_oracle(
    problem: &ConsolidationProblem,
    rates: &[Vec<f64>],
) -> Result<SensitivityMetrics, SimError> {
    let a = problem.num_apps();
    let mut count_e = 0;
    let mut count_t = 0;
    let mut count_cnt = 0;
    let mut abs_rd = vec![0.0; a];
    let mut prev: Option<DeploymentPlan> = None;
    for (c, combo) in rates.iter().enumerate() {
        let plan = three_max_with_demands(problem, combo).plan;
        for (i, app) in problem.applications.iter().enumerate() {
            let provided = plan.provided.get(&app.id).copied().unwrap_or(0.0);
            abs_rd[i] += ((provided - combo[i]) / combo[i]).abs();
        }
        if let Some(prev_plan) = &prev {
            if rates[c] != rates[c - 1] {
                count_e += 1;
            }
            if prev_plan.placements != plan.placements {
                count_t += 1;
            } else {
                count_cnt += 1;
            }
        }
        prev = Some(plan);
    }
    let consolidation_ord =
        abs_rd.iter().map(|s| s / rates.len() as f64).sum::<f64>() / a as f64;
    Ok(SensitivityMetrics {
        detector: "oracle".into(),
        detector_ord: None,
        consolidation_ord,
        count_e,
        count_t,
        count_cnt,
    })
}

fn run_detector(
    problem: &ConsolidationProblem,
    rates: &[Vec<f64>],
    dc: DetectorConfig,
    cfg: &SensitivityConfig,
) -> Result<SensitivityMetrics, SimError> {
    let a = problem.num_apps();
    let combo_secs = cfg.seconds_per_combination as f64;
    let total = rates.len() as f64 * combo_secs;
    let rate_at = |t: f64, i: usize| -> f64 {
        let c = ((t / combo_secs) as usize).min(rates.len() - 1);
        rates[c][i]
    };

    let mut detectors = Vec::with_capacity(a);
    let mut rngs = Vec::with_capacity(a);
    for i in 0..a {
        detectors.push(DetectorState::new(dc)?);
        rngs.push(ChaCha8Rng::seed_from_u64(
            cfg.seed ^ ARRIVAL_SEED_SALT ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ));
    }
    // Next pending arrival per app: the drawn inter-arrival and its
    // absolute time.
    let mut pending: Vec<(f64, f64)> = (0..a)
        .map(|i| {
            let x = exponential_sample(&mut rngs[i], rate_at(0.0, i));
            (x, x)
        })
        .collect();

    let mut estimates: Vec<Option<f64>> = vec![None; a];
    let mut plan: Option<DeploymentPlan> = None;
    let mut count_e = 0u64;
    let mut count_t = 0u64;
    let mut count_cnt = 0u64;
    let mut det_acc = vec![(0.0f64, 0u64); a];
    let mut cons_acc = vec![(0.0f64, 0u64); a];
    // Sampling at interval midpoints sidesteps boundary ambiguity.
    let mut next_sample = 0.5f64;

    let mut flush_samples = |until: f64,
                             next_sample: &mut f64,
                             estimates: &[Option<f64>],
                             plan: &Option<DeploymentPlan>| {
        while *next_sample < until {
            for (i, app) in problem.applications.iter().enumerate() {
                let lambda = rate_at(*next_sample, i);
                if let Some(est) = estimates[i] {
                    det_acc[i].0 += (est - lambda).abs() / lambda;
                    det_acc[i].1 += 1;
                }
                if let Some(p) = plan {
                    let provided = p.provided.get(&app.id).copied().unwrap_or(0.0);
                    cons_acc[i].0 += (provided - lambda).abs() / lambda;
                    cons_acc[i].1 += 1;
                }
            }
            *next_sample += 1.0;
        }
    };

    loop {
        let mut i = 0;
        for j in 1..a {
            if pending[j].1 < pending[i].1 {
                i = j;
            }
        }
        let (x, t) = pending[i];
        flush_samples(t.min(total), &mut next_sample, &estimates, &plan);
        if t >= total {
            break;
        }

        match detectors[i].update_estimate(x) {
            EstimateUpdate::Initial(lambda) => {
                estimates[i] = Some(lambda);
                if plan.is_none() && estimates.iter().all(|e| e.is_some()) {
                    let demands: Vec<f64> = estimates.iter().map(|e| e.unwrap()).collect();
                    plan = Some(three_max_with_demands(problem, &demands).plan);
                }
            }
            EstimateUpdate::Changed(lambda) => {
                estimates[i] = Some(lambda);
                if let Some(current) = &plan {
                    count_e += 1;
                    let demands: Vec<f64> = estimates.iter().map(|e| e.unwrap()).collect();
                    let next_plan = three_max_with_demands(problem, &demands).plan;
                    if next_plan.placements != current.placements {
                        count_t += 1;
                    } else {
                        count_cnt += 1;
                    }
                    plan = Some(next_plan);
                }
            }
            EstimateUpdate::NotReady | EstimateUpdate::Unchanged => {}
        }

        let x = exponential_sample(&mut rngs[i], rate_at(t, i));
        pending[i] = (x, t + x);
    }
    flush_samples(total, &mut next_sample, &estimates, &plan);

    let mean_of = |acc: &[(f64, u64)]| -> f64 {
        let mut total = 0.0;
        let mut apps = 0u64;
        for (sum, n) in acc {
            if *n > 0 {
                total += sum / *n as f64;
                apps += 1;
            }
        }
        if apps == 0 {
            0.0
        } else {
            total / apps as f64
        }
    };

    Ok(SensitivityMetrics {
        detector: match dc.test {
            DetectorTest::Chi2 => "chi2".into(),
            DetectorTest::F => "f".into(),
        },
        detector_ord: Some(mean_of(&det_acc)),
        consolidation_ord: mean_of(&cons_acc),
        count_e,
        count_t,
        count_cnt,
    })
}
