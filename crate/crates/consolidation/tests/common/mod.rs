//! Shared helpers for integration tests: a seeded random instance generator
//! and an exhaustive minimum-PM oracle that is deliberately structured
//! differently from the production solver (PM-subset enumeration plus a
//! complete per-app placement search) so the two can cross-check each other.

use consolidation::model::{
    Application, ConsolidationProblem, DeploymentPlan, PerformanceProfile, PhysicalMachine,
    ResolvedPlacement, ResourceType, ResourceVector, VmType,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct InstanceParams {
    pub max_apps: usize,
    /// PM count range; the low end is additionally raised to
    /// `min_pms_per_app * apps`.
    pub max_pms: usize,
    pub min_pms_per_app: usize,
    pub max_types: usize,
    /// Inclusive integer range for PM capacities per dimension.
    pub capacity_range: (u32, u32),
    /// Inclusive integer range for VM configurations per dimension.
    pub config_range: (u32, u32),
    /// Demands are a witness plan's provided throughput times a factor drawn
    /// uniformly from this range. Below 1.0 the witness itself proves
    /// feasibility; above 1.0 instances may be infeasible.
    pub demand_factor: (f64, f64),
    /// Probability that a single (app, pm, type) throughput entry is zero.
    pub zero_mu_prob: f64,
    /// Guarantee at least one positive-throughput type per (app, pm).
    pub usable_everywhere: bool,
}

impl InstanceParams {
    /// Tiny, tight instances for cross-checking against the exhaustive
    /// oracle. Demands up to 1.5x a witness keep a mix of feasible and
    /// infeasible cases, and apps may be unusable on some PMs entirely.
    pub fn oracle_sized() -> Self {
        InstanceParams {
            max_apps: 3,
            max_pms: 4,
            min_pms_per_app: 0,
            max_types: 3,
            capacity_range: (2, 6),
            config_range: (1, 3),
            demand_factor: (0.5, 1.5),
            zero_mu_prob: 0.15,
            usable_everywhere: false,
        }
    }

    /// An adequately provisioned fleet: at least two PMs per app, several
    /// VM slots per PM, every app usable on every PM, and demands well
    /// below a witness deployment. Models the regime where consolidation
    /// runs with real headroom rather than at the capacity boundary.
    pub fn feasible() -> Self {
        InstanceParams {
            max_apps: 3,
            max_pms: 9,
            min_pms_per_app: 2,
            max_types: 3,
            capacity_range: (4, 8),
            config_range: (1, 2),
            demand_factor: (0.25, 0.6),
            zero_mu_prob: 0.10,
            usable_everywhere: true,
        }
    }
}

/// Generates a random instance. Capacities and VM configurations are small
/// integers so capacity arithmetic in tests is exact; throughputs are
/// continuous. Demands are scaled from a random witness deployment, so with
/// `demand_factor` below 1.0 the instance is feasible by construction.
pub fn gen_instance(seed: u64, params: &InstanceParams) -> ConsolidationProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.gen_range(1..=params.max_apps);
    let pm_floor = (params.min_pms_per_app * a).max(1);
    let p = rng.gen_range(pm_floor..=params.max_pms.max(pm_floor));
    let v = rng.gen_range(1..=params.max_types);
    let r = rng.gen_range(1..=3);
    let (cap_lo, cap_hi) = params.capacity_range;
    let (cfg_lo, cfg_hi) = params.config_range;

    let resources: Vec<ResourceType> = (0..r)
        .map(|j| ResourceType { name: format!("res-{j}"), unit: "units".into() })
        .collect();
    let pms: Vec<PhysicalMachine> = (0..p)
        .map(|k| PhysicalMachine {
            id: format!("pm-{k}"),
            capacity: ResourceVector((0..r).map(|_| rng.gen_range(cap_lo..=cap_hi) as f64).collect()),
        })
        .collect();
    let vm_types: Vec<VmType> = (0..v)
        .map(|l| VmType {
            id: format!("vm-{l}"),
            config: ResourceVector((0..r).map(|_| rng.gen_range(cfg_lo..=cfg_hi) as f64).collect()),
        })
        .collect();
    let mut entries: Vec<Vec<Vec<f64>>> = (0..a)
        .map(|_| {
            (0..p)
                .map(|_| {
                    (0..v)
                        .map(|_| {
                            if rng.gen_bool(params.zero_mu_prob) {
                                0.0
                            } else {
                                rng.gen_range(0.5..8.0)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    if params.usable_everywhere {
        for row in entries.iter_mut() {
            for cell in row.iter_mut() {
                if cell.iter().all(|mu| *mu == 0.0) {
                    let l = rng.gen_range(0..v);
                    cell[l] = rng.gen_range(0.5..8.0);
                }
            }
        }
    }

    let mut problem = ConsolidationProblem {
        resources,
        applications: (0..a)
            .map(|i| Application { id: format!("app-{i}"), required_throughput: 0.0 })
            .collect(),
        pms,
        vm_types,
        profile: PerformanceProfile { entries },
    };

    // Witness deployment: one useful VM per app where possible, plus a few
    // extra random placements, all within capacity.
    let mut residual: Vec<ResourceVector> =
        problem.pms.iter().map(|pm| pm.capacity.clone()).collect();
    let mut witness: Vec<ResolvedPlacement> = Vec::new();
    let mut place = |i: usize, k: usize, l: usize, residual: &mut Vec<ResourceVector>| {
        let config = &problem.vm_types[l].config;
        if config.fits_within(&residual[k]) {
            residual[k].sub_assign(config);
            witness.push(ResolvedPlacement { app: i, pm: k, vm_type: l, count: 1 });
            true
        } else {
            false
        }
    };
    for i in 0..a {
        let mut slots: Vec<(usize, usize)> =
            (0..p).flat_map(|k| (0..v).map(move |l| (k, l))).collect();
        for idx in (1..slots.len()).rev() {
            slots.swap(idx, rng.gen_range(0..=idx));
        }
        for (k, l) in slots {
            if problem.profile.get(i, k, l) > 0.0 && place(i, k, l, &mut residual) {
                break;
            }
        }
    }
    for _ in 0..rng.gen_range(0..=3) {
        let (i, k, l) = (rng.gen_range(0..a), rng.gen_range(0..p), rng.gen_range(0..v));
        if problem.profile.get(i, k, l) > 0.0 {
            place(i, k, l, &mut residual);
        }
    }

    let witness_plan = DeploymentPlan::from_resolved(&problem, &witness);
    let (lo, hi) = params.demand_factor;
    for app in &mut problem.applications {
        let provided = witness_plan.provided[&app.id];
        app.required_throughput = provided * rng.gen_range(lo..hi);
    }
    problem
}

/// Exhaustive minimum PM count, or None when no deployment satisfies every
/// demand. Enumerates every PM subset, skipping those no smaller than the
/// best so far, and runs a complete depth-first search over per-app
/// placement counts on each. Only usable on tiny instances.
pub fn oracle_min_pms(problem: &ConsolidationProblem) -> Option<usize> {
    let n = problem.num_pms();
    assert!(n <= 16, "oracle is exponential in the PM count");
    let mut best: Option<u32> = None;
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones();
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        if subset_feasible(problem, mask) {
            best = Some(size);
        }
    }
    best.map(|b| b as usize)
}

fn subset_feasible(problem: &ConsolidationProblem, mask: u32) -> bool {
    let pms: Vec<usize> = (0..problem.num_pms()).filter(|k| mask & (1 << k) != 0).collect();
    let mut residual: Vec<ResourceVector> =
        pms.iter().map(|&k| problem.pms[k].capacity.clone()).collect();
    satisfy_apps(problem, &pms, &mut residual, 0)
}

fn satisfy_apps(
    problem: &ConsolidationProblem,
    pms: &[usize],
    residual: &mut Vec<ResourceVector>,
    app: usize,
) -> bool {
    if app == problem.num_apps() {
        return true;
    }
    // Accumulating from zero in ascending (pm, type) slot order reproduces
    // the canonical throughput summation order, so the feasibility boundary
    // agrees bitwise with plan checking.
    place_for_app(problem, pms, residual, app, 0, 0.0)
}

fn place_for_app(
    problem: &ConsolidationProblem,
    pms: &[usize],
    residual: &mut Vec<ResourceVector>,
    app: usize,
    slot: usize,
    acc: f64,
) -> bool {
    if acc >= problem.applications[app].required_throughput {
        return satisfy_apps(problem, pms, residual, app + 1);
    }
    let v = problem.num_vm_types();
    if slot == pms.len() * v {
        return false;
    }
    let (si, l) = (slot / v, slot % v);
    let k = pms[si];
    let mu = problem.profile.get(app, k, l);
    let config = &problem.vm_types[l].config;
    let max_count = if mu > 0.0 { max_fit(&residual[si], config) } else { 0 };
    for count in 0..=max_count {
        if count > 0 {
            scaled_sub(&mut residual[si], config, count as f64);
        }
        let found =
            place_for_app(problem, pms, residual, app, slot + 1, acc + mu * count as f64);
        if count > 0 {
            scaled_add(&mut residual[si], config, count as f64);
        }
        if found {
            return true;
        }
        // Once this slot alone covers the remainder, larger counts only
        // consume capacity.
        if acc + mu * count as f64 >= problem.applications[app].required_throughput {
            break;
        }
    }
    false
}

fn max_fit(residual: &ResourceVector, config: &ResourceVector) -> u64 {
    let mut max = u64::MAX;
    let mut bounded = false;
    for j in 0..config.len() {
        if config.get(j) > 0.0 {
            bounded = true;
            max = max.min((residual.get(j) / config.get(j)).floor() as u64);
        }
    }
    assert!(bounded, "VM configurations must consume at least one resource");
    max
}

// Capacities, configurations and counts are small integers, so scaled
// subtract/add round-trips exactly.
fn scaled_sub(v: &mut ResourceVector, delta: &ResourceVector, times: f64) {
    for j in 0..v.len() {
        v.0[j] -= delta.get(j) * times;
    }
}

fn scaled_add(v: &mut ResourceVector, delta: &ResourceVector, times: f64) {
    for j in 0..v.len() {
        v.0[j] += delta.get(j) * times;
    }
}
