//! The 3MAX greedy consolidation heuristic.
//!
//! Outer loop: pick the most starved application (max required-to-provided
//! ratio), pick the best remaining PM for it (max residual-to-performance
//! score), and consume that PM. Inner loop: while the PM still fits a useful
//! VM, re-pick the currently most starved application and place one VM of
//! the best fitting type for it. A PM whose residual cannot host any useful
//! type for the selected application is abandoned even if other applications
//! could still use it; the outer loop then moves on.
//!
//! All scoring ties break deterministically (documented per function), so
//! the whole pass is a pure function of the problem.

use std::collections::BTreeMap;

use crate::model::{
    validate_problem, ConsolidationProblem, DeploymentPlan, ResolvedPlacement, ResourceVector,
    Violation,
};

/// Required-to-provided ratio. `+inf` when nothing is provided yet for a
/// positive demand; 0 when nothing is required (such an app never drives
/// placement).
pub fn rpr(required: f64, provided: f64) -> f64 {
    if required == 0.0 {
        0.0
    } else if provided == 0.0 {
        f64::INFINITY
    } else {
        required / provided
    }
}

/// Index of the unsatisfied application with the largest RPR. Ties prefer
/// the larger absolute demand, then input order. `None` when everything is
/// satisfied.
pub fn select_app(problem: &ConsolidationProblem, provided: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, app) in problem.applications.iter().enumerate() {
        let demand = app.required_throughput;
        if provided[i] >= demand {
            continue;
        }
        let score = rpr(demand, provided[i]);
        let better = match best {
            None => true,
            Some((b, best_score)) => {
                score > best_score
                    || (score == best_score
                        && demand > problem.applications[b].required_throughput)
            }
        };
        if better {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// Residual-to-performance score of a PM for an app: the best
/// `mu_{i,k,l} * residual_j / config_{j,l}` over every type and every
/// consumed dimension. Types that do not currently fit still score (fit is
/// C5's job). `-inf` only when there is no type at all.
pub fn r2p(
    problem: &ConsolidationProblem,
    app: usize,
    pm: usize,
    residual: &ResourceVector,
) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (l, vm) in problem.vm_types.iter().enumerate() {
        let mu = problem.profile.get(app, pm, l);
        for j in 0..problem.num_resources() {
            let need = vm.config.get(j);
            if need > 0.0 {
                // (mu / config) * residual, so select_pm can factor the
                // residual-independent part out without changing rounding.
                let term = (mu / need) * residual.get(j);
                if term > best {
                    best = term;
                }
            }
        }
    }
    best
}

/// Greedy working state: residual capacity per PM, the not-yet-consumed
/// candidate set, provided throughput per app and the placements so far.
#[derive(Debug, Clone)]
pub struct GreedyState {
    pub residuals: Vec<ResourceVector>,
    pub candidates: Vec<bool>,
    pub provided: Vec<f64>,
    pub placements: BTreeMap<(usize, usize, usize), u64>,
}

impl GreedyState {
    pub fn new(problem: &ConsolidationProblem) -> Self {
        GreedyState {
            residuals: problem.pms.iter().map(|pm| pm.capacity.clone()).collect(),
            candidates: vec![true; problem.num_pms()],
            provided: vec![0.0; problem.num_apps()],
            placements: BTreeMap::new(),
        }
    }
}

/// The candidate PM with the best R2P score for `app`. Ties prefer the PM
/// with the larger sum of residuals normalized by the fleet-wide maximum
/// capacity per dimension (which also selects a component-wise maximum
/// whenever one exists), then input order.
pub fn select_pm(problem: &ConsolidationProblem, state: &GreedyState, app: usize) -> Option<usize> {
    let r = problem.num_resources();
    let mut norm = vec![0.0; r];
    for pm in &problem.pms {
        for j in 0..r {
            if pm.capacity.get(j) > norm[j] {
                norm[j] = pm.capacity.get(j);
            }
        }
    }
    let normalized_sum = |residual: &ResourceVector| -> f64 {
        let mut sum = 0.0;
        for j in 0..r {
            if norm[j] > 0.0 {
                sum += residual.get(j) / norm[j];
            }
        }
        sum
    };

    let mut best: Option<(usize, f64, f64)> = None;
    for k in 0..problem.num_pms() {
        if !state.candidates[k] {
            continue;
        }
        let score = r2p(problem, app, k, &state.residuals[k]);
        let tie = normalized_sum(&state.residuals[k]);
        let better = match best {
            None => true,
            Some((_, bs, bt)) => score > bs || (score == bs && tie > bt),
        };
        if better {
            best = Some((k, score, tie));
        }
    }
    best.map(|(k, _, _)| k)
}

/// The fitting VM type with the largest throughput for `app` on `pm` given
/// the residual. Ties prefer the lexicographically smallest config (which is
/// the component-wise minimum whenever one exists), then input order.
/// `None` when nothing fits or the best fitting type contributes nothing.
pub fn select_vm_type(
    problem: &ConsolidationProblem,
    app: usize,
    pm: usize,
    residual: &ResourceVector,
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (l, vm) in problem.vm_types.iter().enumerate() {
        if !vm.config.fits_within(residual) {
            continue;
        }
        let mu = problem.profile.get(app, pm, l);
        let better = match best {
            None => true,
            Some(b) => {
                let best_mu = problem.profile.get(app, pm, b);
                mu > best_mu
                    || (mu == best_mu && vm.config.0 < problem.vm_types[b].config.0)
            }
        };
        if better {
            best = Some(l);
        }
    }
    match best {
        Some(l) if problem.profile.get(app, pm, l) > 0.0 => Some(l),
        _ => None,
    }
}

/// Run statistics for one greedy pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyStats {
    /// Outer-loop iterations (PM selections attempted).
    pub iterations: u64,
    /// PMs removed from the candidate set.
    pub pms_consumed: u64,
    /// Total VM instances placed.
    pub vms_placed: u64,
}

#[derive(Debug, Clone)]
pub struct HeuristicResult {
    pub plan: DeploymentPlan,
    pub all_satisfied: bool,
    /// (app id, remaining shortfall) for every unsatisfied app.
    pub unmet: Vec<(String, f64)>,
    pub stats: GreedyStats,
}

/// Runs 3MAX on a validated problem.
pub fn three_max(problem: &ConsolidationProblem) -> Result<HeuristicResult, Vec<Violation>> {
    let violations = validate_problem(problem);
    if !violations.is_empty() {
        return Err(violations);
    }
    Ok(run_greedy(problem, None))
}

/// 3MAX with the problem's demands replaced by `demands`. Callers must have
/// validated the problem; the simulator uses this to avoid cloning large
/// problems every period.
pub(crate) fn three_max_with_demands(
    problem: &ConsolidationProblem,
    demands: &[f64],
) -> HeuristicResult {
    run_greedy(problem, Some(demands))
}

fn run_greedy(problem: &ConsolidationProblem, demands: Option<&[f64]>) -> HeuristicResult {
    let demand = |i: usize| -> f64 {
        match demands {
            Some(d) => d[i],
            None => problem.applications[i].required_throughput,
        }
    };
    let a = problem.num_apps();
    let v = problem.num_vm_types();
    let r = problem.num_resources();

    let mut state = GreedyState::new(problem);
    let mut stats = GreedyStats { iterations: 0, pms_consumed: 0, vms_placed: 0 };

    // Per-app candidate scores are static: candidate PMs keep their full
    // capacity until consumed, so R2P and the tie key only depend on the
    // app. Computed lazily per app, bitwise-identical to select_pm.
    let mut norm = vec![0.0; r];
    for pm in &problem.pms {
        for j in 0..r {
            if pm.capacity.get(j) > norm[j] {
                norm[j] = pm.capacity.get(j);
            }
        }
    }
    let tie_key: Vec<f64> = problem
        .pms
        .iter()
        .map(|pm| {
            let mut sum = 0.0;
            for j in 0..r {
                if norm[j] > 0.0 {
                    sum += pm.capacity.get(j) / norm[j];
                }
            }
            sum
        })
        .collect();
    let mut scores: Vec<Option<Vec<f64>>> = vec![None; a];
    let mut remaining = problem.num_pms();

    let select_app_inner = |provided: &[f64]| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..a {
            if provided[i] >= demand(i) {
                continue;
            }
            let score = rpr(demand(i), provided[i]);
            let better = match best {
                None => true,
                Some((b, bs)) => score > bs || (score == bs && demand(i) > demand(b)),
            };
            if better {
                best = Some((i, score));
            }
        }
        best.map(|(i, _)| i)
    };

    while remaining > 0 {
        let Some(app) = select_app_inner(&state.provided) else {
            break;
        };
        stats.iterations += 1;

        let app_scores = scores[app].get_or_insert_with(|| {
            (0..problem.num_pms())
                .map(|k| r2p(problem, app, k, &problem.pms[k].capacity))
                .collect()
        });
        let mut pm_pick: Option<(usize, f64, f64)> = None;
        for k in 0..problem.num_pms() {
            if !state.candidates[k] {
                continue;
            }
            let score = app_scores[k];
            let tie = tie_key[k];
            let better = match pm_pick {
                None => true,
                Some((_, bs, bt)) => score > bs || (score == bs && tie > bt),
            };
            if better {
                pm_pick = Some((k, score, tie));
            }
        }
        let Some((pm, _, _)) = pm_pick else { break };
        state.candidates[pm] = false;
        remaining -= 1;
        stats.pms_consumed += 1;

        // Inner loop: place one VM at a time for the currently most starved
        // app until the PM cannot host a useful type for it.
        loop {
            let Some(current) = select_app_inner(&state.provided) else {
                break;
            };
            let mut pick: Option<usize> = None;
            for l in 0..v {
                let config = &problem.vm_types[l].config;
                if !config.fits_within(&state.residuals[pm]) {
                    continue;
                }
                let mu = problem.profile.get(current, pm, l);
                let better = match pick {
                    None => true,
                    Some(b) => {
                        let best_mu = problem.profile.get(current, pm, b);
                        mu > best_mu
                            || (mu == best_mu && config.0 < problem.vm_types[b].config.0)
                    }
                };
                if better {
                    pick = Some(l);
                }
            }
            let vm = match pick {
                Some(l) if problem.profile.get(current, pm, l) > 0.0 => l,
                _ => break,
            };
            state.residuals[pm].sub_assign(&problem.vm_types[vm].config);
            *state.placements.entry((current, pm, vm)).or_insert(0) += 1;
            stats.vms_placed += 1;
            // Keep provided canonical (ascending (pm, type) fold of
            // mu * count) so soon-to-follow comparisons match check_plan.
            let mut sum = 0.0;
            for ((i, k, l), count) in &state.placements {
                if *i == current {
                    sum += problem.profile.get(*i, *k, *l) * *count as f64;
                }
            }
            state.provided[current] = sum;
        }
    }

    let resolved: Vec<ResolvedPlacement> = state
        .placements
        .iter()
        .map(|((app, pm, vm_type), count)| ResolvedPlacement {
            app: *app,
            pm: *pm,
            vm_type: *vm_type,
            count: *count,
        })
        .collect();
    let plan = match demands {
        None => DeploymentPlan::from_resolved(problem, &resolved),
        Some(d) => {
            let mut shadow = problem.clone();
            for (app, demand) in shadow.applications.iter_mut().zip(d) {
                app.required_throughput = *demand;
            }
            DeploymentPlan::from_resolved(&shadow, &resolved)
        }
    };

    let mut unmet = Vec::new();
    for (i, app) in problem.applications.iter().enumerate() {
        let needed = demand(i);
        if state.provided[i] < needed {
            unmet.push((app.id.clone(), needed - state.provided[i]));
        }
    }
    let all_satisfied = unmet.is_empty();
    HeuristicResult { plan, all_satisfied, unmet, stats }
}
