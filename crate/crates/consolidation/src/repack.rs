//! Bin-packing baselines that re-place an existing plan's VM instances.
//!
//! Both treat the VMs of a deployment plan as items and the PMs as bins.
//! They keep the VM-to-app assignment fixed (so throughput is unchanged)
//! and only re-decide which PM hosts which instance, which makes their PM
//! counts directly comparable with the greedy consolidation pass.

use std::collections::BTreeMap;

use crate::model::{
    canonicalize_placements, ConsolidationProblem, DeploymentPlan, ModelError, ProblemIndex,
    ResourceVector,
};

/// One concrete VM from an expanded plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmInstance {
    pub app: usize,
    pub vm_type: usize,
}

/// Flattens a plan into individual VM instances, in ascending
/// (app, pm, type) placement order. The original PM is deliberately
/// dropped; repacking starts from scratch.
pub fn expand_plan(
    problem: &ConsolidationProblem,
    plan: &DeploymentPlan,
) -> Result<Vec<VmInstance>, ModelError> {
    let index = ProblemIndex::new(problem);
    let resolved = canonicalize_placements(&index.resolve(&plan.placements)?);
    let mut out = Vec::new();
    for p in resolved {
        for _ in 0..p.count {
            out.push(VmInstance { app: p.app, vm_type: p.vm_type });
        }
    }
    Ok(out)
}

/// A repacked assignment: VM index (into the expanded list) to PM index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepackResult {
    pub assignment: BTreeMap<usize, usize>,
    pub pm_count: usize,
    /// VM indices that fit on no PM.
    pub failed: Vec<usize>,
}

/// Scalar size of a resource vector: the sum over dimensions of the demand
/// normalized by the fleet-wide maximum capacity in that dimension.
fn scalar_size(v: &ResourceVector, norm: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (j, n) in norm.iter().enumerate() {
        if *n > 0.0 {
            sum += v.get(j) / n;
        }
    }
    sum
}

fn fleet_norm(problem: &ConsolidationProblem) -> Vec<f64> {
    let r = problem.num_resources();
    let mut norm = vec![0.0; r];
    for pm in &problem.pms {
        for j in 0..r {
            if pm.capacity.get(j) > norm[j] {
                norm[j] = pm.capacity.get(j);
            }
        }
    }
    norm
}

/// First-fit decreasing. Items are sorted by decreasing scalar size (ties
/// keep expansion order); bins are visited largest-first. An item goes to
/// the first already-opened bin it fits in, else opens the next unopened
/// bin, else fails.
pub fn ffd(problem: &ConsolidationProblem, vms: &[VmInstance]) -> RepackResult {
    let norm = fleet_norm(problem);
    let mut items: Vec<usize> = (0..vms.len()).collect();
    let mut sizes = vec![0.0; vms.len()];
    for (idx, vm) in vms.iter().enumerate() {
        sizes[idx] = scalar_size(&problem.vm_types[vm.vm_type].config, &norm);
    }
    items.sort_by(|a, b| sizes[*b].partial_cmp(&sizes[*a]).unwrap().then(a.cmp(b)));

    let mut pm_order: Vec<usize> = (0..problem.num_pms()).collect();
    let pm_sizes: Vec<f64> = problem
        .pms
        .iter()
        .map(|pm| scalar_size(&pm.capacity, &norm))
        .collect();
    pm_order.sort_by(|a, b| pm_sizes[*b].partial_cmp(&pm_sizes[*a]).unwrap().then(a.cmp(b)));

    let mut residual: Vec<ResourceVector> =
        problem.pms.iter().map(|pm| pm.capacity.clone()).collect();
    let mut opened = 0usize; // prefix of pm_order that is open
    let mut assignment = BTreeMap::new();
    let mut failed = Vec::new();

    'items: for idx in items {
        let config = &problem.vm_types[vms[idx].vm_type].config;
        for pos in 0..opened {
            let k = pm_order[pos];
            if config.fits_within(&residual[k]) {
                residual[k].sub_assign(config);
                assignment.insert(idx, k);
                continue 'items;
            }
        }
        while opened < pm_order.len() {
            let k = pm_order[opened];
            opened += 1;
            if config.fits_within(&residual[k]) {
                residual[k].sub_assign(config);
                assignment.insert(idx, k);
                continue 'items;
            }
        }
        failed.push(idx);
    }

    let pm_count = count_used(&assignment);
    RepackResult { assignment, pm_count, failed }
}

/// Least-loaded placement. Items keep their expansion order; each goes to
/// the opened bin with the smallest post-opening load (max over dimensions
/// of used/capacity) among those it fits in, else opens the next bin
/// (largest-first, like FFD), else fails.
pub fn ll(problem: &ConsolidationProblem, vms: &[VmInstance]) -> RepackResult {
    let norm = fleet_norm(problem);
    let mut pm_order: Vec<usize> = (0..problem.num_pms()).collect();
    let pm_sizes: Vec<f64> = problem
        .pms
        .iter()
        .map(|pm| scalar_size(&pm.capacity, &norm))
        .collect();
    pm_order.sort_by(|a, b| pm_sizes[*b].partial_cmp(&pm_sizes[*a]).unwrap().then(a.cmp(b)));

    let load = |problem: &ConsolidationProblem, used: &ResourceVector, k: usize| -> f64 {
        let cap = &problem.pms[k].capacity;
        let mut worst = 0.0f64;
        for j in 0..problem.num_resources() {
            if cap.get(j) > 0.0 {
                let frac = used.get(j) / cap.get(j);
                if frac > worst {
                    worst = frac;
                }
            }
        }
        worst
    };

    let mut used: Vec<ResourceVector> = problem
        .pms
        .iter()
        .map(|pm| ResourceVector::zeros(pm.capacity.len()))
        .collect();
    let mut residual: Vec<ResourceVector> =
        problem.pms.iter().map(|pm| pm.capacity.clone()).collect();
    let mut opened = 0usize;
    let mut assignment = BTreeMap::new();
    let mut failed = Vec::new();

    'items: for (idx, vm) in vms.iter().enumerate() {
        let config = &problem.vm_types[vm.vm_type].config;
        let mut pick: Option<(usize, f64)> = None;
        for pos in 0..opened {
            let k = pm_order[pos];
            if !config.fits_within(&residual[k]) {
                continue;
            }
            let l = load(problem, &used[k], k);
            let better = match pick {
                None => true,
                Some((_, best)) => l < best,
            };
            if better {
                pick = Some((k, l));
            }
        }
        if let Some((k, _)) = pick {
            residual[k].sub_assign(config);
            used[k].add_assign(config);
            assignment.insert(idx, k);
            continue 'items;
        }
        while opened < pm_order.len() {
            let k = pm_order[opened];
            opened += 1;
            if config.fits_within(&residual[k]) {
                residual[k].sub_assign(config);
                used[k].add_assign(config);
                assignment.insert(idx, k);
                continue 'items;
            }
        }
        failed.push(idx);
    }

    let pm_count = count_used(&assignment);
    RepackResult { assignment, pm_count, failed }
}

fn count_used(assignment: &BTreeMap<usize, usize>) -> usize {
    let mut pms: Vec<usize> = assignment.values().copied().collect();
    pms.sort_unstable();
    pms.dedup();
    pms.len()
}
