//! Integer-program view of a consolidation problem.
//!
//! Variables: one binary `z_k` per PM (powered on or not) and one integer
//! `x_i_k_l` per (app, pm, vm type) triple counting VM instances. The
//! objective minimizes the number of powered-on PMs subject to per-PM
//! capacity rows and per-app throughput rows.
//!
//! [`solve_exact`] is a self-contained depth-first branch-and-bound over that
//! structure (no LP relaxation): z variables are fixed first (0 before 1),
//! then x variables in (app, pm, type) order, pruning on the incumbent PM
//! count and on residual-demand reachability. The first optimum found in
//! this order is the lexicographically smallest one, which pins solver
//! output byte-for-byte.

use thiserror::Error;

use crate::model::{
    validate_problem, ConsolidationProblem, DeploymentPlan, ResolvedPlacement, Violation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
}

/// A linear row: sum of `coefficient * variable` compared against `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    /// (variable id, coefficient), in deterministic construction order.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Dimensions of the variable space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IlpDims {
    pub apps: usize,
    pub pms: usize,
    pub vm_types: usize,
    pub resources: usize,
}

/// The assembled integer program. Variable ids: `z_k = k` for
/// `k < pms`, then `x_i_k_l = pms + (i*pms + k)*vm_types + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct IlpModel {
    pub dims: IlpDims,
    /// Objective terms (minimize): one unit coefficient per z variable.
    pub objective: Vec<(usize, f64)>,
    /// Capacity rows (one per resource and PM), then performance rows
    /// (one per app).
    pub constraints: Vec<LinearConstraint>,
    /// Capacity-implied upper bound per (pm, vm type) pair, indexed
    /// `k*vm_types + l`; applies to every x variable on that pair.
    pub x_upper: Vec<u64>,
    // Problem data the solver branches on, kept so the model is
    // self-contained.
    app_ids: Vec<String>,
    pm_ids: Vec<String>,
    vm_type_ids: Vec<String>,
    demands: Vec<f64>,
    capacities: Vec<Vec<f64>>,
    configs: Vec<Vec<f64>>,
    mu: Vec<f64>,
}

impl IlpModel {
    pub fn num_z(&self) -> usize {
        self.dims.pms
    }

    pub fn num_x(&self) -> usize {
        self.dims.apps * self.dims.pms * self.dims.vm_types
    }

    pub fn z_var(&self, pm: usize) -> usize {
        pm
    }

    pub fn x_var(&self, app: usize, pm: usize, vm_type: usize) -> usize {
        self.dims.pms + (app * self.dims.pms + pm) * self.dims.vm_types + vm_type
    }

    /// `z_k` / `x_i_k_l`, zero-based, as written by the LP exporter.
    pub fn var_name(&self, var: usize) -> String {
        if var < self.dims.pms {
            format!("z_{var}")
        } else {
            let rest = var - self.dims.pms;
            let l = rest % self.dims.vm_types;
            let ik = rest / self.dims.vm_types;
            let k = ik % self.dims.pms;
            let i = ik / self.dims.pms;
            format!("x_{i}_{k}_{l}")
        }
    }

    fn mu_at(&self, app: usize, pm: usize, vm_type: usize) -> f64 {
        self.mu[(app * self.dims.pms + pm) * self.dims.vm_types + vm_type]
    }

    fn upper_at(&self, pm: usize, vm_type: usize) -> u64 {
        self.x_upper[pm * self.dims.vm_types + vm_type]
    }
}

/// Builds the integer program for a problem. Invalid problems are refused
/// with the full violation list.
pub fn build_ilp(problem: &ConsolidationProblem) -> Result<IlpModel, Vec<Violation>> {
    let violations = validate_problem(problem);
    if !violations.is_empty() {
        return Err(violations);
    }
    let dims = IlpDims {
        apps: problem.num_apps(),
        pms: problem.num_pms(),
        vm_types: problem.num_vm_types(),
        resources: problem.num_resources(),
    };
    let (a, p, v, r) = (dims.apps, dims.pms, dims.vm_types, dims.resources);

    let capacities: Vec<Vec<f64>> = problem.pms.iter().map(|pm| pm.capacity.0.clone()).collect();
    let configs: Vec<Vec<f64>> = problem.vm_types.iter().map(|vm| vm.config.0.clone()).collect();
    let mut mu = Vec::with_capacity(a * p * v);
    for i in 0..a {
        for k in 0..p {
            for l in 0..v {
                mu.push(problem.profile.get(i, k, l));
            }
        }
    }

    // Capacity-implied instance bound per (pm, type): the tightest dimension
    // with positive demand; dimensions a type does not consume give no bound.
    let mut x_upper = Vec::with_capacity(p * v);
    for k in 0..p {
        for l in 0..v {
            let mut bound = u64::MAX;
            for j in 0..r {
                if configs[l][j] > 0.0 {
                    let per_dim = (capacities[k][j] / configs[l][j]).floor();
                    let per_dim = if per_dim >= u64::MAX as f64 { u64::MAX } else { per_dim as u64 };
                    bound = bound.min(per_dim);
                }
            }
            x_upper.push(bound);
        }
    }

    let mut model = IlpModel {
        dims,
        objective: (0..p).map(|k| (k, 1.0)).collect(),
        constraints: Vec::with_capacity(r * p + a),
        x_upper,
        app_ids: problem.applications.iter().map(|x| x.id.clone()).collect(),
        pm_ids: problem.pms.iter().map(|x| x.id.clone()).collect(),
        vm_type_ids: problem.vm_types.iter().map(|x| x.id.clone()).collect(),
        demands: problem.applications.iter().map(|x| x.required_throughput).collect(),
        capacities,
        configs,
        mu,
    };

    // Capacity rows: sum_{i,l} v_{j,l} x_{i,k,l} - r_{j,k} z_k <= 0.
    for j in 0..r {
        for k in 0..p {
            let mut terms = Vec::new();
            for i in 0..a {
                for l in 0..v {
                    let coeff = model.configs[l][j];
                    if coeff != 0.0 {
                        terms.push((model.x_var(i, k, l), coeff));
                    }
                }
            }
            let cap = model.capacities[k][j];
            if cap != 0.0 {
                terms.push((model.z_var(k), -cap));
            }
            model.constraints.push(LinearConstraint {
                name: format!("cap_{j}_{k}"),
                terms,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }

    // Performance rows: sum_{k,l} mu_{i,k,l} x_{i,k,l} >= mu_i. Zero-demand
    // apps keep their row.
    for i in 0..a {
        let mut terms = Vec::new();
        for k in 0..p {
            for l in 0..v {
                let coeff = model.mu_at(i, k, l);
                if coeff != 0.0 {
                    terms.push((model.x_var(i, k, l), coeff));
                }
            }
        }
        model.constraints.push(LinearConstraint {
            name: format!("perf_{i}"),
            terms,
            sense: Sense::Ge,
            rhs: model.demands[i],
        });
    }

    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Proven optimal.
    Optimal,
    /// Proven infeasible.
    Infeasible,
    /// Search stopped at the node limit; `plan` holds the best incumbent
    /// found, if any.
    NodeLimit,
}

#[derive(Debug)]
pub struct ExactSolution {
    pub status: SolveStatus,
    pub plan: Option<DeploymentPlan>,
    /// PM count of the returned plan.
    pub objective_value: Option<usize>,
    pub nodes_explored: u64,
}

#[derive(Debug, Error)]
pub enum IlpError {
    #[error("node limit must be >= 1")]
    ZeroNodeLimit,
}

pub const DEFAULT_NODE_LIMIT: u64 = 10_000_000;

struct Search<'a> {
    m: &'a IlpModel,
    node_limit: u64,
    nodes: u64,
    hit_limit: bool,
    /// Max throughput app i can get from pm k if every type ran at its
    /// capacity bound (sound, capacity-sharing ignored).
    pm_potential: Vec<f64>,
    best_count: Option<usize>,
    best: Option<Vec<(usize, usize, usize, u64)>>,
    z: Vec<bool>,
    used: Vec<usize>,
    residual: Vec<Vec<f64>>,
    provided: Vec<f64>,
    placements: Vec<(usize, usize, usize, u64)>,
    /// suffix_potential[i][n]: best remaining throughput for app i over used
    /// PM positions n.. with all types at their static bounds.
    suffix_potential: Vec<Vec<f64>>,
}

/// Slack used only to keep optimistic-bound pruning sound against float
/// rounding; the accept/cover checks themselves are exact.
fn prune_slack(demand: f64) -> f64 {
    demand.abs() * 1e-9 + 1e-9
}

impl<'a> Search<'a> {
    fn tick(&mut self) -> bool {
        if self.nodes >= self.node_limit {
            self.hit_limit = true;
            return false;
        }
        self.nodes += 1;
        true
    }

    /// Can every app still reach its demand using powered-on plus undecided
    /// PMs, with every type at its capacity bound?
    fn demand_reachable(&self, next_k: usize) -> bool {
        let p = self.m.dims.pms;
        for i in 0..self.m.dims.apps {
            let mut potential = 0.0;
            for k in 0..p {
                if k >= next_k || self.z[k] {
                    potential += self.pm_potential[i * p + k];
                }
            }
            let demand = self.m.demands[i];
            if potential < demand - prune_slack(demand) {
                return false;
            }
        }
        true
    }

    fn branch_z(&mut self, k: usize, ones: usize) {
        if self.hit_limit {
            return;
        }
        if let Some(best) = self.best_count {
            if ones >= best {
                return;
            }
        }
        if k == self.m.dims.pms {
            self.enter_x_phase(ones);
            return;
        }
        for value in [false, true] {
            if !self.tick() {
                return;
            }
            self.z[k] = value;
            if self.demand_reachable(k + 1) {
                self.branch_z(k + 1, ones + usize::from(value));
            }
            if self.hit_limit {
                return;
            }
        }
        self.z[k] = false;
    }

    fn enter_x_phase(&mut self, ones: usize) {
        self.used = (0..self.m.dims.pms).filter(|k| self.z[*k]).collect();
        self.residual = self.used.iter().map(|k| self.m.capacities[*k].clone()).collect();
        self.provided = vec![0.0; self.m.dims.apps];
        self.placements.clear();

        // Static throughput potential per app over the used-PM suffix.
        let slots = self.used.len();
        let p = self.m.dims.pms;
        self.suffix_potential = (0..self.m.dims.apps)
            .map(|i| {
                let mut suffix = vec![0.0; slots + 1];
                for n in (0..slots).rev() {
                    suffix[n] = suffix[n + 1] + self.pm_potential[i * p + self.used[n]];
                }
                suffix
            })
            .collect();

        self.branch_x(0, 0, 0, ones);
    }

    /// DFS over x variables: app `i`, used-PM position `n`, type `l`.
    /// Values are tried ascending so the first full assignment reached is
    /// the lexicographically smallest in branching order.
    fn branch_x(&mut self, i: usize, n: usize, l: usize, ones: usize) {
        if self.hit_limit {
            return;
        }
        if i == self.m.dims.apps {
            self.accept(ones);
            return;
        }
        if n == self.used.len() {
            // App i has no variables left; its demand must be covered now.
            // Exact canonical comparison, matching check_plan.
            if self.provided[i] >= self.m.demands[i] {
                self.branch_x(i + 1, 0, 0, ones);
            }
            return;
        }
        if l == self.m.dims.vm_types {
            self.branch_x(i, n + 1, 0, ones);
            return;
        }

        let k = self.used[n];
        let r = self.m.dims.resources;
        let mu = self.m.mu_at(i, k, l);
        // Optimistic remaining throughput if this variable stays at `count`:
        // the rest of this PM's types plus later used PMs, all at their
        // static capacity bounds.
        let mut rest = self.suffix_potential[i][n + 1];
        for l2 in (l + 1)..self.m.dims.vm_types {
            rest += self.m.mu_at(i, k, l2) * self.m.upper_at(k, l2) as f64;
        }

        // Dynamic instance bound from this PM's residual capacity.
        let mut ub = self.m.upper_at(k, l);
        for j in 0..r {
            let need = self.m.configs[l][j];
            if need > 0.0 {
                let per_dim = (self.residual[n][j] / need).floor();
                let per_dim = if per_dim >= u64::MAX as f64 { u64::MAX } else { per_dim as u64 };
                ub = ub.min(per_dim);
            }
        }

        let demand = self.m.demands[i];
        let slack = prune_slack(demand);
        let saved_provided = self.provided[i];
        let saved_residual = self.residual[n].clone();

        for count in 0..=ub {
            if !self.tick() {
                return;
            }
            if saved_provided + mu * count as f64 + rest < demand - slack {
                // Unreachable even with everything remaining maxed out;
                // larger counts only help, so keep scanning.
                continue;
            }
            if count > 0 {
                // Residuals derive from the saved state each time, so
                // backtracking is float-exact.
                for j in 0..r {
                    self.residual[n][j] = saved_residual[j] - self.m.configs[l][j] * count as f64;
                }
                self.placements.push((i, k, l, count));
                self.set_provided_canonical(i);
            }
            self.branch_x(i, n, l + 1, ones);
            if count > 0 {
                self.placements.pop();
                self.residual[n] = saved_residual.clone();
                self.provided[i] = saved_provided;
            }
            if self.hit_limit {
                return;
            }
        }
    }

    /// provided[i] as the canonical ascending-(pm, type) sum of mu * count,
    /// the same fold check_plan uses. The placement stack is already in
    /// that order because variables are assigned in it.
    fn set_provided_canonical(&mut self, i: usize) {
        let mut sum = 0.0;
        for (app, k, l, count) in &self.placements {
            if *app == i {
                sum += self.m.mu_at(*app, *k, *l) * *count as f64;
            }
        }
        self.provided[i] = sum;
    }

    fn accept(&mut self, ones: usize) {
        let improves = match self.best_count {
            None => true,
            Some(best) => ones < best,
        };
        if improves {
            self.best_count = Some(ones);
            self.best = Some(self.placements.clone());
        }
    }
}

/// Exact minimum-PM solve by depth-first branch-and-bound. Deterministic:
/// among optima it returns the lexicographically smallest assignment in
/// branching order (z by PM index, then x by app, PM, type).
pub fn solve_exact(m: &IlpModel, node_limit: u64) -> Result<ExactSolution, IlpError> {
    if node_limit == 0 {
        return Err(IlpError::ZeroNodeLimit);
    }
    let (a, p) = (m.dims.apps, m.dims.pms);
    let mut pm_potential = vec![0.0; a * p];
    for i in 0..a {
        for k in 0..p {
            let mut total = 0.0;
            for l in 0..m.dims.vm_types {
                total += m.mu_at(i, k, l) * m.upper_at(k, l) as f64;
            }
            pm_potential[i * p + k] = total;
        }
    }

    let mut search = Search {
        m,
        node_limit,
        nodes: 0,
        hit_limit: false,
        pm_potential,
        best_count: None,
        best: None,
        z: vec![false; p],
        used: Vec::new(),
        residual: Vec::new(),
        provided: Vec::new(),
        placements: Vec::new(),
        suffix_potential: Vec::new(),
    };
    if search.demand_reachable(0) {
        search.branch_z(0, 0);
    }

    let status = if search.hit_limit {
        SolveStatus::NodeLimit
    } else if search.best.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    let plan = search.best.as_ref().map(|placements| {
        build_plan(m, placements)
    });
    let objective_value = plan.as_ref().map(|pl| pl.used_pms.len());
    Ok(ExactSolution { status, plan, objective_value, nodes_explored: search.nodes })
}

fn build_plan(m: &IlpModel, placements: &[(usize, usize, usize, u64)]) -> DeploymentPlan {
    // Rebuild a problem view sufficient for plan construction.
    let problem = ConsolidationProblem {
        resources: (0..m.dims.resources)
            .map(|j| crate::model::ResourceType { name: format!("r{j}"), unit: String::new() })
            .collect(),
        applications: m
            .app_ids
            .iter()
            .zip(&m.demands)
            .map(|(id, mu)| crate::model::Application { id: id.clone(), required_throughput: *mu })
            .collect(),
        pms: m
            .pm_ids
            .iter()
            .zip(&m.capacities)
            .map(|(id, cap)| crate::model::PhysicalMachine {
                id: id.clone(),
                capacity: crate::model::ResourceVector(cap.clone()),
            })
            .collect(),
        vm_types: m
            .vm_type_ids
            .iter()
            .zip(&m.configs)
            .map(|(id, cfg)| crate::model::VmType {
                id: id.clone(),
                config: crate::model::ResourceVector(cfg.clone()),
            })
            .collect(),
        profile: crate::model::PerformanceProfile {
            entries: (0..m.dims.apps)
                .map(|i| {
                    (0..m.dims.pms)
                        .map(|k| (0..m.dims.vm_types).map(|l| m.mu_at(i, k, l)).collect())
                        .collect()
                })
                .collect(),
        },
    };
    let resolved: Vec<ResolvedPlacement> = placements
        .iter()
        .map(|(i, k, l, count)| ResolvedPlacement { app: *i, pm: *k, vm_type: *l, count: *count })
        .collect();
    DeploymentPlan::from_resolved(&problem, &resolved)
}

fn format_num(value: f64) -> String {
    format!("{value}")
}

fn append_terms(out: &mut String, m: &IlpModel, terms: &[(usize, f64)]) {
    let mut first = true;
    for (var, coeff) in terms {
        if *coeff == 0.0 {
            continue;
        }
        let name = m.var_name(*var);
        let magnitude = coeff.abs();
        if first {
            if *coeff < 0.0 {
                out.push_str("- ");
            }
            first = false;
        } else if *coeff < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if magnitude != 1.0 {
            out.push_str(&format_num(magnitude));
            out.push(' ');
        }
        out.push_str(&name);
    }
}

/// Renders the model in LP text format (Minimize / Subject To / Bounds /
/// General / Binary / End). Output is deterministic byte-for-byte.
pub fn export_lp(m: &IlpModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj: ");
    append_terms(&mut out, m, &m.objective);
    out.push_str("\nSubject To\n");
    for row in &m.constraints {
        out.push(' ');
        out.push_str(&row.name);
        out.push_str(": ");
        append_terms(&mut out, m, &row.terms);
        match row.sense {
            Sense::Le => out.push_str(" <= "),
            Sense::Ge => out.push_str(" >= "),
        }
        out.push_str(&format_num(row.rhs));
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for i in 0..m.dims.apps {
        for k in 0..m.dims.pms {
            for l in 0..m.dims.vm_types {
                let ub = m.upper_at(k, l);
                out.push_str(&format!(" 0 <= {} <= {}\n", m.var_name(m.x_var(i, k, l)), ub));
            }
        }
    }
    out.push_str("General\n");
    for i in 0..m.dims.apps {
        for k in 0..m.dims.pms {
            for l in 0..m.dims.vm_types {
                out.push(' ');
                out.push_str(&m.var_name(m.x_var(i, k, l)));
                out.push('\n');
            }
        }
    }
    out.push_str("Binary\n");
    for k in 0..m.dims.pms {
        out.push(' ');
        out.push_str(&m.var_name(m.z_var(k)));
        out.push('\n');
    }
    out.push_str("End\n");
    out
}
