//! Problem and plan data model.
//!
//! A [`ConsolidationProblem`] bundles the resource dimensions, applications
//! with required throughputs, PM capacities, VM type configurations and the
//! dense per-(app, pm, type) throughput profile. A [`DeploymentPlan`] is the
//! solver output: VM placements plus the set of used PMs.
//!
//! Validation is data, not types: [`validate_problem`] returns one
//! [`Violation`] per breach so callers can report all problems at once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One resource dimension (e.g. CPU cores, memory MB, network Mbps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceType {
    pub name: String,
    pub unit: String,
}

/// Amounts per resource dimension; length always equals the problem's
/// resource count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceVector(pub Vec<f64>);

impl ResourceVector {
    pub fn zeros(len: usize) -> Self {
        ResourceVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    /// True when `self[j] <= other[j]` in every dimension.
    pub fn fits_within(&self, other: &ResourceVector) -> bool {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add_assign(&mut self, other: &ResourceVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &ResourceVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a -= b;
        }
    }
}

/// An application with its current required throughput (requests/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Application {
    pub id: String,
    pub required_throughput: f64,
}

/// A physical machine and its capacity vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalMachine {
    pub id: String,
    pub capacity: ResourceVector,
}

/// A VM type and the resources one instance of it consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmType {
    pub id: String,
    pub config: ResourceVector,
}

/// Dense throughput tensor: `entries[app][pm][vm_type]` is the throughput one
/// VM of that type contributes to that application on that PM. A missing
/// entry is an input error, not "zero throughput"; completeness is enforced
/// by [`validate_problem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerformanceProfile {
    pub entries: Vec<Vec<Vec<f64>>>,
}

impl PerformanceProfile {
    pub fn get(&self, app: usize, pm: usize, vm_type: usize) -> f64 {
        self.entries[app][pm][vm_type]
    }
}

/// The full consolidation problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidationProblem {
    pub resources: Vec<ResourceType>,
    pub applications: Vec<Application>,
    pub pms: Vec<PhysicalMachine>,
    pub vm_types: Vec<VmType>,
    pub profile: PerformanceProfile,
}

impl ConsolidationProblem {
    /// Number of applications.
    pub fn num_apps(&self) -> usize {
        self.applications.len()
    }

    /// Number of physical machines.
    pub fn num_pms(&self) -> usize {
        self.pms.len()
    }

    /// Number of VM types.
    pub fn num_vm_types(&self) -> usize {
        self.vm_types.len()
    }

    /// Number of resource dimensions.
    pub fn num_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("problem serialization");
        out.push('\n');
        out
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
            .map_err(|e| ModelError::Parse(path.display().to_string(), e.to_string()))
    }
}

/// One placement entry: `count` VMs of `vm_type` serving `app` on `pm`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placement {
    pub app: String,
    pub pm: String,
    #[serde(rename = "type")]
    pub vm_type: String,
    pub count: u64,
}

/// A deployment plan. `placements` and `used_pms` are the serialized
/// content; `provided` and `satisfied` are derived against a problem when
/// the plan is built or re-bound and are not written to plan files.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentPlan {
    pub placements: Vec<Placement>,
    pub used_pms: BTreeSet<String>,
    /// Provided throughput per application id.
    pub provided: BTreeMap<String, f64>,
    /// Whether provided >= required, per application id.
    pub satisfied: BTreeMap<String, bool>,
}

/// The serialized form of a plan (exactly what plan files contain).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub placements: Vec<Placement>,
    pub used_pms: Vec<String>,
}

/// A placement resolved to problem indices. Solvers build these; the string
/// form is derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ResolvedPlacement {
    pub app: usize,
    pub pm: usize,
    pub vm_type: usize,
    pub count: u64,
}

/// Provided throughput per app, accumulated in the single canonical order
/// (placements sorted by (app, pm, type)). Every producer and checker of
/// plans goes through this function so float comparisons agree bitwise.
pub(crate) fn provided_throughput(
    problem: &ConsolidationProblem,
    sorted: &[ResolvedPlacement],
) -> Vec<f64> {
    let mut provided = vec![0.0; problem.num_apps()];
    for pl in sorted {
        provided[pl.app] += problem.profile.get(pl.app, pl.pm, pl.vm_type) * pl.count as f64;
    }
    provided
}

/// Merges duplicates and sorts into canonical (app, pm, type) order.
pub(crate) fn canonicalize_placements(raw: &[ResolvedPlacement]) -> Vec<ResolvedPlacement> {
    let mut merged: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
    for pl in raw {
        if pl.count == 0 {
            continue;
        }
        *merged.entry((pl.app, pl.pm, pl.vm_type)).or_insert(0) += pl.count;
    }
    merged
        .into_iter()
        .map(|((app, pm, vm_type), count)| ResolvedPlacement { app, pm, vm_type, count })
        .collect()
}

impl DeploymentPlan {
    /// An empty plan (no placements, no used PMs, nothing provided).
    pub fn empty(problem: &ConsolidationProblem) -> Self {
        Self::from_resolved(problem, &[])
    }

    /// Builds a plan from index-resolved placements, deriving used PMs,
    /// provided throughput and satisfaction.
    pub fn from_resolved(problem: &ConsolidationProblem, raw: &[ResolvedPlacement]) -> Self {
        let sorted = canonicalize_placements(raw);
        let provided_vec = provided_throughput(problem, &sorted);
        let mut used_pms = BTreeSet::new();
        let placements = sorted
            .iter()
            .map(|pl| {
                used_pms.insert(problem.pms[pl.pm].id.clone());
                Placement {
                    app: problem.applications[pl.app].id.clone(),
                    pm: problem.pms[pl.pm].id.clone(),
                    vm_type: problem.vm_types[pl.vm_type].id.clone(),
                    count: pl.count,
                }
            })
            .collect();
        let mut provided = BTreeMap::new();
        let mut satisfied = BTreeMap::new();
        for (i, app) in problem.applications.iter().enumerate() {
            provided.insert(app.id.clone(), provided_vec[i]);
            satisfied.insert(app.id.clone(), provided_vec[i] >= app.required_throughput);
        }
        DeploymentPlan { placements, used_pms, provided, satisfied }
    }

    /// Re-binds a parsed plan document to a problem, resolving ids and
    /// recomputing the derived fields. The document's `used_pms` is kept
    /// as-is; [`check_plan`] reports whether it is consistent.
    pub fn from_document(
        problem: &ConsolidationProblem,
        doc: &PlanDocument,
    ) -> Result<Self, ModelError> {
        let index = ProblemIndex::new(problem);
        let mut provided_vec = vec![0.0; problem.num_apps()];
        let resolved = index.resolve(&doc.placements)?;
        for pl in &resolved {
            provided_vec[pl.app] +=
                problem.profile.get(pl.app, pl.pm, pl.vm_type) * pl.count as f64;
        }
        for pm in &doc.used_pms {
            if !index.pms.contains_key(pm.as_str()) {
                return Err(ModelError::UnknownPm(pm.clone()));
            }
        }
        let mut provided = BTreeMap::new();
        let mut satisfied = BTreeMap::new();
        for (i, app) in problem.applications.iter().enumerate() {
            provided.insert(app.id.clone(), provided_vec[i]);
            satisfied.insert(app.id.clone(), provided_vec[i] >= app.required_throughput);
        }
        Ok(DeploymentPlan {
            placements: doc.placements.clone(),
            used_pms: doc.used_pms.iter().cloned().collect(),
            provided,
            satisfied,
        })
    }

    pub fn to_document(&self) -> PlanDocument {
        PlanDocument {
            placements: self.placements.clone(),
            used_pms: self.used_pms.iter().cloned().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut out =
            serde_json::to_string_pretty(&self.to_document()).expect("plan serialization");
        out.push('\n');
        out
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.values().all(|s| *s)
    }
}

/// Number of PMs a plan powers on.
pub fn plan_pm_count(plan: &DeploymentPlan) -> usize {
    plan.used_pms.len()
}

/// One validation breach: where and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

fn violation(path: impl Into<String>, reason: impl Into<String>) -> Violation {
    Violation { path: path.into(), reason: reason.into() }
}

fn check_amounts(out: &mut Vec<Violation>, path: &str, vec: &ResourceVector, want_len: usize) {
    if vec.len() != want_len {
        out.push(violation(
            path,
            format!("expected {} resource amounts, found {}", want_len, vec.len()),
        ));
    }
    for (j, v) in vec.0.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            out.push(violation(
                format!("{path}[{j}]"),
                format!("amount must be finite and >= 0, found {v}"),
            ));
        }
    }
}

fn check_duplicate_ids<'a>(
    out: &mut Vec<Violation>,
    section: &str,
    ids: impl Iterator<Item = &'a str>,
) {
    let mut seen = BTreeSet::new();
    for (n, id) in ids.enumerate() {
        if !seen.insert(id) {
            out.push(violation(format!("{section}[{n}].id"), format!("duplicate id {id:?}")));
        }
    }
}

/// Checks structural invariants and returns every breach found.
pub fn validate_problem(problem: &ConsolidationProblem) -> Vec<Violation> {
    let (a, p, v, r) = (
        problem.num_apps(),
        problem.num_pms(),
        problem.num_vm_types(),
        problem.num_resources(),
    );
    let mut out = Vec::new();

    if a >= 1 && v == 0 {
        out.push(violation("vm_types", "at least one VM type is required when applications exist"));
    }
    check_duplicate_ids(&mut out, "applications", problem.applications.iter().map(|x| x.id.as_str()));
    check_duplicate_ids(&mut out, "pms", problem.pms.iter().map(|x| x.id.as_str()));
    check_duplicate_ids(&mut out, "vm_types", problem.vm_types.iter().map(|x| x.id.as_str()));

    for (i, app) in problem.applications.iter().enumerate() {
        let mu = app.required_throughput;
        if !mu.is_finite() || mu < 0.0 {
            out.push(violation(
                format!("applications[{i}].required_throughput"),
                format!("must be finite and >= 0, found {mu}"),
            ));
        }
    }
    for (k, pm) in problem.pms.iter().enumerate() {
        check_amounts(&mut out, &format!("pms[{k}].capacity"), &pm.capacity, r);
    }
    for (l, vm) in problem.vm_types.iter().enumerate() {
        let path = format!("vm_types[{l}].config");
        check_amounts(&mut out, &path, &vm.config, r);
        if vm.config.0.iter().all(|x| *x <= 0.0) {
            out.push(violation(path, "config must be positive in at least one dimension"));
        }
    }

    // Profile completeness: exactly A x P x V finite non-negative entries.
    if problem.profile.entries.len() != a {
        out.push(violation(
            "profile",
            format!("expected {} application rows, found {}", a, problem.profile.entries.len()),
        ));
    }
    for (i, per_pm) in problem.profile.entries.iter().enumerate() {
        if per_pm.len() != p {
            out.push(violation(
                format!("profile[{i}]"),
                format!("expected {} pm rows, found {}", p, per_pm.len()),
            ));
        }
        for (k, per_type) in per_pm.iter().enumerate() {
            if per_type.len() != v {
                out.push(violation(
                    format!("profile[{i}][{k}]"),
                    format!("expected {} vm type entries, found {}", v, per_type.len()),
                ));
            }
            for (l, mu) in per_type.iter().enumerate() {
                if !mu.is_finite() || *mu < 0.0 {
                    out.push(violation(
                        format!("profile[{i}][{k}][{l}]"),
                        format!("throughput must be finite and >= 0, found {mu}"),
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown application id {0:?} in plan")]
    UnknownApp(String),
    #[error("unknown pm id {0:?} in plan")]
    UnknownPm(String),
    #[error("unknown vm type id {0:?} in plan")]
    UnknownVmType(String),
    #[error("placement for app {0:?} on pm {1:?} has count 0")]
    ZeroCount(String, String),
    #[error("failed to read {0}: {1}")]
    Io(String, String),
    #[error("failed to parse {0}: {1}")]
    Parse(String, String),
}

pub(crate) struct ProblemIndex<'a> {
    pub apps: BTreeMap<&'a str, usize>,
    pub pms: BTreeMap<&'a str, usize>,
    pub vm_types: BTreeMap<&'a str, usize>,
}

impl<'a> ProblemIndex<'a> {
    pub fn new(problem: &'a ConsolidationProblem) -> Self {
        ProblemIndex {
            apps: problem.applications.iter().enumerate().map(|(i, x)| (x.id.as_str(), i)).collect(),
            pms: problem.pms.iter().enumerate().map(|(i, x)| (x.id.as_str(), i)).collect(),
            vm_types: problem.vm_types.iter().enumerate().map(|(i, x)| (x.id.as_str(), i)).collect(),
        }
    }

    pub fn resolve(&self, placements: &[Placement]) -> Result<Vec<ResolvedPlacement>, ModelError> {
        let mut out = Vec::with_capacity(placements.len());
        for pl in placements {
            let app = *self
                .apps
                .get(pl.app.as_str())
                .ok_or_else(|| ModelError::UnknownApp(pl.app.clone()))?;
            let pm = *self
                .pms
                .get(pl.pm.as_str())
                .ok_or_else(|| ModelError::UnknownPm(pl.pm.clone()))?;
            let vm_type = *self
                .vm_types
                .get(pl.vm_type.as_str())
                .ok_or_else(|| ModelError::UnknownVmType(pl.vm_type.clone()))?;
            if pl.count == 0 {
                return Err(ModelError::ZeroCount(pl.app.clone(), pl.pm.clone()));
            }
            out.push(ResolvedPlacement { app, pm, vm_type, count: pl.count });
        }
        Ok(out)
    }
}

/// Per-application throughput line of a feasibility report.
#[derive(Debug, Clone, PartialEq)]
pub struct AppThroughput {
    pub app: String,
    pub required: f64,
    pub provided: f64,
    /// provided - required.
    pub surplus: f64,
}

/// What [`check_plan`] found.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Remaining capacity per PM (capacity - usage), for every PM.
    pub pm_slack: Vec<(String, ResourceVector)>,
    pub app_surplus: Vec<AppThroughput>,
    /// Every slack component >= 0.
    pub resource_feasible: bool,
    /// Every app's provided >= required.
    pub performance_satisfied: bool,
    /// used_pms is exactly the set of PMs hosting at least one VM.
    pub z_consistent: bool,
}

/// Verifies a plan against a problem: capacity usage, throughput coverage
/// and used-PM consistency. Ids that do not resolve are structural errors.
pub fn check_plan(
    problem: &ConsolidationProblem,
    plan: &DeploymentPlan,
) -> Result<FeasibilityReport, ModelError> {
    let index = ProblemIndex::new(problem);
    let resolved = canonicalize_placements(&index.resolve(&plan.placements)?);
    for pm in &plan.used_pms {
        if !index.pms.contains_key(pm.as_str()) {
            return Err(ModelError::UnknownPm(pm.clone()));
        }
    }

    let r = problem.num_resources();
    let mut usage: Vec<ResourceVector> =
        (0..problem.num_pms()).map(|_| ResourceVector::zeros(r)).collect();
    let mut hosting: BTreeSet<&str> = BTreeSet::new();
    for pl in &resolved {
        let config = &problem.vm_types[pl.vm_type].config;
        for j in 0..r {
            usage[pl.pm].0[j] += config.get(j) * pl.count as f64;
        }
        hosting.insert(problem.pms[pl.pm].id.as_str());
    }

    let provided = provided_throughput(problem, &resolved);

    let mut resource_feasible = true;
    let pm_slack: Vec<(String, ResourceVector)> = problem
        .pms
        .iter()
        .enumerate()
        .map(|(k, pm)| {
            let mut slack = pm.capacity.clone();
            slack.sub_assign(&usage[k]);
            if slack.0.iter().any(|s| *s < 0.0) {
                resource_feasible = false;
            }
            (pm.id.clone(), slack)
        })
        .collect();

    let mut performance_satisfied = true;
    let app_surplus: Vec<AppThroughput> = problem
        .applications
        .iter()
        .enumerate()
        .map(|(i, app)| {
            if provided[i] < app.required_throughput {
                performance_satisfied = false;
            }
            AppThroughput {
                app: app.id.clone(),
                required: app.required_throughput,
                provided: provided[i],
                surplus: provided[i] - app.required_throughput,
            }
        })
        .collect();

    let z_consistent = plan.used_pms.iter().map(|s| s.as_str()).eq(hosting.into_iter());

    Ok(FeasibilityReport { pm_slack, app_surplus, resource_feasible, performance_satisfied, z_consistent })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_problem() -> ConsolidationProblem {
        ConsolidationProblem {
            resources: vec![
                ResourceType { name: "cpu".into(), unit: "cores".into() },
                ResourceType { name: "memory".into(), unit: "MB".into() },
            ],
            applications: vec![Application { id: "app-0".into(), required_throughput: 10.0 }],
            pms: vec![
                PhysicalMachine { id: "pm-0".into(), capacity: ResourceVector(vec![4.0, 4096.0]) },
                PhysicalMachine { id: "pm-1".into(), capacity: ResourceVector(vec![4.0, 4096.0]) },
            ],
            vm_types: vec![VmType { id: "vm-0".into(), config: ResourceVector(vec![2.0, 2048.0]) }],
            profile: PerformanceProfile { entries: vec![vec![vec![6.0], vec![6.0]]] },
        }
    }

    #[test]
    fn valid_problem_has_no_violations() {
        assert!(validate_problem(&small_problem()).is_empty());
    }

    #[test]
    fn negative_capacity_is_flagged_once() {
        let mut p = small_problem();
        p.pms[1].capacity.0[0] = -1.0;
        let violations = validate_problem(&p);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].path, "pms[1].capacity[0]");
    }

    #[test]
    fn missing_profile_entry_is_a_completeness_violation() {
        let mut p = small_problem();
        p.profile.entries[0][1].clear();
        let violations = validate_problem(&p);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].path, "profile[0][1]");
    }

    #[test]
    fn all_zero_vm_type_is_rejected() {
        let mut p = small_problem();
        p.vm_types[0].config = ResourceVector(vec![0.0, 0.0]);
        let violations = validate_problem(&p);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].reason.contains("positive in at least one dimension"));
    }

    #[test]
    fn vm_types_required_when_apps_exist() {
        let mut p = small_problem();
        p.vm_types.clear();
        p.profile.entries = vec![vec![vec![], vec![]]];
        let violations = validate_problem(&p);
        assert!(violations.iter().any(|v| v.path == "vm_types"));
    }

    #[test]
    fn check_plan_reports_exact_fill() {
        // Two 2-core VMs on a 4-core PM: slack 0, feasible, satisfied.
        let p = small_problem();
        let plan = DeploymentPlan::from_resolved(
            &p,
            &[ResolvedPlacement { app: 0, pm: 0, vm_type: 0, count: 2 }],
        );
        let report = check_plan(&p, &plan).unwrap();
        assert_eq!(report.pm_slack[0].1, ResourceVector(vec![0.0, 0.0]));
        assert!(report.resource_feasible);
        assert!(report.performance_satisfied);
        assert!(report.z_consistent);
        assert_eq!(report.app_surplus[0].surplus, 2.0);
        assert_eq!(plan_pm_count(&plan), 1);
    }

    #[test]
    fn check_plan_flags_overcommit() {
        let p = small_problem();
        let plan = DeploymentPlan::from_resolved(
            &p,
            &[ResolvedPlacement { app: 0, pm: 0, vm_type: 0, count: 3 }],
        );
        let report = check_plan(&p, &plan).unwrap();
        assert!(!report.resource_feasible);
        assert!(report.performance_satisfied);
    }

    #[test]
    fn check_plan_rejects_dangling_ids() {
        let p = small_problem();
        let mut plan = DeploymentPlan::empty(&p);
        plan.placements.push(Placement {
            app: "nope".into(),
            pm: "pm-0".into(),
            vm_type: "vm-0".into(),
            count: 1,
        });
        assert!(matches!(check_plan(&p, &plan), Err(ModelError::UnknownApp(_))));
    }

    #[test]
    fn check_plan_reports_z_inconsistency() {
        let p = small_problem();
        let mut plan = DeploymentPlan::from_resolved(
            &p,
            &[ResolvedPlacement { app: 0, pm: 0, vm_type: 0, count: 1 }],
        );
        plan.used_pms.insert("pm-1".into());
        let report = check_plan(&p, &plan).unwrap();
        assert!(!report.z_consistent);
    }

    #[test]
    fn problem_json_round_trip() {
        let p = small_problem();
        let parsed = ConsolidationProblem::from_json(&p.to_json()).unwrap();
        assert_eq!(parsed, p);
    }

    #[test]
    fn plan_json_round_trip() {
        let p = small_problem();
        let plan = DeploymentPlan::from_resolved(
            &p,
            &[ResolvedPlacement { app: 0, pm: 1, vm_type: 0, count: 2 }],
        );
        let doc: PlanDocument = serde_json::from_str(&plan.to_json()).unwrap();
        let rebound = DeploymentPlan::from_document(&p, &doc).unwrap();
        assert_eq!(rebound, plan);
    }

    #[test]
    fn plan_files_use_the_type_key() {
        let p = small_problem();
        let plan = DeploymentPlan::from_resolved(
            &p,
            &[ResolvedPlacement { app: 0, pm: 0, vm_type: 0, count: 1 }],
        );
        let json = plan.to_json();
        assert!(json.contains("\"type\": \"vm-0\""));
        assert!(!json.contains("vm_type"));
        assert!(!json.contains("provided"));
    }
}
