//! `consolidate`: solve, simulate and benchmark VM consolidation problems.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 demand not
//! satisfiable (the plan, if any, is still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use consolidation::heuristic::three_max;
use consolidation::ilp::{build_ilp, export_lp, solve_exact, SolveStatus, DEFAULT_NODE_LIMIT};
use consolidation::model::{plan_pm_count, validate_problem, ConsolidationProblem, DeploymentPlan};
use consolidation::sim::{
    run_scalability, run_sensitivity, run_sim, write_metrics_csv, write_plans_json,
    write_scalability_csv, write_sensitivity_csv, write_summary_csv, BenchConfig,
    SensitivityConfig, SimConfig,
};
use consolidation::workload::{read_traces, DetectorTest};

#[derive(Parser)]
#[command(name = "consolidate", version, about = "VM consolidation solver and simulator")]
struct Cli {
    /// Overrides every seed in the loaded configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a deployment plan for a problem file.
    Solve {
        /// Problem JSON file.
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::ThreeMax)]
        algorithm: AlgorithmArg,
        /// Output directory (plan.json, summary.txt).
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the consolidation integer program in LP text format.
    ExportLp {
        #[arg(long)]
        problem: PathBuf,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a problem file and report structural violations.
    Validate {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Replay demand traces, consolidating every period.
    Simulate {
        /// Config JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (metrics.csv, summary.csv, plans.json).
        #[arg(long)]
        out: PathBuf,
    },
    /// Time consolidation decisions across scaled systems.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Fleet scale factors, comma separated (overrides the config).
        #[arg(long, value_delimiter = ',')]
        fpm: Option<Vec<u32>>,
        /// App scale factors, comma separated (overrides the config).
        #[arg(long, value_delimiter = ',')]
        fapp: Option<Vec<u32>>,
        /// Worker threads for independent rows (overrides the config).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (scalability.csv).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the workload-evaluation sensitivity experiment.
    Sensitivity {
        #[arg(long)]
        config: PathBuf,
        /// Detector override: chi2, f, or oracle (ground truth).
        #[arg(long, value_enum)]
        detector: Option<DetectorArg>,
        /// Output directory (sensitivity.csv).
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    #[value(name = "3max")]
    ThreeMax,
    #[value(name = "exact")]
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorArg {
    #[value(name = "chi2")]
    Chi2,
    #[value(name = "f")]
    F,
    #[value(name = "oracle")]
    Oracle,
}

/// Simulation config file: either explicit `problem` and `traces` paths
/// (relative to the config file) or a generated `replication` system.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    problem: Option<PathBuf>,
    traces: Option<PathBuf>,
    replication: Option<consolidation::sim::ReplicationConfig>,
    #[serde(default)]
    sim: SimConfig,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Help goes to stdout, errors to stderr, as clap intends.
            e.print().ok();
            return Ok(ExitCode::from(code));
        }
    };
    match cli.command {
        Command::Solve { ref problem, algorithm, ref out } => {
            cmd_solve(problem, algorithm, out)
        }
        Command::ExportLp { ref problem, ref out } => cmd_export_lp(problem, out),
        Command::Validate { ref problem } => cmd_validate(problem),
        Command::Simulate { ref config, ref out } => cmd_simulate(config, out, cli.seed),
        Command::Bench { ref config, ref fpm, ref fapp, jobs, ref out } => {
            cmd_bench(config, fpm.clone(), fapp.clone(), jobs, out, cli.seed)
        }
        Command::Sensitivity { ref config, detector, ref out } => {
            cmd_sensitivity(config, detector, out, cli.seed)
        }
    }
}

fn load_problem(path: &Path) -> Result<ConsolidationProblem> {
    let problem = ConsolidationProblem::load(path)
        .with_context(|| format!("loading problem {}", path.display()))?;
    let violations = validate_problem(&problem);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        bail!("{} is not a valid problem ({} violations)", path.display(), violations.len());
    }
    Ok(problem)
}

fn plan_summary(
    problem: &ConsolidationProblem,
    algorithm: &str,
    status: &str,
    plan: Option<&DeploymentPlan>,
    unmet: &[(String, f64)],
) -> String {
    let mut text = String::new();
    text.push_str(&format!("algorithm: {algorithm}\n"));
    text.push_str(&format!("status: {status}\n"));
    text.push_str(&format!(
        "pms_used: {}\n",
        plan.map(plan_pm_count).unwrap_or(0)
    ));
    if let Some(plan) = plan {
        for app in &problem.applications {
            let required = app.required_throughput;
            let provided = plan.provided.get(&app.id).copied().unwrap_or(0.0);
            if required > 0.0 {
                let rd = (provided - required) / required;
                text.push_str(&format!(
                    "app {}: required {required} provided {provided} rd {rd}\n",
                    app.id
                ));
            } else {
                text.push_str(&format!(
                    "app {}: required {required} provided {provided} rd n/a\n",
                    app.id
                ));
            }
        }
    }
    for (id, shortfall) in unmet {
        text.push_str(&format!("unmet {id}: shortfall {shortfall}\n"));
    }
    text
}

fn cmd_solve(problem_path: &Path, algorithm: AlgorithmArg, out: &Path) -> Result<ExitCode> {
    let problem = load_problem(problem_path)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;

    let (plan, summary, code) = match algorithm {
        AlgorithmArg::ThreeMax => {
            let result = three_max(&problem).expect("problem validated above");
            let status = if result.all_satisfied { "satisfied" } else { "unmet" };
            let summary =
                plan_summary(&problem, "3max", status, Some(&result.plan), &result.unmet);
            let code = if result.all_satisfied { 0 } else { 2 };
            (Some(result.plan), summary, code)
        }
        AlgorithmArg::Exact => {
            let model = build_ilp(&problem).expect("problem validated above");
            let solution = solve_exact(&model, DEFAULT_NODE_LIMIT)?;
            match solution.status {
                SolveStatus::Optimal => {
                    let plan = solution.plan.expect("optimal implies plan");
                    let summary = plan_summary(&problem, "exact", "satisfied", Some(&plan), &[]);
                    (Some(plan), summary, 0)
                }
                SolveStatus::Infeasible => {
                    let summary = plan_summary(&problem, "exact", "infeasible", None, &[]);
                    (None, summary, 2)
                }
                SolveStatus::NodeLimit => {
                    bail!("exact solver hit the node limit before proving optimality")
                }
            }
        }
    };

    if let Some(plan) = &plan {
        std::fs::write(out.join("plan.json"), plan.to_json())
            .with_context(|| format!("writing {}", out.join("plan.json").display()))?;
    }
    std::fs::write(out.join("summary.txt"), &summary)
        .with_context(|| format!("writing {}", out.join("summary.txt").display()))?;
    print!("{summary}");
    Ok(ExitCode::from(code))
}

fn cmd_export_lp(problem_path: &Path, out: &Path) -> Result<ExitCode> {
    let problem = load_problem(problem_path)?;
    let model = build_ilp(&problem).expect("problem validated above");
    std::fs::write(out, export_lp(&model))
        .with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(problem_path: &Path) -> Result<ExitCode> {
    let problem = ConsolidationProblem::load(problem_path)
        .with_context(|| format!("loading problem {}", problem_path.display()))?;
    let violations = validate_problem(&problem);
    if violations.is_empty() {
        println!(
            "ok: {} apps, {} pms, {} vm types, {} resources",
            problem.num_apps(),
            problem.num_pms(),
            problem.num_vm_types(),
            problem.num_resources()
        );
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            eprintln!("{v}");
        }
        bail!("{} violations", violations.len());
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn cmd_simulate(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<ExitCode> {
    let mut config: SimulateConfig = read_config(config_path)?;
    if let Some(seed) = seed {
        config.sim.seed = seed;
        if let Some(rep) = &mut config.replication {
            rep.seed = seed;
        }
    }
    let base = config_path.parent().unwrap_or(Path::new("."));

    let (problem, traces) = match (&config.problem, &config.traces, &config.replication) {
        (Some(problem), Some(traces), None) => {
            let problem = load_problem(&resolve(base, problem))?;
            let traces_path = resolve(base, traces);
            let traces = read_traces(&traces_path, config.sim.period_seconds)
                .with_context(|| format!("reading traces {}", traces_path.display()))?;
            (problem, traces)
        }
        (None, None, Some(rep)) => {
            let mut rep = *rep;
            // The sim section's scale factors select the generated system
            // size; explicit values win over the replication section.
            if config.sim.f_pm != 1 {
                rep.f_pm = config.sim.f_pm;
            }
            if config.sim.f_app != 1 {
                rep.f_app = config.sim.f_app;
            }
            let problem = consolidation::sim::replication_problem(&rep)?;
            let traces = consolidation::sim::replication_traces(&problem, &rep)?;
            (problem, traces)
        }
        _ => bail!(
            "config must provide either both \"problem\" and \"traces\" or a \"replication\" section"
        ),
    };

    let output = run_sim(&problem, &traces, &config.sim)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    write_metrics_csv(&out.join("metrics.csv"), &output.metrics)?;
    write_summary_csv(&out.join("summary.csv"), &output.metrics)?;
    write_plans_json(&out.join("plans.json"), &output.plans)?;
    println!(
        "simulated {} periods: ord {}, mean pms {}",
        output.metrics.pm_counts.len(),
        output.metrics.ord,
        output.metrics.mean_pm_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(
    config_path: &Path,
    fpm: Option<Vec<u32>>,
    fapp: Option<Vec<u32>>,
    jobs: Option<usize>,
    out: &Path,
    seed: Option<u64>,
) -> Result<ExitCode> {
    let mut cfg: BenchConfig = read_config(config_path)?;
    if let Some(seed) = seed {
        cfg.replication.seed = seed;
    }
    if let Some(fpm) = fpm {
        cfg.f_pm = fpm;
    }
    if let Some(fapp) = fapp {
        cfg.f_app = fapp;
    }
    if let Some(jobs) = jobs {
        cfg.jobs = jobs;
    }
    let rows = run_scalability(&cfg)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    write_scalability_csv(&out.join("scalability.csv"), &rows)?;
    for row in &rows {
        println!("p {} a {}: mean {} ms, ord {}", row.p, row.a, row.mean_time_ms, row.ord);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sensitivity(
    config_path: &Path,
    detector: Option<DetectorArg>,
    out: &Path,
    seed: Option<u64>,
) -> Result<ExitCode> {
    let mut cfg: SensitivityConfig = read_config(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
        cfg.replication.seed = seed;
    }
    match detector {
        None => {}
        Some(DetectorArg::Oracle) => cfg.detector = None,
        Some(arg) => {
            let test = match arg {
                DetectorArg::Chi2 => DetectorTest::Chi2,
                DetectorArg::F => DetectorTest::F,
                DetectorArg::Oracle => unreachable!("handled above"),
            };
            let mut dc = cfg.detector.unwrap_or_default();
            dc.test = test;
            cfg.detector = Some(dc);
        }
    }
    let metrics = run_sensitivity(&cfg)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    write_sensitivity_csv(&out.join("sensitivity.csv"), std::slice::from_ref(&metrics))?;
    println!(
        "{}: consolidation ord {}, #E {}, #T {}, #CNT {}",
        metrics.detector, metrics.consolidation_ord, metrics.count_e, metrics.count_t,
        metrics.count_cnt
    );
    Ok(ExitCode::SUCCESS)
}
