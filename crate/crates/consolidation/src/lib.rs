//! Server consolidation for multi-tier applications.
//!
//! The problem: a set of applications, each with a required throughput, must
//! be deployed as virtual machines onto physical machines so that the number
//! of powered-on PMs is minimized while every application still reaches its
//! required throughput. Per-VM throughput depends on the application, the PM
//! it lands on and the VM type, so the placement couples a vector bin-packing
//! problem with a covering problem.
//!
//! Modules:
//! - [`model`]: problem/plan data types, validation and feasibility checking.
//! - [`ilp`]: the integer-program view, an exact branch-and-bound solver and
//!   an LP-format exporter.
//! - [`heuristic`]: the 3MAX greedy solver.
//! - [`repack`]: first-fit-decreasing and least-loaded repacking baselines.
//! - [`workload`]: trace handling, arrival generation and workload-change
//!   detectors (chi-squared and F-test).
//! - [`sim`]: trace-driven consolidation simulation, the replication suite,
//!   scalability benchmarks and detector sensitivity runs.

pub mod heuristic;
pub mod ilp;
pub mod model;
pub mod repack;
pub mod sim;
pub mod workload;
