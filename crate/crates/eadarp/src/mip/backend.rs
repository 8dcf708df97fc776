//! Pluggable 0-1 MILP backend contract.
//!
//! The model layer talks to solvers through a narrow interface: binary
//! variables with linear objective, linear constraints, a time limit, and an
//! incumbent screen that may reject an integer solution by returning lazy
//! cuts. The built-in backend is an LP-based branch-and-bound
//! ([`super::branch_bound::BranchBound`]); `EADARP_BACKEND` selects a
//! registered backend by name.

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Minimization over binary variables.
#[derive(Debug, Clone, Default)]
pub struct MilpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl MilpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub time_limit: Option<std::time::Duration>,
    pub threads: usize,
    pub lazy: bool,
    /// Deterministic tie-breaking seed; the built-in backend is fully
    /// deterministic and ignores it.
    pub seed: u64,
    /// Abort when the lazy-cut pool grows past this bound.
    pub cut_pool_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            time_limit: None,
            threads: 1,
            lazy: false,
            seed: 0,
            cut_pool_limit: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Incumbent found but optimality not proven within the limit.
    Feasible,
    Infeasible,
}

/// Screening decision for an integer incumbent.
pub enum Screen {
    Accept,
    /// Reject and add these (globally valid) cuts.
    Reject(Vec<Constraint>),
}

#[derive(Debug)]
pub struct MilpOutcome {
    pub status: SolveStatus,
    /// Best accepted incumbent: 0/1 values and objective.
    pub best: Option<(Vec<f64>, f64)>,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    pub nodes_explored: usize,
    pub cuts_added: usize,
    pub cpu_secs: f64,
}

pub trait MilpBackend {
    fn name(&self) -> &'static str;

    /// Solve to optimality or until the time limit. `screen` is consulted on
    /// every integer incumbent before acceptance when `opts.lazy` is set.
    fn solve(
        &self,
        problem: &MilpProblem,
        opts: &SolveOptions,
        screen: &mut dyn FnMut(&[f64], f64) -> Screen,
    ) -> Result<MilpOutcome, Error>;
}

/// Backend registry. `EADARP_BACKEND` overrides the default; only the
/// built-in branch-and-bound is registered.
pub fn create_backend(name: Option<&str>) -> Result<Box<dyn MilpBackend>, Error> {
    let chosen = name
        .map(str::to_string)
        .or_else(|| std::env::var("EADARP_BACKEND").ok())
        .unwrap_or_else(|| "bb".to_string());
    match chosen.as_str() {
        "bb" | "branch-bound" => Ok(Box::new(super::branch_bound::BranchBound)),
        other => Err(Error::Backend(format!("unknown backend `{}` (registered: bb)", other))),
    }
}
