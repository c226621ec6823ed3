//! Iterative equilibrium solvers and convergence telemetry.
//!
//! Effort is measured in tree traversals: one `A v` or `Aᵀ v` product for
//! EGT, one gradient pass per player for CFR. Saddle-residual evaluations
//! made for telemetry are never counted.

pub mod cfr;
pub mod egt;

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

pub use cfr::{CfrSolver, RegretTable};
pub use egt::{EgtParams, EgtSolver, EgtState, ExcessiveGap};

use crate::dgf::DgfError;
use crate::efg::{saddle_residual, EfgError, SequenceFormProblem};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("mu_scale must be positive and finite, got {0}")]
    MuScale(f64),
    #[error("non-finite values at iteration {iteration} ({context})")]
    NonFinite { iteration: u64, context: String },
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Efg(#[from] EfgError),
    #[error(transparent)]
    Dgf(#[from] DgfError),
}

/// Common driver interface for EGT and CFR.
pub trait IterativeSolver {
    fn step(&mut self) -> Result<(), SolverError>;
    fn iteration(&self) -> u64;
    fn traversals(&self) -> u64;
    /// The strategy pair whose saddle residual is reported.
    fn strategies(&self) -> (Vec<f64>, Vec<f64>);
    /// `(μ1, μ2)` for smoothing-based solvers.
    fn smoothing(&self) -> Option<(f64, f64)>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub iteration: u64,
    pub traversals: u64,
    pub eps_sad: f64,
    pub mu: Option<(f64, f64)>,
    /// Elapsed milliseconds, absent when timing is disabled.
    pub wall_ms: Option<f64>,
}

/// Iterations at which telemetry is recorded: `round(2^(k / per_doubling))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoints {
    pub per_doubling: u32,
}

impl Default for Checkpoints {
    fn default() -> Self {
        Self { per_doubling: 1 }
    }
}

impl Checkpoints {
    /// First checkpoint strictly after iteration `t`.
    pub fn next_after(&self, t: u64) -> u64 {
        let d = self.per_doubling.max(1) as f64;
        let mut k = ((t.max(1) as f64).log2() * d).floor() as i64 - 1;
        loop {
            let c = 2f64.powf(k as f64 / d).round() as u64;
            if c > t {
                return c;
            }
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Stop once the saddle residual is at most this value.
    pub target_eps: f64,
    pub max_iters: u64,
    pub checkpoints: Checkpoints,
    /// Evaluate the stopping rule every this many iterations (0 = only at checkpoints).
    pub stop_check_interval: u64,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            target_eps: 0.0,
            max_iters: 1000,
            checkpoints: Checkpoints::default(),
            stop_check_interval: 1,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub eps_sad: f64,
    pub iterations: u64,
    pub traversals: u64,
    /// Whether `target_eps` was reached before the iteration budget ran out.
    pub converged: bool,
    pub wall_ms: f64,
}

/// Steps `solver` until the target residual or the iteration budget is hit,
/// recording telemetry at checkpoints and at the final iteration.
pub fn run<S: IterativeSolver>(
    solver: &mut S,
    problem: &SequenceFormProblem,
    opts: &RunOptions,
) -> Result<RunOutcome, SolverError> {
    let start = Instant::now();
    let elapsed = |timing: bool| timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let mut records = Vec::new();
    let mut next_checkpoint = opts.checkpoints.next_after(solver.iteration());
    let mut last_eps = f64::INFINITY;
    let mut converged = false;
    while solver.iteration() < opts.max_iters {
        solver.step()?;
        let t = solver.iteration();
        let at_checkpoint = t >= next_checkpoint;
        let stop_check = opts.stop_check_interval > 0 && t % opts.stop_check_interval == 0;
        let last = t >= opts.max_iters;
        if !(at_checkpoint || stop_check || last) {
            continue;
        }
        let (x, y) = solver.strategies();
        let eps = saddle_residual(problem, &x, &y)?;
        last_eps = eps;
        converged = eps <= opts.target_eps;
        if at_checkpoint || converged || last {
            records.push(ConvergenceRecord {
                iteration: t,
                traversals: solver.traversals(),
                eps_sad: eps,
                mu: solver.smoothing(),
                wall_ms: elapsed(opts.timing),
            });
            next_checkpoint = opts.checkpoints.next_after(t);
        }
        if converged {
            break;
        }
    }
    let (x, y) = solver.strategies();
    if records.is_empty() {
        last_eps = saddle_residual(problem, &x, &y)?;
        converged = last_eps <= opts.target_eps;
    }
    Ok(RunOutcome {
        records,
        x,
        y,
        eps_sad: last_eps,
        iterations: solver.iteration(),
        traversals: solver.traversals(),
        converged,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

pub const TELEMETRY_HEADER: &str = "iter,traversals,eps_sad,mu1,mu2,wall_ms";

/// Telemetry CSV; absent values are left empty.
pub fn telemetry_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = format!("{TELEMETRY_HEADER}\n");
    for r in records {
        let (mu1, mu2) = r.mu.map_or((String::new(), String::new()), |(a, b)| {
            (format!("{a:e}"), format!("{b:e}"))
        });
        let wall = r.wall_ms.map_or(String::new(), |w| format!("{w:.3}"));
        let _ = writeln!(
            out,
            "{},{},{:e},{mu1},{mu2},{wall}",
            r.iteration, r.traversals, r.eps_sad
        );
    }
    out
}
