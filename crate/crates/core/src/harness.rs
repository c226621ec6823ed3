//! Benchmark harness: run configurations, telemetry, and run comparison.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgf::{DgfContext, DgfError, WeightScheme};
use crate::efg::game::{matching_pennies, parse_matrix, rock_paper_scissors};
use crate::efg::{
    build_alternating_game, build_leduc, build_matrix_game, to_sequence_form, EfgError, GameTree,
    LeducConfig, SequenceFormProblem,
};
use crate::solvers::{
    run, telemetry_csv, CfrSolver, Checkpoints, EgtParams, EgtSolver, RunOptions, RunOutcome,
    SolverError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("cannot compare runs over different games: {0} vs {1}")]
    GameMismatch(String, String),
    #[error(transparent)]
    Efg(#[from] EfgError),
    #[error(transparent)]
    Dgf(#[from] DgfError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GameSpec {
    Leduc {
        cards: usize,
        #[serde(default)]
        ante: Option<f64>,
        #[serde(default)]
        bet_sizes: Option<[f64; 2]>,
        #[serde(default)]
        max_bets: Option<[usize; 2]>,
    },
    /// `file` is `rps`, `pennies`, or a path to a whitespace-separated matrix.
    Matrix { file: String },
    /// Alternating-move game with `k` actions and `d` moves per player.
    Alternating { k: usize, d: usize },
}

impl GameSpec {
    pub fn leduc(cards: usize) -> Self {
        GameSpec::Leduc {
            cards,
            ante: None,
            bet_sizes: None,
            max_bets: None,
        }
    }

    pub fn leduc_config(&self) -> Option<LeducConfig> {
        match self {
            GameSpec::Leduc {
                cards,
                ante,
                bet_sizes,
                max_bets,
            } => {
                let d = LeducConfig::new(*cards);
                Some(LeducConfig {
                    ranks: *cards,
                    ante: ante.unwrap_or(d.ante),
                    bet_sizes: bet_sizes.unwrap_or(d.bet_sizes),
                    max_bets: max_bets.unwrap_or(d.max_bets),
                })
            }
            _ => None,
        }
    }

    pub fn build(&self, seed: u64) -> Result<GameTree, HarnessError> {
        Ok(match self {
            GameSpec::Leduc { .. } => build_leduc(&self.leduc_config().expect("leduc spec"))?,
            GameSpec::Matrix { file } => build_matrix_game(&load_matrix(file)?)?,
            GameSpec::Alternating { k, d } => build_alternating_game(*k, *d, seed)?,
        })
    }

    pub fn label(&self) -> String {
        match self {
            GameSpec::Leduc { cards, .. } => format!("leduc-{cards}"),
            GameSpec::Matrix { file } => format!("matrix-{file}"),
            GameSpec::Alternating { k, d } => format!("alternating-{k}-{d}"),
        }
    }
}

pub fn load_matrix(file: &str) -> Result<Vec<Vec<f64>>, HarnessError> {
    match file {
        "rps" => Ok(rock_paper_scissors()),
        "pennies" => Ok(matching_pennies()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                path: path.into(),
                source,
            })?;
            Ok(parse_matrix(&text)?)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Egt,
    Cfr,
    Cfrplus,
}

impl std::str::FromStr for SolverKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "egt" => Ok(SolverKind::Egt),
            "cfr" => Ok(SolverKind::Cfr),
            "cfrplus" | "cfr+" => Ok(SolverKind::Cfrplus),
            _ => Err(HarnessError::Config(format!("unknown solver `{s}`"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Egt => "egt",
            SolverKind::Cfr => "cfr",
            SolverKind::Cfrplus => "cfrplus",
        })
    }
}

fn default_weights() -> WeightScheme {
    WeightScheme::Recurrence { multiplier: 2.0 }
}
fn one() -> f64 {
    1.0
}
fn default_max_iters() -> u64 {
    1000
}
fn default_per_doubling() -> u32 {
    1
}
fn default_timing() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Label for comparison tables; defaults to `solver:weights`.
    #[serde(default)]
    pub name: Option<String>,
    pub game: GameSpec,
    pub solver: SolverKind,
    #[serde(default = "default_weights")]
    pub weights: WeightScheme,
    #[serde(default = "one")]
    pub mu_scale: f64,
    #[serde(default = "one")]
    pub mu_ratio: f64,
    /// Multiplier on every DGF weight.
    #[serde(default = "one")]
    pub dgf_scale: f64,
    #[serde(default)]
    pub target_eps: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_per_doubling")]
    pub checkpoints_per_doubling: u32,
    /// Record wall-clock times; disable for byte-reproducible CSV.
    #[serde(default = "default_timing")]
    pub timing: bool,
}

impl RunConfig {
    pub fn new(game: GameSpec, solver: SolverKind) -> Self {
        Self {
            name: None,
            game,
            solver,
            weights: default_weights(),
            mu_scale: 1.0,
            mu_ratio: 1.0,
            dgf_scale: 1.0,
            target_eps: 0.0,
            max_iters: default_max_iters(),
            seed: 0,
            output: None,
            checkpoints_per_doubling: 1,
            timing: true,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.into(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.target_eps >= 0.0) {
            return Err(HarnessError::Config(format!(
                "target_eps must be nonnegative, got {}",
                self.target_eps
            )));
        }
        for (name, v) in [
            ("mu_scale", self.mu_scale),
            ("mu_ratio", self.mu_ratio),
            ("dgf_scale", self.dgf_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| match self.solver {
            SolverKind::Egt => format!("egt:{}", self.weights),
            other => other.to_string(),
        })
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            target_eps: self.target_eps,
            max_iters: self.max_iters,
            checkpoints: Checkpoints {
                per_doubling: self.checkpoints_per_doubling,
            },
            stop_check_interval: if self.target_eps > 0.0 { 1 } else { 0 },
            timing: self.timing,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub label: String,
    pub game: GameSpec,
    pub target_eps: f64,
    pub outcome: RunOutcome,
}

impl RunReport {
    pub fn csv(&self) -> String {
        telemetry_csv(&self.outcome.records)
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: eps_sad={:e} traversals={} iterations={} wall_ms={:.1}{}",
            self.label,
            self.outcome.eps_sad,
            self.outcome.traversals,
            self.outcome.iterations,
            self.outcome.wall_ms,
            if self.target_eps > 0.0 && !self.outcome.converged {
                " (target not reached)"
            } else {
                ""
            }
        )
    }
}

/// Environment variable holding the worker-thread count for matrix products.
pub const THREADS_ENV: &str = "DILATED_EGT_THREADS";

/// Thread count from [`THREADS_ENV`], defaulting to 1.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

pub fn build_problem(cfg: &RunConfig) -> Result<SequenceFormProblem, HarnessError> {
    let mut p = to_sequence_form(&cfg.game.build(cfg.seed)?)?;
    p.a.set_threads(threads_from_env());
    Ok(p)
}

pub fn run_config(cfg: &RunConfig) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    let problem = Arc::new(build_problem(cfg)?);
    run_on(cfg, problem)
}

/// Runs `cfg` on an already-extracted problem.
pub fn run_on(
    cfg: &RunConfig,
    problem: Arc<SequenceFormProblem>,
) -> Result<RunReport, HarnessError> {
    let opts = cfg.options();
    let outcome = match cfg.solver {
        SolverKind::Egt => {
            let cx = DgfContext::with_scheme(problem.x_plex.clone(), cfg.weights, cfg.dgf_scale)?;
            let cy = DgfContext::with_scheme(problem.y_plex.clone(), cfg.weights, cfg.dgf_scale)?;
            let params = EgtParams {
                mu_scale: cfg.mu_scale,
                mu_ratio: cfg.mu_ratio,
            };
            let mut s = EgtSolver::new(Arc::clone(&problem), cx, cy, params)?;
            run(&mut s, &problem, &opts)?
        }
        SolverKind::Cfr | SolverKind::Cfrplus => {
            let mut s = CfrSolver::new(Arc::clone(&problem), cfg.solver == SolverKind::Cfrplus);
            run(&mut s, &problem, &opts)?
        }
    };
    Ok(RunReport {
        label: cfg.label(),
        game: cfg.game.clone(),
        target_eps: cfg.target_eps,
        outcome,
    })
}

/// Aligns runs on the traversal axis: one row per recorded traversal count
/// of any run, each entry holding that run's latest residual at or below it.
pub fn align_reports(reports: &[RunReport]) -> Result<Vec<(u64, Vec<Option<f64>>)>, HarnessError> {
    if let Some(first) = reports.first() {
        if let Some(other) = reports.iter().find(|r| r.game != first.game) {
            return Err(HarnessError::GameMismatch(
                first.game.label(),
                other.game.label(),
            ));
        }
    }
    let axis: BTreeSet<u64> = reports
        .iter()
        .flat_map(|r| r.outcome.records.iter().map(|c| c.traversals))
        .collect();
    Ok(axis
        .into_iter()
        .map(|t| {
            let row = reports
                .iter()
                .map(|r| {
                    r.outcome
                        .records
                        .iter()
                        .take_while(|c| c.traversals <= t)
                        .last()
                        .map(|c| c.eps_sad)
                })
                .collect();
            (t, row)
        })
        .collect())
}

/// CSV form of [`align_reports`]; entries before a run's first checkpoint are empty.
pub fn merge_reports(reports: &[RunReport]) -> Result<String, HarnessError> {
    let rows = align_reports(reports)?;
    let mut out = String::from("traversals");
    for r in reports {
        let _ = write!(out, ",{}", r.label);
    }
    out.push('\n');
    for (t, row) in rows {
        let _ = write!(out, "{t}");
        for v in row {
            match v {
                Some(e) => {
                    let _ = write!(out, ",{e:e}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Runs every config (rejecting mixed games before running) and merges the results.
pub fn compare(configs: &[RunConfig]) -> Result<(Vec<RunReport>, String), HarnessError> {
    if let Some(first) = configs.first() {
        if let Some(other) = configs
            .iter()
            .find(|c| c.game != first.game || c.seed != first.seed)
        {
            return Err(HarnessError::GameMismatch(
                first.game.label(),
                other.game.label(),
            ));
        }
    }
    let reports = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run_config(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let merged = merge_reports(&reports)?;
    Ok((reports, merged))
}
