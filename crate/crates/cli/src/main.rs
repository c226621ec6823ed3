use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dilated_egt::dgf::{DgfWeights, WeightScheme};
use dilated_egt::efg::Player;
use dilated_egt::harness::{self, GameSpec, HarnessError, RunConfig, SolverKind};

#[derive(Parser)]
#[command(
    name = "degt",
    version,
    about = "Solve two-player zero-sum extensive-form games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write telemetry CSV.
    Run(RunArgs),
    /// Run several configs on the same game and merge their curves by traversals.
    Compare {
        /// TOML run configs.
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Merged CSV destination (stdout when absent).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a game artifact.
    Dump {
        #[arg(value_enum)]
        what: DumpKind,
        #[command(flatten)]
        game: GameArgs,
        /// Player whose treeplex or weights to print (1 or 2).
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        player: u8,
        #[arg(long, default_value = "recurrence:2")]
        weights: WeightScheme,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpKind {
    /// Payoff matrix as `row,col,value` CSV.
    Matrix,
    /// Weight table as `simplex_id,alpha,beta,scheme` CSV.
    Weights,
    Treeplex,
    Game,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameKind {
    Leduc,
    Matrix,
    Alternating,
}

#[derive(Args)]
struct GameArgs {
    #[arg(long, value_enum)]
    game: GameKind,
    /// Number of ranks for leduc.
    #[arg(long, default_value_t = 3)]
    cards: usize,
    /// Matrix file, or `rps` / `pennies`.
    #[arg(long)]
    file: Option<String>,
    /// Actions per move for the alternating game.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Moves per player for the alternating game.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GameArgs {
    fn spec(&self) -> Result<GameSpec, HarnessError> {
        Ok(match self.game {
            GameKind::Leduc => GameSpec::leduc(self.cards),
            GameKind::Matrix => GameSpec::Matrix {
                file: self
                    .file
                    .clone()
                    .ok_or_else(|| HarnessError::Config("--game matrix needs --file".into()))?,
            },
            GameKind::Alternating => GameSpec::Alternating {
                k: self.k,
                d: self.d,
            },
        })
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; command-line game flags are then not allowed.
    #[arg(long, conflicts_with = "game")]
    config: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "config")]
    game: Option<GameKind>,
    #[arg(long, default_value_t = 3)]
    cards: usize,
    #[arg(long)]
    file: Option<String>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value = "egt")]
    solver: SolverKind,
    #[arg(long, default_value = "recurrence:2")]
    weights: WeightScheme,
    #[arg(long, default_value_t = 1.0)]
    mu_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    mu_ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    dgf_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    target_eps: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    checkpoints_per_doubling: u32,
    /// Leave `wall_ms` empty so reruns produce identical CSV.
    #[arg(long)]
    no_timing: bool,
    /// Telemetry CSV destination (overrides the config's `output`).
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => {
                let game = GameArgs {
                    game: self.game.expect("clap enforces --game"),
                    cards: self.cards,
                    file: self.file.clone(),
                    k: self.k,
                    d: self.d,
                    seed: self.seed,
                }
                .spec()?;
                RunConfig {
                    name: None,
                    game,
                    solver: self.solver,
                    weights: self.weights,
                    mu_scale: self.mu_scale,
                    mu_ratio: self.mu_ratio,
                    dgf_scale: self.dgf_scale,
                    target_eps: self.target_eps,
                    max_iters: self.max_iters,
                    seed: self.seed,
                    output: None,
                    checkpoints_per_doubling: self.checkpoints_per_doubling,
                    timing: !self.no_timing,
                }
            }
        };
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        if self.no_timing {
            cfg.timing = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| HarnessError::Io {
            path: p.into(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let report = harness::run_config(&cfg)?;
            match &cfg.output {
                Some(path) => {
                    write_or_print(Some(path), &report.csv())?;
                    println!("{}", report.summary());
                }
                None => {
                    print!("{}", report.csv());
                    eprintln!("{}", report.summary());
                }
            }
        }
        Command::Compare { configs, output } => {
            let cfgs = configs
                .iter()
                .map(|p| RunConfig::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let (reports, merged) = harness::compare(&cfgs)?;
            write_or_print(output.as_deref(), &merged)?;
            for r in &reports {
                eprintln!("{}", r.summary());
            }
        }
        Command::Dump {
            what,
            game,
            player,
            weights,
        } => {
            let spec = game.spec()?;
            let player = if player == 1 {
                Player::One
            } else {
                Player::Two
            };
            let text = match what {
                DumpKind::Game => spec.build(game.seed)?.to_text(),
                other => {
                    let mut cfg = RunConfig::new(spec, SolverKind::Egt);
                    cfg.seed = game.seed;
                    let p = harness::build_problem(&cfg)?;
                    let plex = p.plex(player);
                    match other {
                        DumpKind::Matrix => p.a.to_csv(),
                        DumpKind::Treeplex => plex.to_text(),
                        _ => DgfWeights::build(weights, plex, &plex.compute_stats())?.to_csv(),
                    }
                }
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
