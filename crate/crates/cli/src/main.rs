use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use octoarm_cli::check::run_checks;
use octoarm_cli::runner::RunOutcome;
use octoarm_cli::{
    run_grasping, run_reaching, run_simulation, OutputDir, RunError, RunOptions, ScenarioConfig,
};
use rayon::prelude::*;

/// Design activations for a muscular arm and simulate its motion.
#[derive(Debug, Parser)]
#[command(name = "octoarm", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VerbKind {
    Reach,
    Grasp,
    Simulate,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Scenario file; repeat to run several scenarios.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// Output directory. With several configs each gets a subdirectory named after its file.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the optimizer iteration budget.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Override the time step [s].
    #[arg(long)]
    dt: Option<f64>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
    /// Worker threads for independent scenarios and cold-started targets.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Design activations for each waypoint and simulate the reaching motion.
    Reach(Common),
    /// Design a grasp around the configured object and simulate it.
    Grasp(Common),
    /// Simulate fixed activations.
    Simulate(Common),
    /// Run seeded invariant checks on the configured arm.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print a configuration in canonical form.
    Dump {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path, common: Option<&Common>) -> Result<ScenarioConfig, RunError> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(c) = common {
        if let Some(n) = c.max_iters {
            cfg = cfg.with_override("max_iters", &n.to_string())?;
        }
        if let Some(dt) = c.dt {
            cfg = cfg.with_override("dt", &format!("{dt} s"))?;
        }
    }
    Ok(cfg)
}

fn run_one(
    kind: VerbKind,
    path: &Path,
    out: &Path,
    common: &Common,
) -> Result<RunOutcome, RunError> {
    let cfg = load(path, Some(common))?;
    let dir = OutputDir::create(out)?;
    let opts = RunOptions {
        quiet: common.quiet,
    };
    Ok(match kind {
        VerbKind::Reach => RunOutcome::Reach(run_reaching(&cfg, &dir, &opts)?),
        VerbKind::Grasp => RunOutcome::Grasp(run_grasping(&cfg, &dir, &opts)?),
        VerbKind::Simulate => {
            RunOutcome::Simulate(run_simulation(&cfg, path.parent(), &dir, &opts)?)
        }
    })
}

fn run_scenarios(kind: VerbKind, common: &Common) -> i32 {
    let multiple = common.config.len() > 1;
    let dirs: Vec<PathBuf> = common
        .config
        .iter()
        .map(|p| {
            if multiple {
                common.out.join(p.file_stem().unwrap_or_default())
            } else {
                common.out.clone()
            }
        })
        .collect();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.max(1))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return 1;
        }
    };
    let results: Vec<Result<RunOutcome, RunError>> = pool.install(|| {
        common
            .config
            .par_iter()
            .zip(&dirs)
            .map(|(path, dir)| run_one(kind, path, dir, common))
            .collect()
    });
    let mut code = 0;
    for (path, result) in common.config.iter().zip(results) {
        match result {
            Ok(outcome) if outcome.failures() > 0 => {
                eprintln!(
                    "error: {}: {} target(s) failed",
                    path.display(),
                    outcome.failures()
                );
                code = code.max(3);
            }
            Ok(_) => {}
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                code = code.max(e.exit_code());
            }
        }
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.verb {
        Verb::Reach(c) => run_scenarios(VerbKind::Reach, c),
        Verb::Grasp(c) => run_scenarios(VerbKind::Grasp, c),
        Verb::Simulate(c) => run_scenarios(VerbKind::Simulate, c),
        Verb::Check { config } => match load(config, None) {
            Ok(cfg) => {
                let results = run_checks(&cfg);
                for r in &results {
                    println!("{}", r.line());
                }
                if results.iter().all(|r| r.passed) {
                    0
                } else {
                    3
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Verb::Dump { config } => match load(config, None) {
            Ok(cfg) => {
                print!("{}", cfg.dump());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
