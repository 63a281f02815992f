use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fwaffine::suites::{run_suite, Suite, SuiteOptions};
use fwaffine_cli::config::{parse_config, ExperimentConfig};
use fwaffine_cli::experiment::{constants, dry_run, run_experiment, RunOptions};

/// Frank-Wolfe experiments with affine-invariant step sizes.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Global seed. Falls back to the config's `[run] seed`, then FW_AFFINE_SEED,
    /// then 0 (7 for `verify`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent cells (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every strategy × map cell of a config; writes CSV traces and summary.jsonl.
    ///
    /// Config keys and defaults:
    ///   [problem] kind (required: projection | quadratic-erm | logistic-erm),
    ///             dimension (20 projection, 50 ERM), radius = 1, ratio = 1.1,
    ///             samples = 500, dataset, has_header = false
    ///   [map]     condition_numbers = identity, seed (global seed + 1)
    ///   [run]     strategies (required), max_iters = 1000, gap_tol = 1e-10,
    ///             initial_constant = 1, directional_constant, modified_constant, seed
    ///   [output]  dir = out
    #[command(verbatim_doc_comment)]
    Run {
        config: PathBuf,
        /// Output directory (overrides `[output] dir`).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// CSV dataset for ERM problems (overrides `[problem] dataset`).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Print the cell matrix without running.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run a verification suite: geometry, inequalities, invariance, rates or all.
    Verify {
        suite: Suite,
        /// Multiply the certified set constant before the scaling-inequality check.
        #[arg(long)]
        inflate_alpha: Option<f64>,
    },
    /// Print theory constants and the estimated directional constant per map.
    Constants {
        config: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
}

fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var("FW_AFFINE_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| format!("FW_AFFINE_SEED is not an integer: '{s}'")),
        Err(_) => Ok(None),
    }
}

fn options(
    cli: &Cli,
    config: &ExperimentConfig,
    output_dir: Option<PathBuf>,
    dataset: Option<PathBuf>,
) -> Result<RunOptions, String> {
    let seed = match cli.seed.or(config.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    Ok(RunOptions {
        seed,
        jobs: cli.jobs,
        output_dir: output_dir.or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out")),
        dataset,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.6e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, String> {
    match &cli.command {
        Command::Run { config, output_dir, dataset, dry_run: dry } => {
            let cfg = parse_config(config).map_err(|e| format!("{}: {e}", config.display()))?;
            let opts = options(cli, &cfg, output_dir.clone(), dataset.clone())?;
            if *dry {
                print!("{}", dry_run(&cfg, &opts));
                return Ok(true);
            }
            let exp = run_experiment(&cfg, &opts).map_err(|e| e.to_string())?;
            println!("{} (f* {} from {})", exp.problem, fmt_opt(exp.fstar), exp.fstar_source.name());
            for c in &exp.cells {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                let what = match (&c.trace, &c.error) {
                    (_, Some(e)) => format!("error: {e}"),
                    (Some(t), None) => {
                        format!("{} iters, gap {:.3e}, {}", t.steps().len(), t.last().gap, t.terminated_by.name())
                    }
                    (None, None) => String::new(),
                };
                println!("[{status}] {:<20} {:<12} {what}", c.cell.strategy.name(), c.cell.map.name());
                for a in c.assertions.iter().filter(|a| !a.passed) {
                    println!("       {} failed: {}", a.name, a.detail);
                }
            }
            for i in &exp.invariance {
                let r = &i.report;
                println!(
                    "[{}] invariance {:<20} cond {:.0e}: iterate dev {:.2e}, step dev {:.2e}, constant dev {}",
                    if i.passed { "PASS" } else { "FAIL" },
                    r.strategy.name(),
                    r.condition_number,
                    r.iterate_deviation,
                    r.step_deviation,
                    fmt_opt(r.constant_deviation)
                );
            }
            println!("summary: {}", exp.summary.display());
            Ok(exp.passed())
        }
        Command::Verify { suite, inflate_alpha } => {
            let seed = match cli.seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(7),
            };
            let opts = SuiteOptions { seed, alpha_inflation: *inflate_alpha, ..SuiteOptions::default() };
            let mut b = rayon::ThreadPoolBuilder::new();
            if let Some(j) = cli.jobs {
                b = b.num_threads(j.max(1));
            }
            let pool = b.build().map_err(|e| e.to_string())?;
            let results = pool.install(|| run_suite(*suite, &opts));
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} passed, {failed} failed (seed {seed})", results.len() - failed);
            Ok(failed == 0)
        }
        Command::Constants { config, dataset } => {
            let cfg = parse_config(config).map_err(|e| format!("{}: {e}", config.display()))?;
            let opts = options(cli, &cfg, None, dataset.clone())?;
            let rows = constants(&cfg, &opts).map_err(|e| e.to_string())?;
            println!(
                "{:<12} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}",
                "map", "L", "mu", "alpha", "c", "L/(c*alpha)", "estimate"
            );
            for r in rows {
                println!(
                    "{:<12} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}",
                    r.map.name(),
                    fmt_opt(Some(r.theory.smoothness)),
                    fmt_opt(r.theory.strong_convexity),
                    fmt_opt(Some(r.theory.alpha)),
                    fmt_opt(Some(r.theory.c)),
                    fmt_opt(r.bound),
                    fmt_opt(Some(r.estimate)),
                );
            }
            Ok(true)
        }
    }
}
