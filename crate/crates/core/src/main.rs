use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use skelstop::experiment::{
    fmt_g12, plan_steps, run_experiment, verify_suite, ExperimentConfig, VerifyOptions, DEFAULTS,
};

/// Optimal stopping on random-walk skeletons of Brownian and fractional
/// Brownian motion.
#[derive(Debug, Parser)]
#[command(name = "skelstop", version)]
struct Cli {
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Prints the default configuration and exits.
    #[arg(long)]
    print_defaults: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs a convergence study from a TOML configuration.
    Run { config: PathBuf },
    /// Level and step count for an error budget.
    Plan {
        #[arg(long)]
        e1: f64,
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
    /// Runs the self-check battery.
    Verify {
        /// Doubles the kernel normalising constant (negative control).
        #[arg(long)]
        corrupt_norm_const: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{DEFAULTS}");
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("no command given; see --help");
        return ExitCode::from(2);
    };
    match execute(command, cli.seed, cli.threads, cli.output_dir) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(
    command: Command,
    seed: Option<u64>,
    threads: Option<usize>,
    output_dir: Option<PathBuf>,
) -> skelstop::Result<ExitCode> {
    match command {
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = threads {
                cfg.threads = t;
            }
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            let out = run_experiment(&cfg)?;
            let mut table = Vec::new();
            out.report.write_csv(&mut table)?;
            print!("{}", String::from_utf8_lossy(&table));
            if let Some(slope) = out.report.slope {
                println!("slope ({}) = {}", out.report.reference_label, fmt_g12(slope));
            }
            println!("wrote {} in {:.1} s", out.output_dir.display(), out.wall_time);
            Ok(ExitCode::SUCCESS)
        }
        Command::Plan {
            e1,
            hurst,
            lambda,
            horizon,
        } => {
            let p = plan_steps(e1, lambda, horizon, hurst)?;
            println!("k* = {:.2}", p.k_star);
            println!("eps = {}", fmt_g12(p.eps));
            println!("steps = {}", p.steps);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { corrupt_norm_const } => {
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .map_err(|e| skelstop::Error::Config(e.to_string()))?;
            }
            let report = verify_suite(&VerifyOptions {
                seed: seed.unwrap_or(20240607),
                corrupt_norm_const,
            })?;
            print!("{report}");
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
