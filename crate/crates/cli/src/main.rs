use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mmgauss::verify::{invariant_suite, oracle_equivalence, SqueezerConvention, EQUIVALENCE_TOL};

mod config;
mod run;
mod svg;

use config::RunConfig;

/// Heralded Hong-Ou-Mandel simulations with multimode Gaussian states.
#[derive(Parser, Debug)]
#[command(name = "mmgauss", version)]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for CSV and SVG output.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Validate the config and print the plan without computing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Check the Gaussian pipeline against the Fock oracle and run the invariant suite.
    Verify {
        /// Random circuits compared against the oracle.
        #[arg(long, default_value_t = 50)]
        configs: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Squeezer sign convention of the Gaussian side (`conjugated` is a deliberate mutation).
        #[arg(long, value_enum, default_value_t = Convention::Standard)]
        squeezer: Convention,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Convention {
    Standard,
    Conjugated,
}

fn verify(configs: usize, seed: u64, convention: Convention) -> ExitCode {
    let convention = match convention {
        Convention::Standard => SqueezerConvention::Standard,
        Convention::Conjugated => SqueezerConvention::Conjugated,
    };
    let mut rows: Vec<(String, bool, String)> = Vec::new();
    match oracle_equivalence(configs, seed, convention) {
        Ok(r) => rows.push((
            "oracle equivalence".into(),
            r.passed(),
            format!(
                "{} configs, {} comparisons, max deviation {:.2e} (tol {EQUIVALENCE_TOL:.0e}), worst config {}",
                r.configs, r.comparisons, r.max_deviation, r.worst_config
            ),
        )),
        Err(e) => rows.push(("oracle equivalence".into(), false, format!("error: {e}"))),
    }
    match invariant_suite() {
        Ok(checks) => rows.extend(checks.into_iter().map(|c| (c.name.to_string(), c.passed, c.detail))),
        Err(e) => rows.push(("invariant suite".into(), false, format!("error: {e}"))),
    }
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (name, passed, detail) in &rows {
        println!("{name:<width$}  {}  {detail}", if *passed { "PASS" } else { "FAIL" });
    }
    let failed = rows.iter().filter(|r| !r.1).count();
    if failed == 0 {
        println!("all {} checks passed", rows.len());
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} checks failed", rows.len());
        ExitCode::from(4)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::Run { config, dry_run } => {
            let plan = match RunConfig::load(&config).and_then(|c| c.plan()) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            if dry_run {
                println!(
                    "{}: {} values on axis {}, N_f = {}, {} detector, output {}",
                    plan.experiment.name(),
                    plan.values.len(),
                    plan.axis.map_or("none", |a| a.name()),
                    plan.template.grid.n_bins(),
                    plan.template.detector.name(),
                    plan.output
                );
                return ExitCode::SUCCESS;
            }
            match run::run(&plan, &cli.output_dir) {
                Ok(summary) => {
                    println!("{summary}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
            }
        }
        Command::Verify { configs, seed, squeezer } => verify(configs, seed, squeezer),
    }
}
