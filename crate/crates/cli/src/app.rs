//! Command-line front end. Exit codes: 0 success, 1 configuration or usage
//! error, 2 any run failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rankregime_core::init::{generate, InitKind, InitSpec};
use rankregime_core::rnn::gradcheck_suite;
use rankregime_core::tensor::{eigenvalues, Rng};

use crate::config::{parse_config_with_base, parse_init_json, TheoryConfig};
use crate::error::{io, CliError};
use crate::runner::{run_experiment, run_theory_check};
use crate::svg::{spectrum_points, write_spectrum_svg, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUN: i32 = 2;

/// Analytic-vs-numeric gradient tolerance for `gradcheck`.
pub const GRADCHECK_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "rankregime", version, about = "Rank-dependent rich/lazy learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Parallel runs (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot |λ_i|/|λ_1| vs i/N of one initialization next to its Gaussian null.
    Spectrum {
        /// Inline JSON or a path to a JSON file, e.g. {"kind":"dale","frac_exc":0.8,"N":300}.
        #[arg(long)]
        init: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the expected kernel alignment formula with simulation.
    TheoryCheck {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1e-3)]
        sigma: f64,
        #[arg(long, default_value_t = 200)]
        tasks: usize,
        /// Hidden width of the linear student.
        #[arg(long = "width", default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Allowed |empirical − formula|.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// Finite-difference check of the recurrent network's gradients.
    Gradcheck {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn config_failure(e: impl std::fmt::Display) -> i32 {
    eprintln!("configuration error: {e}");
    EXIT_CONFIG
}

fn run_failure(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_RUN
}

fn cmd_run(config_path: &Path, workers: Option<usize>, out: Option<PathBuf>) -> i32 {
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => return config_failure(io(config_path, e)),
    };
    let base = config_path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut config = match parse_config_with_base(&text, base) {
        Ok(c) => c,
        Err(e) => return config_failure(format!("{}: {e}", config_path.display())),
    };
    if let Some(out) = out {
        config.output_dir = out;
    }
    if let Err(e) = crate::runner::prepare_output_dir(&config.output_dir) {
        return config_failure(format!("output_dir: {e}"));
    }
    let workers = workers.unwrap_or_else(default_workers);
    match run_experiment(&config, &text, workers) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            if outcome.failures > 0 {
                eprintln!("{} run(s) failed", outcome.failures);
                EXIT_RUN
            } else {
                EXIT_OK
            }
        }
        Err(e @ CliError::Config(_)) => config_failure(e),
        Err(e) => run_failure(e),
    }
}

fn cmd_spectrum(init: &str, out: &Path) -> i32 {
    let text = if init.trim_start().starts_with('{') {
        init.to_string()
    } else {
        match std::fs::read_to_string(init) {
            Ok(t) => t,
            Err(e) => return config_failure(io(init, e)),
        }
    };
    let (spec, seed) = match parse_init_json(&text) {
        Ok(v) => v,
        Err(e) => return config_failure(e),
    };
    let null = InitSpec::new(InitKind::Gaussian, spec.gain, spec.n);
    let mut series = Vec::new();
    for (k, s) in [&spec, &null].into_iter().enumerate() {
        let spectrum = match generate(s, &mut Rng::new(seed)).and_then(|w| eigenvalues(&w)) {
            Ok(sp) => sp,
            Err(e) => return run_failure(e),
        };
        let label = if k == 0 { s.kind.name().to_string() } else { "gaussian null".to_string() };
        series.push(Series::points(&label, k, spectrum_points(&spectrum, spec.n)));
    }
    match write_spectrum_svg(&series, out) {
        Ok(()) => {
            println!("wrote {}", out.display());
            EXIT_OK
        }
        Err(e) => run_failure(e),
    }
}

fn cmd_theory(cfg: TheoryConfig, seed: u64) -> i32 {
    if cfg.d == 0 || cfg.tasks < 2 || cfg.n < cfg.d || !(cfg.sigma > 0.0) {
        return config_failure("need d ≥ 1, tasks ≥ 2, width ≥ d and sigma > 0");
    }
    match run_theory_check(&cfg, seed) {
        Ok(r) => {
            println!("{}", serde_json::to_string_pretty(&r.to_json()).unwrap_or_default());
            if r.passed() {
                EXIT_OK
            } else {
                eprintln!("theory check outside tolerance");
                EXIT_RUN
            }
        }
        Err(e @ CliError::Lab(rankregime_core::LabError::Parameter { .. })) => config_failure(e),
        Err(e) => run_failure(e),
    }
}

fn cmd_gradcheck(instances: usize, h: f64, seed: u64) -> i32 {
    match gradcheck_suite(seed, instances, h) {
        Ok(r) => {
            println!(
                "max relative error {:.3e} over {} coordinates in {} instances ({} skipped at ReLU kinks)",
                r.max_rel_error, r.checked, r.instances, r.skipped_kinks
            );
            if r.max_rel_error <= GRADCHECK_TOL {
                EXIT_OK
            } else {
                EXIT_RUN
            }
        }
        Err(e) => run_failure(e),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run { config, workers, out } => cmd_run(&config, workers, out),
        Command::Spectrum { init, out } => cmd_spectrum(&init, &out),
        Command::TheoryCheck {
            d,
            sigma,
            tasks,
            n,
            seed,
            tolerance,
        } => cmd_theory(
            TheoryConfig {
                d,
                sigma,
                tasks,
                n,
                tolerance,
                ..TheoryConfig::default()
            },
            seed,
        ),
        Command::Gradcheck { instances, h, seed } => cmd_gradcheck(instances, h, seed),
    }
}
