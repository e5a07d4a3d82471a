use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use polydist_core::bounds::{bound_bernoulli_tail, exact_bernoulli_tail, mc_bernoulli_tail, BernoulliForm};
use polydist_core::harness::{run, ExperimentConfig, OutputFormat};
use polydist_core::metrics::{smoothing_constant, smoothing_constant_max};

/// Experiments on the distributions of stochastic polynomials.
#[derive(Debug, Parser)]
#[command(name = "polydist", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Structured,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Print only the final verdict.
        #[arg(long)]
        quiet: bool,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// Print the smoothing constants c_k and C_k.
    Constants {
        #[arg(long, default_value_t = 8)]
        max_order: u32,
    },
    /// Exact small-ball probability of a complete Bernoulli form.
    EnumerateTail {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        theta: f64,
        /// Common coefficient of every d-subset.
        #[arg(long, default_value_t = 1.0)]
        value: f64,
        /// Also estimate by Monte Carlo with this many draws.
        #[arg(long)]
        mc_draws: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let cfg = ExperimentConfig::read_file(path).map_err(|e| format!("{}: {e}", path.display()))?;
    cfg.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<Outcome, String> {
    match cli.command {
        Command::Run {
            config,
            seed,
            samples,
            out_dir,
            format,
            quiet,
        } => {
            let mut cfg = ExperimentConfig::read_file(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = samples {
                cfg.samples = n;
            }
            if let Some(d) = out_dir {
                cfg.out_dir = Some(d);
            }
            match format {
                Some(Format::Csv) => cfg.format = OutputFormat::Csv,
                Some(Format::Structured) => cfg.format = OutputFormat::Structured,
                None => {}
            }
            let report = run(&cfg).map_err(|e| e.to_string())?;
            if let Some(dir) = &cfg.out_dir {
                let files = report.write(dir, cfg.format).map_err(|e| e.to_string())?;
                if !quiet {
                    for f in files {
                        eprintln!("wrote {}", f.display());
                    }
                }
            }
            if quiet {
                println!("{}", if report.passed() { "PASS" } else { "FAIL" });
            } else {
                print!("{}", report.summary());
            }
            Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!("{}: ok (scenario {})", config.display(), cfg.scenario.tag());
            Ok(Outcome::Pass)
        }
        Command::Constants { max_order } => {
            println!("k,c_k,C_k");
            for k in 0..=max_order {
                let c = smoothing_constant(k).map_err(|e| e.to_string())?;
                let cm = smoothing_constant_max(k).map_err(|e| e.to_string())?;
                println!("{k},{c:.12},{cm:.12}");
            }
            Ok(Outcome::Pass)
        }
        Command::EnumerateTail {
            n,
            degree,
            p,
            theta,
            value,
            mc_draws,
            seed,
        } => {
            let form = BernoulliForm::complete(n, degree, value).map_err(|e| e.to_string())?;
            let exact = exact_bernoulli_tail(&form, p, theta).map_err(|e| e.to_string())?;
            println!("exact {exact}");
            match bound_bernoulli_tail(&form, p, theta) {
                Ok(b) => println!("bound {b}"),
                Err(e) => println!("bound n/a ({e})"),
            }
            if let Some(draws) = mc_draws {
                let mc = mc_bernoulli_tail(&form, p, theta, draws, seed).map_err(|e| e.to_string())?;
                println!("monte-carlo {} [{}, {}]", mc.estimate, mc.ci_low, mc.ci_high);
            }
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
