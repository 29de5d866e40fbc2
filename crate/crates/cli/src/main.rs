use std::path::PathBuf;
use std::process::ExitCode;

use certsa_cli::commands::{self, PairSource};
use certsa_cli::config::parse_list;
use certsa_cli::report::summary_text;
use certsa_cli::{CliError, CliResult, RunConfig};
use certsa_core::budget::{gaussian_quantile, PrecisionModel};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "certsa", version, about = "Certified reduced-basis Sobol sensitivity analysis of a viscous Burgers model")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Reduced basis file.
    #[arg(long, global = true)]
    basis: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Collect snapshots, build and save the reduced basis.
    Offline {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Sandwich bounds and combined confidence intervals for both inputs.
    Sensitivity {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "N")]
        n_samples: Option<usize>,
        /// Use the full model (zero radii) instead of the reduced one.
        #[arg(long, conflicts_with = "pairs")]
        full: bool,
        /// Certified pairs CSV files, one per input.
        #[arg(long, num_args = 1..)]
        pairs: Vec<PathBuf>,
    },
    /// Viscosity-index bounds and intervals against the basis size.
    Convergence {
        #[arg(long = "N")]
        n_samples: Option<usize>,
        /// Basis sizes, e.g. `2..10` or `2,4,8`.
        #[arg(long)]
        n_list: Option<String>,
    },
    /// Benchmark sweep, precision-model fit and optimal (N, n).
    Benchmark {
        #[arg(long = "N")]
        n_samples: Option<usize>,
        #[arg(long)]
        n_list: Option<String>,
        #[arg(long)]
        p_target: Option<f64>,
        /// Skip the sweep and use `sigma,C,a`.
        #[arg(long, value_name = "SIGMA,C,A")]
        inject: Option<String>,
    },
    /// Same design through the reduced and the full model, with wall times.
    CompareFull {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "N")]
        n_samples: Option<usize>,
    },
    /// Write the certified pairs of both inputs as CSV.
    ExportPairs {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "N")]
        n_samples: Option<usize>,
    },
}

fn parse_injected(text: &str, alpha: f64) -> CliResult<PrecisionModel> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("--inject: {e}")))?;
    let [sigma, c, a] = v[..] else {
        return Err(CliError::Config("--inject expects sigma,C,a".into()));
    };
    PrecisionModel::new(sigma, c, a, gaussian_quantile(alpha)?).map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    let mut config = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.global.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.global.out {
        config.out_dir = o.clone();
    }
    let basis = cli.global.basis.clone();
    match cli.command {
        Command::Offline { n } => {
            config.n_basis = n.unwrap_or(config.n_basis);
            config.validate()?;
            let r = commands::cmd_offline(&config, basis.as_deref())?;
            println!("basis of size {} written to {}", r.dim, r.basis_path.display());
            println!("POD energies:");
            for (k, e) in r.spectrum.iter().enumerate().filter(|(_, e)| **e > 0.0) {
                println!("  {:>3}  {e:.6e}", k + 1);
            }
            println!("offline wall time {:.3} s", r.wall_seconds);
        }
        Command::Sensitivity { n, n_samples, full, pairs } => {
            config.n_basis = n.unwrap_or(config.n_basis);
            config.n_samples = n_samples.unwrap_or(config.n_samples);
            config.validate()?;
            let source = if !pairs.is_empty() {
                PairSource::Files(pairs)
            } else if full {
                PairSource::Full
            } else {
                PairSource::Reduced { basis }
            };
            let r = commands::cmd_sensitivity(&config, &source)?;
            print!("{}", summary_text("first-order indices", &r.results));
            println!("online wall time {:.3} s", r.online_seconds);
        }
        Command::Convergence { n_samples, n_list } => {
            config.bench_samples = n_samples.unwrap_or(config.bench_samples);
            if let Some(l) = n_list {
                config.bench_n_list = parse_list("--n-list", &l)?;
            }
            config.validate()?;
            let list = config.bench_n_list.clone();
            let rows = commands::cmd_convergence(&config, &list)?;
            println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "n", "lower", "upper", "CI lower", "CI upper");
            for r in rows {
                println!("{:>3} {:>12.6} {:>12.6} {:>12.6} {:>12.6}", r.n, r.s_min, r.s_max, r.ci_lo, r.ci_hi);
            }
        }
        Command::Benchmark { n_samples, n_list, p_target, inject } => {
            config.bench_samples = n_samples.unwrap_or(config.bench_samples);
            if let Some(l) = n_list {
                config.bench_n_list = parse_list("--n-list", &l)?;
            }
            config.p_target = p_target.unwrap_or(config.p_target);
            config.validate()?;
            let injected = inject.map(|s| parse_injected(&s, config.alpha)).transpose()?;
            let r = commands::cmd_benchmark(&config, injected)?;
            let m = r.model;
            println!("precision model: sigma = {:.6}, C = {:.6e}, a = {:.6}, q = {:.6}", m.sigma, m.c_meta, m.a_meta, m.q_alpha);
            let s = r.solution;
            println!(
                "target {}: N* = {}, n* = {}, predicted precision {:.6}, cost {:.4e}",
                config.p_target, s.n_samples_star, s.n_star, s.achieved_precision, s.cost
            );
        }
        Command::CompareFull { n, n_samples } => {
            config.n_basis = n.unwrap_or(config.n_basis);
            config.n_samples = n_samples.unwrap_or(config.n_samples);
            config.validate()?;
            let r = commands::cmd_compare_full(&config, basis.as_deref())?;
            print!("{}", summary_text("reduced model", &r.reduced));
            print!("{}", summary_text("full model", &r.full));
            println!(
                "offline {:.3} s, reduced online {:.3} s, full {:.3} s, speedup {:.3}",
                r.offline_seconds,
                r.reduced_seconds,
                r.full_seconds,
                r.speedup()
            );
        }
        Command::ExportPairs { n, n_samples } => {
            config.n_basis = n.unwrap_or(config.n_basis);
            config.n_samples = n_samples.unwrap_or(config.n_samples);
            config.validate()?;
            for p in commands::cmd_export_pairs(&config, basis.as_deref())? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.global.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(CliError::Config(format!("cannot start {k} threads: {e}"))),
        },
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
