use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spherelet_bench::config::{parse_estimators, parse_seeds};
use spherelet_bench::report::Quantiles;
use spherelet_bench::{run_experiment, BenchError, Experiment, ExperimentConfig, RunReport};

/// Geodesic distance benchmarks: local and global error, noisy sweeps, and
/// clustering, conditional density and regression on the estimated metric.
#[derive(Debug, Parser)]
#[command(name = "spherelet-bench", version)]
struct Args {
    /// TOML configuration file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// local_error, global_error, noisy_sweep, clustering, ckde or regression.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Number of clusters.
    #[arg(long = "K")]
    clusters: Option<usize>,
    /// Noise standard deviation.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    /// `0..20` or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma-separated subset of D, EG, SG.
    #[arg(long)]
    estimators: Option<String>,
    /// CSV dataset for clustering, ckde or regression.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep only the first 10 seeds.
    #[arg(long)]
    fast: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn build_config(args: &Args) -> Result<ExperimentConfig, BenchError> {
    let flag_experiment = args.experiment.as_deref().map(str::parse::<Experiment>).transpose()?;
    let mut cfg = match (&args.config, flag_experiment) {
        (Some(path), e) => {
            let cfg = ExperimentConfig::from_toml_file(path)?;
            if let Some(e) = e {
                if e != cfg.experiment {
                    return Err(BenchError::Config(format!(
                        "--experiment {e} conflicts with {} in {}",
                        cfg.experiment,
                        path.display()
                    )));
                }
            }
            cfg
        }
        (None, Some(e)) => ExperimentConfig::preset(e),
        (None, None) => return Err(BenchError::Config("pass --config or --experiment".into())),
    };
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if let Some(v) = args.d {
        cfg.d = v;
    }
    if let Some(v) = args.clusters {
        cfg.clusters = v;
    }
    if let Some(v) = args.sigma {
        cfg.noise_sigma = v;
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(s) = &args.estimators {
        cfg.estimators = parse_estimators(s)?;
    }
    if let Some(p) = &args.input {
        cfg.input.path = Some(p.clone());
    }
    if let Some(p) = &args.out {
        cfg.out = p.clone();
    }
    if args.fast {
        cfg.seeds.truncate(10);
    }
    Ok(cfg)
}

fn fmt_quantiles(q: &Option<Quantiles>) -> String {
    match q {
        Some(q) => format!("median {:.6e}  [q1 {:.4e}, q3 {:.4e}]  n={}", q.median, q.q1, q.q3, q.count),
        None => "no unflagged replications".into(),
    }
}

fn print_report(report: &RunReport) {
    match report {
        RunReport::Errors(r) if !r.slopes.is_empty() => {
            for s in &r.slopes {
                match s.slope {
                    Some(v) => println!(
                        "seed {:>3}  {:<17} slope {:.3} ± {:.3}  max error {:.3e}",
                        s.seed, s.local, v.slope, v.half_width, s.max_error
                    ),
                    None => println!("seed {:>3}  {:<17} slope n/a      max error {:.3e}", s.seed, s.local, s.max_error),
                }
            }
        }
        RunReport::Errors(r) => {
            for s in r.summary() {
                println!(
                    "{:<10} {:<3} mean {:.4e}  sd {:.3e}  seeds {} (excluded {})",
                    s.group, s.estimator, s.mean, s.sd, s.count, s.excluded
                );
            }
        }
        RunReport::Apps(r) => {
            for (e, m, q) in r.summary() {
                println!("{e:<3} {m:<13} {}", fmt_quantiles(&q));
            }
        }
    }
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with validation; 2 is kept for numerical failures.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = build_config(&args).and_then(|cfg| {
        if args.print_config {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
        let summary = run_experiment(&cfg)?;
        for w in summary.report.warnings() {
            eprintln!("warning: {w}");
        }
        print_report(&summary.report);
        eprintln!(
            "wrote {} files to {} in {:.1} s",
            summary.files.len(),
            cfg.out.display(),
            summary.report.wall_clock_seconds()
        );
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
