//! Experiment drivers behind the `certsa` subcommands. Every driver writes
//! its artifacts into `config.out_dir` and returns the same data as a record.

use std::path::{Path, PathBuf};
use std::time::Instant;

use certsa_core::budget::{
    fit_precision_model, optimize_budget, BenchmarkRecords, BudgetSolution, PrecisionModel, SamplingRecord,
    WidthRecord,
};
use certsa_core::model_full::FullSolver;
use certsa_core::reduced_basis::{build_basis, collect_snapshots, training_grid, SnapshotSet};
use certsa_core::sobol::{
    bootstrap_combined_ci, bound_sobol, evaluate_all_indices, evaluate_pairs, generate_design, CertifiedModel,
    CertifiedPairs, IndexBounds, PickFreezeDesign,
};
use certsa_core::{Error, ReducedBasis};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{
    mean_ci_length, prepare_output, summary_text, write_convergence_csv, write_csv, write_metadata,
    write_sensitivity_csv, write_text, ConvergenceRow, IndexResult,
};
use crate::svg::{line_chart, Series};

pub const INPUT_NAMES: [&str; 2] = ["nu", "u0m"];
pub const BASIS_FILE: &str = "basis.json";

/// Bootstrap seed of input `i`, distinct per input.
pub fn bootstrap_seed(seed: u64, i: usize) -> u64 {
    seed ^ ((i as u64 + 1) << 48)
}

pub fn collect_training(config: &RunConfig) -> CliResult<SnapshotSet> {
    let solver = FullSolver::new(config.discretization()?);
    let grid = training_grid(config.nu_range, config.u0m_range, config.train_nu, config.train_u0m);
    Ok(collect_snapshots(&grid, &solver)?)
}

pub fn train_basis(config: &RunConfig, n: usize) -> CliResult<ReducedBasis> {
    Ok(build_basis(&collect_training(config)?, n)?)
}

/// Loads `path` if given, otherwise trains a basis of size `n`. Returns the
/// basis and the training time (zero when loaded).
pub fn obtain_basis(config: &RunConfig, path: Option<&Path>, n: usize) -> CliResult<(ReducedBasis, f64)> {
    match path {
        Some(p) => {
            let basis = ReducedBasis::load(p)?;
            if *basis.disc() != config.discretization()? {
                return Err(CliError::Config(format!("basis {} was built on a different grid", p.display())));
            }
            if basis.dim() != n {
                return Err(CliError::Config(format!("basis {} has {} modes, {n} requested", p.display(), basis.dim())));
            }
            Ok((basis, 0.0))
        }
        None => {
            let t = Instant::now();
            let basis = train_basis(config, n)?;
            Ok((basis, t.elapsed().as_secs_f64()))
        }
    }
}

pub fn design(config: &RunConfig, n_samples: usize) -> CliResult<PickFreezeDesign> {
    Ok(generate_design(&config.input_ranges()?, n_samples, 0, config.seed)?)
}

/// Sandwich bounds and combined interval for one set of pairs. A straddling
/// denominator is reported as an unbounded row.
pub fn analyze_pairs(config: &RunConfig, input: &str, index: usize, pairs: &CertifiedPairs) -> CliResult<IndexResult> {
    let bounds = match bound_sobol(pairs) {
        Ok(b) => b,
        Err(Error::DenominatorStraddlesZero { .. }) => IndexBounds::unbounded(),
        Err(e) => return Err(e.into()),
    };
    let ci = bootstrap_combined_ci(pairs, config.n_boot, config.alpha, bootstrap_seed(config.seed, index))?;
    Ok(IndexResult { input: input.to_string(), bounds, ci })
}

pub fn analyze_model<M: CertifiedModel + ?Sized>(config: &RunConfig, model: &M) -> CliResult<Vec<IndexResult>> {
    let pairs = evaluate_all_indices(&design(config, config.n_samples)?, model)?;
    pairs.iter().enumerate().map(|(i, p)| analyze_pairs(config, INPUT_NAMES[i], i, p)).collect()
}

#[derive(Debug, Clone)]
pub struct OfflineReport {
    pub basis_path: PathBuf,
    pub dim: usize,
    pub spectrum: Vec<f64>,
    pub wall_seconds: f64,
}

pub fn cmd_offline(config: &RunConfig, basis_path: Option<&Path>) -> CliResult<OfflineReport> {
    let dir = prepare_output(config)?;
    let t = Instant::now();
    let basis = train_basis(config, config.n_basis)?;
    let wall = t.elapsed().as_secs_f64();
    let path = basis_path.map_or_else(|| dir.join(BASIS_FILE), Path::to_path_buf);
    basis.save(&path)?;
    let spectrum = basis.spectrum().to_vec();
    write_csv(
        &dir.join("spectrum.csv"),
        &["k", "energy"],
        spectrum.iter().enumerate().map(|(k, e)| vec![(k + 1).to_string(), e.to_string()]),
    )?;
    write_metadata(&dir, "offline", config, &[("offline", wall)], json!({ "basis": path.display().to_string(), "n": basis.dim() }))?;
    Ok(OfflineReport { basis_path: path, dim: basis.dim(), spectrum, wall_seconds: wall })
}

/// Where the outputs of a sensitivity run come from.
#[derive(Debug, Clone)]
pub enum PairSource {
    /// Certified reduced model, loaded or trained on the fly.
    Reduced { basis: Option<PathBuf> },
    /// Full model with zero radii.
    Full,
    /// Externally produced pairs, one CSV per input.
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub results: Vec<IndexResult>,
    pub mean_ci_length: f64,
    pub offline_seconds: f64,
    pub online_seconds: f64,
}

pub fn cmd_sensitivity(config: &RunConfig, source: &PairSource) -> CliResult<SensitivityReport> {
    let dir = prepare_output(config)?;
    let mut offline = 0.0;
    let t = Instant::now();
    let results = match source {
        PairSource::Reduced { basis } => {
            let (b, secs) = obtain_basis(config, basis.as_deref(), config.n_basis)?;
            offline = secs;
            let t = Instant::now();
            let r = analyze_model(config, &b)?;
            (r, t.elapsed().as_secs_f64())
        }
        PairSource::Full => (analyze_model(config, &FullSolver::new(config.discretization()?))?, t.elapsed().as_secs_f64()),
        PairSource::Files(paths) => {
            let mut r = Vec::new();
            for (i, p) in paths.iter().enumerate() {
                let file = std::fs::File::open(p).map_err(|e| CliError::io(format!("opening {}", p.display()), e))?;
                let pairs = CertifiedPairs::read_csv(file)?;
                let name = p.file_stem().map_or_else(|| format!("input{i}"), |s| s.to_string_lossy().into_owned());
                r.push(analyze_pairs(config, &name, i, &pairs)?);
            }
            (r, t.elapsed().as_secs_f64())
        }
    };
    let (results, online) = results;
    write_sensitivity_csv(&dir.join("sensitivity.csv"), &results)?;
    write_text(&dir.join("summary.txt"), &summary_text("first-order indices", &results))?;
    write_metadata(&dir, "sensitivity", config, &[("offline", offline), ("online", online)], json!({}))?;
    Ok(SensitivityReport { mean_ci_length: mean_ci_length(&results), results, offline_seconds: offline, online_seconds: online })
}

/// Bounds and combined interval of the viscosity index on one fixed design,
/// for each basis size in `n_list`.
pub fn cmd_convergence(config: &RunConfig, n_list: &[usize]) -> CliResult<Vec<ConvergenceRow>> {
    let dir = prepare_output(config)?;
    let t = Instant::now();
    let snapshots = collect_training(config)?;
    let d = design(config, config.bench_samples)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let basis = build_basis(&snapshots, n)?;
        let pairs = evaluate_pairs(&d, &basis)?;
        let r = analyze_pairs(config, INPUT_NAMES[0], 0, &pairs)?;
        rows.push(ConvergenceRow { n, s_min: r.bounds.s_min, s_max: r.bounds.s_max, ci_lo: r.ci.lo, ci_hi: r.ci.hi });
    }
    let wall = t.elapsed().as_secs_f64();
    write_convergence_csv(&dir.join("convergence.csv"), &rows)?;
    let pts = |f: fn(&ConvergenceRow) -> f64| rows.iter().map(|r| (r.n as f64, f(r))).collect::<Vec<_>>();
    let series = [
        Series { label: "lower bound", color: "#1f77b4", dashed: false, points: pts(|r| r.s_min) },
        Series { label: "upper bound", color: "#d62728", dashed: false, points: pts(|r| r.s_max) },
        Series { label: "CI lower", color: "#1f77b4", dashed: true, points: pts(|r| r.ci_lo) },
        Series { label: "CI upper", color: "#d62728", dashed: true, points: pts(|r| r.ci_hi) },
    ];
    let title = format!("viscosity index, N = {}", config.bench_samples);
    write_text(&dir.join("convergence.svg"), &line_chart(&title, "reduced basis size n", "index", &series))?;
    write_metadata(&dir, "convergence", config, &[("total", wall)], json!({ "n_samples": config.bench_samples }))?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub records: BenchmarkRecords,
    pub model: PrecisionModel,
    pub solution: BudgetSolution,
}

/// Mean sandwich width (over inputs) for every basis size of the config, and
/// the zero-radius interval length of the full model, at `bench_samples`.
pub fn benchmark_records(config: &RunConfig) -> CliResult<BenchmarkRecords> {
    let snapshots = collect_training(config)?;
    let d = design(config, config.bench_samples)?;
    let mut widths = Vec::new();
    for &n in &config.bench_n_list {
        let basis = build_basis(&snapshots, n)?;
        let pairs = evaluate_all_indices(&d, &basis)?;
        let mut total = 0.0;
        for p in &pairs {
            total += match bound_sobol(p) {
                Ok(b) => b.width(),
                Err(Error::DenominatorStraddlesZero { .. }) => f64::INFINITY,
                Err(e) => return Err(e.into()),
            };
        }
        let mean_width = total / pairs.len() as f64;
        if mean_width.is_finite() {
            widths.push(WidthRecord { n, mean_width });
        }
    }
    let full = FullSolver::new(config.discretization()?);
    let pairs = evaluate_all_indices(&d, &full)?;
    let mut lengths = 0.0;
    for (i, p) in pairs.iter().enumerate() {
        lengths += bootstrap_combined_ci(p, config.n_boot, config.alpha, bootstrap_seed(config.seed, i))?.length();
    }
    let sampling = vec![SamplingRecord { n_samples: config.bench_samples as u64, ci_length: lengths / pairs.len() as f64 }];
    Ok(BenchmarkRecords { widths, sampling })
}

/// Benchmark sweep, fit and budget optimization. With `injected`, the sweep
/// and the fit are skipped.
pub fn cmd_benchmark(config: &RunConfig, injected: Option<PrecisionModel>) -> CliResult<BenchmarkReport> {
    let dir = prepare_output(config)?;
    let t = Instant::now();
    let (records, model) = match injected {
        Some(m) => (BenchmarkRecords::default(), m),
        None => {
            let records = benchmark_records(config)?;
            let model = fit_precision_model(&records, config.alpha)?;
            (records, model)
        }
    };
    let solution = optimize_budget(&model, config.p_target)?;
    let wall = t.elapsed().as_secs_f64();
    write_csv(
        &dir.join("benchmark_widths.csv"),
        &["n", "mean_width"],
        records.widths.iter().map(|w| vec![w.n.to_string(), w.mean_width.to_string()]),
    )?;
    write_csv(
        &dir.join("benchmark_sampling.csv"),
        &["n_samples", "ci_length"],
        records.sampling.iter().map(|s| vec![s.n_samples.to_string(), s.ci_length.to_string()]),
    )?;
    write_csv(
        &dir.join("budget.csv"),
        &["sigma", "c_meta", "a_meta", "q_alpha", "p_target", "n_star", "n_samples_star", "achieved_precision", "cost"],
        [vec![
            model.sigma.to_string(),
            model.c_meta.to_string(),
            model.a_meta.to_string(),
            model.q_alpha.to_string(),
            config.p_target.to_string(),
            solution.n_star.to_string(),
            solution.n_samples_star.to_string(),
            solution.achieved_precision.to_string(),
            solution.cost.to_string(),
        ]],
    )?;
    write_metadata(&dir, "benchmark", config, &[("total", wall)], json!({ "injected": injected.is_some() }))?;
    Ok(BenchmarkReport { records, model, solution })
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub reduced: Vec<IndexResult>,
    pub full: Vec<IndexResult>,
    pub offline_seconds: f64,
    pub reduced_seconds: f64,
    pub full_seconds: f64,
}

impl CompareReport {
    /// Full-model wall time over reduced online wall time.
    pub fn speedup(&self) -> f64 {
        self.full_seconds / self.reduced_seconds
    }

    /// Same ratio with the offline training charged to the reduced run.
    pub fn speedup_with_offline(&self) -> f64 {
        self.full_seconds / (self.reduced_seconds + self.offline_seconds)
    }
}

/// Runs the same design through the reduced and the full pipeline.
pub fn cmd_compare_full(config: &RunConfig, basis: Option<&Path>) -> CliResult<CompareReport> {
    let dir = prepare_output(config)?;
    let (b, offline) = obtain_basis(config, basis, config.n_basis)?;
    let t = Instant::now();
    let reduced = analyze_model(config, &b)?;
    let reduced_seconds = t.elapsed().as_secs_f64();
    let full_solver = FullSolver::new(config.discretization()?);
    let t = Instant::now();
    let full = analyze_model(config, &full_solver)?;
    let full_seconds = t.elapsed().as_secs_f64();
    let report = CompareReport { reduced, full, offline_seconds: offline, reduced_seconds, full_seconds };

    let rows = report.reduced.iter().map(|r| ("reduced", r)).chain(report.full.iter().map(|r| ("full", r)));
    write_csv(
        &dir.join("comparison.csv"),
        &["pipeline", "input", "s_min", "s_max", "ci_lo", "ci_hi", "ci_length"],
        rows.map(|(name, r)| {
            vec![
                name.to_string(),
                r.input.clone(),
                r.bounds.s_min.to_string(),
                r.bounds.s_max.to_string(),
                r.ci.lo.to_string(),
                r.ci.hi.to_string(),
                r.ci.length().to_string(),
            ]
        }),
    )?;
    let mut summary = summary_text("reduced model", &report.reduced);
    summary.push_str(&summary_text("full model", &report.full));
    summary.push_str(&format!(
        "wall time: offline {:.3} s, reduced online {:.3} s, full {:.3} s\nspeedup {:.3} (with offline {:.3})\n",
        offline,
        reduced_seconds,
        full_seconds,
        report.speedup(),
        report.speedup_with_offline()
    ));
    write_text(&dir.join("summary.txt"), &summary)?;
    write_metadata(
        &dir,
        "compare-full",
        config,
        &[("offline", offline), ("reduced_online", reduced_seconds), ("full", full_seconds)],
        json!({ "speedup": report.speedup(), "speedup_with_offline": report.speedup_with_offline() }),
    )?;
    Ok(report)
}

/// Writes `pairs_<input>.csv` for every input and returns the paths.
pub fn cmd_export_pairs(config: &RunConfig, basis: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let dir = prepare_output(config)?;
    let t = Instant::now();
    let (b, offline) = obtain_basis(config, basis, config.n_basis)?;
    let pairs = evaluate_all_indices(&design(config, config.n_samples)?, &b)?;
    let mut paths = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let path = dir.join(format!("pairs_{}.csv", INPUT_NAMES[i]));
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
        p.write_csv(file)?;
        paths.push(path);
    }
    write_metadata(&dir, "export-pairs", config, &[("offline", offline), ("total", t.elapsed().as_secs_f64())], json!({}))?;
    Ok(paths)
}
