//! Result records and their CSV forms.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use certsa_core::sobol::{CombinedCI, IndexBounds};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SENSITIVITY_HEADER: [&str; 8] = ["input", "s_min", "s_max", "ci_lo", "ci_hi", "ci_length", "n_unbounded", "status"];
pub const CONVERGENCE_HEADER: [&str; 5] = ["n", "s_min", "s_max", "ci_lo", "ci_hi"];

/// Sandwich and combined interval of one input.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexResult {
    pub input: String,
    pub bounds: IndexBounds,
    pub ci: CombinedCI,
}

impl IndexResult {
    pub fn is_bounded(&self) -> bool {
        self.bounds.is_bounded() && self.ci.is_bounded()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn mean_ci_length(results: &[IndexResult]) -> f64 {
    results.iter().map(|r| r.ci.length()).sum::<f64>() / results.len() as f64
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Creates the output directory and stores the configuration snapshot.
pub fn prepare_output(config: &RunConfig) -> CliResult<PathBuf> {
    ensure_dir(&config.out_dir)?;
    write_text(&config.out_dir.join("config.txt"), &config.to_text())?;
    Ok(config.out_dir.clone())
}

/// Run metadata kept apart from the result CSVs, which stay reproducible.
pub fn write_metadata(dir: &Path, command: &str, config: &RunConfig, wall_seconds: &[(&str, f64)], extra: Value) -> CliResult<()> {
    let walls: Map<String, Value> = wall_seconds.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let meta = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "threads": rayon::current_num_threads(),
        "wall_seconds": walls,
        "details": extra,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(certsa_core::Error::from)?;
    write_text(&dir.join("metadata.json"), &text)
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn write_sensitivity_csv(path: &Path, results: &[IndexResult]) -> CliResult<()> {
    let rows = results.iter().map(|r| {
        vec![
            r.input.clone(),
            r.bounds.s_min.to_string(),
            r.bounds.s_max.to_string(),
            r.ci.lo.to_string(),
            r.ci.hi.to_string(),
            r.ci.length().to_string(),
            r.ci.n_unbounded.to_string(),
            if r.is_bounded() { "bounded" } else { "unbounded" }.to_string(),
        ]
    });
    write_csv(path, &SENSITIVITY_HEADER, rows)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> CliResult<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CliError::Core(certsa_core::Error::Csv(format!("bad field {i} in {rec:?}"))))
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &[&str]) -> CliResult<()> {
    let h: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if h != expected {
        return Err(CliError::Core(certsa_core::Error::Csv(format!("unexpected header {h:?}"))));
    }
    Ok(())
}

/// Reads a sensitivity CSV back; `alpha` and `n_boot` are not stored and are
/// taken from the arguments.
pub fn read_sensitivity_csv<R: Read>(input: R, alpha: f64, n_boot: usize) -> CliResult<Vec<IndexResult>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &SENSITIVITY_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(IndexResult {
            input: rec[0].to_string(),
            bounds: IndexBounds { s_min: field(&rec, 1)?, s_max: field(&rec, 2)? },
            ci: CombinedCI { lo: field(&rec, 3)?, hi: field(&rec, 4)?, alpha, n_boot, n_unbounded: field(&rec, 6)? },
        });
    }
    Ok(out)
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> CliResult<()> {
    let rows = rows.iter().map(|r| {
        vec![r.n.to_string(), r.s_min.to_string(), r.s_max.to_string(), r.ci_lo.to_string(), r.ci_hi.to_string()]
    });
    write_csv(path, &CONVERGENCE_HEADER, rows)
}

pub fn read_convergence_csv<R: Read>(input: R) -> CliResult<Vec<ConvergenceRow>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &CONVERGENCE_HEADER)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(ConvergenceRow {
                n: field(&rec, 0)?,
                s_min: field(&rec, 1)?,
                s_max: field(&rec, 2)?,
                ci_lo: field(&rec, 3)?,
                ci_hi: field(&rec, 4)?,
            })
        })
        .collect()
}

pub fn summary_text(title: &str, results: &[IndexResult]) -> String {
    let mut s = format!("{title}\n");
    for r in results {
        if r.is_bounded() {
            s.push_str(&format!(
                "  S[{}]: sandwich [{:.6}, {:.6}]  combined CI [{:.6}, {:.6}]  length {:.6}\n",
                r.input,
                r.bounds.s_min,
                r.bounds.s_max,
                r.ci.lo,
                r.ci.hi,
                r.ci.length()
            ));
        } else {
            s.push_str(&format!("  S[{}]: unbounded ({} of {} replications)\n", r.input, r.ci.n_unbounded, r.ci.n_boot));
        }
    }
    if !results.is_empty() {
        s.push_str(&format!("  mean CI length {:.6}\n", mean_ci_length(results)));
    }
    s
}
