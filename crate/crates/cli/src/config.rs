//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` are comments. Unknown keys are rejected so that a
//! typo never silently falls back to a default.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use certsa_core::model_full::Discretization;
use certsa_core::sobol::InputRange;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_space: usize,
    pub dt: f64,
    pub t_final: f64,
    pub nu_range: (f64, f64),
    pub u0m_range: (f64, f64),
    pub train_nu: usize,
    pub train_u0m: usize,
    pub n_basis: usize,
    pub n_samples: usize,
    pub n_boot: usize,
    pub alpha: f64,
    pub seed: u64,
    pub bench_samples: usize,
    pub bench_n_list: Vec<usize>,
    pub p_target: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_space: 60,
            dt: 0.01,
            t_final: 0.05,
            nu_range: (1.0, 20.0),
            u0m_range: (-0.3, 0.3),
            train_nu: 5,
            train_u0m: 5,
            n_basis: 11,
            n_samples: 22000,
            n_boot: 300,
            alpha: 0.05,
            seed: 1,
            bench_samples: 300,
            bench_n_list: (2..=10).collect(),
            p_target: 0.02,
            out_dir: PathBuf::from("results"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| CliError::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

pub fn parse_list(key: &str, value: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (parse(key, a)?, parse(key, b.trim_start_matches('='))?);
                if a > b {
                    return Err(CliError::Config(format!("{key}: empty range {item}")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(key, item)?),
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{key}: empty list")));
    }
    Ok(out)
}

impl RunConfig {
    pub fn from_text(text: &str) -> CliResult<Self> {
        let mut c = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            c.set(key.trim(), value.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_text(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "n_space" => self.n_space = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "t_final" => self.t_final = parse(key, value)?,
            "nu_min" => self.nu_range.0 = parse(key, value)?,
            "nu_max" => self.nu_range.1 = parse(key, value)?,
            "u0m_min" => self.u0m_range.0 = parse(key, value)?,
            "u0m_max" => self.u0m_range.1 = parse(key, value)?,
            "train_nu" => self.train_nu = parse(key, value)?,
            "train_u0m" => self.train_u0m = parse(key, value)?,
            "n_basis" => self.n_basis = parse(key, value)?,
            "n_samples" => self.n_samples = parse(key, value)?,
            "n_boot" => self.n_boot = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "bench_samples" => self.bench_samples = parse(key, value)?,
            "bench_n_list" => self.bench_n_list = parse_list(key, value)?,
            "p_target" => self.p_target = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |m: String| Err(CliError::Config(m));
        self.discretization()?;
        self.input_ranges()?;
        if self.nu_range.0 <= 0.0 {
            return fail(format!("viscosity range must be positive, got {:?}", self.nu_range));
        }
        if self.train_nu == 0 || self.train_u0m == 0 {
            return fail("training grid must be non-empty".into());
        }
        if self.n_basis == 0 {
            return fail("n_basis must be >= 1".into());
        }
        if self.n_samples < 2 || self.bench_samples < 2 {
            return fail("sample sizes must be >= 2".into());
        }
        if self.n_boot < 2 {
            return fail("n_boot must be >= 2".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.p_target.is_nan() || self.p_target <= 0.0 {
            return fail(format!("p_target must be positive, got {}", self.p_target));
        }
        if self.bench_n_list.contains(&0) {
            return fail("basis sizes must be >= 1".into());
        }
        Ok(())
    }

    pub fn discretization(&self) -> CliResult<Discretization> {
        Discretization::new(self.n_space, self.dt, self.t_final).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn input_ranges(&self) -> CliResult<[InputRange; 2]> {
        let r = |(lo, hi): (f64, f64)| InputRange::new(lo, hi).map_err(|e| CliError::Config(e.to_string()));
        Ok([r(self.nu_range)?, r(self.u0m_range)?])
    }

    /// Text that [`RunConfig::from_text`] parses back to `self`.
    pub fn to_text(&self) -> String {
        let list = self.bench_n_list.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "# discretization");
        let _ = writeln!(s, "n_space = {}", self.n_space);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "t_final = {:?}", self.t_final);
        let _ = writeln!(s, "# input ranges");
        let _ = writeln!(s, "nu_min = {:?}", self.nu_range.0);
        let _ = writeln!(s, "nu_max = {:?}", self.nu_range.1);
        let _ = writeln!(s, "u0m_min = {:?}", self.u0m_range.0);
        let _ = writeln!(s, "u0m_max = {:?}", self.u0m_range.1);
        let _ = writeln!(s, "# offline training grid");
        let _ = writeln!(s, "train_nu = {}", self.train_nu);
        let _ = writeln!(s, "train_u0m = {}", self.train_u0m);
        let _ = writeln!(s, "# sensitivity run");
        let _ = writeln!(s, "n_basis = {}", self.n_basis);
        let _ = writeln!(s, "n_samples = {}", self.n_samples);
        let _ = writeln!(s, "n_boot = {}", self.n_boot);
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "# benchmark run and budget");
        let _ = writeln!(s, "bench_samples = {}", self.bench_samples);
        let _ = writeln!(s, "bench_n_list = {list}");
        let _ = writeln!(s, "p_target = {:?}", self.p_target);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_setup() {
        let c = RunConfig::default();
        assert_eq!((c.n_space, c.dt, c.t_final), (60, 0.01, 0.05));
        assert_eq!(c.nu_range, (1.0, 20.0));
        assert_eq!(c.u0m_range, (-0.3, 0.3));
        assert_eq!((c.n_boot, c.alpha), (300, 0.05));
        c.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let c = RunConfig {
            seed: 77,
            alpha: 0.1,
            bench_n_list: vec![2, 5, 9],
            out_dir: PathBuf::from("/tmp/run a"),
            ..Default::default()
        };
        assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn comments_and_overrides() {
        let c = RunConfig::from_text("# header\nn_basis = 7 # inline\n\nbench_n_list = 2..4, 8\n").unwrap();
        assert_eq!(c.n_basis, 7);
        assert_eq!(c.bench_n_list, vec![2, 3, 4, 8]);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        for text in ["bogus = 1", "dt = abc", "n_space", "alpha = 2", "dt = 0.03", "bench_n_list = 5..2"] {
            assert!(matches!(RunConfig::from_text(text), Err(CliError::Config(_))), "{text}");
        }
    }
}
