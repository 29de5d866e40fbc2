//! Choice of the sample size `N` and basis size `n` for a target confidence
//! interval length `p`.
//!
//! The interval length is modelled as
//!
//! ```text
//!   2 q_alpha sigma / sqrt(N) + C / a^n
//! ```
//!
//! (sampling part plus metamodel part) and the cost of a run as `N n^3`.
//! [`optimize_budget`] minimizes the cost under the constraint that the
//! modelled length does not exceed `p`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest basis size considered by the integer search.
pub const MAX_BASIS_SIZE: usize = 1000;
/// Smallest sample size accepted by the estimator.
pub const MIN_SAMPLES: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionModel {
    pub sigma: f64,
    pub c_meta: f64,
    pub a_meta: f64,
    pub q_alpha: f64,
}

impl PrecisionModel {
    pub fn new(sigma: f64, c_meta: f64, a_meta: f64, q_alpha: f64) -> Result<Self> {
        let m = PrecisionModel { sigma, c_meta, a_meta, q_alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma >= 0.0
            && self.sigma.is_finite()
            && self.c_meta > 0.0
            && self.c_meta.is_finite()
            && self.a_meta > 1.0
            && self.a_meta.is_finite()
            && self.q_alpha > 0.0
            && self.q_alpha.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid precision model {self:?}")))
        }
    }

    pub fn sampling_term(&self, n_samples: f64) -> f64 {
        2.0 * self.q_alpha * self.sigma / n_samples.sqrt()
    }

    pub fn metamodel_term(&self, n: f64) -> f64 {
        self.c_meta / self.a_meta.powf(n)
    }

    /// Modelled interval length at `(N, n)`.
    pub fn precision(&self, n_samples: u64, n: usize) -> f64 {
        self.sampling_term(n_samples as f64) + self.metamodel_term(n as f64)
    }

    /// Basis size giving a metamodel share `m` of the precision budget.
    pub fn basis_size_for_share(&self, m: f64) -> f64 {
        (self.c_meta / m).ln() / self.a_meta.ln()
    }

    /// Sample size giving a sampling share `p - m`.
    pub fn sample_size_for_share(&self, p: f64, m: f64) -> f64 {
        (2.0 * self.q_alpha * self.sigma / (p - m)).powi(2)
    }
}

/// Standard normal quantile of order `1 - alpha/2`.
pub fn gaussian_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("risk level must lie in (0, 1), got {alpha}")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// Mean sandwich width observed with a basis of size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthRecord {
    pub n: usize,
    pub mean_width: f64,
}

/// Zero-radius bootstrap interval length observed with `n_samples` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingRecord {
    pub n_samples: u64,
    pub ci_length: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecords {
    pub widths: Vec<WidthRecord>,
    pub sampling: Vec<SamplingRecord>,
}

/// Least-squares fit of `ln width = ln C - n ln a`; `sigma` is the mean of
/// `L sqrt(N) / (2 q_alpha)` over the sampling records.
pub fn fit_precision_model(bench: &BenchmarkRecords, alpha: f64) -> Result<PrecisionModel> {
    let q = gaussian_quantile(alpha)?;
    let mut ns: Vec<usize> = bench.widths.iter().map(|w| w.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::FitFailed(format!("need widths at 3 distinct basis sizes, got {}", ns.len())));
    }
    if bench.widths.iter().any(|w| !(w.mean_width > 0.0) || !w.mean_width.is_finite()) {
        return Err(Error::FitFailed("sandwich widths must be positive and finite".into()));
    }
    if bench.sampling.is_empty() {
        return Err(Error::FitFailed("no sampling record".into()));
    }
    if bench.sampling.iter().any(|s| !(s.ci_length >= 0.0) || !s.ci_length.is_finite() || s.n_samples == 0) {
        return Err(Error::FitFailed("sampling records must have finite lengths".into()));
    }

    let k = bench.widths.len() as f64;
    let xbar = bench.widths.iter().map(|w| w.n as f64).sum::<f64>() / k;
    let ybar = bench.widths.iter().map(|w| w.mean_width.ln()).sum::<f64>() / k;
    let sxy: f64 = bench.widths.iter().map(|w| (w.n as f64 - xbar) * (w.mean_width.ln() - ybar)).sum();
    let sxx: f64 = bench.widths.iter().map(|w| (w.n as f64 - xbar).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::FitFailed(format!("log-width slope {slope} shows no decay")));
    }
    let intercept = ybar - slope * xbar;

    let sigma = bench.sampling.iter().map(|s| s.ci_length * (s.n_samples as f64).sqrt() / (2.0 * q)).sum::<f64>()
        / bench.sampling.len() as f64;
    PrecisionModel::new(sigma, intercept.exp(), (-slope).exp(), q)
        .map_err(|e| Error::FitFailed(format!("fitted constants out of range: {e}")))
}

/// Optimum of the problem with real-valued `N` and `n >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousSolution {
    pub metamodel_share: f64,
    pub n: f64,
    pub n_samples: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSolution {
    pub n_star: usize,
    pub n_samples_star: u64,
    pub achieved_precision: f64,
    pub cost: f64,
}

/// Continuous relaxation, reduced to the metamodel share
/// `m in (0, min(p, C/a)]` with `n(m) = ln(C/m)/ln a` and
/// `N(m) = (2 q sigma / (p - m))^2`.
pub fn optimize_continuous(model: &PrecisionModel, p: f64) -> Result<ContinuousSolution> {
    model.validate()?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("target precision must be positive, got {p}")));
    }
    let upper = p.min(model.metamodel_term(1.0));
    let cost = |m: f64| model.sample_size_for_share(p, m) * model.basis_size_for_share(m).powi(3);
    let solution = |m: f64| ContinuousSolution {
        metamodel_share: m,
        n: model.basis_size_for_share(m),
        n_samples: model.sample_size_for_share(p, m),
        cost: cost(m),
    };
    if model.sigma == 0.0 {
        return Ok(solution(upper));
    }

    // coarse log-scan to bracket, then golden-section refinement
    let lo_end = upper * 1e-12;
    let steps = 2000;
    let grid = |i: usize| {
        if i == steps {
            upper
        } else {
            lo_end * (upper / lo_end).powf(i as f64 / steps as f64)
        }
    };
    let values: Vec<f64> = (0..=steps).map(|i| cost(grid(i))).collect();
    let best = (0..=steps).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    let (mut a, mut b) = (grid(best.saturating_sub(1)), grid((best + 1).min(steps)));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2);
        }
        if b - a <= 1e-15 * b {
            break;
        }
    }
    let m = [a, b, x1, x2, grid(best)].into_iter().min_by(|&u, &v| cost(u).total_cmp(&cost(v))).unwrap();
    Ok(solution(m))
}

/// Integer optimum: for every basis size the smallest feasible sample size is
/// taken, and basis sizes are scanned upward until `n^3 N_min` alone exceeds
/// the best cost found. The returned point satisfies
/// `precision(N*, n*) <= p` as evaluated in floating point.
pub fn optimize_budget(model: &PrecisionModel, p: f64) -> Result<BudgetSolution> {
    model.validate()?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("target precision must be positive, got {p}")));
    }
    let floor_samples = min_samples(model, p, 0.0).unwrap_or(u64::MAX).max(MIN_SAMPLES);
    let mut best: Option<BudgetSolution> = None;
    for n in 1..=MAX_BASIS_SIZE {
        let n3 = (n as f64).powi(3);
        if let Some(b) = &best {
            if n3 * floor_samples as f64 >= b.cost {
                break;
            }
        }
        let meta = model.metamodel_term(n as f64);
        let Some(n_samples) = min_samples(model, p, meta) else {
            continue;
        };
        let cost = n3 * n_samples as f64;
        if best.is_none_or(|b| cost < b.cost) {
            best = Some(BudgetSolution {
                n_star: n,
                n_samples_star: n_samples,
                achieved_precision: model.precision(n_samples, n),
                cost,
            });
        }
    }
    best.ok_or_else(|| Error::InfeasibleRounding {
        target: p,
        reason: format!("no basis size up to {MAX_BASIS_SIZE} brings the metamodel term below the target"),
    })
}

/// Smallest `N >= 2` with `sampling(N) + meta <= p`, if any.
fn min_samples(model: &PrecisionModel, p: f64, meta: f64) -> Option<u64> {
    let slack = p - meta;
    if model.sigma == 0.0 {
        return (meta <= p).then_some(MIN_SAMPLES);
    }
    if !(slack > 0.0) {
        return None;
    }
    let guess = (2.0 * model.q_alpha * model.sigma / slack).powi(2).ceil();
    if !(guess < 1e18) {
        return None;
    }
    let fits = |n: u64| model.sampling_term(n as f64) + meta <= p;
    let mut n = (guess as u64).max(MIN_SAMPLES);
    while !fits(n) {
        n += 1;
    }
    while n > MIN_SAMPLES && fits(n - 1) {
        n -= 1;
    }
    Some(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    fn q95() -> f64 {
        gaussian_quantile(0.05).unwrap()
    }

    #[test]
    fn gaussian_quantile_value() {
        assert!((q95() - 1.959963984540054).abs() < 1e-9);
        assert!(gaussian_quantile(0.0).is_err());
    }

    #[test]
    fn fit_recovers_exact_synthetic_constants() {
        let q = q95();
        let bench = BenchmarkRecords {
            widths: [2, 4, 6].iter().map(|&n| WidthRecord { n, mean_width: 0.5 / 2f64.powi(n as i32) }).collect(),
            sampling: vec![SamplingRecord { n_samples: 300, ci_length: 2.0 * q * 0.3 / 300f64.sqrt() }],
        };
        let m = fit_precision_model(&bench, 0.05).unwrap();
        assert!((m.c_meta - 0.5).abs() < 1e-9);
        assert!((m.a_meta - 2.0).abs() < 1e-9);
        assert!((m.sigma - 0.3).abs() < 1e-9);
        assert_eq!(m.q_alpha, q);
    }

    #[test]
    fn fit_rejects_growing_widths_and_missing_data() {
        let grow = BenchmarkRecords {
            widths: (1..4).map(|n| WidthRecord { n, mean_width: 0.1 * n as f64 }).collect(),
            sampling: vec![SamplingRecord { n_samples: 100, ci_length: 0.1 }],
        };
        assert!(matches!(fit_precision_model(&grow, 0.05), Err(Error::FitFailed(_))));
        let short = BenchmarkRecords { widths: grow.widths[..2].to_vec(), ..grow.clone() };
        assert!(matches!(fit_precision_model(&short, 0.05), Err(Error::FitFailed(_))));
    }

    #[test]
    fn exact_metamodel_limit() {
        let m = PrecisionModel::new(0.3, 1e-12, 2.0, q95()).unwrap();
        let s = optimize_budget(&m, 0.02).unwrap();
        assert_eq!(s.n_star, 1);
        let p_prime = 0.02 - 1e-12 / 2.0;
        let expected = (2.0 * q95() * 0.3 / p_prime).powi(2).ceil() as u64;
        assert!(s.n_samples_star.abs_diff(expected) <= 1);
        assert!(s.achieved_precision <= 0.02);
    }

    #[test]
    fn no_sampling_error_limit() {
        let m = PrecisionModel::new(0.0, 0.5, 2.0, q95()).unwrap();
        let s = optimize_budget(&m, 0.003).unwrap();
        assert_eq!(s.n_samples_star, 2);
        assert_eq!(s.n_star, ((0.5f64 / 0.003).ln() / 2f64.ln()).ceil() as usize);
    }

    #[test]
    fn infeasible_when_decay_is_too_slow() {
        let m = PrecisionModel::new(0.1, 1e6, 1.0 + 1e-6, q95()).unwrap();
        assert!(matches!(optimize_budget(&m, 0.01), Err(Error::InfeasibleRounding { .. })));
    }

    fn random_model(rng: &mut impl Rng) -> (PrecisionModel, f64) {
        let m = PrecisionModel::new(
            rng.random_range(0.05..0.5),
            rng.random_range(0.05..2.0),
            rng.random_range(1.5..4.0),
            q95(),
        )
        .unwrap();
        (m, rng.random_range(0.01..0.1))
    }

    /// Exhaustive scan over (N, n) in [2, 1e6] x [1, 40].
    fn grid_oracle(m: &PrecisionModel, p: f64) -> f64 {
        let mut best = f64::INFINITY;
        for n in 1..=40usize {
            let mut n_samples = 2u64;
            while n_samples <= 1_000_000 && m.precision(n_samples, n) > p {
                n_samples += 1;
            }
            if n_samples <= 1_000_000 {
                best = best.min(n_samples as f64 * (n as f64).powi(3));
            }
        }
        best
    }

    #[test]
    fn integer_solution_matches_grid_oracle() {
        let mut rng = stream(5, Purpose::Validation, 0);
        for _ in 0..50 {
            let (m, p) = random_model(&mut rng);
            let s = optimize_budget(&m, p).unwrap();
            let oracle = grid_oracle(&m, p);
            assert!(s.cost <= 1.01 * oracle, "{m:?} p={p}: {} vs {oracle}", s.cost);
            assert!(m.precision(s.n_samples_star, s.n_star) <= p);
            assert_eq!(s.achieved_precision, m.precision(s.n_samples_star, s.n_star));
        }
    }

    #[test]
    fn continuous_solution_matches_fine_scan() {
        let mut rng = stream(6, Purpose::Validation, 0);
        for _ in 0..20 {
            let (m, p) = random_model(&mut rng);
            let c = optimize_continuous(&m, p).unwrap();
            let upper = p.min(m.c_meta / m.a_meta);
            let scan = (1..=200_000)
                .map(|i| upper * i as f64 / 200_000.0)
                .map(|s| m.sample_size_for_share(p, s) * m.basis_size_for_share(s).powi(3))
                .fold(f64::INFINITY, f64::min);
            assert!(c.cost <= 1.001 * scan, "{} vs {scan}", c.cost);
            assert!(c.n >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn tighter_target_never_costs_less() {
        let mut rng = stream(7, Purpose::Validation, 0);
        for _ in 0..20 {
            let (m, _) = random_model(&mut rng);
            let mut last = 0.0;
            for p in [0.2, 0.1, 0.05, 0.03, 0.02, 0.01, 0.005] {
                let s = optimize_budget(&m, p).unwrap();
                assert!(s.cost >= last);
                last = s.cost;
            }
        }
    }

    #[test]
    fn doubling_sigma_quadruples_sample_size_at_fixed_share() {
        let m = PrecisionModel::new(0.3, 0.5, 2.0, q95()).unwrap();
        let c = optimize_continuous(&m, 0.02).unwrap();
        let doubled = PrecisionModel { sigma: 0.6, ..m };
        let ratio = doubled.sample_size_for_share(0.02, c.metamodel_share) / c.n_samples;
        assert!((ratio - 4.0).abs() < 1e-12);
    }
}
