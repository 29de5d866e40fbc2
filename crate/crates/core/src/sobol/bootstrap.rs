use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

use super::bounds::{bound_resampled, bound_sobol, IndexBounds};
use super::design::CertifiedPairs;

/// Largest tolerated fraction of replications with an unbounded sandwich.
pub const UNBOUNDED_FRACTION: f64 = 0.01;

/// Confidence interval covering both the sampling and the surrogate error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedCI {
    pub lo: f64,
    pub hi: f64,
    pub alpha: f64,
    pub n_boot: usize,
    pub n_unbounded: usize,
}

impl CombinedCI {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn covers(&self, s: f64) -> bool {
        self.lo <= s && s <= self.hi
    }
}

/// Lower order statistic of rank `ceil(q * len)`, clamped to `[1, len]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty array");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let b = v.len();
    let x = q.clamp(0.0, 1.0) * b as f64;
    let r = x.round();
    let rank = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    let rank = (rank as usize).clamp(1, b);
    v[rank - 1]
}

/// Resampling list of replication `b`: `n` indices drawn with repetition.
pub fn resample_indices(n: usize, seed: u64, b: usize) -> Vec<usize> {
    let mut rng = stream(seed, Purpose::Bootstrap, b as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Sandwich bounds of each bootstrap replication. A replication whose
/// denominator is not guaranteed positive is reported as unbounded.
pub fn bootstrap_replications(pairs: &CertifiedPairs, n_boot: usize, seed: u64) -> Result<Vec<IndexBounds>> {
    pairs.validate()?;
    (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let idx = resample_indices(pairs.len(), seed, b);
            match bound_resampled(pairs, Some(&idx)) {
                Ok(bounds) => Ok(bounds),
                Err(Error::DenominatorStraddlesZero { .. } | Error::DegenerateVariance) => Ok(IndexBounds::unbounded()),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// `[alpha/2 quantile of the lower bounds, 1 - alpha/2 quantile of the upper
/// bounds]` over `n_boot` replications.
pub fn bootstrap_combined_ci(pairs: &CertifiedPairs, n_boot: usize, alpha: f64, seed: u64) -> Result<CombinedCI> {
    if n_boot < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replications, got {n_boot}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("risk level must lie in (0, 1), got {alpha}")));
    }
    match bound_sobol(pairs) {
        Ok(_) | Err(Error::DenominatorStraddlesZero { .. }) => {}
        Err(e) => return Err(e),
    }
    let reps = bootstrap_replications(pairs, n_boot, seed)?;
    let n_unbounded = reps.iter().filter(|r| !r.is_bounded()).count();
    if n_unbounded as f64 > UNBOUNDED_FRACTION * n_boot as f64 {
        return Ok(CombinedCI { lo: f64::NEG_INFINITY, hi: f64::INFINITY, alpha, n_boot, n_unbounded });
    }
    let lower: Vec<f64> = reps.iter().map(|r| r.s_min).collect();
    let upper: Vec<f64> = reps.iter().map(|r| r.s_max).collect();
    Ok(CombinedCI {
        lo: quantile(&lower, alpha / 2.0),
        hi: quantile(&upper, 1.0 - alpha / 2.0),
        alpha,
        n_boot,
        n_unbounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sobol::{estimate_sobol, evaluate_pairs, generate_design, FnModel, InputRange};

    fn linear_pairs(n: usize, seed: u64) -> CertifiedPairs {
        let model = FnModel::new(2, |x: &[f64]| Ok(x[0] + 2.0 * x[1]));
        let ranges = [InputRange::new(0.0, 1.0).unwrap(); 2];
        evaluate_pairs(&generate_design(&ranges, n, 0, seed).unwrap(), &model).unwrap()
    }

    #[test]
    fn quantile_examples() {
        let v = [3.0, 1.0, 4.0, 2.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.0);
        assert_eq!(quantile(&v, 0.51), 3.0);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
        // 0.975 * 200 is 195 up to rounding
        let w: Vec<f64> = (1..=200).map(f64::from).collect();
        assert_eq!(quantile(&w, 0.975), 195.0);
        assert_eq!(quantile(&w, 0.025), 5.0);
    }

    #[test]
    fn quantile_matches_sort_oracle() {
        let mut rng = stream(1, Purpose::Validation, 0);
        for _ in 0..1000 {
            let len = rng.random_range(1..60);
            let v: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
            let q: f64 = rng.random();
            let mut s = v.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // smallest value whose empirical CDF reaches q
            let oracle = *s.iter().find(|&&x| s.iter().filter(|&&y| y <= x).count() as f64 >= q * len as f64).unwrap();
            assert_eq!(quantile(&v, q), oracle);
        }
    }

    #[test]
    fn endpoints_are_order_statistics_of_replications() {
        let p = linear_pairs(120, 2).scale_radii(0.0);
        let p = CertifiedPairs { eps: vec![1e-3; 120], eps_prime: vec![2e-3; 120], ..p };
        let ci = bootstrap_combined_ci(&p, 200, 0.05, 9).unwrap();
        let mut lows = Vec::new();
        let mut highs = Vec::new();
        for b in 0..200 {
            let idx = resample_indices(120, 9, b);
            let sub = CertifiedPairs::new(
                idx.iter().map(|&k| p.y_tilde[k]).collect(),
                idx.iter().map(|&k| p.y_tilde_prime[k]).collect(),
                idx.iter().map(|&k| p.eps[k]).collect(),
                idx.iter().map(|&k| p.eps_prime[k]).collect(),
            )
            .unwrap();
            let r = bound_sobol(&sub).unwrap();
            lows.push(r.s_min);
            highs.push(r.s_max);
        }
        lows.sort_by(f64::total_cmp);
        highs.sort_by(f64::total_cmp);
        assert_eq!(ci.lo, lows[4]);
        assert_eq!(ci.hi, highs[194]);
    }

    #[test]
    fn covers_true_index_on_linear_model() {
        let covered = (0..100u64)
            .filter(|&seed| bootstrap_combined_ci(&linear_pairs(500, seed), 300, 0.05, 1000 + seed).unwrap().covers(0.2))
            .count();
        assert!(covered >= 90, "covered {covered}/100");
    }

    #[test]
    fn zero_radius_ci_contains_point_estimate() {
        let mut hits = 0;
        for seed in 0..40 {
            let p = linear_pairs(300, 500 + seed);
            let s = estimate_sobol(&p.y_tilde, &p.y_tilde_prime).unwrap();
            if bootstrap_combined_ci(&p, 300, 0.05, seed).unwrap().covers(s) {
                hits += 1;
            }
        }
        assert!(hits >= 38, "{hits}/40");
    }

    #[test]
    fn radii_only_widen() {
        let base = linear_pairs(200, 3);
        for seed in 0..10 {
            let plain = bootstrap_combined_ci(&base, 100, 0.05, seed).unwrap();
            let wide = CertifiedPairs { eps: vec![5e-3; 200], eps_prime: vec![5e-3; 200], ..base.clone() };
            let ci = bootstrap_combined_ci(&wide, 100, 0.05, seed).unwrap();
            assert!(ci.lo <= plain.lo && plain.hi <= ci.hi);
        }
    }

    #[test]
    fn constant_data_is_degenerate() {
        let p = CertifiedPairs::new(vec![1.0; 10], vec![2.0; 10], vec![0.0; 10], vec![0.0; 10]).unwrap();
        assert!(matches!(bootstrap_combined_ci(&p, 50, 0.05, 0), Err(Error::DegenerateVariance)));
    }

    #[test]
    fn too_many_unbounded_replications_give_unbounded_ci() {
        let p = linear_pairs(30, 4);
        let wide = CertifiedPairs { eps: vec![1.0; 30], eps_prime: vec![1.0; 30], ..p };
        let ci = bootstrap_combined_ci(&wide, 100, 0.05, 0).unwrap();
        assert!(!ci.is_bounded());
        assert!(ci.n_unbounded > 1);
    }

    #[test]
    fn reproducible_from_seed() {
        let p = linear_pairs(100, 5);
        assert_eq!(bootstrap_combined_ci(&p, 80, 0.1, 3).unwrap(), bootstrap_combined_ci(&p, 80, 0.1, 3).unwrap());
        assert!(bootstrap_combined_ci(&p, 1, 0.1, 3).is_err());
        assert!(bootstrap_combined_ci(&p, 10, 1.0, 3).is_err());
    }
}
