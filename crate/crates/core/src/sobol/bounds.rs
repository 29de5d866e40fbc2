use crate::error::{Error, Result};
use crate::numeric::{ExactSum, Interval, IntervalSum};

use super::design::CertifiedPairs;
use super::DEGENERATE_VARIANCE;

/// Deterministic enclosure `[s_min, s_max]` of the estimator over every
/// admissible truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexBounds {
    pub s_min: f64,
    pub s_max: f64,
}

impl IndexBounds {
    pub fn unbounded() -> Self {
        IndexBounds { s_min: f64::NEG_INFINITY, s_max: f64::INFINITY }
    }

    pub fn width(&self) -> f64 {
        self.s_max - self.s_min
    }

    pub fn contains(&self, s: f64) -> bool {
        self.s_min <= s && s <= self.s_max
    }

    pub fn is_bounded(&self) -> bool {
        self.s_min.is_finite() && self.s_max.is_finite()
    }
}

/// Encloses the estimator over the boxes `|y_k - y_tilde_k| <= eps_k`,
/// `|y'_k - y_tilde'_k| <= eps'_k`.
///
/// Every term is shifted by the mean `c` of `y_tilde` (the estimator is
/// shift-invariant), enclosed with outward-rounded interval arithmetic and
/// accumulated with exactly rounded sums, so the result does not depend on
/// the order of the samples.
pub fn bound_sobol(pairs: &CertifiedPairs) -> Result<IndexBounds> {
    pairs.validate()?;
    bound_resampled(pairs, None)
}

/// Same as [`bound_sobol`] on the pairs selected by `idx` (with repetition).
pub(crate) fn bound_resampled(pairs: &CertifiedPairs, idx: Option<&[usize]>) -> Result<IndexBounds> {
    let n = idx.map_or(pairs.len(), <[usize]>::len);
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 pairs, got {n}")));
    }
    let at = |j: usize| idx.map_or(j, |v| v[j]);

    let mut sum_y = ExactSum::new();
    let mut sum_sq_raw = ExactSum::new();
    for j in 0..n {
        let y = pairs.y_tilde[at(j)];
        sum_y.add(y);
        sum_sq_raw.add(y * y);
    }
    let nf = n as f64;
    let c = sum_y.value() / nf;

    let mut s_y = IntervalSum::new();
    let mut s_yp = IntervalSum::new();
    let mut s_cross = IntervalSum::new();
    let mut s_sq = IntervalSum::new();
    let mut point_sq = ExactSum::new();
    let mut point_y = ExactSum::new();
    for j in 0..n {
        let k = at(j);
        let yc = pairs.y_tilde[k] - c;
        point_y.add(yc);
        point_sq.add(yc * yc);
        let y = shifted(pairs.y_tilde[k], c, pairs.eps[k]);
        let yp = shifted(pairs.y_tilde_prime[k], c, pairs.eps_prime[k]);
        s_y.add(y);
        s_yp.add(yp);
        s_cross.add(y * yp);
        s_sq.add(y.square());
    }

    let m = point_y.value() / nf;
    let point_den = point_sq.value() / nf - m * m;
    if point_den.abs() < DEGENERATE_VARIANCE * (sum_sq_raw.value() / nf) || point_den == 0.0 {
        return Err(Error::DegenerateVariance);
    }

    let mean_y = s_y.mean(n);
    let num = s_cross.mean(n) - mean_y * s_yp.mean(n);
    let den = s_sq.mean(n) - mean_y.square();
    if den.lo <= 0.0 {
        return Err(Error::DenominatorStraddlesZero { lo: den.lo, hi: den.hi });
    }
    let s = num.div_positive(den);
    Ok(IndexBounds { s_min: s.lo, s_max: s.hi })
}

/// Encloses `[v - c - r, v - c + r]`.
fn shifted(v: f64, c: f64, r: f64) -> Interval {
    let d = v - c;
    // v - c is rounded, so widen by one ulp even when r = 0
    Interval { lo: (d - r).next_down(), hi: (d + r).next_up() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use crate::sobol::estimate_sobol;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_pairs(seed: u64, n: usize, radius: f64) -> CertifiedPairs {
        let mut rng = stream(seed, Purpose::Validation, 0);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let yp: Vec<f64> = y.iter().map(|v| 0.6 * v + 0.4 * rng.random_range(-1.0..1.0)).collect();
        let e: Vec<f64> = (0..n).map(|_| radius * rng.random::<f64>()).collect();
        let ep: Vec<f64> = (0..n).map(|_| radius * rng.random::<f64>()).collect();
        CertifiedPairs::new(y, yp, e, ep).unwrap()
    }

    #[test]
    fn sampled_truths_stay_inside() {
        for seed in 0..5 {
            let p = random_pairs(seed, 8, 0.05);
            let b = bound_sobol(&p).unwrap();
            let mut rng = stream(seed, Purpose::Validation, 1);
            for _ in 0..20_000 {
                let y: Vec<f64> = (0..8).map(|k| p.y_tilde[k] + p.eps[k] * rng.random_range(-1.0..=1.0)).collect();
                let yp: Vec<f64> =
                    (0..8).map(|k| p.y_tilde_prime[k] + p.eps_prime[k] * rng.random_range(-1.0..=1.0)).collect();
                let s = estimate_sobol(&y, &yp).unwrap();
                assert!(b.contains(s), "{s} outside {b:?}");
            }
        }
    }

    #[test]
    fn all_box_vertices_stay_inside() {
        for seed in 10..14 {
            let p = random_pairs(seed, 4, 0.05);
            let b = bound_sobol(&p).unwrap();
            for mask in 0u32..256 {
                let sign = |bit: u32| if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
                let y: Vec<f64> = (0..4).map(|k| p.y_tilde[k] + sign(k as u32) * p.eps[k]).collect();
                let yp: Vec<f64> = (0..4).map(|k| p.y_tilde_prime[k] + sign(4 + k as u32) * p.eps_prime[k]).collect();
                let s = estimate_sobol(&y, &yp).unwrap();
                assert!(b.contains(s), "vertex {mask}: {s} outside {b:?}");
            }
        }
    }

    #[test]
    fn zero_radii_collapse_to_point_estimate() {
        let p = random_pairs(3, 200, 0.0);
        let b = bound_sobol(&p).unwrap();
        let s = estimate_sobol(&p.y_tilde, &p.y_tilde_prime).unwrap();
        assert!(b.contains(s));
        assert!(b.width() < 1e-13 * s.abs().max(1.0), "{b:?}");
    }

    #[test]
    fn large_radii_straddle() {
        let p = random_pairs(4, 20, 0.0).scale_radii(0.0);
        let wide = CertifiedPairs { eps: vec![5.0; 20], eps_prime: vec![5.0; 20], ..p };
        assert!(matches!(bound_sobol(&wide), Err(Error::DenominatorStraddlesZero { .. })));
    }

    #[test]
    fn constant_outputs_are_degenerate() {
        let p = CertifiedPairs::new(vec![1.5; 6], vec![0.5; 6], vec![0.0; 6], vec![0.0; 6]).unwrap();
        assert!(matches!(bound_sobol(&p), Err(Error::DegenerateVariance)));
    }

    #[test]
    fn doubling_radii_never_shrinks() {
        for seed in 20..40 {
            let p = random_pairs(seed, 50, 0.01);
            let a = bound_sobol(&p).unwrap();
            let b = bound_sobol(&p.scale_radii(2.0)).unwrap();
            assert!(b.s_min <= a.s_min && a.s_max <= b.s_max);
        }
    }

    proptest! {
        #[test]
        fn joint_permutation_leaves_bounds_unchanged(seed in 0u64..1000, rot in 0usize..30) {
            let p = random_pairs(seed, 30, 0.02);
            let perm: Vec<usize> = (0..30).map(|k| (k * 7 + rot) % 30).collect();
            let q = CertifiedPairs::new(
                perm.iter().map(|&k| p.y_tilde[k]).collect(),
                perm.iter().map(|&k| p.y_tilde_prime[k]).collect(),
                perm.iter().map(|&k| p.eps[k]).collect(),
                perm.iter().map(|&k| p.eps_prime[k]).collect(),
            ).unwrap();
            prop_assert_eq!(bound_sobol(&p).unwrap(), bound_sobol(&q).unwrap());
        }
    }
}
