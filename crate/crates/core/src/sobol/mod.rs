//! First-order Sobol indices from certified surrogate outputs.
//!
//! The pick-freeze estimator of index `i` uses two independent samples
//! `X^k`, `X'^k` and the outputs `y_k = f(X^k)`, `y'_k = f(X'^k` with its
//! `i`-th coordinate replaced by `X^k_i)`:
//!
//! ```text
//!   S_i = (mean(y y') - mean(y) mean(y')) / (mean(y^2) - mean(y)^2)
//! ```
//!
//! When only `y_tilde` and radii `eps` are known, [`bound_sobol`] encloses
//! every value the estimator can take over the admissible boxes, and
//! [`bootstrap_combined_ci`] turns the enclosure into a confidence interval
//! that accounts for both sampling and surrogate error.

mod bootstrap;
mod bounds;
mod design;

pub use bootstrap::{bootstrap_combined_ci, bootstrap_replications, quantile, resample_indices, CombinedCI, UNBOUNDED_FRACTION};
pub use bounds::{bound_sobol, IndexBounds};
pub use design::{
    evaluate_all_indices, evaluate_outputs, evaluate_pairs, generate_design, CertifiedModel, CertifiedPairs,
    FnModel, InputRange, PickFreezeDesign, ZeroRadius,
};

use crate::error::{Error, Result};
use crate::numeric::{exact_mean, exact_sum};

/// Relative threshold on the output variance below which the estimator is undefined.
pub const DEGENERATE_VARIANCE: f64 = 1e-14;

/// Point estimate of a first-order index. Sums are correctly rounded and the
/// data are centered on the mean of `y` first, which leaves the estimator
/// unchanged and keeps the result independent of the sample order.
pub fn estimate_sobol(y: &[f64], y_prime: &[f64]) -> Result<f64> {
    let n = y.len();
    if n < 2 || y_prime.len() != n {
        return Err(Error::InvalidArgument(format!(
            "need two samples of equal length >= 2, got {} and {}",
            n,
            y_prime.len()
        )));
    }
    let c = exact_mean(y);
    let nf = n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - c).collect();
    let ypc: Vec<f64> = y_prime.iter().map(|v| v - c).collect();
    let m = exact_sum(yc.iter().copied()) / nf;
    let mp = exact_sum(ypc.iter().copied()) / nf;
    let cross = exact_sum(yc.iter().zip(&ypc).map(|(a, b)| a * b)) / nf;
    let sq = exact_sum(yc.iter().map(|a| a * a)) / nf;
    let den = sq - m * m;
    let raw_sq = exact_sum(y.iter().map(|a| a * a)) / nf;
    if den.abs() < DEGENERATE_VARIANCE * raw_sq || den == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((cross - m * mp) / den)
}
