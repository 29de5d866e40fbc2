use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model_full::{FullSolver, ParameterPoint};
use crate::reduced_basis::ReducedBasis;
use crate::rng::{stream, Purpose};

/// Support of a uniformly distributed input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputRange {
    pub lo: f64,
    pub hi: f64,
}

impl InputRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid range [{lo}, {hi}]")));
        }
        Ok(InputRange { lo, hi })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.lo + (self.hi - self.lo) * rng.random::<f64>()
    }
}

/// The two independent samples of a pick-freeze estimate. `frozen_index` is
/// zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeDesign {
    pub x: Vec<Vec<f64>>,
    pub x_prime: Vec<Vec<f64>>,
    pub frozen_index: usize,
    pub seed: u64,
}

impl PickFreezeDesign {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// `X'^k` with its frozen coordinate taken from `X^k`.
    pub fn frozen_point(&self, k: usize) -> Vec<f64> {
        let mut p = self.x_prime[k].clone();
        p[self.frozen_index] = self.x[k][self.frozen_index];
        p
    }

    pub fn with_frozen_index(&self, i: usize) -> Self {
        PickFreezeDesign { frozen_index: i, ..self.clone() }
    }
}

/// Draw `n` i.i.d. couples `(X^k, X'^k)` uniform over the product of `ranges`.
/// Sample `k` comes from its own random stream, so a design of size `n` is a
/// prefix of any larger design with the same seed.
pub fn generate_design(ranges: &[InputRange], n: usize, frozen_index: usize, seed: u64) -> Result<PickFreezeDesign> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("sample size must be >= 2, got {n}")));
    }
    if frozen_index >= ranges.len() {
        return Err(Error::InvalidArgument(format!(
            "frozen index {frozen_index} out of range for {} inputs",
            ranges.len()
        )));
    }
    let (x, x_prime) = (0..n)
        .map(|k| {
            let mut rng = stream(seed, Purpose::Design, k as u64);
            let a: Vec<f64> = ranges.iter().map(|r| r.sample(&mut rng)).collect();
            let b: Vec<f64> = ranges.iter().map(|r| r.sample(&mut rng)).collect();
            (a, b)
        })
        .unzip();
    Ok(PickFreezeDesign { x, x_prime, frozen_index, seed })
}

/// A model returning an output together with a rigorous error radius.
pub trait CertifiedModel: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Result<(f64, f64)>;
}

impl CertifiedModel for ReducedBasis {
    fn dim(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64]) -> Result<(f64, f64)> {
        let out = self.output_with_bound(&ParameterPoint::from_slice(x)?)?;
        Ok((out.f_tilde, out.eps))
    }
}

impl CertifiedModel for FullSolver {
    fn dim(&self) -> usize {
        2
    }

    fn evaluate(&self, x: &[f64]) -> Result<(f64, f64)> {
        Ok((self.output(&ParameterPoint::from_slice(x)?)?, 0.0))
    }
}

/// Exact model given by a closure.
pub struct FnModel<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> Result<f64> + Sync> FnModel<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnModel { dim, f }
    }
}

impl<F: Fn(&[f64]) -> Result<f64> + Sync> CertifiedModel for FnModel<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<(f64, f64)> {
        Ok(((self.f)(x)?, 0.0))
    }
}

/// Discards the radii of the wrapped model.
pub struct ZeroRadius<'a, M: ?Sized>(pub &'a M);

impl<M: CertifiedModel + ?Sized> CertifiedModel for ZeroRadius<'_, M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn evaluate(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.0.evaluate(x).map(|(v, _)| (v, 0.0))
    }
}

/// Surrogate outputs and radii of one pick-freeze couple.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedPairs {
    pub y_tilde: Vec<f64>,
    pub y_tilde_prime: Vec<f64>,
    pub eps: Vec<f64>,
    pub eps_prime: Vec<f64>,
}

const PAIRS_HEADER: [&str; 5] = ["k", "y_tilde", "y_tilde_prime", "eps", "eps_prime"];

impl CertifiedPairs {
    pub fn new(y_tilde: Vec<f64>, y_tilde_prime: Vec<f64>, eps: Vec<f64>, eps_prime: Vec<f64>) -> Result<Self> {
        let p = CertifiedPairs { y_tilde, y_tilde_prime, eps, eps_prime };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y_tilde.len();
        if self.y_tilde_prime.len() != n || self.eps.len() != n || self.eps_prime.len() != n {
            return Err(Error::InvalidArgument("pair arrays have different lengths".into()));
        }
        if self.eps.iter().chain(&self.eps_prime).any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Error::InvalidArgument("radii must be finite and non-negative".into()));
        }
        if self.y_tilde.iter().chain(&self.y_tilde_prime).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("outputs must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_tilde.is_empty()
    }

    /// Same outputs with every radius multiplied by `factor`.
    pub fn scale_radii(&self, factor: f64) -> Self {
        CertifiedPairs {
            eps: self.eps.iter().map(|e| e * factor).collect(),
            eps_prime: self.eps_prime.iter().map(|e| e * factor).collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(PAIRS_HEADER)?;
        for k in 0..self.len() {
            w.write_record([
                k.to_string(),
                self.y_tilde[k].to_string(),
                self.y_tilde_prime[k].to_string(),
                self.eps[k].to_string(),
                self.eps_prime[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != PAIRS_HEADER {
            return Err(Error::Csv(format!("unexpected header {header:?}")));
        }
        let mut cols: [Vec<f64>; 4] = Default::default();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let k: usize = rec[0].trim().parse().map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
            if k != row {
                return Err(Error::Csv(format!("row {row} has k = {k}")));
            }
            for (c, col) in cols.iter_mut().enumerate() {
                let v: f64 = rec[c + 1].trim().parse().map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
                col.push(v);
            }
        }
        let [y, yp, e, ep] = cols;
        CertifiedPairs::new(y, yp, e, ep)
    }
}

/// Evaluate `model` at every point, in parallel; errors carry the point index.
pub fn evaluate_outputs<M: CertifiedModel + ?Sized>(points: &[Vec<f64>], model: &M) -> Result<(Vec<f64>, Vec<f64>)> {
    let results: Vec<(f64, f64)> = points
        .par_iter()
        .enumerate()
        .map(|(index, x)| model.evaluate(x).map_err(|e| Error::SampleFailed { index, source: Box::new(e) }))
        .collect::<Result<_>>()?;
    Ok(results.into_iter().unzip())
}

pub fn evaluate_pairs<M: CertifiedModel + ?Sized>(design: &PickFreezeDesign, model: &M) -> Result<CertifiedPairs> {
    let (y, eps) = evaluate_outputs(&design.x, model)?;
    frozen_pairs(design, model, y, eps)
}

/// Pairs for every input index, reusing the outputs at `X^k`.
pub fn evaluate_all_indices<M: CertifiedModel + ?Sized>(
    design: &PickFreezeDesign,
    model: &M,
) -> Result<Vec<CertifiedPairs>> {
    let (y, eps) = evaluate_outputs(&design.x, model)?;
    (0..design.dim())
        .map(|i| frozen_pairs(&design.with_frozen_index(i), model, y.clone(), eps.clone()))
        .collect()
}

fn frozen_pairs<M: CertifiedModel + ?Sized>(
    design: &PickFreezeDesign,
    model: &M,
    y: Vec<f64>,
    eps: Vec<f64>,
) -> Result<CertifiedPairs> {
    let frozen: Vec<Vec<f64>> = (0..design.len()).map(|k| design.frozen_point(k)).collect();
    let (yp, epsp) = evaluate_outputs(&frozen, model)?;
    CertifiedPairs::new(y, yp, eps, epsp)
}
