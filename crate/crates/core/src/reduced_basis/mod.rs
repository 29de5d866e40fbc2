//! Reduced-basis surrogate of the Burgers solver with certified error bounds.
//!
//! The reduced state is `lift(X) + sum_j a_j phi_j` where the lift
//! `u0m^2 + 5 sin(x/2)` is the initial condition itself, so the reduced
//! trajectory starts from `a = 0` with zero initial error. The modes `phi_j`
//! are POD modes of lifted snapshots and vanish on the boundary.
//!
//! # Certified bound
//!
//! Write one full step as `A u^{k+1} = u^k + dt G(u^k)` on interior nodes with
//! `A = I + dt nu (-Lap)` and `G(u) = f - Dc(u^2)/2`. For the reduced iterate
//! `w^k` define the residual `r^k = w^k + dt G(w^k) - A w^{k+1}`. The error
//! `e^k = u^k - w^k` vanishes on the boundary and satisfies
//!
//! ```text
//!   A e^{k+1} = e^k + dt (G(u^k) - G(w^k)) + r^k,
//!   G(u) - G(w) = -(1/4h) D ((2 w + e) e),   D v_i = v_{i+1} - v_{i-1}.
//! ```
//!
//! With `lambda_1 <= lambda <= lambda_max` the spectrum of `-Lap`:
//!
//! * `|A^{-1}| = 1 / (1 + dt nu lambda_1) =: rho`;
//! * `A^{-1} r` is evaluated exactly in the sine eigenbasis `s_j` of `-Lap`:
//!   `|A^{-1} r|^2 = sum_j <s_j, r>^2 / (1 + dt nu lambda_j)^2`;
//! * `|D v|^2 <= 4 h^2 v^T(-Lap)v`, hence `|A^{-1} D| <= 2h g` with
//!   `g = max_lambda sqrt(lambda) / (1 + dt nu lambda)`;
//! * `|(2w + e) e| <= (2 M^k + |e|_inf) |e|` where `M^k >= max|w^k|` and
//!   `|e|_inf <= |e| / sqrt(h)`.
//!
//! All norms are the discrete L2 norm. This gives the recursion
//!
//! ```text
//!   eps^{k+1} = rho eps^k + |A^{-1} r^k| + dt g (M^k + eps^k / (2 sqrt h)) eps^k,
//! ```
//!
//! kept non-decreasing by taking the running maximum. `r^k` is affine in a
//! fixed set of generators with coefficients known online; their sine
//! coordinates are stored offline, so `|A^{-1} r^k|` costs one small
//! matrix-vector product per step, plus a rounding-error allowance. The output
//! bound is `|l| eps^K`, with `|l|` the exact norm of the output functional on
//! boundary-vanishing vectors.

mod offline;
mod online;
mod persist;

pub use offline::{build_basis, collect_snapshots, training_grid, SnapshotSet};
pub use online::{CertifiedOutput, ReducedTrajectory};
pub use persist::FORMAT_VERSION;

use serde::{Deserialize, Serialize};

use crate::model_full::Discretization;

/// Default cap on the state error bound before a solve is reported as a blowup.
pub const DEFAULT_BOUND_CAP: f64 = 1e3;

/// Offline data of the reduced model: modes, projected operators and the
/// parameter-independent ingredients of the online error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedBasis {
    pub(crate) format_version: u32,
    pub(crate) disc: Discretization,
    pub(crate) forcing: f64,
    /// `n x (N+1)`, orthonormal in the discrete L2 inner product.
    pub(crate) modes: Vec<Vec<f64>>,
    /// Parameter-free part `5 sin(x/2)` of the lift.
    pub(crate) lift_profile: Vec<f64>,
    /// All POD eigenvalues of the snapshot set, descending.
    pub(crate) spectrum: Vec<f64>,
    pub(crate) operators: ProjectedOperators,
    pub(crate) bound: BoundIngredients,
    pub(crate) magnitude_cap: f64,
    pub(crate) bound_cap: f64,
}

/// Galerkin projections `<phi_m, .>` of every term of the scheme. Matrices are
/// row-major in `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ProjectedOperators {
    /// `-<phi_m, Lap phi_j>`.
    pub stiffness: Vec<f64>,
    pub stiffness_eigenvalues: Vec<f64>,
    /// Column `j` holds the `j`-th eigenvector.
    pub stiffness_eigenvectors: Vec<f64>,
    /// `<phi_m, 1>`.
    pub forcing: Vec<f64>,
    /// `<phi_m, Lap g>`.
    pub lift_diffusion: Vec<f64>,
    /// `<phi_m, Dc g>`.
    pub lift_convection: Vec<f64>,
    /// `<phi_m, Dc g^2>`.
    pub lift_self_convection: Vec<f64>,
    /// `<phi_m, Dc phi_j>`.
    pub mode_convection: Vec<f64>,
    /// `<phi_m, Dc (g phi_j)>`.
    pub cross_convection: Vec<f64>,
    /// `<phi_m, Dc (phi_i phi_j)>` for `i <= j`, pairs in row-major upper order.
    pub quadratic_convection: Vec<f64>,
    /// `sum_i phi_j(x_i)`.
    pub output_weights: Vec<f64>,
    /// `sum_i g(x_i)`.
    pub lift_output: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct BoundIngredients {
    /// `<s_j, v_q>` for the sine eigenvectors `s_j` of `-Lap` and the
    /// residual generators `v_q`, row-major (`interior nodes x generators`).
    pub residual_modes: Vec<f64>,
    /// Eigenvalues of `-Lap` matching the rows of `residual_modes`.
    pub laplacian_spectrum: Vec<f64>,
    pub generator_norms: Vec<f64>,
    /// `max_i |phi_j(x_i)|`.
    pub mode_sup: Vec<f64>,
    /// `max_i |g(x_i)|`.
    pub lift_sup: f64,
    /// Extreme eigenvalues of the Dirichlet operator `-Lap`.
    pub laplacian_min: f64,
    pub laplacian_max: f64,
    /// Norm of the output functional on boundary-vanishing vectors.
    pub output_norm: f64,
}

impl ReducedBasis {
    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn forcing(&self) -> f64 {
        self.forcing
    }

    pub fn bound_cap(&self) -> f64 {
        self.bound_cap
    }

    pub fn with_bound_cap(mut self, cap: f64) -> Self {
        self.bound_cap = cap;
        self
    }

    /// Number of residual generators, `4 + 4n + n(n+1)/2`.
    pub fn n_generators(&self) -> usize {
        n_generators(self.dim())
    }
}

pub(crate) fn n_pairs(n: usize) -> usize {
    n * (n + 1) / 2
}

pub(crate) fn n_generators(n: usize) -> usize {
    4 + 4 * n + n_pairs(n)
}
