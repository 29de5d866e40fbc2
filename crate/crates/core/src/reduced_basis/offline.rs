use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::{n_generators, n_pairs, BoundIngredients, ProjectedOperators, ReducedBasis, DEFAULT_BOUND_CAP};
use crate::error::{Error, Result};
use crate::model_full::{l2_inner, quadrature_weights, sine_profile, Discretization, FullSolver, ParameterPoint, SpatialState};

/// Relative singular-value threshold below which POD directions are treated as noise.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Full-order states gathered over a training set.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub parameters: Vec<ParameterPoint>,
    pub states: Vec<SpatialState>,
    /// Index into `parameters` of the trajectory each state came from.
    pub owners: Vec<usize>,
    pub disc: Discretization,
    pub forcing: f64,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Tensor grid with geometric spacing in `nu` and uniform spacing in `u0m`.
pub fn training_grid(nu_range: (f64, f64), u0m_range: (f64, f64), n_nu: usize, n_u0m: usize) -> Vec<ParameterPoint> {
    let axis = |n: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        if n == 1 {
            vec![f(0.5)]
        } else {
            (0..n).map(|i| f(i as f64 / (n - 1) as f64)).collect()
        }
    };
    let (nu_lo, nu_hi) = nu_range;
    let nus = axis(n_nu, &|t| nu_lo * (nu_hi / nu_lo).powf(t));
    let (u_lo, u_hi) = u0m_range;
    let us = axis(n_u0m, &|t| u_lo + (u_hi - u_lo) * t);
    let mut out = Vec::with_capacity(n_nu * n_u0m);
    for &nu in &nus {
        for &u0m in &us {
            out.push(ParameterPoint { nu, u0m });
        }
    }
    out
}

/// Run the full solver at every training point and keep every time slice.
pub fn collect_snapshots(training: &[ParameterPoint], solver: &FullSolver) -> Result<SnapshotSet> {
    if training.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let trajectories: Vec<_> = training
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            solver.solve(p).map_err(|e| Error::TrainingFailed {
                index,
                nu: p.nu,
                u0m: p.u0m,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut states = Vec::new();
    let mut owners = Vec::new();
    for (i, traj) in trajectories.into_iter().enumerate() {
        for s in traj.states {
            states.push(s);
            owners.push(i);
        }
    }
    Ok(SnapshotSet {
        parameters: training.to_vec(),
        states,
        owners,
        disc: solver.disc,
        forcing: solver.forcing,
    })
}

/// Interior-row three-point operators on full nodal vectors.
pub(crate) struct Stencils {
    pub n_space: usize,
    pub h: f64,
}

impl Stencils {
    pub fn new(disc: &Discretization) -> Self {
        Stencils { n_space: disc.n_space(), h: disc.h() }
    }

    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        v[1..self.n_space].to_vec()
    }

    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let h2 = self.h * self.h;
        (1..self.n_space).map(|i| (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2).collect()
    }

    pub fn centered(&self, v: &[f64]) -> Vec<f64> {
        (1..self.n_space).map(|i| (v[i + 1] - v[i - 1]) / (2.0 * self.h)).collect()
    }

    pub fn ones(&self) -> Vec<f64> {
        vec![1.0; self.n_space - 1]
    }

    /// Discrete L2 product of a full-node mode (zero on the boundary) with an interior vector.
    pub fn project(&self, mode: &[f64], interior: &[f64]) -> f64 {
        self.h * mode[1..self.n_space].iter().zip(interior).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// POD of lifted snapshots followed by precomputation of every online quantity.
pub fn build_basis(snapshots: &SnapshotSet, n: usize) -> Result<ReducedBasis> {
    if n == 0 || n > snapshots.len() {
        return Err(Error::InvalidArgument(format!(
            "basis size must be in [1, {}], got {n}",
            snapshots.len()
        )));
    }
    let disc = snapshots.disc;
    let profile = sine_profile(&disc);
    let lifted: Vec<Vec<f64>> = snapshots
        .states
        .iter()
        .zip(&snapshots.owners)
        .map(|(s, &o)| {
            let shift = snapshots.parameters[o].shift();
            let mut z: Vec<f64> = s.values().iter().zip(&profile).map(|(u, g)| u - (shift + g)).collect();
            z[0] = 0.0;
            z[disc.n_space()] = 0.0;
            z
        })
        .collect();

    let (spectrum, modes) = pod_modes(&lifted, &disc, n)?;
    Ok(assemble(disc, snapshots.forcing, modes, profile, spectrum))
}

/// POD through a thin SVD of the quadrature-weighted snapshot matrix. The
/// returned spectrum holds the squared singular values, i.e. the eigenvalues
/// of the snapshot Gram matrix, descending.
fn pod_modes(lifted: &[Vec<f64>], disc: &Discretization, n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let weights = quadrature_weights(disc);
    let rows = disc.n_space() - 1;
    let z = DMatrix::from_fn(rows, lifted.len(), |i, a| weights[i + 1].sqrt() * lifted[a][i + 1]);
    let svd = z.svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let largest = sigma.first().copied().unwrap_or(0.0);
    let available = if largest > 0.0 {
        sigma.iter().filter(|&&s| s > RANK_TOLERANCE * largest).count()
    } else {
        0
    };
    if available < n {
        return Err(Error::RankDeficient { requested: n, available });
    }
    let spectrum = sigma.iter().map(|s| s * s).collect();

    let mut modes: Vec<Vec<f64>> = order
        .iter()
        .take(n)
        .map(|&col| {
            let mut phi = vec![0.0; disc.n_nodes()];
            for i in 0..rows {
                phi[i + 1] = u[(i, col)] / weights[i + 1].sqrt();
            }
            phi
        })
        .collect();
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for j in 0..n {
            for i in 0..j {
                let c = l2_inner(&modes[j], &modes[i], disc);
                let (head, tail) = modes.split_at_mut(j);
                for (p, q) in tail[0].iter_mut().zip(&head[i]) {
                    *p -= c * q;
                }
            }
            let norm = l2_inner(&modes[j], &modes[j], disc).sqrt();
            modes[j].iter_mut().for_each(|p| *p /= norm);
        }
    }
    for phi in modes.iter_mut() {
        let peak = phi.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0);
        if peak < 0.0 {
            phi.iter_mut().for_each(|p| *p = -*p);
        }
    }
    Ok((spectrum, modes))
}

pub(crate) fn assemble(
    disc: Discretization,
    forcing: f64,
    modes: Vec<Vec<f64>>,
    profile: Vec<f64>,
    spectrum: Vec<f64>,
) -> ReducedBasis {
    let n = modes.len();
    let st = Stencils::new(&disc);
    let h = disc.h();

    let ones = st.ones();
    let lap_g = st.laplacian(&profile);
    let dc_g = st.centered(&profile);
    let g_sq: Vec<f64> = profile.iter().map(|g| g * g).collect();
    let dc_g_sq = st.centered(&g_sq);
    let restricted: Vec<Vec<f64>> = modes.iter().map(|m| st.restrict(m)).collect();
    let lap_modes: Vec<Vec<f64>> = modes.iter().map(|m| st.laplacian(m)).collect();
    let dc_modes: Vec<Vec<f64>> = modes.iter().map(|m| st.centered(m)).collect();
    let dc_cross: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| {
            let prod: Vec<f64> = m.iter().zip(&profile).map(|(a, b)| a * b).collect();
            st.centered(&prod)
        })
        .collect();
    let mut dc_quad: Vec<Vec<f64>> = Vec::with_capacity(n_pairs(n));
    for i in 0..n {
        for j in i..n {
            let prod: Vec<f64> = modes[i].iter().zip(&modes[j]).map(|(a, b)| a * b).collect();
            dc_quad.push(st.centered(&prod));
        }
    }

    let proj_vec = |v: &[f64]| -> Vec<f64> { modes.iter().map(|m| st.project(m, v)).collect() };
    let proj_mat = |vs: &[Vec<f64>]| -> Vec<f64> {
        let mut out = Vec::with_capacity(n * vs.len());
        for m in &modes {
            for v in vs {
                out.push(st.project(m, v));
            }
        }
        out
    };

    let mut stiffness = proj_mat(&lap_modes);
    stiffness.iter_mut().for_each(|k| *k = -*k);
    // symmetrize rounding noise before the eigen-decomposition
    let k_mat = DMatrix::from_fn(n, n, |a, b| 0.5 * (stiffness[a * n + b] + stiffness[b * n + a]));
    let k_eig = SymmetricEigen::new(k_mat);
    let stiffness_eigenvalues: Vec<f64> = k_eig.eigenvalues.iter().copied().collect();
    let mut stiffness_eigenvectors = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            stiffness_eigenvectors[r * n + c] = k_eig.eigenvectors[(r, c)];
        }
    }

    let operators = ProjectedOperators {
        stiffness,
        stiffness_eigenvalues,
        stiffness_eigenvectors,
        forcing: proj_vec(&ones),
        lift_diffusion: proj_vec(&lap_g),
        lift_convection: proj_vec(&dc_g),
        lift_self_convection: proj_vec(&dc_g_sq),
        mode_convection: proj_mat(&dc_modes),
        cross_convection: proj_mat(&dc_cross),
        quadratic_convection: proj_mat(&dc_quad),
        output_weights: modes.iter().map(|m| m.iter().sum()).collect(),
        lift_output: profile.iter().sum(),
    };

    // residual generators, in the order used by `online::residual_coefficients`
    let mut generators: Vec<&[f64]> = Vec::with_capacity(n_generators(n));
    generators.push(&ones);
    generators.push(&lap_g);
    generators.push(&dc_g);
    generators.push(&dc_g_sq);
    generators.extend(restricted.iter().map(|v| v.as_slice()));
    generators.extend(lap_modes.iter().map(|v| v.as_slice()));
    generators.extend(dc_modes.iter().map(|v| v.as_slice()));
    generators.extend(dc_cross.iter().map(|v| v.as_slice()));
    generators.extend(dc_quad.iter().map(|v| v.as_slice()));
    let q = generators.len();
    let rows = disc.n_space() - 1;
    let generator_norms: Vec<f64> =
        generators.iter().map(|g| (h * g.iter().map(|x| x * x).sum::<f64>()).sqrt()).collect();
    // coordinates of the generators in the orthonormal sine eigenbasis of -Lap
    let sine = |j: usize, i: usize| std::f64::consts::SQRT_2 * ((j + 1) as f64 * std::f64::consts::PI * (i + 1) as f64 * h).sin();
    let mut residual_modes = vec![0.0; rows * q];
    for j in 0..rows {
        let s_j: Vec<f64> = (0..rows).map(|i| sine(j, i)).collect();
        for (c, g) in generators.iter().enumerate() {
            residual_modes[j * q + c] = h * s_j.iter().zip(g.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let laplacian_spectrum: Vec<f64> = (1..=rows)
        .map(|j| 4.0 / (h * h) * (j as f64 * std::f64::consts::PI * h / 2.0).sin().powi(2))
        .collect();

    let sup = |v: &[f64]| v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let nf = disc.n_space() as f64;
    let half_angle = std::f64::consts::PI * h / 2.0;
    let bound = BoundIngredients {
        residual_modes,
        laplacian_spectrum,
        generator_norms,
        mode_sup: modes.iter().map(|m| sup(m)).collect(),
        lift_sup: sup(&profile),
        laplacian_min: 4.0 / (h * h) * half_angle.sin().powi(2),
        laplacian_max: 4.0 / (h * h) * ((nf - 1.0) * half_angle).sin().powi(2),
        output_norm: ((nf - 1.0) / nf).sqrt(),
    };

    ReducedBasis {
        format_version: super::persist::FORMAT_VERSION,
        disc,
        forcing,
        modes,
        lift_profile: profile,
        spectrum,
        operators,
        bound,
        magnitude_cap: crate::model_full::DEFAULT_MAGNITUDE_CAP,
        bound_cap: DEFAULT_BOUND_CAP,
    }
}
