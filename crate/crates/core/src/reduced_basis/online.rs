use super::{n_pairs, ReducedBasis};
use crate::error::{Error, Result};
use crate::model_full::{ParameterPoint, SpatialState};

/// Reduced coefficients at every time step, `coeffs[0]` being the initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub params: ParameterPoint,
    pub coeffs: Vec<Vec<f64>>,
}

impl ReducedTrajectory {
    pub fn final_coeffs(&self) -> &[f64] {
        self.coeffs.last().expect("at least the initial coefficients")
    }
}

/// Surrogate output with a rigorous radius: `|f(X) - f_tilde| <= eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedOutput {
    pub f_tilde: f64,
    pub eps: f64,
    pub eps_u_series: Vec<f64>,
}

/// Relative rounding allowance applied to the online residual norm, per
/// unit of `(rows + generators)`.
const ROUNDING_SLACK: f64 = 64.0 * f64::EPSILON;

impl ReducedBasis {
    /// Galerkin projection of the semi-implicit scheme onto the reduced space.
    pub fn solve_reduced(&self, params: &ParameterPoint) -> Result<ReducedTrajectory> {
        params.validate()?;
        let n = self.dim();
        let ops = &self.operators;
        let dt = self.disc.dt();
        let nu = params.nu;
        let s = params.shift();

        // parameter-dependent constant part of the right-hand side
        let constant: Vec<f64> = (0..n)
            .map(|m| {
                dt * (self.forcing * ops.forcing[m] + nu * ops.lift_diffusion[m]
                    - s * ops.lift_convection[m]
                    - 0.5 * ops.lift_self_convection[m])
            })
            .collect();
        let linear: Vec<f64> = ops
            .mode_convection
            .iter()
            .zip(&ops.cross_convection)
            .map(|(a, b)| dt * (s * a + b))
            .collect();
        let damping: Vec<f64> = ops.stiffness_eigenvalues.iter().map(|l| 1.0 / (1.0 + dt * nu * l)).collect();

        let mut coeffs = Vec::with_capacity(self.disc.n_steps() + 1);
        coeffs.push(vec![0.0; n]);
        let mut pairs = vec![0.0; n_pairs(n)];
        let mut rhs = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for k in 0..self.disc.n_steps() {
            let a = &coeffs[k];
            pair_products(a, &mut pairs);
            for m in 0..n {
                let lin = dot(&linear[m * n..(m + 1) * n], a);
                let quad = dot(&ops.quadratic_convection[m * pairs.len()..(m + 1) * pairs.len()], &pairs);
                rhs[m] = a[m] + constant[m] - lin - 0.5 * dt * quad;
            }
            // (I + dt nu K)^{-1} via the eigen-decomposition of K
            let q = &ops.stiffness_eigenvectors;
            for c in 0..n {
                let proj: f64 = (0..n).map(|r| q[r * n + c] * rhs[r]).sum();
                tmp[c] = damping[c] * proj;
            }
            let next: Vec<f64> = (0..n).map(|r| (0..n).map(|c| q[r * n + c] * tmp[c]).sum()).collect();
            let sup = self.sup_bound(s, &next);
            if !sup.is_finite() || sup > self.magnitude_cap {
                return Err(Error::SolverDiverged {
                    step: k + 1,
                    reason: format!("reduced state bound {sup}"),
                });
            }
            coeffs.push(next);
        }
        Ok(ReducedTrajectory { params: *params, coeffs })
    }

    /// `lift(X) + sum_j coeffs_j phi_j`.
    pub fn reconstruct(&self, params: &ParameterPoint, coeffs: &[f64]) -> SpatialState {
        let s = params.shift();
        let mut out: Vec<f64> = self.lift_profile.iter().map(|g| s + g).collect();
        for (c, mode) in coeffs.iter().zip(&self.modes) {
            for (o, m) in out.iter_mut().zip(mode) {
                *o += c * m;
            }
        }
        out[0] = s + self.lift_profile[0];
        let last = self.disc.n_space();
        out[last] = s + self.lift_profile[last];
        SpatialState(out)
    }

    /// Orthogonal projection of `state - lift(X)` onto the modes.
    pub fn project(&self, params: &ParameterPoint, state: &SpatialState) -> Vec<f64> {
        let s = params.shift();
        let z: Vec<f64> = state.values().iter().zip(&self.lift_profile).map(|(u, g)| u - s - g).collect();
        self.modes.iter().map(|m| crate::model_full::l2_inner(m, &z, &self.disc)).collect()
    }

    /// Certified bounds `eps_u(X, t_k) >= |u(X; t_k) - u_tilde(X; t_k)|` for every step.
    pub fn error_bound_series(&self, params: &ParameterPoint, traj: &ReducedTrajectory) -> Result<Vec<f64>> {
        let dt = self.disc.dt();
        let h = self.disc.h();
        let nu = params.nu;
        let s = params.shift();
        let b = &self.bound;
        let c = dt * nu;
        let rho = 1.0 / (1.0 + c * b.laplacian_min);
        let peak = (1.0 / c).clamp(b.laplacian_min, b.laplacian_max);
        let smoothing = peak.sqrt() / (1.0 + c * peak);
        let inv_sqrt_h = 1.0 / h.sqrt();

        let mut series = Vec::with_capacity(traj.coeffs.len());
        // the lift is the initial condition, so the initial error is zero
        series.push(0.0);
        let mut coeffs = vec![0.0; self.n_generators()];
        let mut pairs = vec![0.0; n_pairs(self.dim())];
        for k in 0..traj.coeffs.len() - 1 {
            let prev = series[k];
            let (a, next) = (&traj.coeffs[k], &traj.coeffs[k + 1]);
            self.residual_coefficients(params, a, next, &mut pairs, &mut coeffs);
            let residual = self.smoothed_residual_norm(&coeffs, c);
            let sup = self.sup_bound(s, a);
            let growth = dt * smoothing * (sup + 0.5 * prev * inv_sqrt_h) * prev;
            let value = (rho * prev + residual + growth).max(prev);
            if !value.is_finite() || value > self.bound_cap {
                return Err(Error::BoundBlowup { step: k + 1, value, cap: self.bound_cap });
            }
            series.push(value);
        }
        Ok(series)
    }

    /// Surrogate output and its certified radius.
    pub fn output_with_bound(&self, params: &ParameterPoint) -> Result<CertifiedOutput> {
        let traj = self.solve_reduced(params)?;
        let eps_u_series = self.error_bound_series(params, &traj)?;
        let f_tilde = self.reduced_output(params, traj.final_coeffs());
        let eps = self.bound.output_norm * eps_u_series.last().copied().unwrap_or(0.0);
        Ok(CertifiedOutput { f_tilde, eps, eps_u_series })
    }

    /// Output functional of the reconstructed state, evaluated without touching the grid.
    pub fn reduced_output(&self, params: &ParameterPoint, coeffs: &[f64]) -> f64 {
        let ops = &self.operators;
        let nodes = self.disc.n_nodes() as f64;
        let modal: f64 = coeffs.iter().zip(&ops.output_weights).map(|(a, w)| a * w).sum();
        (nodes * params.shift() + ops.lift_output + modal) / self.disc.n_space() as f64
    }

    /// Upper bound of `max_i |u_tilde_i|` from per-mode sup norms.
    fn sup_bound(&self, shift: f64, coeffs: &[f64]) -> f64 {
        let modal: f64 = coeffs.iter().zip(&self.bound.mode_sup).map(|(a, m)| a.abs() * m).sum();
        shift.abs() + self.bound.lift_sup + modal
    }

    /// Coefficients of `r^k` on the residual generators, in offline order.
    pub(crate) fn residual_coefficients(
        &self,
        params: &ParameterPoint,
        a: &[f64],
        next: &[f64],
        pairs: &mut [f64],
        out: &mut [f64],
    ) {
        let n = self.dim();
        let dt = self.disc.dt();
        let nu = params.nu;
        let s = params.shift();
        out[0] = dt * self.forcing;
        out[1] = dt * nu;
        out[2] = -dt * s;
        out[3] = -0.5 * dt;
        let base = 4;
        for j in 0..n {
            out[base + j] = a[j] - next[j];
            out[base + n + j] = dt * nu * next[j];
            out[base + 2 * n + j] = -dt * s * a[j];
            out[base + 3 * n + j] = -dt * a[j];
        }
        pair_products(a, pairs);
        for (o, p) in out[base + 4 * n..].iter_mut().zip(pairs.iter()) {
            *o = -0.5 * dt * p;
        }
    }

    /// `|A^{-1} r|` for the residual with generator coefficients `coeffs` and
    /// `A = I + diffusion (-Lap)`, inflated by a rounding-error allowance.
    pub(crate) fn smoothed_residual_norm(&self, coeffs: &[f64], diffusion: f64) -> f64 {
        let b = &self.bound;
        let q = coeffs.len();
        let rows = b.laplacian_spectrum.len();
        let mut sq = 0.0;
        for (j, lambda) in b.laplacian_spectrum.iter().enumerate() {
            let row = &b.residual_modes[j * q..(j + 1) * q];
            let v = dot(row, coeffs);
            let damped = v / (1.0 + diffusion * lambda);
            sq += damped * damped;
        }
        let weighted: f64 = coeffs.iter().zip(&b.generator_norms).map(|(c, g)| c.abs() * g).sum();
        let rows = rows as f64;
        let slack = ROUNDING_SLACK * (q as f64 + rows * (1.0 + rows.sqrt())) * weighted;
        sq.sqrt() * (1.0 + ROUNDING_SLACK) + slack
    }
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `w_ij a_i a_j` for `i <= j`, with `w = 2` off the diagonal.
fn pair_products(a: &[f64], out: &mut [f64]) {
    let n = a.len();
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            out[idx] = if i == j { a[i] * a[i] } else { 2.0 * a[i] * a[j] };
            idx += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_full::{l2_inner, l2_norm, output_functional, Discretization, FullSolver};
    use crate::reduced_basis::{build_basis, collect_snapshots, training_grid, SnapshotSet};
    use std::sync::OnceLock;

    fn snapshots() -> &'static SnapshotSet {
        static SNAPS: OnceLock<SnapshotSet> = OnceLock::new();
        SNAPS.get_or_init(|| {
            let disc = Discretization::reference();
            let training = training_grid((1.0, 20.0), (-0.3, 0.3), 5, 5);
            collect_snapshots(&training, &FullSolver::new(disc)).unwrap()
        })
    }

    /// Residual computed directly on the grid (interior nodes), as an
    /// independent check of the offline/online decomposition.
    fn grid_residual(rb: &ReducedBasis, params: &ParameterPoint, a: &[f64], next: &[f64]) -> Vec<f64> {
        let disc = rb.disc;
        let n = disc.n_space();
        let h = disc.h();
        let dt = disc.dt();
        let w = rb.reconstruct(params, a).0;
        let w1 = rb.reconstruct(params, next).0;
        (1..n)
            .map(|i| {
                let lap = (w1[i + 1] - 2.0 * w1[i] + w1[i - 1]) / (h * h);
                let flux = (w[i + 1] * w[i + 1] - w[i - 1] * w[i - 1]) / (4.0 * h);
                w[i] - w1[i] + dt * rb.forcing - dt * flux + dt * params.nu * lap
            })
            .collect()
    }

    /// `|A^{-1} r|` by a dense LU solve of `A = I + diffusion (-Lap)`.
    fn dense_smoothed_norm(r: &[f64], diffusion: f64, h: f64) -> f64 {
        let m = r.len();
        let a = nalgebra::DMatrix::from_fn(m, m, |i, j| {
            let lap = if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            };
            f64::from(u8::from(i == j)) + diffusion * lap / (h * h)
        });
        let x = a.lu().solve(&nalgebra::DVector::from_column_slice(r)).unwrap();
        (h * x.norm_squared()).sqrt()
    }

    #[test]
    fn reconstruct_of_zero_and_unit_coefficients() {
        let rb = build_basis(snapshots(), 4).unwrap();
        let p = ParameterPoint { nu: 2.0, u0m: 0.25 };
        let lift = rb.reconstruct(&p, &[0.0; 4]);
        let ic = crate::model_full::initial_condition(&p, &rb.disc);
        assert_eq!(lift, ic);
        let e1 = rb.reconstruct(&p, &[1.0, 0.0, 0.0, 0.0]);
        for ((a, b), m) in e1.values().iter().zip(lift.values()).zip(&rb.modes[0]) {
            assert!((a - b - m).abs() < 1e-15);
        }
    }

    #[test]
    fn project_then_reconstruct_round_trip() {
        let rb = build_basis(snapshots(), 6).unwrap();
        let p = ParameterPoint { nu: 4.0, u0m: -0.1 };
        let coeffs = [0.3, -0.2, 0.05, 0.0, 0.01, -0.004];
        let state = rb.reconstruct(&p, &coeffs);
        let back = rb.project(&p, &state);
        let again = rb.reconstruct(&p, &back);
        for (a, b) in state.values().iter().zip(again.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_decomposition_matches_grid_evaluation() {
        let rb = build_basis(snapshots(), 7).unwrap();
        for &(nu, u0m) in &[(1.3, 0.2), (9.0, -0.05), (17.0, 0.3)] {
            let p = ParameterPoint { nu, u0m };
            let traj = rb.solve_reduced(&p).unwrap();
            let mut c = vec![0.0; rb.n_generators()];
            let mut pairs = vec![0.0; n_pairs(rb.dim())];
            for k in 0..traj.coeffs.len() - 1 {
                rb.residual_coefficients(&p, &traj.coeffs[k], &traj.coeffs[k + 1], &mut pairs, &mut c);
                let r = grid_residual(&rb, &p, &traj.coeffs[k], &traj.coeffs[k + 1]);
                for diffusion in [0.0, rb.disc.dt() * nu] {
                    let online = rb.smoothed_residual_norm(&c, diffusion);
                    let direct = dense_smoothed_norm(&r, diffusion, rb.disc.h());
                    assert!(online >= direct, "{online} < {direct}");
                    assert!(online - direct < 1e-9 + 1e-6 * direct, "{online} vs {direct}");
                }
            }
        }
    }

    #[test]
    fn galerkin_residual_is_orthogonal_to_modes() {
        let rb = build_basis(snapshots(), 5).unwrap();
        let p = ParameterPoint { nu: 3.0, u0m: 0.17 };
        let traj = rb.solve_reduced(&p).unwrap();
        let disc = rb.disc;
        let (n, h, dt) = (disc.n_space(), disc.h(), disc.dt());
        let w = rb.reconstruct(&p, &traj.coeffs[0]).0;
        let w1 = rb.reconstruct(&p, &traj.coeffs[1]).0;
        let mut r = vec![0.0; n + 1];
        for i in 1..n {
            let lap = (w1[i + 1] - 2.0 * w1[i] + w1[i - 1]) / (h * h);
            let flux = (w[i + 1] * w[i + 1] - w[i - 1] * w[i - 1]) / (4.0 * h);
            r[i] = w[i] - w1[i] + dt - dt * flux + dt * p.nu * lap;
        }
        for m in &rb.modes {
            assert!(l2_inner(m, &r, &disc).abs() < 1e-12);
        }
    }

    #[test]
    fn sole_training_point_is_reproduced() {
        let disc = Discretization::reference();
        let p = ParameterPoint { nu: 5.0, u0m: 0.2 };
        let snaps = collect_snapshots(&[p], &FullSolver::new(disc)).unwrap();
        // K = 5 non-trivial lifted snapshots
        let rb = build_basis(&snaps, 5).unwrap();
        let full = FullSolver::new(disc).solve(&p).unwrap();
        let traj = rb.solve_reduced(&p).unwrap();
        for (k, a) in traj.coeffs.iter().enumerate() {
            let rec = rb.reconstruct(&p, a);
            for (x, y) in rec.values().iter().zip(full.states[k].values()) {
                assert!((x - y).abs() < 1e-8, "step {k}: {x} vs {y}");
            }
        }
        let bounds = rb.error_bound_series(&p, &traj).unwrap();
        assert!(bounds.iter().all(|&b| b <= 1e-6), "{bounds:?}");
    }

    #[test]
    fn training_point_error_is_at_truncation_level() {
        let rb = build_basis(snapshots(), 8).unwrap();
        let p = snapshots().parameters[7];
        let full = FullSolver::new(rb.disc).solve(&p).unwrap();
        let traj = rb.solve_reduced(&p).unwrap();
        let tail: f64 = rb.spectrum[8..].iter().sum::<f64>().sqrt();
        for (k, a) in traj.coeffs.iter().enumerate() {
            let rec = rb.reconstruct(&p, a);
            let diff = SpatialState(rec.values().iter().zip(full.states[k].values()).map(|(x, y)| x - y).collect());
            // Galerkin error stays within a modest multiple of the POD tail
            assert!(l2_norm(&diff, &rb.disc) <= 10.0 * tail + 1e-12);
        }
        let out = rb.output_with_bound(&p).unwrap();
        assert!((out.f_tilde - output_functional(&full)).abs() <= 10.0 * tail + 1e-12);
    }

    #[test]
    fn bounds_dominate_true_errors() {
        let rb = build_basis(snapshots(), 4).unwrap();
        let solver = FullSolver::new(rb.disc);
        for i in 0..20 {
            let t = i as f64 / 19.0;
            let p = ParameterPoint { nu: 1.0 + 19.0 * t * t, u0m: -0.3 + 0.6 * ((7 * i) % 20) as f64 / 19.0 };
            let full = solver.solve(&p).unwrap();
            let traj = rb.solve_reduced(&p).unwrap();
            let eps = rb.error_bound_series(&p, &traj).unwrap();
            assert_eq!(eps[0], 0.0);
            for k in 0..eps.len() {
                let rec = rb.reconstruct(&p, &traj.coeffs[k]);
                let diff = SpatialState(rec.values().iter().zip(full.states[k].values()).map(|(x, y)| x - y).collect());
                assert!(l2_norm(&diff, &rb.disc) <= eps[k]);
                if k > 0 {
                    assert!(eps[k] >= eps[k - 1]);
                }
            }
            let out = rb.output_with_bound(&p).unwrap();
            assert!((out.f_tilde - output_functional(&full)).abs() <= out.eps);
            assert!((out.f_tilde - crate::model_full::state_output(&rb.reconstruct(&p, traj.final_coeffs()), &rb.disc)).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_cap_reports_blowup() {
        let rb = build_basis(snapshots(), 2).unwrap().with_bound_cap(1e-14);
        let p = ParameterPoint { nu: 1.0, u0m: 0.3 };
        assert!(matches!(rb.output_with_bound(&p), Err(Error::BoundBlowup { .. })));
    }

    #[test]
    fn repeated_solves_are_identical() {
        let rb = build_basis(snapshots(), 6).unwrap();
        let p = ParameterPoint { nu: 11.0, u0m: -0.2 };
        assert_eq!(rb.solve_reduced(&p).unwrap(), rb.solve_reduced(&p).unwrap());
        assert_eq!(rb.output_with_bound(&p).unwrap(), rb.output_with_bound(&p).unwrap());
    }
}
