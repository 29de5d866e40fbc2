//! Reference finite-difference solver for the parametrized viscous Burgers problem
//!
//! ```text
//!   u_t + (u^2 / 2)_x - nu u_xx = 1     on (0, 1) x (0, T]
//!   u(0, x) = u0m^2 + 5 sin(x / 2)
//!   u(t, 0) = u0m^2,  u(t, 1) = u0m^2 + 5 sin(1/2)
//! ```
//!
//! Time stepping is semi-implicit: backward Euler for the diffusion, forward
//! Euler for the conservative convection flux and the forcing. Space is
//! discretized by second-order centered differences on a uniform grid of
//! `n_space + 1` nodes, and Dirichlet data is imposed strongly on the two
//! boundary nodes. One step therefore solves
//!
//! ```text
//!   (I - dt nu Lap) u^{k+1} = u^k - dt/2 Dc (u^k)^2 + dt f
//! ```
//!
//! on the interior nodes, with `Lap` and `Dc` the usual three-point stencils.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude of the sine part of the initial condition.
pub const SINE_AMPLITUDE: f64 = 5.0;
/// Spatial frequency of the sine part of the initial condition.
pub const SINE_FREQUENCY: f64 = 0.5;
/// Default per-node magnitude above which a solve is declared diverged.
pub const DEFAULT_MAGNITUDE_CAP: f64 = 1e6;

/// A value of the uncertain inputs `(nu, u0m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub nu: f64,
    pub u0m: f64,
}

impl ParameterPoint {
    pub fn new(nu: f64, u0m: f64) -> Result<Self> {
        let p = ParameterPoint { nu, u0m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {}", self.nu)));
        }
        if !self.u0m.is_finite() {
            return Err(Error::InvalidParameter(format!("u0m must be finite, got {}", self.u0m)));
        }
        Ok(())
    }

    /// The square `u0m^2`, the only way `u0m` enters the model.
    pub fn shift(&self) -> f64 {
        self.u0m * self.u0m
    }

    pub fn as_vec(&self) -> Vec<f64> {
        vec![self.nu, self.u0m]
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        match x {
            [nu, u0m] => ParameterPoint::new(*nu, *u0m),
            _ => Err(Error::InvalidParameter(format!("expected 2 inputs, got {}", x.len()))),
        }
    }
}

/// Uniform grid in space and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    n_space: usize,
    dt: f64,
    t_final: f64,
    n_steps: usize,
}

impl Discretization {
    /// `t_final / dt` must be an integer within `1e-9`. A zero horizon is
    /// accepted and yields a trajectory made of the initial condition only.
    pub fn new(n_space: usize, dt: f64, t_final: f64) -> Result<Self> {
        if n_space < 2 {
            return Err(Error::InvalidDiscretization(format!("n_space must be >= 2, got {n_space}")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidDiscretization(format!("dt must be positive, got {dt}")));
        }
        if !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidDiscretization(format!(
                "t_final must be non-negative, got {t_final}"
            )));
        }
        let ratio = t_final / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 {
            return Err(Error::InvalidDiscretization(format!(
                "t_final / dt = {ratio} is not an integer"
            )));
        }
        Ok(Discretization { n_space, dt, t_final, n_steps: steps as usize })
    }

    /// 60 intervals, `dt = 0.01`, `T = 0.05`.
    pub fn reference() -> Self {
        Discretization::new(60, 0.01, 0.05).expect("reference discretization is valid")
    }

    pub fn n_space(&self) -> usize {
        self.n_space
    }

    pub fn n_nodes(&self) -> usize {
        self.n_space + 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_space as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n_space as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Nodal values of one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialState(pub Vec<f64>);

impl SpatialState {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn constant(disc: &Discretization, c: f64) -> Self {
        SpatialState(vec![c; disc.n_nodes()])
    }
}

/// All time slices `t_0 = 0, ..., t_K = T` of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SpatialState>,
    pub disc: Discretization,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpatialState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// One row per time step: `t, u(x_0), ..., u(x_N)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t")?;
        for i in 0..self.disc.n_nodes() {
            write!(out, ",u{i}")?;
        }
        writeln!(out)?;
        for (k, s) in self.states.iter().enumerate() {
            write!(out, "{}", self.disc.time(k))?;
            for v in s.values() {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Dirichlet data `(b0, b1)` compatible with the initial condition.
pub fn boundary_values(params: &ParameterPoint) -> (f64, f64) {
    let s = params.shift();
    (s, s + SINE_AMPLITUDE * SINE_FREQUENCY.sin())
}

/// The parameter-free part `5 sin(x / 2)` of the initial condition, sampled on the grid.
pub fn sine_profile(disc: &Discretization) -> Vec<f64> {
    (0..disc.n_nodes())
        .map(|i| SINE_AMPLITUDE * (SINE_FREQUENCY * disc.node(i)).sin())
        .collect()
}

pub fn initial_condition(params: &ParameterPoint, disc: &Discretization) -> SpatialState {
    let s = params.shift();
    SpatialState(sine_profile(disc).into_iter().map(|g| s + g).collect())
}

/// `(1/N) * sum_{i=0}^{N} u_i` at the final time. The divisor is the number of
/// intervals, not the number of nodes.
pub fn output_functional(traj: &Trajectory) -> f64 {
    state_output(traj.final_state(), &traj.disc)
}

pub fn state_output(state: &SpatialState, disc: &Discretization) -> f64 {
    state.values().iter().sum::<f64>() / disc.n_space() as f64
}

/// Trapezoidal weights of the discrete L2([0,1]) inner product.
pub fn quadrature_weights(disc: &Discretization) -> Vec<f64> {
    let h = disc.h();
    let mut w = vec![h; disc.n_nodes()];
    w[0] = 0.5 * h;
    w[disc.n_space()] = 0.5 * h;
    w
}

pub fn l2_inner(a: &[f64], b: &[f64], disc: &Discretization) -> f64 {
    let n = disc.n_space();
    let h = disc.h();
    let interior: f64 = (1..n).map(|i| a[i] * b[i]).sum();
    h * (interior + 0.5 * (a[0] * b[0] + a[n] * b[n]))
}

/// Discrete L2 norm by trapezoidal quadrature.
pub fn l2_norm(state: &SpatialState, disc: &Discretization) -> f64 {
    l2_inner(state.values(), state.values(), disc).sqrt()
}

/// Full-order solver. The forcing and the divergence cap are configurable so
/// that tests can switch the source term off.
#[derive(Debug, Clone, Copy)]
pub struct FullSolver {
    pub disc: Discretization,
    pub forcing: f64,
    pub magnitude_cap: f64,
}

impl FullSolver {
    pub fn new(disc: Discretization) -> Self {
        FullSolver { disc, forcing: 1.0, magnitude_cap: DEFAULT_MAGNITUDE_CAP }
    }

    pub fn with_forcing(mut self, forcing: f64) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn with_magnitude_cap(mut self, cap: f64) -> Self {
        self.magnitude_cap = cap;
        self
    }

    /// Advance one time step from `state`.
    pub fn step(&self, state: &SpatialState, params: &ParameterPoint) -> Result<SpatialState> {
        params.validate()?;
        let tri = ImplicitDiffusion::new(&self.disc, params.nu);
        let mut next = vec![0.0; self.disc.n_nodes()];
        let mut scratch = vec![0.0; self.disc.n_nodes()];
        self.advance(state.values(), params, &tri, &mut next, &mut scratch);
        self.check(&next, 1)?;
        Ok(SpatialState(next))
    }

    /// Iterate [`FullSolver::step`] from the initial condition up to `T`.
    pub fn solve(&self, params: &ParameterPoint) -> Result<Trajectory> {
        params.validate()?;
        let tri = ImplicitDiffusion::new(&self.disc, params.nu);
        let mut states = Vec::with_capacity(self.disc.n_steps() + 1);
        states.push(initial_condition(params, &self.disc));
        let mut scratch = vec![0.0; self.disc.n_nodes()];
        for k in 0..self.disc.n_steps() {
            let mut next = vec![0.0; self.disc.n_nodes()];
            self.advance(states[k].values(), params, &tri, &mut next, &mut scratch);
            self.check(&next, k + 1)?;
            states.push(SpatialState(next));
        }
        Ok(Trajectory { states, disc: self.disc })
    }

    /// Final-time output only; avoids keeping the trajectory.
    pub fn output(&self, params: &ParameterPoint) -> Result<f64> {
        params.validate()?;
        let tri = ImplicitDiffusion::new(&self.disc, params.nu);
        let mut cur = initial_condition(params, &self.disc).0;
        let mut next = vec![0.0; self.disc.n_nodes()];
        let mut scratch = vec![0.0; self.disc.n_nodes()];
        for k in 0..self.disc.n_steps() {
            self.advance(&cur, params, &tri, &mut next, &mut scratch);
            self.check(&next, k + 1)?;
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(state_output(&SpatialState(cur), &self.disc))
    }

    fn advance(
        &self,
        cur: &[f64],
        params: &ParameterPoint,
        tri: &ImplicitDiffusion,
        next: &mut [f64],
        rhs: &mut [f64],
    ) {
        let n = self.disc.n_space();
        let dt = self.disc.dt();
        let h = self.disc.h();
        let (b0, b1) = boundary_values(params);
        for i in 1..n {
            let flux = (cur[i + 1] * cur[i + 1] - cur[i - 1] * cur[i - 1]) / (4.0 * h);
            rhs[i] = cur[i] - dt * flux + dt * self.forcing;
        }
        rhs[1] += tri.coupling * b0;
        rhs[n - 1] += tri.coupling * b1;
        tri.solve(&rhs[1..n], &mut next[1..n]);
        next[0] = b0;
        next[n] = b1;
    }

    fn check(&self, state: &[f64], step: usize) -> Result<()> {
        for (i, v) in state.iter().enumerate() {
            if !v.is_finite() || v.abs() > self.magnitude_cap {
                return Err(Error::SolverDiverged {
                    step,
                    reason: format!("node {i} has value {v}"),
                });
            }
        }
        Ok(())
    }
}

/// LU factors of the constant tridiagonal matrix `I - dt nu Lap` on interior nodes.
struct ImplicitDiffusion {
    /// `dt nu / h^2`, also the weight of the boundary values in the right-hand side.
    coupling: f64,
    /// Modified diagonal of the Thomas elimination.
    pivots: Vec<f64>,
}

impl ImplicitDiffusion {
    fn new(disc: &Discretization, nu: f64) -> Self {
        let h = disc.h();
        let c = disc.dt() * nu / (h * h);
        let m = disc.n_space() - 1;
        let mut pivots = Vec::with_capacity(m);
        let diag = 1.0 + 2.0 * c;
        pivots.push(diag);
        for i in 1..m {
            let prev = pivots[i - 1];
            pivots.push(diag - c * c / prev);
        }
        ImplicitDiffusion { coupling: c, pivots }
    }

    fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let m = rhs.len();
        let c = self.coupling;
        // forward sweep, sub-diagonal is -c
        out[0] = rhs[0];
        for i in 1..m {
            out[i] = rhs[i] + c * out[i - 1] / self.pivots[i - 1];
        }
        // back substitution, super-diagonal is -c
        out[m - 1] /= self.pivots[m - 1];
        for i in (0..m - 1).rev() {
            out[i] = (out[i] + c * out[i + 1]) / self.pivots[i];
        }
    }
}

pub fn solve_full(params: &ParameterPoint, disc: &Discretization) -> Result<Trajectory> {
    FullSolver::new(*disc).solve(params)
}

pub fn step(state: &SpatialState, params: &ParameterPoint, disc: &Discretization) -> Result<SpatialState> {
    FullSolver::new(*disc).step(state, params)
}
