//! Certified global sensitivity analysis of a parametrized viscous Burgers
//! model through a reduced-basis surrogate.
//!
//! * [`model_full`]: reference finite-difference solver and output functional.
//! * [`reduced_basis`]: POD surrogate with certified state and output bounds.
//! * [`sobol`]: pick-freeze estimator, interval sandwich bounds and the
//!   combined bootstrap confidence interval.
//! * [`budget`]: precision model fitting and `(N, n)` cost optimization.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod error;
pub mod model_full;
pub mod numeric;
pub mod reduced_basis;
pub mod rng;
pub mod sobol;

pub use error::{Error, Result};
pub use model_full::{Discretization, FullSolver, ParameterPoint, SpatialState, Trajectory};
pub use reduced_basis::{CertifiedOutput, ReducedBasis, ReducedTrajectory, SnapshotSet};
pub use budget::{BenchmarkRecords, BudgetSolution, PrecisionModel};
pub use sobol::{CertifiedModel, CertifiedPairs, CombinedCI, IndexBounds, InputRange, PickFreezeDesign};
