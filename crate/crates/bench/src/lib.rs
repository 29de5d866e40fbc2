//! Shared fixtures for the benchmarks.

use certsa_core::model_full::{Discretization, FullSolver, ParameterPoint};
use certsa_core::reduced_basis::{build_basis, collect_snapshots, training_grid, SnapshotSet};
use certsa_core::sobol::{evaluate_pairs, generate_design, CertifiedPairs, InputRange};
use certsa_core::ReducedBasis;

pub fn reference_solver() -> FullSolver {
    FullSolver::new(Discretization::reference())
}

pub fn reference_snapshots() -> SnapshotSet {
    let grid = training_grid((1.0, 20.0), (-0.3, 0.3), 5, 5);
    collect_snapshots(&grid, &reference_solver()).expect("training snapshots")
}

pub fn reference_basis(n: usize) -> ReducedBasis {
    build_basis(&reference_snapshots(), n).expect("reduced basis")
}

pub fn midpoint() -> ParameterPoint {
    ParameterPoint::new(10.5, 0.1).expect("valid point")
}

/// Certified pairs of the viscosity index on a reference design.
pub fn reference_pairs(basis: &ReducedBasis, n_samples: usize) -> CertifiedPairs {
    let ranges = [InputRange::new(1.0, 20.0).unwrap(), InputRange::new(-0.3, 0.3).unwrap()];
    let design = generate_design(&ranges, n_samples, 0, 1).expect("design");
    evaluate_pairs(&design, basis).expect("pairs")
}
