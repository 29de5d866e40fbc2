use certsa_core::model_full::{Discretization, FullSolver, ParameterPoint};
use certsa_core::reduced_basis::{build_basis, collect_snapshots, training_grid};
use certsa_core::sobol::{
    bootstrap_combined_ci, bound_sobol, estimate_sobol, evaluate_all_indices, generate_design, InputRange, ZeroRadius,
};
use certsa_core::{CertifiedModel, ReducedBasis};

fn reference_basis(n: usize) -> ReducedBasis {
    let disc = Discretization::reference();
    let grid = training_grid((1.0, 20.0), (-0.3, 0.3), 5, 5);
    build_basis(&collect_snapshots(&grid, &FullSolver::new(disc)).unwrap(), n).unwrap()
}

fn ranges() -> [InputRange; 2] {
    [InputRange::new(1.0, 20.0).unwrap(), InputRange::new(-0.3, 0.3).unwrap()]
}

#[test]
fn sandwich_contains_the_full_model_estimate() {
    let solver = FullSolver::new(Discretization::reference());
    let design = generate_design(&ranges(), 400, 0, 21).unwrap();
    let full = evaluate_all_indices(&design, &solver).unwrap();
    for n in [3, 5, 8] {
        let basis = reference_basis(n);
        let reduced = evaluate_all_indices(&design, &basis).unwrap();
        for (r, f) in reduced.iter().zip(&full) {
            let truth = estimate_sobol(&f.y_tilde, &f.y_tilde_prime).unwrap();
            let b = bound_sobol(r).unwrap();
            assert!(b.contains(truth), "n = {n}: {truth} outside {b:?}");
            for k in 0..r.len() {
                assert!((r.y_tilde[k] - f.y_tilde[k]).abs() <= r.eps[k]);
                assert!((r.y_tilde_prime[k] - f.y_tilde_prime[k]).abs() <= r.eps_prime[k]);
            }
        }
    }
}

#[test]
fn indices_of_the_reference_model_sum_to_about_one() {
    let basis = reference_basis(9);
    let design = generate_design(&ranges(), 4000, 0, 5).unwrap();
    let pairs = evaluate_all_indices(&design, &basis).unwrap();
    let s: Vec<f64> = pairs.iter().map(|p| estimate_sobol(&p.y_tilde, &p.y_tilde_prime).unwrap()).collect();
    // the model is nearly additive in (nu, u0m^2)
    assert!((s[0] + s[1] - 1.0).abs() < 0.05, "{s:?}");
    assert!(s[1] > s[0]);
}

#[test]
fn saved_basis_reproduces_outputs_exactly() {
    let basis = reference_basis(6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/basis.json");
    basis.save(&path).unwrap();
    let loaded = ReducedBasis::load(&path).unwrap();
    let x = ParameterPoint::new(3.7, -0.21).unwrap();
    assert_eq!(basis.output_with_bound(&x).unwrap(), loaded.output_with_bound(&x).unwrap());
}

#[test]
fn zero_radius_wrapper_collapses_the_sandwich() {
    let basis = reference_basis(4);
    let design = generate_design(&ranges(), 300, 0, 8).unwrap();
    let pairs = evaluate_all_indices(&design, &ZeroRadius(&basis)).unwrap();
    for p in &pairs {
        let b = bound_sobol(p).unwrap();
        let s = estimate_sobol(&p.y_tilde, &p.y_tilde_prime).unwrap();
        assert!(b.contains(s) && b.width() < 1e-12);
        let ci = bootstrap_combined_ci(p, 200, 0.05, 3).unwrap();
        assert!(ci.covers(s));
    }
    assert_eq!(ZeroRadius(&basis).dim(), 2);
}

#[test]
fn results_do_not_depend_on_the_thread_count() {
    let basis = reference_basis(6);
    let design = generate_design(&ranges(), 500, 0, 4).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let pairs = evaluate_all_indices(&design, &basis).unwrap();
            let cis: Vec<_> = pairs.iter().map(|p| bootstrap_combined_ci(p, 100, 0.05, 9).unwrap()).collect();
            (pairs, cis)
        })
    };
    assert_eq!(run(1), run(3));
}
