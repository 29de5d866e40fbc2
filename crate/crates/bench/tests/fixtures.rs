use certsa_bench::{midpoint, reference_basis, reference_pairs, reference_solver};

#[test]
fn fixtures_are_consistent() {
    let basis = reference_basis(4);
    let out = basis.output_with_bound(&midpoint()).unwrap();
    let full = reference_solver().output(&midpoint()).unwrap();
    assert!((out.f_tilde - full).abs() <= out.eps);
    let pairs = reference_pairs(&basis, 50);
    assert_eq!(pairs.len(), 50);
}
