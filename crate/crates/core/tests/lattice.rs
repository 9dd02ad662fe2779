//! Operators, spectra and the Bethe ansatz on small lattices.

use ironface::bethe::{bethe_residual, eigenvalue, free_fermion_candidates, solve_bethe_newton, BetheState};
use ironface::operators::{
    self, build_charges, build_h_irf, build_h_xxz, build_qtm, build_t_irf, commutator_norm, hamiltonian_from_transfer,
    hamiltonian_scale, lattice_traces, set_chain_limit, trotter_error,
};
use ironface::spectra::{
    eigen_decompose, finite_size_scan, general_eigenvalues, hermitian_eigenvalues, qtm_formfactor_scan, verify_vertex_irf_map,
    xxz_free_energy_ed, xxz_periodic_spectrum,
};
use ironface::{IronfaceError, Regime};
use num_complex::Complex64;
use std::f64::consts::PI;

#[test]
fn hamiltonian_commutes_with_charges_and_transfer_matrix() {
    let h = build_h_irf(6, 0.4).unwrap();
    assert!(h.hermitian);
    let q = build_charges(6).unwrap();
    for c in [&q.sigma_z, &q.pi_x, &q.pi_x_even, &q.pi_x_odd] {
        assert!(commutator_norm(&h.matrix, &c.matrix) < 1e-12);
    }
    let r = Regime::from_delta(0.4).unwrap();
    let t = build_t_irf(Complex64::new(0.2, 0.05), 6, &r, false).unwrap();
    assert!(commutator_norm(&h.matrix, &t.matrix) < 1e-10);
}

#[test]
fn log_derivative_reproduces_the_chain() {
    for d in [-0.3, 0.5, 1.5] {
        let fit = hamiltonian_from_transfer(5, d).unwrap();
        assert!(fit.residual < 1e-6, "Δ={d}: {}", fit.residual);
        let r = Regime::from_delta(d).unwrap();
        assert!((fit.alpha - hamiltonian_scale(&r)).norm() < 1e-6);
    }
}

#[test]
fn spectral_map_and_qtm_identities() {
    for d in [0.0, 0.7, 2.0] {
        let rep = verify_vertex_irf_map(4, d).unwrap();
        assert!(rep.max_mismatch < 1e-10 && rep.transfer_mismatch < 1e-10);
        assert_eq!(rep.even_sector_dims.0 + rep.even_sector_dims.1, rep.irf_dim);
    }
    let (row, qtm) = lattice_traces(3, 4, 0.4, &Regime::from_delta(0.3).unwrap()).unwrap();
    assert!((row - qtm).norm() / row.norm() < 1e-10);
    let e: Vec<f64> = [2, 4, 6].iter().map(|&n| trotter_error(3, n, 0.3, 0.2).unwrap()).collect();
    assert!(e[0] > e[1] && e[1] > e[2]);
}

#[test]
fn xxz_chain_block_diagonalization() {
    let dense = hermitian_eigenvalues(&build_h_xxz(8, 0.6, 0.0).unwrap().matrix);
    let blocks = xxz_periodic_spectrum(8, 0.6).unwrap();
    assert_eq!(dense.len(), blocks.len());
    let mut a = dense.clone();
    let mut b = blocks.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
    // ED free energy approaches −T ln 2 − Δ at high temperature
    let f = xxz_free_energy_ed(8, 0.6, 1e-4).unwrap();
    assert!((f + 1e4 * 2f64.ln() + 0.6).abs() < 1e-2);
}

#[test]
fn subleading_qtm_pair_carries_the_form_factor() {
    let rep = qtm_formfactor_scan(4, 0.2, 0.5).unwrap();
    assert!(rep.is_conjugate_pair && rep.formfactor_nonzero);
    assert!(rep.subdominant_pair.0.norm() < rep.leading.norm());
}

#[test]
fn bethe_roots_reproduce_the_qtm() {
    let r = Regime::from_delta(0.0).unwrap();
    let (beta, n) = (0.2, 4);
    let c = free_fermion_candidates(n, 2, beta, 0.0, 0.0);
    let s = solve_bethe_newton(n, beta, 0.0, 0.0, &r, &[c[0], c[2]], 100).unwrap();
    assert!(bethe_residual(&s, &r).unwrap() < 1e-12);
    let lam = eigenvalue(Complex64::new(0.0, 0.0), &s, &r).unwrap();
    let q = build_qtm(0.0, n, beta, &r, 0.0).unwrap();
    let spec = general_eigenvalues(&q.matrix).unwrap();
    let best = spec.iter().map(|e| (e - lam).norm()).fold(f64::INFINITY, f64::min);
    assert!(best < 1e-10);
    let lead = spec.iter().map(|e| e.norm()).fold(0.0, f64::max);
    assert!((lam.norm() - lead).abs() < 1e-10);
    assert!(BetheState::new(vec![], 3, beta, 0.0, 0.0).is_err());
}

#[test]
fn finite_size_scan_at_free_fermions() {
    let r = finite_size_scan(&[8, 10, 12], 0.0).unwrap();
    assert_eq!(r.vacuum_class, vec![true, false, true]);
    assert!((r.c_estimate.unwrap() - 1.0).abs() < 0.1);
    assert!((r.h_leading.unwrap() - 0.125).abs() < 0.125 * 0.15);
    assert!((r.velocity - 4.0).abs() < 1e-12);
    assert!(finite_size_scan(&[7, 8], 0.0).is_err());
    assert!(finite_size_scan(&[8], 1.5).is_err());
}

#[test]
fn size_limits_are_enforced() {
    assert!(matches!(build_h_irf(40, 0.5), Err(IronfaceError::SizeTooLarge { .. })));
    let before = operators::chain_limit();
    set_chain_limit(4);
    assert!(build_h_irf(6, 0.5).is_err());
    set_chain_limit(before);
    let spec = eigen_decompose(&build_h_irf(4, 0.5).unwrap()).unwrap();
    assert_eq!(spec.eigenvalues.len(), 16);
    assert!(spec.eigenvalues.windows(2).all(|w| w[0].re >= w[1].re));
    let _ = PI;
}
