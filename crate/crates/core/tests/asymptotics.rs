use approx::assert_abs_diff_eq;
use ironface::asymptotics::*;
use ironface::nlie::ground_energy_density;
use ironface::{IronfaceError, Regime};
use std::f64::consts::PI;

#[test]
fn low_t_expansion_examples() {
    let beta = 7.0;
    let v = low_t_ln_lambda(0.0, beta, 0.0, 0.0, PI / 2.0).unwrap();
    let e0 = ground_energy_density(0.0, &Regime::critical(PI / 2.0).unwrap()).unwrap();
    assert_abs_diff_eq!(v.re, -beta * e0 + (2.0 / beta) * (PI / 2.0) / 24.0, epsilon = 1e-12);
    let tw = low_t_ln_lambda(0.0, beta, 0.0, PI / 2.0, PI / 2.0).unwrap();
    assert_abs_diff_eq!(tw.im, PI / 2.0, epsilon = 1e-15);
}

#[test]
fn xi_limit_identities() {
    for g in [0.3, 0.9, PI / 2.0, 2.0, 2.8] {
        let lim = xi_inverse_limit(g).unwrap();
        for beta in [3.0, 40.0] {
            let d = low_t_ln_lambda(0.0, beta, 0.0, PI / 2.0, g).unwrap() - low_t_ln_lambda(0.0, beta, 0.0, 0.0, g).unwrap();
            assert_abs_diff_eq!(-d.re * beta, lim, epsilon = 1e-12);
        }
        let (hp, _) = exponent_h(0, 0, PI / 2.0, g).unwrap();
        assert_abs_diff_eq!(hp, 1.0 / (16.0 * (1.0 - g / PI)), epsilon = 1e-14);
        assert_abs_diff_eq!(lim, (g / g.sin()) * hp * 2.0, epsilon = 1e-12);
        let (_, xxz) = xxz_reference(g).unwrap();
        assert_abs_diff_eq!(lim / xxz, 0.25, epsilon = 1e-14);
    }
    assert_abs_diff_eq!(xi_inverse_limit(PI / 3.0).unwrap(), PI / (8.0 * 3f64.sqrt()), epsilon = 1e-14);
    assert_abs_diff_eq!(xi_inverse_limit(1e-9).unwrap(), 0.125, epsilon = 1e-9);
}

#[test]
fn kappa_is_affine_in_j() {
    assert_abs_diff_eq!(kappa_low_t(1.0, 0.0).unwrap(), PI / 2.0);
    assert_abs_diff_eq!(kappa_low_t(PI / 2.0, 0.1).unwrap(), PI / 2.0 + 0.05, epsilon = 1e-15);
    assert_abs_diff_eq!(kappa_low_t(PI / 3.0, 1.0).unwrap(), PI / 2.0 + 1.0 / (2.0 * 3f64.sqrt()), epsilon = 1e-14);
    let g = 1.2;
    let slope = kappa_low_t(g, 0.7).unwrap() - kappa_low_t(g, -0.3).unwrap();
    assert_abs_diff_eq!(slope, (g / g.sin()) / (2.0 * (PI - g)), epsilon = 1e-14);
}

#[test]
fn exponent_examples() {
    let (p, m) = exponent_h(0, 1, 0.0, PI / 2.0).unwrap();
    assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(m, 0.5, epsilon = 1e-15);
    let g = 0.8;
    let (p, m) = exponent_h(2, 0, 0.0, g).unwrap();
    assert_abs_diff_eq!(p, 1.0 - g / PI, epsilon = 1e-15);
    assert_abs_diff_eq!(m, 1.0 - g / PI, epsilon = 1e-15);
    assert!(matches!(exponent_h(3, 0, 0.0, g), Err(IronfaceError::OddMagneticSector(3))));
    assert!(exponent_h_any(3, 0, 0.0, g).unwrap().0 > 0.0);
}

#[test]
fn conformal_data() {
    let c = ConformalData::new(0, 0, PI / 2.0, PI / 2.0).unwrap();
    assert_eq!(c.central_charge, 1.0);
    assert_abs_diff_eq!(c.velocity, 4.0, epsilon = 1e-14);
    assert_abs_diff_eq!(c.dimension(), 0.25, epsilon = 1e-15);
    assert!(sound_velocity(0.0).is_err());
    assert_abs_diff_eq!(xxz_reference(PI / 2.0).unwrap().1, PI / 2.0, epsilon = 1e-14);
}

#[test]
fn free_fermion_oracle_high_t() {
    let t = 1e3;
    assert_abs_diff_eq!(xx_free_energy(t).unwrap(), -t * 2f64.ln() - 1.0 / t, epsilon = 1e-5);
    assert!(xx_free_energy(-1.0).is_err());
}
