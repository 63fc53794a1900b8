//! Independent numerical oracles: brute-force Riemann integration of the
//! analytic dipole fields, evaluated without any of the crate's quadrature
//! or pattern machinery, cross-checked against the library results.

use mdk_core::farfield::{radiated_power, PatternGrid};
use mdk_core::metrics::{ecc_farfield, meg, Environment};
use mdk_core::synth::{hertzian_dipole, DipoleAxis, DipoleSpec};

use std::f64::consts::PI;

/// Analytic dipole fields straight from the formulas (E_theta, E_phi).
fn dipole_field(axis: DipoleAxis, theta: f64, phi: f64) -> (f64, f64) {
    match axis {
        DipoleAxis::Z => (theta.sin(), 0.0),
        DipoleAxis::X => (theta.cos() * phi.cos(), -phi.sin()),
        DipoleAxis::Y => (theta.cos() * phi.sin(), phi.cos()),
    }
}

/// Midpoint-rule Riemann sum of `f(theta, phi) * sin(theta)` over the
/// sphere with `step_deg` sampling. Deliberately a different rule and
/// different sample points than the library quadrature.
fn riemann_sphere<F: Fn(f64, f64) -> f64>(step_deg: f64, f: F) -> f64 {
    let h = step_deg.to_radians();
    let n_theta = (PI / h).round() as usize;
    let n_phi = (2.0 * PI / h).round() as usize;
    let mut total = 0.0;
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * h;
        let sin_theta = theta.sin();
        let mut ring = 0.0;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * h;
            ring += f(theta, phi);
        }
        total += ring * sin_theta;
    }
    total * h * h
}

/// ECC of two dipole-formula fields (optionally mixed) via the brute-force
/// Riemann sum, uniform environment with XPR 1.
fn riemann_ecc(
    step_deg: f64,
    f1: impl Fn(f64, f64) -> (f64, f64),
    f2: impl Fn(f64, f64) -> (f64, f64),
) -> f64 {
    let cross = riemann_sphere(step_deg, |t, p| {
        let (a_t, a_p) = f1(t, p);
        let (b_t, b_p) = f2(t, p);
        a_t * b_t + a_p * b_p
    });
    let self1 = riemann_sphere(step_deg, |t, p| {
        let (a_t, a_p) = f1(t, p);
        a_t * a_t + a_p * a_p
    });
    let self2 = riemann_sphere(step_deg, |t, p| {
        let (b_t, b_p) = f2(t, p);
        b_t * b_t + b_p * b_p
    });
    cross * cross / (self1 * self2)
}

fn dipole_pattern(axis: DipoleAxis, step_deg: f64) -> mdk_core::farfield::FarFieldPattern {
    let grid = PatternGrid::uniform(step_deg).unwrap();
    hertzian_dipole(&DipoleSpec { axis, freq_hz: 4e9 }, &grid).unwrap()
}

#[test]
fn brute_force_confirms_orthogonal_dipole_ecc() {
    let brute = riemann_ecc(
        0.25,
        |t, p| dipole_field(DipoleAxis::X, t, p),
        |t, p| dipole_field(DipoleAxis::Y, t, p),
    );
    let x = dipole_pattern(DipoleAxis::X, 0.25);
    let y = dipole_pattern(DipoleAxis::Y, 0.25);
    let lib = ecc_farfield(&x, &y, &Environment::uniform()).unwrap();
    assert!(brute.abs() < 1e-9, "brute {brute}");
    assert!((lib - brute).abs() < 1e-6, "lib {lib} vs brute {brute}");
}

#[test]
fn brute_force_confirms_partially_correlated_ecc() {
    // 0.8*z + 0.6*x mixes to a known correlation of 0.64 against z.
    let mix = |t: f64, p: f64| {
        let (zt, zp) = dipole_field(DipoleAxis::Z, t, p);
        let (xt, xp) = dipole_field(DipoleAxis::X, t, p);
        (0.8 * zt + 0.6 * xt, 0.8 * zp + 0.6 * xp)
    };
    let brute = riemann_ecc(0.25, |t, p| dipole_field(DipoleAxis::Z, t, p), mix);
    assert!((brute - 0.64).abs() < 1e-5, "brute {brute}");

    let z = dipole_pattern(DipoleAxis::Z, 0.25);
    let x = dipole_pattern(DipoleAxis::X, 0.25);
    let mixed = mdk_core::farfield::FarFieldPattern::new(
        z.freq_hz(),
        z.grid().clone(),
        z.e_theta() * num_complex::Complex64::new(0.8, 0.0)
            + x.e_theta() * num_complex::Complex64::new(0.6, 0.0),
        z.e_phi() * num_complex::Complex64::new(0.8, 0.0)
            + x.e_phi() * num_complex::Complex64::new(0.6, 0.0),
    )
    .unwrap();
    let lib = ecc_farfield(&z, &mixed, &Environment::uniform()).unwrap();
    assert!((lib - brute).abs() < 1e-6, "lib {lib} vs brute {brute}");
}

#[test]
fn brute_force_confirms_meg_half() {
    // MEG of a lossless pattern in the uniform balanced environment is 1/2:
    // compute it from raw formulas with the Riemann rule.
    let prad = riemann_sphere(0.25, |t, _| {
        let (et, ep) = dipole_field(DipoleAxis::Z, t, 0.0);
        et * et + ep * ep
    });
    let meg_brute = riemann_sphere(0.25, |t, _| {
        let (et, ep) = dipole_field(DipoleAxis::Z, t, 0.0);
        let g_theta = 4.0 * PI * et * et / prad;
        let g_phi = 4.0 * PI * ep * ep / prad;
        0.5 * g_theta * (1.0 / (4.0 * PI)) + 0.5 * g_phi * (1.0 / (4.0 * PI))
    });
    assert!((meg_brute - 0.5).abs() < 1e-4, "brute {meg_brute}");

    let z = dipole_pattern(DipoleAxis::Z, 1.0);
    let lib = meg(&z, &Environment::uniform()).unwrap();
    assert!((lib - 0.5).abs() / 0.5 < 5e-3, "lib {lib}");
    assert!((lib - meg_brute).abs() < 1e-4);
}

#[test]
fn quadrature_is_second_order_on_generic_integrands() {
    // The isotropic-field power integral carries the trapezoid rule's full
    // O(h^2) error term, so halving the step divides the error by ~4.
    let power_err = |step: f64| {
        let grid = PatternGrid::uniform(step).unwrap();
        let (nt, np) = (grid.n_theta(), grid.n_phi());
        let p = mdk_core::farfield::FarFieldPattern::new(
            1e9,
            grid,
            nalgebra::DMatrix::from_element(nt, np, num_complex::Complex64::new(1.0, 0.0)),
            nalgebra::DMatrix::zeros(nt, np),
        )
        .unwrap();
        (radiated_power(&p) - 4.0 * PI).abs()
    };
    let ratio = power_err(2.0) / power_err(1.0);
    assert!(
        (3.5..=4.5).contains(&ratio),
        "convergence ratio {ratio} outside [3.5, 4.5]"
    );
}

#[test]
fn dipole_power_converges_at_least_second_order() {
    // The dipole integrand's endpoint derivatives vanish, so the trapezoid
    // rule superconverges: halving the step shrinks the change by much more
    // than the generic factor of 4.
    let power = |step: f64| radiated_power(&dipole_pattern(DipoleAxis::Z, step));
    let change_coarse = (power(2.0) - power(1.0)).abs();
    let change_fine = (power(1.0) - power(0.5)).abs();
    assert!(
        change_fine <= change_coarse / 3.5,
        "change {change_fine} vs {change_coarse}"
    );
    // And the absolute error at 1 deg is far inside the 0.1% contract.
    let err = (power(1.0) - 8.0 * PI / 3.0).abs() / (8.0 * PI / 3.0);
    assert!(err < 1e-3, "relative error {err}");
}
