//! Mode volume of the fundamental TE mode of a bare sphere, numeric against
//! a direct quadrature of the exact field `j_l(nkr) X_ll`.

use num_complex::Complex64 as C64;
use wgm_core::bessel::spherical_bessel;
use wgm_core::fundamental::{find_fundamental, SolverSettings};
use wgm_core::mode::Polarization;
use wgm_core::oracle::{find_resonance, LayeredRadialProblem};
use wgm_core::qed::mode_volume;
use wgm_core::{CrossSection, Media};

/// `∫n²|E|²dV / max n²|E|²` for the TE (l, m = l) mode of a sphere with
/// real wavenumber `k`. The angular factor of `X_ll` is
/// `sin^{2l-2}θ (1 + cos²θ)`, maximal (= 1) at the equator.
fn analytic_te_volume(l: usize, radius: f64, index: f64, k: f64, r_max: f64) -> f64 {
    let radial = |r: f64| -> f64 {
        if r <= radius {
            spherical_bessel(l, C64::new(index * k * r, 0.0)).unwrap().j.re
        } else {
            // Tangential E is continuous; outside the field is outgoing.
            let inside = spherical_bessel(l, C64::new(index * k * radius, 0.0)).unwrap().j.re;
            let h = |x: f64| {
                let b = spherical_bessel(l, C64::new(x, 0.0)).unwrap();
                (b.j + C64::i() * b.y).norm()
            };
            inside * h(k * r) / h(k * radius)
        }
    };
    let n_r = 6000;
    let dr = r_max / n_r as f64;
    let (mut radial_int, mut peak) = (0.0, 0.0f64);
    for s in 0..n_r {
        let r = (s as f64 + 0.5) * dr;
        let n2 = if r <= radius { index * index } else { 1.0 };
        let e2 = radial(r).powi(2);
        radial_int += n2 * e2 * r * r * dr;
        peak = peak.max(n2 * e2);
    }
    let n_t = 20000;
    let dt = std::f64::consts::PI / n_t as f64;
    let angular: f64 = (0..n_t)
        .map(|s| {
            let t = (s as f64 + 0.5) * dt;
            t.sin().powi(2 * l as i32 - 2) * (1.0 + t.cos().powi(2)) * t.sin() * dt
        })
        .sum();
    2.0 * std::f64::consts::PI * radial_int * angular / peak
}

#[test]
fn bare_sphere_te_mode_volume_matches_quadrature() {
    let radius = 5e-6;
    let index = 1.4564;
    let cs = CrossSection::coated_sphere(radius, 0.0, Media::silica_su8_air()).unwrap();
    let (m, mode) = find_fundamental(&cs, Polarization::QuasiTe, 637e-9, &SolverSettings::default()).unwrap();
    let numeric = mode_volume(&mode).unwrap();

    let prob = LayeredRadialProblem::from_cross_section(&cs, Polarization::QuasiTe, m as usize).unwrap();
    let lambda = mode.wavelength();
    let half = 0.5 * lambda / m as f64;
    let res = find_resonance(&prob, (lambda - half, lambda + half)).unwrap();
    let exact = analytic_te_volume(m as usize, radius, index, res.k.re, 1.4 * radius);

    let rel = (numeric - exact).abs() / exact;
    assert!(rel < 0.03, "numeric {numeric:e} exact {exact:e} rel {rel:.3e}");
}
