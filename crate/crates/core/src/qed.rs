//! Cavity-QED figures of merit of a solved mode: quality budget, mode
//! volume, energy fractions, interface factor, coupling and decay rates.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::constants::{EPSILON_0, HBAR, SPEED_OF_LIGHT};
use crate::fundamental::ModePair;
use crate::geometry::{CrossSection, MediumId, Shape};
use crate::grid::ZLayout;
use crate::mode::{ModeSolution, Polarization, Quality, Q_FLOOR};
use crate::operator::Component;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QedError {
    #[error("lossy and lossless solutions are different modes: {0}")]
    ModeMismatch(String),
    #[error("mode reaches the PML: n²|E|² = {level:.2e} of its peak at the window edge")]
    WindowClipped { level: f64 },
    #[error("interface point ρ = {rho:e} m is not a grid line")]
    InterfaceOffGrid { rho: f64 },
}

/// Edge energy (relative to the peak) above which the window counts as clipped.
pub const CLIP_LEVEL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityBudget {
    pub total: Quality,
    pub rad: Quality,
    pub abs: Quality,
}

impl QualityBudget {
    /// `|1/Q_total − 1/Q_rad − 1/Q_abs| · Q_total`, with bounds counted as
    /// infinite Q.
    pub fn closure_error(&self) -> f64 {
        (self.total.inverse() - self.rad.inverse() - self.abs.inverse()).abs() * self.total.value()
    }
}

/// Splits the total loss of `lossy` into radiation (from `lossless`) and
/// absorption.
pub fn q_budget(lossy: &ModeSolution, lossless: &ModeSolution) -> Result<QualityBudget, QedError> {
    if lossy.m != lossless.m || lossy.polarization != lossless.polarization {
        return Err(QedError::ModeMismatch(format!(
            "m {} vs {}, {} vs {}",
            lossy.m, lossless.m, lossy.polarization, lossless.polarization
        )));
    }
    let total = lossy.quality();
    let rad = lossless.quality();
    let linewidth = lossy.wavelength() / total.value();
    let shift = (lossy.wavelength() - lossless.wavelength()).abs();
    if shift >= 1e3 * linewidth {
        return Err(QedError::ModeMismatch(format!("resonances {shift:.3e} m apart, linewidth {linewidth:.3e} m")));
    }
    Ok(budget_from(total, rad))
}

/// Budget from the two quality factors alone.
pub fn budget_from(total: Quality, rad: Quality) -> QualityBudget {
    let inv_abs = total.inverse() - rad.inverse();
    let abs = if inv_abs > 0.0 { Quality::from_value(1.0 / inv_abs) } else { Quality::AtLeast(Q_FLOOR) };
    QualityBudget { total, rad, abs }
}

/// `∫n²|E|²dV / max n²|E|²` over the physical window, m³.
pub fn mode_volume(mode: &ModeSolution) -> Result<f64, QedError> {
    let fields = &mode.fields;
    let (peak, _) = fields.center_maxima();
    let edge = edge_level(mode) / peak;
    if edge > CLIP_LEVEL {
        return Err(QedError::WindowClipped { level: edge });
    }
    let energy: f64 = fields.component_energy().iter().sum();
    Ok(energy / peak)
}

/// Largest `n²|E|²` in the cells lining the outer ρ and z window walls.
fn edge_level(mode: &ModeSolution) -> f64 {
    let f = &mode.fields;
    let g = &f.grid;
    let (_, r1) = g.rho_window();
    let (z0, z1) = g.z_window();
    let i_edge = (0..g.nr()).filter(|&i| g.rho_center(i) < r1).last().unwrap_or(0);
    let periodic = g.layout() == ZLayout::Periodic;
    let mut level = 0.0f64;
    let e2 = |i: usize, j: usize| f.at_center(i, j).iter().map(|v| v.norm_sqr()).sum::<f64>();
    let eps = |i: usize, j: usize| f.cell_permittivity(i, j);
    for j in 0..g.nz() {
        let zc = g.z_center(j);
        if periodic || (zc > z0 && zc < z1) {
            level = level.max(eps(i_edge, j) * e2(i_edge, j));
        }
    }
    if !periodic {
        let top = (0..g.nz()).filter(|&j| g.z_center(j) < z1).last().unwrap_or(0);
        let bottom = (0..g.nz()).find(|&j| g.z_center(j) > z0).unwrap_or(0);
        for i in 0..=i_edge {
            level = level.max(eps(i, top) * e2(i, top));
            if g.layout() == ZLayout::Full {
                level = level.max(eps(i, bottom) * e2(i, bottom));
            }
        }
    }
    level
}

/// Relative permittivities (real) of core, coating and exterior.
fn media_permittivity(cs: &CrossSection<f64>) -> [f64; 3] {
    MediumId::ALL.map(|id| cs.medium(id).index().powi(2))
}

/// Share of `∫n²|E|²dV` stored in `region`.
pub fn energy_fraction(mode: &ModeSolution, cs: &CrossSection<f64>, region: MediumId) -> f64 {
    let split = mode.fields.energy_by_medium(&media_permittivity(cs));
    let total: f64 = split.iter().sum();
    if total == 0.0 {
        0.0
    } else {
        (split[region.index()] / total).clamp(0.0, 1.0)
    }
}

/// `|E|` at the equatorial outer core surface (taken on the outside of
/// the core) over the largest `|E|` of the mode.
pub fn interface_factor(mode: &ModeSolution, cs: &CrossSection<f64>) -> Result<f64, QedError> {
    let (rim, _) = cs.interface_point();
    let f = &mode.fields;
    let g = &f.grid;
    let ir = g.nearest_rho_edge(rim);
    if (g.rho_edges()[ir] - rim).abs() > 1e-9 * rim || ir + 2 > g.nr() {
        return Err(QedError::InterfaceOffGrid { rho: rim });
    }
    let (j0, e_z) = match g.layout() {
        ZLayout::Periodic => (0, f.at(Component::Z, ir, 0)),
        ZLayout::UpperHalf => {
            // E_z is even about the mirror: fit a + b z² through the first two centers.
            let (z1, z2) = (g.z_center(0), g.z_center(1));
            let (e1, e2) = (f.at(Component::Z, ir, 0), f.at(Component::Z, ir, 1));
            (0, (e1 * (z2 * z2) - e2 * (z1 * z1)) / (z2 * z2 - z1 * z1))
        }
        ZLayout::Full => {
            let j0 = g.nearest_z_edge(0.0);
            let (za, zb) = (g.z_center(j0 - 1), g.z_center(j0));
            let (ea, eb) = (f.at(Component::Z, ir, j0 - 1), f.at(Component::Z, ir, j0));
            (j0, ea + (eb - ea) * (-za / (zb - za)))
        }
    };
    let e_phi = f.at(Component::Phi, ir, j0);
    // The normal component jumps at the interface; extrapolate from the
    // two outside samples.
    let (c1, c2) = (g.rho_center(ir), g.rho_center(ir + 1));
    let (r1, r2) = (f.at(Component::Rho, ir, j0), f.at(Component::Rho, ir + 1, j0));
    let e_rho = r1 + (r1 - r2) * ((c1 - rim) / (c2 - c1));
    let at_site = (e_rho.norm_sqr() + e_phi.norm_sqr() + e_z.norm_sqr()).sqrt();
    let (_, peak) = f.center_maxima();
    let peak = peak.max(at_site);
    Ok(if peak == 0.0 { 0.0 } else { at_site / peak })
}

/// Emitter parameters. `eps_nv` has no default and must be supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleParams {
    /// Transition dipole moment, C·m.
    #[serde(default = "default_dipole_moment")]
    pub dipole_moment: f64,
    /// Vacuum transverse decay rate over 2π, Hz.
    #[serde(default = "default_gamma_vac")]
    pub gamma_vac_over_2pi: f64,
    /// Transition wavelength, m.
    #[serde(default = "default_transition_wavelength")]
    pub transition_wavelength: f64,
    /// Relative permittivity of the emitter host (diamond).
    pub eps_nv: f64,
}

fn default_dipole_moment() -> f64 {
    2.74e-29
}

fn default_gamma_vac() -> f64 {
    13e6
}

fn default_transition_wavelength() -> f64 {
    637e-9
}

impl DipoleParams {
    pub fn nv_center(eps_nv: f64) -> Self {
        Self {
            dipole_moment: default_dipole_moment(),
            gamma_vac_over_2pi: default_gamma_vac(),
            transition_wavelength: default_transition_wavelength(),
            eps_nv,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("dipole_moment", self.dipole_moment),
            ("gamma_vac_over_2pi", self.gamma_vac_over_2pi),
            ("transition_wavelength", self.transition_wavelength),
            ("eps_nv", self.eps_nv),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// `(g_max/2π, g_eff/2π)` in Hz with `g_max = μ √(ω/(2ħε₀V))`, `g_eff = f·g_max`.
pub fn coupling<T: Real>(mode_volume: T, f: T, wavelength: T, dipole_moment: T) -> (T, T) {
    let two_pi = T::lit(2.0) * T::PI();
    let omega = two_pi * T::lit(SPEED_OF_LIGHT) / wavelength;
    let g = dipole_moment * (omega / (T::lit(2.0) * T::lit(HBAR) * T::lit(EPSILON_0) * mode_volume)).sqrt();
    let g_max = g / two_pi;
    (g_max, f * g_max)
}

/// `κ/2π = c/(λ Q)` in Hz; zero for a Q bound, flagged by the second value.
pub fn cavity_decay(wavelength: f64, q: Quality) -> (f64, bool) {
    match q {
        Quality::Finite(q) => (SPEED_OF_LIGHT / (wavelength * q), false),
        Quality::AtLeast(_) => (0.0, true),
    }
}

/// Emitter decay over 2π in a dielectric: `9ε^{5/2}/(2ε + ε_NV)² · γ_vac`.
pub fn dielectric_gamma<T: Real>(eps_medium: T, eps_nv: T, gamma_vac_over_2pi: T) -> T {
    let d = T::lit(2.0) * eps_medium + eps_nv;
    T::lit(9.0) * eps_medium.powf(T::lit(2.5)) / (d * d) * gamma_vac_over_2pi
}

/// Mean of the core and coating relative permittivities.
pub fn default_host_permittivity(cs: &CrossSection<f64>) -> f64 {
    let e = media_permittivity(cs);
    0.5 * (e[0] + e[1])
}

fn ser_quality<S: Serializer>(q: &Quality, s: S) -> Result<S::Ok, S::Error> {
    match q {
        Quality::Finite(v) => s.serialize_f64(*v),
        Quality::AtLeast(v) => s.serialize_str(&format!(">={v:e}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QedReport {
    pub geometry_variant: &'static str,
    #[serde(rename = "R_m")]
    pub major_radius: f64,
    #[serde(rename = "Rminor_m")]
    pub minor_radius: f64,
    #[serde(rename = "t_m")]
    pub coating: f64,
    pub uncoated: bool,
    pub polarization: Polarization,
    pub m: u32,
    pub radial_nodes: usize,
    pub axial_nodes: usize,
    pub lambda_res_m: f64,
    #[serde(rename = "Q_total", serialize_with = "ser_quality")]
    pub q_total: Quality,
    #[serde(rename = "Q_rad", serialize_with = "ser_quality")]
    pub q_rad: Quality,
    #[serde(rename = "Q_abs", serialize_with = "ser_quality")]
    pub q_abs: Quality,
    #[serde(rename = "V_m_m3")]
    pub mode_volume: f64,
    #[serde(rename = "Gamma_coating")]
    pub gamma_coating: f64,
    pub f: f64,
    pub g_max_over_2pi_hz: f64,
    pub g_eff_over_2pi_hz: f64,
    pub kappa_over_2pi_hz: f64,
    /// κ is zero because Q_total is only bounded.
    pub kappa_bound: bool,
    pub gamma_eff_over_2pi_hz: f64,
    pub g_eff_over_kappa: f64,
    pub cooperativity: f64,
    pub strong_coupling: bool,
    pub residual: f64,
}

impl QedReport {
    pub fn budget(&self) -> QualityBudget {
        QualityBudget { total: self.q_total, rad: self.q_rad, abs: self.q_abs }
    }
}

/// `(R, R′, t)` echo; the sphere and cylinder report their radius as R.
pub fn geometry_echo(cs: &CrossSection<f64>) -> (f64, f64, f64) {
    match *cs.shape() {
        Shape::CoatedToroid { major_radius, minor_radius, coating } => (major_radius, minor_radius, coating),
        Shape::CoatedSphere { radius, coating } => (radius, 0.0, coating),
        Shape::Cylinder { radius } => (radius, 0.0, 0.0),
    }
}

/// All figures of merit of a solved mode pair. `host_eps` overrides the
/// permittivity seen by the emitter (default: mean of core and coating).
pub fn build_report(cs: &CrossSection<f64>, pair: &ModePair, dipole: &DipoleParams, host_eps: Option<f64>) -> Result<QedReport, QedError> {
    let budget = q_budget(&pair.lossy, &pair.lossless)?;
    let lossless = &pair.lossless;
    let wavelength = lossless.wavelength();
    let v = mode_volume(lossless)?;
    let gamma_coating = if cs.coating_thickness() > 0.0 { energy_fraction(lossless, cs, MediumId::Coating) } else { 0.0 };
    let f = interface_factor(lossless, cs)?;
    let (g_max, g_eff) = coupling(v, f, wavelength, dipole.dipole_moment);
    let (kappa, kappa_bound) = cavity_decay(pair.lossy.wavelength(), budget.total);
    let host = host_eps.unwrap_or_else(|| default_host_permittivity(cs));
    let gamma = dielectric_gamma(host, dipole.eps_nv, dipole.gamma_vac_over_2pi);
    let (r, rm, t) = geometry_echo(cs);
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { f64::INFINITY };
    Ok(QedReport {
        geometry_variant: cs.shape().variant_name(),
        major_radius: r,
        minor_radius: rm,
        coating: t,
        uncoated: t == 0.0,
        polarization: lossless.polarization,
        m: pair.m,
        radial_nodes: lossless.radial_nodes,
        axial_nodes: lossless.axial_nodes,
        lambda_res_m: wavelength,
        q_total: budget.total,
        q_rad: budget.rad,
        q_abs: budget.abs,
        mode_volume: v,
        gamma_coating,
        f,
        g_max_over_2pi_hz: g_max,
        g_eff_over_2pi_hz: g_eff,
        kappa_over_2pi_hz: kappa,
        kappa_bound,
        gamma_eff_over_2pi_hz: gamma,
        g_eff_over_kappa: ratio(g_eff, kappa),
        cooperativity: ratio(g_eff * g_eff, kappa * gamma),
        strong_coupling: g_eff > 10.0 * kappa.max(gamma),
        residual: lossless.residual.max(pair.lossy.residual),
    })
}

impl fmt::Display for QedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} m={} λ={:.4} nm Q_total={} Q_rad={} Q_abs={} V={:.3} µm³ Γ={:.4} f={:.3} g_eff/2π={:.3} GHz κ/2π={:.3} MHz",
            self.polarization,
            self.m,
            self.lambda_res_m * 1e9,
            self.q_total,
            self.q_rad,
            self.q_abs,
            self.mode_volume * 1e18,
            self.gamma_coating,
            self.f,
            self.g_eff_over_2pi_hz * 1e-9,
            self.kappa_over_2pi_hz * 1e-6
        )
    }
}
