//! Eigenvectors turned into physical field maps, plus the per-mode
//! bookkeeping: normalization, polarization class, node counts and Q.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::arnoldi::EigenPair;
use crate::geometry::MediumId;
use crate::grid::{Grid, ZLayout};
use crate::operator::{Component, DofMap, Mirror, OperatorPair};
use crate::subpixel::Fill;

/// Quality factors above this are indistinguishable from lossless in
/// double precision and are reported as a lower bound.
pub const Q_FLOOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "TE")]
    QuasiTe,
    #[serde(rename = "TM")]
    QuasiTm,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::QuasiTe, Polarization::QuasiTm];

    pub fn label(self) -> &'static str {
        match self {
            Polarization::QuasiTe => "TE",
            Polarization::QuasiTm => "TM",
        }
    }

    /// Mirror condition at the equator that holds this family's fundamental mode.
    pub fn mirror(self) -> Mirror {
        match self {
            Polarization::QuasiTe => Mirror::Pec,
            Polarization::QuasiTm => Mirror::Pmc,
        }
    }

    pub fn dominant(self) -> Component {
        match self {
            Polarization::QuasiTe => Component::Z,
            Polarization::QuasiTm => Component::Rho,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A quality factor, or a lower bound once it passes [`Q_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quality {
    Finite(f64),
    AtLeast(f64),
}

impl Quality {
    pub fn from_value(q: f64) -> Self {
        if q.is_finite() && q > 0.0 && q <= Q_FLOOR {
            Quality::Finite(q)
        } else {
            Quality::AtLeast(Q_FLOOR)
        }
    }

    /// The number to use in arithmetic; the floor itself for bounds.
    pub fn value(self) -> f64 {
        match self {
            Quality::Finite(q) | Quality::AtLeast(q) => q,
        }
    }

    pub fn inverse(self) -> f64 {
        match self {
            Quality::Finite(q) => 1.0 / q,
            Quality::AtLeast(_) => 0.0,
        }
    }

    pub fn is_bound(self) -> bool {
        matches!(self, Quality::AtLeast(_))
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quality::Finite(q) => write!(f, "{q:e}"),
            Quality::AtLeast(q) => write!(f, ">={q:e}"),
        }
    }
}

/// `Re ω / (2 |Im ω|)`.
pub fn quality_factor(omega: C64) -> Quality {
    if omega.im == 0.0 {
        return Quality::AtLeast(Q_FLOOR);
    }
    Quality::from_value(omega.re / (2.0 * omega.im.abs()))
}

/// Physical electric field on the staggered samples of one grid.
#[derive(Debug, Clone)]
pub struct FieldSet {
    pub grid: Arc<Grid>,
    pub mirror: Mirror,
    dofs: DofMap,
    /// `E_ρ`, `E_φ`, `E_z` per component sample (row-major in j).
    pub e: [Vec<C64>; 3],
    /// Real part of the averaged permittivity at each sample.
    pub eps: [Vec<f64>; 3],
    /// `ρ·L_ρ·L_z` at each sample, m³.
    pub volume: [Vec<f64>; 3],
    pub fill: [Vec<Fill>; 3],
}

impl FieldSet {
    pub fn from_vector(op: &OperatorPair, x: &[C64]) -> Self {
        let mut e = op.dofs.scatter(x);
        // The assembly carries Ẽ_φ = −i E_φ.
        for v in e[Component::Phi.slot()].iter_mut() {
            *v *= C64::i();
        }
        Self {
            grid: op.grid.clone(),
            mirror: op.mirror,
            dofs: op.dofs.clone(),
            e,
            eps: op.eps.clone().map(|v| v.iter().map(|z| z.re).collect()),
            volume: op.volume.clone(),
            fill: op.fill.clone(),
        }
    }

    pub fn shape(&self, comp: Component) -> (usize, usize) {
        self.dofs.shape(comp)
    }

    pub fn at(&self, comp: Component, i: usize, j: usize) -> C64 {
        let ni = self.shape(comp).0;
        self.e[comp.slot()][j * ni + i]
    }

    pub fn position(&self, comp: Component, i: usize, j: usize) -> (f64, f64) {
        self.dofs.position(&self.grid, comp, i, j)
    }

    fn periodic(&self) -> bool {
        self.grid.layout() == ZLayout::Periodic
    }

    /// Copies of the samples are implied below `z = 0` in the half layout.
    pub fn symmetry_weight(&self) -> f64 {
        if self.grid.layout() == ZLayout::UpperHalf {
            2.0
        } else {
            1.0
        }
    }

    /// All three components interpolated to the center of cell `(i, j)`.
    pub fn at_center(&self, i: usize, j: usize) -> [C64; 3] {
        let jz = |j: usize| if self.periodic() { 0 } else { j };
        let (j0, j1) = (jz(j), jz(j + 1));
        let er = 0.5 * (self.at(Component::Rho, i, j0) + self.at(Component::Rho, i, j1));
        let ep = 0.25
            * (self.at(Component::Phi, i, j0)
                + self.at(Component::Phi, i + 1, j0)
                + self.at(Component::Phi, i, j1)
                + self.at(Component::Phi, i + 1, j1));
        let ez = 0.5 * (self.at(Component::Z, i, j) + self.at(Component::Z, i + 1, j));
        [er, ep, ez]
    }

    fn cell_in_window(&self, i: usize, j: usize) -> bool {
        let g = &self.grid;
        let (r0, r1) = g.rho_window();
        let (z0, z1) = g.z_window();
        let rc = g.rho_center(i);
        let zc = g.z_center(j);
        rc > r0 && rc < r1 && (self.periodic() || (zc > z0 && zc < z1))
    }

    fn sample_in_window(&self, comp: Component, i: usize, j: usize) -> bool {
        let (r, z) = self.position(comp, i, j);
        let (r0, r1) = self.grid.rho_window();
        let (z0, z1) = self.grid.z_window();
        r >= r0 && r <= r1 && (self.periodic() || (z >= z0 && z <= z1))
    }

    /// Largest `n²|E|²` and `|E|` over the cell centers of the physical window.
    pub fn center_maxima(&self) -> (f64, f64) {
        let mut energy = 0.0f64;
        let mut field = 0.0f64;
        for j in 0..self.grid.nz() {
            for i in 0..self.grid.nr() {
                if !self.cell_in_window(i, j) {
                    continue;
                }
                let e2: f64 = self.at_center(i, j).iter().map(|v| v.norm_sqr()).sum();
                let n2 = self.cell_permittivity(i, j);
                energy = energy.max(n2 * e2);
                field = field.max(e2.sqrt());
            }
        }
        (energy, field)
    }

    /// Permittivity at the center of cell `(i, j)`.
    pub fn cell_permittivity(&self, i: usize, j: usize) -> f64 {
        // Average of the four surrounding E_φ samples, which see the arithmetic mean.
        let jz = |j: usize| if self.periodic() { 0 } else { j };
        let ni = self.shape(Component::Phi).0;
        let eps = &self.eps[Component::Phi.slot()];
        0.25 * (eps[jz(j) * ni + i] + eps[jz(j) * ni + i + 1] + eps[jz(j + 1) * ni + i] + eps[jz(j + 1) * ni + i + 1])
    }

    pub fn scale(&mut self, s: C64) {
        for comp in self.e.iter_mut() {
            for v in comp.iter_mut() {
                *v *= s;
            }
        }
    }

    /// `∫ n²|E_c|² dV` over the physical window, per component (m³, field units²).
    pub fn component_energy(&self) -> [f64; 3] {
        let w = 2.0 * std::f64::consts::PI * self.symmetry_weight();
        Component::ALL.map(|comp| {
            let (ni, nj) = self.shape(comp);
            let mut acc = 0.0;
            for j in 0..nj {
                for i in 0..ni {
                    if self.sample_in_window(comp, i, j) {
                        let k = j * ni + i;
                        acc += self.eps[comp.slot()][k] * self.e[comp.slot()][k].norm_sqr() * self.volume[comp.slot()][k];
                    }
                }
            }
            acc * w
        })
    }

    /// `∫ n²|E|² dV` split by medium, per sample: tangential energy goes to
    /// each medium as `ε_r |E|²`, normal energy as `|D|²/ε_r`.
    pub fn energy_by_medium(&self, eps_media: &[f64; 3]) -> [f64; 3] {
        let w = 2.0 * std::f64::consts::PI * self.symmetry_weight();
        let mut out = [0.0; 3];
        for comp in Component::ALL {
            let (ni, nj) = self.shape(comp);
            for j in 0..nj {
                for i in 0..ni {
                    if !self.sample_in_window(comp, i, j) {
                        continue;
                    }
                    let k = j * ni + i;
                    let fill = &self.fill[comp.slot()][k];
                    let e2 = self.e[comp.slot()][k].norm_sqr();
                    let vol = self.volume[comp.slot()][k] * w;
                    if let Some(id) = fill.uniform() {
                        out[id.index()] += self.eps[comp.slot()][k] * e2 * vol;
                        continue;
                    }
                    let s = match comp {
                        Component::Rho => fill.normal.0 * fill.normal.0,
                        Component::Z => fill.normal.1 * fill.normal.1,
                        Component::Phi => 0.0,
                    };
                    let d2 = self.eps[comp.slot()][k].powi(2) * e2;
                    for id in MediumId::ALL {
                        let frac = fill.fraction(id);
                        if frac > 0.0 {
                            let er = eps_media[id.index()];
                            out[id.index()] += frac * vol * (s * d2 / er + (1.0 - s) * er * e2);
                        }
                    }
                }
            }
        }
        out
    }

    /// Text dump: one line per cell center in the physical window.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# rho_m z_m medium re_E_rho im_E_rho re_E_phi im_E_phi re_E_z im_E_z")?;
        for j in 0..self.grid.nz() {
            for i in 0..self.grid.nr() {
                if !self.cell_in_window(i, j) {
                    continue;
                }
                let [er, ep, ez] = self.at_center(i, j);
                let medium = match self.grid.cell_medium(i, j) {
                    MediumId::Core => "core",
                    MediumId::Coating => "coating",
                    MediumId::Exterior => "exterior",
                };
                writeln!(
                    w,
                    "{:.9e} {:.9e} {medium} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e}",
                    self.grid.rho_center(i),
                    self.grid.z_center(j),
                    er.re,
                    er.im,
                    ep.re,
                    ep.im,
                    ez.re,
                    ez.im
                )?;
            }
        }
        Ok(())
    }
}

/// Classifies by comparing `∫n²|E_z|²` against `∫n²|E_ρ|²`; also returns
/// that ratio.
pub fn classify(fields: &FieldSet) -> (Polarization, f64) {
    let e = fields.component_energy();
    let (rho, z) = (e[Component::Rho.slot()], e[Component::Z.slot()]);
    let ratio = if rho > 0.0 { z / rho } else { f64::INFINITY };
    if z > rho {
        (Polarization::QuasiTe, ratio)
    } else {
        (Polarization::QuasiTm, ratio)
    }
}

/// Sign changes of a phase-aligned sequence, ignoring samples below 5 % of
/// its largest magnitude.
fn sign_changes(values: &[C64], phase: C64) -> usize {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut last: Option<bool> = None;
    let mut changes = 0;
    for v in values {
        if v.norm() < 0.05 * peak {
            continue;
        }
        let positive = (v * phase).re >= 0.0;
        if last.is_some_and(|l| l != positive) {
            changes += 1;
        }
        last = Some(positive);
    }
    changes
}

/// Radial and axial node counts of a component along the two grid lines
/// through its largest sample. Axial nodes count the mirrored half too.
pub fn count_nodes(fields: &FieldSet, comp: Component) -> (usize, usize) {
    let (ni, nj) = fields.shape(comp);
    let mut best = (0, 0, 0.0);
    for j in 0..nj {
        for i in 0..ni {
            if fields.sample_in_window(comp, i, j) {
                let a = fields.at(comp, i, j).norm();
                if a > best.2 {
                    best = (i, j, a);
                }
            }
        }
    }
    let (bi, bj, peak) = best;
    if peak == 0.0 {
        return (0, 0);
    }
    let phase = fields.at(comp, bi, bj).conj() / peak;
    let radial: Vec<C64> = (0..ni).filter(|&i| fields.sample_in_window(comp, i, bj)).map(|i| fields.at(comp, i, bj)).collect();
    let axial: Vec<C64> = (0..nj).filter(|&j| fields.sample_in_window(comp, bi, j)).map(|j| fields.at(comp, bi, j)).collect();
    let radial_nodes = sign_changes(&radial, phase);
    let axial_nodes = sign_changes(&axial, phase) * fields.symmetry_weight() as usize;
    (radial_nodes, axial_nodes)
}

#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub m: u32,
    /// Complex angular frequency, rad/s (`Im ω < 0` for decay).
    pub omega: C64,
    pub polarization: Polarization,
    /// `∫n²|E_z|² / ∫n²|E_ρ|²`.
    pub energy_ratio: f64,
    pub radial_nodes: usize,
    pub axial_nodes: usize,
    pub residual: f64,
    pub divergence: f64,
    pub fields: FieldSet,
}

impl ModeSolution {
    /// Builds a normalized mode from an eigenpair: `max n²|E|² = 1` at the
    /// cell centers, and the largest dominant sample made real positive.
    pub fn from_pair(op: &OperatorPair, pair: &EigenPair) -> Self {
        let mut fields = FieldSet::from_vector(op, &pair.vector);
        let (energy, _) = fields.center_maxima();
        if energy > 0.0 {
            fields.scale(C64::new(1.0 / energy.sqrt(), 0.0));
        }
        let (polarization, energy_ratio) = classify(&fields);
        let dom = polarization.dominant();
        let peak = fields.e[dom.slot()].iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
        if peak.norm() > 0.0 {
            fields.scale(peak.conj() / peak.norm());
        }
        let (radial_nodes, axial_nodes) = count_nodes(&fields, dom);
        Self {
            m: op.m,
            omega: op.omega_of(pair.lambda),
            polarization,
            energy_ratio,
            radial_nodes,
            axial_nodes,
            residual: pair.residual,
            divergence: op.relative_divergence(&pair.vector),
            fields,
        }
    }

    /// Resonance wavelength `2πc / Re ω`, m.
    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI * crate::constants::SPEED_OF_LIGHT / self.omega.re
    }

    pub fn quality(&self) -> Quality {
        quality_factor(self.omega)
    }

    pub fn is_fundamental(&self) -> bool {
        self.radial_nodes == 0 && self.axial_nodes == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_from_frequency() {
        let w0 = 1.0e15;
        let q = quality_factor(C64::new(w0, -w0 * 2.5e-7)).value();
        assert!((q - 2.0e6).abs() < 1e-6 * 2.0e6);
        let q = quality_factor(C64::new(w0, -w0 * 5e-9)).value();
        assert!((q - 1.0e8).abs() < 1e-6 * 1.0e8);
        assert_eq!(quality_factor(C64::new(w0, 0.0)), Quality::AtLeast(Q_FLOOR));
        assert!(quality_factor(C64::new(w0, -w0 * 1e-14)).is_bound());
    }

    #[test]
    fn sign_changes_skip_small_samples() {
        let one = C64::new(1.0, 0.0);
        let v: Vec<C64> = [0.5, 1.0, 0.01, -0.02, 0.8].iter().map(|&x| one * x).collect();
        assert_eq!(sign_changes(&v, one), 0);
        let v: Vec<C64> = [0.5, 1.0, -0.3, 0.8].iter().map(|&x| one * x).collect();
        assert_eq!(sign_changes(&v, one), 2);
    }
}
