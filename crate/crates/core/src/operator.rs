//! Assembly of the axisymmetric curl–curl eigenproblem `A e = k² B e`.
//!
//! With fields `∝ exp(i m φ)` the azimuthal component is carried as
//! `Ẽ_φ = -i E_φ`, which makes the discrete curl real outside the PML.
//! `A = Cᵀ W_H C` with `C` the staggered curl and `W_H` the cell volumes at
//! the magnetic sample points; `B` is diagonal, the sub-pixel permittivity
//! times the cell volume at each electric sample point. All lengths enter in
//! units of `λ/2π`, so the eigenvalue is `(k λ/2π)²` and sits near one.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CrossSection, MediumId};
use crate::grid::{Grid, ZLayout};
use crate::sparse::Csr;
use crate::subpixel::{effective_permittivity, fill_fractions, Direction, Fill, Rect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssemblyError {
    #[error("grid cell ({i}, {j}) is {grid} but the cross-section has {geometry} there")]
    MediaMismatch { i: usize, j: usize, grid: MediumId, geometry: MediumId },
    #[error("grid has no interior unknowns")]
    Empty,
}

/// Treatment of the `z = 0` plane in the upper-half layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mirror {
    /// Tangential E vanishes: `E_z` even in z (quasi-TE family).
    Pec,
    /// Normal E vanishes: `E_ρ`, `E_φ` even in z (quasi-TM family).
    Pmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Rho,
    Phi,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Rho, Component::Phi, Component::Z];

    pub fn slot(self) -> usize {
        match self {
            Component::Rho => 0,
            Component::Phi => 1,
            Component::Z => 2,
        }
    }
}

/// Placement of the three electric components on the staggered grid and
/// the mapping from grid positions to unknown indices.
#[derive(Debug, Clone)]
pub struct DofMap {
    nr: usize,
    nz: usize,
    periodic: bool,
    index: [Vec<Option<usize>>; 3],
    location: Vec<(Component, usize, usize)>,
}

impl DofMap {
    pub fn new(grid: &Grid, mirror: Mirror) -> Self {
        let (nr, nz) = (grid.nr(), grid.nz());
        let layout = grid.layout();
        let periodic = layout == ZLayout::Periodic;
        let mut map = Self { nr, nz, periodic, index: Default::default(), location: Vec::new() };
        let tangential_row_free = |j: usize| match layout {
            ZLayout::Periodic => true,
            ZLayout::Full => j > 0 && j < nz,
            ZLayout::UpperHalf => j < nz && (j > 0 || mirror == Mirror::Pmc),
        };
        for comp in Component::ALL {
            let (ni, nj) = map.shape(comp);
            let mut idx = vec![None; ni * nj];
            for j in 0..nj {
                for i in 0..ni {
                    let free = match comp {
                        Component::Rho => tangential_row_free(j),
                        Component::Phi => i > 0 && i < nr && tangential_row_free(j),
                        Component::Z => i > 0 && i < nr,
                    };
                    if free {
                        idx[j * ni + i] = Some(map.location.len());
                        map.location.push((comp, i, j));
                    }
                }
            }
            map.index[comp.slot()] = idx;
        }
        map
    }

    /// `(ni, nj)` sample counts of a component.
    pub fn shape(&self, comp: Component) -> (usize, usize) {
        let nze = if self.periodic { 1 } else { self.nz + 1 };
        match comp {
            Component::Rho => (self.nr, nze),
            Component::Phi => (self.nr + 1, nze),
            Component::Z => (self.nr + 1, self.nz),
        }
    }

    pub fn len(&self) -> usize {
        self.location.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location.is_empty()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn dof(&self, comp: Component, i: usize, j: usize) -> Option<usize> {
        let (ni, nj) = self.shape(comp);
        if i >= ni || j >= nj {
            return None;
        }
        self.index[comp.slot()][j * ni + i]
    }

    pub fn location(&self, k: usize) -> (Component, usize, usize) {
        self.location[k]
    }

    /// Physical `(ρ, z)` of a component sample.
    pub fn position(&self, grid: &Grid, comp: Component, i: usize, j: usize) -> (f64, f64) {
        let zc = |j: usize| if self.periodic { grid.z_center(0) } else { grid.z_center(j) };
        let ze = |j: usize| if self.periodic { grid.z_center(0) } else { grid.z_edges()[j] };
        match comp {
            Component::Rho => (grid.rho_center(i), ze(j)),
            Component::Phi => (grid.rho_edges()[i], ze(j)),
            Component::Z => (grid.rho_edges()[i], zc(j)),
        }
    }

    /// Scatters an unknown vector into per-component arrays (zeros where pinned).
    pub fn scatter(&self, x: &[C64]) -> [Vec<C64>; 3] {
        let mut out: [Vec<C64>; 3] = Default::default();
        for comp in Component::ALL {
            let (ni, nj) = self.shape(comp);
            out[comp.slot()] = vec![C64::new(0.0, 0.0); ni * nj];
        }
        for (k, &(comp, i, j)) in self.location.iter().enumerate() {
            let ni = self.shape(comp).0;
            out[comp.slot()][j * ni + i] = x[k];
        }
        out
    }
}

/// Grid metrics in units of the length scale, possibly complex (PML).
struct Metrics {
    re: Vec<C64>,
    rc: Vec<C64>,
    ze: Vec<C64>,
    zc: Vec<C64>,
    periodic: bool,
}

impl Metrics {
    fn new(grid: &Grid, scale: f64, complex: bool) -> Self {
        let pick = |z: C64| if complex { z / scale } else { C64::new(z.re / scale, 0.0) };
        Self {
            re: (0..=grid.nr()).map(|i| pick(grid.rho_tilde_edge(i))).collect(),
            rc: (0..grid.nr()).map(|i| pick(grid.rho_tilde_center(i))).collect(),
            ze: (0..=grid.nz()).map(|j| pick(grid.z_tilde_edge(j))).collect(),
            zc: (0..grid.nz()).map(|j| pick(grid.z_tilde_center(j))).collect(),
            periodic: grid.layout() == ZLayout::Periodic,
        }
    }

    fn pr(&self, i: usize) -> C64 {
        self.re[i + 1] - self.re[i]
    }

    fn pz(&self, j: usize) -> C64 {
        self.ze[j + 1] - self.ze[j]
    }

    fn dr(&self, i: usize) -> C64 {
        let n = self.rc.len();
        if i == 0 {
            self.rc[0] - self.re[0]
        } else if i == n {
            self.re[n] - self.rc[n - 1]
        } else {
            self.rc[i] - self.rc[i - 1]
        }
    }

    fn dz(&self, j: usize) -> C64 {
        let n = self.zc.len();
        if self.periodic {
            self.pz(0)
        } else if j == 0 {
            self.zc[0] - self.ze[0]
        } else if j == n {
            self.ze[n] - self.zc[n - 1]
        } else {
            self.zc[j] - self.zc[j - 1]
        }
    }

    /// `ρ·L_ρ·L_z` volume at a component sample.
    fn e_volume(&self, comp: Component, i: usize, j: usize) -> C64 {
        match comp {
            Component::Rho => self.rc[i] * self.pr(i) * self.dz(j),
            Component::Phi => self.re[i] * self.dr(i) * self.dz(j),
            Component::Z => self.re[i] * self.dr(i) * self.pz(j),
        }
    }
}

/// Assembled eigenproblem plus what is needed to interpret its vectors.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub a: Csr,
    /// Diagonal of `B`.
    pub b: Vec<C64>,
    pub dofs: DofMap,
    pub m: u32,
    /// Length unit of the assembly (`λ/2π`), m.
    pub length_scale: f64,
    pub grid: Arc<Grid>,
    /// Sub-pixel permittivity at every component sample (pinned ones included).
    pub eps: [Vec<C64>; 3],
    /// Physical `ρ·L_ρ·L_z` at every component sample, m³ (times 2π gives volume).
    pub volume: [Vec<f64>; 3],
    /// Material fill of every component sample's averaging box.
    pub fill: [Vec<Fill>; 3],
    pub mirror: Mirror,
    pub include_absorption: bool,
}

impl OperatorPair {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Converts an eigenvalue of the scaled problem to angular frequency, rad/s.
    pub fn omega_of(&self, lambda: C64) -> C64 {
        let k = lambda.sqrt();
        let k = if k.re < 0.0 { -k } else { k };
        k * (crate::constants::SPEED_OF_LIGHT / self.length_scale)
    }

    /// Scaled eigenvalue for a free-space wavelength, m.
    pub fn lambda_of_wavelength(&self, wavelength: f64) -> f64 {
        let k = self.length_scale * 2.0 * std::f64::consts::PI / wavelength;
        k * k
    }

    /// Residual `‖A x − λ B x‖ / (‖A x‖ + |λ| ‖B x‖)`.
    pub fn relative_residual(&self, lambda: C64, x: &[C64]) -> f64 {
        let ax = self.a.mul_vec(x);
        let bx: Vec<C64> = x.iter().zip(&self.b).map(|(v, d)| v * d).collect();
        let r: Vec<C64> = ax.iter().zip(&bx).map(|(a, b)| a - lambda * b).collect();
        crate::sparse::norm(&r) / (crate::sparse::norm(&ax) + lambda.norm() * crate::sparse::norm(&bx)).max(f64::MIN_POSITIVE)
    }

    /// Discrete divergence of `B x` (scaled to the size of `B x`); zero for
    /// any eigenvector with non-zero eigenvalue.
    pub fn relative_divergence(&self, x: &[C64]) -> f64 {
        let g = gradient(self);
        let bx: Vec<C64> = x.iter().zip(&self.b).map(|(v, d)| v * d).collect();
        let div = g.mul_transpose_vec(&bx);
        let gnorm = (0..g.nrows()).flat_map(|r| g.row(r).map(|(_, v)| v.norm_sqr())).sum::<f64>().sqrt();
        let scale = crate::sparse::norm(&bx) * gnorm / (g.ncols() as f64).sqrt();
        if scale == 0.0 {
            0.0
        } else {
            crate::sparse::norm(&div) / scale
        }
    }
}

fn rect_for(grid: &Grid, comp: Component, i: usize, j: usize) -> Rect {
    let re = grid.rho_edges();
    let ze = grid.z_edges();
    let (nr, nz) = (grid.nr(), grid.nz());
    let rho_dual = |i: usize| {
        let lo = if i == 0 { re[0] } else { grid.rho_center(i - 1) };
        let hi = if i == nr { re[nr] } else { grid.rho_center(i) };
        (lo, hi)
    };
    let z_dual = |j: usize| {
        if grid.layout() == ZLayout::Periodic {
            return (ze[0], ze[1]);
        }
        let lo = if j == 0 { ze[0] } else { grid.z_center(j - 1) };
        let hi = if j == nz { ze[nz] } else { grid.z_center(j) };
        (lo, hi)
    };
    let ((rho0, rho1), (z0, z1)) = match comp {
        Component::Rho => ((re[i], re[i + 1]), z_dual(j)),
        Component::Phi => (rho_dual(i), z_dual(j)),
        Component::Z => (rho_dual(i), (ze[j], ze[j + 1])),
    };
    Rect { rho0, rho1, z0, z1 }
}

pub fn assemble(
    grid: Arc<Grid>,
    cs: &CrossSection<f64>,
    m: u32,
    wavelength: f64,
    include_absorption: bool,
    mirror: Mirror,
) -> Result<OperatorPair, AssemblyError> {
    for j in 0..grid.nz() {
        for i in 0..grid.nr() {
            let expected = cs.medium_at(grid.rho_center(i), grid.z_center(j));
            if grid.cell_medium(i, j) != expected {
                return Err(AssemblyError::MediaMismatch { i, j, grid: grid.cell_medium(i, j), geometry: expected });
            }
        }
    }
    let dofs = DofMap::new(&grid, mirror);
    if dofs.is_empty() {
        return Err(AssemblyError::Empty);
    }
    let scale = grid.wavelength() / (2.0 * std::f64::consts::PI);
    let met = Metrics::new(&grid, scale, true);
    let phys = Metrics::new(&grid, 1.0, false);

    let eps_media: [C64; 3] = MediumId::ALL.map(|id| {
        let n = cs.medium(id).complex_index(wavelength);
        let n = if include_absorption { n } else { crate::materials::ComplexIndex::lossless(n.re) };
        n.permittivity()
    });
    let frame = cs.layer_frame();

    let mut eps: [Vec<C64>; 3] = Default::default();
    let mut volume: [Vec<f64>; 3] = Default::default();
    let mut fills: [Vec<Fill>; 3] = Default::default();
    for comp in Component::ALL {
        let (ni, nj) = dofs.shape(comp);
        let dir = match comp {
            Component::Rho => Direction::Rho,
            Component::Phi => Direction::Phi,
            Component::Z => Direction::Z,
        };
        let mut e = Vec::with_capacity(ni * nj);
        let mut v = Vec::with_capacity(ni * nj);
        let mut f = Vec::with_capacity(ni * nj);
        for j in 0..nj {
            for i in 0..ni {
                let fill = fill_fractions(&frame, &rect_for(&grid, comp, i, j));
                e.push(effective_permittivity(&fill, &eps_media, dir));
                v.push(phys.e_volume(comp, i, j).re);
                f.push(fill);
            }
        }
        eps[comp.slot()] = e;
        volume[comp.slot()] = v;
        fills[comp.slot()] = f;
    }

    let b: Vec<C64> = (0..dofs.len())
        .map(|k| {
            let (comp, i, j) = dofs.location(k);
            let ni = dofs.shape(comp).0;
            eps[comp.slot()][j * ni + i] * met.e_volume(comp, i, j)
        })
        .collect();

    let mut triplets = Vec::new();
    for (weight, row) in curl_rows(&grid, &dofs, &met, m) {
        for &(ca, va) in &row {
            for &(cb, vb) in &row {
                triplets.push((ca, cb, weight * va * vb));
            }
        }
    }
    let a = Csr::from_triplets(dofs.len(), dofs.len(), triplets);
    Ok(OperatorPair {
        a,
        b,
        dofs,
        m,
        length_scale: scale,
        grid,
        eps,
        volume,
        fill: fills,
        mirror,
        include_absorption,
    })
}

type CurlRow = (C64, Vec<(usize, C64)>);

/// Rows of the discrete curl with their magnetic-cell volumes.
fn curl_rows(grid: &Grid, dofs: &DofMap, met: &Metrics, m: u32) -> Vec<CurlRow> {
    let (nr, nz) = (grid.nr(), grid.nz());
    let periodic = dofs.is_periodic();
    let mf = m as f64;
    let mut rows = Vec::new();
    let jz = |j: usize| if periodic { 0 } else { j };
    let push = |row: &mut Vec<(usize, C64)>, d: Option<usize>, v: C64| {
        if let Some(k) = d {
            row.push((k, v));
        }
    };
    // H_ρ at (edge i, center j)
    for j in 0..nz {
        for i in 0..=nr {
            let mut row = Vec::with_capacity(3);
            push(&mut row, dofs.dof(Component::Z, i, j), mf / met.re[i]);
            if !periodic {
                let inv = 1.0 / met.pz(j);
                push(&mut row, dofs.dof(Component::Phi, i, j + 1), -inv);
                push(&mut row, dofs.dof(Component::Phi, i, j), inv);
            }
            if !row.is_empty() {
                rows.push((met.re[i] * met.dr(i) * met.pz(j), row));
            }
        }
    }
    // H_φ at (center i, center j)
    for j in 0..nz {
        for i in 0..nr {
            let mut row = Vec::with_capacity(4);
            if !periodic {
                let inv = 1.0 / met.pz(j);
                push(&mut row, dofs.dof(Component::Rho, i, j + 1), inv);
                push(&mut row, dofs.dof(Component::Rho, i, j), -inv);
            }
            let inv = 1.0 / met.pr(i);
            push(&mut row, dofs.dof(Component::Z, i + 1, j), -inv);
            push(&mut row, dofs.dof(Component::Z, i, j), inv);
            if !row.is_empty() {
                rows.push((met.rc[i] * met.pr(i) * met.pz(j), row));
            }
        }
    }
    // H_z at (center i, edge j)
    let nze = if periodic { 1 } else { nz + 1 };
    for j in 0..nze {
        for i in 0..nr {
            let mut row = Vec::with_capacity(3);
            let denom = met.rc[i] * met.pr(i);
            push(&mut row, dofs.dof(Component::Phi, i + 1, jz(j)), met.re[i + 1] / denom);
            push(&mut row, dofs.dof(Component::Phi, i, jz(j)), -met.re[i] / denom);
            push(&mut row, dofs.dof(Component::Rho, i, jz(j)), -mf / met.rc[i]);
            if !row.is_empty() {
                rows.push((met.rc[i] * met.pr(i) * met.dz(j), row));
            }
        }
    }
    rows
}

/// Discrete gradient from nodal potentials (one per free `E_φ` sample, in
/// the same order) to the unknowns. `A · G = 0` identically.
pub fn gradient(op: &OperatorPair) -> Csr {
    let grid = &op.grid;
    let dofs = &op.dofs;
    let met = Metrics::new(grid, op.length_scale, true);
    let mf = op.m as f64;
    let (ni_phi, nj_phi) = dofs.shape(Component::Phi);
    let mut node = vec![None; ni_phi * nj_phi];
    let mut count = 0;
    for j in 0..nj_phi {
        for i in 0..ni_phi {
            if dofs.dof(Component::Phi, i, j).is_some() {
                node[j * ni_phi + i] = Some(count);
                count += 1;
            }
        }
    }
    let node_at = |i: usize, j: usize| if i < ni_phi && j < nj_phi { node[j * ni_phi + i] } else { None };
    let mut t = Vec::new();
    for k in 0..dofs.len() {
        let (comp, i, j) = dofs.location(k);
        match comp {
            Component::Rho => {
                let inv = 1.0 / met.pr(i);
                if let Some(n) = node_at(i + 1, j) {
                    t.push((k, n, inv));
                }
                if let Some(n) = node_at(i, j) {
                    t.push((k, n, -inv));
                }
            }
            Component::Phi => {
                if let Some(n) = node_at(i, j) {
                    t.push((k, n, mf / met.re[i]));
                }
            }
            Component::Z => {
                if !dofs.is_periodic() {
                    let inv = 1.0 / met.pz(j);
                    if let Some(n) = node_at(i, j + 1) {
                        t.push((k, n, inv));
                    }
                    if let Some(n) = node_at(i, j) {
                        t.push((k, n, -inv));
                    }
                }
            }
        }
    }
    Csr::from_triplets(dofs.len(), count, t)
}
