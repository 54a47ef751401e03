//! Nonuniform staggered grid over the (ρ, z) half-plane.
//!
//! Grid lines are pinned to the equatorial interfaces (core rim, coating
//! rim) and to the window/PML boundaries; between them the spacing follows
//! a local resolution requirement graded so neighboring cells never differ
//! by more than the configured ratio.
//!
//! Field staggering (2D Yee cell, `i`/`j` index edges, `+½` centers):
//!
//! | component | ρ position | z position |
//! |-----------|-----------|------------|
//! | `E_ρ`     | `i+½`     | `j`        |
//! | `E_φ`     | `i`       | `j`        |
//! | `E_z`     | `i`       | `j+½`      |
//! | `H_ρ`     | `i`       | `j+½`      |
//! | `H_φ`     | `i+½`     | `j+½`      |
//! | `H_z`     | `i+½`     | `j`        |

use std::io::{self, Write};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CrossSection, LayerCenter, LayerFrame, MediumId};
use crate::pml::{AxisStretch, PmlError, PmlLayer, PmlSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid resolution: {0}")]
    Resolution(String),
    #[error(transparent)]
    Pml(#[from] PmlError),
    #[error("target wavelength must be positive, got {0}")]
    Wavelength(f64),
    #[error("inner wall would sit at ρ = {0} ≤ 0")]
    InnerWall(f64),
    #[error("grid needs {cells} cells to satisfy {constraint}, above the limit of {max}")]
    TooManyCells { cells: usize, max: usize, constraint: String },
    #[error("could not honor grading ratio {ratio} near ρ/z = {at}")]
    Grading { ratio: f64, at: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolutionSpec {
    /// Cells per wavelength in the locally densest medium.
    pub base_cells_per_wavelength: usize,
    /// Radial cells across the coating at the equator (when the coating exists).
    pub min_cells_across_coating: usize,
    /// Air gap between the coating rim and the radial PML, m.
    pub window_padding: f64,
    /// Depth below the core rim of the inner hard wall, m; derived from the
    /// wavelength when absent.
    pub inner_depth: Option<f64>,
    /// Largest allowed ratio between neighboring cell sizes.
    pub max_grading: f64,
    pub max_cells: usize,
}

impl Default for ResolutionSpec {
    fn default() -> Self {
        Self {
            base_cells_per_wavelength: 16,
            min_cells_across_coating: 4,
            window_padding: 1.5e-6,
            inner_depth: None,
            max_grading: 1.5,
            max_cells: 600_000,
        }
    }
}

impl ResolutionSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if self.base_cells_per_wavelength < 8 {
            return Err(GridError::Resolution(format!(
                "base_cells_per_wavelength must be at least 8, got {}",
                self.base_cells_per_wavelength
            )));
        }
        if self.min_cells_across_coating < 2 {
            return Err(GridError::Resolution(format!(
                "min_cells_across_coating must be at least 2, got {}",
                self.min_cells_across_coating
            )));
        }
        if !(self.window_padding > 0.0) {
            return Err(GridError::Resolution("window_padding must be positive".into()));
        }
        if let Some(d) = self.inner_depth {
            if !(d > 0.0) {
                return Err(GridError::Resolution("inner_depth must be positive".into()));
            }
        }
        if !(self.max_grading > 1.0 && self.max_grading <= 1.5) {
            return Err(GridError::Resolution(format!(
                "max_grading must lie in (1, 1.5], got {}",
                self.max_grading
            )));
        }
        Ok(())
    }

    /// Uniform refinement: scales every cell-count requirement by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        let scale = |n: usize| ((n as f64) * factor).round().max(1.0) as usize;
        Self {
            base_cells_per_wavelength: scale(self.base_cells_per_wavelength),
            min_cells_across_coating: scale(self.min_cells_across_coating),
            ..self.clone()
        }
    }
}

/// Vertical extent and lower-boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZLayout {
    /// Symmetric window with PML on both z walls.
    Full,
    /// `z ≥ 0` only; the equatorial plane is a mirror.
    UpperHalf,
    /// A single periodic cell: fields independent of z (infinite cylinder).
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rho,
    Z,
}

#[derive(Debug, Clone)]
pub struct Grid {
    rho_edges: Vec<f64>,
    z_edges: Vec<f64>,
    cell_medium: Vec<MediumId>,
    layout: ZLayout,
    rho_window: (f64, f64),
    z_window: (f64, f64),
    rho_stretch: AxisStretch,
    z_stretch: AxisStretch,
    rho_tilde_edges: Vec<C64>,
    rho_tilde_centers: Vec<C64>,
    z_tilde_edges: Vec<C64>,
    z_tilde_centers: Vec<C64>,
    pml: PmlSpec,
    wavelength: f64,
}

impl Grid {
    pub fn nr(&self) -> usize {
        self.rho_edges.len() - 1
    }

    pub fn nz(&self) -> usize {
        self.z_edges.len() - 1
    }

    pub fn cell_count(&self) -> usize {
        self.nr() * self.nz()
    }

    pub fn rho_edges(&self) -> &[f64] {
        &self.rho_edges
    }

    pub fn z_edges(&self) -> &[f64] {
        &self.z_edges
    }

    pub fn rho_center(&self, i: usize) -> f64 {
        0.5 * (self.rho_edges[i] + self.rho_edges[i + 1])
    }

    pub fn z_center(&self, j: usize) -> f64 {
        0.5 * (self.z_edges[j] + self.z_edges[j + 1])
    }

    pub fn drho(&self, i: usize) -> f64 {
        self.rho_edges[i + 1] - self.rho_edges[i]
    }

    pub fn dz(&self, j: usize) -> f64 {
        self.z_edges[j + 1] - self.z_edges[j]
    }

    pub fn cell_medium(&self, i: usize, j: usize) -> MediumId {
        self.cell_medium[j * self.nr() + i]
    }

    pub fn cell_media(&self) -> &[MediumId] {
        &self.cell_medium
    }

    pub fn layout(&self) -> ZLayout {
        self.layout
    }

    pub fn pml(&self) -> &PmlSpec {
        &self.pml
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Physical (non-PML) window along ρ.
    pub fn rho_window(&self) -> (f64, f64) {
        self.rho_window
    }

    /// Physical (non-PML) window along z.
    pub fn z_window(&self) -> (f64, f64) {
        self.z_window
    }

    pub fn in_window(&self, rho: f64, z: f64) -> bool {
        !self.rho_stretch.in_layer(rho) && !self.z_stretch.in_layer(z)
    }

    pub fn axis_stretch(&self, axis: Axis) -> &AxisStretch {
        match axis {
            Axis::Rho => &self.rho_stretch,
            Axis::Z => &self.z_stretch,
        }
    }

    /// Derivative multiplier of the PML at coordinate `x` (identity in the window).
    pub fn stretch_factor(&self, x: f64, axis: Axis) -> C64 {
        self.axis_stretch(axis).stretch(x)
    }

    pub fn rho_tilde_edge(&self, i: usize) -> C64 {
        self.rho_tilde_edges[i]
    }

    pub fn rho_tilde_center(&self, i: usize) -> C64 {
        self.rho_tilde_centers[i]
    }

    pub fn z_tilde_edge(&self, j: usize) -> C64 {
        self.z_tilde_edges[j]
    }

    pub fn z_tilde_center(&self, j: usize) -> C64 {
        self.z_tilde_centers[j]
    }

    /// Index of the edge nearest `rho`.
    pub fn nearest_rho_edge(&self, rho: f64) -> usize {
        nearest(&self.rho_edges, rho)
    }

    pub fn nearest_z_edge(&self, z: f64) -> usize {
        nearest(&self.z_edges, z)
    }

    /// Local spacing along `axis` at coordinate `x` (size of the containing cell).
    pub fn spacing_at(&self, x: f64, axis: Axis) -> f64 {
        let edges = match axis {
            Axis::Rho => &self.rho_edges,
            Axis::Z => &self.z_edges,
        };
        let k = edges.partition_point(|&e| e <= x).clamp(1, edges.len() - 1);
        edges[k] - edges[k - 1]
    }

    /// Largest neighbor-to-neighbor size ratio along either axis.
    pub fn max_grading_ratio(&self) -> f64 {
        grading(&self.rho_edges).max(grading(&self.z_edges))
    }

    /// Plain-text dump: one line per cell with center coordinates and medium.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# nr={} nz={} layout={:?}", self.nr(), self.nz(), self.layout)?;
        writeln!(w, "# rho_window_m={:e} {:e} z_window_m={:e} {:e}", self.rho_window.0, self.rho_window.1, self.z_window.0, self.z_window.1)?;
        writeln!(w, "# rho_m z_m drho_m dz_m medium in_pml")?;
        for j in 0..self.nz() {
            for i in 0..self.nr() {
                let (r, z) = (self.rho_center(i), self.z_center(j));
                writeln!(
                    w,
                    "{:.9e} {:.9e} {:.6e} {:.6e} {} {}",
                    r,
                    z,
                    self.drho(i),
                    self.dz(j),
                    self.cell_medium(i, j),
                    u8::from(!self.in_window(r, z))
                )?;
            }
        }
        Ok(())
    }
}

fn nearest(edges: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (k, &e) in edges.iter().enumerate() {
        if (e - x).abs() < (edges[best] - x).abs() {
            best = k;
        }
    }
    best
}

fn grading(edges: &[f64]) -> f64 {
    edges
        .windows(3)
        .map(|w| {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            a.max(b) / a.min(b)
        })
        .fold(1.0, f64::max)
}

/// Highest index met by a straight line whose closest approach to the layer
/// center is `d`.
fn line_index(frame: &LayerFrame<f64>, d: f64, cs: &CrossSection<f64>) -> f64 {
    let ext = cs.media().exterior.index();
    let coat = if frame.outer > frame.inner { cs.media().coating.index() } else { ext };
    match frame.classify_distance(d) {
        MediumId::Core => cs.media().core.index().max(coat).max(ext),
        MediumId::Coating => coat.max(ext),
        MediumId::Exterior => ext,
    }
}

/// Graded node placement between pinned coordinates.
fn graded_nodes(fixed: &[f64], h_req: &dyn Fn(f64) -> f64, slope: f64, cap: f64) -> Result<Vec<f64>, GridError> {
    let (lo, hi) = (fixed[0], fixed[fixed.len() - 1]);
    // Fine sampling at a quarter of the smallest requirement, including every
    // pinned coordinate.
    let probe = 256;
    let hmin = (0..=probe).map(|k| h_req(lo + (hi - lo) * k as f64 / probe as f64)).fold(f64::INFINITY, f64::min);
    let hmin = fixed.iter().fold(hmin, |m, &f| m.min(h_req(f)).min(h_req(f + 1e-12 * (hi - lo))));
    let step = 0.25 * hmin;
    let mut xs = Vec::new();
    for w in fixed.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = (((b - a) / step).ceil() as usize).clamp(8, 4_000_000);
        for k in 0..n {
            xs.push(a + (b - a) * k as f64 / n as f64);
        }
    }
    xs.push(hi);
    let mut h: Vec<f64> = xs.iter().map(|&x| h_req(x)).collect();
    // Pinned points take the finer requirement of either side.
    for &f in fixed {
        if let Some(k) = xs.iter().position(|&x| x == f) {
            let eps = 1e-12 * (hi - lo);
            h[k] = h[k].min(h_req(f - eps)).min(h_req(f + eps));
        }
    }
    for k in 1..xs.len() {
        h[k] = h[k].min(h[k - 1] + slope * (xs[k] - xs[k - 1]));
    }
    for k in (0..xs.len() - 1).rev() {
        h[k] = h[k].min(h[k + 1] + slope * (xs[k + 1] - xs[k]));
    }

    // Per-segment cumulative ∫dx/h.
    let mut segments: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut start = 0;
    for &f in &fixed[1..] {
        let end = xs.iter().position(|&x| x == f).expect("pinned point sampled");
        let mut cum = vec![0.0];
        for k in start..end {
            let dx = xs[k + 1] - xs[k];
            let last = *cum.last().unwrap();
            cum.push(last + 0.5 * dx * (1.0 / h[k] + 1.0 / h[k + 1]));
        }
        segments.push((start, end, cum));
        start = end;
    }
    let mut nodes = vec![lo];
    for (a, _b, cum) in &segments {
        let total = *cum.last().unwrap();
        let n = (total - 1e-9).ceil().max(1.0) as usize;
        let mut k = 0;
        for c in 1..n {
            let target = total * c as f64 / n as f64;
            while cum[k + 1] < target {
                k += 1;
            }
            let frac = (target - cum[k]) / (cum[k + 1] - cum[k]);
            nodes.push(xs[a + k] + frac * (xs[a + k + 1] - xs[a + k]));
        }
        nodes.push(xs[a + cum.len() - 1]);
    }
    // Rounding cell counts per segment can leave jumps at pinned points;
    // bisect the coarser cell of every offending pair until none remain.
    for _ in 0..10_000 {
        let cells = nodes.len() - 1;
        let mut split = vec![false; cells];
        for c in 0..cells.saturating_sub(1) {
            let (d0, d1) = (nodes[c + 1] - nodes[c], nodes[c + 2] - nodes[c + 1]);
            if d0.max(d1) / d0.min(d1) > cap {
                split[if d0 > d1 { c } else { c + 1 }] = true;
            }
        }
        if !split.contains(&true) {
            return Ok(nodes);
        }
        let mut next = Vec::with_capacity(nodes.len() + cells / 4);
        for c in 0..cells {
            next.push(nodes[c]);
            if split[c] {
                next.push(0.5 * (nodes[c] + nodes[c + 1]));
            }
        }
        next.push(nodes[cells]);
        nodes = next;
    }
    Err(GridError::Grading { ratio: cap, at: lo })
}

pub fn build_grid(
    cs: &CrossSection<f64>,
    res: &ResolutionSpec,
    pml: &PmlSpec,
    wavelength: f64,
    layout: ZLayout,
) -> Result<Grid, GridError> {
    res.validate()?;
    pml.validate()?;
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(GridError::Wavelength(wavelength));
    }
    let frame = cs.layer_frame();
    let base = res.base_cells_per_wavelength as f64;
    let n_core = cs.media().core.index();
    let n_ext = cs.media().exterior.index();
    let core_rim = cs.core_rim();
    let outer_rim = cs.outer_rim();
    let t = cs.coating_thickness();

    let rho_min = match res.inner_depth {
        Some(d) => core_rim - d,
        None => (0.25 * core_rim).max(core_rim - 3.5 * wavelength / n_core),
    };
    if rho_min <= 0.0 {
        return Err(GridError::InnerWall(rho_min));
    }
    // The radial PML must sit beyond the outer turning point m/(k n_ext).
    let turning = outer_rim * n_core / n_ext + 0.25 * wavelength;
    let rho_max = (outer_rim + res.window_padding).max(turning);

    let coat_h = if t > 0.0 { t / res.min_cells_across_coating as f64 } else { f64::INFINITY };
    let h_rho = |rho: f64| {
        let d = match frame.center {
            LayerCenter::Point { rho: rc, .. } => (rho - rc).abs(),
            LayerCenter::Axis => rho,
        };
        let h = wavelength / (base * line_index(&frame, d, cs));
        if rho > core_rim && rho < outer_rim {
            h.min(coat_h)
        } else {
            h
        }
    };
    let h_z = |z: f64| {
        let d = match frame.center {
            LayerCenter::Point { rho: rc, z: zc } => {
                let dx = (rho_min - rc).max(rc - rho_max).max(0.0);
                dx.hypot(z - zc)
            }
            LayerCenter::Axis => rho_min,
        };
        wavelength / (base * line_index(&frame, d, cs))
    };

    let slope = 0.25;
    let mut rho_fixed = vec![rho_min, core_rim];
    if t > 0.0 {
        rho_fixed.push(outer_rim);
    }
    rho_fixed.push(rho_max);
    let mut rho_edges = graded_nodes(&rho_fixed, &h_rho, slope, res.max_grading)?;
    let last = rho_edges[rho_edges.len() - 1] - rho_edges[rho_edges.len() - 2];
    for k in 1..=pml.thickness_cells {
        rho_edges.push(rho_max + last * k as f64);
    }
    let rho_pml = PmlLayer::upper(rho_max, *rho_edges.last().unwrap(), *pml);
    let rho_stretch = AxisStretch { layers: vec![rho_pml] };

    let (z_edges, z_window, z_stretch) = match layout {
        ZLayout::Periodic => {
            let h = wavelength / (base * cs.max_index());
            (vec![0.0, h], (0.0, h), AxisStretch::default())
        }
        ZLayout::Full | ZLayout::UpperHalf => {
            let m_est = 2.0 * std::f64::consts::PI * outer_rim * n_core / wavelength;
            let cap = 3.0 * outer_rim / m_est.max(1.0).sqrt();
            let half = cs.half_height().unwrap_or(cap).min(cap);
            let z_top = half + res.window_padding;
            let upper = graded_nodes(&[0.0, z_top], &h_z, slope, res.max_grading)?;
            let dz_last = upper[upper.len() - 1] - upper[upper.len() - 2];
            let mut up = upper.clone();
            for k in 1..=pml.thickness_cells {
                up.push(z_top + dz_last * k as f64);
            }
            let top_layer = PmlLayer::upper(z_top, *up.last().unwrap(), *pml);
            if layout == ZLayout::UpperHalf {
                (up, (0.0, z_top), AxisStretch { layers: vec![top_layer] })
            } else {
                let mut full: Vec<f64> = up.iter().skip(1).rev().map(|z| -z).collect();
                full.extend_from_slice(&up);
                let bottom = PmlLayer::lower(-z_top, -*up.last().unwrap(), *pml);
                (full, (-z_top, z_top), AxisStretch { layers: vec![bottom, top_layer] })
            }
        }
    };

    let cells = (rho_edges.len() - 1) * (z_edges.len() - 1);
    if cells > res.max_cells {
        let constraint = if t > 0.0 {
            format!("{} cells across a {:.3e} m coating", res.min_cells_across_coating, t)
        } else {
            format!("{} cells per wavelength", res.base_cells_per_wavelength)
        };
        return Err(GridError::TooManyCells { cells, max: res.max_cells, constraint });
    }

    let nr = rho_edges.len() - 1;
    let nz = z_edges.len() - 1;
    let mut cell_medium = Vec::with_capacity(nr * nz);
    for j in 0..nz {
        let zc = 0.5 * (z_edges[j] + z_edges[j + 1]);
        for i in 0..nr {
            let rc = 0.5 * (rho_edges[i] + rho_edges[i + 1]);
            cell_medium.push(cs.medium_at(rc, zc));
        }
    }
    let tilde = |s: &AxisStretch, xs: &[f64]| xs.iter().map(|&x| s.complex_coordinate(x)).collect::<Vec<_>>();
    let centers = |xs: &[f64]| xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect::<Vec<_>>();
    let rho_tilde_edges = tilde(&rho_stretch, &rho_edges);
    let rho_tilde_centers = tilde(&rho_stretch, &centers(&rho_edges));
    let z_tilde_edges = tilde(&z_stretch, &z_edges);
    let z_tilde_centers = tilde(&z_stretch, &centers(&z_edges));

    Ok(Grid {
        rho_edges,
        z_edges,
        cell_medium,
        layout,
        rho_window: (rho_min, rho_max),
        z_window,
        rho_stretch,
        z_stretch,
        rho_tilde_edges,
        rho_tilde_centers,
        z_tilde_edges,
        z_tilde_centers,
        pml: *pml,
        wavelength,
    })
}

/// Free-function form of [`Grid::stretch_factor`].
pub fn stretch_factor(x: f64, axis: Axis, grid: &Grid) -> C64 {
    grid.stretch_factor(x, axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Media;

    const UM: f64 = 1e-6;
    const NM: f64 = 1e-9;

    fn toroid(t: f64) -> CrossSection<f64> {
        CrossSection::coated_toroid(4.0 * UM, 1.0 * UM, t, Media::silica_su8_air()).unwrap()
    }

    fn res(min_coat: usize) -> ResolutionSpec {
        ResolutionSpec { min_cells_across_coating: min_coat, ..ResolutionSpec::default() }
    }

    #[test]
    fn coating_is_resolved_along_the_equator() {
        let g = build_grid(&toroid(150.0 * NM), &res(4), &PmlSpec::default(), 637.0 * NM, ZLayout::UpperHalf).unwrap();
        let inside = (0..g.nr())
            .filter(|&i| {
                let r = g.rho_center(i);
                r > 5.0 * UM && r < 5.15 * UM
            })
            .count();
        assert!(inside >= 4, "only {inside} coating cells");
        let j0 = 0;
        let coating_cells = (0..g.nr()).filter(|&i| g.cell_medium(i, j0) == MediumId::Coating).count();
        assert_eq!(coating_cells, inside);
        // Interfaces are grid lines.
        assert!(g.rho_edges().iter().any(|&e| (e - 5.0 * UM).abs() < 1e-15));
        assert!(g.rho_edges().iter().any(|&e| (e - 5.15 * UM).abs() < 1e-15));
    }

    #[test]
    fn uncoated_grid_has_no_coating_cells() {
        let g = build_grid(&toroid(0.0), &res(4), &PmlSpec::default(), 637.0 * NM, ZLayout::Full).unwrap();
        assert!(g.cell_media().iter().all(|&m| m != MediumId::Coating));
        assert!(g.cell_media().contains(&MediumId::Core));
        assert!(g.cell_media().contains(&MediumId::Exterior));
    }

    #[test]
    fn spacing_obeys_resolution_and_grading() {
        for t in [0.0, 5.0 * NM, 150.0 * NM, 350.0 * NM] {
            let r = res(4);
            let g = build_grid(&toroid(t), &r, &PmlSpec::default(), 637.0 * NM, ZLayout::UpperHalf).unwrap();
            assert!(g.max_grading_ratio() <= 1.5 + 1e-9, "grading {}", g.max_grading_ratio());
            let hmax = 637.0 * NM / (16.0 * 1.0);
            for i in 0..g.nr() {
                if g.in_window(g.rho_center(i), 0.0) {
                    assert!(g.drho(i) <= hmax * (1.0 + 1e-9));
                }
            }
            let hcore = 637.0 * NM / (16.0 * 1.59);
            for i in 0..g.nr() {
                let rc = g.rho_center(i);
                if rc < 5.0 * UM && t > 0.0 {
                    assert!(g.drho(i) <= hcore * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn cell_media_match_geometry_at_centers() {
        let cs = toroid(100.0 * NM);
        let g = build_grid(&cs, &res(4), &PmlSpec::default(), 637.0 * NM, ZLayout::Full).unwrap();
        for j in 0..g.nz() {
            for i in 0..g.nr() {
                assert_eq!(g.cell_medium(i, j), cs.medium_at(g.rho_center(i), g.z_center(j)));
            }
        }
    }

    #[test]
    fn doubling_resolution_halves_window_spacing() {
        let cs = toroid(150.0 * NM);
        let coarse = build_grid(&cs, &res(4), &PmlSpec::default(), 637.0 * NM, ZLayout::UpperHalf).unwrap();
        let fine = build_grid(&cs, &res(4).refined(2.0), &PmlSpec::default(), 637.0 * NM, ZLayout::UpperHalf).unwrap();
        let (a, b) = coarse.rho_window();
        for k in 0..200 {
            let x = a + (b - a) * (k as f64 + 0.5) / 200.0;
            let (hc, hf) = (coarse.spacing_at(x, Axis::Rho), fine.spacing_at(x, Axis::Rho));
            // Grading rounding allows up to one grading step of slack.
            assert!(hf <= 0.5 * hc * 1.5, "x={x:e} coarse={hc:e} fine={hf:e}");
        }
    }

    #[test]
    fn window_has_identity_stretch_and_pml_reaches_target() {
        let pml = PmlSpec { thickness_cells: 10, profile_order: 2, max_stretch_imag: 5.0 };
        let g = build_grid(&toroid(100.0 * NM), &res(4), &pml, 637.0 * NM, ZLayout::Full).unwrap();
        let (a, b) = g.rho_window();
        assert_eq!(g.stretch_factor(0.5 * (a + b), Axis::Rho), C64::new(1.0, 0.0));
        let wall = *g.rho_edges().last().unwrap();
        assert!((g.stretch_factor(wall, Axis::Rho) - C64::new(1.0, -5.0)).norm() < 1e-12);
        let mid = 0.5 * (b + wall);
        assert!((stretch_factor(mid, Axis::Rho, &g) - C64::new(1.0, -1.25)).norm() < 1e-9);
        let top = *g.z_edges().last().unwrap();
        assert!((g.stretch_factor(-top, Axis::Z) - C64::new(1.0, -5.0)).norm() < 1e-12);
        assert_eq!(g.stretch_factor(0.0, Axis::Z), C64::new(1.0, 0.0));
    }

    #[test]
    fn thin_coating_beyond_cell_budget_is_reported() {
        let r = ResolutionSpec { max_cells: 5_000, ..res(4) };
        let err = build_grid(&toroid(1.0 * NM), &r, &PmlSpec::default(), 637.0 * NM, ZLayout::Full).unwrap_err();
        assert!(matches!(err, GridError::TooManyCells { .. }), "{err}");
        assert!(err.to_string().contains("coating"));
    }

    #[test]
    fn periodic_layout_is_one_cell_tall() {
        let cs = CrossSection::cylinder(3.0 * UM, crate::Medium::silica(), crate::Medium::air()).unwrap();
        let g = build_grid(&cs, &res(4), &PmlSpec::default(), 637.0 * NM, ZLayout::Periodic).unwrap();
        assert_eq!(g.nz(), 1);
        assert_eq!(g.stretch_factor(0.0, Axis::Z), C64::new(1.0, 0.0));
    }

    #[test]
    fn dump_lists_every_cell() {
        let g = build_grid(&toroid(150.0 * NM), &res(4), &PmlSpec::default(), 637.0 * NM, ZLayout::UpperHalf).unwrap();
        let mut buf = Vec::new();
        g.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, g.cell_count());
        assert!(text.contains("coating"));
    }
}
