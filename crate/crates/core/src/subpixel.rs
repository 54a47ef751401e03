//! Sub-cell material averaging.
//!
//! Each field sample owns a small rectangle of the (ρ, z) plane. When a
//! curved interface crosses that rectangle, the interface is replaced by its
//! tangent line and the rectangle is clipped against it, giving fill
//! fractions accurate to second order in the cell size. The permittivity
//! seen by a field component is then the anisotropic mix: harmonic mean
//! along the interface normal, arithmetic mean along the tangent.

use num_complex::Complex64 as C64;

use crate::geometry::{LayerCenter, LayerFrame, MediumId};

/// Axis-aligned rectangle `[rho0, rho1] × [z0, z1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub rho0: f64,
    pub rho1: f64,
    pub z0: f64,
    pub z1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.rho1 - self.rho0) * (self.z1 - self.z0)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.rho0 + self.rho1), 0.5 * (self.z0 + self.z1))
    }

    fn corners(&self) -> [(f64, f64); 4] {
        [(self.rho0, self.z0), (self.rho1, self.z0), (self.rho1, self.z1), (self.rho0, self.z1)]
    }
}

/// Field direction for choosing the averaging rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rho,
    Phi,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fill {
    /// Area fractions indexed by [`MediumId::index`].
    pub fractions: [f64; 3],
    /// Unit interface normal (ρ, z) at the rectangle.
    pub normal: (f64, f64),
}

impl Fill {
    pub fn fraction(&self, id: MediumId) -> f64 {
        self.fractions[id.index()]
    }

    /// The single medium filling the rectangle, if any.
    pub fn uniform(&self) -> Option<MediumId> {
        MediumId::ALL.into_iter().find(|&id| self.fraction(id) >= 1.0 - 1e-14)
    }
}

/// Fraction of `rect` lying within distance `radius` of the layer center.
fn inside_fraction(frame: &LayerFrame<f64>, radius: f64, rect: &Rect) -> f64 {
    let far = rect.corners().iter().map(|&(r, z)| frame.distance(r, z)).fold(0.0, f64::max);
    if far <= radius {
        return 1.0;
    }
    let near = match frame.center {
        LayerCenter::Point { rho, z } => frame.distance(rho.clamp(rect.rho0, rect.rho1), z.clamp(rect.z0, rect.z1)),
        LayerCenter::Axis => rect.rho0,
    };
    if near >= radius {
        return 0.0;
    }
    let (rc, zc) = rect.center();
    let (nr, nz) = frame.normal(rc, zc);
    // Half plane n·(p − c) ≤ radius, with c the layer center.
    let offset = match frame.center {
        LayerCenter::Point { rho, z } => radius + nr * rho + nz * z,
        LayerCenter::Axis => radius,
    };
    let clipped = clip_half_plane(&rect.corners(), (nr, nz), offset);
    (polygon_area(&clipped) / rect.area()).clamp(0.0, 1.0)
}

/// Sutherland–Hodgman clip of a convex polygon to `n·p ≤ offset`.
fn clip_half_plane(poly: &[(f64, f64)], n: (f64, f64), offset: f64) -> Vec<(f64, f64)> {
    let side = |p: (f64, f64)| n.0 * p.0 + n.1 * p.1 - offset;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let mut twice = 0.0;
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        twice += a.0 * b.1 - b.0 * a.1;
    }
    0.5 * twice.abs()
}

pub fn fill_fractions(frame: &LayerFrame<f64>, rect: &Rect) -> Fill {
    let inner = inside_fraction(frame, frame.inner, rect);
    let outer = if frame.outer > frame.inner { inside_fraction(frame, frame.outer, rect) } else { inner };
    let (rc, zc) = rect.center();
    Fill { fractions: [inner, (outer - inner).max(0.0), 1.0 - outer], normal: frame.normal(rc, zc) }
}

/// Permittivity seen by a field component of direction `dir` in a rectangle
/// with fill `fill`; `eps` is indexed by [`MediumId::index`].
pub fn effective_permittivity(fill: &Fill, eps: &[C64; 3], dir: Direction) -> C64 {
    if let Some(id) = fill.uniform() {
        return eps[id.index()];
    }
    let mut mean = C64::new(0.0, 0.0);
    let mut inv_mean = C64::new(0.0, 0.0);
    for id in MediumId::ALL {
        let w = fill.fraction(id);
        if w > 0.0 {
            mean += eps[id.index()] * w;
            inv_mean += w / eps[id.index()];
        }
    }
    let normal_share = match dir {
        Direction::Rho => fill.normal.0 * fill.normal.0,
        Direction::Z => fill.normal.1 * fill.normal.1,
        Direction::Phi => 0.0,
    };
    normal_share / inv_mean + (1.0 - normal_share) * mean
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_frame(a: f64, t: f64) -> LayerFrame<f64> {
        LayerFrame { center: LayerCenter::Point { rho: 0.0, z: 0.0 }, inner: a, outer: a + t }
    }

    #[test]
    fn straight_interface_through_cell_middle() {
        let frame = LayerFrame { center: LayerCenter::Axis, inner: 1.0, outer: 1.0 };
        let rect = Rect { rho0: 0.9, rho1: 1.1, z0: 0.0, z1: 0.1 };
        let fill = fill_fractions(&frame, &rect);
        assert!((fill.fraction(MediumId::Core) - 0.5).abs() < 1e-14);
        assert!((fill.fraction(MediumId::Exterior) - 0.5).abs() < 1e-14);
        assert_eq!(fill.fraction(MediumId::Coating), 0.0);
    }

    #[test]
    fn fractions_partition_the_cell() {
        let frame = sphere_frame(1.0, 0.03);
        for k in 0..50 {
            let r0 = 0.95 + k as f64 * 0.002;
            let rect = Rect { rho0: r0, rho1: r0 + 0.02, z0: 0.1, z1: 0.12 };
            let f = fill_fractions(&frame, &rect);
            let s: f64 = f.fractions.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(f.fractions.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn clipped_area_converges_to_exact_disc_area() {
        // Tile a quarter disc with small cells; the summed inside area must
        // approach π/4 quadratically in the cell size.
        let frame = sphere_frame(1.0, 0.0);
        let err = |n: usize| {
            let h = 1.2 / n as f64;
            let mut area = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let rect = Rect { rho0: i as f64 * h, rho1: (i + 1) as f64 * h, z0: j as f64 * h, z1: (j + 1) as f64 * h };
                    area += fill_fractions(&frame, &rect).fraction(MediumId::Core) * rect.area();
                }
            }
            (area - std::f64::consts::FRAC_PI_4).abs()
        };
        let (e1, e2) = (err(40), err(80));
        assert!(e1 < 1e-4, "{e1}");
        assert!(e2 < e1 / 3.0, "{e1} {e2}");
    }

    #[test]
    fn averaging_rules() {
        let eps = [C64::new(4.0, 0.0), C64::new(2.0, 0.0), C64::new(1.0, 0.0)];
        let fill = Fill { fractions: [0.5, 0.0, 0.5], normal: (1.0, 0.0) };
        // Normal to the interface: harmonic mean; tangential: arithmetic.
        assert!((effective_permittivity(&fill, &eps, Direction::Rho).re - 1.6).abs() < 1e-14);
        assert!((effective_permittivity(&fill, &eps, Direction::Z).re - 2.5).abs() < 1e-14);
        assert!((effective_permittivity(&fill, &eps, Direction::Phi).re - 2.5).abs() < 1e-14);
        let pure = Fill { fractions: [0.0, 1.0, 0.0], normal: (0.6, 0.8) };
        assert_eq!(effective_permittivity(&pure, &eps, Direction::Rho), eps[1]);
    }
}
