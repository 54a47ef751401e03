//! Axisymmetric cavity cross-sections in the (ρ, z) half-plane.
//!
//! Every supported shape is a core disc (or slab, for the cylinder) wrapped
//! in a concentric coating of uniform thickness, so region membership only
//! needs the distance from one reference point or from the symmetry axis.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::Medium;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("coating thickness must be non-negative, got {0}")]
    NegativeCoating(f64),
    #[error("major radius {major} must exceed minor radius {minor}")]
    SelfIntersectingTorus { major: f64, minor: f64 },
}

/// Region label for a point of the cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumId {
    Core,
    Coating,
    Exterior,
}

impl MediumId {
    pub const ALL: [MediumId; 3] = [MediumId::Core, MediumId::Coating, MediumId::Exterior];

    pub fn index(self) -> usize {
        match self {
            MediumId::Core => 0,
            MediumId::Coating => 1,
            MediumId::Exterior => 2,
        }
    }
}

impl fmt::Display for MediumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MediumId::Core => "core",
            MediumId::Coating => "coating",
            MediumId::Exterior => "exterior",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<T: Real> {
    /// Tube of radius `minor_radius` whose centerline circle has radius
    /// `major_radius`; the outer silica rim is at `major_radius + minor_radius`.
    CoatedToroid { major_radius: T, minor_radius: T, coating: T },
    CoatedSphere { radius: T, coating: T },
    /// Infinitely long along z.
    Cylinder { radius: T },
}

impl<T: Real> Shape<T> {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Shape::CoatedToroid { .. } => "coated_toroid",
            Shape::CoatedSphere { .. } => "coated_sphere",
            Shape::Cylinder { .. } => "cylinder",
        }
    }
}

/// Where layer distances are measured from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerCenter<T: Real> {
    /// Euclidean distance to a point of the half-plane.
    Point { rho: T, z: T },
    /// Distance to the symmetry axis (ρ itself).
    Axis,
}

/// Concentric layer description: core for `d ≤ inner`, coating for
/// `inner < d ≤ outer`, exterior beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerFrame<T: Real> {
    pub center: LayerCenter<T>,
    pub inner: T,
    pub outer: T,
}

impl<T: Real> LayerFrame<T> {
    pub fn distance(&self, rho: T, z: T) -> T {
        match self.center {
            LayerCenter::Point { rho: rc, z: zc } => (rho - rc).hypot(z - zc),
            LayerCenter::Axis => rho,
        }
    }

    /// Unit vector (ρ, z) pointing away from the layer center; radial at the center itself.
    pub fn normal(&self, rho: T, z: T) -> (T, T) {
        match self.center {
            LayerCenter::Point { rho: rc, z: zc } => {
                let (dr, dz) = (rho - rc, z - zc);
                let r = dr.hypot(dz);
                if r == T::zero() {
                    (T::one(), T::zero())
                } else {
                    (dr / r, dz / r)
                }
            }
            LayerCenter::Axis => (T::one(), T::zero()),
        }
    }

    pub fn classify_distance(&self, d: T) -> MediumId {
        if d <= self.inner {
            MediumId::Core
        } else if d <= self.outer {
            MediumId::Coating
        } else {
            MediumId::Exterior
        }
    }
}

/// The three media of a coated cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct Media<T: Real> {
    pub core: Medium<T>,
    pub coating: Medium<T>,
    pub exterior: Medium<T>,
}

impl<T: Real> Media<T> {
    /// Silica core, SU-8 coating, air outside.
    pub fn silica_su8_air() -> Self {
        Self { core: Medium::silica(), coating: Medium::su8(), exterior: Medium::air() }
    }

    pub fn get(&self, id: MediumId) -> &Medium<T> {
        match id {
            MediumId::Core => &self.core,
            MediumId::Coating => &self.coating,
            MediumId::Exterior => &self.exterior,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection<T: Real> {
    shape: Shape<T>,
    media: Media<T>,
}

fn positive<T: Real>(what: &'static str, v: T) -> Result<(), GeometryError> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NonPositive { what, value: v.as_f64() })
    }
}

fn coating_ok<T: Real>(t: T) -> Result<(), GeometryError> {
    if t >= T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::NegativeCoating(t.as_f64()))
    }
}

impl<T: Real> CrossSection<T> {
    pub fn new(shape: Shape<T>, media: Media<T>) -> Result<Self, GeometryError> {
        match shape {
            Shape::CoatedToroid { major_radius, minor_radius, coating } => {
                positive("major radius", major_radius)?;
                positive("minor radius", minor_radius)?;
                coating_ok(coating)?;
                if major_radius <= minor_radius {
                    return Err(GeometryError::SelfIntersectingTorus {
                        major: major_radius.as_f64(),
                        minor: minor_radius.as_f64(),
                    });
                }
            }
            Shape::CoatedSphere { radius, coating } => {
                positive("sphere radius", radius)?;
                coating_ok(coating)?;
            }
            Shape::Cylinder { radius } => positive("cylinder radius", radius)?,
        }
        Ok(Self { shape, media })
    }

    pub fn coated_toroid(major: T, minor: T, coating: T, media: Media<T>) -> Result<Self, GeometryError> {
        Self::new(Shape::CoatedToroid { major_radius: major, minor_radius: minor, coating }, media)
    }

    pub fn coated_sphere(radius: T, coating: T, media: Media<T>) -> Result<Self, GeometryError> {
        Self::new(Shape::CoatedSphere { radius, coating }, media)
    }

    /// Uniform cylinder; the coating medium is set to the exterior and never occurs.
    pub fn cylinder(radius: T, core: Medium<T>, exterior: Medium<T>) -> Result<Self, GeometryError> {
        let media = Media { core, coating: exterior.clone(), exterior };
        Self::new(Shape::Cylinder { radius }, media)
    }

    pub fn shape(&self) -> &Shape<T> {
        &self.shape
    }

    pub fn media(&self) -> &Media<T> {
        &self.media
    }

    pub fn medium(&self, id: MediumId) -> &Medium<T> {
        self.media.get(id)
    }

    pub fn coating_thickness(&self) -> T {
        match self.shape {
            Shape::CoatedToroid { coating, .. } | Shape::CoatedSphere { coating, .. } => coating,
            Shape::Cylinder { .. } => T::zero(),
        }
    }

    pub fn layer_frame(&self) -> LayerFrame<T> {
        match self.shape {
            Shape::CoatedToroid { major_radius, minor_radius, coating } => LayerFrame {
                center: LayerCenter::Point { rho: major_radius, z: T::zero() },
                inner: minor_radius,
                outer: minor_radius + coating,
            },
            Shape::CoatedSphere { radius, coating } => LayerFrame {
                center: LayerCenter::Point { rho: T::zero(), z: T::zero() },
                inner: radius,
                outer: radius + coating,
            },
            Shape::Cylinder { radius } => LayerFrame { center: LayerCenter::Axis, inner: radius, outer: radius },
        }
    }

    /// Region containing `(rho, z)`. Points exactly on an interface belong
    /// to the inner region.
    pub fn medium_at(&self, rho: T, z: T) -> MediumId {
        let frame = self.layer_frame();
        frame.classify_distance(frame.distance(rho, z))
    }

    /// Radius of the core's outer equatorial rim.
    pub fn core_rim(&self) -> T {
        match self.shape {
            Shape::CoatedToroid { major_radius, minor_radius, .. } => major_radius + minor_radius,
            Shape::CoatedSphere { radius, .. } | Shape::Cylinder { radius } => radius,
        }
    }

    /// Radius of the outermost equatorial rim (coating included).
    pub fn outer_rim(&self) -> T {
        self.core_rim() + self.coating_thickness()
    }

    /// Half height of the body above the equator; `None` for the infinite cylinder.
    pub fn half_height(&self) -> Option<T> {
        match self.shape {
            Shape::CoatedToroid { minor_radius, coating, .. } => Some(minor_radius + coating),
            Shape::CoatedSphere { radius, coating } => Some(radius + coating),
            Shape::Cylinder { .. } => None,
        }
    }

    /// NV-center site: the equatorial point on the outer core surface.
    pub fn interface_point(&self) -> (T, T) {
        (self.core_rim(), T::zero())
    }

    pub fn max_index(&self) -> T {
        let mut n = self.media.core.index().max(self.media.exterior.index());
        if self.coating_thickness() > T::zero() {
            n = n.max(self.media.coating.index());
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const UM: f64 = 1e-6;
    const NM: f64 = 1e-9;

    fn toroid(t: f64) -> CrossSection<f64> {
        CrossSection::coated_toroid(4.0 * UM, 1.0 * UM, t, Media::silica_su8_air()).unwrap()
    }

    #[test]
    fn toroid_region_membership() {
        let cs = toroid(150.0 * NM);
        assert_eq!(cs.medium_at(4.0 * UM, 0.0), MediumId::Core);
        assert_eq!(cs.medium_at(5.0 * UM + 75.0 * NM, 0.0), MediumId::Coating);
        assert_eq!(cs.medium_at(6.0 * UM, 0.0), MediumId::Exterior);
    }

    #[test]
    fn interface_points_belong_to_inner_region() {
        let cs = CrossSection::coated_sphere(1.0, 0.5, Media::silica_su8_air()).unwrap();
        assert_eq!(cs.medium_at(1.0, 0.0), MediumId::Core);
        assert_eq!(cs.medium_at(1.5, 0.0), MediumId::Coating);
        assert_eq!(cs.medium_at(1.5 + 1e-12, 0.0), MediumId::Exterior);
    }

    #[test]
    fn interface_point_variants() {
        let cs = CrossSection::coated_toroid(4.0 * UM, 1.0 * UM, 100.0 * NM, Media::silica_su8_air()).unwrap();
        let (r, z) = cs.interface_point();
        assert!((r - 5.0 * UM).abs() < 1e-18 && z == 0.0);
        let sph = CrossSection::coated_sphere(5.0 * UM, 100.0 * NM, Media::silica_su8_air()).unwrap();
        assert_eq!(sph.interface_point(), (5.0 * UM, 0.0));
        let small = CrossSection::coated_toroid(2.0 * UM, 1.0 * UM, 150.0 * NM, Media::silica_su8_air()).unwrap();
        assert!((small.interface_point().0 - 3.0 * UM).abs() < 1e-18);
        let cyl = CrossSection::cylinder(1.0, Medium::silica(), Medium::air()).unwrap();
        assert_eq!(cyl.interface_point(), (1.0, 0.0));
    }

    #[test]
    fn invalid_shapes_rejected() {
        let m = Media::<f64>::silica_su8_air;
        assert!(matches!(
            CrossSection::coated_toroid(1.0, 1.0, 0.0, m()),
            Err(GeometryError::SelfIntersectingTorus { .. })
        ));
        assert!(matches!(CrossSection::coated_sphere(1.0, -0.1, m()), Err(GeometryError::NegativeCoating(_))));
        assert!(matches!(CrossSection::coated_sphere(0.0, 0.1, m()), Err(GeometryError::NonPositive { .. })));
    }

    #[test]
    fn uncoated_toroid_has_no_coating_cells() {
        let cs = toroid(0.0);
        for i in 0..200 {
            for j in 0..100 {
                let p = (3.0 * UM + i as f64 * 20.0 * NM, j as f64 * 20.0 * NM);
                assert_ne!(cs.medium_at(p.0, p.1), MediumId::Coating);
            }
        }
    }

    #[test]
    fn f32_geometry() {
        let cs = CrossSection::<f32>::coated_toroid(4e-6, 1e-6, 150e-9, Media::silica_su8_air()).unwrap();
        assert_eq!(cs.medium_at(5.075e-6, 0.0), MediumId::Coating);
    }

    proptest! {
        #[test]
        fn thicker_coating_only_grows_the_coated_body(
            t1 in 0.0f64..300e-9, dt in 1e-10f64..200e-9,
            rho in 2.5e-6f64..6.0e-6, z in -1.6e-6f64..1.6e-6,
        ) {
            let thin = toroid(t1);
            let thick = toroid(t1 + dt);
            if thin.medium_at(rho, z) == MediumId::Coating {
                prop_assert_ne!(thick.medium_at(rho, z), MediumId::Exterior);
            }
            if thin.medium_at(rho, z) == MediumId::Core {
                prop_assert_eq!(thick.medium_at(rho, z), MediumId::Core);
            }
        }
    }
}
