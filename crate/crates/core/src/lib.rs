//! Whispering-gallery eigenmodes of coated axisymmetric microcavities and
//! the cavity-QED figures of merit derived from them.

pub mod arnoldi;
pub mod bessel;
pub mod config;
pub mod fundamental;
pub mod geometry;
pub mod grid;
pub mod materials;
pub mod mode;
pub mod operator;
pub mod oracle;
pub mod pml;
pub mod qed;
pub mod runner;
pub mod scalar;
pub mod sparse;
pub mod subpixel;

pub use geometry::{CrossSection as GenericCrossSection, GeometryError, Media as GenericMedia, MediumId, Shape as GenericShape};
pub use grid::{build_grid, Axis, Grid, GridError, ResolutionSpec, ZLayout};
pub use materials::{ComplexIndex as GenericComplexIndex, MaterialError, Medium as GenericMedium};
pub use pml::{PmlError, PmlSpec};
pub use scalar::{constants, Real};

pub type Medium = materials::Medium<f64>;
pub type ComplexIndex = materials::ComplexIndex<f64>;
pub type CrossSection = geometry::CrossSection<f64>;
pub type Media = geometry::Media<f64>;
pub type Shape = geometry::Shape<f64>;
