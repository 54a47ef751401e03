//! Polynomially graded perfectly matched layers as complex coordinate
//! stretching.
//!
//! Inside a layer, derivatives are multiplied by `s(x) = 1 - i·σ·d^p`
//! (`d ∈ [0, 1]` the normalized depth), i.e. `∂/∂x̃ = s·∂/∂x` and the
//! stretched coordinate is `x̃ = ∫ dx / s`. Under `exp(-iωt)` an outgoing
//! wave `exp(i k x̃)` then decays into the layer.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmlError {
    #[error("PML needs at least 4 cells, got {0}")]
    TooThin(usize),
    #[error("PML profile order must be at least 1")]
    ZeroOrder,
    #[error("PML peak stretch must be positive and finite, got {0}")]
    BadStretch(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PmlSpec {
    pub thickness_cells: usize,
    pub profile_order: u32,
    pub max_stretch_imag: f64,
}

impl Default for PmlSpec {
    fn default() -> Self {
        Self { thickness_cells: 24, profile_order: 2, max_stretch_imag: 4.0 }
    }
}

impl PmlSpec {
    pub fn validate(&self) -> Result<(), PmlError> {
        if self.thickness_cells < 4 {
            return Err(PmlError::TooThin(self.thickness_cells));
        }
        if self.profile_order == 0 {
            return Err(PmlError::ZeroOrder);
        }
        if !(self.max_stretch_imag > 0.0 && self.max_stretch_imag.is_finite()) {
            return Err(PmlError::BadStretch(self.max_stretch_imag));
        }
        Ok(())
    }

    /// Derivative multiplier at normalized depth `d` (clamped to `[0, 1]`).
    pub fn stretch_at_depth(&self, d: f64) -> C64 {
        let d = d.clamp(0.0, 1.0);
        C64::new(1.0, -self.max_stretch_imag * d.powi(self.profile_order as i32))
    }
}

/// Which way a layer extends from the physical window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Layer occupies `[start, end]` with `end > start`.
    Upper,
    /// Layer occupies `[end, start]` with `end < start`.
    Lower,
}

/// One absorbing layer along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlLayer {
    /// Coordinate where the layer begins (the window boundary).
    pub start: f64,
    /// Coordinate of the terminating wall.
    pub end: f64,
    pub side: Side,
    pub spec: PmlSpec,
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl PmlLayer {
    pub fn upper(start: f64, end: f64, spec: PmlSpec) -> Self {
        Self { start, end, side: Side::Upper, spec }
    }

    pub fn lower(start: f64, end: f64, spec: PmlSpec) -> Self {
        Self { start, end, side: Side::Lower, spec }
    }

    pub fn thickness(&self) -> f64 {
        (self.end - self.start).abs()
    }

    /// Normalized depth of `x`; 0 at or before the window boundary.
    pub fn depth(&self, x: f64) -> f64 {
        let raw = match self.side {
            Side::Upper => (x - self.start) / self.thickness(),
            Side::Lower => (self.start - x) / self.thickness(),
        };
        raw.clamp(0.0, 1.0)
    }

    pub fn stretch(&self, x: f64) -> C64 {
        self.spec.stretch_at_depth(self.depth(x))
    }

    /// Offset `x̃ - x` accumulated between the window boundary and `x`.
    pub fn coordinate_offset(&self, x: f64) -> C64 {
        let d = self.depth(x);
        if d == 0.0 {
            return C64::new(0.0, 0.0);
        }
        // ∫_0^d (1/s(u) - 1) du, scaled by the thickness, split for accuracy.
        let pieces = 16;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..pieces {
            let a = d * k as f64 / pieces as f64;
            let b = d * (k + 1) as f64 / pieces as f64;
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (node, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let u = mid + half * node;
                acc += (1.0 / self.spec.stretch_at_depth(u) - 1.0) * (w * half);
            }
        }
        let signed = acc * self.thickness();
        match self.side {
            Side::Upper => signed,
            Side::Lower => -signed,
        }
    }
}

/// All layers acting on one axis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AxisStretch {
    pub layers: Vec<PmlLayer>,
}

impl AxisStretch {
    pub fn stretch(&self, x: f64) -> C64 {
        self.layers
            .iter()
            .find(|l| l.depth(x) > 0.0)
            .map(|l| l.stretch(x))
            .unwrap_or(C64::new(1.0, 0.0))
    }

    pub fn complex_coordinate(&self, x: f64) -> C64 {
        let offset: C64 = self.layers.iter().map(|l| l.coordinate_offset(x)).sum();
        C64::new(x, 0.0) + offset
    }

    pub fn in_layer(&self, x: f64) -> bool {
        self.layers.iter().any(|l| l.depth(x) > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec5() -> PmlSpec {
        PmlSpec { thickness_cells: 10, profile_order: 2, max_stretch_imag: 5.0 }
    }

    #[test]
    fn stretch_values() {
        let l = PmlLayer::upper(1.0, 2.0, spec5());
        assert_eq!(l.stretch(0.5), C64::new(1.0, 0.0));
        assert_eq!(l.stretch(2.0), C64::new(1.0, -5.0));
        assert!((l.stretch(1.5) - C64::new(1.0, -1.25)).norm() < 1e-15);
    }

    #[test]
    fn lower_layer_mirrors_upper() {
        let up = PmlLayer::upper(1.0, 2.0, spec5());
        let lo = PmlLayer::lower(-1.0, -2.0, spec5());
        assert_eq!(up.stretch(1.3), lo.stretch(-1.3));
        let a = up.coordinate_offset(1.7);
        let b = lo.coordinate_offset(-1.7);
        assert!((a + b).norm() < 1e-14);
    }

    #[test]
    fn continuous_at_window_boundary() {
        let l = PmlLayer::upper(1.0, 2.0, spec5());
        assert!((l.stretch(1.0 + 1e-9) - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(l.coordinate_offset(1.0 + 1e-9).norm() < 1e-15);
    }

    #[test]
    fn stretched_coordinate_gains_positive_imaginary_part() {
        let l = PmlLayer::upper(0.0, 1.0, spec5());
        let mut last = 0.0;
        for k in 1..=10 {
            let im = l.coordinate_offset(k as f64 / 10.0).im;
            assert!(im > last);
            last = im;
        }
    }

    #[test]
    fn offset_matches_fine_trapezoid() {
        let l = PmlLayer::upper(0.0, 1.0, spec5());
        let n = 200_000;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            let a = k as f64 / n as f64 * 0.8;
            let b = (k + 1) as f64 / n as f64 * 0.8;
            let fa = 1.0 / l.stretch(a) - 1.0;
            let fb = 1.0 / l.stretch(b) - 1.0;
            acc += (fa + fb) * (0.5 * (b - a));
        }
        assert!((l.coordinate_offset(0.8) - acc).norm() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(PmlSpec { thickness_cells: 3, ..PmlSpec::default() }.validate().is_err());
        assert!(PmlSpec { profile_order: 0, ..PmlSpec::default() }.validate().is_err());
        assert!(PmlSpec { max_stretch_imag: 0.0, ..PmlSpec::default() }.validate().is_err());
        assert!(PmlSpec::default().validate().is_ok());
    }
}
