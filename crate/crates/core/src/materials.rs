//! Optical media: a real refractive index plus a bulk loss in dB/cm.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaterialError {
    #[error("medium `{name}`: refractive index {index} is below 1")]
    IndexBelowUnity { name: String, index: f64 },
    #[error("medium `{name}`: bulk loss {loss} dB/cm is negative")]
    NegativeLoss { name: String, loss: f64 },
    #[error("medium `{name}`: non-finite parameter")]
    NonFinite { name: String },
}

/// A named dielectric with wavelength-independent index.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium<T: Real> {
    name: String,
    index: T,
    bulk_loss_db_per_cm: T,
}

impl<T: Real> Medium<T> {
    pub fn new(name: impl Into<String>, index: T, bulk_loss_db_per_cm: T) -> Result<Self, MaterialError> {
        let name = name.into();
        if !index.is_finite() || !bulk_loss_db_per_cm.is_finite() {
            return Err(MaterialError::NonFinite { name });
        }
        if index < T::one() {
            return Err(MaterialError::IndexBelowUnity { name, index: index.as_f64() });
        }
        if bulk_loss_db_per_cm < T::zero() {
            return Err(MaterialError::NegativeLoss { name, loss: bulk_loss_db_per_cm.as_f64() });
        }
        Ok(Self { name, index, bulk_loss_db_per_cm })
    }

    /// Thermally grown / reflowed silica at 637 nm.
    pub fn silica() -> Self {
        Self::new("silica", T::lit(1.4564), T::lit(1e-5)).expect("valid preset")
    }

    /// SU-8 photoresist at 637 nm.
    pub fn su8() -> Self {
        Self::new("SU-8", T::lit(1.59), T::lit(0.01)).expect("valid preset")
    }

    pub fn air() -> Self {
        Self::new("air", T::one(), T::zero()).expect("valid preset")
    }

    /// PMMA (n ≈ 1.49); its loss depends on the grade, so it is caller-supplied.
    pub fn pmma(bulk_loss_db_per_cm: T) -> Result<Self, MaterialError> {
        Self::new("PMMA", T::lit(1.49), bulk_loss_db_per_cm)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn index(&self) -> T {
        self.index
    }

    pub fn bulk_loss_db_per_cm(&self) -> T {
        self.bulk_loss_db_per_cm
    }

    pub fn is_lossless(&self) -> bool {
        self.bulk_loss_db_per_cm == T::zero()
    }

    /// Power attenuation coefficient in 1/m.
    pub fn attenuation_per_m(&self) -> T {
        // dB/cm -> dB/m -> nepers (power): x * 100 * ln(10) / 10
        self.bulk_loss_db_per_cm * T::lit(100.0) * T::LN_10() / T::lit(10.0)
    }

    /// Complex refractive index at `wavelength` (m), loss as a positive
    /// imaginary part under `exp(-iωt)`.
    pub fn complex_index(&self, wavelength: T) -> ComplexIndex<T> {
        let four_pi = T::lit(4.0) * T::PI();
        ComplexIndex { re: self.index, im: self.attenuation_per_m() * wavelength / four_pi }
    }
}

/// `re + i·im`, with `im ≥ 0` meaning absorption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexIndex<T: Real> {
    pub re: T,
    pub im: T,
}

impl<T: Real> ComplexIndex<T> {
    pub fn lossless(re: T) -> Self {
        Self { re, im: T::zero() }
    }

    pub fn as_complex(&self) -> Complex<T> {
        Complex::new(self.re, self.im)
    }

    /// Relative permittivity `(re + i·im)²`.
    pub fn permittivity(&self) -> Complex<T> {
        let n = self.as_complex();
        n * n
    }
}

/// Free-function form of [`Medium::complex_index`].
pub fn complex_index<T: Real>(medium: &Medium<T>, wavelength: T) -> ComplexIndex<T> {
    medium.complex_index(wavelength)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn su8_imaginary_index_at_637nm() {
        // 0.01 dB/cm = 0.2302585 1/m; im = α λ / 4π
        let im = Medium::<f64>::su8().complex_index(637e-9).im;
        assert_relative_eq!(im, 1.1672e-8, max_relative = 1e-3);
        assert_relative_eq!(im, 0.01 * 100.0 * 10f64.ln() / 10.0 * 637e-9 / (4.0 * std::f64::consts::PI), max_relative = 1e-14);
    }

    #[test]
    fn silica_imaginary_index_is_thousandfold_smaller() {
        let im = Medium::<f64>::silica().complex_index(637e-9).im;
        assert_relative_eq!(im, 1.1672e-11, max_relative = 1e-3);
    }

    #[test]
    fn air_is_lossless_at_any_wavelength() {
        for lam in [1e-7, 637e-9, 1.55e-6] {
            let n = Medium::<f64>::air().complex_index(lam);
            assert_eq!(n.im, 0.0);
            assert_eq!(n.re, 1.0);
        }
    }

    #[test]
    fn rejects_sub_unity_index_and_negative_loss() {
        assert!(matches!(Medium::<f64>::new("x", 0.9, 0.0), Err(MaterialError::IndexBelowUnity { .. })));
        assert!(matches!(Medium::<f64>::new("x", 1.2, -1.0), Err(MaterialError::NegativeLoss { .. })));
    }

    #[test]
    fn single_precision_matches() {
        let im = Medium::<f32>::su8().complex_index(637e-9).im;
        assert!((im as f64 - 1.1672e-8).abs() < 1e-11);
    }

    #[test]
    fn pmma_preset() {
        let m = Medium::<f64>::pmma(0.001).unwrap();
        assert_eq!(m.index(), 1.49);
    }

    proptest::proptest! {
        #[test]
        fn imaginary_index_is_linear_in_loss(loss in 0.0f64..10.0, lam in 3e-7f64..2e-6) {
            let a = Medium::new("a", 1.5, loss).unwrap().complex_index(lam).im;
            let b = Medium::new("b", 1.5, 2.0 * loss).unwrap().complex_index(lam).im;
            proptest::prop_assert!((b - 2.0 * a).abs() <= 1e-15 * b.abs().max(1e-300));
        }
    }
}
