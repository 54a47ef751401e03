//! Analytic resonances of layered spheres and uniform cylinders.
//!
//! The radial wavefunction is carried through each shell as the pair
//! `(u, p·n·u′)`, with `p = 1` for TE and `1/n²` for TM, both continuous
//! across an index step. Outside, the wave must be purely outgoing; the
//! mismatch between the carried pair and the outgoing Hankel pair is the
//! characteristic function whose complex zeros are the resonances.

use num_complex::Complex;
use thiserror::Error;

use crate::bessel::{cylindrical_bessel, riccati, BesselError};
use crate::geometry::{CrossSection, Shape};
use crate::mode::Polarization;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error("layer radii must be positive and non-decreasing")]
    Radii,
    #[error("need one more index than radii, got {indices} indices for {radii} radii")]
    Indices { radii: usize, indices: usize },
    #[error("wavenumber must be non-zero")]
    ZeroFrequency,
    #[error("empty or inverted wavelength bracket")]
    Bracket,
    #[error("no resonance in the bracket")]
    NoMinimum,
    #[error("root refinement stalled at relative step {step:e}")]
    NoConvergence { step: f64 },
    #[error("no analytic model for a {0}")]
    Unsupported(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialKind {
    Sphere,
    Cylinder,
}

/// Concentric layers around the origin (sphere) or the axis (cylinder).
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredRadialProblem<T: Real> {
    pub kind: RadialKind,
    /// Exact TE (`E` tangential to every interface) or TM.
    pub polarization: Polarization,
    /// Angular order `l` (sphere) or azimuthal order `m` (cylinder).
    pub order: usize,
    pub radii: Vec<T>,
    /// Core, shells..., exterior.
    pub indices: Vec<Complex<T>>,
}

impl<T: Real> LayeredRadialProblem<T> {
    pub fn new(
        kind: RadialKind,
        polarization: Polarization,
        order: usize,
        radii: Vec<T>,
        indices: Vec<Complex<T>>,
    ) -> Result<Self, OracleError> {
        if radii.is_empty() || radii[0] <= T::zero() || radii.windows(2).any(|w| w[1] < w[0]) {
            return Err(OracleError::Radii);
        }
        if indices.len() != radii.len() + 1 {
            return Err(OracleError::Indices { radii: radii.len(), indices: indices.len() });
        }
        Ok(Self { kind, polarization, order, radii, indices })
    }

    /// The lossless layer stack of a coated sphere or a cylinder.
    pub fn from_cross_section(cs: &CrossSection<T>, polarization: Polarization, order: usize) -> Result<Self, OracleError> {
        let real = |n: T| Complex::new(n, T::zero());
        let media = cs.media();
        match *cs.shape() {
            Shape::CoatedSphere { radius, coating } => Self::new(
                RadialKind::Sphere,
                polarization,
                order,
                vec![radius, radius + coating],
                vec![real(media.core.index()), real(media.coating.index()), real(media.exterior.index())],
            ),
            Shape::Cylinder { radius } => Self::new(
                RadialKind::Cylinder,
                polarization,
                order,
                vec![radius],
                vec![real(media.core.index()), real(media.exterior.index())],
            ),
            Shape::CoatedToroid { .. } => Err(OracleError::Unsupported("toroid")),
        }
    }

    fn weight(&self, n: Complex<T>) -> Complex<T> {
        match self.polarization {
            Polarization::QuasiTe => n,
            Polarization::QuasiTm => Complex::new(T::one(), T::zero()) / n,
        }
    }

    /// Regular and singular radial solutions with derivatives, and their Wronskian.
    fn basis(&self, x: Complex<T>) -> Result<([Complex<T>; 4], Complex<T>), OracleError> {
        Ok(match self.kind {
            RadialKind::Sphere => {
                let r = riccati(self.order, x)?;
                ([r.psi, r.dpsi, r.chi, r.dchi], Complex::new(T::one(), T::zero()))
            }
            RadialKind::Cylinder => {
                let b = cylindrical_bessel(self.order, x)?;
                ([b.j, b.dj, b.y, b.dy], Complex::new(T::lit(2.0), T::zero()) / (x * T::PI()))
            }
        })
    }

    /// Carried pair at the outermost radius and the outgoing pair there.
    fn pairs(&self, k: Complex<T>) -> Result<([Complex<T>; 2], [Complex<T>; 2]), OracleError> {
        if k.norm() == T::zero() {
            return Err(OracleError::ZeroFrequency);
        }
        let n0 = self.indices[0];
        let (f, _) = self.basis(n0 * k * self.radii[0])?;
        let mut u = f[0];
        let mut v = self.weight(n0) * f[1];
        for s in 1..self.radii.len() {
            let (r0, r1) = (self.radii[s - 1], self.radii[s]);
            if r1 == r0 {
                continue;
            }
            let n = self.indices[s];
            let w = self.weight(n);
            let (a, wr) = self.basis(n * k * r0)?;
            let (b, _) = self.basis(n * k * r1)?;
            let dv = v / w;
            let reg = (u * a[3] - dv * a[2]) / wr;
            let sing = (dv * a[0] - u * a[1]) / wr;
            u = reg * b[0] + sing * b[2];
            v = w * (reg * b[1] + sing * b[3]);
        }
        let n = *self.indices.last().unwrap();
        let (e, _) = self.basis(n * k * *self.radii.last().unwrap())?;
        let i = Complex::<T>::i();
        let h = e[0] + i * e[2];
        let dh = self.weight(n) * (e[1] + i * e[3]);
        Ok(([u, v], [h, dh]))
    }

    /// Matching determinant `v·h − u·h′` divided by the sum of the
    /// magnitudes of its two terms, so it lies in `[0, 1]`.
    pub fn characteristic(&self, k: Complex<T>) -> Result<Complex<T>, OracleError> {
        let ([u, v], [h, dh]) = self.pairs(k)?;
        let (a, b) = (v * h, u * dh);
        let scale = a.norm() + b.norm();
        if scale == T::zero() {
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        Ok((a - b) / scale)
    }

    /// Difference of the two admittances `v/u − h′/h`, analytic near a root.
    fn mismatch(&self, k: Complex<T>) -> Result<Complex<T>, OracleError> {
        let ([u, v], [h, dh]) = self.pairs(k)?;
        Ok(v / u - dh / h)
    }
}

/// Free-space wavenumber `k` of a resonance (`Im k < 0` for decay) and
/// the derived wavelength and radiation Q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance<T: Real> {
    pub k: Complex<T>,
    pub wavelength: T,
    pub quality: T,
}

impl<T: Real> Resonance<T> {
    fn from_k(k: Complex<T>) -> Self {
        let two_pi = T::lit(2.0) * T::PI();
        Self { k, wavelength: two_pi / k.re, quality: k.re / (T::lit(2.0) * k.im.abs()) }
    }
}

/// Secant iteration on the admittance mismatch from a real starting point.
fn refine<T: Real>(prob: &LayeredRadialProblem<T>, start: T) -> Result<Complex<T>, OracleError> {
    let mut k0 = Complex::new(start, T::zero());
    let mut k1 = Complex::new(start * (T::one() + T::lit(1e-7)), -start * T::lit(1e-7));
    let mut f0 = prob.mismatch(k0)?;
    let mut f1 = prob.mismatch(k1)?;
    let tiny = T::epsilon() * T::lit(4.0);
    let mut step = T::infinity();
    for _ in 0..100 {
        let denom = f1 - f0;
        if denom.norm() == T::zero() {
            break;
        }
        let k2 = k1 - f1 * (k1 - k0) / denom;
        step = (k2 - k1).norm() / k2.norm();
        k0 = k1;
        f0 = f1;
        k1 = k2;
        if step <= tiny {
            break;
        }
        f1 = prob.mismatch(k1)?;
    }
    if step <= T::lit(1e-10).max(T::epsilon() * T::lit(1e3)) && k1.re.is_finite() && k1.im.is_finite() {
        Ok(k1)
    } else {
        Err(OracleError::NoConvergence { step: step.as_f64() })
    }
}

/// All resonances whose real-axis minimum of `|characteristic|` lies inside
/// the wavelength bracket, scanned on `samples` points uniform in `k`.
pub fn resonances<T: Real>(prob: &LayeredRadialProblem<T>, bracket: (T, T), samples: usize) -> Result<Vec<Resonance<T>>, OracleError> {
    let (lo, hi) = bracket;
    if !(lo > T::zero() && hi > lo) || samples < 3 {
        return Err(OracleError::Bracket);
    }
    let two_pi = T::lit(2.0) * T::PI();
    let (k_lo, k_hi) = (two_pi / hi, two_pi / lo);
    let step = (k_hi - k_lo) / <T as Real>::from_usize(samples - 1);
    let ks: Vec<T> = (0..samples).map(|s| k_lo + step * <T as Real>::from_usize(s)).collect();
    let values = ks
        .iter()
        .map(|&k| prob.characteristic(Complex::new(k, T::zero())).map(|c| c.norm()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut found: Vec<Resonance<T>> = Vec::new();
    for s in 1..samples - 1 {
        if values[s] <= values[s - 1] && values[s] < values[s + 1] {
            // A shallow spurious dip can send the secant off; skip it.
            let Ok(k) = refine(prob, ks[s]) else { continue };
            let r = Resonance::from_k(k);
            let inside = r.wavelength >= lo && r.wavelength <= hi;
            let duplicate = found.iter().any(|f| (f.k - k).norm() <= T::lit(1e-9) * k.norm());
            if inside && !duplicate {
                found.push(r);
            }
        }
    }
    Ok(found)
}

/// The resonance in the bracket with the deepest real-axis minimum, i.e.
/// the one with the highest Q.
pub fn find_resonance<T: Real>(prob: &LayeredRadialProblem<T>, bracket: (T, T)) -> Result<Resonance<T>, OracleError> {
    find_resonance_with(prob, bracket, 400)
}

pub fn find_resonance_with<T: Real>(prob: &LayeredRadialProblem<T>, bracket: (T, T), samples: usize) -> Result<Resonance<T>, OracleError> {
    resonances(prob, bracket, samples)?
        .into_iter()
        .max_by(|a, b| a.quality.partial_cmp(&b.quality).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or(OracleError::NoMinimum)
}
