//! Spherical and cylindrical Bessel functions of complex argument.
//!
//! First-kind functions come from Miller's downward recurrence, normalized
//! by a closed form (spherical) or the Neumann sum rule (cylindrical);
//! second-kind functions from upward recurrence, which is stable for them.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BesselError {
    #[error("argument must be non-zero")]
    ZeroArgument,
    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("order {order} overflows at |x| = {modulus}")]
    Overflow { order: usize, modulus: f64 },
}

/// Largest supported order.
pub const MAX_ORDER: usize = 200;

/// Values and first derivatives of one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselSet<T: Real> {
    pub j: Complex<T>,
    pub dj: Complex<T>,
    pub y: Complex<T>,
    pub dy: Complex<T>,
}

impl<T: Real> BesselSet<T> {
    /// First-kind Hankel function `j + i y`.
    pub fn h(&self) -> Complex<T> {
        self.j + Complex::<T>::i() * self.y
    }

    pub fn dh(&self) -> Complex<T> {
        self.dj + Complex::<T>::i() * self.dy
    }
}

fn c<T: Real>(x: f64) -> Complex<T> {
    Complex::new(T::lit(x), T::zero())
}

fn check<T: Real>(l: usize, x: Complex<T>) -> Result<(), BesselError> {
    if x.norm() == T::zero() {
        return Err(BesselError::ZeroArgument);
    }
    if l > MAX_ORDER {
        return Err(BesselError::OrderTooLarge { order: l, max: MAX_ORDER });
    }
    Ok(())
}

/// Unnormalized downward recurrence `f_{k-1} = a_k/x · f_k − f_{k+1}` from
/// `top`, returning `f_0 ..= f_{top+1}` up to a common factor.
fn miller<T: Real>(top: usize, x: Complex<T>, coeff: impl Fn(usize) -> T) -> Vec<Complex<T>> {
    // Representable in f32 too.
    let big = T::lit(1e15);
    let mut f = vec![Complex::new(T::zero(), T::zero()); top + 2];
    f[top] = Complex::new(T::one(), T::zero());
    for k in (1..=top).rev() {
        f[k - 1] = f[k] * coeff(k) / x - f[k + 1];
        if f[k - 1].norm() > big {
            let s = T::one() / big;
            for v in f[k - 1..].iter_mut() {
                *v = *v * s;
            }
        }
    }
    f
}

/// Far enough past the turning point `k ≈ |x|` that the seeded tail is below
/// double precision; the decay length there scales like `|x|^{1/3}`.
fn start_order<T: Real>(l: usize, x: Complex<T>) -> usize {
    let a = x.norm().as_f64();
    l.max(a.ceil() as usize) + 30 + (12.0 * a.cbrt()).ceil() as usize
}

/// `j_l, j_l′, y_l, y_l′` at complex `x`.
pub fn spherical_bessel<T: Real>(l: usize, x: Complex<T>) -> Result<BesselSet<T>, BesselError> {
    check(l, x)?;
    let top = start_order(l, x);
    let raw = miller(top, x, |k| <T as Real>::from_usize(2 * k + 1));
    // Normalize against whichever of j_0, j_1 is larger in closed form.
    let (s, co) = (x.sin(), x.cos());
    let j0 = s / x;
    let j1 = s / (x * x) - co / x;
    let scale = if j0.norm() >= j1.norm() { j0 / raw[0] } else { j1 / raw[1] };
    let j = |k: usize| raw[k] * scale;

    let mut y_prev = -co / x;
    let mut y = -co / (x * x) - s / x;
    if l == 0 {
        return finite(l, x, BesselSet { j: j(0), dj: -j(1), y: y_prev, dy: -y });
    }
    for k in 1..l {
        let next = y * <T as Real>::from_usize(2 * k + 1) / x - y_prev;
        y_prev = y;
        y = next;
    }
    let lp1 = <T as Real>::from_usize(l + 1);
    let out = BesselSet { j: j(l), dj: j(l - 1) - j(l) * lp1 / x, y, dy: y_prev - y * lp1 / x };
    finite(l, x, out)
}

fn finite<T: Real>(l: usize, x: Complex<T>, set: BesselSet<T>) -> Result<BesselSet<T>, BesselError> {
    let ok = [set.j, set.dj, set.y, set.dy].iter().all(|v| v.re.is_finite() && v.im.is_finite());
    if ok {
        Ok(set)
    } else {
        Err(BesselError::Overflow { order: l, modulus: x.norm().as_f64() })
    }
}

/// Riccati–Bessel values `ψ = x j_l`, `χ = x y_l` and their derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Riccati<T: Real> {
    pub psi: Complex<T>,
    pub dpsi: Complex<T>,
    pub chi: Complex<T>,
    pub dchi: Complex<T>,
}

impl<T: Real> Riccati<T> {
    pub fn xi(&self) -> Complex<T> {
        self.psi + Complex::<T>::i() * self.chi
    }

    pub fn dxi(&self) -> Complex<T> {
        self.dpsi + Complex::<T>::i() * self.dchi
    }
}

pub fn riccati<T: Real>(l: usize, x: Complex<T>) -> Result<Riccati<T>, BesselError> {
    let b = spherical_bessel(l, x)?;
    Ok(Riccati { psi: x * b.j, dpsi: b.j + x * b.dj, chi: x * b.y, dchi: b.y + x * b.dy })
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `Y_0` and `Y_1` from Neumann sums over normalized `J_k` (moderate `|x|`).
///
/// Y_0 = (2/π)(ln(x/2)+γ) J_0 − (4/π) Σ_{k≥1} (−1)^k J_{2k}/k, and Y_1 = −Y_0′.
/// Every term stays bounded, unlike the ascending power series.
fn y01_neumann<T: Real>(x: Complex<T>, j: impl Fn(usize) -> Complex<T>, top: usize) -> (Complex<T>, Complex<T>) {
    let pi = T::PI();
    let log_term = (x / T::lit(2.0)).ln() + c::<T>(EULER_GAMMA);
    let mut s0 = Complex::new(T::zero(), T::zero());
    let mut s1 = Complex::new(T::zero(), T::zero());
    let mut sign = -T::one();
    for k in 1..=(top - 1) / 2 {
        let kf = <T as Real>::from_usize(k);
        s0 = s0 + j(2 * k) * (sign / kf);
        s1 = s1 + (j(2 * k - 1) - j(2 * k + 1)) * (sign / kf);
        sign = -sign;
    }
    let two_over_pi = T::lit(2.0) / pi;
    let y0 = (log_term * j(0)) * two_over_pi - s0 * (T::lit(4.0) / pi);
    let y1 = (log_term * j(1) - j(0) / x) * two_over_pi + s1 * two_over_pi;
    (y0, y1)
}

/// `Y_0`, `Y_1` from the Hankel asymptotic expansion (large `|x|`).
fn y01_asymptotic<T: Real>(x: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut out = [Complex::new(T::zero(), T::zero()); 2];
    for (nu, slot) in out.iter_mut().enumerate() {
        let mu = <T as Real>::from_usize(4 * nu * nu);
        let mut p = Complex::new(T::one(), T::zero());
        let mut q = Complex::new(T::zero(), T::zero());
        let mut a = Complex::new(T::one(), T::zero());
        let eight_x = x * T::lit(8.0);
        let mut last = T::infinity();
        for k in 1..60usize {
            let odd = <T as Real>::from_usize(2 * k - 1);
            a = a * (mu - odd * odd) / (eight_x * <T as Real>::from_usize(k));
            if a.norm() > last {
                break;
            }
            last = a.norm();
            match k % 4 {
                1 => q = q + a,
                2 => p = p - a,
                3 => q = q - a,
                _ => p = p + a,
            }
            if a.norm() < T::epsilon() * T::lit(1e-2) {
                break;
            }
        }
        let chi = x - (<T as Real>::from_usize(2 * nu + 1) * T::PI() / T::lit(4.0));
        let amp = (c::<T>(2.0) / (x * T::PI())).sqrt();
        *slot = amp * (p * chi.sin() + q * chi.cos());
    }
    (out[0], out[1])
}

/// `J_m, J_m′, Y_m, Y_m′` at complex `x` with `Re x > 0`.
pub fn cylindrical_bessel<T: Real>(m: usize, x: Complex<T>) -> Result<BesselSet<T>, BesselError> {
    check(m, x)?;
    let top = start_order(m, x) + (start_order(m, x) % 2);
    let raw = miller(top, x, |k| <T as Real>::from_usize(2 * k));
    // Neumann sum rule: J_0 + 2 Σ J_{2k} = 1.
    let mut sum = raw[0];
    for k in (2..=top).step_by(2) {
        sum = sum + raw[k] * T::lit(2.0);
    }
    let scale = Complex::new(T::one(), T::zero()) / sum;
    let j = |k: usize| raw[k] * scale;

    let (y0, y1) = if x.norm() >= T::lit(17.0) { y01_asymptotic(x) } else { y01_neumann(x, j, top) };
    let (mut y_prev, mut y) = (y0, y1);
    if m == 0 {
        return finite(m, x, BesselSet { j: j(0), dj: -j(1), y: y0, dy: -y1 });
    }
    for k in 1..m {
        let next = y * <T as Real>::from_usize(2 * k) / x - y_prev;
        y_prev = y;
        y = next;
    }
    let mf = <T as Real>::from_usize(m);
    finite(m, x, BesselSet { j: j(m), dj: j(m - 1) - j(m) * mf / x, y, dy: y_prev - y * mf / x })
}
