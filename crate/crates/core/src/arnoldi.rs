//! Shift-invert Krylov eigensolver for `A x = λ B x` with diagonal `B`.
//!
//! The spectral transform `OP = (A − σB)⁻¹ B` maps eigenvalues near the
//! shift to the largest `θ = 1/(λ − σ)`. The search space is grown by the
//! Ritz residual direction (equivalent to Arnoldi without restarts) and
//! thick-restarted onto the wanted Ritz vectors when it fills up.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::Mat;
use num_complex::Complex64 as C64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::OperatorPair;
use crate::sparse::norm;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("sparse factorization of A − σB failed: {0}")]
    Factorization(String),
    #[error("dense eigensolver failed: {0}")]
    Dense(String),
    #[error("only {converged} of {wanted} eigenpairs converged after {applications} operator applications (best pending residual {residual:.3e})")]
    NoConvergence { converged: usize, wanted: usize, applications: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenOptions {
    pub count: usize,
    /// Relative residual `‖Ax − λBx‖ / (‖Ax‖ + |λ|‖Bx‖)`.
    pub tolerance: f64,
    pub max_basis: usize,
    pub max_applications: usize,
    /// Problems with at most this many unknowns use the dense solver.
    pub dense_threshold: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { count: 6, tolerance: 1e-8, max_basis: 40, max_applications: 800, dense_threshold: 0, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: C64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [C64], alpha: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(x: &mut [C64], s: f64) {
    for v in x.iter_mut() {
        *v *= s;
    }
}

/// Orthogonalizes `v` against the basis twice; mirrors the same linear
/// combination on `companion` when given. Returns the remaining norm.
fn orthogonalize(basis: &[Vec<C64>], images: &[Vec<C64>], v: &mut [C64], mut companion: Option<&mut [C64]>) -> f64 {
    for _ in 0..2 {
        for (k, w) in basis.iter().enumerate() {
            let c = dot(w, v);
            axpy(v, -c, w);
            if let Some(comp) = companion.as_deref_mut() {
                axpy(comp, -c, &images[k]);
            }
        }
    }
    norm(v)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    (0..n).map(|_| C64::new(unit(), unit())).collect()
}

struct ShiftInvert<'a> {
    op: &'a OperatorPair,
    lu: Lu<usize, C64>,
    applications: usize,
}

impl ShiftInvert<'_> {
    fn apply(&mut self, x: &[C64]) -> Vec<C64> {
        self.applications += 1;
        let n = x.len();
        let mut rhs = Mat::<C64>::from_fn(n, 1, |i, _| x[i] * self.op.b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..n).map(|i| rhs[(i, 0)]).collect()
    }
}

/// Eigenpairs of the projected matrix, sorted by decreasing `|θ|`.
fn ritz(g: &[Vec<C64>]) -> Result<Vec<(C64, Vec<C64>)>, EigenError> {
    let k = g.len();
    let m = Mat::<C64>::from_fn(k, k, |i, j| g[i][j]);
    let evd = m.eigen().map_err(|e| EigenError::Dense(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut pairs: Vec<(C64, Vec<C64>)> = (0..k)
        .map(|c| {
            let mut y: Vec<C64> = (0..k).map(|r| u[(r, c)]).collect();
            let n = norm(&y);
            scale(&mut y, 1.0 / n);
            (s[c], y)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.norm().total_cmp(&a.0.norm()));
    Ok(pairs)
}

fn combine(basis: &[Vec<C64>], y: &[C64]) -> Vec<C64> {
    let mut x = vec![C64::new(0.0, 0.0); basis[0].len()];
    for (w, &c) in basis.iter().zip(y) {
        axpy(&mut x, c, w);
    }
    x
}

/// Up to `opts.count` eigenpairs nearest `sigma`, sorted by `|λ − σ|`.
pub fn solve_near(op: &OperatorPair, sigma: C64, opts: &EigenOptions) -> Result<Vec<EigenPair>, EigenError> {
    let n = op.len();
    if n <= opts.dense_threshold {
        return solve_dense(op, sigma, opts.count);
    }
    let count = opts.count.max(1).min(n);
    let max_basis = opts.max_basis.max(count + 8).min(n);
    let lu = op
        .a
        .shifted_faer(sigma, &op.b)
        .map_err(EigenError::Factorization)?
        .sp_lu()
        .map_err(|e| EigenError::Factorization(format!("{e:?}")))?;
    let mut si = ShiftInvert { op, lu, applications: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut images: Vec<Vec<C64>> = Vec::new();
    // g = Wᴴ Z (projected operator) and gram = Zᴴ Z, kept in step with the basis.
    let mut g: Vec<Vec<C64>> = Vec::new();
    let mut gram: Vec<Vec<C64>> = Vec::new();

    let mut next = random_vector(&mut rng, n);
    let mut best_pending = f64::INFINITY;
    loop {
        let mut nv = orthogonalize(&basis, &[], &mut next, None);
        if !(nv > 1e-10 && nv.is_finite()) {
            next = random_vector(&mut rng, n);
            nv = orthogonalize(&basis, &[], &mut next, None);
        }
        scale(&mut next, 1.0 / nv);
        let z = si.apply(&next);
        for (i, row) in g.iter_mut().enumerate() {
            row.push(dot(&basis[i], &z));
        }
        for (i, row) in gram.iter_mut().enumerate() {
            row.push(dot(&images[i], &z));
        }
        let mut g_row: Vec<C64> = images.iter().map(|zj| dot(&next, zj)).collect();
        g_row.push(dot(&next, &z));
        g.push(g_row);
        let mut gram_row: Vec<C64> = images.iter().map(|zj| dot(&z, zj)).collect();
        gram_row.push(dot(&z, &z));
        gram.push(gram_row);
        basis.push(std::mem::take(&mut next));
        images.push(z);

        if basis.len() < count {
            next = images.last().unwrap().clone();
            continue;
        }

        let pairs = ritz(&g)?;
        let mut results = Vec::new();
        let mut pending: Option<usize> = None;
        for (idx, (theta, y)) in pairs.iter().take(count).enumerate() {
            // ‖Z y − θ W y‖² = yᴴ(ZᴴZ)y − 2 Re(θ̄ yᴴ G y) + |θ|², all in the small space.
            let quad = |m: &[Vec<C64>]| -> C64 {
                let mut acc = C64::new(0.0, 0.0);
                for (i, row) in m.iter().enumerate() {
                    let my: C64 = row.iter().zip(y).map(|(a, b)| a * b).sum();
                    acc += y[i].conj() * my;
                }
                acc
            };
            let est = (quad(&gram).re - 2.0 * (theta.conj() * quad(&g)).re + theta.norm_sqr()).max(0.0).sqrt();
            if theta.norm() == 0.0 || est > 1e-4 * theta.norm() {
                best_pending = best_pending.min(est / theta.norm().max(f64::MIN_POSITIVE));
                pending.get_or_insert(idx);
                continue;
            }
            let mut x = combine(&basis, y);
            let nx = norm(&x);
            scale(&mut x, 1.0 / nx);
            let lambda = sigma + 1.0 / theta;
            let residual = op.relative_residual(lambda, &x);
            if residual <= opts.tolerance {
                results.push(EigenPair { lambda, vector: x, residual });
            } else {
                best_pending = best_pending.min(residual);
                pending.get_or_insert(idx);
            }
        }
        let Some(first_pending) = pending else {
            results.sort_by(|a, b| (a.lambda - sigma).norm().total_cmp(&(b.lambda - sigma).norm()));
            return Ok(results);
        };
        if si.applications >= opts.max_applications || basis.len() >= n {
            return Err(EigenError::NoConvergence {
                converged: results.len(),
                wanted: count,
                applications: si.applications,
                residual: best_pending,
            });
        }

        // Next direction: image of the first unconverged Ritz vector.
        next = combine(&images, &pairs[first_pending].1);

        if basis.len() >= max_basis {
            let keep = (count + 8).min(max_basis - 1);
            let mut new_basis = Vec::with_capacity(keep);
            let mut new_images: Vec<Vec<C64>> = Vec::with_capacity(keep);
            for (_, y) in pairs.iter().take(keep) {
                let mut w = combine(&basis, y);
                let mut z = combine(&images, y);
                let nw = orthogonalize(&new_basis, &new_images, &mut w, Some(&mut z));
                if nw > 1e-10 {
                    scale(&mut w, 1.0 / nw);
                    scale(&mut z, 1.0 / nw);
                    new_basis.push(w);
                    new_images.push(z);
                }
            }
            g = new_basis.iter().map(|w| new_images.iter().map(|z| dot(w, z)).collect()).collect();
            gram = new_images.iter().map(|a| new_images.iter().map(|b| dot(a, b)).collect()).collect();
            basis = new_basis;
            images = new_images;
        }
    }
}

/// Dense generalized eigensolve, intended for small test problems.
pub fn solve_dense(op: &OperatorPair, sigma: C64, count: usize) -> Result<Vec<EigenPair>, EigenError> {
    let n = op.len();
    let dense = op.a.to_dense();
    // B is diagonal: solve the standard problem for D A D, D = B^{-1/2}.
    let d: Vec<C64> = op.b.iter().map(|b| 1.0 / b.sqrt()).collect();
    let c = Mat::<C64>::from_fn(n, n, |i, j| d[i] * dense[i][j] * d[j]);
    let evd = c.eigen().map_err(|e| EigenError::Dense(format!("{e:?}")))?;
    let (s, u) = (evd.S().column_vector(), evd.U());
    let mut pairs: Vec<EigenPair> = (0..n)
        .map(|c| {
            let lambda = s[c];
            let mut x: Vec<C64> = (0..n).map(|r| d[r] * u[(r, c)]).collect();
            let nx = norm(&x);
            scale(&mut x, 1.0 / nx);
            let residual = op.relative_residual(lambda, &x);
            EigenPair { lambda, vector: x, residual }
        })
        .collect();
    pairs.sort_by(|a, b| (a.lambda - sigma).norm().total_cmp(&(b.lambda - sigma).norm()));
    pairs.truncate(count);
    Ok(pairs)
}
