//! Eigenpairs of the companion linearization.
//!
//! Small pencils use a full dense eigendecomposition. Large pencils are
//! handled by shift-invert block Arnoldi, one shift per strip of the
//! truncation rectangle, since only the few eigenvalues near the real axis
//! are ever kept.

use std::f64::consts::PI;

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{in_rectangle, linearize, QuadraticPencil};
use crate::error::{Error, Result};
use crate::model::Tolerances;

/// Which eigensolver handles the companion problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenBackend {
    /// Dense up to `DENSE_LIMIT` companion size, shift-invert above.
    #[default]
    Auto,
    Dense,
    ShiftInvert,
}

/// Largest companion size solved densely under `Auto`.
pub const DENSE_LIMIT: usize = 1100;

const BLOCK: usize = 3;
const START_VECTORS: usize = 48;
const MAX_VECTORS: usize = 1200;
const RITZ_TOL: f64 = 1e-10;

/// Raw eigenpairs `(alpha per period, V)` covering at least the rectangle.
pub(super) fn eigenpairs(
    p: &QuadraticPencil,
    m: usize,
    tol: &Tolerances,
    backend: EigenBackend,
) -> Result<Vec<(C64, Vec<C64>)>> {
    let size = 2 * p.dim();
    let dense = match backend {
        EigenBackend::Auto => size <= DENSE_LIMIT,
        EigenBackend::Dense => true,
        EigenBackend::ShiftInvert => false,
    };
    if dense {
        dense_pairs(p)
    } else {
        shift_invert_pairs(p, m, tol)
    }
}

fn dense_pairs(p: &QuadraticPencil) -> Result<Vec<(C64, Vec<C64>)>> {
    let d = p.dim();
    let l = linearize(p);
    let eig = l.eigen().map_err(|e| Error::EigenSolver {
        size: 2 * d,
        condition: l.norm_l2(),
        reason: format!("{e:?}"),
    })?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut out = Vec::with_capacity(2 * d);
    for i in 0..2 * d {
        let alpha = s[i] * p.cell.period;
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            continue;
        }
        let v: Vec<C64> = (0..d).map(|r| u[(r, i)]).collect();
        out.push((alpha, v));
    }
    Ok(out)
}

/// `(L - sigma)^{-1}` for the companion `L` through a dense LU of `T(sigma)`.
struct ShiftedInverse<'a> {
    p: &'a QuadraticPencil,
    sigma: C64,
    lu: PartialPivLu<C64>,
}

impl<'a> ShiftedInverse<'a> {
    fn new(p: &'a QuadraticPencil, sigma: C64) -> Option<(Self, f64)> {
        let d = p.dim();
        let mut t = p.b.clone();
        for i in 0..d {
            t[(i, i)] += sigma * p.a_diag[i] - sigma * sigma;
        }
        let lu = t.partial_piv_lu();
        let u = lu.U();
        let mut umax: f64 = 0.0;
        let mut umin = f64::INFINITY;
        for i in 0..d {
            let a = u[(i, i)].norm();
            umax = umax.max(a);
            umin = umin.min(a);
        }
        let cond = umax / umin;
        if !(cond.is_finite() && cond < 1e13) {
            return None;
        }
        Some((ShiftedInverse { p, sigma, lu }, cond))
    }

    fn apply(&self, x: MatRef<'_, C64>) -> Mat<C64> {
        let d = self.p.dim();
        let nb = x.ncols();
        let rhs = Mat::from_fn(d, nb, |i, c| {
            x[(d + i, c)] - (C64::new(self.p.a_diag[i], 0.0) - self.sigma) * x[(i, c)]
        });
        let v = self.lu.solve(&rhs);
        Mat::from_fn(2 * d, nb, |i, c| {
            if i < d {
                v[(i, c)]
            } else {
                x[(i - d, c)] + self.sigma * v[(i - d, c)]
            }
        })
    }
}

struct Ritz {
    theta: C64,
    converged: bool,
    vector: Option<Vec<C64>>,
}

fn random_block(rng: &mut ChaCha8Rng, n: usize, b: usize) -> Mat<C64> {
    Mat::from_fn(n, b, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

/// Block Arnoldi with full reorthogonalization. Returns Ritz values of the
/// shifted inverse and, for those with `|theta| >= wanted`, Ritz vectors.
fn block_arnoldi(op: &ShiftedInverse<'_>, blocks: usize, seed: u64, wanted: f64) -> Vec<Ritz> {
    let n = 2 * op.p.dim();
    let b = BLOCK.min(n);
    let blocks = blocks.min(n / b).max(1);
    let mcols = (blocks + 1) * b;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis = Mat::<C64>::zeros(n, mcols);
    let mut h = Mat::<C64>::zeros(mcols, blocks * b);

    let start = random_block(&mut rng, n, b).qr().compute_thin_Q();
    basis.as_mut().submatrix_mut(0, 0, n, b).copy_from(&start);

    for jb in 0..blocks {
        let mut w = op.apply(basis.as_ref().submatrix(0, jb * b, n, b));
        let k = (jb + 1) * b;
        for _ in 0..2 {
            let v = basis.as_ref().submatrix(0, 0, n, k);
            let coef = v.adjoint() * &w;
            w -= v * &coef;
            let mut hs = h.as_mut().submatrix_mut(0, jb * b, k, b);
            hs += &coef;
        }
        let qr = w.qr();
        let mut q = qr.compute_thin_Q();
        let r = qr.thin_R().to_owned();
        let scale = r.norm_l2().max(1e-300);
        for c in 0..b {
            if r[(c, c)].norm() < 1e-12 * scale {
                // Rank loss: continue with a fresh direction orthogonal to everything so far.
                let mut fresh = random_block(&mut rng, n, 1);
                for _ in 0..2 {
                    let v = basis.as_ref().submatrix(0, 0, n, k);
                    let coef = v.adjoint() * &fresh;
                    fresh -= v * &coef;
                    let qc = q.as_ref().submatrix(0, 0, n, c);
                    let coef2 = qc.adjoint() * &fresh;
                    fresh -= qc * &coef2;
                }
                let nrm = fresh.norm_l2();
                for i in 0..n {
                    q[(i, c)] = fresh[(i, 0)] / nrm;
                }
            }
        }
        basis.as_mut().submatrix_mut(0, k, n, b).copy_from(&q);
        h.as_mut().submatrix_mut(k, jb * b, b, b).copy_from(&r);
    }

    let m = blocks * b;
    let hm = h.as_ref().submatrix(0, 0, m, m).to_owned();
    let eig = match hm.eigen() {
        Ok(e) => e,
        Err(_) => return Vec::new(),
    };
    let s = eig.S().column_vector();
    let u = eig.U();
    let tail = h.as_ref().submatrix(m, m - b, b, b);
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let theta = s[i];
        let ucol = u.col(i);
        let unorm = ucol.norm_l2();
        let last = Mat::from_fn(b, 1, |r, _| ucol[m - b + r] / unorm);
        let res = (tail * &last).norm_l2();
        let converged = res <= RITZ_TOL * theta.norm();
        let vector = if theta.norm() >= wanted && converged {
            let y = basis.as_ref().submatrix(0, 0, n, m) * ucol;
            Some((0..n).map(|r| y[r] / unorm).collect())
        } else {
            None
        };
        out.push(Ritz {
            theta,
            converged,
            vector,
        });
    }
    out
}

fn shift_invert_pairs(p: &QuadraticPencil, m: usize, tol: &Tolerances) -> Result<Vec<(C64, Vec<C64>)>> {
    let d = p.dim();
    let lp = p.cell.period;
    let spacing = p.cell.strip_spacing();
    let delta = tol.cluster_radius();
    let top = p.cell.rectangle_height(m);
    let mut out = Vec::new();
    let mi = m as i64;

    for strip in -mi..=mi {
        let lo = ((strip as f64 - 0.5) * spacing).max(-top);
        let hi = ((strip as f64 + 0.5) * spacing).min(top);
        if lo >= hi {
            continue;
        }
        // Shift slightly off the strip centre so it never sits on an eigenvalue.
        let mut offset = C64::new(0.0917, 0.0613);
        let mut built = None;
        for _ in 0..4 {
            let center = C64::new(0.0, strip as f64 * spacing) + offset;
            if let Some(op) = ShiftedInverse::new(p, center / lp) {
                built = Some((op, center));
                break;
            }
            offset *= C64::new(1.7, 0.9);
        }
        let ((op, cond), center) = built.ok_or_else(|| Error::EigenSolver {
            size: 2 * d,
            condition: f64::INFINITY,
            reason: format!("no regular shift found near strip {strip}"),
        })?;

        let corners = [
            C64::new(-PI, lo),
            C64::new(-PI, hi),
            C64::new(PI + delta, lo),
            C64::new(PI + delta, hi),
        ];
        let radius = corners.iter().map(|c| (c - center).norm()).fold(0.0, f64::max) * 1.02 + delta;
        let wanted = lp / radius;

        let mut blocks = START_VECTORS.div_ceil(BLOCK);
        let seed = 0x5eed_0000_u64 ^ ((strip + 1024) as u64);
        let ritz = loop {
            let ritz = block_arnoldi(&op, blocks, seed, wanted);
            let inside_ok = ritz.iter().filter(|r| r.theta.norm() >= wanted).all(|r| r.converged);
            let outside = ritz.iter().filter(|r| r.theta.norm() < wanted && r.converged).count();
            let exhausted = blocks * BLOCK >= 2 * d;
            if (inside_ok && outside >= BLOCK) || (inside_ok && exhausted) {
                break ritz;
            }
            if exhausted || blocks * BLOCK >= MAX_VECTORS {
                return Err(Error::EigenSolver {
                    size: 2 * d,
                    condition: cond,
                    reason: format!(
                        "shift-invert Arnoldi did not converge near strip {strip} with {} vectors",
                        blocks * BLOCK
                    ),
                });
            }
            blocks *= 2;
        };

        for r in ritz {
            let Some(x) = r.vector else { continue };
            let alpha_phys = op.sigma + C64::new(1.0, 0.0) / r.theta;
            let alpha = alpha_phys * lp;
            if alpha.im < lo || alpha.im >= hi || !in_rectangle(alpha, p.cell, m, tol) {
                continue;
            }
            let v: Vec<C64> = x[..d].to_vec();
            out.push((alpha, v));
        }
    }
    Ok(out)
}
