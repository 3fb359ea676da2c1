//! Floquet-Bloch modes of a periodic half-guide: the Fourier-Galerkin
//! quadratic pencil, its eigenpairs inside the truncation rectangle, and
//! their classification into outgoing mode families.

mod basis;
mod classify;
mod eigen;

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fourier_dim, CellSpec, FourierIndex, RefractiveIndex, Tolerances};

pub use basis::{BasisDocument, ModeBasis, ModeRecord, Side};
pub use classify::classify_and_orthonormalize;
pub use eigen::EigenBackend;

/// `B + alpha A - alpha^2 I` in physical units, with `A` diagonal.
#[derive(Debug, Clone)]
pub struct QuadraticPencil {
    pub b: Mat<C64>,
    /// Diagonal of `A`: `-4 pi j / L`.
    pub a_diag: Vec<f64>,
    /// Diagonal Laplacian symbol `-(2 pi j / L)^2 - (pi l / H)^2`, the part of `B` without `q`.
    pub laplace_diag: Vec<f64>,
    pub n: usize,
    pub k: f64,
    pub cell: CellSpec,
    pub b_norm: f64,
    pub qhat_digest: String,
}

/// Assemble the Fourier-Galerkin pencil of `Δw + k² q w = 0` for
/// quasi-periodic `w` on one cell with Dirichlet walls.
pub fn build_pencil(q: &RefractiveIndex, k: f64, cell: CellSpec, n: usize) -> Result<QuadraticPencil> {
    let d = fourier_dim(n)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("wavenumber must be positive, got {k}")));
    }
    if q.cell != cell {
        return Err(Error::InvalidInput(
            "refractive index cell differs from the pencil cell".into(),
        ));
    }
    if q.bandwidth_j() > 2 * n {
        return Err(Error::Bandwidth {
            bandwidth: q.bandwidth_j(),
            limit: 2 * n,
        });
    }
    let (lp, hp) = (cell.period, cell.height);
    let ni = n as i64;
    let mut laplace_diag = vec![0.0; d];
    let mut a_diag = vec![0.0; d];
    for (idx, (ld, ad)) in laplace_diag.iter_mut().zip(a_diag.iter_mut()).enumerate() {
        let FourierIndex { j, l } = FourierIndex::unflat(idx, n);
        let kx = 2.0 * PI * j as f64 / lp;
        let ky = PI * l as f64 / hp;
        *ld = -kx * kx - ky * ky;
        *ad = -4.0 * PI * j as f64 / lp;
    }

    // Multiplication by q projected on the sine basis. With the cosine
    // table, q·sin(l' y) contributes qhat(m,0) at l = l' and qhat(m,p)/2 at
    // l = l' ± p, with the reflected term l = p - l' entering negatively.
    let k2 = k * k;
    let mut b = Mat::<C64>::zeros(d, d);
    for (m, p, val) in q.entries() {
        for j in -ni..=ni {
            let jp = j - m;
            if jp.abs() > ni {
                continue;
            }
            for l in 1..=ni {
                let row = FourierIndex { j, l }.flat(n);
                let mut add = |lp: i64, w: C64| {
                    if (1..=ni).contains(&lp) {
                        let col = FourierIndex { j: jp, l: lp }.flat(n);
                        b[(row, col)] += w * k2;
                    }
                };
                if p == 0 {
                    add(l, val);
                } else {
                    add(l - p, val * 0.5);
                    add(l + p, val * 0.5);
                    add(p - l, -val * 0.5);
                }
            }
        }
    }
    for (i, ld) in laplace_diag.iter().enumerate() {
        b[(i, i)] += C64::new(*ld, 0.0);
    }
    let b_norm = b.norm_l2();
    Ok(QuadraticPencil {
        b,
        a_diag,
        laplace_diag,
        n,
        k,
        cell,
        b_norm,
        qhat_digest: q.digest(),
    })
}

impl QuadraticPencil {
    pub fn dim(&self) -> usize {
        self.a_diag.len()
    }

    /// Dense copy of `A`.
    pub fn a_matrix(&self) -> Mat<C64> {
        let d = self.dim();
        Mat::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(self.a_diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `q`-multiplication block `B - D`.
    pub fn convolution(&self) -> Mat<C64> {
        let mut c = self.b.clone();
        for (i, ld) in self.laplace_diag.iter().enumerate() {
            c[(i, i)] -= C64::new(*ld, 0.0);
        }
        c
    }

    /// `(B + alpha A - alpha^2 I) v` for a physical quasimomentum `alpha`.
    pub fn apply(&self, alpha_phys: C64, v: &[C64]) -> Vec<C64> {
        let d = self.dim();
        let vm = Mat::from_fn(d, 1, |i, _| v[i]);
        let bv = &self.b * &vm;
        (0..d)
            .map(|i| bv[(i, 0)] + (alpha_phys * self.a_diag[i] - alpha_phys * alpha_phys) * v[i])
            .collect()
    }

    /// Pencil residual `‖T(alpha) v‖ / (‖B‖_F ‖v‖)` at a per-period `alpha`.
    pub fn relative_residual(&self, alpha: C64, v: &[C64]) -> f64 {
        let r = self.apply(alpha / self.cell.period, v);
        let rn = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let vn = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        rn / (self.b_norm.max(f64::MIN_POSITIVE) * vn)
    }
}

/// Companion matrix `[[0, I], [B, A]]` acting on `(V; alpha V)`; its
/// eigenvalues are the physical quasimomenta of the pencil.
pub fn linearize(p: &QuadraticPencil) -> Mat<C64> {
    let d = p.dim();
    Mat::from_fn(2 * d, 2 * d, |r, c| {
        if r < d {
            if c == r + d {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        } else if c < d {
            p.b[(r - d, c)]
        } else if c - d == r - d {
            C64::new(p.a_diag[r - d], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Mode classification. `Unclassified` marks propagating modes returned by
/// `solve_modes` before the direction parameter is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    PropagatingRight,
    PropagatingLeft,
    EvanescentRight,
    EvanescentLeft,
    Unclassified,
}

impl ModeKind {
    pub fn is_propagating(self) -> bool {
        matches!(
            self,
            ModeKind::PropagatingRight | ModeKind::PropagatingLeft | ModeKind::Unclassified
        )
    }
}

/// One generalized eigenfunction
/// `w(x) = exp(i alpha x1 / L) Σ v_{j,l} exp(2 pi i j x1 / L) sin(pi l x2 / H)`.
///
/// `alpha` is the quasimomentum per period so that `z = exp(i alpha)`.
#[derive(Debug, Clone)]
pub struct FloquetMode {
    pub alpha: C64,
    pub z: C64,
    pub coeffs: Vec<C64>,
    pub kind: ModeKind,
    pub lambda: Option<f64>,
    pub residual: f64,
    pub n: usize,
    pub cell: CellSpec,
}

impl FloquetMode {
    pub fn new(alpha: C64, coeffs: Vec<C64>, kind: ModeKind, residual: f64, n: usize, cell: CellSpec) -> Self {
        FloquetMode {
            alpha,
            z: (C64::i() * alpha).exp(),
            coeffs,
            kind,
            lambda: None,
            residual,
            n,
            cell,
        }
    }

    /// Value (or x1-derivative) at local cell coordinates, where `s` may be
    /// any real abscissa along the guide measured from a cell start.
    pub fn eval_local(&self, s: f64, t: f64, derivative: bool) -> C64 {
        let n = self.n as i64;
        let (lp, hp) = (self.cell.period, self.cell.height);
        let sines: Vec<f64> = (1..=n).map(|l| (PI * l as f64 * t / hp).sin()).collect();
        let base = (C64::i() * self.alpha * s / lp).exp();
        let step = C64::from_polar(1.0, 2.0 * PI * s / lp);
        let mut ej = C64::from_polar(1.0, -2.0 * PI * n as f64 * s / lp);
        let mut acc = C64::new(0.0, 0.0);
        for j in -n..=n {
            let mut row = C64::new(0.0, 0.0);
            let off = ((j + n) * n) as usize;
            for (l, sn) in sines.iter().enumerate() {
                row += self.coeffs[off + l] * *sn;
            }
            if derivative {
                row *= C64::i() * (self.alpha + 2.0 * PI * j as f64) / lp;
            }
            acc += row * ej;
            ej *= step;
        }
        acc * base
    }

    /// Sine-series coefficients of the trace and of the x1-derivative trace
    /// on the vertical line at local abscissa `s`.
    pub fn trace_coefficients(&self, s: f64) -> (Vec<C64>, Vec<C64>) {
        let n = self.n as i64;
        let lp = self.cell.period;
        let mut value = vec![C64::new(0.0, 0.0); self.n];
        let mut deriv = vec![C64::new(0.0, 0.0); self.n];
        for j in -n..=n {
            let kj = (self.alpha + 2.0 * PI * j as f64) / lp;
            let ph = (C64::i() * kj * s).exp();
            let off = ((j + n) * n) as usize;
            for l in 0..self.n {
                let c = self.coeffs[off + l] * ph;
                value[l] += c;
                deriv[l] += c * C64::i() * kj;
            }
        }
        (value, deriv)
    }
}

/// `w(z, x) z^n` (or its x1-derivative) for a point `x` in the reference cell.
pub fn eval_mode(m: &FloquetMode, cell_index: i64, x: [f64; 2], derivative: bool) -> C64 {
    m.eval_local(x[0] + cell_index as f64 * m.cell.period, x[1], derivative)
}

/// Whether a per-period quasimomentum belongs to the kept rectangle pair.
pub(crate) fn in_rectangle(alpha: C64, cell: CellSpec, m: usize, tol: &Tolerances) -> bool {
    let delta = tol.cluster_radius();
    let top = cell.rectangle_height(m);
    let margin = 1e-9 * top.max(1.0);
    alpha.re > -PI + delta && alpha.re <= PI + delta && alpha.im.abs() < top - margin
}

/// Eigenpairs of the pencil inside the rectangles of height `M` strips, with
/// spurious pairs dropped by residual and `‖V‖ = 1`.
pub fn solve_modes(p: &QuadraticPencil, m: usize, tol: &Tolerances) -> Result<Vec<FloquetMode>> {
    solve_modes_with(p, m, tol, EigenBackend::Auto)
}

pub fn solve_modes_with(
    p: &QuadraticPencil,
    m: usize,
    tol: &Tolerances,
    backend: EigenBackend,
) -> Result<Vec<FloquetMode>> {
    if m == 0 {
        return Err(Error::InvalidInput("mode truncation M must be at least 1".into()));
    }
    tol.validate()?;
    let raw = eigen::eigenpairs(p, m, tol, backend)?;
    let mut modes = Vec::with_capacity(raw.len());
    for (alpha, mut v) in raw {
        if !in_rectangle(alpha, p.cell, m, tol) {
            continue;
        }
        normalize_phase(&mut v);
        let residual = p.relative_residual(alpha, &v);
        if residual > tol.pencil_residual_tol {
            log::debug!("dropping spurious eigenvalue {alpha} with residual {residual:.2e}");
            continue;
        }
        let kind = if alpha.im.abs() < tol.unit_circle_tol {
            ModeKind::Unclassified
        } else if alpha.im > 0.0 {
            ModeKind::EvanescentRight
        } else {
            ModeKind::EvanescentLeft
        };
        modes.push(FloquetMode::new(alpha, v, kind, residual, p.n, p.cell));
    }
    modes.sort_by(|a, b| {
        a.alpha
            .im
            .partial_cmp(&b.alpha.im)
            .unwrap()
            .then(a.alpha.re.partial_cmp(&b.alpha.re).unwrap())
    });
    Ok(modes)
}

/// Scale to unit 2-norm and rotate so the largest entry is real positive.
pub(crate) fn normalize_phase(v: &mut [C64]) {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let mut best = 0;
    let mut best_abs = 0.0;
    for (i, x) in v.iter().enumerate() {
        // Ties are broken toward the lowest index for determinism.
        if x.norm() > best_abs * (1.0 + 1e-9) {
            best = i;
            best_abs = x.norm();
        }
    }
    let phase = v[best].conj() / (best_abs * norm);
    for x in v.iter_mut() {
        *x *= phase;
    }
}

/// Smallest strip index from which each strip holds exactly one eigenvalue,
/// for a square cell: `min { n : pi (2n - 1) / 2 >= (kL)^2 ‖q‖ / pi }`.
pub fn strip_threshold(k: f64, q: &RefractiveIndex) -> Result<usize> {
    let cell = q.cell;
    if (cell.period - cell.height).abs() > 1e-12 * cell.period {
        return Err(Error::InvalidInput(
            "strip counting is defined for square cells only".into(),
        ));
    }
    let keff = k * cell.period;
    let bound = keff * keff * q.sup_norm() / PI;
    let mut n = 1usize;
    while PI * (2 * n - 1) as f64 / 2.0 < bound {
        n += 1;
    }
    Ok(n)
}

/// Radius of the disc around `i pi n` that holds the strip eigenvalue.
pub fn strip_disc_radius(k: f64, q: &RefractiveIndex, n: usize) -> f64 {
    let keff = k * q.cell.period;
    2.0 * keff * keff * q.sup_norm() / (PI * (2 * n - 1) as f64)
}

/// Count kept eigenvalues in `[-pi, pi] + i[(n - 1/2) pi, (n + 1/2) pi]`.
/// From the threshold strip on, anything other than one eigenvalue inside
/// the disc is reported as a truncation diagnostic.
pub fn eigencount_in_strip(modes: &[FloquetMode], n: usize, k: f64, q: &RefractiveIndex) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidInput("strip index must be positive".into()));
    }
    let n0 = strip_threshold(k, q)?;
    let lo = (n as f64 - 0.5) * PI;
    let hi = (n as f64 + 0.5) * PI;
    let edge = PI + 1e-9;
    let inside: Vec<&FloquetMode> = modes
        .iter()
        .filter(|m| m.alpha.re.abs() <= edge && m.alpha.im >= lo && m.alpha.im < hi)
        .collect();
    if n >= n0 {
        if inside.len() != 1 {
            return Err(Error::StripCount {
                strip: n,
                count: inside.len(),
            });
        }
        let radius = strip_disc_radius(k, q, n);
        let dist = (inside[0].alpha - C64::new(0.0, PI * n as f64)).norm();
        if dist > radius + 1e-8 * (1.0 + PI * n as f64) {
            return Err(Error::InvalidInput(format!(
                "strip {n} eigenvalue lies {dist:.4} from i pi n, outside the disc of radius {radius:.4}"
            )));
        }
    }
    Ok(inside.len())
}
