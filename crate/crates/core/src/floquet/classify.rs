use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use super::{FloquetMode, ModeBasis, ModeKind, QuadraticPencil, Side as GuideSide};
use crate::error::{Error, Result};
use crate::model::Tolerances;

const STANDING_WAVE_TOL: f64 = 1e-10;

/// Split modes into the outgoing families of each side.
///
/// Propagating modes are grouped into clusters of equal quasimomentum; in
/// each cluster the energy form `k ∫ q φ conj(φ)` is made the identity and
/// the flux form `-i ∫ ∂φ/∂x1 conj(φ)` diagonal, whose eigenvalues are the
/// direction parameters. Evanescent modes follow the sign of `Im alpha`.
pub fn classify_and_orthonormalize(
    modes: &[FloquetMode],
    p: &QuadraticPencil,
    m: usize,
    tol: &Tolerances,
) -> Result<(ModeBasis, ModeBasis)> {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut propagating: Vec<&FloquetMode> = Vec::new();
    for mode in modes {
        if mode.alpha.im.abs() < tol.unit_circle_tol {
            propagating.push(mode);
        } else if mode.alpha.im > 0.0 {
            let mut md = mode.clone();
            md.kind = ModeKind::EvanescentRight;
            plus.push(md);
        } else {
            let mut md = mode.clone();
            md.kind = ModeKind::EvanescentLeft;
            minus.push(md);
        }
    }
    propagating.sort_by(|a, b| a.alpha.re.partial_cmp(&b.alpha.re).unwrap());

    let radius = tol.cluster_radius();
    let mut start = 0;
    let convolution = if propagating.is_empty() {
        None
    } else {
        Some(p.convolution())
    };
    while start < propagating.len() {
        let mut end = start + 1;
        while end < propagating.len() && propagating[end].alpha.re - propagating[end - 1].alpha.re < radius {
            end += 1;
        }
        let cluster = &propagating[start..end];
        for md in orthonormalize_cluster(cluster, p, convolution.as_ref().unwrap())? {
            if md.kind == ModeKind::PropagatingRight {
                plus.push(md);
            } else {
                minus.push(md);
            }
        }
        start = end;
    }

    let digest = p.qhat_digest.clone();
    Ok((
        ModeBasis::new(GuideSide::Plus, plus, p.n, m, p.cell, p.k, digest.clone()),
        ModeBasis::new(GuideSide::Minus, minus, p.n, m, p.cell, p.k, digest),
    ))
}

fn orthonormalize_cluster(cluster: &[&FloquetMode], p: &QuadraticPencil, conv: &Mat<C64>) -> Result<Vec<FloquetMode>> {
    let dim = cluster.len();
    let d = p.dim();
    let (lp, hp) = (p.cell.period, p.cell.height);
    let k = p.k;
    // Members share one real quasimomentum; cross integrals in x1 then
    // reduce to the diagonal in j.
    let alpha = cluster.iter().map(|m| m.alpha.re).sum::<f64>() / dim as f64;
    let vs = Mat::from_fn(d, dim, |i, s| cluster[s].coeffs[i]);
    let weight = lp * hp / 2.0;

    let flux = Mat::from_fn(d, dim, |i, s| {
        let j = (i / p.n) as f64 - p.n as f64;
        vs[(i, s)] * ((alpha + 2.0 * std::f64::consts::PI * j) / lp)
    });
    let mut pm = vs.adjoint() * &flux * faer::Scale(C64::new(weight, 0.0));
    let mut qm = vs.adjoint() * conv * &vs * faer::Scale(C64::new(weight / (k * k), 0.0));
    hermitize(&mut pm);
    hermitize(&mut qm);

    let qe = qm.self_adjoint_eigen(Side::Lower).map_err(|e| Error::EigenSolver {
        size: dim,
        condition: f64::NAN,
        reason: format!("{e:?}"),
    })?;
    let qs = qe.S().column_vector();
    let qu = qe.U();
    let qmax = (0..dim).map(|i| qs[i].re).fold(0.0, f64::max);
    let qmin = (0..dim).map(|i| qs[i].re).fold(f64::INFINITY, f64::min);
    if qmin <= 1e-12 * qmax.max(1e-300) {
        return Err(Error::IndefiniteEnergy { alpha, min_eig: qmin });
    }
    let inv_sqrt = Mat::from_fn(dim, dim, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..dim {
            acc += qu[(r, i)] * qu[(c, i)].conj() / qs[i].re.sqrt();
        }
        acc
    });
    let mut g = &inv_sqrt * &pm * &inv_sqrt;
    hermitize(&mut g);
    let ge = g.self_adjoint_eigen(Side::Lower).map_err(|e| Error::EigenSolver {
        size: dim,
        condition: f64::NAN,
        reason: format!("{e:?}"),
    })?;
    let gs = ge.S().column_vector();
    let combos = &inv_sqrt * ge.U() * faer::Scale(C64::new(1.0 / k.sqrt(), 0.0));
    let new_coeffs = &vs * &combos;

    let mut out = Vec::with_capacity(dim);
    for c in 0..dim {
        let lambda = gs[c].re / k;
        if lambda.abs() < STANDING_WAVE_TOL {
            return Err(Error::StandingWave {
                alpha_re: alpha,
                alpha_im: 0.0,
                lambda,
            });
        }
        let coeffs: Vec<C64> = (0..d).map(|i| new_coeffs[(i, c)]).collect();
        let a = C64::new(alpha, 0.0);
        let residual = p.relative_residual(a, &coeffs);
        let kind = if lambda > 0.0 {
            ModeKind::PropagatingRight
        } else {
            ModeKind::PropagatingLeft
        };
        let mut md = FloquetMode::new(a, coeffs, kind, residual, p.n, p.cell);
        md.lambda = Some(lambda);
        out.push(md);
    }
    Ok(out)
}

fn hermitize(m: &mut Mat<C64>) {
    let n = m.nrows();
    for r in 0..n {
        for c in r..n {
            let avg = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
            m[(r, c)] = avg;
            m[(c, r)] = avg.conj();
        }
    }
}
