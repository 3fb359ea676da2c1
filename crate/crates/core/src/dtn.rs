//! Dirichlet-to-Neumann operators built from a mode family: a boundary
//! trace is decomposed into mode traces through their Gram system, and the
//! Neumann data is the matching combination of mode derivatives.

use std::f64::consts::PI;

use faer::{Mat, Side as MatSide};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::floquet::{ModeBasis, Side};
use crate::model::Tolerances;
use crate::quadrature::gauss_legendre;

/// Relative eigenvalue cut used once the Gram matrix is flagged ill-conditioned.
const TRUNCATION_CUT: f64 = 1e-12;

/// Vertical interface `{x1} x (y_bottom, y_bottom + height)`, partitioned at
/// `breakpoints` (ascending, including both ends) for composite quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    pub x1: f64,
    pub y_bottom: f64,
    pub height: f64,
    pub breakpoints: Vec<f64>,
}

impl Interface {
    pub fn uniform(x1: f64, y_bottom: f64, height: f64, pieces: usize) -> Self {
        let pieces = pieces.max(1);
        let breakpoints = (0..=pieces)
            .map(|i| y_bottom + height * i as f64 / pieces as f64)
            .collect();
        Interface {
            x1,
            y_bottom,
            height,
            breakpoints,
        }
    }

    fn validate(&self) -> Result<()> {
        let bp = &self.breakpoints;
        let scale = self.height.abs().max(1.0);
        if bp.len() < 2
            || (bp[0] - self.y_bottom).abs() > 1e-10 * scale
            || (bp[bp.len() - 1] - self.y_bottom - self.height).abs() > 1e-10 * scale
            || bp.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidInput(
                "interface breakpoints must increase from the bottom to the top of the guide".into(),
            ));
        }
        Ok(())
    }
}

/// Boundary operator of one half-guide side.
#[derive(Debug, Clone)]
pub struct DtnOperator {
    pub side: Side,
    pub basis: ModeBasis,
    pub interface: Interface,
    /// Quadrature nodes (x2 coordinates) and weights along the interface.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Gauss points per interface piece.
    pub order: usize,
    /// Mode traces and x1-derivative traces at the nodes, one row per mode.
    pub traces: Mat<C64>,
    pub derivative_traces: Mat<C64>,
    /// `gram[(j, l)] = <phi_l, phi_j>` on the interface.
    pub gram: Mat<C64>,
    /// Diagonal scaling `1/sqrt(gram[(j, j)])`; the eigendata below belongs
    /// to the scaled matrix, whose condition is the one reported.
    scales: Vec<f64>,
    gram_vectors: Mat<C64>,
    gram_values: Vec<f64>,
    /// Condition number of the unit-diagonal Gram matrix.
    pub condition: f64,
    /// True when small Gram eigenvalues were discarded.
    pub truncated: bool,
}

/// Assemble the Gram matrix of the mode traces with a composite Gauss rule
/// of `quadrature_order` points per interface piece.
pub fn build_gram(basis: &ModeBasis, interface: &Interface, quadrature_order: usize) -> Result<DtnOperator> {
    build_gram_with(basis, interface, quadrature_order, &Tolerances::default())
}

pub fn build_gram_with(
    basis: &ModeBasis,
    interface: &Interface,
    quadrature_order: usize,
    tol: &Tolerances,
) -> Result<DtnOperator> {
    if basis.is_empty() {
        return Err(Error::InvalidInput(format!(
            "the {} mode basis is empty; raise M",
            basis.side.name()
        )));
    }
    if (interface.height - basis.cell.height).abs() > 1e-10 * basis.cell.height {
        return Err(Error::InvalidInput(format!(
            "interface height {} differs from the guide height {}",
            interface.height, basis.cell.height
        )));
    }
    interface.validate()?;
    let order = quadrature_order.max(1);
    let (gx, gw) = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in interface.breakpoints.windows(2) {
        let len = w[1] - w[0];
        for (x, wt) in gx.iter().zip(&gw) {
            nodes.push(w[0] + len * x);
            weights.push(len * wt);
        }
    }

    let n_modes = basis.len();
    let nq = nodes.len();
    let cell = basis.cell;
    let s = interface.x1.rem_euclid(cell.period);
    let nl = basis.n;
    let sines = Mat::from_fn(nl, nq, |l, q| {
        (PI * (l + 1) as f64 * (nodes[q] - interface.y_bottom) / cell.height).sin()
    });
    let mut traces = Mat::<C64>::zeros(n_modes, nq);
    let mut derivative_traces = Mat::<C64>::zeros(n_modes, nq);
    for (r, mode) in basis.modes.iter().enumerate() {
        let (value, deriv) = mode.trace_coefficients(s);
        for q in 0..nq {
            let mut a = C64::new(0.0, 0.0);
            let mut b = C64::new(0.0, 0.0);
            for l in 0..nl {
                a += value[l] * sines[(l, q)];
                b += deriv[l] * sines[(l, q)];
            }
            traces[(r, q)] = a;
            derivative_traces[(r, q)] = b;
        }
    }

    let weighted = Mat::from_fn(n_modes, nq, |r, q| traces[(r, q)] * weights[q]);
    // gram[(j, l)] = Σ_q w_q φ_l(q) conj(φ_j(q))
    let mut gram = traces.conjugate() * weighted.transpose();
    for r in 0..n_modes {
        for c in r..n_modes {
            let avg = (gram[(r, c)] + gram[(c, r)].conj()) * 0.5;
            gram[(r, c)] = avg;
            gram[(c, r)] = avg.conj();
        }
    }

    // Evanescent traces shrink geometrically with the decay rate, so the raw
    // Gram matrix is badly scaled even when the traces are well separated.
    let scales: Vec<f64> = (0..n_modes)
        .map(|r| 1.0 / gram[(r, r)].re.max(f64::MIN_POSITIVE).sqrt())
        .collect();
    let scaled = Mat::from_fn(n_modes, n_modes, |r, c| gram[(r, c)] * (scales[r] * scales[c]));
    let eig = scaled
        .self_adjoint_eigen(MatSide::Lower)
        .map_err(|e| Error::EigenSolver {
            size: n_modes,
            condition: f64::NAN,
            reason: format!("Gram eigendecomposition failed: {e:?}"),
        })?;
    let gram_values: Vec<f64> = (0..n_modes).map(|i| eig.S().column_vector()[i].re).collect();
    let gram_vectors = eig.U().to_owned();
    let lmax = gram_values.iter().cloned().fold(0.0, f64::max);
    let lmin = gram_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lmax > 0.0) || lmin <= f64::EPSILON * lmax * 1e-3 {
        let (mode_a, mode_b) = most_collinear(&gram);
        return Err(Error::GramIndefinite {
            min_eig: lmin,
            mode_a,
            mode_b,
        });
    }
    let condition = lmax / lmin;
    let truncated = condition > tol.gram_condition_warn;
    if truncated {
        log::warn!(
            "{} interface Gram matrix condition {condition:.3e} exceeds {:.1e}; discarding relative eigenvalues below {TRUNCATION_CUT:.0e}",
            basis.side.name(),
            tol.gram_condition_warn
        );
    }

    Ok(DtnOperator {
        side: basis.side,
        basis: basis.clone(),
        interface: interface.clone(),
        nodes,
        weights,
        order,
        traces,
        derivative_traces,
        gram,
        scales,
        gram_vectors,
        gram_values,
        condition,
        truncated,
    })
}

fn most_collinear(gram: &Mat<C64>) -> (usize, usize) {
    let n = gram.nrows();
    let mut best = (0, 0);
    let mut best_val = -1.0;
    for i in 0..n {
        for j in i + 1..n {
            let denom = (gram[(i, i)].re * gram[(j, j)].re).sqrt();
            let v = gram[(i, j)].norm() / denom.max(1e-300);
            if v > best_val {
                best_val = v;
                best = (i, j);
            }
        }
    }
    best
}

impl DtnOperator {
    pub fn n_modes(&self) -> usize {
        self.traces.nrows()
    }

    /// Apply the (possibly truncated) inverse of the Gram matrix.
    pub fn solve_gram(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n_modes();
        let lmax = self.gram_values.iter().cloned().fold(0.0, f64::max);
        let mut proj = vec![C64::new(0.0, 0.0); n];
        for (i, p) in proj.iter_mut().enumerate() {
            let lam = self.gram_values[i];
            if self.truncated && lam < TRUNCATION_CUT * lmax {
                continue;
            }
            let acc: C64 = b
                .iter()
                .zip(&self.scales)
                .enumerate()
                .map(|(r, (br, sr))| self.gram_vectors[(r, i)].conj() * br * sr)
                .sum();
            *p = acc / lam;
        }
        (0..n)
            .map(|r| (0..n).map(|i| self.gram_vectors[(r, i)] * proj[i]).sum::<C64>() * self.scales[r])
            .collect()
    }

    /// Right-hand side `b_j = <g, phi_j>` for samples `g` at the nodes.
    pub fn project(&self, g: &[C64]) -> Result<Vec<C64>> {
        if g.len() != self.nodes.len() {
            return Err(Error::InvalidInput(format!(
                "trace has {} samples but the interface has {} quadrature nodes",
                g.len(),
                self.nodes.len()
            )));
        }
        Ok((0..self.n_modes())
            .map(|j| {
                g.iter()
                    .enumerate()
                    .map(|(q, gq)| self.traces[(j, q)].conj() * *gq * self.weights[q])
                    .sum()
            })
            .collect())
    }

    /// Mode coefficients of a sampled boundary trace.
    pub fn decompose_trace(&self, g: &[C64]) -> Result<Vec<C64>> {
        let b = self.project(g)?;
        Ok(self.solve_gram(&b))
    }

    /// Neumann data at the nodes for given mode coefficients: the outward
    /// normal derivative, `∂x1` on the plus side and `-∂x1` on the minus side.
    pub fn neumann_from_coefficients(&self, c: &[C64]) -> Vec<C64> {
        let sign = self.normal_sign();
        (0..self.nodes.len())
            .map(|q| {
                (0..self.n_modes())
                    .map(|m| c[m] * self.derivative_traces[(m, q)])
                    .sum::<C64>()
                    * sign
            })
            .collect()
    }

    pub fn neumann_functional(&self, g: &[C64]) -> Result<Vec<C64>> {
        let c = self.decompose_trace(g)?;
        Ok(self.neumann_from_coefficients(&c))
    }

    /// Trace samples of `Σ c_m phi_m`.
    pub fn reconstruct(&self, c: &[C64]) -> Vec<C64> {
        (0..self.nodes.len())
            .map(|q| (0..self.n_modes()).map(|m| c[m] * self.traces[(m, q)]).sum())
            .collect()
    }

    pub fn normal_sign(&self) -> f64 {
        match self.side {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    /// Largest ratio `‖Neumann trace‖ / ‖trace‖` over single modes, a
    /// recorded proxy for the operator norm of this truncation.
    pub fn bound_constant(&self) -> f64 {
        let mut best: f64 = 0.0;
        for m in 0..self.n_modes() {
            let mut num = 0.0;
            let mut den = 0.0;
            for q in 0..self.nodes.len() {
                num += self.weights[q] * self.derivative_traces[(m, q)].norm_sqr();
                den += self.weights[q] * self.traces[(m, q)].norm_sqr();
            }
            best = best.max((num / den).sqrt());
        }
        best
    }
}
