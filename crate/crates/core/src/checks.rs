//! Quick invariant suite behind the `check` command.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::dtn::{build_gram, Interface};
use crate::error::Result;
use crate::fem::{assemble, field_error_fn, generate_mesh, solve, EdgeTag, JunctionProblem, Polygon};
use crate::floquet::{build_pencil, classify_and_orthonormalize, solve_modes, FloquetMode, ModeKind};
use crate::model::{CellSpec, RefractiveIndex, Tolerances};
use crate::oracle::{constant_q_modes, laplace_spectrum, Direction};
use crate::quadrature::gauss_legendre;

/// Periodic index of the first shipped example, as `[j, l, re, im]` rows.
pub const EXAMPLE_ONE_TABLE: [[f64; 4]; 7] = [
    [0.0, 0.0, 2.0, 0.0],
    [-7.0, 1.0, 2.0, -4.0],
    [7.0, 1.0, 2.0, 4.0],
    [-3.0, 2.0, 3.0, 0.0],
    [3.0, 2.0, 3.0, 0.0],
    [-1.0, 3.0, 1.0, 0.2],
    [1.0, 3.0, 1.0, -0.2],
];

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn run(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Largest distance from each expected value to its nearest computed one,
/// and the count mismatch.
pub fn match_spectrum(computed: &[C64], expected: &[C64]) -> f64 {
    if computed.len() != expected.len() {
        return f64::INFINITY;
    }
    expected
        .iter()
        .map(|e| computed.iter().map(|c| (c - e).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Energy `k ∫ q φ_s conj(φ_r)` and flux `-i ∫ ∂φ_s/∂x1 conj(φ_r)` over one
/// cell by tensor Gauss quadrature.
pub fn cell_forms(
    modes: &[&FloquetMode],
    q: &RefractiveIndex,
    k: f64,
    points: usize,
) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let cell = q.cell;
    let (x, w) = gauss_legendre(points);
    let n = modes.len();
    let mut energy = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut flux = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            let p = [a * cell.period, b * cell.height];
            let wt = wa * wb * cell.period * cell.height;
            let qv = q.eval_periodic(p);
            let vals: Vec<C64> = modes.iter().map(|m| m.eval_local(p[0], p[1], false)).collect();
            let ders: Vec<C64> = modes.iter().map(|m| m.eval_local(p[0], p[1], true)).collect();
            for r in 0..n {
                for s in 0..n {
                    energy[r][s] += vals[s] * vals[r].conj() * (k * qv * wt);
                    flux[r][s] += -C64::i() * ders[s] * vals[r].conj() * wt;
                }
            }
        }
    }
    (energy, flux)
}

pub fn run_checks() -> Vec<CheckResult> {
    let tol = Tolerances::default();
    let cell = CellSpec::unit();
    let mut out = Vec::new();

    out.push(run("empty guide spectrum", || {
        let q = RefractiveIndex::from_table(cell, &[])?;
        let p = build_pencil(&q, 1.0, cell, 8)?;
        let modes = solve_modes(&p, 5, &tol)?;
        let alphas: Vec<C64> = modes.iter().map(|m| m.alpha).collect();
        let err = match_spectrum(&alphas, &laplace_spectrum(cell, 5));
        Ok((err <= 1e-8, format!("max deviation {err:.3e}")))
    }));

    out.push(run("constant index dispersion", || {
        let (c, k) = (2.0, PI);
        let q = RefractiveIndex::constant(cell, c);
        let p = build_pencil(&q, k, cell, 8)?;
        let modes = solve_modes(&p, 4, &tol)?;
        let (plus, minus) = classify_and_orthonormalize(&modes, &p, 4, &tol)?;
        let expected = constant_q_modes(c, k, cell, 4);
        let alphas: Vec<C64> = modes.iter().map(|m| m.alpha).collect();
        let exp_alphas: Vec<C64> = expected.iter().map(|m| m.alpha).collect();
        let err = match_spectrum(&alphas, &exp_alphas);
        let right = plus
            .modes
            .iter()
            .filter(|m| m.kind == ModeKind::PropagatingRight)
            .count();
        let left = minus
            .modes
            .iter()
            .filter(|m| m.kind == ModeKind::PropagatingLeft)
            .count();
        let want = expected
            .iter()
            .filter(|m| m.direction == Direction::PropagatingRight)
            .count();
        Ok((
            err <= 1e-7 && right == want && left == want,
            format!("max deviation {err:.3e}, {right} right and {left} left propagating"),
        ))
    }));

    out.push(run("conjugation symmetry", || {
        let q = RefractiveIndex::from_table(cell, &EXAMPLE_ONE_TABLE)?;
        let p = build_pencil(&q, 1.0, cell, 8)?;
        let modes = solve_modes(&p, 3, &tol)?;
        let alphas: Vec<C64> = modes.iter().map(|m| m.alpha).collect();
        let worst = alphas
            .iter()
            .map(|a| {
                let mut t = -a.conj();
                if t.re <= -PI + 1e-5 {
                    t.re += 2.0 * PI;
                }
                alphas.iter().map(|b| (b - t).norm()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        Ok((
            worst <= 1e-6,
            format!("{} modes, worst partner distance {worst:.3e}", alphas.len()),
        ))
    }));

    out.push(run("propagating orthonormalization", || {
        let (c, k) = (2.0, PI);
        let q = RefractiveIndex::constant(cell, c);
        let p = build_pencil(&q, k, cell, 8)?;
        let modes = solve_modes(&p, 2, &tol)?;
        let (plus, minus) = classify_and_orthonormalize(&modes, &p, 2, &tol)?;
        let prop: Vec<&FloquetMode> = plus
            .modes
            .iter()
            .chain(&minus.modes)
            .filter(|m| m.kind.is_propagating())
            .collect();
        let (energy, flux) = cell_forms(&prop, &q, k, 24);
        let mut worst: f64 = 0.0;
        for (r, m) in prop.iter().enumerate() {
            for s in 0..prop.len() {
                let delta = if r == s { 1.0 } else { 0.0 };
                if (m.alpha.re - prop[s].alpha.re).abs() < tol.cluster_radius() {
                    worst = worst.max((energy[r][s] - delta).norm());
                }
            }
            worst = worst.max((flux[r][r] - m.lambda.unwrap_or(f64::NAN)).norm());
        }
        Ok((worst <= 1e-8, format!("worst identity defect {worst:.3e}")))
    }));

    out.push(run("Gram reproducing property", || {
        let q = RefractiveIndex::from_table(cell, &EXAMPLE_ONE_TABLE)?;
        let p = build_pencil(&q, 1.0, cell, 8)?;
        let modes = solve_modes(&p, 3, &tol)?;
        let (plus, _) = classify_and_orthonormalize(&modes, &p, 3, &tol)?;
        let op = build_gram(&plus, &Interface::uniform(0.5, 0.0, 1.0, 16), 8)?;
        let mut worst: f64 = 0.0;
        for i in 0..op.n_modes() {
            let mut e = vec![C64::new(0.0, 0.0); op.n_modes()];
            e[i] = C64::new(1.0, 0.0);
            let c = op.decompose_trace(&op.reconstruct(&e))?;
            worst = worst.max(c.iter().zip(&e).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        }
        Ok((
            worst <= 1e-10,
            format!("condition {:.3e}, worst defect {worst:.3e}", op.condition),
        ))
    }));

    out.push(run("cubic element order", || {
        let exact = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).sin();
        let k = 1.5;
        let mut errs = Vec::new();
        for h in [0.25, 0.125] {
            let mut prob = JunctionProblem::new(
                Polygon::rectangle(0.0, 1.0, 0.0, 1.0, [EdgeTag::Wall; 4]),
                k,
                Arc::new(|_| 1.0),
            );
            prob.source = Some(Arc::new(move |x| C64::new((k * k - 2.0 * PI * PI) * exact(x), 0.0)));
            prob.source_support = Some([1e-9, 1.0 - 1e-9, 1e-9, 1.0 - 1e-9]);
            let u = solve(&assemble(&prob, generate_mesh(&prob.domain, h)?)?)?;
            errs.push(field_error_fn(&u, &|x| C64::new(exact(x), 0.0)));
        }
        let order = (errs[0] / errs[1]).log2();
        Ok((order >= 3.5, format!("observed order {order:.2}")))
    }));

    out
}
