//! Finite element solutions: evaluation, norms, transfer and export.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::mesh::EdgeTag;
use super::space::{shape, FeSpace};
use crate::error::{Error, Result};
use crate::quadrature::triangle_rule;

const ERROR_RULE: usize = 6;

#[derive(Debug, Clone)]
pub struct SolutionField {
    pub space: Arc<FeSpace>,
    pub values: Vec<C64>,
}

impl SolutionField {
    pub fn new(space: Arc<FeSpace>, values: Vec<C64>) -> Self {
        assert_eq!(space.n_dofs, values.len());
        SolutionField { space, values }
    }

    pub fn zeros(space: Arc<FeSpace>) -> Self {
        let n = space.n_dofs;
        SolutionField::new(space, vec![C64::new(0.0, 0.0); n])
    }

    pub fn n_dofs(&self) -> usize {
        self.values.len()
    }

    /// Value inside element `t` at barycentric coordinates `l`.
    pub fn eval_in(&self, t: usize, l: [f64; 3]) -> C64 {
        let n = shape(l);
        self.space.elem_dofs[t]
            .iter()
            .zip(n.iter())
            .map(|(&d, &s)| self.values[d] * s)
            .sum()
    }

    /// Value at `x`, or `None` outside the mesh.
    pub fn eval(&self, x: [f64; 2]) -> Option<C64> {
        self.space.mesh.locate(x).map(|(t, l)| self.eval_in(t, l))
    }

    pub fn l2_norm(&self) -> f64 {
        let rule = triangle_rule(ERROR_RULE);
        let mut acc = 0.0;
        for t in 0..self.space.mesh.n_triangles() {
            let jac = element_jacobian(&self.space, t);
            for p in &rule {
                acc += p.weight * jac * self.eval_in(t, p.bary).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Largest modulus over wall dofs; zero by construction.
    pub fn max_wall_value(&self) -> f64 {
        self.space
            .dof_tags
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t == Some(EdgeTag::Wall))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Nodal interpolation onto another space covering a subset of this domain.
    /// Wall dofs of the target are set to exactly zero.
    pub fn interpolate_to(&self, target: Arc<FeSpace>) -> Result<SolutionField> {
        let mut values = Vec::with_capacity(target.n_dofs);
        for d in 0..target.n_dofs {
            if target.dof_tags[d] == Some(EdgeTag::Wall) {
                values.push(C64::new(0.0, 0.0));
                continue;
            }
            let x = target.dof_coords[d];
            let v = self.eval(x).ok_or_else(|| {
                Error::DomainMismatch(format!("node {x:?} of the target mesh lies outside the source mesh"))
            })?;
            values.push(v);
        }
        Ok(SolutionField::new(target, values))
    }

    /// Plain-text export: vertices, triangles, then every dof with its
    /// coordinates and complex value.
    pub fn export_text(&self) -> String {
        let mesh = &self.space.mesh;
        let mut s = String::new();
        writeln!(s, "vertices {}", mesh.n_vertices()).unwrap();
        for v in &mesh.vertices {
            writeln!(s, "{:.15e} {:.15e}", v[0], v[1]).unwrap();
        }
        writeln!(s, "triangles {}", mesh.n_triangles()).unwrap();
        for t in &mesh.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "dofs {}", self.values.len()).unwrap();
        for (x, v) in self.space.dof_coords.iter().zip(&self.values) {
            writeln!(s, "{:.15e} {:.15e} {:.15e} {:.15e}", x[0], x[1], v.re, v.im).unwrap();
        }
        s
    }

    /// Regular grid samples over the bounding box as CSV
    /// `x1,x2,re,im,abs,inside`; points outside the domain carry NaN values.
    pub fn plot_data(&self, nx: usize, ny: usize) -> String {
        let verts = &self.space.mesh.vertices;
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for v in verts {
            x0 = x0.min(v[0]);
            x1 = x1.max(v[0]);
            y0 = y0.min(v[1]);
            y1 = y1.max(v[1]);
        }
        let (nx, ny) = (nx.max(2), ny.max(2));
        let mut s = String::from("x1,x2,re,im,abs,inside\n");
        for j in 0..ny {
            let y = y0 + (y1 - y0) * j as f64 / (ny - 1) as f64;
            for i in 0..nx {
                let x = x0 + (x1 - x0) * i as f64 / (nx - 1) as f64;
                match self.eval([x, y]) {
                    Some(u) => writeln!(s, "{x:.9e},{y:.9e},{:.12e},{:.12e},{:.12e},1", u.re, u.im, u.norm()),
                    None => writeln!(s, "{x:.9e},{y:.9e},nan,nan,nan,0"),
                }
                .unwrap();
            }
        }
        s
    }
}

fn element_jacobian(space: &FeSpace, t: usize) -> f64 {
    let p = space.mesh.triangle_points(t);
    ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0])).abs()
}

fn same_mesh(a: &FeSpace, b: &FeSpace) -> bool {
    a.n_dofs == b.n_dofs && a.mesh.triangles == b.mesh.triangles && a.mesh.vertices == b.mesh.vertices
}

/// Relative L² distance `‖u − v‖ / ‖v‖` over the domain of `u`.
pub fn field_error(u: &SolutionField, v: &SolutionField) -> Result<f64> {
    let (au, av) = (u.space.mesh.area(), v.space.mesh.area());
    if (au - av).abs() > 1e-8 * au.max(av) {
        return Err(Error::DomainMismatch(format!(
            "domain areas differ: {au:.10} vs {av:.10}"
        )));
    }
    if Arc::ptr_eq(&u.space, &v.space) || same_mesh(&u.space, &v.space) {
        let rule = triangle_rule(ERROR_RULE);
        let (mut num, mut den) = (0.0, 0.0);
        for t in 0..u.space.mesh.n_triangles() {
            let jac = element_jacobian(&u.space, t);
            for p in &rule {
                let a = u.eval_in(t, p.bary);
                let b = v.eval_in(t, p.bary);
                num += p.weight * jac * (a - b).norm_sqr();
                den += p.weight * jac * b.norm_sqr();
            }
        }
        return Ok(ratio(num, den));
    }
    let mut missing = None;
    let r = relative_error(u, |x| {
        v.eval(x).unwrap_or_else(|| {
            missing.get_or_insert(x);
            C64::new(0.0, 0.0)
        })
    });
    if let Some(x) = missing {
        return Err(Error::DomainMismatch(format!(
            "point {x:?} lies outside the reference mesh"
        )));
    }
    Ok(r)
}

/// Relative L² distance from `u` to a function given pointwise.
pub fn field_error_fn(u: &SolutionField, f: &dyn Fn([f64; 2]) -> C64) -> f64 {
    relative_error(u, f)
}

fn relative_error(u: &SolutionField, mut f: impl FnMut([f64; 2]) -> C64) -> f64 {
    let rule = triangle_rule(ERROR_RULE);
    let (mut num, mut den) = (0.0, 0.0);
    for t in 0..u.space.mesh.n_triangles() {
        let p = u.space.mesh.triangle_points(t);
        let jac = element_jacobian(&u.space, t);
        for q in &rule {
            let l = q.bary;
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let b = f(x);
            num += q.weight * jac * (u.eval_in(t, l) - b).norm_sqr();
            den += q.weight * jac * b.norm_sqr();
        }
    }
    ratio(num, den)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}
