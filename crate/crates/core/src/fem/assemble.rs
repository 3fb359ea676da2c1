//! Galerkin assembly of the junction problem and the sparse direct solve.

use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64 as C64;

use super::field::SolutionField;
use super::mesh::{EdgeTag, InteriorLine, Mesh, Polygon};
use super::space::{bary_gradients, shape, shape_1d, shape_bary_derivatives, FeSpace, LOCAL_DOFS};
use crate::dtn::{build_gram_with, DtnOperator, Interface};
use crate::error::{Error, Result};
use crate::floquet::{ModeBasis, Side};
use crate::model::Tolerances;
use crate::quadrature::{gauss_legendre, triangle_rule};

pub type ScalarField = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type ComplexField = Arc<dyn Fn([f64; 2]) -> C64 + Send + Sync>;

/// Points per direction of the collapsed Gauss rule on elements (degree 9).
const ELEMENT_RULE: usize = 5;
/// Gauss points per interface edge: twice the element degree plus two.
pub const DEFAULT_INTERFACE_ORDER: usize = 8;
const RESIDUAL_LIMIT: f64 = 1e-10;

/// Bounded junction problem `Δu + (k² + iε) q u = f` with Dirichlet walls,
/// optional Dirichlet data and optional DtN conditions on the two ends.
#[derive(Clone)]
pub struct JunctionProblem {
    pub domain: Polygon,
    pub k: f64,
    /// Absorption `ε`; zero for the physical problem.
    pub absorption: f64,
    pub q: ScalarField,
    pub source: Option<ComplexField>,
    /// Bounding box `[x0, x1, y0, y1]` of the source support.
    pub source_support: Option<[f64; 4]>,
    /// Values on edges tagged `DirichletData`.
    pub dirichlet: Option<ComplexField>,
    pub dtn_plus: Option<ModeBasis>,
    pub dtn_minus: Option<ModeBasis>,
    /// Interior lines the mesh must resolve (cell and junction ends).
    pub lines: Vec<InteriorLine>,
    pub interface_order: usize,
    pub tolerances: Tolerances,
}

impl std::fmt::Debug for JunctionProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JunctionProblem")
            .field("domain", &self.domain)
            .field("k", &self.k)
            .field("absorption", &self.absorption)
            .field("source_support", &self.source_support)
            .field("has_dirichlet", &self.dirichlet.is_some())
            .field("dtn_plus", &self.dtn_plus.as_ref().map(|b| b.len()))
            .field("dtn_minus", &self.dtn_minus.as_ref().map(|b| b.len()))
            .finish()
    }
}

impl JunctionProblem {
    pub fn new(domain: Polygon, k: f64, q: ScalarField) -> Self {
        JunctionProblem {
            domain,
            k,
            absorption: 0.0,
            q,
            source: None,
            source_support: None,
            dirichlet: None,
            dtn_plus: None,
            dtn_minus: None,
            lines: Vec::new(),
            interface_order: DEFAULT_INTERFACE_ORDER,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "wavenumber must be positive, got {}",
                self.k
            )));
        }
        if !(self.absorption >= 0.0 && self.absorption.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "absorption must be nonnegative, got {}",
                self.absorption
            )));
        }
        self.domain.validate()?;
        if self.source.is_some() {
            let b = self
                .source_support
                .ok_or_else(|| Error::InvalidInput("a source needs a declared support box".into()))?;
            let corners = [[b[0], b[2]], [b[1], b[2]], [b[1], b[3]], [b[0], b[3]]];
            if b[0] >= b[1] || b[2] >= b[3] || corners.iter().any(|c| !self.domain.contains(*c)) {
                return Err(Error::InvalidInput(format!(
                    "source support {b:?} is not strictly inside the domain"
                )));
            }
        }
        Ok(())
    }

    fn mass_coefficient(&self) -> C64 {
        C64::new(self.k * self.k, self.absorption)
    }
}

/// DtN blocks and diagnostics for one side.
#[derive(Debug, Clone)]
pub struct DtnCouplingBlock {
    pub operator: DtnOperator,
    /// Interface dofs in the order of the block rows and columns.
    pub dofs: Vec<usize>,
    /// `block[(a, b)]`: contribution of trial dof `b` to test dof `a`.
    pub block: Mat<C64>,
}

/// Reduced system over the free dofs.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub space: Arc<FeSpace>,
    pub matrix: SparseColMat<usize, C64>,
    pub rhs: Vec<C64>,
    /// Free index of each dof, `None` for constrained dofs.
    pub free_map: Vec<Option<usize>>,
    /// Prescribed values of the constrained dofs (zero on walls).
    pub dirichlet_values: Vec<C64>,
    pub dtn_plus: Option<DtnCouplingBlock>,
    pub dtn_minus: Option<DtnCouplingBlock>,
}

impl AssembledSystem {
    pub fn n_free(&self) -> usize {
        self.rhs.len()
    }
}

fn is_constrained(tag: Option<EdgeTag>) -> bool {
    matches!(tag, Some(EdgeTag::Wall) | Some(EdgeTag::DirichletData))
}

/// Assemble `S = K − (k² + iε) M_q − D⁺ − D⁻` and `F = −∫ f conj(φ)`,
/// eliminating wall and Dirichlet-data dofs into the load vector.
pub fn assemble(problem: &JunctionProblem, mesh: Mesh) -> Result<AssembledSystem> {
    problem.validate()?;
    let space = Arc::new(FeSpace::new(mesh));
    let n = space.n_dofs;

    let mut free_map = vec![None; n];
    let mut n_free = 0;
    let mut dirichlet_values = vec![C64::new(0.0, 0.0); n];
    for d in 0..n {
        match space.dof_tags[d] {
            Some(EdgeTag::Wall) => {}
            Some(EdgeTag::DirichletData) => {
                let g = problem.dirichlet.as_ref().ok_or_else(|| {
                    Error::InvalidInput("domain has Dirichlet-data edges but no boundary data".into())
                })?;
                dirichlet_values[d] = g(space.dof_coords[d]);
            }
            _ => {
                free_map[d] = Some(n_free);
                n_free += 1;
            }
        }
    }

    let mut triplets: Vec<Triplet<usize, usize, C64>> = Vec::with_capacity(space.mesh.n_triangles() * 64);
    let mut rhs = vec![C64::new(0.0, 0.0); n_free];
    let scatter = |row: usize, col: usize, v: C64, triplets: &mut Vec<Triplet<usize, usize, C64>>, rhs: &mut [C64]| {
        if let Some(r) = free_map[row] {
            match free_map[col] {
                Some(c) => triplets.push(Triplet::new(r, c, v)),
                None => rhs[r] -= v * dirichlet_values[col],
            }
        }
    };

    let rule = triangle_rule(ELEMENT_RULE);
    let shapes: Vec<[f64; LOCAL_DOFS]> = rule.iter().map(|p| shape(p.bary)).collect();
    let dshapes: Vec<[[f64; 3]; LOCAL_DOFS]> = rule.iter().map(|p| shape_bary_derivatives(p.bary)).collect();
    let kappa = problem.mass_coefficient();
    let source_box = problem.source_support;

    for (t, dofs) in space.elem_dofs.iter().enumerate() {
        let p = space.mesh.triangle_points(t);
        let (g, area2) = bary_gradients(p);
        let jac = area2.abs();
        let mut stiff = [[0.0f64; LOCAL_DOFS]; LOCAL_DOFS];
        let mut mass = [[0.0f64; LOCAL_DOFS]; LOCAL_DOFS];
        let mut load = [C64::new(0.0, 0.0); LOCAL_DOFS];
        let touches_source = source_box.is_some_and(|b| {
            let xs = [p[0][0], p[1][0], p[2][0]];
            let ys = [p[0][1], p[1][1], p[2][1]];
            xs.iter().cloned().fold(f64::INFINITY, f64::min) < b[1]
                && xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > b[0]
                && ys.iter().cloned().fold(f64::INFINITY, f64::min) < b[3]
                && ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > b[2]
        });
        for (qp, pt) in rule.iter().enumerate() {
            let l = pt.bary;
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let w = pt.weight * jac;
            let qv = (problem.q)(x);
            let n_val = &shapes[qp];
            let mut grads = [[0.0; 2]; LOCAL_DOFS];
            for a in 0..LOCAL_DOFS {
                let d = dshapes[qp][a];
                for c in 0..2 {
                    grads[a][c] = d[0] * g[0][c] + d[1] * g[1][c] + d[2] * g[2][c];
                }
            }
            for a in 0..LOCAL_DOFS {
                for b in a..LOCAL_DOFS {
                    stiff[a][b] += w * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                    mass[a][b] += w * qv * n_val[a] * n_val[b];
                }
            }
            if touches_source {
                if let Some(f) = &problem.source {
                    let fv = f(x);
                    for a in 0..LOCAL_DOFS {
                        load[a] -= fv * (w * n_val[a]);
                    }
                }
            }
        }
        for a in 0..LOCAL_DOFS {
            for b in 0..LOCAL_DOFS {
                let (i, j) = if a <= b { (a, b) } else { (b, a) };
                let v = C64::new(stiff[i][j], 0.0) - kappa * mass[i][j];
                scatter(dofs[a], dofs[b], v, &mut triplets, &mut rhs);
            }
            if let Some(r) = free_map[dofs[a]] {
                rhs[r] += load[a];
            }
        }
    }

    let mut blocks = [None, None];
    for (slot, side, basis) in [
        (0, Side::Plus, problem.dtn_plus.as_ref()),
        (1, Side::Minus, problem.dtn_minus.as_ref()),
    ] {
        let Some(basis) = basis else { continue };
        let block = dtn_block(&space, side, basis, problem.interface_order, &problem.tolerances)?;
        for (a, &da) in block.dofs.iter().enumerate() {
            for (b, &db) in block.dofs.iter().enumerate() {
                scatter(da, db, -block.block[(a, b)], &mut triplets, &mut rhs);
            }
        }
        blocks[slot] = Some(block);
    }
    let [dtn_plus, dtn_minus] = blocks;

    let matrix = SparseColMat::try_new_from_triplets(n_free, n_free, &triplets)
        .map_err(|e| Error::SingularSystem(format!("sparse matrix construction failed: {e:?}")))?;
    Ok(AssembledSystem {
        space,
        matrix,
        rhs,
        free_map,
        dirichlet_values,
        dtn_plus,
        dtn_minus,
    })
}

/// Interface geometry read off the mesh edges carrying the side's tag.
fn interface_from_mesh(space: &FeSpace, tag: EdgeTag) -> Result<(Interface, Vec<usize>)> {
    let mesh = &space.mesh;
    let edges = mesh.tagged_edges(tag);
    if edges.is_empty() {
        return Err(Error::Mesh(format!("no mesh edges tagged {tag:?}")));
    }
    let x1 = mesh.vertices[mesh.edges[edges[0]][0]][0];
    let mut ys = Vec::with_capacity(edges.len() + 1);
    for &e in &edges {
        for v in mesh.edges[e] {
            let p = mesh.vertices[v];
            if (p[0] - x1).abs() > 1e-10 * (1.0 + x1.abs()) {
                return Err(Error::Mesh(format!("{tag:?} edges do not lie on one vertical line")));
            }
            ys.push(p[1]);
        }
    }
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if ys.len() != edges.len() + 1 {
        return Err(Error::Mesh(format!("{tag:?} edges do not form one segment")));
    }
    let (y0, y1) = (ys[0], ys[ys.len() - 1]);
    // Order edges bottom to top.
    let mut ordered = edges.clone();
    ordered.sort_by(|&a, &b| {
        let ya = mesh.vertices[mesh.edges[a][0]][1].min(mesh.vertices[mesh.edges[a][1]][1]);
        let yb = mesh.vertices[mesh.edges[b][0]][1].min(mesh.vertices[mesh.edges[b][1]][1]);
        ya.partial_cmp(&yb).unwrap()
    });
    Ok((
        Interface {
            x1,
            y_bottom: y0,
            height: y1 - y0,
            breakpoints: ys,
        },
        ordered,
    ))
}

fn dtn_block(
    space: &FeSpace,
    side: Side,
    basis: &ModeBasis,
    order: usize,
    tol: &Tolerances,
) -> Result<DtnCouplingBlock> {
    let tag = match side {
        Side::Plus => EdgeTag::InterfacePlus,
        Side::Minus => EdgeTag::InterfaceMinus,
    };
    let (interface, edges) = interface_from_mesh(space, tag)?;
    let longest = interface
        .breakpoints
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let phase = std::f64::consts::PI * basis.n as f64 * longest / basis.cell.height;
    if phase > 2.0 * order as f64 {
        return Err(Error::InvalidInput(format!(
            "mode traces with {} sine terms are unresolved by {order} Gauss points on interface edges of length {longest:.3e}; refine the mesh or raise the interface quadrature order",
            basis.n
        )));
    }
    let op = build_gram_with(basis, &interface, order, tol)?;
    let (gx, _) = gauss_legendre(order);

    // FE traces at the DtN quadrature nodes.
    let mut dofs: Vec<usize> = Vec::new();
    let mut local = std::collections::HashMap::new();
    let nq = op.nodes.len();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (piece, &e) in edges.iter().enumerate() {
        let mut ed = space.edge_dofs(e);
        let key = space.mesh.edges[e];
        if space.mesh.vertices[key[0]][1] > space.mesh.vertices[key[1]][1] {
            ed.reverse();
        }
        for (qi, &t) in gx.iter().enumerate() {
            let vals = shape_1d(t);
            let q = piece * order + qi;
            for (k, &d) in ed.iter().enumerate() {
                let idx = *local.entry(d).or_insert_with(|| {
                    dofs.push(d);
                    dofs.len() - 1
                });
                entries.push((idx, q, vals[k]));
            }
        }
    }
    let nd = dofs.len();
    let mut psi = Mat::<f64>::zeros(nd, nq);
    for (a, q, v) in entries {
        psi[(a, q)] += v;
    }

    let nm = op.n_modes();
    let sign = op.normal_sign();
    // Neumann pairing of each mode with each test function.
    let dmat = Mat::from_fn(nd, nm, |a, m| {
        (0..nq)
            .map(|q| op.derivative_traces[(m, q)] * (op.weights[q] * psi[(a, q)]))
            .sum::<C64>()
            * sign
    });
    // Mode coefficients of each trial function trace.
    let mut coeffs = Mat::<C64>::zeros(nm, nd);
    for b in 0..nd {
        let proj: Vec<C64> = (0..nm)
            .map(|j| {
                (0..nq)
                    .map(|q| op.traces[(j, q)].conj() * (op.weights[q] * psi[(b, q)]))
                    .sum()
            })
            .collect();
        let c = op.solve_gram(&proj);
        for m in 0..nm {
            coeffs[(m, b)] = c[m];
        }
    }
    let block = &dmat * &coeffs;
    Ok(DtnCouplingBlock {
        operator: op,
        dofs,
        block,
    })
}

/// Direct sparse solve with a residual check.
pub fn solve_sparse(matrix: &SparseColMat<usize, C64>, rhs: &[C64]) -> Result<Vec<C64>> {
    let n = rhs.len();
    if matrix.nrows() != n || matrix.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "system is {}x{} but the load vector has {n} entries",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let singular = Error::SingularSystem;
    let lu = matrix
        .sp_lu()
        .map_err(|e| singular(format!("sparse LU failed: {e:?}")))?;
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let ax: Mat<C64> = matrix * &x;
    let r = &ax - &b;
    let bnorm = b.norm_l2();
    let rel = r.norm_l2() / bnorm.max(f64::MIN_POSITIVE);
    if !rel.is_finite() || (bnorm > 0.0 && rel > RESIDUAL_LIMIT) {
        return Err(singular(format!("relative residual {rel:.3e} after the direct solve")));
    }
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

/// Solve the reduced system and expand to all dofs.
pub fn solve(system: &AssembledSystem) -> Result<SolutionField> {
    let x = solve_sparse(&system.matrix, &system.rhs)?;
    let values = system
        .free_map
        .iter()
        .enumerate()
        .map(|(d, f)| match f {
            Some(i) => x[*i],
            None if is_constrained(system.space.dof_tags[d]) => system.dirichlet_values[d],
            None => C64::new(0.0, 0.0),
        })
        .collect();
    Ok(SolutionField::new(system.space.clone(), values))
}
