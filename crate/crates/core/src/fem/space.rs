//! Cubic Lagrange space on a triangular mesh.

use super::mesh::{EdgeTag, Mesh};

/// Local node order: three vertices, two nodes on each edge `(v0,v1)`,
/// `(v1,v2)`, `(v2,v0)` listed from the edge's first vertex, then the centroid.
pub const LOCAL_DOFS: usize = 10;

/// Shape function values at barycentric coordinates `l`.
pub fn shape(l: [f64; 3]) -> [f64; LOCAL_DOFS] {
    let v = |a: f64| 0.5 * a * (3.0 * a - 1.0) * (3.0 * a - 2.0);
    let e = |a: f64, b: f64| 4.5 * a * b * (3.0 * a - 1.0);
    [
        v(l[0]),
        v(l[1]),
        v(l[2]),
        e(l[0], l[1]),
        e(l[1], l[0]),
        e(l[1], l[2]),
        e(l[2], l[1]),
        e(l[2], l[0]),
        e(l[0], l[2]),
        27.0 * l[0] * l[1] * l[2],
    ]
}

/// Derivatives of each shape function with respect to the three barycentric coordinates.
pub fn shape_bary_derivatives(l: [f64; 3]) -> [[f64; 3]; LOCAL_DOFS] {
    let dv = |a: f64| 0.5 * (27.0 * a * a - 18.0 * a + 2.0);
    // d/da and d/db of 4.5 a b (3a - 1)
    let de = |a: f64, b: f64| (4.5 * b * (6.0 * a - 1.0), 4.5 * a * (3.0 * a - 1.0));
    let mut out = [[0.0; 3]; LOCAL_DOFS];
    for i in 0..3 {
        out[i][i] = dv(l[i]);
    }
    let pairs = [(0, 1), (1, 0), (1, 2), (2, 1), (2, 0), (0, 2)];
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let (da, db) = de(l[a], l[b]);
        out[3 + k][a] = da;
        out[3 + k][b] = db;
    }
    out[9] = [27.0 * l[1] * l[2], 27.0 * l[0] * l[2], 27.0 * l[0] * l[1]];
    out
}

/// 1D cubic Lagrange basis on `[0, 1]` with nodes `0, 1/3, 2/3, 1`.
pub fn shape_1d(t: f64) -> [f64; 4] {
    let (a, b, c, d) = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0);
    [
        (t - b) * (t - c) * (t - d) / ((a - b) * (a - c) * (a - d)),
        (t - a) * (t - c) * (t - d) / ((b - a) * (b - c) * (b - d)),
        (t - a) * (t - b) * (t - d) / ((c - a) * (c - b) * (c - d)),
        (t - a) * (t - b) * (t - c) / ((d - a) * (d - b) * (d - c)),
    ]
}

/// Gradients of the barycentric coordinates and twice the signed area.
pub fn bary_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    let g = [
        [(p[1][1] - p[2][1]) / area2, (p[2][0] - p[1][0]) / area2],
        [(p[2][1] - p[0][1]) / area2, (p[0][0] - p[2][0]) / area2],
        [(p[0][1] - p[1][1]) / area2, (p[1][0] - p[0][0]) / area2],
    ];
    (g, area2)
}

/// Degree-of-freedom layout: vertices, two per edge, one per element.
#[derive(Debug, Clone)]
pub struct FeSpace {
    pub mesh: Mesh,
    pub n_dofs: usize,
    pub elem_dofs: Vec<[usize; LOCAL_DOFS]>,
    pub dof_coords: Vec<[f64; 2]>,
    /// Boundary tag of each dof; corners resolve to the most constraining tag.
    pub dof_tags: Vec<Option<EdgeTag>>,
}

fn tag_rank(t: Option<EdgeTag>) -> u8 {
    match t {
        None => 0,
        Some(EdgeTag::InterfacePlus) | Some(EdgeTag::InterfaceMinus) => 1,
        Some(EdgeTag::Wall) => 2,
        Some(EdgeTag::DirichletData) => 3,
    }
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> FeSpace {
        let nv = mesh.n_vertices();
        let ne = mesh.edges.len();
        let nt = mesh.n_triangles();
        let n_dofs = nv + 2 * ne + nt;
        let mut dof_coords = vec![[0.0; 2]; n_dofs];
        let mut dof_tags: Vec<Option<EdgeTag>> = vec![None; n_dofs];
        dof_coords[..nv].copy_from_slice(&mesh.vertices);
        for (e, key) in mesh.edges.iter().enumerate() {
            let (a, b) = (mesh.vertices[key[0]], mesh.vertices[key[1]]);
            for k in 0..2 {
                let t = (k + 1) as f64 / 3.0;
                dof_coords[nv + 2 * e + k] = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            }
            let tag = mesh.edge_tags[e];
            // Interior tagged lines do not constrain dofs.
            let boundary_tag = tag;
            for d in [key[0], key[1], nv + 2 * e, nv + 2 * e + 1] {
                if tag_rank(boundary_tag) > tag_rank(dof_tags[d]) {
                    dof_tags[d] = boundary_tag;
                }
            }
        }
        let mut elem_dofs = Vec::with_capacity(nt);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut dofs = [0usize; LOCAL_DOFS];
            dofs[..3].copy_from_slice(tri);
            for k in 0..3 {
                let a = tri[k];
                let e = mesh.tri_edges[t][k];
                let first = nv + 2 * e;
                let (near_a, near_b) = if mesh.edges[e][0] == a {
                    (first, first + 1)
                } else {
                    (first + 1, first)
                };
                dofs[3 + 2 * k] = near_a;
                dofs[4 + 2 * k] = near_b;
            }
            dofs[9] = nv + 2 * ne + t;
            let p = mesh.triangle_points(t);
            dof_coords[dofs[9]] = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            elem_dofs.push(dofs);
        }
        FeSpace {
            mesh,
            n_dofs,
            elem_dofs,
            dof_coords,
            dof_tags,
        }
    }

    /// Dofs on edge `e` ordered along the edge from its first vertex.
    pub fn edge_dofs(&self, e: usize) -> [usize; 4] {
        let nv = self.mesh.n_vertices();
        let key = self.mesh.edges[e];
        [key[0], nv + 2 * e, nv + 2 * e + 1, key[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node_barys() -> [[f64; 3]; LOCAL_DOFS] {
        let t = 1.0 / 3.0;
        let s = 2.0 / 3.0;
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [s, t, 0.0],
            [t, s, 0.0],
            [0.0, s, t],
            [0.0, t, s],
            [t, 0.0, s],
            [s, 0.0, t],
            [t, t, t],
        ]
    }

    #[test]
    fn nodal_basis_property() {
        for (i, l) in node_barys().iter().enumerate() {
            let v = shape(*l);
            for (j, x) in v.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((x - expect).abs() < 1e-13, "shape {j} at node {i}");
            }
        }
    }

    #[test]
    fn partition_of_unity_and_derivative_consistency() {
        let l = [0.2, 0.3, 0.5];
        assert!((shape(l).iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let d = shape_bary_derivatives(l);
        let h = 1e-6;
        for k in 0..3 {
            let mut lp = l;
            let mut lm = l;
            lp[k] += h;
            lm[k] -= h;
            let (fp, fm) = (shape(lp), shape(lm));
            for i in 0..LOCAL_DOFS {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - d[i][k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn one_dimensional_basis_is_nodal() {
        for (i, t) in [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0].iter().enumerate() {
            let v = shape_1d(*t);
            for (j, x) in v.iter().enumerate() {
                assert!((x - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }
}
