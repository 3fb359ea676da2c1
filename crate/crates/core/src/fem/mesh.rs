//! Triangular meshes of polygonal domains with tagged boundary edges.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    Wall,
    InterfacePlus,
    InterfaceMinus,
    DirichletData,
}

/// Closed polyline; `tags[i]` labels the edge from `points[i]` to `points[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    pub points: Vec<[f64; 2]>,
    pub tags: Vec<EdgeTag>,
}

impl Ring {
    pub fn new(points: Vec<[f64; 2]>, tags: Vec<EdgeTag>) -> Self {
        Ring { points, tags }
    }

    pub fn uniform(points: Vec<[f64; 2]>, tag: EdgeTag) -> Self {
        let tags = vec![tag; points.len()];
        Ring { points, tags }
    }

    pub fn edge(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (a, b) = self.edge(i);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0
    }

    /// Drop repeated points and merge collinear edges with equal tags.
    pub fn simplified(&self) -> Ring {
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let mut tags: Vec<EdgeTag> = Vec::new();
        for (p, t) in self.points.iter().zip(&self.tags) {
            if let Some(last) = pts.last() {
                if dist(*last, *p) < 1e-12 {
                    *tags.last_mut().unwrap() = *t;
                    continue;
                }
            }
            pts.push(*p);
            tags.push(*t);
        }
        while pts.len() > 1 && dist(pts[0], pts[pts.len() - 1]) < 1e-12 {
            pts.pop();
            tags.pop();
        }
        loop {
            let n = pts.len();
            if n <= 3 {
                break;
            }
            let mut removed = false;
            for i in 0..n {
                let prev = (i + n - 1) % n;
                let next = (i + 1) % n;
                let (a, b, c) = (pts[prev], pts[i], pts[next]);
                let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                let dot = (b[0] - a[0]) * (c[0] - b[0]) + (b[1] - a[1]) * (c[1] - b[1]);
                if cross.abs() < 1e-12 * dist(a, c).powi(2) && dot > 0.0 && tags[prev] == tags[i] {
                    pts.remove(i);
                    tags.remove(i);
                    removed = true;
                    break;
                }
            }
            if !removed {
                break;
            }
        }
        Ring { points: pts, tags }
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        let n = self.points.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = self.edge(i);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Domain bounded by an outer ring with optional holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub outer: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(outer: Ring) -> Self {
        Polygon {
            outer,
            holes: Vec::new(),
        }
    }

    /// Axis-aligned rectangle; tags are given as `[bottom, right, top, left]`.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, tags: [EdgeTag; 4]) -> Self {
        Polygon::new(Ring::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]], tags.to_vec()))
    }

    pub fn with_hole(mut self, hole: Ring) -> Self {
        self.holes.push(hole);
        self
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }

    pub fn area(&self) -> f64 {
        self.outer.signed_area().abs() - self.holes.iter().map(|h| h.signed_area().abs()).sum::<f64>()
    }

    pub fn bbox(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in &self.outer.points {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].max(p[0]);
            b[2] = b[2].min(p[1]);
            b[3] = b[3].max(p[1]);
        }
        b
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.outer.contains(p) && !self.holes.iter().any(|h| h.contains(p))
    }

    pub fn validate(&self) -> Result<()> {
        for ring in self.rings() {
            if ring.points.len() < 3 || ring.tags.len() != ring.points.len() {
                return Err(Error::Mesh(
                    "rings need at least three points and one tag per edge".into(),
                ));
            }
            if ring.points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                return Err(Error::Mesh("polygon coordinates must be finite".into()));
            }
            if ring.signed_area().abs() < 1e-14 {
                return Err(Error::Mesh("degenerate polygon with zero area".into()));
            }
        }
        let segs: Vec<([f64; 2], [f64; 2])> = self
            .rings()
            .flat_map(|r| (0..r.points.len()).map(move |i| r.edge(i)))
            .collect();
        for (i, a) in segs.iter().enumerate() {
            if dist(a.0, a.1) < 1e-14 {
                return Err(Error::Mesh("degenerate zero-length edge".into()));
            }
            for b in segs.iter().skip(i + 1) {
                if segments_cross(*a, *b) {
                    return Err(Error::Mesh(format!(
                        "polygon edges ({:?}-{:?}) and ({:?}-{:?}) intersect",
                        a.0, a.1, b.0, b.1
                    )));
                }
            }
        }
        for h in &self.holes {
            if !self.outer.contains(h.points[0]) {
                return Err(Error::Mesh("hole lies outside the outer boundary".into()));
            }
        }
        Ok(())
    }

    fn as_rectangle(&self) -> Option<[f64; 4]> {
        if !self.holes.is_empty() {
            return None;
        }
        let r = self.outer.simplified();
        if r.points.len() != 4 {
            return None;
        }
        let b = self.bbox();
        let on_corner = |p: &[f64; 2]| {
            ((p[0] - b[0]).abs() < 1e-12 || (p[0] - b[1]).abs() < 1e-12)
                && ((p[1] - b[2]).abs() < 1e-12 || (p[1] - b[3]).abs() < 1e-12)
        };
        r.points.iter().all(on_corner).then_some(b)
    }
}

/// Interior segment the mesh must resolve with edges, optionally tagged.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorLine {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub tag: Option<EdgeTag>,
}

impl InteriorLine {
    pub fn vertical(x: f64, y0: f64, y1: f64, tag: Option<EdgeTag>) -> Self {
        InteriorLine {
            a: [x, y0],
            b: [x, y1],
            tag,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Unique edges with `a < b`.
    pub edges: Vec<[usize; 2]>,
    /// Edge indices of `(v0, v1)`, `(v1, v2)`, `(v2, v0)` per triangle.
    pub tri_edges: Vec<[usize; 3]>,
    pub edge_tags: Vec<Option<EdgeTag>>,
    pub h: f64,
    locator: Locator,
}

pub fn generate_mesh(domain: &Polygon, h: f64) -> Result<Mesh> {
    generate_mesh_with(domain, h, &[])
}

/// Mesh `domain` with target size `h`, resolving the interior lines.
pub fn generate_mesh_with(domain: &Polygon, h: f64, lines: &[InteriorLine]) -> Result<Mesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Mesh(format!("mesh size must be positive, got {h}")));
    }
    domain.validate()?;
    let (vertices, triangles) = match domain.as_rectangle() {
        Some(b) if lines.iter().all(|l| is_full_vertical(l, b)) => structured(b, h, lines),
        _ => delaunay(domain, h, lines)?,
    };
    Mesh::from_parts(vertices, triangles, h, domain, lines)
}

fn is_full_vertical(l: &InteriorLine, b: [f64; 4]) -> bool {
    let (lo, hi) = (l.a[1].min(l.b[1]), l.a[1].max(l.b[1]));
    (l.a[0] - l.b[0]).abs() < 1e-12 && (lo - b[2]).abs() < 1e-12 && (hi - b[3]).abs() < 1e-12
}

fn structured(b: [f64; 4], h: f64, lines: &[InteriorLine]) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut breaks = vec![b[0], b[1]];
    for l in lines {
        if l.a[0] > b[0] + 1e-12 && l.a[0] < b[1] - 1e-12 {
            breaks.push(l.a[0]);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut xs = vec![breaks[0]];
    for w in breaks.windows(2) {
        let n = ((w[1] - w[0]) / h - 1e-9).ceil().max(1.0) as usize;
        for i in 1..=n {
            xs.push(if i == n {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * i as f64 / n as f64
            });
        }
    }
    let ny = ((b[3] - b[2]) / h - 1e-9).ceil().max(1.0) as usize;
    let ys: Vec<f64> = (0..=ny)
        .map(|i| {
            if i == ny {
                b[3]
            } else {
                b[2] + (b[3] - b[2]) * i as f64 / ny as f64
            }
        })
        .collect();
    let nx = xs.len();
    let mut vertices = Vec::with_capacity(nx * ys.len());
    for y in &ys {
        for x in &xs {
            vertices.push([*x, *y]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * ny);
    for j in 0..ny {
        for i in 0..nx - 1 {
            let (a, bb, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, bb, c]);
            triangles.push([a, c, d]);
        }
    }
    (vertices, triangles)
}

fn subdivide(a: [f64; 2], b: [f64; 2], h: f64) -> Vec<[f64; 2]> {
    let n = (dist(a, b) / h - 1e-9).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

/// Subdivide `a→b`, passing exactly through any anchor lying on it.
fn subdivide_through(a: [f64; 2], b: [f64; 2], h: f64, anchors: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
    let mut cuts: Vec<f64> = anchors
        .iter()
        .filter(|p| point_on_segment(**p, a, b))
        .map(|p| ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / len2)
        .filter(|t| *t > 1e-9 && *t < 1.0 - 1e-9)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let mut knots = vec![a];
    knots.extend(cuts.into_iter().map(at));
    knots.push(b);
    let mut out = vec![a];
    for w in knots.windows(2) {
        out.extend(subdivide(w[0], w[1], h).into_iter().skip(1));
    }
    out
}

/// Vertices and triangles of a triangulation.
type MeshParts = (Vec<[f64; 2]>, Vec<[usize; 3]>);

fn delaunay(domain: &Polygon, h: f64, lines: &[InteriorLine]) -> Result<MeshParts> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut segments: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for ring in domain.rings() {
        for i in 0..ring.points.len() {
            segments.push(ring.edge(i));
        }
    }
    for l in lines {
        segments.push((l.a, l.b));
    }
    // Outer-face exclusion goes by constraint parity, which interior lines
    // and hull-forming boundaries both defeat. Everything inside a detached
    // frame is refined instead and the centroid test below keeps the domain.
    let c = frame(domain, h);
    for i in 0..4 {
        segments.push((c[i], c[(i + 1) % 4]));
    }
    let anchors: Vec<[f64; 2]> = lines.iter().flat_map(|l| [l.a, l.b]).collect();
    // Round-off such as cos(π/2) ≈ 6e-17 trips the constraint walk into
    // reporting phantom crossings, so inputs go on a fine grid first.
    let b = domain.bbox();
    let quantum = 1e-12 * (b[1] - b[0]).max(b[3] - b[2]).max(1.0);
    let snap = |x: f64| (x / quantum).round() * quantum;
    let mut chains = Vec::with_capacity(segments.len());
    for (a, b) in segments {
        let mut chain = Vec::new();
        for p in subdivide_through(a, b, h, &anchors) {
            let v = cdt
                .insert(Point2::new(snap(p[0]), snap(p[1])))
                .map_err(|e| Error::Mesh(format!("vertex insertion failed: {e:?}")))?;
            if chain.last() != Some(&v) {
                chain.push(v);
            }
        }
        chains.push(chain);
    }
    for chain in &chains {
        for w in chain.windows(2) {
            if !cdt.can_add_constraint(w[0], w[1]) {
                let (p, q) = (cdt.vertex(w[0]).position(), cdt.vertex(w[1]).position());
                return Err(Error::Mesh(format!(
                    "boundary segment ({}, {})-({}, {}) crosses another constraint",
                    p.x, p.y, q.x, q.y
                )));
            }
            cdt.add_constraint(w[0], w[1]);
        }
    }
    let area = (c[1][0] - c[0][0]) * (c[2][1] - c[1][1]);
    let budget = (40.0 * area / (h * h)) as usize + 10_000;
    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(false)
        .with_max_allowed_area(0.45 * h * h)
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .with_max_additional_vertices(budget);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        log::warn!("mesh refinement stopped at its vertex budget");
    }
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let pos = vs.map(|v| v.position());
        let centroid = [
            (pos[0].x + pos[1].x + pos[2].x) / 3.0,
            (pos[0].y + pos[1].y + pos[2].y) / 3.0,
        ];
        if !domain.contains(centroid) {
            continue;
        }
        let mut tri = [0usize; 3];
        for (k, v) in vs.iter().enumerate() {
            let key = v.fix().index();
            let next = vertices.len();
            let id = *index.entry(key).or_insert_with(|| {
                vertices.push([pos[k].x, pos[k].y]);
                next
            });
            tri[k] = id;
        }
        triangles.push(tri);
    }
    Ok((vertices, triangles))
}

/// Rectangle around the domain, counter-clockwise from the lower left.
fn frame(domain: &Polygon, h: f64) -> [[f64; 2]; 4] {
    let b = domain.bbox();
    let m = 2.0 * h.max(0.05 * (b[1] - b[0]).max(b[3] - b[2]));
    [
        [b[0] - m, b[2] - m],
        [b[1] + m, b[2] - m],
        [b[1] + m, b[3] + m],
        [b[0] - m, b[3] + m],
    ]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Proper crossing or overlap of two segments, ignoring shared endpoints.
fn segments_cross(s: ([f64; 2], [f64; 2]), t: ([f64; 2], [f64; 2])) -> bool {
    let scale = dist(s.0, s.1).max(dist(t.0, t.1));
    let eps = 1e-12 * scale * scale;
    let d1 = orient(t.0, t.1, s.0);
    let d2 = orient(t.0, t.1, s.1);
    let d3 = orient(s.0, s.1, t.0);
    let d4 = orient(s.0, s.1, t.1);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)) {
        return true;
    }
    // Collinear overlap of positive length.
    if d1.abs() <= eps && d2.abs() <= eps {
        let dir = [s.1[0] - s.0[0], s.1[1] - s.0[1]];
        let len2 = dir[0] * dir[0] + dir[1] * dir[1];
        let proj = |p: [f64; 2]| ((p[0] - s.0[0]) * dir[0] + (p[1] - s.0[1]) * dir[1]) / len2;
        let (a, b) = (proj(t.0), proj(t.1));
        let (lo, hi) = (a.min(b), a.max(b));
        return hi.min(1.0) - lo.max(0.0) > 1e-9;
    }
    false
}

fn point_on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let len = dist(a, b);
    let tol = 1e-9 * len.max(1.0);
    if orient(a, b, p).abs() > tol * len {
        return false;
    }
    let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
    t > -1e-9 && t < 1.0 + 1e-9
}

impl Mesh {
    fn from_parts(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        h: f64,
        domain: &Polygon,
        lines: &[InteriorLine],
    ) -> Result<Mesh> {
        if triangles.is_empty() {
            return Err(Error::Mesh("triangulation produced no elements".into()));
        }
        for t in triangles.iter_mut() {
            if orient(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut counts = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    counts.push(0usize);
                    edges.len() - 1
                });
                counts[id] += 1;
                te[k] = id;
            }
            tri_edges.push(te);
        }
        let mut edge_tags = vec![None; edges.len()];
        for (e, key) in edges.iter().enumerate() {
            let (p, q) = (vertices[key[0]], vertices[key[1]]);
            if counts[e] == 1 {
                let mut found = None;
                'rings: for ring in domain.rings() {
                    for i in 0..ring.points.len() {
                        let (a, b) = ring.edge(i);
                        if point_on_segment(p, a, b) && point_on_segment(q, a, b) {
                            found = Some(ring.tags[i]);
                            break 'rings;
                        }
                    }
                }
                edge_tags[e] = Some(found.ok_or_else(|| {
                    Error::Mesh(format!("boundary edge {p:?}-{q:?} does not lie on the domain boundary"))
                })?);
            } else {
                for l in lines {
                    if let Some(tag) = l.tag {
                        if point_on_segment(p, l.a, l.b) && point_on_segment(q, l.a, l.b) {
                            edge_tags[e] = Some(tag);
                        }
                    }
                }
            }
        }
        let locator = Locator::new(&vertices, &triangles, h);
        Ok(Mesh {
            vertices,
            triangles,
            edges,
            tri_edges,
            edge_tags,
            h,
            locator,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    /// Largest circumradius-to-inradius ratio over all elements.
    pub fn quality_ratio(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                let (la, lb, lc) = (dist(b, c), dist(a, c), dist(a, b));
                let area = orient(a, b, c).abs() / 2.0;
                let s = (la + lb + lc) / 2.0;
                let circum = la * lb * lc / (4.0 * area);
                let inr = area / s;
                circum / inr
            })
            .fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                orient(a, b, c) / 2.0
            })
            .sum()
    }

    /// Edges carrying a given tag.
    pub fn tagged_edges(&self, tag: EdgeTag) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edge_tags[e] == Some(tag))
            .collect()
    }

    /// Element containing `x` with its barycentric coordinates.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 3])> {
        self.locator.locate(x, &self.vertices, &self.triangles)
    }
}

pub fn barycentric(p: [[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let det = orient(p[0], p[1], p[2]);
    let l1 = orient(x, p[1], p[2]) / det;
    let l2 = orient(p[0], x, p[2]) / det;
    [l1, l2, 1.0 - l1 - l2]
}

/// Uniform bucket grid over the mesh bounding box.
#[derive(Debug, Clone)]
struct Locator {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl Locator {
    fn new(vertices: &[[f64; 2]], triangles: &[[usize; 3]], h: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let cell = (2.0 * h).max(((hi[0] - lo[0]) * (hi[1] - lo[1]) / 4e6).sqrt());
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in triangles.iter().enumerate() {
            let mut tl = [f64::INFINITY; 2];
            let mut th = [f64::NEG_INFINITY; 2];
            for &v in tri {
                for k in 0..2 {
                    tl[k] = tl[k].min(vertices[v][k]);
                    th[k] = th[k].max(vertices[v][k]);
                }
            }
            let i0 = (((tl[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let i1 = (((th[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let j0 = (((tl[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            let j1 = (((th[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t as u32);
                }
            }
        }
        Locator {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn locate(&self, x: [f64; 2], vertices: &[[f64; 2]], triangles: &[[usize; 3]]) -> Option<(usize, [f64; 3])> {
        let fi = (x[0] - self.origin[0]) / self.cell;
        let fj = (x[1] - self.origin[1]) / self.cell;
        if fi < -1e-9 || fj < -1e-9 || fi > self.nx as f64 + 1e-9 || fj > self.ny as f64 + 1e-9 {
            return None;
        }
        let i = (fi.max(0.0) as usize).min(self.nx - 1);
        let j = (fj.max(0.0) as usize).min(self.ny - 1);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let tri = triangles[t as usize];
            let b = barycentric([vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]], x);
            let worst = b[0].min(b[1]).min(b[2]);
            if worst >= 0.0 {
                return Some((t as usize, b));
            }
            if best.as_ref().is_none_or(|(_, _, w)| worst > *w) {
                best = Some((t as usize, b, worst));
            }
        }
        match best {
            Some((t, b, w)) if w > -1e-10 => Some((t, b)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walls() -> [EdgeTag; 4] {
        [EdgeTag::Wall; 4]
    }

    #[test]
    fn unit_square_coarse() {
        let m = generate_mesh(&Polygon::rectangle(0.0, 1.0, 0.0, 1.0, walls()), 0.5).unwrap();
        assert!(m.n_triangles() >= 8);
        for (e, t) in m.edge_tags.iter().enumerate() {
            let boundary = m.tri_edges.iter().flatten().filter(|&&x| x == e).count() == 1;
            if boundary {
                assert_eq!(*t, Some(EdgeTag::Wall));
            }
        }
        assert!((m.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strip_with_tagged_interior_lines() {
        let dom = Polygon::rectangle(0.0, 4.0, 0.0, 1.0, walls());
        let lines = [
            InteriorLine::vertical(1.0, 0.0, 1.0, Some(EdgeTag::InterfaceMinus)),
            InteriorLine::vertical(3.0, 0.0, 1.0, Some(EdgeTag::InterfacePlus)),
        ];
        let m = generate_mesh_with(&dom, 0.1, &lines).unwrap();
        let plus = m.tagged_edges(EdgeTag::InterfacePlus);
        assert_eq!(plus.len(), 10);
        for e in plus {
            for v in m.edges[e] {
                assert!((m.vertices[v][0] - 3.0).abs() < 1e-12);
            }
        }
        assert_eq!(m.tagged_edges(EdgeTag::InterfaceMinus).len(), 10);
    }

    #[test]
    fn refinement_quadruples_elements() {
        let dom = Polygon::rectangle(0.0, 1.0, 0.0, 1.0, walls());
        let a = generate_mesh(&dom, 0.1).unwrap().n_triangles() as f64;
        let b = generate_mesh(&dom, 0.05).unwrap().n_triangles() as f64;
        assert!((3.5..=4.5).contains(&(b / a)));
    }

    fn lshape() -> Polygon {
        Polygon::new(Ring::uniform(
            vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]],
            EdgeTag::Wall,
        ))
    }

    #[test]
    fn unstructured_polygon_with_hole() {
        let circle: Vec<[f64; 2]> = (0..24)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 24.0;
                [0.5 + 0.2 * t.cos(), 0.5 + 0.2 * t.sin()]
            })
            .collect();
        let dom = lshape().with_hole(Ring::uniform(circle, EdgeTag::DirichletData));
        let m = generate_mesh(&dom, 0.08).unwrap();
        assert!((m.area() - dom.area()).abs() < 1e-10);
        assert!(m.quality_ratio() <= 10.0, "quality {}", m.quality_ratio());
        assert!(!m.tagged_edges(EdgeTag::DirichletData).is_empty());
        assert!(m.locate([0.5, 0.5]).is_none());
        assert!(m.locate([1.5, 0.5]).is_some());
        assert!(m.locate([1.5, 1.5]).is_none());
    }

    #[test]
    fn convex_outline_with_round_hole() {
        // The hull is made of boundary edges and the circle has round-off
        // coordinates at its poles; both once broke the triangulation.
        let circle: Vec<[f64; 2]> = (0..64)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                [0.5 * t.cos(), 0.5 * t.sin()]
            })
            .collect();
        let dom = Polygon::rectangle(-2.0, 2.0, -1.0, 1.0, walls()).with_hole(Ring::uniform(circle, EdgeTag::Wall));
        let lines = [InteriorLine::vertical(-1.0, -1.0, 1.0, None)];
        for m in [
            generate_mesh(&dom, 0.2).unwrap(),
            generate_mesh_with(&dom, 0.2, &lines).unwrap(),
        ] {
            assert!((m.area() - dom.area()).abs() < 1e-10);
            assert!(m.n_triangles() < 2000, "{} triangles", m.n_triangles());
            assert!(m.quality_ratio() <= 10.0);
        }
    }

    #[test]
    fn unstructured_refinement_scales() {
        let a = generate_mesh(&lshape(), 0.1).unwrap().n_triangles() as f64;
        let b = generate_mesh(&lshape(), 0.05).unwrap().n_triangles() as f64;
        assert!((3.0..=5.0).contains(&(b / a)), "ratio {}", b / a);
    }

    #[test]
    fn degenerate_polygons_rejected() {
        let flat = Polygon::new(Ring::uniform(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], EdgeTag::Wall));
        assert!(generate_mesh(&flat, 0.1).is_err());
        let bow = Polygon::new(Ring::uniform(
            vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
            EdgeTag::Wall,
        ));
        assert!(generate_mesh(&bow, 0.1).is_err());
        assert!(generate_mesh(&lshape(), 0.0).is_err());
    }

    #[test]
    fn locate_returns_consistent_barycentrics() {
        let m = generate_mesh(&Polygon::rectangle(0.0, 2.0, 0.0, 1.0, walls()), 0.1).unwrap();
        let x = [0.731, 0.377];
        let (t, b) = m.locate(x).unwrap();
        let p = m.triangle_points(t);
        let y = [
            b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
            b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
        ];
        assert!(dist(x, y) < 1e-12);
    }
}
