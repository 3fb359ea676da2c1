//! Geometry and coefficients of a configured waveguide: two periodic guides
//! joined by a polygonal junction.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::config::{Background, BoundaryData, BumpConfig, Config, GuideConfig};
use crate::error::{Error, Result};
use crate::fem::{
    generate_mesh_with, ComplexField, EdgeTag, InteriorLine, JunctionProblem, Mesh, Polygon, Ring, ScalarField,
};
use crate::floquet::ModeBasis;
use crate::model::{CellSpec, RefractiveIndex, Tolerances};
use crate::oracle::LapDomain;

/// C⁴ blend from 1 at `t ≤ a` to 0 at `t ≥ b`: one minus the normalized
/// integral of `(τ − a)⁴ (τ − b)⁴` from `a` to `t`.
pub fn smooth_step(t: f64, a: f64, b: f64) -> f64 {
    if t <= a {
        return 1.0;
    }
    if t >= b {
        return 0.0;
    }
    let s = (t - a) / (b - a);
    // ∫₀ˢ σ⁴(σ−1)⁴ dσ, whose value at s = 1 is 1/630.
    let p = s.powi(5) / 5.0 - 2.0 * s.powi(6) / 3.0 + 6.0 * s.powi(7) / 7.0 - s.powi(8) / 2.0 + s.powi(9) / 9.0;
    1.0 - 630.0 * p
}

/// Radial bump with a flat top of radius `inner` fading out by `outer`.
pub fn bump(cfg: &BumpConfig, x: [f64; 2]) -> f64 {
    let r = ((x[0] - cfg.center[0]).powi(2) + (x[1] - cfg.center[1]).powi(2)).sqrt();
    cfg.amplitude * smooth_step(r, cfg.inner, cfg.outer)
}

fn bump_box(cfg: &BumpConfig) -> [f64; 4] {
    [
        cfg.center[0] - cfg.outer,
        cfg.center[0] + cfg.outer,
        cfg.center[1] - cfg.outer,
        cfg.center[1] + cfg.outer,
    ]
}

/// One periodic half-guide.
#[derive(Debug, Clone)]
pub struct Guide {
    pub index: RefractiveIndex,
    pub y_bottom: f64,
    pub junction_end: f64,
}

impl Guide {
    fn from_config(g: &GuideConfig) -> Result<Guide> {
        let cell = CellSpec::new(g.period, g.height)?;
        let mut index = RefractiveIndex::from_table(cell, &g.qhat)?;
        if let Some(f) = g.positivity_floor {
            index = index.with_floor(f);
        }
        index.validate()?;
        Ok(Guide {
            index,
            y_bottom: g.y_bottom,
            junction_end: g.junction_end,
        })
    }

    pub fn cell(&self) -> CellSpec {
        self.index.cell
    }

    pub fn y_top(&self) -> f64 {
        self.y_bottom + self.index.cell.height
    }

    /// Periodic index at a global point of the guide strip.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.index.eval_periodic([x[0], x[1] - self.y_bottom])
    }
}

#[derive(Clone)]
pub struct Layout {
    pub k: f64,
    pub left: Guide,
    pub right: Guide,
    pub buffer_cells: usize,
    top: Vec<[f64; 2]>,
    bottom: Vec<[f64; 2]>,
    holes: Vec<(Ring, Option<BoundaryData>, [f64; 2], f64)>,
    q: ScalarField,
    source: Option<(ComplexField, [f64; 4])>,
    dirichlet: Option<ComplexField>,
}

impl std::fmt::Debug for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Layout")
            .field("k", &self.k)
            .field("left", &self.left)
            .field("right", &self.right)
            .field("buffer_cells", &self.buffer_cells)
            .finish_non_exhaustive()
    }
}

impl Layout {
    pub fn new(cfg: &Config) -> Result<Layout> {
        cfg.validate()?;
        let left = Guide::from_config(&cfg.left_guide)?;
        let right = Guide::from_config(&cfg.right_guide)?;
        let (xl, xr) = (left.junction_end, right.junction_end);
        let j = &cfg.junction;

        let background: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync> = match j.background {
            Background::Left => {
                let g = left.clone();
                Arc::new(move |x| g.eval(x))
            }
            Background::Right => {
                let g = right.clone();
                Arc::new(move |x| g.eval(x))
            }
            Background::Constant(c) => Arc::new(move |_| c),
        };
        let perturbation = j.perturbation;
        if let Some(p) = &perturbation {
            let b = bump_box(p);
            if b[0] <= xl || b[1] >= xr {
                return Err(Error::Config(
                    "the perturbation must be supported inside the junction".into(),
                ));
            }
        }
        let (gl, gr) = (left.clone(), right.clone());
        let q: ScalarField = Arc::new(move |x| {
            if x[0] <= xl {
                gl.eval(x)
            } else if x[0] >= xr {
                gr.eval(x)
            } else {
                background(x) + perturbation.as_ref().map_or(0.0, |p| bump(p, x))
            }
        });

        let source = match j.source {
            Some(s) => {
                let b = bump_box(&s);
                if b[0] <= xl || b[1] >= xr {
                    return Err(Error::Config("the source must be supported inside the junction".into()));
                }
                let f: ComplexField = Arc::new(move |x| C64::new(bump(&s, x), 0.0));
                Some((f, b))
            }
            None => None,
        };

        let mut holes = Vec::new();
        for hole in &j.holes {
            let pts: Vec<[f64; 2]> = (0..hole.segments)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / hole.segments as f64;
                    [
                        hole.center[0] + hole.radius * t.cos(),
                        hole.center[1] + hole.radius * t.sin(),
                    ]
                })
                .collect();
            let tag = if hole.data.is_some() {
                EdgeTag::DirichletData
            } else {
                EdgeTag::Wall
            };
            holes.push((Ring::uniform(pts, tag), hole.data, hole.center, hole.radius));
        }
        let data: Vec<(BoundaryData, [f64; 2], f64)> =
            holes.iter().filter_map(|(_, d, c, r)| d.map(|d| (d, *c, *r))).collect();
        let dirichlet: Option<ComplexField> = if data.is_empty() {
            None
        } else {
            Some(Arc::new(move |x: [f64; 2]| {
                // Data of the nearest hole boundary.
                let (d, _, _) = data
                    .iter()
                    .min_by(|a, b| {
                        let da = (((x[0] - a.1[0]).powi(2) + (x[1] - a.1[1]).powi(2)).sqrt() - a.2).abs();
                        let db = (((x[0] - b.1[0]).powi(2) + (x[1] - b.1[1]).powi(2)).sqrt() - b.2).abs();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                match d {
                    BoundaryData::PlaneWave { angle } => (C64::i() * (angle.cos() * x[0] + angle.sin() * x[1])).exp(),
                }
            }))
        };

        Ok(Layout {
            k: cfg.wavenumber,
            left,
            right,
            buffer_cells: j.buffer_cells,
            top: j.top.clone(),
            bottom: j.bottom.clone(),
            holes,
            q,
            source,
            dirichlet,
        })
    }

    /// Abscissas of the minus and plus interfaces.
    pub fn interfaces(&self) -> [f64; 2] {
        self.extent(self.buffer_cells)
    }

    fn extent(&self, cells: usize) -> [f64; 2] {
        [
            self.left.junction_end - cells as f64 * self.left.cell().period,
            self.right.junction_end + cells as f64 * self.right.cell().period,
        ]
    }

    /// Domain truncated `cells` periods beyond each junction end.
    fn polygon(&self, cells: usize, end_tags: [EdgeTag; 2]) -> Polygon {
        let [x0, x1] = self.extent(cells);
        let (l, r) = (&self.left, &self.right);
        let mut pts = vec![[x0, l.y_bottom], [l.junction_end, l.y_bottom]];
        let mut tags = vec![EdgeTag::Wall, EdgeTag::Wall];
        for p in &self.bottom {
            pts.push(*p);
            tags.push(EdgeTag::Wall);
        }
        pts.extend([
            [r.junction_end, r.y_bottom],
            [x1, r.y_bottom],
            [x1, r.y_top()],
            [r.junction_end, r.y_top()],
        ]);
        tags.extend([EdgeTag::Wall, end_tags[1], EdgeTag::Wall, EdgeTag::Wall]);
        for p in self.top.iter().rev() {
            pts.push(*p);
            tags.push(EdgeTag::Wall);
        }
        pts.extend([[l.junction_end, l.y_top()], [x0, l.y_top()]]);
        tags.extend([EdgeTag::Wall, end_tags[0]]);
        let mut poly = Polygon::new(Ring::new(pts, tags).simplified());
        for (ring, ..) in &self.holes {
            poly = poly.with_hole(ring.clone());
        }
        poly
    }

    /// Cell boundaries and junction ends inside the truncated domain.
    fn lines(&self, cells: usize) -> Vec<InteriorLine> {
        let (l, r) = (&self.left, &self.right);
        let mut lines = Vec::new();
        for i in 0..cells {
            let x = l.junction_end - i as f64 * l.cell().period;
            lines.push(InteriorLine::vertical(x, l.y_bottom, l.y_top(), None));
        }
        for i in 0..cells {
            let x = r.junction_end + i as f64 * r.cell().period;
            lines.push(InteriorLine::vertical(x, r.y_bottom, r.y_top(), None));
        }
        lines.dedup_by(|a, b| a.a == b.a && a.b == b.b);
        lines
    }

    /// Computational domain with DtN interfaces at both ends.
    pub fn domain(&self) -> Polygon {
        self.polygon(self.buffer_cells, [EdgeTag::InterfaceMinus, EdgeTag::InterfacePlus])
    }

    pub fn mesh(&self, h: f64) -> Result<Mesh> {
        generate_mesh_with(&self.domain(), h, &self.lines(self.buffer_cells))
    }

    pub fn q(&self) -> ScalarField {
        self.q.clone()
    }

    fn base_problem(&self, domain: Polygon, lines: Vec<InteriorLine>, tol: &Tolerances) -> JunctionProblem {
        let mut p = JunctionProblem::new(domain, self.k, self.q.clone());
        if let Some((f, b)) = &self.source {
            p.source = Some(f.clone());
            p.source_support = Some(*b);
        }
        p.dirichlet = self.dirichlet.clone();
        p.lines = lines;
        p.tolerances = *tol;
        p
    }

    /// Junction problem closed by the right guide's outgoing (plus) and the
    /// left guide's outgoing (minus) mode families.
    pub fn junction_problem(
        &self,
        plus: ModeBasis,
        minus: ModeBasis,
        interface_order: usize,
        tol: &Tolerances,
    ) -> JunctionProblem {
        let mut p = self.base_problem(self.domain(), self.lines(self.buffer_cells), tol);
        p.dtn_plus = Some(plus);
        p.dtn_minus = Some(minus);
        p.interface_order = interface_order;
        p
    }

    /// Domain extended by `extra_cells` periods per side with walls at the far ends.
    pub fn lap_domain(&self, extra_cells: usize, tol: &Tolerances) -> LapDomain {
        let cells = self.buffer_cells + extra_cells;
        let domain = self.polygon(cells, [EdgeTag::Wall, EdgeTag::Wall]);
        let mut lines = self.lines(cells);
        let [a, b] = self.interfaces();
        lines.push(InteriorLine::vertical(a, self.left.y_bottom, self.left.y_top(), None));
        lines.push(InteriorLine::vertical(b, self.right.y_bottom, self.right.y_top(), None));
        LapDomain {
            problem: self.base_problem(domain, lines, tol),
            far_ends: self.extent(cells),
            periods: [self.left.cell().period, self.right.cell().period],
            spans: [
                [self.left.y_bottom, self.left.y_top()],
                [self.right.y_bottom, self.right.y_top()],
            ],
            buffer_cells: extra_cells,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn smooth_step_matches_quadrature_of_the_integral_form() {
        let (a, b) = (0.1, 0.3);
        let (x, w) = gauss_legendre(10);
        let integral = |t: f64| -> f64 {
            x.iter()
                .zip(&w)
                .map(|(s, wt)| {
                    let tau = a + (t - a) * s;
                    (t - a) * wt * (tau - a).powi(4) * (tau - b).powi(4)
                })
                .sum()
        };
        let total = integral(b);
        for t in [0.12, 0.17, 0.2, 0.25, 0.29] {
            let expect = 1.0 - integral(t) / total;
            assert!((smooth_step(t, a, b) - expect).abs() < 1e-13);
        }
        assert_eq!(smooth_step(0.05, a, b), 1.0);
        assert_eq!(smooth_step(0.3, a, b), 0.0);
        assert!((smooth_step(0.2, a, b) - 0.5).abs() < 1e-14);
    }
}


#[cfg(test)]
mod shipped_polygonal {
    use super::*;

    #[test]
    fn example_two_domain_meshes_with_hole_and_lines() {
        let cfg = Config::from_toml(include_str!("../../../configs/example2_polygonal.cfg")).unwrap();
        let layout = Layout::new(&cfg).unwrap();
        assert_eq!(layout.interfaces(), [-3.0, 1.0]);
        let mesh = layout.mesh(0.1).unwrap();
        let poly = layout.domain();
        assert!((mesh.area() - poly.area()).abs() < 1e-10 * poly.area());
        assert_eq!(poly.holes.len(), 1);
        let mut used = vec![false; mesh.n_vertices()];
        for t in &mesh.triangles {
            for v in t {
                used[*v] = true;
            }
        }
        assert!(used.iter().all(|u| *u), "orphan vertices");
        for tag in [EdgeTag::InterfacePlus, EdgeTag::InterfaceMinus, EdgeTag::DirichletData] {
            assert!(!mesh.tagged_edges(tag).is_empty(), "{tag:?}");
        }
    }
}
