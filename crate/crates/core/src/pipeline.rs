//! End-to-end runs: modes of both guides, DtN closure, FEM solve,
//! convergence sweeps and on-disk artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::fem::{assemble, field_error, solve, Mesh, SolutionField};
use crate::floquet::{
    build_pencil, classify_and_orthonormalize, solve_modes_with, BasisDocument, EigenBackend, ModeBasis, Side,
};
use crate::layout::{Guide, Layout};
use crate::model::Tolerances;
use crate::oracle::lap_reference;

/// Outgoing families of one guide and how they were obtained.
#[derive(Debug, Clone)]
pub struct GuideModes {
    pub plus: ModeBasis,
    pub minus: ModeBasis,
    pub info: ModeInfo,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModeInfo {
    pub key: String,
    pub cached: bool,
    pub fourier_dim: usize,
    pub retained: usize,
    pub max_residual: f64,
    pub seconds: f64,
}

fn cache_paths(dir: &Path, key: &str) -> [PathBuf; 2] {
    [
        dir.join(format!("{key}-plus.json")),
        dir.join(format!("{key}-minus.json")),
    ]
}

fn read_cached(dir: &Path, key: &str) -> Option<(ModeBasis, ModeBasis)> {
    let [p, m] = cache_paths(dir, key);
    let load = |path: &Path| -> Option<ModeBasis> {
        let text = std::fs::read_to_string(path).ok()?;
        let doc: BasisDocument = serde_json::from_str(&text).ok()?;
        if doc.key != key {
            return None;
        }
        ModeBasis::from_document(&doc).ok()
    };
    Some((load(&p)?, load(&m)?))
}

/// Modes of a guide, read from `cache` when a matching artifact exists.
pub fn guide_modes(
    guide: &Guide,
    k: f64,
    n: usize,
    m: usize,
    tol: &Tolerances,
    backend: EigenBackend,
    cache: Option<&Path>,
) -> Result<GuideModes> {
    let start = Instant::now();
    let digest = guide.index.digest();
    let key = ModeBasis::cache_key(&digest, k, n, m);
    let summarize = |plus: &ModeBasis, minus: &ModeBasis, cached: bool, start: Instant| ModeInfo {
        key: key.clone(),
        cached,
        fourier_dim: (2 * n + 1) * n,
        retained: plus.len() + minus.len(),
        max_residual: plus
            .modes
            .iter()
            .chain(&minus.modes)
            .map(|md| md.residual)
            .fold(0.0, f64::max),
        seconds: start.elapsed().as_secs_f64(),
    };
    if let Some(dir) = cache {
        if let Some((plus, minus)) = read_cached(dir, &key) {
            let info = summarize(&plus, &minus, true, start);
            return Ok(GuideModes { plus, minus, info });
        }
    }
    let pencil = build_pencil(&guide.index, k, guide.cell(), n)?;
    let modes = solve_modes_with(&pencil, m, tol, backend)?;
    let (plus, minus) = classify_and_orthonormalize(&modes, &pencil, m, tol)?;
    if let Some(dir) = cache {
        std::fs::create_dir_all(dir)?;
        let [p, q] = cache_paths(dir, &key);
        std::fs::write(p, serde_json::to_string(&plus.to_document())?)?;
        std::fs::write(q, serde_json::to_string(&minus.to_document())?)?;
    }
    let info = summarize(&plus, &minus, false, start);
    Ok(GuideModes { plus, minus, info })
}

/// Everything that does not depend on the strip count used for the closure.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub layout: Layout,
    /// Right guide's plus family and left guide's minus family at the largest M.
    pub plus: ModeBasis,
    pub minus: ModeBasis,
    pub right_info: ModeInfo,
    pub left_info: ModeInfo,
    pub mesh: Mesh,
    pub timings: BTreeMap<String, f64>,
}

pub fn prepare(cfg: &Config, m: usize, cache: Option<&Path>) -> Result<Prepared> {
    let mut timings = BTreeMap::new();
    let layout = Layout::new(cfg).map_err(|e| e.at("config"))?;
    let (k, n, tol, backend) = (
        cfg.wavenumber,
        cfg.truncation.n,
        &cfg.tolerances,
        cfg.eigensolver.backend,
    );
    let right = guide_modes(&layout.right, k, n, m, tol, backend, cache).map_err(|e| e.at("right guide modes"))?;
    timings.insert("right_modes".into(), right.info.seconds);
    let left = guide_modes(&layout.left, k, n, m, tol, backend, cache).map_err(|e| e.at("left guide modes"))?;
    timings.insert("left_modes".into(), left.info.seconds);
    let t = Instant::now();
    let mesh = layout.mesh(cfg.mesh.h).map_err(|e| e.at("mesh"))?;
    timings.insert("mesh".into(), t.elapsed().as_secs_f64());
    Ok(Prepared {
        layout,
        plus: right.plus,
        minus: left.minus,
        right_info: right.info,
        left_info: left.info,
        mesh,
        timings,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SideReport {
    pub side: Side,
    pub modes: usize,
    /// Propagating modes in the family.
    pub propagating: usize,
    pub evanescent: usize,
    pub gram_condition: f64,
    pub gram_truncated: bool,
    /// Largest Neumann-to-trace ratio over single modes.
    pub dtn_bound: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeshReport {
    pub h: f64,
    pub vertices: usize,
    pub triangles: usize,
    pub dofs: usize,
    pub free_dofs: usize,
    pub quality_ratio: f64,
}

/// Outcome of one closure at strip count `m`.
#[derive(Debug, Clone)]
pub struct ClosedSolve {
    pub field: SolutionField,
    pub sides: Vec<SideReport>,
    pub mesh: MeshReport,
    pub warnings: Vec<String>,
    pub seconds: f64,
}

/// Solve with the prepared families truncated to `m` strips.
pub fn solve_prepared(cfg: &Config, prep: &Prepared, m: usize) -> Result<ClosedSolve> {
    let start = Instant::now();
    let plus = prep.plus.truncated(m);
    let minus = prep.minus.truncated(m);
    let mut warnings = Vec::new();
    for b in [&plus, &minus] {
        if b.len() == b.propagating {
            let w = format!(
                "{} family has no evanescent modes at M = {m}; the DtN closure is propagating-only",
                b.side.name()
            );
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    let problem = prep
        .layout
        .junction_problem(plus, minus, cfg.mesh.interface_order, &cfg.tolerances);
    let system = assemble(&problem, prep.mesh.clone()).map_err(|e| e.at("assemble"))?;
    let field = solve(&system).map_err(|e| e.at("solve"))?;
    let mut sides = Vec::new();
    for block in [&system.dtn_plus, &system.dtn_minus].into_iter().flatten() {
        let op = &block.operator;
        if op.truncated {
            warnings.push(format!(
                "{} Gram matrix condition {:.3e} triggered truncation",
                op.side.name(),
                op.condition
            ));
        }
        sides.push(SideReport {
            side: op.side,
            modes: op.basis.len(),
            propagating: op.basis.propagating,
            evanescent: op.basis.len() - op.basis.propagating,
            gram_condition: op.condition,
            gram_truncated: op.truncated,
            dtn_bound: op.bound_constant(),
            max_residual: op.basis.modes.iter().map(|md| md.residual).fold(0.0, f64::max),
        });
    }
    let mesh = MeshReport {
        h: cfg.mesh.h,
        vertices: system.space.mesh.n_vertices(),
        triangles: system.space.mesh.n_triangles(),
        dofs: system.space.n_dofs,
        free_dofs: system.n_free(),
        quality_ratio: system.space.mesh.quality_ratio(),
    };
    Ok(ClosedSolve {
        field,
        sides,
        mesh,
        warnings,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Run record written next to the solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub wavenumber: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub eigensolver: EigenBackend,
    pub tolerances: Tolerances,
    pub lap_epsilon: f64,
    pub interface_quadrature_order: usize,
    pub right_guide_modes: ModeInfo,
    pub left_guide_modes: ModeInfo,
    pub sides: Vec<SideReport>,
    pub mesh: MeshReport,
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub config: Config,
}

pub fn bases_dir(out: &Path) -> PathBuf {
    out.join("bases")
}

/// Full solve: writes `field.txt`, `field.csv`, `manifest.json` and the
/// mode-basis cache under `out`.
pub fn run_solve(cfg: &Config, out: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out)?;
    let cache = cfg.output.cache_bases.then(|| bases_dir(out));
    let m = cfg.truncation.m;
    let prep = prepare(cfg, m, cache.as_deref())?;
    let run = solve_prepared(cfg, &prep, m)?;
    let mut timings = prep.timings.clone();
    timings.insert("assemble_and_solve".into(), run.seconds);

    let field_path = out.join("field.txt");
    std::fs::write(&field_path, run.field.export_text())?;
    let plot_path = out.join("field.csv");
    let [nx, ny] = cfg.output.plot_grid;
    std::fs::write(&plot_path, emit_field_plot_data(&run.field, nx, ny))?;
    let manifest_path = out.join("manifest.json");
    let mut outputs = vec![
        field_path.display().to_string(),
        plot_path.display().to_string(),
        manifest_path.display().to_string(),
    ];
    if let Some(c) = &cache {
        outputs.push(c.display().to_string());
    }
    let manifest = Manifest {
        tool: "guidewave".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        wavenumber: cfg.wavenumber,
        n: cfg.truncation.n,
        m,
        eigensolver: cfg.eigensolver.backend,
        tolerances: cfg.tolerances,
        lap_epsilon: cfg.lap_epsilon(),
        interface_quadrature_order: cfg.mesh.interface_order,
        right_guide_modes: prep.right_info.clone(),
        left_guide_modes: prep.left_info.clone(),
        sides: run.sides,
        mesh: run.mesh,
        timings,
        outputs,
        warnings: run.warnings,
        config: cfg.clone(),
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Regular-grid samples `x1,x2,re,im,abs,inside` of a solution.
pub fn emit_field_plot_data(field: &SolutionField, nx: usize, ny: usize) -> String {
    field.plot_data(nx, ny)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Closure with this many strips on the same mesh.
    SelfRichest(usize),
    /// Absorbing truncated-guide solve.
    Lap,
}

impl std::str::FromStr for Reference {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self" | "self_richest" => Ok(Reference::SelfRichest(10)),
            "lap" => Ok(Reference::Lap),
            other => Err(Error::InvalidInput(format!(
                "unknown reference {other:?}; use self or lap"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub reference: String,
    pub rows: Vec<(usize, f64)>,
    /// Least-squares slope of `ln(error)` against `M`.
    pub slope: f64,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("M,relative_error\n");
        for (m, e) in &self.rows {
            writeln!(s, "{m},{e:.12e}").unwrap();
        }
        writeln!(s, "# reference,{}", self.reference).unwrap();
        writeln!(s, "# slope,{:.12e}", self.slope).unwrap();
        s
    }
}

/// Least-squares slope of `ln(error)` against `M`.
pub fn log_slope(rows: &[(usize, f64)]) -> f64 {
    let n = rows.len() as f64;
    if rows.len() < 2 {
        return f64::NAN;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.max(f64::MIN_POSITIVE).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Relative L² error of the closure at each `M` against `reference`.
pub fn run_convergence(
    cfg: &Config,
    ms: &[usize],
    reference: Reference,
    cache: Option<&Path>,
) -> Result<ConvergenceTable> {
    if ms.is_empty() {
        return Err(Error::InvalidInput("the M list is empty".into()));
    }
    if ms.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("the M list must be ascending".into()));
    }
    let mut m_max = *ms.last().unwrap();
    if let Reference::SelfRichest(r) = reference {
        if r <= m_max {
            return Err(Error::InvalidInput(format!(
                "reference M = {r} must exceed the largest swept M = {m_max}"
            )));
        }
        m_max = r;
    }
    let prep = prepare(cfg, m_max, cache)?;
    let (reference_field, label) = match reference {
        Reference::SelfRichest(r) => (solve_prepared(cfg, &prep, r)?.field, format!("self M={r}")),
        Reference::Lap => {
            let space = solve_prepared(cfg, &prep, ms[0])?.field.space.clone();
            let dom = prep.layout.lap_domain(cfg.lap.buffer_cells, &cfg.tolerances);
            let eps = cfg.lap_epsilon();
            let f = lap_reference(&dom, eps, cfg.mesh.h, space).map_err(|e| e.at("absorbing reference"))?;
            (f, format!("lap epsilon={eps:e} buffer={}", cfg.lap.buffer_cells))
        }
    };
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        let u = solve_prepared(cfg, &prep, m)?.field;
        rows.push((m, field_error(&u, &reference_field)?));
    }
    let slope = log_slope(&rows);
    Ok(ConvergenceTable {
        reference: label,
        rows,
        slope,
    })
}
