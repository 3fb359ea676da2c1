//! Shared domain types: periodicity cells, the 2D Fourier index, the
//! refractive index and numerical tolerances.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One periodicity cell `(0, period) x (0, height)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub period: f64,
    pub height: f64,
}

impl CellSpec {
    pub fn new(period: f64, height: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite() && height > 0.0 && height.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cell dimensions must be positive and finite, got period {period}, height {height}"
            )));
        }
        Ok(Self { period, height })
    }

    pub fn unit() -> Self {
        Self {
            period: 1.0,
            height: 1.0,
        }
    }

    /// Spacing between consecutive evanescent strips in per-period units.
    pub fn strip_spacing(&self) -> f64 {
        PI * self.period / self.height
    }

    /// Half-height of the truncation rectangle for `m` strips.
    pub fn rectangle_height(&self, m: usize) -> f64 {
        m as f64 * self.strip_spacing()
    }
}

/// Number of unknowns `(2N+1)N` in the truncated Fourier basis.
pub fn fourier_dim(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidInput("Fourier truncation N must be at least 1".into()));
    }
    Ok((2 * n + 1) * n)
}

/// Basis index `(j, l)` with `j` in `[-N, N]` and `l` in `[1, N]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FourierIndex {
    pub j: i64,
    pub l: i64,
}

impl FourierIndex {
    pub fn flat(self, n: usize) -> usize {
        let n = n as i64;
        debug_assert!(self.j.abs() <= n && self.l >= 1 && self.l <= n);
        ((self.j + n) * n + (self.l - 1)) as usize
    }

    pub fn unflat(idx: usize, n: usize) -> Self {
        let n = n as i64;
        let idx = idx as i64;
        FourierIndex {
            j: idx / n - n,
            l: idx % n + 1,
        }
    }
}

/// Compactly supported real perturbation of the refractive index.
#[derive(Clone)]
pub struct Perturbation {
    /// Support box `[xmin, xmax, ymin, ymax]`.
    pub support: [f64; 4],
    pub func: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
}

impl Perturbation {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let [x0, x1, y0, y1] = self.support;
        if x[0] < x0 || x[0] > x1 || x[1] < y0 || x[1] > y1 {
            0.0
        } else {
            (self.func)(x)
        }
    }
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Perturbation")
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

/// Refractive index: a periodic part given by the coefficients of
/// `exp(2 pi i j x1 / L) cos(pi l x2 / H)`, plus an optional compact perturbation.
#[derive(Debug, Clone)]
pub struct RefractiveIndex {
    pub cell: CellSpec,
    qhat: BTreeMap<(i64, i64), C64>,
    pub perturbation: Option<Perturbation>,
    /// When present, `validate` checks the sampled index stays above it.
    pub floor: Option<f64>,
}

const REALNESS_TOL: f64 = 1e-12;

impl RefractiveIndex {
    /// Build from `[j, l, re, im]` rows. Duplicate `(j, l)` rows are rejected.
    pub fn from_table(cell: CellSpec, rows: &[[f64; 4]]) -> Result<Self> {
        let mut qhat = BTreeMap::new();
        for row in rows {
            let [j, l, re, im] = *row;
            if j.fract() != 0.0 || l.fract() != 0.0 || l < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "coefficient index ({j}, {l}) must be integers with l >= 0"
                )));
            }
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::InvalidInput(format!("coefficient ({j}, {l}) is not finite")));
            }
            if qhat.insert((j as i64, l as i64), C64::new(re, im)).is_some() {
                return Err(Error::InvalidInput(format!("duplicate coefficient ({j}, {l})")));
            }
        }
        let q = Self {
            cell,
            qhat,
            perturbation: None,
            floor: None,
        };
        q.check_realness()?;
        Ok(q)
    }

    pub fn constant(cell: CellSpec, value: f64) -> Self {
        let mut qhat = BTreeMap::new();
        if value != 0.0 {
            qhat.insert((0, 0), C64::new(value, 0.0));
        }
        Self {
            cell,
            qhat,
            perturbation: None,
            floor: None,
        }
    }

    pub fn with_perturbation(mut self, p: Perturbation) -> Self {
        self.perturbation = Some(p);
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = Some(floor);
        self
    }

    /// Coefficient lookup with the even extension in `l`.
    pub fn coeff(&self, j: i64, l: i64) -> C64 {
        self.qhat.get(&(j, l.abs())).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn entries(&self) -> impl Iterator<Item = (i64, i64, C64)> + '_ {
        self.qhat.iter().map(|(&(j, l), &v)| (j, l, v))
    }

    pub fn table_rows(&self) -> Vec<[f64; 4]> {
        self.entries()
            .map(|(j, l, v)| [j as f64, l as f64, v.re, v.im])
            .collect()
    }

    /// Largest `|j|` present in the table.
    pub fn bandwidth_j(&self) -> usize {
        self.qhat
            .keys()
            .map(|&(j, _)| j.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn bandwidth_l(&self) -> usize {
        self.qhat.keys().map(|&(_, l)| l as usize).max().unwrap_or(0)
    }

    fn check_realness(&self) -> Result<()> {
        for (&(j, l), &v) in &self.qhat {
            let partner = self.coeff(-j, l);
            if (partner - v.conj()).norm() > REALNESS_TOL * (1.0 + v.norm()) {
                return Err(Error::InvalidInput(format!(
                    "coefficient table is not real: qhat({}, {l}) != conj(qhat({j}, {l}))",
                    -j
                )));
            }
        }
        Ok(())
    }

    /// Periodic part at a point; `x1` is reduced modulo the period, `x2` is
    /// measured from the bottom of the cell.
    pub fn eval_periodic(&self, x: [f64; 2]) -> f64 {
        let s = x[0].rem_euclid(self.cell.period);
        let mut acc = C64::new(0.0, 0.0);
        for (&(j, l), &v) in &self.qhat {
            let phase = 2.0 * PI * j as f64 * s / self.cell.period;
            let c = (PI * l as f64 * x[1] / self.cell.height).cos();
            acc += v * C64::from_polar(c, phase);
        }
        debug_assert!(acc.im.abs() <= 1e-9 * (1.0 + acc.re.abs()));
        acc.re
    }

    /// Same as `eval_periodic` but returns the full complex sum, for realness checks.
    pub fn eval_periodic_complex(&self, x: [f64; 2]) -> C64 {
        let s = x[0].rem_euclid(self.cell.period);
        let mut acc = C64::new(0.0, 0.0);
        for (&(j, l), &v) in &self.qhat {
            let phase = 2.0 * PI * j as f64 * s / self.cell.period;
            let c = (PI * l as f64 * x[1] / self.cell.height).cos();
            acc += v * C64::from_polar(c, phase);
        }
        acc
    }

    /// Sup norm of the periodic part estimated on a fine sampling grid.
    pub fn sup_norm(&self) -> f64 {
        let nx = 1024.max(16 * self.bandwidth_j());
        let ny = 512.max(16 * self.bandwidth_l());
        let mut best: f64 = 0.0;
        for ix in 0..=nx {
            let x1 = self.cell.period * ix as f64 / nx as f64;
            for iy in 0..=ny {
                let x2 = self.cell.height * iy as f64 / ny as f64;
                best = best.max(self.eval_periodic([x1, x2]).abs());
            }
        }
        best
    }

    /// Check realness and, when a floor is configured, positivity on a grid.
    pub fn validate(&self) -> Result<()> {
        self.check_realness()?;
        if let Some(floor) = self.floor {
            let (nx, ny) = (256, 128);
            for ix in 0..=nx {
                for iy in 0..=ny {
                    let x = [
                        self.cell.period * ix as f64 / nx as f64,
                        self.cell.height * iy as f64 / ny as f64,
                    ];
                    let v = self.eval_periodic(x);
                    if v < floor {
                        return Err(Error::InvalidInput(format!(
                            "refractive index {v:.4} at ({:.4}, {:.4}) is below the floor {floor}",
                            x[0], x[1]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Stable digest of the cell and the coefficient table.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.cell.period.to_le_bytes());
        h.update(self.cell.height.to_le_bytes());
        for (&(j, l), v) in &self.qhat {
            h.update(j.to_le_bytes());
            h.update(l.to_le_bytes());
            h.update(v.re.to_le_bytes());
            h.update(v.im.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Evaluate the full index (periodic part plus perturbation) at a cell point.
pub fn eval_refractive_index(q: &RefractiveIndex, x: [f64; 2]) -> f64 {
    let base = q.eval_periodic(x);
    match &q.perturbation {
        Some(p) => base + p.eval(x),
        None => base,
    }
}

/// Numerical tolerances shared by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// `|Im alpha|` below this marks a propagating mode.
    pub unit_circle_tol: f64,
    /// Pencil residual bound relative to the Frobenius norm of `B`.
    pub pencil_residual_tol: f64,
    pub gram_condition_warn: f64,
    pub lap_epsilon: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unit_circle_tol: 1e-6,
            pencil_residual_tol: 1e-8,
            gram_condition_warn: 1e10,
            lap_epsilon: 1e-2,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.unit_circle_tol,
            self.pencil_residual_tol,
            self.gram_condition_warn,
            self.lap_epsilon,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput("tolerances must be positive and finite".into()));
        }
        if self.unit_circle_tol >= PI / 4.0 {
            return Err(Error::InvalidInput("unit circle tolerance must be below pi/4".into()));
        }
        Ok(())
    }

    /// Radius used to group eigenvalues into one multiplicity cluster.
    pub fn cluster_radius(&self) -> f64 {
        10.0 * self.unit_circle_tol
    }
}
