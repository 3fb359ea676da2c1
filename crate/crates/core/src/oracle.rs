//! Reference solutions independent of the mode machinery: closed-form
//! spectra for constant media and an absorbing truncated-guide solver.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble, generate_mesh_with, solve, FeSpace, JunctionProblem, SolutionField};
use crate::model::CellSpec;

/// Quasimomenta per period of the empty guide inside the rectangles of
/// height `m` strips: `±i π ℓ L/H` for `ℓ < m`.
pub fn laplace_spectrum(cell: CellSpec, m: usize) -> Vec<C64> {
    let step = PI * cell.period / cell.height;
    let mut out = Vec::new();
    for l in 1..m {
        out.push(C64::new(0.0, step * l as f64));
        out.push(C64::new(0.0, -step * l as f64));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    PropagatingRight,
    PropagatingLeft,
    EvanescentRight,
    EvanescentLeft,
    /// `k² c = (π ℓ / H)²`: zero group velocity.
    Cutoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantMode {
    /// Quasimomentum per period, real part reduced into `(-π, π]`.
    pub alpha: C64,
    pub l: usize,
    pub direction: Direction,
}

fn reduce(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Separation-of-variables modes of a guide filled with `q ≡ c`:
/// `β² = k² c − (π ℓ / H)²`, kept inside the rectangles of height `m` strips.
pub fn constant_q_modes(c: f64, k: f64, cell: CellSpec, m: usize) -> Vec<ConstantMode> {
    assert!(c > 0.0, "constant index must be positive");
    let (lp, hp) = (cell.period, cell.height);
    let top = cell.rectangle_height(m);
    let mut out = Vec::new();
    for l in 1.. {
        let disc = k * k * c - (PI * l as f64 / hp).powi(2);
        let scale = (k * k * c).max((PI * l as f64 / hp).powi(2));
        if disc.abs() <= 1e-12 * scale {
            out.push(ConstantMode {
                alpha: C64::new(0.0, 0.0),
                l,
                direction: Direction::Cutoff,
            });
        } else if disc > 0.0 {
            let beta = disc.sqrt() * lp;
            out.push(ConstantMode {
                alpha: C64::new(reduce(beta), 0.0),
                l,
                direction: Direction::PropagatingRight,
            });
            out.push(ConstantMode {
                alpha: C64::new(reduce(-beta), 0.0),
                l,
                direction: Direction::PropagatingLeft,
            });
        } else {
            let decay = (-disc).sqrt() * lp;
            if decay >= top {
                break;
            }
            out.push(ConstantMode {
                alpha: C64::new(0.0, decay),
                l,
                direction: Direction::EvanescentRight,
            });
            out.push(ConstantMode {
                alpha: C64::new(0.0, -decay),
                l,
                direction: Direction::EvanescentLeft,
            });
        }
    }
    out
}

/// Junction problem on a guide extended by `buffer_cells` periods per side
/// and closed by walls at the far ends, as produced by the layout.
#[derive(Debug, Clone)]
pub struct LapDomain {
    pub problem: JunctionProblem,
    /// Far-end abscissas and the guide periods next to them.
    pub far_ends: [f64; 2],
    pub periods: [f64; 2],
    /// Vertical extents `[y0, y1]` of the guides at the far ends.
    pub spans: [[f64; 2]; 2],
    pub buffer_cells: usize,
}

/// Minimum buffer length in periods.
pub const MIN_BUFFER_CELLS: usize = 5;
/// Far-field level, relative to the field maximum, above which the buffer
/// is declared too short.
pub const DECAY_LIMIT: f64 = 1e-3;

/// Solve `Δu + (k² + iε) q u = f` on the extended guide and interpolate the
/// result onto `target`.
pub fn lap_reference(setup: &LapDomain, epsilon: f64, h: f64, target: Arc<FeSpace>) -> Result<SolutionField> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "absorption must be positive, got {epsilon}"
        )));
    }
    if setup.buffer_cells < MIN_BUFFER_CELLS {
        return Err(Error::InvalidInput(format!(
            "absorbing buffer needs at least {MIN_BUFFER_CELLS} cells, got {}",
            setup.buffer_cells
        )));
    }
    let mut problem = setup.problem.clone();
    problem.absorption = epsilon;
    problem.dtn_plus = None;
    problem.dtn_minus = None;
    let mesh = generate_mesh_with(&problem.domain, h, &problem.lines)?;
    let u = solve(&assemble(&problem, mesh)?)?;

    let restricted = u.interpolate_to(target)?;
    let peak = restricted.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak > 0.0 {
        // Sample one period inside each far wall.
        let mut far = 0.0f64;
        for side in 0..2 {
            let x = if side == 0 {
                setup.far_ends[0] + setup.periods[0]
            } else {
                setup.far_ends[1] - setup.periods[1]
            };
            let [y0, y1] = setup.spans[side];
            for i in 1..40 {
                let y = y0 + (y1 - y0) * i as f64 / 40.0;
                if let Some(v) = u.eval([x, y]) {
                    far = far.max(v.norm());
                }
            }
        }
        if far > DECAY_LIMIT * peak {
            return Err(Error::InsufficientDecay {
                far_end: far / peak,
                limit: DECAY_LIMIT,
            });
        }
    }
    Ok(restricted)
}
