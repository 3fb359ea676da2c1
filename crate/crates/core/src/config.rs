//! Problem configuration read from a TOML document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::EigenBackend;
use crate::model::Tolerances;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Required: no default wavenumber is assumed.
    pub wavenumber: f64,
    pub left_guide: GuideConfig,
    pub right_guide: GuideConfig,
    pub junction: JunctionConfig,
    pub truncation: Truncation,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub lap: LapConfig,
    #[serde(default)]
    pub eigensolver: EigensolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GuideConfig {
    pub period: f64,
    pub height: f64,
    #[serde(default)]
    pub y_bottom: f64,
    /// Abscissa where the guide meets the junction.
    pub junction_end: f64,
    /// Rows `[j, l, re, im]` of the coefficients of `exp(2πi j x1/L) cos(πℓ t/H)`,
    /// with `x1` the global abscissa and `t = x2 − y_bottom`.
    pub qhat: Vec<[f64; 4]>,
    #[serde(default)]
    pub positivity_floor: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JunctionConfig {
    /// Wall path from the left guide's top end to the right guide's top end,
    /// both ends excluded. Empty means a straight segment.
    #[serde(default)]
    pub top: Vec<[f64; 2]>,
    /// Same for the bottom wall, from left to right.
    #[serde(default)]
    pub bottom: Vec<[f64; 2]>,
    #[serde(default)]
    pub background: Background,
    #[serde(default)]
    pub perturbation: Option<BumpConfig>,
    #[serde(default)]
    pub source: Option<BumpConfig>,
    #[serde(default)]
    pub holes: Vec<HoleConfig>,
    /// Full periods of each guide kept inside the computational domain.
    #[serde(default = "default_buffer")]
    pub buffer_cells: usize,
}

fn default_buffer() -> usize {
    2
}

/// Index inside the junction, before the perturbation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    /// Periodic index of the left guide continued into the junction.
    #[default]
    Left,
    Right,
    Constant(f64),
}

/// Radial bump: `amplitude` for `|x − center| ≤ inner`, a C⁴ blend to zero on
/// `(inner, outer)`, zero beyond.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: [f64; 2],
    pub amplitude: f64,
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HoleConfig {
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default = "default_segments")]
    pub segments: usize,
    /// Boundary data; absent means a homogeneous wall.
    #[serde(default)]
    pub data: Option<BoundaryData>,
}

fn default_segments() -> usize {
    64
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BoundaryData {
    /// `exp(i (cos θ x1 + sin θ x2))`.
    PlaneWave { angle: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h: f64,
    #[serde(default = "default_interface_order")]
    pub interface_order: usize,
}

fn default_interface_order() -> usize {
    crate::fem::assemble::DEFAULT_INTERFACE_ORDER
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LapConfig {
    /// Absorption; falls back to `tolerances.lap_epsilon` when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_lap_buffer")]
    pub buffer_cells: usize,
}

fn default_lap_buffer() -> usize {
    15
}

impl Default for LapConfig {
    fn default() -> Self {
        LapConfig {
            epsilon: None,
            buffer_cells: default_lap_buffer(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct EigensolverConfig {
    #[serde(default)]
    pub backend: EigenBackend,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Samples along x1 and x2 for the plot grid.
    #[serde(default = "default_grid")]
    pub plot_grid: [usize; 2],
    #[serde(default = "default_true")]
    pub cache_bases: bool,
}

fn default_dir() -> String {
    "out".into()
}

fn default_grid() -> [usize; 2] {
    [201, 41]
}

fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            plot_grid: default_grid(),
            cache_bases: true,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn lap_epsilon(&self) -> f64 {
        self.lap.epsilon.unwrap_or(self.tolerances.lap_epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.wavenumber > 0.0 && self.wavenumber.is_finite()) {
            return bad(format!("wavenumber must be positive, got {}", self.wavenumber));
        }
        for (name, g) in [("left_guide", &self.left_guide), ("right_guide", &self.right_guide)] {
            if !(g.period > 0.0 && g.height > 0.0) {
                return bad(format!("{name}: period and height must be positive"));
            }
        }
        if self.left_guide.junction_end > self.right_guide.junction_end {
            return bad("left_guide.junction_end lies right of right_guide.junction_end".into());
        }
        if self.truncation.n == 0 || self.truncation.m == 0 {
            return bad("truncation N and M must be at least 1".into());
        }
        if !(self.mesh.h > 0.0) {
            return bad(format!("mesh.h must be positive, got {}", self.mesh.h));
        }
        if self.junction.buffer_cells == 0 {
            return bad("junction.buffer_cells must be at least 1".into());
        }
        for b in [&self.junction.perturbation, &self.junction.source]
            .into_iter()
            .flatten()
        {
            if !(0.0 <= b.inner && b.inner < b.outer) {
                return bad(format!(
                    "bump radii must satisfy 0 <= inner < outer, got {} and {}",
                    b.inner, b.outer
                ));
            }
        }
        for hole in &self.junction.holes {
            if !(hole.radius > 0.0) || hole.segments < 3 {
                return bad("holes need a positive radius and at least 3 segments".into());
            }
        }
        self.tolerances.validate()?;
        if !(self.lap_epsilon() > 0.0) {
            return bad("lap.epsilon must be positive".into());
        }
        Ok(())
    }
}
