use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{FloquetMode, ModeKind};
use crate::error::{Error, Result};
use crate::model::{fourier_dim, CellSpec, FourierIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" | "right" => Ok(Side::Plus),
            "minus" | "-" | "left" => Ok(Side::Minus),
            other => Err(Error::InvalidInput(format!("unknown side {other:?}"))),
        }
    }
}

/// Outgoing mode family of one half-guide, propagating modes first and
/// evanescent modes by increasing `|Im alpha|`.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub side: Side,
    pub modes: Vec<FloquetMode>,
    pub n: usize,
    pub m: usize,
    /// Number of propagating modes.
    pub propagating: usize,
    pub cell: CellSpec,
    pub k: f64,
    pub qhat_digest: String,
}

impl ModeBasis {
    pub fn new(
        side: Side,
        mut modes: Vec<FloquetMode>,
        n: usize,
        m: usize,
        cell: CellSpec,
        k: f64,
        qhat_digest: String,
    ) -> Self {
        modes.sort_by(|a, b| {
            let pa = a.kind.is_propagating();
            let pb = b.kind.is_propagating();
            pb.cmp(&pa).then_with(|| {
                if pa {
                    a.alpha.re.partial_cmp(&b.alpha.re).unwrap()
                } else {
                    a.alpha
                        .im
                        .abs()
                        .partial_cmp(&b.alpha.im.abs())
                        .unwrap()
                        .then(a.alpha.re.partial_cmp(&b.alpha.re).unwrap())
                }
            })
        });
        let propagating = modes.iter().filter(|m| m.kind.is_propagating()).count();
        ModeBasis {
            side,
            modes,
            n,
            m,
            propagating,
            cell,
            k,
            qhat_digest,
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// The sub-family kept by a smaller strip count `m`.
    pub fn truncated(&self, m: usize) -> ModeBasis {
        let top = self.cell.rectangle_height(m);
        let margin = 1e-9 * top.max(1.0);
        let modes = self
            .modes
            .iter()
            .filter(|md| md.kind.is_propagating() || md.alpha.im.abs() < top - margin)
            .cloned()
            .collect();
        ModeBasis::new(
            self.side,
            modes,
            self.n,
            m.min(self.m),
            self.cell,
            self.k,
            self.qhat_digest.clone(),
        )
    }

    /// Cache key for the artifact of this basis.
    pub fn cache_key(qhat_digest: &str, k: f64, n: usize, m: usize) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(qhat_digest.as_bytes());
        h.update(k.to_le_bytes());
        h.update((n as u64).to_le_bytes());
        h.update((m as u64).to_le_bytes());
        h.finalize().iter().take(12).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_document(&self) -> BasisDocument {
        let modes = self
            .modes
            .iter()
            .map(|md| ModeRecord {
                alpha: [md.alpha.re, md.alpha.im],
                kind: md.kind,
                lambda: md.lambda,
                coeffs: md
                    .coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != C64::new(0.0, 0.0))
                    .map(|(i, c)| {
                        let FourierIndex { j, l } = FourierIndex::unflat(i, self.n);
                        (j, l, c.re, c.im)
                    })
                    .collect(),
                residual: md.residual,
            })
            .collect();
        BasisDocument {
            side: self.side,
            n: self.n,
            m: self.m,
            k: self.k,
            cell: self.cell,
            qhat_digest: self.qhat_digest.clone(),
            key: Self::cache_key(&self.qhat_digest, self.k, self.n, self.m),
            propagating: self.propagating,
            modes,
        }
    }

    pub fn from_document(doc: &BasisDocument) -> Result<ModeBasis> {
        let d = fourier_dim(doc.n)?;
        let mut modes = Vec::with_capacity(doc.modes.len());
        for rec in &doc.modes {
            let mut coeffs = vec![C64::new(0.0, 0.0); d];
            for &(j, l, re, im) in &rec.coeffs {
                if j.unsigned_abs() as usize > doc.n || l < 1 || l as usize > doc.n {
                    return Err(Error::InvalidInput(format!(
                        "mode coefficient index ({j}, {l}) out of range"
                    )));
                }
                coeffs[FourierIndex { j, l }.flat(doc.n)] = C64::new(re, im);
            }
            let alpha = C64::new(rec.alpha[0], rec.alpha[1]);
            let mut md = FloquetMode::new(alpha, coeffs, rec.kind, rec.residual, doc.n, doc.cell);
            md.lambda = rec.lambda;
            modes.push(md);
        }
        Ok(ModeBasis::new(
            doc.side,
            modes,
            doc.n,
            doc.m,
            doc.cell,
            doc.k,
            doc.qhat_digest.clone(),
        ))
    }
}

/// Serialized form of a mode basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisDocument {
    pub side: Side,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub k: f64,
    pub cell: CellSpec,
    pub qhat_digest: String,
    pub key: String,
    pub propagating: usize,
    pub modes: Vec<ModeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeRecord {
    pub alpha: [f64; 2],
    pub kind: ModeKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    pub coeffs: Vec<(i64, i64, f64, f64)>,
    pub residual: f64,
}
