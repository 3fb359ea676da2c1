//! Waveguide scattering through a junction between two periodic half-guides.
//!
//! The half-guides are replaced by Dirichlet-to-Neumann maps built from a
//! finite family of Floquet-Bloch modes, and the junction is solved with
//! cubic Lagrange finite elements.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod dtn;
pub mod error;
pub mod fem;
pub mod floquet;
pub mod layout;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod quadrature;

pub use error::{Error, Result};
