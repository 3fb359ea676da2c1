//! Cubic Lagrange finite elements on polygonal junction domains.

pub mod assemble;
pub mod field;
pub mod mesh;
pub mod space;

pub use assemble::{assemble, solve, solve_sparse, AssembledSystem, ComplexField, JunctionProblem, ScalarField};
pub use field::{field_error, field_error_fn, SolutionField};
pub use mesh::{generate_mesh, generate_mesh_with, EdgeTag, InteriorLine, Mesh, Polygon, Ring};
pub use space::FeSpace;
