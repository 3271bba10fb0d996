//! De-homogenization of size-graded TPMS lattices.
//!
//! Given a spatially varying cell-size field `P(r)`, this crate builds the
//! phase fields `(φx, φy, φz)` that drive a triply-periodic minimal surface,
//! either with the classic periodic-modulation rule `φs = 2π s / P(r)` or by
//! solving, per axis, the least-squares problem
//!
//! ```text
//! min ∫ ‖∇φs − ω es‖² dΩ,   ω = 2π / P
//! ```
//!
//! whose normal equations are a Neumann Poisson problem solved with a
//! type-II cosine transform. The resulting solid `|F(φ)| ≤ c/P` is meshed with
//! blockwise marching cubes and exported as STL/OBJ.
//!
//! All grids are cell-centered: sample `(i, j, k)` sits at
//! `origin + (index + ½)·h` and dense arrays are stored x-fastest.

pub mod dct;
pub mod error;
pub mod field;
pub mod io;
pub mod mesh;
pub mod phase;
pub mod poisson;
pub mod presets;
pub mod size_field;
pub mod tpms;

pub use error::{Error, Result};
pub use field::{Axis, GridSpec, ScalarField, VectorField};
pub use mesh::SurfaceMesh;
pub use phase::{Method, PhaseSet, ResidualReport, WavenumberTarget};
pub use size_field::{DistanceSource, SigmaRule, SizeField, SmoothingSpec};
pub use tpms::{LevelMode, LevelSpec, TpmsKind};
