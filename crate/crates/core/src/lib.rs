//! Upper-bound limit analysis of plane structures by virtual-displacement
//! discontinuity layout optimization.
//!
//! The pipeline: an elastic stress snapshot (computed by [`fem`] or imported)
//! is smoothed to the mesh nodes ([`recovery`]), every admissible node pair
//! becomes a candidate discontinuity ([`candidates`]), and a linear program
//! ([`lp`]) finds the mechanism of least dissipation under unit virtual work.
//! Its optimum is the factor of safety λ ([`vdlo`]).

pub mod candidates;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod mesh;
pub mod recovery;
pub mod scenarios;
pub mod vdlo;

pub use geometry::Point;
pub use mesh::{AnalysisMode, BoundaryTag, Material, Mesh, MeshError, MeshFile};
