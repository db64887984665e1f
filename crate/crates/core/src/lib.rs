//! Linear finite elements for elliptic interface problems on body-fitted
//! triangulations, with immersed polynomial preserving gradient recovery, a
//! recovery-based a posteriori error estimator and adaptive refinement.

pub mod adapt;
pub mod error;
pub mod error_norms;
pub mod estimator;
pub mod experiment;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod recovery;
pub mod sparse;

pub use error::{Error, Result};
pub use geometry::{LevelSet, Point2, Rect, RegionTag};
pub use mesh::{Mesh, Patch, VertexClass};
pub use adapt::{AdaptOptions, Marking};
pub use error_norms::ErrorRecord;
pub use estimator::IndicatorField;
pub use fem::{FemSolution, NodalField, SparseSystem};
pub use problems::LevelSetProblem;
pub use recovery::{GradientField, QuadraticFit, TwoValuedGradientField};
