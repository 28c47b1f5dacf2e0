//! Eigenvalue bounds for double saddle-point matrices and their block-diagonal
//! Schur-complement preconditioners.

pub mod bounds;
pub mod containment;
pub mod cubic;
pub mod error;
pub mod fem;
pub mod io;
pub mod krylov;
pub mod lanczos;
pub mod ldlt;
pub mod linalg;
pub mod precond;
pub mod problems;
pub mod report;
pub mod spectral;
pub mod system;

pub use bounds::{BoundIntervals, EquivalenceConstants, ExactCase, InexactCase, Interval};
pub use containment::{ContainmentReport, verify_containment};
pub use cubic::{ClassifiedRoots, CubicPoly};
pub use error::{Error, Result};
pub use krylov::{minres, SolveResult};
pub use precond::{BlockStrategy, PreconditionerOperator};
pub use report::{AnalysisReport, AnalyzeOptions, PrecondChoice, ProblemDescriptor, Scenario, SolveReport};
pub use spectral::{BlockExtremes, Inertia, SchurPair, SpectralConfig};
pub use system::{AssembledMatrix, DoubleSaddleSystem, Dims, Layout, Tolerances, ValidationReport};
