//! Kernel quadrature on the unit cube with the Gaussian kernel.
//!
//! Nodes are generated by point-wise gradient descent on a fundamental-solution
//! energy ([`pwgd`]) or greedily by sequential Bayesian quadrature ([`sbq`]),
//! and weighted by minimizing the worst-case error in the Gaussian RKHS
//! ([`wce`]). [`theory`] and [`fekete`] hold numeric checks of the supporting
//! identities and bounds.

pub mod domain;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod fekete;
pub mod kernel;
pub mod linalg;
pub mod pwgd;
pub mod quadrature;
pub mod sbq;
pub mod special;
pub mod theory;
pub mod verify;
pub mod wce;

pub use domain::{DomainBox, NodeSet, QuadratureRule, SeededRng};
pub use energy::{BarrierMode, ObjectiveKind, ObjectiveSpec};
pub use error::{KqError, Result};
pub use experiment::{Method, RunConfig, RunOutcome, RunReport};
pub use kernel::GaussianKernel;
pub use pwgd::{PwgdConfig, PwgdTrace, StepRule};
pub use sbq::{CandidateKind, CandidateSet};
pub use theory::QuadratureTolerances;
pub use verify::{CheckRow, Suite};
