//! Rate of escape with respect to the block length for nearest-neighbour
//! random walks on free products V_1 * ... * V_r.
//!
//! The pipeline is: describe the factors ([`factor`]) and weights
//! ([`model::ModelSpec`]), solve the xi-system ([`xi`]), then evaluate the
//! drift formulas ([`drift`]). [`simulate`] estimates the same quantities by
//! Monte Carlo and [`oracle`] checks the generating-function machinery by
//! exact enumeration.

pub mod catalog;
pub mod drift;
pub mod error;
pub mod factor;
pub mod model;
pub mod oracle;
pub mod simulate;
pub mod xi;

pub use drift::{analyze, DriftReport, TypeChain};
pub use error::{Error, Result};
pub use factor::{AnalyticFactor, Factor, FiniteFactor, LatticeKind};
pub use model::ModelSpec;
pub use xi::{solve_xi, SolverOptions, XiSolution};
