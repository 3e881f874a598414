//! Sparse conic solver used for the convex subproblems.

mod admm;
mod cones;
mod ldl;
mod sparse;

pub use admm::{solve, ConicProgram, Settings, SolveStatus, SolverError, SolverResult, WarmStart, Workspace};
pub use cones::{project_soc, Cone};
pub use ldl::{LdlError, LdlFactor, Permutation};
pub use sparse::{CscMatrix, TripletBuilder};

#[allow(unused_imports)]
pub(crate) use admm::dot;
