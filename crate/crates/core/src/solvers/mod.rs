//! Purpose-built small-scale optimizers: the simplex-constrained QP behind the
//! dual updates and the min-eigenvalue maximization behind the singular-value
//! precoders.

mod min_eig;
pub mod realmat;
mod residuals;
mod simplex_qp;

pub use min_eig::{solve_min_eig, CiRows, MinEigProblem, MinEigSolution};
pub use residuals::{kkt_residuals_min_eig, kkt_residuals_qp, ResidualReport};
pub use simplex_qp::{solve_simplex_qp, DualVector, SimplexQp};
