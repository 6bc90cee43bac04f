//! Concrete carriers for the nested subspaces: piecewise-constant functions
//! with projection and inclusion, and the H¹₀ hat basis with its Galerkin
//! solver.

mod function;
mod h01;

pub use function::{l2_loss, Basis, Domain, MultiResFunction, ProjectionKind, ProjectionOp};
pub use h01::{
    basis_indices, galerkin_solve_elliptic, galerkin_solve_pointwise, h01_eval, h01_function_eval,
    h01_function_eval_channel, h01_inner, mother_hat, H01Index,
};
