//! Discrete Wasserstein barycenters by linear programming.
//!
//! Given measures `P_1..P_N` with finite support and weights `lambda`, a
//! barycenter minimizes `phi(P) = sum_i lambda_i W_2(P, P_i)^2`. This crate
//! provides
//!
//! - [`algorithms::approx_barycenter`]: the optimum over a fixed candidate
//!   support; over the union of the input supports it costs at most twice
//!   the optimum,
//! - [`algorithms::recover_non_mass_split`]: turns such a measure into one
//!   whose transport never splits an atom, without raising the cost,
//! - [`algorithms::iterate_local_improvement`]: alternates the two until a
//!   fixpoint and reports a certified ratio bound,
//! - [`algorithms::exact_barycenter`]: an exact barycenter for small inputs.
//!
//! Everything is generic over [`scalar::Scalar`], implemented for exact
//! rationals and `f64`. The simplex solver in [`lp`] returns vertices, which
//! is what the sparsity bounds rely on.

pub mod algorithms;
pub mod error;
pub mod io;
pub mod lp;
pub mod measure;
pub mod oracle;
pub mod scalar;
pub mod transport;
