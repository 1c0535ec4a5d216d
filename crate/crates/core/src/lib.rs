//! Verification toolkit for the Fourier identity relating set-partition sums of
//! threshold-indicator products to a signed sum over sign patterns.
//!
//! The identity lives in the ring generated by the indicators
//! `χ̃_A(u) = [Σ_{i∈A} u_i − Σ_{i∉A} u_i > 1]` restricted to the open simplex
//! `{u_i > 0, Σ u_i < 2}`. Both sides are built as exact formal sums, and
//! equality is decided two ways: by cancelling terms modulo the products that
//! vanish on the simplex, and by evaluating at every feasible antichain
//! valuation. A floating-point quadrature check covers the original integral
//! form for small `n`.

pub mod algebra;
pub mod error;
pub mod identity;
pub mod lp;
pub mod numeric;
pub mod partitions;
pub mod subsets;
pub mod verifier;
pub mod zero;

pub use algebra::{FormalSum, Term};
pub use error::{Error, Result};
pub use partitions::SetPartition;
pub use subsets::{Chain, Subset};
pub use zero::ZeroCache;
