//! Bound states of `V = −a/r + b/r² + β cos²θ/(r² sin²θ) + c` in D dimensions,
//! solved in closed form by the Nikiforov–Uvarov method and cross-checked by
//! finite-difference eigensolvers.

// `!(x > 0.0)` guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod nu_engine;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod spectrum;
pub mod wavefunctions;
