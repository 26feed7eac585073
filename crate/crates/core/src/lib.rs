//! Convertible-nonconvex optimization: lifted convex forms, global
//! optimality checks and a block augmented-Lagrangian solver.
// `!(a < b)` is used on purpose: NaN must fall on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cn_core;
pub mod combinators;
pub mod convex_inner;
pub mod error;
pub mod optimality;
pub mod problems;
pub mod solver;

pub use error::{CnError, Result};
