//! Tail functionals, centering and normalizing constants, and the
//! central limit statistics of sums of upper order statistics for
//! distributions in the Gumbel domain of attraction.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clt;
pub mod config;
pub mod error;
pub mod fmt;
pub mod functionals;
pub mod gof;
pub mod lemmas;
pub mod limits;
pub mod manifest;
pub mod models;
pub mod quadrature;
pub mod sampling;

pub use error::{Error, Result};
