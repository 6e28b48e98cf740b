// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod exprlang;
pub mod fracops;
pub mod kernels;
pub mod problem;
pub mod quad;
pub mod solver;
pub mod verify;
