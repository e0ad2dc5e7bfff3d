//! Numerical laboratory for index theory via asymptotic morphisms.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bott;
pub mod clifford;
pub mod cstar;
pub mod elliptic;
pub mod error;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod quantize;
pub mod resolution;
pub mod tolerances;
pub mod trials;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
