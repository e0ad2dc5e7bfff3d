//! Dense complex linear algebra.

pub mod eigen;
pub mod fft;
pub mod lu;
pub mod matrix;
pub mod norm;

pub use eigen::{
    apply_function, hermitian_eig, hermitian_eig_below, hermitian_eig_in_range, hermitian_eig_lowest, hermitian_eigvals,
    SpectralData,
};
pub use fft::{dft, dft_nd, idft};
pub use matrix::{dot, norm2, ComplexMatrix};
pub use norm::{operator_norm, operator_norm_map, LinearMap};
