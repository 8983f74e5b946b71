//! Dense complex linear algebra for the precoding and detection pipelines.

mod decompose;
mod matrix;

pub use decompose::{
    eig_hermitian, min_eigenvalue, null_space_basis, pinv, qr_decompose, realify, svd,
};
pub use matrix::{axpy, dot, norm, norm_sqr, ComplexMatrix};
