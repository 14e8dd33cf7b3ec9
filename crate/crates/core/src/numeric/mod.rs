//! Complex linear algebra, structured-matrix identities, seeded sampling and
//! the finite-difference oracle.

mod finite_diff;
mod matrix;
mod rng;

pub use finite_diff::{finite_diff_gradient, max_relative_error};
pub use matrix::{kron, selection_matrix, vec, vec_max_abs_diff, vec_norm, ComplexMatrix, ComplexVector};
pub use rng::{sample_complex_gaussian, SeededRng};

pub use num_complex::Complex;
