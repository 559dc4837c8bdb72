//! Shared helpers for unit tests: seeded random inputs and independent
//! dense-SVD oracles that double-check the Gram-route implementations.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::tensor::{Dims, Tensor3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = rng(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
}

/// Random `d x r` matrix with orthonormal columns via thin QR.
pub fn random_orthonormal(d: usize, r: usize, seed: u64) -> Matrix {
    let m = random_matrix(d, r, seed);
    let q = DMatrix::from_row_slice(d, r, m.values()).qr().q();
    Matrix::from_fn(d, r, |i, j| q[(i, j)]).unwrap()
}

/// Top-`r` left singular vectors and singular values from a direct dense SVD,
/// independent of the Gram route under test.
pub fn svd_left_oracle(m: &Matrix, r: usize) -> (Matrix, Vec<f64>) {
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.values());
    let svd = dm.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let values = svd.singular_values.iter().take(r).copied().collect();
    (Matrix::from_fn(m.rows(), r, |i, j| u[(i, j)]).unwrap(), values)
}

/// Random Tucker tensor with exact multilinear ranks `ranks`: a random core
/// contracted with random orthonormal factors.
pub fn random_tucker(dims: Dims, ranks: Dims, seed: u64) -> Tensor3 {
    let mut rng = rng(seed);
    let core = Tensor3::from_fn(ranks, |_, _, _| rng.gen_range(-1.0..1.0)).unwrap();
    let u = random_orthonormal(dims.0, ranks.0, seed.wrapping_add(101));
    let v = random_orthonormal(dims.1, ranks.1, seed.wrapping_add(202));
    let w = random_orthonormal(dims.2, ranks.2, seed.wrapping_add(303));
    core.multilinear_product(&u, &v, &w).unwrap()
}
