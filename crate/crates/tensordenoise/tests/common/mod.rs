//! Shared helpers for integration tests: seeded RNG and nalgebra-based
//! oracles kept independent of the library's Gram route.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tensordenoise::{Dims, Matrix, Tensor3};

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

/// Projector Frobenius distance between the column spans of two bases.
pub fn projector_distance(a: &Matrix, b: &Matrix) -> f64 {
    a.gram().sub(&b.gram()).unwrap().frobenius()
}

/// Applies a column permutation to a matrix.
pub fn permute_columns(m: &Matrix, perm: &[usize]) -> Matrix {
    assert_eq!(perm.len(), m.cols());
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, perm[j])).unwrap()
}

/// Fisher-Yates shuffle of `0..n` with the given RNG.
pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    perm
}
