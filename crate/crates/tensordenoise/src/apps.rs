//! Two downstream applications of entrywise singular-vector accuracy:
//! two-class Gaussian-mixture clustering from the signs of the leading left
//! singular vector, and planted-subtensor localization from its top-magnitude
//! entries. Includes the seeded synthetic generators both rely on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral::left_singular_secondorder;
use crate::tensor::{Dims, Mode, Tensor3};

/// A two-class Gaussian mixture sample: row `i` is `(1 - 2 l_i) beta + eps_i`
/// with IID Gaussian noise, where `l_i` is the recorded ground-truth label.
#[derive(Debug, Clone)]
pub struct MixtureInstance {
    data: Matrix,
    labels: Vec<u8>,
    beta_norm: f64,
}

impl MixtureInstance {
    /// The `n x p` observation matrix, one sample per row.
    pub fn data(&self) -> &Matrix {
        &self.data
    }

    /// Ground-truth labels in `{0, 1}`.
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Euclidean norm of the mean vector `beta`.
    pub fn beta_norm(&self) -> f64 {
        self.beta_norm
    }
}

/// Draws a mixture sample: `n0` rows with mean `+beta` and label 0 followed
/// by `n1` rows with mean `-beta` and label 1, noise `Normal(0, sigma^2)`.
///
/// Deterministic for a fixed seed; noise is drawn row by row in order.
pub fn generate_mixture(
    n0: usize,
    n1: usize,
    beta: &[f64],
    sigma: f64,
    seed: u64,
) -> Result<MixtureInstance> {
    if n0 + n1 < 2 {
        return Err(Error::arg(format!("need at least 2 rows, got {}", n0 + n1)));
    }
    let beta_norm = beta.iter().map(|x| x * x).sum::<f64>().sqrt();
    if beta.is_empty() || beta_norm == 0.0 {
        return Err(Error::arg("beta must be a nonzero vector"));
    }
    if sigma < 0.0 {
        return Err(Error::arg(format!("sigma must be nonnegative, got {sigma}")));
    }
    let (n, p) = (n0 + n1, beta.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = u8::from(i >= n0);
        let sign = if label == 0 { 1.0 } else { -1.0 };
        labels.push(label);
        for b in beta {
            let eps: f64 = StandardNormal.sample(&mut rng);
            values.push(sign * b + sigma * eps);
        }
    }
    Ok(MixtureInstance {
        data: Matrix::new(n, p, values)?,
        labels,
        beta_norm,
    })
}

/// The frozen sign rule: entries strictly above zero map to label 0,
/// everything else (including exact zero) to label 1.
pub fn labels_from_sign(u: &[f64]) -> Vec<u8> {
    u.iter().map(|&x| u8::from(x <= 0.0)).collect()
}

/// Clusters rows into two classes by the sign of the leading left singular
/// vector: positive entries get label 0, non-positive entries label 1.
///
/// The output is meaningful up to a global flip; compare partitions with
/// [`cluster_error`], which is flip-invariant.
pub fn cluster_two_class(data: &Matrix) -> Result<Vec<u8>> {
    if data.rows() < 2 {
        return Err(Error::arg(format!("need at least 2 rows, got {}", data.rows())));
    }
    if data.frobenius() == 0.0 {
        return Err(Error::Numeric(
            "data matrix is zero; leading singular vector undefined".into(),
        ));
    }
    let basis = left_singular_secondorder(data, Mode::One, 1)?;
    Ok(labels_from_sign(&basis.vectors().column(0)))
}

/// Misclassification fraction minimized over the global label flip; 0 means
/// the partitions agree exactly. Always in `[0, 1/2]`.
pub fn cluster_error(predicted: &[u8], truth: &[u8]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::arg(format!(
            "length mismatch: {} vs {}",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::arg("empty label arrays"));
    }
    let mismatched = predicted.iter().zip(truth).filter(|(a, b)| a != b).count();
    // Integer min keeps the value exactly invariant under a global flip.
    let best = mismatched.min(predicted.len() - mismatched);
    Ok(best as f64 / predicted.len() as f64)
}

/// A planted-subtensor observation: mean `lambda` on the block
/// `C1 x C2 x C3`, zero elsewhere, plus IID Gaussian noise.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    y: Tensor3,
    blocks: (Vec<usize>, Vec<usize>, Vec<usize>),
    lambda: f64,
}

impl PlantedInstance {
    pub fn y(&self) -> &Tensor3 {
        &self.y
    }

    /// The planted index sets, sorted ascending per mode.
    pub fn blocks(&self) -> (&[usize], &[usize], &[usize]) {
        (&self.blocks.0, &self.blocks.1, &self.blocks.2)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Generates `y = lambda 1_{C1} (x) 1_{C2} (x) 1_{C3} + Z` with noise
/// `Normal(0, sigma^2)`, deterministically for a fixed seed.
///
/// Blocks may be empty (pure noise); duplicate or out-of-range indices are
/// rejected.
pub fn generate_planted(
    dims: Dims,
    blocks: (&[usize], &[usize], &[usize]),
    lambda: f64,
    sigma: f64,
    seed: u64,
) -> Result<PlantedInstance> {
    if sigma < 0.0 {
        return Err(Error::arg(format!("sigma must be nonnegative, got {sigma}")));
    }
    let (d1, d2, d3) = dims;
    let mut masks = Vec::with_capacity(3);
    let mut sorted_blocks = Vec::with_capacity(3);
    for (idx, (block, d)) in [(blocks.0, d1), (blocks.1, d2), (blocks.2, d3)]
        .into_iter()
        .enumerate()
    {
        let mut mask = vec![false; d];
        for &i in block {
            if i >= d {
                return Err(Error::arg(format!(
                    "block {} index {i} out of range for dimension {d}",
                    idx + 1
                )));
            }
            if mask[i] {
                return Err(Error::arg(format!("block {} repeats index {i}", idx + 1)));
            }
            mask[i] = true;
        }
        let mut sorted: Vec<usize> = block.to_vec();
        sorted.sort_unstable();
        masks.push(mask);
        sorted_blocks.push(sorted);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = Tensor3::from_fn(dims, |i, j, k| {
        let eps: f64 = StandardNormal.sample(&mut rng);
        let mean = if masks[0][i] && masks[1][j] && masks[2][k] {
            lambda
        } else {
            0.0
        };
        mean + sigma * eps
    })?;
    let mut iter = sorted_blocks.into_iter();
    Ok(PlantedInstance {
        y,
        blocks: (
            iter.next().unwrap(),
            iter.next().unwrap(),
            iter.next().unwrap(),
        ),
        lambda,
    })
}

/// Indices of the `c` largest-magnitude entries, sorted ascending.
///
/// Ties at the cutoff resolve toward the lowest index.
pub fn top_magnitude_indices(values: &[f64], c: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .expect("finite entries")
            .then(a.cmp(&b))
    });
    let mut picked: Vec<usize> = order.into_iter().take(c).collect();
    picked.sort_unstable();
    picked
}

/// Estimates the planted block along each mode as the index set of the
/// `c_m` largest-magnitude entries of that mode's leading left singular
/// vector. Sign-free: magnitudes do not depend on the vector's orientation.
pub fn localize_subtensor(
    y: &Tensor3,
    sizes: (usize, usize, usize),
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let dims = y.dims();
    for (c, d) in [(sizes.0, dims.0), (sizes.1, dims.1), (sizes.2, dims.2)] {
        if c == 0 || c > d {
            return Err(Error::arg(format!("block size {c} out of range 1..={d}")));
        }
    }
    let mut out = Vec::with_capacity(3);
    for (mode, c) in Mode::ALL.into_iter().zip([sizes.0, sizes.1, sizes.2]) {
        let basis = left_singular_secondorder(&y.matricize(mode), mode, 1)?;
        out.push(top_magnitude_indices(&basis.vectors().column(0), c));
    }
    let mut iter = out.into_iter();
    Ok((
        iter.next().unwrap(),
        iter.next().unwrap(),
        iter.next().unwrap(),
    ))
}

/// `(linf, l2)` distance between a (possibly rescaled) estimate and a unit
/// truth vector, after flipping the estimate's sign to best match the truth.
pub fn vector_errors(estimate: &[f64], truth: &[f64]) -> Result<(f64, f64)> {
    if estimate.len() != truth.len() {
        return Err(Error::arg(format!(
            "length mismatch: {} vs {}",
            estimate.len(),
            truth.len()
        )));
    }
    let norm = truth.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > crate::spectral::UNIT_NORM_TOL {
        return Err(Error::arg(format!("truth is not unit: |truth|_2 = {norm}")));
    }
    let dot: f64 = estimate.iter().zip(truth).map(|(a, b)| a * b).sum();
    let sign = if dot >= 0.0 { 1.0 } else { -1.0 };
    let mut linf = 0.0f64;
    let mut sq = 0.0;
    for (e, t) in estimate.iter().zip(truth) {
        let diff = sign * e - t;
        linf = linf.max(diff.abs());
        sq += diff * diff;
    }
    Ok((linf, sq.sqrt()))
}

/// A point drawn uniformly from the unit sphere in `R^d`.
pub fn sample_unit_sphere(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// IID `Normal(0, sigma^2)` tensor filled in layout order from `rng`.
pub fn gaussian_tensor(dims: Dims, sigma: f64, rng: &mut impl Rng) -> Tensor3 {
    let (d1, d2, d3) = dims;
    let values = (0..d1 * d2 * d3)
        .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    Tensor3::from_parts(dims, values)
}
