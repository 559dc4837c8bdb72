//! The estimation pipeline: HOSVD, two-sample bias estimation, scaled
//! singular vectors and the low-rank denoiser.
//!
//! The bias `b_k` is the systematic shrinkage `E<u_hat_k, u_k>^2 - 1` of an
//! empirical singular vector toward the truth; it is estimated from two
//! independent noisy samples as `b_hat_k = <u_hat_k^(1), u_hat_k^(2)> - 1`
//! and divided out to form the scaled vector `u_tilde_k`. The denoiser
//! projects a target tensor with the scaled (non-orthogonal) projectors
//! `U_tilde U_tilde^T` along each mode.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral::{left_singular_secondorder, sign_align, UNIT_NORM_TOL};
use crate::tensor::{Dims, Mode, Tensor3};

/// The biases certified by theory lie in `[-1/2, 0]`; divisors are clamped
/// so `1 + b_hat` never drops below this floor.
const BIAS_FLOOR: f64 = -0.5;

/// A higher-order SVD: orthonormal factor matrices per mode plus the core
/// tensor obtained by contracting with their transposes.
#[derive(Debug, Clone)]
pub struct HosvdResult {
    core: Tensor3,
    u: Matrix,
    v: Matrix,
    w: Matrix,
    ranks: Dims,
}

impl HosvdResult {
    /// Reassembles a result from its parts, revalidating shapes and
    /// orthonormality (defect below `1e-8`). Used when loading from disk.
    pub fn from_parts(core: Tensor3, u: Matrix, v: Matrix, w: Matrix) -> Result<Self> {
        let ranks = core.dims();
        for (factor, r, name) in [(&u, ranks.0, "u"), (&v, ranks.1, "v"), (&w, ranks.2, "w")] {
            if factor.cols() != r {
                return Err(Error::arg(format!(
                    "factor {name} has {} columns but the core expects {r}",
                    factor.cols()
                )));
            }
            if factor.rows() < factor.cols() {
                return Err(Error::arg(format!(
                    "factor {name} is {}x{}, needs at least as many rows as columns",
                    factor.rows(),
                    factor.cols()
                )));
            }
            let defect = factor.orthonormality_defect();
            if defect > 1e-8 {
                return Err(Error::arg(format!(
                    "factor {name} is not orthonormal (defect {defect:.3e})"
                )));
            }
        }
        Ok(Self { core, u, v, w, ranks })
    }

    pub fn core(&self) -> &Tensor3 {
        &self.core
    }

    /// The three factor matrices `(U, V, W)`.
    pub fn factors(&self) -> (&Matrix, &Matrix, &Matrix) {
        (&self.u, &self.v, &self.w)
    }

    pub fn ranks(&self) -> Dims {
        self.ranks
    }

    /// `core x_1 U x_2 V x_3 W`, the low-rank tensor this decomposition
    /// represents.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        self.core.multilinear_product(&self.u, &self.v, &self.w)
    }
}

/// Higher-order SVD of `t` with the given multilinear ranks.
///
/// Each factor holds the top left singular vectors of the corresponding
/// unfolding, computed by the second-order Gram route; the core is
/// `t x_1 U^T x_2 V^T x_3 W^T`.
pub fn hosvd(t: &Tensor3, ranks: Dims) -> Result<HosvdResult> {
    let dims = t.dims();
    for (r, d) in [(ranks.0, dims.0), (ranks.1, dims.1), (ranks.2, dims.2)] {
        if r == 0 || r > d {
            return Err(Error::arg(format!("rank {r} out of range 1..={d}")));
        }
    }
    let u = left_singular_secondorder(&t.matricize(Mode::One), Mode::One, ranks.0)?
        .vectors()
        .clone();
    let v = left_singular_secondorder(&t.matricize(Mode::Two), Mode::Two, ranks.1)?
        .vectors()
        .clone();
    let w = left_singular_secondorder(&t.matricize(Mode::Three), Mode::Three, ranks.2)?
        .vectors()
        .clone();
    let core = t.multilinear_product(&u.transpose(), &v.transpose(), &w.transpose())?;
    Ok(HosvdResult { core, u, v, w, ranks })
}

/// Two-sample bias estimate `<u1, u2> - 1` after sign alignment.
///
/// Both inputs must be unit vectors (within `1e-8`). Alignment makes the
/// inner product nonnegative, so the value lies in `[-1, 0]`; positive
/// roundoff from slightly non-unit inputs is clamped to 0.
pub fn estimate_bias(u1: &[f64], u2: &[f64]) -> Result<f64> {
    if u1.len() != u2.len() {
        return Err(Error::arg(format!(
            "length mismatch: {} vs {}",
            u1.len(),
            u2.len()
        )));
    }
    for (name, u) in [("u1", u1), ("u2", u2)] {
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::arg(format!("{name} is not unit: |{name}|_2 = {norm}")));
        }
    }
    let dot: f64 = u1.iter().zip(u2).map(|(a, b)| a * b).sum();
    Ok((dot.abs() - 1.0).min(0.0))
}

/// Sign-aligned singular vectors from one sample together with their
/// two-sample bias estimates and rescaled versions.
#[derive(Debug, Clone)]
pub struct ScaledBasis {
    mode: Mode,
    raw_vectors: Matrix,
    bias: Vec<f64>,
    scaled_vectors: Matrix,
    clamped: Vec<bool>,
}

impl ScaledBasis {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Unit vectors `u_hat_k` from sample 1, sign-aligned to sample 2.
    pub fn raw_vectors(&self) -> &Matrix {
        &self.raw_vectors
    }

    /// `b_hat_k` per vector, in `[-1, 0]`.
    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// `u_tilde_k = u_hat_k / sqrt(1 + max(b_hat_k, -1/2))`; generally not
    /// unit vectors.
    pub fn scaled_vectors(&self) -> &Matrix {
        &self.scaled_vectors
    }

    /// Per-vector flags, true where the bias floor bound (`b_hat < -1/2`).
    pub fn clamped(&self) -> &[bool] {
        &self.clamped
    }
}

/// Estimates the top-`r` scaled left singular vectors of mode `mode` from
/// two independent noisy samples of the same signal.
///
/// Fails with an identifiability error if any requested vector sits in a
/// zero-eigengap cluster of either sample's spectrum.
pub fn scaled_basis(y1: &Tensor3, y2: &Tensor3, mode: Mode, r: usize) -> Result<ScaledBasis> {
    if y1.dims() != y2.dims() {
        return Err(Error::arg(format!(
            "sample shape mismatch: {:?} vs {:?}",
            y1.dims(),
            y2.dims()
        )));
    }
    let basis1 = left_singular_secondorder(&y1.matricize(mode), mode, r)?;
    let basis2 = left_singular_secondorder(&y2.matricize(mode), mode, r)?;
    for k in 1..=r {
        basis1.require_identifiable(k)?;
        basis2.require_identifiable(k)?;
    }

    let mut raw_cols = Vec::with_capacity(r);
    let mut scaled_cols = Vec::with_capacity(r);
    let mut bias = Vec::with_capacity(r);
    let mut clamped = Vec::with_capacity(r);
    for k in 0..r {
        let col1 = basis1.vectors().column(k);
        let col2 = basis2.vectors().column(k);
        let b = estimate_bias(&col1, &col2)?;
        let aligned = sign_align(&col1, &col2)?;
        let floor_hit = b < BIAS_FLOOR;
        let divisor = (1.0 + b.max(BIAS_FLOOR)).sqrt();
        scaled_cols.push(aligned.iter().map(|x| x / divisor).collect());
        raw_cols.push(aligned);
        bias.push(b);
        clamped.push(floor_hit);
    }
    Ok(ScaledBasis {
        mode,
        raw_vectors: Matrix::from_columns(&raw_cols)?,
        bias,
        scaled_vectors: Matrix::from_columns(&scaled_cols)?,
        clamped,
    })
}

/// Applies the scaled projectors `P_m = U_tilde_m U_tilde_m^T` of three
/// bases to `target` along the corresponding modes.
///
/// The projectors are deliberately non-orthogonal: the rescaling compensates
/// the shrinkage bias of raw empirical singular vectors. The result has
/// multilinear ranks at most the basis ranks.
pub fn denoise(
    target: &Tensor3,
    basis1: &ScaledBasis,
    basis2: &ScaledBasis,
    basis3: &ScaledBasis,
) -> Result<Tensor3> {
    let dims = target.dims();
    for (basis, want_mode) in [(basis1, Mode::One), (basis2, Mode::Two), (basis3, Mode::Three)] {
        if basis.mode() != want_mode {
            return Err(Error::arg(format!(
                "basis for mode {want_mode} carries mode {}",
                basis.mode()
            )));
        }
        let d = want_mode.dim_of(dims);
        if basis.scaled_vectors().rows() != d {
            return Err(Error::arg(format!(
                "mode-{want_mode} basis has {} rows, target needs {d}",
                basis.scaled_vectors().rows()
            )));
        }
    }
    let p1 = basis1.scaled_vectors().gram();
    let p2 = basis2.scaled_vectors().gram();
    let p3 = basis3.scaled_vectors().gram();
    target.multilinear_product(&p1, &p2, &p3)
}
