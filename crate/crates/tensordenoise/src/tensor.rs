//! Third-order tensors, unfoldings and multilinear products.
//!
//! [`Tensor3`] stores a dense `d1 x d2 x d3` array of finite reals in layout
//! order (first index slowest, last index fastest). The mode-1 unfolding maps
//! entry `(i1, i2, i3)` to matrix entry `(i1, i2*d3 + i3)`; modes 2 and 3 use
//! the cyclic convention below. Any fixed column ordering spans the same left
//! singular subspace, so the choice is free but frozen here:
//!
//! * mode 1: `d1 x (d2*d3)`, column `i2*d3 + i3` (a zero-copy reshape);
//! * mode 2: `d2 x (d3*d1)`, column `i3*d1 + i1`;
//! * mode 3: `d3 x (d1*d2)`, column `i1*d2 + i2`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Tensor dimensions `(d1, d2, d3)`.
pub type Dims = (usize, usize, usize);

/// One of the three tensor modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Zero-based position of this mode (0, 1 or 2).
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    /// The tensor dimension along this mode.
    pub fn dim_of(self, dims: Dims) -> usize {
        match self {
            Mode::One => dims.0,
            Mode::Two => dims.1,
            Mode::Three => dims.2,
        }
    }
}

impl TryFrom<usize> for Mode {
    type Error = Error;

    fn try_from(value: usize) -> Result<Self> {
        match value {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            other => Err(Error::arg(format!("mode must be 1, 2 or 3, got {other}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// A dense `d1 x d2 x d3` tensor of finite 64-bit reals.
///
/// Flat index of entry `(i1, i2, i3)` is `i1*d2*d3 + i2*d3 + i3`. Immutable
/// after construction; all operations are pure functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: Dims,
    values: Vec<f64>,
}

impl Tensor3 {
    /// Builds a tensor from values in layout order.
    ///
    /// Fails if any dimension is zero, the value count is wrong, or any entry
    /// is NaN or infinite.
    pub fn new(dims: Dims, values: Vec<f64>) -> Result<Self> {
        let (d1, d2, d3) = dims;
        if d1 == 0 || d2 == 0 || d3 == 0 {
            return Err(Error::arg(format!(
                "tensor dimensions must be positive, got ({d1}, {d2}, {d3})"
            )));
        }
        if values.len() != d1 * d2 * d3 {
            return Err(Error::arg(format!(
                "expected {} values for a ({d1}, {d2}, {d3}) tensor, got {}",
                d1 * d2 * d3,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!(
                "non-finite entry {} at flat index {pos}",
                values[pos]
            )));
        }
        Ok(Self { dims, values })
    }

    /// All-zero tensor. Panics if a dimension is zero.
    pub fn zeros(dims: Dims) -> Self {
        let (d1, d2, d3) = dims;
        assert!(d1 > 0 && d2 > 0 && d3 > 0, "tensor dimensions must be positive");
        Self {
            dims,
            values: vec![0.0; d1 * d2 * d3],
        }
    }

    /// Builds a tensor by evaluating `f(i1, i2, i3)`; validates finiteness.
    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let (d1, d2, d3) = dims;
        let mut values = Vec::with_capacity(d1 * d2 * d3);
        for i1 in 0..d1 {
            for i2 in 0..d2 {
                for i3 in 0..d3 {
                    values.push(f(i1, i2, i3));
                }
            }
        }
        Self::new(dims, values)
    }

    pub(crate) fn from_parts(dims: Dims, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dims.0 * dims.1 * dims.2);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { dims, values }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Flat view of the entries in layout order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        let (_, d2, d3) = self.dims;
        self.values[i1 * d2 * d3 + i2 * d3 + i3]
    }

    /// Mode-`mode` unfolding.
    ///
    /// Mode 1 yields the `d1 x (d2*d3)` matrix with entry
    /// `(i1, i2*d3 + i3) = t(i1, i2, i3)`; mode 2 the `d2 x (d3*d1)` matrix
    /// with column `i3*d1 + i1`; mode 3 the `d3 x (d1*d2)` matrix with column
    /// `i1*d2 + i2`.
    pub fn matricize(&self, mode: Mode) -> Matrix {
        let (d1, d2, d3) = self.dims;
        match mode {
            // Mode 1 is a plain reshape of the layout.
            Mode::One => Matrix::from_parts(d1, d2 * d3, self.values.clone()),
            Mode::Two => {
                let mut out = vec![0.0; self.values.len()];
                let cols = d3 * d1;
                for i1 in 0..d1 {
                    for i2 in 0..d2 {
                        for i3 in 0..d3 {
                            out[i2 * cols + i3 * d1 + i1] = self.get(i1, i2, i3);
                        }
                    }
                }
                Matrix::from_parts(d2, cols, out)
            }
            Mode::Three => {
                let mut out = vec![0.0; self.values.len()];
                let cols = d1 * d2;
                for i1 in 0..d1 {
                    for i2 in 0..d2 {
                        for i3 in 0..d3 {
                            out[i3 * cols + i1 * d2 + i2] = self.get(i1, i2, i3);
                        }
                    }
                }
                Matrix::from_parts(d3, cols, out)
            }
        }
    }

    /// Inverse of [`Tensor3::matricize`]: reassembles a tensor of shape `dims`
    /// from its mode-`mode` unfolding.
    pub fn from_matricized(m: &Matrix, mode: Mode, dims: Dims) -> Result<Self> {
        let (d1, d2, d3) = dims;
        if d1 == 0 || d2 == 0 || d3 == 0 {
            return Err(Error::arg(format!(
                "tensor dimensions must be positive, got ({d1}, {d2}, {d3})"
            )));
        }
        let (want_rows, want_cols) = match mode {
            Mode::One => (d1, d2 * d3),
            Mode::Two => (d2, d3 * d1),
            Mode::Three => (d3, d1 * d2),
        };
        if m.rows() != want_rows || m.cols() != want_cols {
            return Err(Error::arg(format!(
                "mode-{mode} unfolding of a ({d1}, {d2}, {d3}) tensor is {want_rows}x{want_cols}, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let mut values = vec![0.0; d1 * d2 * d3];
        match mode {
            Mode::One => values.copy_from_slice(m.values()),
            Mode::Two => {
                for i1 in 0..d1 {
                    for i2 in 0..d2 {
                        for i3 in 0..d3 {
                            values[i1 * d2 * d3 + i2 * d3 + i3] = m.get(i2, i3 * d1 + i1);
                        }
                    }
                }
            }
            Mode::Three => {
                for i1 in 0..d1 {
                    for i2 in 0..d2 {
                        for i3 in 0..d3 {
                            values[i1 * d2 * d3 + i2 * d3 + i3] = m.get(i3, i1 * d2 + i2);
                        }
                    }
                }
            }
        }
        Ok(Self::from_parts(dims, values))
    }

    /// Marginal product `self x_mode m`: contracts the mode-`mode` fibers with
    /// the columns of `m`, replacing dimension `d_mode` by `m.rows()`.
    ///
    /// Realized as `m * matricize(self, mode)` folded back along the same
    /// mode.
    pub fn mode_product(&self, m: &Matrix, mode: Mode) -> Result<Self> {
        let d_mode = mode.dim_of(self.dims);
        if m.cols() != d_mode {
            return Err(Error::arg(format!(
                "mode-{mode} product needs {d_mode} columns, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let unfolded = self.matricize(mode);
        let product = m.matmul(&unfolded)?;
        let (d1, d2, d3) = self.dims;
        let new_dims = match mode {
            Mode::One => (m.rows(), d2, d3),
            Mode::Two => (d1, m.rows(), d3),
            Mode::Three => (d1, d2, m.rows()),
        };
        Self::from_matricized(&product, mode, new_dims)
    }

    /// Multilinear product `self x_1 u x_2 v x_3 w`. The three marginal
    /// products commute, so application order is immaterial.
    pub fn multilinear_product(&self, u: &Matrix, v: &Matrix, w: &Matrix) -> Result<Self> {
        self.mode_product(u, Mode::One)?
            .mode_product(v, Mode::Two)?
            .mode_product(w, Mode::Three)
    }

    pub fn add(&self, other: &Tensor3) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        Self::new(self.dims, self.values.iter().map(|v| v * factor).collect())
    }

    fn zip_with(&self, other: &Tensor3, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::arg(format!(
                "shape mismatch: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Self::new(
            self.dims,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }

    /// `(frobenius, linf)`: the Euclidean and max-absolute norms of the
    /// vectorized tensor.
    pub fn norms(&self) -> (f64, f64) {
        (self.frobenius(), self.max_abs())
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// The rank-one tensor `scale * u (x) v (x) w` with entry
/// `(i, j, k) = scale * u[i] * v[j] * w[k]`.
///
/// CP sums are built by accumulating these with [`Tensor3::add`].
pub fn rank1_tensor(u: &[f64], v: &[f64], w: &[f64], scale: f64) -> Result<Tensor3> {
    if u.is_empty() || v.is_empty() || w.is_empty() {
        return Err(Error::arg("rank1_tensor requires nonempty factor vectors"));
    }
    Tensor3::from_fn((u.len(), v.len(), w.len()), |i, j, k| {
        scale * u[i] * v[j] * w[k]
    })
}
