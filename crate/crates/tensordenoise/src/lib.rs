//! Entrywise-accurate estimation of low multilinear-rank tensors observed
//! under IID Gaussian noise.
//!
//! The pipeline in brief: unfold the noisy tensor along each mode, estimate
//! the top left singular vectors from the small Gram matrix of each unfolding
//! (the second-order route), correct their systematic radial shrinkage using
//! a second independent sample, and project the observation onto the
//! corrected bases to obtain a denoised tensor whose entrywise (not just
//! aggregate) error is controlled.
//!
//! Crate layout:
//!
//! * [`tensor`] and [`matrix`]: dense `d1 x d2 x d3` tensors, unfoldings,
//!   mode products.
//! * [`spectral`]: Gram-route singular vectors, eigengaps, diagnostics and
//!   the denoising conditions.
//! * [`estimators`]: HOSVD, two-sample bias correction, the scaled-projector
//!   denoiser.
//! * [`apps`]: two-class Gaussian-mixture clustering and planted-subtensor
//!   localization.
//! * [`sim`]: the seeded Monte-Carlo harness behind the `tensordenoise` CLI.
//! * [`io`]: plain-text tensor/matrix persistence.

pub mod apps;
pub mod error;
pub mod estimators;
pub mod io;
pub mod matrix;
pub mod sim;
pub mod spectral;
pub mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use estimators::{denoise, estimate_bias, hosvd, scaled_basis, HosvdResult, ScaledBasis};
pub use matrix::Matrix;
pub use spectral::{
    check_denoise_conditions, coherence, delta_bound, eigengap, left_singular_secondorder,
    sign_align, subspace_distance, symmetric_eigen_desc, ConditionReport, SpectralBasis,
};
pub use tensor::{rank1_tensor, Dims, Mode, Tensor3};

/// Keeps the guide in `book/` honest: every fenced Rust block in the chapters
/// compiles and runs as a doctest of this crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/secondorder.md")]
    mod secondorder {}
    #[doc = include_str!("../../../book/src/bias.md")]
    mod bias {}
    #[doc = include_str!("../../../book/src/denoising.md")]
    mod denoising {}
    #[doc = include_str!("../../../book/src/applications.md")]
    mod applications {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
