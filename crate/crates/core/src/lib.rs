//! Progressive image generation without neural networks.
//!
//! The model factors generation into three stages: a core generator that
//! samples low-resolution images from a Gaussian mixture fitted over an
//! invertible Saab feature space, a resolution enhancer that doubles
//! resolution by sampling edge-masked detail conditioned on the upsampled
//! content, and a quality booster that transfers residual texture from
//! stored training exemplars via locally linear embedding. Attribute-guided
//! generation routes queries to per-cluster models by cosine distance.

pub mod attributes;
pub mod booster;
pub mod datasets;
pub mod enhancer;
pub mod error;
pub mod eval;
pub mod generator;
pub mod gmm;
pub mod imageops;
pub mod kmeans;
pub mod matrix;
pub mod pipeline;
pub mod rng;
pub mod saab;

mod archive;
mod linalg;

pub use error::{Error, Result};
pub use imageops::{EdgeMask, ImageTensor, ResidualTensor};
