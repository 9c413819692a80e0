//! Continuous facial affect regression from images.
//!
//! The crate covers the full desk-scale experimental pipeline: manifest-based
//! dataset ingestion, mask-overlay dataset generation, a light-weight
//! convolutional network with a shunting-inhibitory final layer and two linear
//! regression heads (arousal, valence), seeded training with layer-freeze
//! fine-tuning schemes, concordance-correlation evaluation, TPE hyperparameter
//! search, and saliency-map export.

pub mod dataset;
pub mod error;
pub mod hpo;
pub mod imgops;
pub mod masking;
pub mod metrics;
pub mod model;
pub mod saliency;
pub mod training;

pub use error::{Error, Result};
