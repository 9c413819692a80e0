//! placeholder
pub mod scalar;
