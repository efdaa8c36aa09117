//! Minutia detection reliability from Monte-Carlo dropout, fingerprint quality
//! built on it, and the synthetic data, extraction, matching and evaluation
//! needed to measure it.

pub mod domain;
pub mod error;
pub mod eval;
pub mod extraction;
pub mod imgproc;
pub mod matcher;
pub mod neuralnet;
pub mod pipeline;
pub mod reliability;
pub mod rng;
pub mod scalar;
pub mod synthgen;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Network = neuralnet::NetworkParams<f64>;
pub type Network32 = neuralnet::NetworkParams<f32>;
pub type Prediction = reliability::StochasticPrediction<f64>;
pub type Prediction32 = reliability::StochasticPrediction<f32>;
pub type Quality = reliability::FingerprintQuality<f64>;
pub type Quality32 = reliability::FingerprintQuality<f32>;
