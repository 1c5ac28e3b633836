//! Measuring and mitigating group representation bias in adversarially trained generators.
//!
//! The crate covers a small dense autodiff engine ([`numerics`]), MLP generators and
//! discriminators ([`models`]), grouped synthetic datasets ([`data`]), GAN and
//! conditional GAN training ([`training`]), boosted generator ensembles
//! ([`ensemble`]), group-rate metrics ([`fairness`]), and the multi-seed experiment
//! runner used by the command-line tool ([`experiment`]).

pub mod data;
pub mod diagnostics;
pub mod ensemble;
pub mod experiment;
mod error;
pub mod fairness;
pub mod models;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
