//! Compactly supported pyramid-adapted hybrid 3D shearlet frames.
//!
//! The crate builds Fourier-side generator models, certifies frame bounds
//! from covering quantities, realizes the digital transform with FFTs and
//! runs N-term approximation experiments on cartoon-like volumes.

pub mod approx;
pub mod error;
pub mod fft3;
pub mod generators;
pub mod geometry;
pub mod frame;
pub mod solver;
pub mod stats;
pub mod phantom;
pub mod transform;
pub mod wavelet;

pub use error::{Result, ShearletError};
