//! Fourier contour embedding for arbitrary-shaped text detection.
//!
//! Text outlines are resampled into a canonical point sequence and encoded
//! as a short vector of Fourier coefficients. Around that encoding the crate
//! provides training-target generation, a detection decoder (inverse
//! transform plus polygon NMS), reference loss functions, IoU-based
//! evaluation and a fidelity benchmark.

pub mod annotations;
pub mod decode;
pub mod error;
pub mod eval;
pub mod fidelity;
pub mod fourier;
pub mod geometry;
pub mod losses;
pub mod numfmt;
pub mod synth;
pub mod targets;
pub mod tensor;

pub use annotations::{AnnotatedImage, TextInstance};
pub use decode::{Detection, PredictionMaps};
pub use error::{Error, Result};
pub use eval::EvalReport;
pub use fourier::{embed, fourier_coefficients, recenter, reconstruct, FourierSignature};
pub use geometry::{Contour, Point2, ResampledContour};
pub use losses::LossBreakdown;
pub use targets::{Level, LevelSpec, TargetMaps};
