//! Multivariate empirical mode decomposition with a bit-faithful Q16.8
//! fixed-point datapath and an `f64` reference path.

pub mod analysis;
pub mod arith;
pub mod bench;
pub mod config;
pub mod decomposer;
pub mod directions;
pub mod error;
pub mod extrema;
pub mod fixed_point;
pub mod io;
pub mod signal;
pub mod sifting;
pub mod spline;
pub mod synth;
pub mod validation;

pub use arith::{ArithPath, FixedPath, PathKind, RealPath};
pub use config::RunConfig;
pub use decomposer::{decompose, ImfStack, StreamConfig, StreamOutput, StreamState};
pub use directions::DirectionSet;
pub use error::{MemdError, Result};
pub use fixed_point::{CsdConstant, FixedContext, FixedQ16_8};
pub use signal::{MultivariateSignal, Sample};
pub use sifting::{EnvelopeMode, MeanMode, SiftConfig, SplineWindow};
