//! Color math for log-to-display grading.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below pick the concrete types used by the rest of the workspace:
//! `f64` for grading parameters and interchange, `f32` for pixel buffers.

pub mod cdl;
pub mod color;
pub mod frame;
pub mod frame_io;
pub mod lut;
pub mod scalar;
pub mod stats;
pub mod synthetic;

pub use cdl::{adaptive_lift, apply_cdl, highlight_rolloff, validate_params, FieldPath, InvalidParams, RolloffConfig, Violation};
pub use color::{cat02_adapt, cst_to_rec709, decode_log, Chromaticity, ColorError, Gamut, LogCurve};
pub use frame::{Colorimetry, FrameError};
pub use lut::cube::{parse_cube, write_cube, CubeError};
pub use lut::{apply_lut_trilinear, compile_lut, LutError};
pub use scalar::{Rgb, Scalar};
pub use stats::{exposure_profile, protected_tone_shift, ExposureProfile, HueRange, ProtectedToneReport};

/// Grading parameters in double precision.
pub type CdlParams = cdl::CdlParams<f64>;
pub type CdlParamsF32 = cdl::CdlParams<f32>;
/// Pixel buffers in single precision.
pub type Frame = frame::Frame<f32>;
pub type FrameF64 = frame::Frame<f64>;
/// LUTs compiled and exchanged in double precision.
pub type Lut3D = lut::Lut3D<f64>;
/// LUTs used on the per-pixel render path.
pub type Lut3DF32 = lut::Lut3D<f32>;
pub type ChromaticityF64 = color::Chromaticity<f64>;
