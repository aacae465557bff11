//! Log decoding and the color space transform to display-referred Rec.709.
//!
//! The transform chain is fixed: log decode, camera gamut to XYZ, CAT02 to
//! D65, XYZ to Rec.709 primaries, hard clip of negatives, Rec.709 OETF,
//! clamp to [0, 1].

pub mod cat02;
pub mod curves;
pub mod gamut;
pub mod matrix;

pub use cat02::{cat02_adapt, cat02_matrix, Xy};
pub use curves::{LogCurve, UnknownCurve};
pub use gamut::{Chromaticity, Gamut, UnknownGamut, D50, D65};
pub use matrix::Mat3;

use rayon::prelude::*;

use crate::frame::{Colorimetry, Frame};
use crate::scalar::{Rgb, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ColorError {
    #[error("frame is tagged {found}, expected {expected}")]
    ColorimetryMismatch { expected: String, found: String },
    #[error("white point xy ({0}, {1}) is outside (0,1)^2")]
    InvalidWhitePoint(f64, f64),
    #[error("source white point has a zero CAT02 cone response")]
    DegenerateWhitePoint,
    #[error("gamut primaries matrix is not invertible")]
    NonInvertibleMatrix,
    #[error("color math produced a non-finite value at pixel {0}")]
    NonFinite(usize),
}

/// Rec.709 OETF (camera encoding), scene-linear to display code value.
#[inline]
pub fn rec709_oetf<T: Scalar>(l: T) -> T {
    if l < T::lit(0.018) {
        T::lit(4.5) * l
    } else {
        T::lit(1.099) * l.powf(T::lit(0.45)) - T::lit(0.099)
    }
}

#[inline]
pub fn rec709_oetf_inverse<T: Scalar>(v: T) -> T {
    if v < T::lit(0.081) {
        v / T::lit(4.5)
    } else {
        ((v + T::lit(0.099)) / T::lit(1.099)).powf(T::one() / T::lit(0.45))
    }
}

/// Decodes a camera-log frame to scene-linear in the same gamut.
pub fn decode_log<T: Scalar>(frame: &Frame<T>, curve: LogCurve) -> Result<Frame<T>, ColorError> {
    let gamut = match frame.colorimetry() {
        Colorimetry::CameraLog { curve: c, gamut } if c == curve => gamut,
        other => return Err(ColorError::ColorimetryMismatch { expected: format!("camera-log({curve}, *)"), found: other.to_string() }),
    };
    let pixels: Vec<Rgb<T>> = frame.pixels().par_iter().map(|p| [curve.decode(p[0]), curve.decode(p[1]), curve.decode(p[2])]).collect();
    if let Some(i) = pixels.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(ColorError::NonFinite(i));
    }
    Ok(Frame::from_parts_unchecked(frame.width(), frame.height(), pixels, Colorimetry::SceneLinear { gamut }))
}

/// Precomposed scene-linear to Rec.709 display transform for one source space.
#[derive(Debug, Clone, Copy)]
pub struct Rec709Transform<T> {
    to_rec709_linear: Mat3<T>,
}

impl<T: Scalar> Rec709Transform<T> {
    pub fn new(src: &Chromaticity<T>) -> Result<Self, ColorError> {
        let d65 = [T::lit(D65[0]), T::lit(D65[1])];
        let adapt = cat02_matrix(src.white(), d65)?;
        let rec709 = Chromaticity::<T>::from_gamut(Gamut::Rec709);
        let from_xyz = rec709.to_xyz().inverse().ok_or(ColorError::NonInvertibleMatrix)?;
        src.to_xyz().inverse().ok_or(ColorError::NonInvertibleMatrix)?;
        Ok(Self { to_rec709_linear: from_xyz.mul(&adapt.mul(src.to_xyz())) })
    }

    /// Scene-linear RGB to linear Rec.709 (before clipping and encoding).
    #[inline]
    pub fn linear(&self, rgb: Rgb<T>) -> Rgb<T> {
        self.to_rec709_linear.apply(rgb)
    }

    /// Scene-linear RGB to display-encoded Rec.709 in [0, 1].
    #[inline]
    pub fn apply(&self, rgb: Rgb<T>) -> Rgb<T> {
        let lin = self.linear(rgb);
        lin.map(|c| rec709_oetf(c.max(T::zero())).clamp01())
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.to_rec709_linear
    }
}

/// Maps a scene-linear frame to display-referred Rec.709.
pub fn cst_to_rec709<T: Scalar>(frame: &Frame<T>, src: &Chromaticity<T>) -> Result<Frame<T>, ColorError> {
    if !matches!(frame.colorimetry(), Colorimetry::SceneLinear { .. }) {
        return Err(ColorError::ColorimetryMismatch { expected: "scene-linear(*)".into(), found: frame.colorimetry().to_string() });
    }
    let xf = Rec709Transform::new(src)?;
    let pixels: Vec<Rgb<T>> = frame.pixels().par_iter().map(|&p| xf.apply(p)).collect();
    if let Some(i) = pixels.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(ColorError::NonFinite(i));
    }
    Ok(Frame::from_parts_unchecked(frame.width(), frame.height(), pixels, Colorimetry::Rec709Display))
}

/// Decode followed by the Rec.709 transform, using the gamut from the tag.
pub fn normalize_log_frame<T: Scalar>(frame: &Frame<T>, curve: LogCurve) -> Result<Frame<T>, ColorError> {
    let linear = decode_log(frame, curve)?;
    let gamut = match linear.colorimetry() {
        Colorimetry::SceneLinear { gamut } => gamut,
        _ => unreachable!("decode_log tags its output scene-linear"),
    };
    cst_to_rec709(&linear, &Chromaticity::from_gamut(gamut))
}
