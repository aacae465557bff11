//! In-memory RGB frames tagged with their colorimetry.

use serde::{Deserialize, Serialize};

use crate::color::{Gamut, LogCurve};
use crate::scalar::{Rgb, Scalar};

/// How the pixel values of a [`Frame`] are to be interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Colorimetry {
    /// Camera log encoding: code values in [0, 1].
    CameraLog { curve: LogCurve, gamut: Gamut },
    /// Scene-referred linear light in the given gamut. May exceed 1.
    SceneLinear { gamut: Gamut },
    /// Rec.709 primaries, D65, display encoded, channels in [0, 1].
    Rec709Display,
}

impl Colorimetry {
    pub fn is_display(&self) -> bool {
        matches!(self, Colorimetry::Rec709Display)
    }
}

impl std::fmt::Display for Colorimetry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Colorimetry::CameraLog { curve, gamut } => write!(f, "camera-log({curve}, {gamut})"),
            Colorimetry::SceneLinear { gamut } => write!(f, "scene-linear({gamut})"),
            Colorimetry::Rec709Display => f.write_str("rec709-display"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FrameError {
    #[error("pixel buffer holds {found} pixels, expected {width}x{height}")]
    DimensionMismatch { width: usize, height: usize, found: usize },
    #[error("non-finite channel value at pixel {index}")]
    NonFinite { index: usize },
    #[error("display-referred pixel {index} has a channel outside [0, 1]")]
    OutOfDisplayRange { index: usize },
    #[error("frames differ in size: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
}

/// A row-major RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T> {
    width: usize,
    height: usize,
    pixels: Vec<Rgb<T>>,
    colorimetry: Colorimetry,
}

impl<T: Scalar> Frame<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb<T>>, colorimetry: Colorimetry) -> Result<Self, FrameError> {
        if pixels.len() != width * height {
            return Err(FrameError::DimensionMismatch { width, height, found: pixels.len() });
        }
        let display = colorimetry.is_display();
        for (index, px) in pixels.iter().enumerate() {
            if px.iter().any(|c| !c.is_finite()) {
                return Err(FrameError::NonFinite { index });
            }
            if display && px.iter().any(|&c| c < T::zero() || c > T::one()) {
                return Err(FrameError::OutOfDisplayRange { index });
            }
        }
        Ok(Self { width, height, pixels, colorimetry })
    }

    /// Builds a frame from pixels produced by this crate's own pipelines,
    /// whose outputs satisfy the invariants by construction.
    pub(crate) fn from_parts_unchecked(width: usize, height: usize, pixels: Vec<Rgb<T>>, colorimetry: Colorimetry) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        Self { width, height, pixels, colorimetry }
    }

    /// A frame filled with one value.
    pub fn filled(width: usize, height: usize, value: Rgb<T>, colorimetry: Colorimetry) -> Result<Self, FrameError> {
        Self::new(width, height, vec![value; width * height], colorimetry)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[Rgb<T>] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<Rgb<T>> {
        self.pixels
    }

    pub fn colorimetry(&self) -> Colorimetry {
        self.colorimetry
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb<T> {
        self.pixels[y * self.width + x]
    }

    /// Area-average downscale so that the longest edge is at most `long_edge`.
    /// Frames already within the bound are returned unchanged.
    pub fn downscale_to(&self, long_edge: usize) -> Self {
        let long = self.width.max(self.height);
        if long <= long_edge || long_edge == 0 {
            return self.clone();
        }
        let scale = long as f64 / long_edge as f64;
        let nw = ((self.width as f64 / scale).round() as usize).max(1);
        let nh = ((self.height as f64 / scale).round() as usize).max(1);
        let mut out = Vec::with_capacity(nw * nh);
        for oy in 0..nh {
            let y0 = oy * self.height / nh;
            let y1 = ((oy + 1) * self.height / nh).max(y0 + 1);
            for ox in 0..nw {
                let x0 = ox * self.width / nw;
                let x1 = ((ox + 1) * self.width / nw).max(x0 + 1);
                let mut acc = [0.0f64; 3];
                for y in y0..y1 {
                    for px in &self.pixels[y * self.width + x0..y * self.width + x1] {
                        for c in 0..3 {
                            acc[c] += px[c].to_f64_lossy();
                        }
                    }
                }
                let n = ((y1 - y0) * (x1 - x0)) as f64;
                out.push([T::lit(acc[0] / n), T::lit(acc[1] / n), T::lit(acc[2] / n)]);
            }
        }
        Self::from_parts_unchecked(nw, nh, out, self.colorimetry)
    }

    /// Converts the pixel storage to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Frame<U> {
        Frame {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| crate::scalar::cast_rgb(p)).collect(),
            colorimetry: self.colorimetry,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_pixel_count() {
        let err = Frame::<f32>::new(2, 2, vec![[0.0; 3]; 3], Colorimetry::Rec709Display).unwrap_err();
        assert!(matches!(err, FrameError::DimensionMismatch { found: 3, .. }));
    }

    #[test]
    fn rejects_nan_and_display_overflow() {
        let nan = Frame::<f64>::new(1, 1, vec![[f64::NAN, 0.0, 0.0]], Colorimetry::Rec709Display);
        assert_eq!(nan.unwrap_err(), FrameError::NonFinite { index: 0 });
        let hot = Frame::<f64>::new(1, 1, vec![[1.5, 0.0, 0.0]], Colorimetry::Rec709Display);
        assert_eq!(hot.unwrap_err(), FrameError::OutOfDisplayRange { index: 0 });
        // scene-linear may exceed 1
        let lin = Frame::<f64>::new(1, 1, vec![[4.0, 0.0, 0.0]], Colorimetry::SceneLinear { gamut: Gamut::SGamut3 });
        assert!(lin.is_ok());
    }

    #[test]
    fn downscale_preserves_constant_and_aspect() {
        let f = Frame::<f32>::filled(1920, 1080, [0.25, 0.5, 0.75], Colorimetry::Rec709Display).unwrap();
        let d = f.downscale_to(768);
        assert_eq!((d.width(), d.height()), (768, 432));
        assert!(d.pixels().iter().all(|p| (p[0] - 0.25).abs() < 1e-6 && (p[2] - 0.75).abs() < 1e-6));
        let same = f.downscale_to(4000);
        assert_eq!(same.width(), 1920);
    }
}
