//! RGB gamut definitions and their RGB to XYZ matrices.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::color::cat02::{white_xyz, Xy};
use crate::color::matrix::Mat3;
use crate::color::ColorError;
use crate::scalar::Scalar;

pub const D65: Xy<f64> = [0.3127, 0.3290];
pub const D50: Xy<f64> = [0.3457, 0.3585];
/// ACES white (approximately D60).
pub const ACES_WHITE: Xy<f64> = [0.32168, 0.33767];

/// Named camera and working gamuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamut {
    Rec709,
    SGamut3,
    SGamut3Cine,
    RedWideGamutRgb,
    ArriWideGamut3,
    VGamut,
    /// ACES2065-1 (AP0), white at ACES D60.
    AcesAp0,
}

impl Gamut {
    pub const ALL: [Gamut; 7] =
        [Gamut::Rec709, Gamut::SGamut3, Gamut::SGamut3Cine, Gamut::RedWideGamutRgb, Gamut::ArriWideGamut3, Gamut::VGamut, Gamut::AcesAp0];

    pub fn name(&self) -> &'static str {
        match self {
            Gamut::Rec709 => "rec709",
            Gamut::SGamut3 => "sgamut3",
            Gamut::SGamut3Cine => "sgamut3cine",
            Gamut::RedWideGamutRgb => "redwidegamutrgb",
            Gamut::ArriWideGamut3 => "awg3",
            Gamut::VGamut => "vgamut",
            Gamut::AcesAp0 => "ap0",
        }
    }

    /// Primaries (R, G, B) and white point, as published by each vendor.
    pub fn primaries(&self) -> ([Xy<f64>; 3], Xy<f64>) {
        match self {
            Gamut::Rec709 => ([[0.64, 0.33], [0.30, 0.60], [0.15, 0.06]], D65),
            Gamut::SGamut3 => ([[0.730, 0.280], [0.140, 0.855], [0.100, -0.050]], D65),
            Gamut::SGamut3Cine => ([[0.766, 0.275], [0.225, 0.800], [0.089, -0.087]], D65),
            Gamut::RedWideGamutRgb => ([[0.780308, 0.304253], [0.121595, 1.493994], [0.095612, -0.084589]], D65),
            Gamut::ArriWideGamut3 => ([[0.6840, 0.3130], [0.2210, 0.8480], [0.0861, -0.1020]], D65),
            Gamut::VGamut => ([[0.730, 0.280], [0.165, 0.840], [0.100, -0.030]], D65),
            Gamut::AcesAp0 => ([[0.7347, 0.2653], [0.0, 1.0], [0.0001, -0.0770]], ACES_WHITE),
        }
    }

    /// The gamut that pairs with a camera's log curve by default.
    pub fn native_for(curve: crate::color::LogCurve) -> Gamut {
        use crate::color::LogCurve;
        match curve {
            LogCurve::SLog3 => Gamut::SGamut3Cine,
            LogCurve::Log3G10 => Gamut::RedWideGamutRgb,
            LogCurve::LogC3 => Gamut::ArriWideGamut3,
            LogCurve::VLog => Gamut::VGamut,
        }
    }
}

impl std::fmt::Display for Gamut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown gamut {0:?}")]
pub struct UnknownGamut(pub String);

impl FromStr for Gamut {
    type Err = UnknownGamut;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "rec709" | "bt709" | "srgb" => Gamut::Rec709,
            "sgamut3" => Gamut::SGamut3,
            "sgamut3cine" => Gamut::SGamut3Cine,
            "redwidegamutrgb" | "rwg" | "redwidegamut" => Gamut::RedWideGamutRgb,
            "awg3" | "arriwidegamut3" | "awg" => Gamut::ArriWideGamut3,
            "vgamut" => Gamut::VGamut,
            "ap0" | "aces" | "aces20651" | "acesap0" => Gamut::AcesAp0,
            _ => return Err(UnknownGamut(s.to_string())),
        })
    }
}

/// An RGB space's primaries matrix (RGB to XYZ) and white point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chromaticity<T> {
    to_xyz: Mat3<T>,
    white: Xy<T>,
}

impl<T: Scalar> Chromaticity<T> {
    /// Builds the normalised primaries matrix so that RGB (1,1,1) maps to the
    /// white point at Y = 1.
    pub fn from_primaries(primaries: [Xy<f64>; 3], white: Xy<f64>) -> Result<Self, ColorError> {
        if !(white[0] > 0.0 && white[0] < 1.0 && white[1] > 0.0 && white[1] < 1.0) {
            return Err(ColorError::InvalidWhitePoint(white[0], white[1]));
        }
        let mut p = [[0.0f64; 3]; 3];
        for (col, xy) in primaries.iter().enumerate() {
            if xy[1] == 0.0 {
                return Err(ColorError::NonInvertibleMatrix);
            }
            let xyz = white_xyz(*xy);
            for row in 0..3 {
                p[row][col] = xyz[row];
            }
        }
        let pm = Mat3::<f64>(p);
        let s = pm.inverse().ok_or(ColorError::NonInvertibleMatrix)?.apply(white_xyz(white));
        let npm = pm.mul(&Mat3::diag(s));
        Self::from_matrix(npm.cast(), [T::lit(white[0]), T::lit(white[1])])
    }

    /// Wraps an explicit RGB to XYZ matrix.
    pub fn from_matrix(to_xyz: Mat3<T>, white: Xy<T>) -> Result<Self, ColorError> {
        if to_xyz.inverse().is_none() {
            return Err(ColorError::NonInvertibleMatrix);
        }
        let (x, y) = (white[0].to_f64_lossy(), white[1].to_f64_lossy());
        if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
            return Err(ColorError::InvalidWhitePoint(x, y));
        }
        Ok(Self { to_xyz, white })
    }

    pub fn from_gamut(gamut: Gamut) -> Self {
        let (p, w) = gamut.primaries();
        Self::from_primaries(p, w).expect("built-in gamut is well formed")
    }

    pub fn to_xyz(&self) -> &Mat3<T> {
        &self.to_xyz
    }

    pub fn white(&self) -> Xy<T> {
        self.white
    }
}
