//! Camera log transfer curves.
//!
//! Only the four curves listed on [`LogCurve`] are supported; anything else is
//! rejected when parsed rather than approximated by a nearby curve.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogCurve {
    /// Sony S-Log3.
    SLog3,
    /// RED Log3G10 (IPP2, v3 constants).
    Log3G10,
    /// ARRI LogC3 at EI 800.
    LogC3,
    /// Panasonic V-Log.
    VLog,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported log curve {0:?} (expected one of slog3, log3g10, logc3, vlog)")]
pub struct UnknownCurve(pub String);

impl FromStr for LogCurve {
    type Err = UnknownCurve;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "slog3" => Ok(LogCurve::SLog3),
            "log3g10" | "redlog3g10" => Ok(LogCurve::Log3G10),
            "logc3" | "logc" | "arrilogc3" => Ok(LogCurve::LogC3),
            "vlog" => Ok(LogCurve::VLog),
            _ => Err(UnknownCurve(s.to_string())),
        }
    }
}

impl std::fmt::Display for LogCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

// Sony, "Technical Summary for S-Gamut3.Cine/S-Log3 and S-Gamut3/S-Log3".
mod slog3 {
    pub const CUT_LIN: f64 = 0.01125;
    pub const CUT_CODE: f64 = 171.2102946929;
    pub const BLACK_CODE: f64 = 95.0;
    pub const GRAY_CODE: f64 = 420.0;
    pub const SLOPE: f64 = 261.5;
}

// RED, "REDWideGamutRGB and Log3G10" white paper (v3 of the curve).
mod log3g10 {
    pub const A: f64 = 0.224282;
    pub const B: f64 = 155.975327;
    pub const C: f64 = 0.01;
    pub const G: f64 = 15.1927;
}

// ARRI, "ALEXA Log C Curve - Usage in VFX", EI 800 row.
mod logc3 {
    pub const CUT: f64 = 0.010591;
    pub const A: f64 = 5.555556;
    pub const B: f64 = 0.052272;
    pub const C: f64 = 0.247190;
    pub const D: f64 = 0.385537;
    pub const E: f64 = 5.367655;
    pub const F: f64 = 0.092809;
}

// Panasonic, "V-Log/V-Gamut Reference Manual" (2014).
mod vlog {
    pub const CUT_LIN: f64 = 0.01;
    pub const CUT_CODE: f64 = 0.181;
    pub const B: f64 = 0.00873;
    pub const C: f64 = 0.241514;
    pub const D: f64 = 0.598206;
}

impl LogCurve {
    pub const ALL: [LogCurve; 4] = [LogCurve::SLog3, LogCurve::Log3G10, LogCurve::LogC3, LogCurve::VLog];

    pub fn name(&self) -> &'static str {
        match self {
            LogCurve::SLog3 => "slog3",
            LogCurve::Log3G10 => "log3g10",
            LogCurve::LogC3 => "logc3",
            LogCurve::VLog => "vlog",
        }
    }

    /// Code value to scene-linear reflectance.
    #[inline]
    pub fn decode<T: Scalar>(&self, code: T) -> T {
        let l = T::lit;
        let ten = l(10.0);
        match self {
            LogCurve::SLog3 => {
                let x = code * l(1023.0);
                if x >= l(slog3::CUT_CODE) {
                    ten.powf((x - l(slog3::GRAY_CODE)) / l(slog3::SLOPE)) * l(0.19) - l(0.01)
                } else {
                    (x - l(slog3::BLACK_CODE)) * l(slog3::CUT_LIN) / l(slog3::CUT_CODE - slog3::BLACK_CODE)
                }
            }
            LogCurve::Log3G10 => {
                if code < T::zero() {
                    code / l(log3g10::G) - l(log3g10::C)
                } else {
                    (ten.powf(code / l(log3g10::A)) - T::one()) / l(log3g10::B) - l(log3g10::C)
                }
            }
            LogCurve::LogC3 => {
                if code > l(logc3::E * logc3::CUT + logc3::F) {
                    (ten.powf((code - l(logc3::D)) / l(logc3::C)) - l(logc3::B)) / l(logc3::A)
                } else {
                    (code - l(logc3::F)) / l(logc3::E)
                }
            }
            LogCurve::VLog => {
                if code < l(vlog::CUT_CODE) {
                    (code - l(0.125)) / l(5.6)
                } else {
                    ten.powf((code - l(vlog::D)) / l(vlog::C)) - l(vlog::B)
                }
            }
        }
    }

    /// Scene-linear reflectance to code value.
    #[inline]
    pub fn encode<T: Scalar>(&self, lin: T) -> T {
        let l = T::lit;
        match self {
            LogCurve::SLog3 => {
                if lin >= l(slog3::CUT_LIN) {
                    (l(slog3::GRAY_CODE) + ((lin + l(0.01)) / l(0.19)).log10() * l(slog3::SLOPE)) / l(1023.0)
                } else {
                    (lin * l(slog3::CUT_CODE - slog3::BLACK_CODE) / l(slog3::CUT_LIN) + l(slog3::BLACK_CODE)) / l(1023.0)
                }
            }
            LogCurve::Log3G10 => {
                let x = lin + l(log3g10::C);
                if x < T::zero() {
                    x * l(log3g10::G)
                } else {
                    l(log3g10::A) * (x * l(log3g10::B) + T::one()).log10()
                }
            }
            LogCurve::LogC3 => {
                if lin > l(logc3::CUT) {
                    l(logc3::C) * (l(logc3::A) * lin + l(logc3::B)).log10() + l(logc3::D)
                } else {
                    l(logc3::E) * lin + l(logc3::F)
                }
            }
            LogCurve::VLog => {
                if lin < l(vlog::CUT_LIN) {
                    l(5.6) * lin + l(0.125)
                } else {
                    l(vlog::C) * (lin + l(vlog::B)).log10() + l(vlog::D)
                }
            }
        }
    }

    /// Linear value reached at code value 1.0.
    pub fn clip_point(&self) -> f64 {
        self.decode(1.0f64)
    }

    /// Linear value at code value 0.0 (the curve's toe).
    pub fn toe(&self) -> f64 {
        self.decode(0.0f64)
    }

    /// Decoded value for each 16-bit code value `v / 65535`.
    pub fn decode_table_u16(&self) -> Vec<f32> {
        (0..=u16::MAX).map(|v| self.decode(v as f64 / 65535.0) as f32).collect()
    }
}
