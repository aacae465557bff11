//! Objective frame measurements: exposure percentiles in IRE and hue-shift
//! audits of protected tone ranges.

use serde::{Deserialize, Serialize};

use crate::frame::Frame;
use crate::scalar::{rec709_luma, Rgb, Scalar};

/// Fewest pixels [`exposure_profile`] accepts.
pub const MIN_PROFILE_PIXELS: usize = 100;
/// Default HSV saturation below which a pixel is considered hueless.
pub const DEFAULT_SATURATION_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("need at least {MIN_PROFILE_PIXELS} pixels, frame has {0}")]
    InsufficientData(usize),
    #[error("expected a display-referred frame, got {0}")]
    NotDisplayReferred(String),
    #[error("frames differ in size: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("invalid hue range {name:?}: {reason}")]
    InvalidHueRange { name: String, reason: String },
}

/// Black point, mid-gray and white point as the 1st, 50th and 99th
/// percentile of Rec.709 luma, in IRE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureProfile {
    pub black_point_ire: f64,
    pub mid_gray_ire: f64,
    pub white_point_ire: f64,
}

/// Nearest-rank percentile of ascending `sorted`: the value at rank
/// `ceil(p/100 * n)` (1-based), with rank clamped to [1, n].
pub fn nearest_rank<T: Copy>(sorted: &[T], p: f64) -> T {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn exposure_profile<T: Scalar>(frame: &Frame<T>) -> Result<ExposureProfile, StatsError> {
    if !frame.colorimetry().is_display() {
        return Err(StatsError::NotDisplayReferred(frame.colorimetry().to_string()));
    }
    if frame.len() < MIN_PROFILE_PIXELS {
        return Err(StatsError::InsufficientData(frame.len()));
    }
    let mut luma: Vec<f64> = frame.pixels().iter().map(|&p| rec709_luma(p).to_f64_lossy()).collect();
    luma.sort_by(f64::total_cmp);
    let ire = |p: f64| (100.0 * nearest_rank(&luma, p)).clamp(0.0, 100.0);
    Ok(ExposureProfile { black_point_ire: ire(1.0), mid_gray_ire: ire(50.0), white_point_ire: ire(99.0) })
}

/// HSV hue in degrees [0, 360), saturation and value. Hue is 0 for neutrals.
pub fn rgb_to_hsv(rgb: Rgb<f64>) -> (f64, f64, f64) {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let s = if max > 0.0 { chroma / max } else { 0.0 };
    if chroma <= 0.0 {
        return (0.0, s, max);
    }
    let h = if max == r {
        60.0 * ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / chroma + 2.0)
    } else {
        60.0 * ((r - g) / chroma + 4.0)
    };
    (h.rem_euclid(360.0), s, max)
}

/// Absolute angular difference on the hue circle, in [0, 180].
pub fn hue_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// A named hue interval in degrees. Wraps through 0 when `low_deg > high_deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HueRange {
    pub name: String,
    pub low_deg: f64,
    pub high_deg: f64,
}

impl HueRange {
    pub fn new(name: impl Into<String>, low_deg: f64, high_deg: f64) -> Result<Self, StatsError> {
        let r = Self { name: name.into(), low_deg, high_deg };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let bad = |reason: &str| StatsError::InvalidHueRange { name: self.name.clone(), reason: reason.into() };
        if self.name.trim().is_empty() {
            return Err(bad("name is empty"));
        }
        for v in [self.low_deg, self.high_deg] {
            if !(v.is_finite() && (0.0..360.0).contains(&v)) {
                return Err(bad("bounds must lie in [0, 360)"));
            }
        }
        Ok(())
    }

    pub fn contains(&self, hue: f64) -> bool {
        if self.low_deg <= self.high_deg {
            hue >= self.low_deg && hue <= self.high_deg
        } else {
            hue >= self.low_deg || hue <= self.high_deg
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneRangeReport {
    pub name: String,
    pub low_deg: f64,
    pub high_deg: f64,
    pub pixel_count: usize,
    pub mean_abs_hue_shift_deg: f64,
    pub max_abs_hue_shift_deg: f64,
    /// Mean of after/before HSV saturation; 1 when no pixel matched.
    pub mean_saturation_ratio: f64,
    /// True when no pixel of the reference frame fell in the range.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedToneReport {
    pub saturation_floor: f64,
    pub ranges: Vec<ToneRangeReport>,
}

impl ProtectedToneReport {
    pub fn worst_mean_shift(&self) -> f64 {
        self.ranges.iter().map(|r| r.mean_abs_hue_shift_deg).fold(0.0, f64::max)
    }
}

/// Measures how far each protected range's pixels moved in hue between
/// `before` and `after`. Membership is decided on the `before` frame, and
/// pixels whose saturation is under `saturation_floor` are skipped.
pub fn protected_tone_shift<T: Scalar>(
    before: &Frame<T>,
    after: &Frame<T>,
    ranges: &[HueRange],
    saturation_floor: f64,
) -> Result<ProtectedToneReport, StatsError> {
    if before.width() != after.width() || before.height() != after.height() {
        return Err(StatsError::SizeMismatch(before.width(), before.height(), after.width(), after.height()));
    }
    for f in [before, after] {
        if !f.colorimetry().is_display() {
            return Err(StatsError::NotDisplayReferred(f.colorimetry().to_string()));
        }
    }
    for r in ranges {
        r.validate()?;
    }

    #[derive(Default, Clone, Copy)]
    struct Acc {
        count: usize,
        sum_shift: f64,
        max_shift: f64,
        sum_ratio: f64,
    }
    let mut acc = vec![Acc::default(); ranges.len()];
    for (b, a) in before.pixels().iter().zip(after.pixels()) {
        let (hb, sb, _) = rgb_to_hsv(crate::scalar::cast_rgb(*b));
        if sb < saturation_floor {
            continue;
        }
        let (ha, sa, _) = rgb_to_hsv(crate::scalar::cast_rgb(*a));
        let shift = hue_distance(hb, ha);
        for (range, slot) in ranges.iter().zip(acc.iter_mut()) {
            if range.contains(hb) {
                slot.count += 1;
                slot.sum_shift += shift;
                slot.max_shift = slot.max_shift.max(shift);
                slot.sum_ratio += sa / sb;
            }
        }
    }
    let ranges = ranges
        .iter()
        .zip(acc)
        .map(|(r, a)| {
            let n = a.count as f64;
            ToneRangeReport {
                name: r.name.clone(),
                low_deg: r.low_deg,
                high_deg: r.high_deg,
                pixel_count: a.count,
                mean_abs_hue_shift_deg: if a.count == 0 { 0.0 } else { a.sum_shift / n },
                max_abs_hue_shift_deg: a.max_shift,
                mean_saturation_ratio: if a.count == 0 { 1.0 } else { a.sum_ratio / n },
                empty: a.count == 0,
            }
        })
        .collect();
    Ok(ProtectedToneReport { saturation_floor, ranges })
}
