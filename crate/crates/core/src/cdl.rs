//! The grading pipeline applied to every lattice node and preview pixel.
//!
//! Stages, in order: gain, clamp, adaptive lift, clamp, gamma, contrast about
//! pivot, Rec.709-weighted saturation, optional exponential highlight shoulder,
//! final clamp. Gain, gamma, contrast and saturation follow ASC-CDL v1.2
//! semantics; lift and the shoulder are the two non-standard stages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::{rec709_luma, Rgb, Scalar};

/// The grading decision: lift, gamma and gain per channel plus global
/// saturation, contrast and contrast pivot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct CdlParams<T> {
    pub lift: Rgb<T>,
    pub gamma: Rgb<T>,
    pub gain: Rgb<T>,
    pub saturation: T,
    pub contrast: T,
    pub pivot: T,
}

/// Default contrast pivot (a common grading-suite default).
pub const DEFAULT_PIVOT: f64 = 0.435;

impl<T: Scalar> CdlParams<T> {
    pub fn identity() -> Self {
        Self {
            lift: [T::zero(); 3],
            gamma: [T::one(); 3],
            gain: [T::one(); 3],
            saturation: T::one(),
            contrast: T::one(),
            pivot: T::lit(DEFAULT_PIVOT),
        }
    }

    pub fn is_identity(&self) -> bool {
        let id = Self::identity();
        self.lift == id.lift
            && self.gamma == id.gamma
            && self.gain == id.gain
            && self.saturation == id.saturation
            && self.contrast == id.contrast
    }

    pub fn get(&self, field: FieldPath) -> T {
        use FieldPath::*;
        match field {
            LiftR => self.lift[0],
            LiftG => self.lift[1],
            LiftB => self.lift[2],
            GammaR => self.gamma[0],
            GammaG => self.gamma[1],
            GammaB => self.gamma[2],
            GainR => self.gain[0],
            GainG => self.gain[1],
            GainB => self.gain[2],
            Saturation => self.saturation,
            Contrast => self.contrast,
            Pivot => self.pivot,
        }
    }

    pub fn set(&mut self, field: FieldPath, value: T) {
        use FieldPath::*;
        let slot = match field {
            LiftR => &mut self.lift[0],
            LiftG => &mut self.lift[1],
            LiftB => &mut self.lift[2],
            GammaR => &mut self.gamma[0],
            GammaG => &mut self.gamma[1],
            GammaB => &mut self.gamma[2],
            GainR => &mut self.gain[0],
            GainG => &mut self.gain[1],
            GainB => &mut self.gain[2],
            Saturation => &mut self.saturation,
            Contrast => &mut self.contrast,
            Pivot => &mut self.pivot,
        };
        *slot = value;
    }

    pub fn cast<U: Scalar>(&self) -> CdlParams<U> {
        let c = |v: T| U::lit(v.to_f64_lossy());
        CdlParams {
            lift: self.lift.map(c),
            gamma: self.gamma.map(c),
            gain: self.gain.map(c),
            saturation: c(self.saturation),
            contrast: c(self.contrast),
            pivot: c(self.pivot),
        }
    }

    /// One `path=value` line per field in [`FieldPath::ALL`] order, values in
    /// shortest round-trip decimal form. Two parameter sets serialize to
    /// lines that differ exactly where the fields differ bitwise.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        for f in FieldPath::ALL {
            out.push_str(f.as_str());
            out.push('=');
            out.push_str(&format!("{:?}", self.get(f).to_f64_lossy()));
            out.push('\n');
        }
        out
    }
}

impl<T: Scalar> Default for CdlParams<T> {
    fn default() -> Self {
        Self::identity()
    }
}

/// Address of one scalar field of [`CdlParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FieldPath {
    LiftR,
    LiftG,
    LiftB,
    GammaR,
    GammaG,
    GammaB,
    GainR,
    GainG,
    GainB,
    Saturation,
    Contrast,
    Pivot,
}

impl FieldPath {
    pub const ALL: [FieldPath; 12] = [
        FieldPath::LiftR,
        FieldPath::LiftG,
        FieldPath::LiftB,
        FieldPath::GammaR,
        FieldPath::GammaG,
        FieldPath::GammaB,
        FieldPath::GainR,
        FieldPath::GainG,
        FieldPath::GainB,
        FieldPath::Saturation,
        FieldPath::Contrast,
        FieldPath::Pivot,
    ];

    pub fn as_str(&self) -> &'static str {
        use FieldPath::*;
        match self {
            LiftR => "lift.r",
            LiftG => "lift.g",
            LiftB => "lift.b",
            GammaR => "gamma.r",
            GammaG => "gamma.g",
            GammaB => "gamma.b",
            GainR => "gain.r",
            GainG => "gain.g",
            GainB => "gain.b",
            Saturation => "saturation",
            Contrast => "contrast",
            Pivot => "pivot",
        }
    }

    /// Inclusive/exclusive bounds of the field's valid range.
    pub fn range(&self) -> Range {
        use FieldPath::*;
        match self {
            LiftR | LiftG | LiftB => Range::closed(-0.5, 0.5),
            GammaR | GammaG | GammaB => Range::left_open(0.2, 5.0),
            GainR | GainG | GainB => Range::left_open(0.0, 4.0),
            Saturation => Range::closed(0.0, 4.0),
            Contrast => Range::closed(0.25, 4.0),
            Pivot => Range::open(0.0, 1.0),
        }
    }
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<FieldPath> for String {
    fn from(f: FieldPath) -> Self {
        f.as_str().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown parameter field {0:?}")]
pub struct UnknownField(pub String);

impl FromStr for FieldPath {
    type Err = UnknownField;

    /// Accepts `lift.b`, `lift.blue`, `Lift Blue`, `lift_b`, `sat`, ...
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower.split(['.', '_', ' ', '/']).filter(|p| !p.is_empty());
        let head = parts.next().unwrap_or("");
        let tail = parts.next();
        if parts.next().is_some() {
            return Err(UnknownField(s.to_string()));
        }
        let channel = match tail {
            None => None,
            Some("r" | "red") => Some(0),
            Some("g" | "green") => Some(1),
            Some("b" | "blue") => Some(2),
            Some(_) => return Err(UnknownField(s.to_string())),
        };
        use FieldPath::*;
        let field = match (head, channel) {
            ("lift" | "offset", Some(c)) => [LiftR, LiftG, LiftB][c],
            ("gamma" | "power", Some(c)) => [GammaR, GammaG, GammaB][c],
            ("gain" | "slope", Some(c)) => [GainR, GainG, GainB][c],
            ("saturation" | "sat", None) => Saturation,
            ("contrast", None) => Contrast,
            ("pivot", None) => Pivot,
            _ => return Err(UnknownField(s.to_string())),
        };
        Ok(field)
    }
}

impl TryFrom<String> for FieldPath {
    type Error = UnknownField;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A real interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub min_inclusive: bool,
    pub max_inclusive: bool,
}

impl Range {
    const fn closed(min: f64, max: f64) -> Self {
        Self { min, max, min_inclusive: true, max_inclusive: true }
    }

    const fn left_open(min: f64, max: f64) -> Self {
        Self { min, max, min_inclusive: false, max_inclusive: true }
    }

    const fn open(min: f64, max: f64) -> Self {
        Self { min, max, min_inclusive: false, max_inclusive: false }
    }

    pub fn contains(&self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        let lo = if self.min_inclusive { v >= self.min } else { v > self.min };
        let hi = if self.max_inclusive { v <= self.max } else { v < self.max };
        lo && hi
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}, {}{}", if self.min_inclusive { '[' } else { '(' }, self.min, self.max, if self.max_inclusive { ']' } else { ')' })
    }
}

/// A field outside its allowed range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: FieldPath,
    pub value: f64,
    pub range: Range,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} is outside {}", self.field, self.value, self.range)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid grading parameters: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidParams(pub Vec<Violation>);

/// Every field outside its range; empty when the parameters are valid.
pub fn validate_params<T: Scalar>(params: &CdlParams<T>) -> Vec<Violation> {
    FieldPath::ALL
        .iter()
        .filter_map(|&field| {
            let value = params.get(field).to_f64_lossy();
            let range = field.range();
            (!range.contains(value)).then_some(Violation { field, value, range })
        })
        .collect()
}

pub fn check_params<T: Scalar>(params: &CdlParams<T>) -> Result<(), InvalidParams> {
    let v = validate_params(params);
    if v.is_empty() {
        Ok(())
    } else {
        Err(InvalidParams(v))
    }
}

/// Exponential shoulder configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloffConfig {
    pub tau: f64,
    pub enabled: bool,
}

impl Default for RolloffConfig {
    fn default() -> Self {
        Self { tau: 0.8, enabled: true }
    }
}

impl RolloffConfig {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }

    pub fn is_valid(&self) -> bool {
        self.tau > 0.0 && self.tau < 1.0
    }
}

/// `x + lift * (1 - x)` per channel: the offset fades out towards white.
#[inline]
pub fn adaptive_lift<T: Scalar>(x_gain: Rgb<T>, lift: Rgb<T>) -> Rgb<T> {
    [0, 1, 2].map(|c| x_gain[c] + lift[c] * (T::one() - x_gain[c]))
}

/// Identity up to `tau`, then `tau + (1-tau)(1 - exp(-(x-tau)/(1-tau)))`,
/// which is C1 at `tau` and approaches 1 asymptotically.
///
/// Far into the shoulder the exponential term drops below half an ulp of 1,
/// so the result is held at the largest representable value under 1.
#[inline]
pub fn highlight_rolloff<T: Scalar>(x: T, tau: T) -> T {
    if x <= tau {
        return x;
    }
    let span = T::one() - tau;
    let y = tau + span * (T::one() - (-(x - tau) / span).exp());
    y.min(T::one() - T::epsilon() / T::lit(2.0))
}

/// Grades one RGB value without validating `params`.
#[inline]
pub fn apply_cdl_unchecked<T: Scalar>(rgb: Rgb<T>, params: &CdlParams<T>, rolloff: RolloffConfig) -> Rgb<T> {
    let x = [0, 1, 2].map(|c| (rgb[c] * params.gain[c]).clamp01());
    let x = adaptive_lift(x, params.lift).map(|v| v.clamp01());
    let x = [0, 1, 2].map(|c| if x[c] == T::zero() { T::zero() } else { x[c].powf(T::one() / params.gamma[c]) });
    let x = x.map(|v| (v - params.pivot) * params.contrast + params.pivot);
    let luma = rec709_luma(x);
    let x = x.map(|v| luma + params.saturation * (v - luma));
    let x = if rolloff.enabled {
        let tau = T::lit(rolloff.tau);
        x.map(|v| highlight_rolloff(v, tau))
    } else {
        x
    };
    x.map(|v| v.clamp01())
}

/// Grades one RGB value; invalid parameters are reported, never clamped.
pub fn apply_cdl<T: Scalar>(rgb: Rgb<T>, params: &CdlParams<T>, rolloff: RolloffConfig) -> Result<Rgb<T>, InvalidParams> {
    check_params(params)?;
    Ok(apply_cdl_unchecked(rgb, params, rolloff))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Rgb<f64>, b: Rgb<f64>, tol: f64) -> bool {
        (0..3).all(|c| (a[c] - b[c]).abs() <= tol)
    }

    #[test]
    fn adaptive_lift_examples() {
        assert_eq!(adaptive_lift([1.0f64; 3], [0.3, -0.2, 0.5]), [1.0; 3]);
        assert_eq!(adaptive_lift([0.0f64; 3], [0.04, 0.0, -0.02]), [0.04, 0.0, -0.02]);
        assert!(close(adaptive_lift([0.5; 3], [0.04; 3]), [0.52; 3], 1e-12));
    }

    #[test]
    fn rolloff_examples() {
        assert_eq!(highlight_rolloff(0.8f64, 0.8), 0.8);
        assert_eq!(highlight_rolloff(0.5f64, 0.8), 0.5);
        // 0.8 + 0.2 * (1 - e^-1), evaluated independently
        assert!((highlight_rolloff(1.0f64, 0.8) - 0.9264241117657115).abs() < 1e-12);
    }

    #[test]
    fn pipeline_examples() {
        let off = RolloffConfig::disabled();
        let id = CdlParams::<f64>::identity();
        assert!(close(apply_cdl([0.3, 0.6, 0.9], &id, off).unwrap(), [0.3, 0.6, 0.9], 1e-6));

        let gain = CdlParams { gain: [1.2; 3], ..id };
        assert!(close(apply_cdl([0.18; 3], &gain, off).unwrap(), [0.216; 3], 1e-12));

        let con = CdlParams { contrast: 2.0, pivot: 0.435, ..id };
        assert!(close(apply_cdl([0.5; 3], &con, off).unwrap(), [0.565; 3], 1e-12));
    }

    #[test]
    fn invalid_params_are_rejected_not_clamped() {
        let bad = CdlParams { gamma: [0.0, 1.0, 1.0], ..CdlParams::<f64>::identity() };
        let err = apply_cdl([0.5; 3], &bad, RolloffConfig::default()).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].field, FieldPath::GammaR);
    }

    #[test]
    fn validation_examples() {
        assert!(validate_params(&CdlParams::<f64>::identity()).is_empty());
        let two = CdlParams { lift: [0.6, 0.0, 0.0], saturation: 5.0, ..CdlParams::<f64>::identity() };
        let v = validate_params(&two);
        assert_eq!(v.iter().map(|v| v.field).collect::<Vec<_>>(), vec![FieldPath::LiftR, FieldPath::Saturation]);
        let nan = CdlParams { contrast: f64::NAN, ..CdlParams::<f64>::identity() };
        assert_eq!(validate_params(&nan).len(), 1);
    }

    #[test]
    fn field_paths_parse_aliases() {
        assert_eq!("lift.b".parse::<FieldPath>().unwrap(), FieldPath::LiftB);
        assert_eq!("Lift Blue".parse::<FieldPath>().unwrap(), FieldPath::LiftB);
        assert_eq!("gain.red".parse::<FieldPath>().unwrap(), FieldPath::GainR);
        assert_eq!("sat".parse::<FieldPath>().unwrap(), FieldPath::Saturation);
        assert!("lift".parse::<FieldPath>().is_err());
        assert!("gain.x".parse::<FieldPath>().is_err());
        for f in FieldPath::ALL {
            assert_eq!(f.as_str().parse::<FieldPath>().unwrap(), f);
        }
    }

    #[test]
    fn canonical_string_has_one_line_per_field() {
        let s = CdlParams::<f64>::identity().to_canonical_string();
        assert_eq!(s.lines().count(), 12);
        assert!(s.starts_with("lift.r=0.0\n"));
        assert!(s.contains("pivot=0.435\n"));
    }
}
