//! Scalar abstraction shared by every color-math routine in the crate.
//!
//! All pipelines are written once against [`Scalar`] and instantiated for
//! `f32` (frames, rendering) and `f64` (parameters, oracles, interchange).

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the color pipelines: `f32` or `f64`.
pub trait Scalar: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        // Both implementors accept every finite f64 (f32 rounds).
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn clamp01(self) -> Self {
        self.max(Self::zero()).min(Self::one())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// An RGB (or XYZ) triple.
pub type Rgb<T> = [T; 3];

/// Converts an RGB triple between scalar types.
#[inline]
pub fn cast_rgb<A: Scalar, B: Scalar>(v: Rgb<A>) -> Rgb<B> {
    [B::lit(v[0].to_f64_lossy()), B::lit(v[1].to_f64_lossy()), B::lit(v[2].to_f64_lossy())]
}

/// Rec.709 luma weights.
pub const REC709_LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

#[inline]
pub fn rec709_luma<T: Scalar>(rgb: Rgb<T>) -> T {
    T::lit(REC709_LUMA[0]) * rgb[0] + T::lit(REC709_LUMA[1]) * rgb[1] + T::lit(REC709_LUMA[2]) * rgb[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_weights_sum_to_one() {
        let l: f64 = rec709_luma([1.0, 1.0, 1.0]);
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clamp01_bounds() {
        assert_eq!((-0.5f32).clamp01(), 0.0);
        assert_eq!(1.5f64.clamp01(), 1.0);
        assert_eq!(0.25f64.clamp01(), 0.25);
    }
}
