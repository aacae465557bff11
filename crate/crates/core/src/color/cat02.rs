//! CAT02 von Kries chromatic adaptation.

use crate::color::matrix::Mat3;
use crate::color::ColorError;
use crate::scalar::{Rgb, Scalar};

/// XYZ to CAT02 sharpened LMS (CIECAM02).
pub const CAT02: [[f64; 3]; 3] = [[0.7328, 0.4296, -0.1624], [-0.7036, 1.6975, 0.0061], [0.0030, 0.0136, 0.9834]];

/// A chromaticity coordinate (CIE 1931 xy).
pub type Xy<T> = [T; 2];

/// XYZ of a white point normalised to Y = 1.
pub fn white_xyz<T: Scalar>(white: Xy<T>) -> Rgb<T> {
    let [x, y] = white;
    [x / y, T::one(), (T::one() - x - y) / y]
}

/// Adaptation matrix mapping XYZ under `src_white` to XYZ under `dst_white`.
pub fn cat02_matrix<T: Scalar>(src_white: Xy<T>, dst_white: Xy<T>) -> Result<Mat3<T>, ColorError> {
    for w in [src_white, dst_white] {
        if !(w[0] > T::zero() && w[0] < T::one() && w[1] > T::zero() && w[1] < T::one()) {
            return Err(ColorError::InvalidWhitePoint(w[0].to_f64_lossy(), w[1].to_f64_lossy()));
        }
    }
    let m = Mat3::<T>::from_f64(CAT02);
    let src = m.apply(white_xyz(src_white));
    let dst = m.apply(white_xyz(dst_white));
    if src.iter().any(|c| c.abs() < T::lit(1e-12)) {
        return Err(ColorError::DegenerateWhitePoint);
    }
    let scale = Mat3::diag([dst[0] / src[0], dst[1] / src[1], dst[2] / src[2]]);
    let inv = m.inverse().ok_or(ColorError::NonInvertibleMatrix)?;
    Ok(inv.mul(&scale.mul(&m)))
}

/// Adapts one XYZ triple. Equal white points return the input unchanged.
pub fn cat02_adapt<T: Scalar>(xyz: Rgb<T>, src_white: Xy<T>, dst_white: Xy<T>) -> Result<Rgb<T>, ColorError> {
    if src_white == dst_white {
        cat02_matrix(src_white, dst_white)?;
        return Ok(xyz);
    }
    Ok(cat02_matrix(src_white, dst_white)?.apply(xyz))
}
