use crate::scalar::{Rgb, Scalar};

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Scalar> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Mat3([[o, z, z], [z, o, z], [z, z, o]])
    }

    pub fn diag(d: Rgb<T>) -> Self {
        let z = T::zero();
        Mat3([[d[0], z, z], [z, d[1], z], [z, z, d[2]]])
    }

    pub fn from_f64(m: [[f64; 3]; 3]) -> Self {
        Mat3(m.map(|row| row.map(T::lit)))
    }

    #[inline]
    pub fn apply(&self, v: Rgb<T>) -> Rgb<T> {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).fold(T::zero(), |acc, k| acc + self.0[i][k] * rhs.0[k][j]);
            }
        }
        Mat3(out)
    }

    pub fn determinant(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by cofactors; `None` when the matrix is (numerically) singular.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < T::lit(1e-12) {
            return None;
        }
        let m = &self.0;
        let inv = T::one() / det;
        let c = |a: usize, b: usize, c: usize, d: usize| m[a][b] * m[c][d];
        Some(Mat3([
            [(c(1, 1, 2, 2) - c(1, 2, 2, 1)) * inv, (c(0, 2, 2, 1) - c(0, 1, 2, 2)) * inv, (c(0, 1, 1, 2) - c(0, 2, 1, 1)) * inv],
            [(c(1, 2, 2, 0) - c(1, 0, 2, 2)) * inv, (c(0, 0, 2, 2) - c(0, 2, 2, 0)) * inv, (c(0, 2, 1, 0) - c(0, 0, 1, 2)) * inv],
            [(c(1, 0, 2, 1) - c(1, 1, 2, 0)) * inv, (c(0, 1, 2, 0) - c(0, 0, 2, 1)) * inv, (c(0, 0, 1, 1) - c(0, 1, 1, 0)) * inv],
        ]))
    }

    pub fn cast<U: Scalar>(&self) -> Mat3<U> {
        Mat3(self.0.map(|row| row.map(|v| U::lit(v.to_f64_lossy()))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trips() {
        let m = Mat3::<f64>::from_f64([[2.0, 1.0, 0.5], [0.1, 3.0, -1.0], [0.0, 0.4, 1.5]]);
        let p = m.mul(&m.inverse().unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.0[i][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_has_no_inverse() {
        let m = Mat3::<f64>::from_f64([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]]);
        assert!(m.inverse().is_none());
    }
}
