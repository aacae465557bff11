//! 3D lookup tables: compilation from grading parameters, trilinear
//! application and interchange formats.

pub mod cdl_xml;
pub mod cube;

use rayon::prelude::*;

use crate::cdl::{apply_cdl_unchecked, check_params, CdlParams, InvalidParams, RolloffConfig};
use crate::frame::Frame;
use crate::scalar::{Rgb, Scalar};

pub const DEFAULT_LUT_SIZE: usize = 33;
pub const MAX_COMPILE_SIZE: usize = 129;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LutError {
    #[error("LUT size {0} is outside the supported range [2, {MAX_COMPILE_SIZE}]")]
    InvalidSize(usize),
    #[error("lattice holds {found} entries, expected {expected}")]
    LatticeLength { expected: usize, found: usize },
    #[error("lattice entry {0} is not finite")]
    NonFinite(usize),
    #[error("domain minimum must be below domain maximum on every channel")]
    InvalidDomain,
    #[error(transparent)]
    InvalidParams(#[from] InvalidParams),
}

/// A cubic RGB lattice. Entries are stored red-fastest, then green, then blue.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut3D<T> {
    size: usize,
    lattice: Vec<Rgb<T>>,
    domain_min: Rgb<T>,
    domain_max: Rgb<T>,
    title: Option<String>,
}

impl<T: Scalar> Lut3D<T> {
    pub fn new(size: usize, lattice: Vec<Rgb<T>>, domain_min: Rgb<T>, domain_max: Rgb<T>, title: Option<String>) -> Result<Self, LutError> {
        if size < 2 {
            return Err(LutError::InvalidSize(size));
        }
        let expected = size * size * size;
        if lattice.len() != expected {
            return Err(LutError::LatticeLength { expected, found: lattice.len() });
        }
        if let Some(i) = lattice.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(LutError::NonFinite(i));
        }
        if (0..3).any(|c| domain_min[c] >= domain_max[c] || !domain_min[c].is_finite() || !domain_max[c].is_finite()) {
            return Err(LutError::InvalidDomain);
        }
        Ok(Self { size, lattice, domain_min, domain_max, title })
    }

    /// The identity lattice over the unit cube.
    pub fn identity(size: usize) -> Result<Self, LutError> {
        if !(2..=MAX_COMPILE_SIZE).contains(&size) {
            return Err(LutError::InvalidSize(size));
        }
        let lattice = (0..size * size * size).map(|n| node_coord(n, size)).collect();
        Self::new(size, lattice, [T::zero(); 3], [T::one(); 3], None)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn lattice(&self) -> &[Rgb<T>] {
        &self.lattice
    }

    pub fn domain(&self) -> (Rgb<T>, Rgb<T>) {
        (self.domain_min, self.domain_max)
    }

    pub fn has_default_domain(&self) -> bool {
        self.domain_min == [T::zero(); 3] && self.domain_max == [T::one(); 3]
    }

    pub fn title(&self) -> Option<&str> {
        self.title.as_deref()
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    #[inline]
    pub fn index(&self, r: usize, g: usize, b: usize) -> usize {
        (b * self.size + g) * self.size + r
    }

    #[inline]
    pub fn node(&self, r: usize, g: usize, b: usize) -> Rgb<T> {
        self.lattice[self.index(r, g, b)]
    }

    /// Trilinear interpolation over the eight enclosing nodes. Inputs outside
    /// the domain are clamped to it first.
    #[inline]
    pub fn sample(&self, rgb: Rgb<T>) -> Rgb<T> {
        let n = self.size;
        let last = T::lit((n - 1) as f64);
        let mut base = [0usize; 3];
        let mut frac = [T::zero(); 3];
        for c in 0..3 {
            let t = ((rgb[c] - self.domain_min[c]) / (self.domain_max[c] - self.domain_min[c])).clamp01() * last;
            let i = t.floor().to_usize().unwrap_or(0).min(n - 2);
            base[c] = i;
            frac[c] = t - T::lit(i as f64);
        }
        let [r0, g0, b0] = base;
        let [fr, fg, fb] = frac;
        let stride_g = n;
        let stride_b = n * n;
        let i000 = self.index(r0, g0, b0);
        let l = &self.lattice;
        let c000 = l[i000];
        let c100 = l[i000 + 1];
        let c010 = l[i000 + stride_g];
        let c110 = l[i000 + stride_g + 1];
        let c001 = l[i000 + stride_b];
        let c101 = l[i000 + stride_b + 1];
        let c011 = l[i000 + stride_b + stride_g];
        let c111 = l[i000 + stride_b + stride_g + 1];
        let one = T::one();
        let mut out = [T::zero(); 3];
        for c in 0..3 {
            let c00 = c000[c] * (one - fr) + c100[c] * fr;
            let c10 = c010[c] * (one - fr) + c110[c] * fr;
            let c01 = c001[c] * (one - fr) + c101[c] * fr;
            let c11 = c011[c] * (one - fr) + c111[c] * fr;
            let c0 = c00 * (one - fg) + c10 * fg;
            let c1 = c01 * (one - fg) + c11 * fg;
            out[c] = c0 * (one - fb) + c1 * fb;
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> Lut3D<U> {
        Lut3D {
            size: self.size,
            lattice: self.lattice.iter().map(|&p| crate::scalar::cast_rgb(p)).collect(),
            domain_min: crate::scalar::cast_rgb(self.domain_min),
            domain_max: crate::scalar::cast_rgb(self.domain_max),
            title: self.title.clone(),
        }
    }
}

/// Unit-cube coordinate of lattice entry `n` (red fastest).
#[inline]
fn node_coord<T: Scalar>(n: usize, size: usize) -> Rgb<T> {
    let last = T::lit((size - 1) as f64);
    let r = n % size;
    let g = (n / size) % size;
    let b = n / (size * size);
    [T::lit(r as f64) / last, T::lit(g as f64) / last, T::lit(b as f64) / last]
}

/// Samples the grading pipeline at every node of a `size`^3 lattice.
///
/// Each node is computed independently, so the result is bit-identical
/// regardless of how the work is split across threads.
pub fn compile_lut<T: Scalar>(params: &CdlParams<T>, rolloff: RolloffConfig, size: usize) -> Result<Lut3D<T>, LutError> {
    check_params(params)?;
    if !(2..=MAX_COMPILE_SIZE).contains(&size) {
        return Err(LutError::InvalidSize(size));
    }
    let lattice: Vec<Rgb<T>> =
        (0..size * size * size).into_par_iter().map(|n| apply_cdl_unchecked(node_coord(n, size), params, rolloff)).collect();
    Lut3D::new(size, lattice, [T::zero(); 3], [T::one(); 3], None)
}

/// Maps every pixel through the LUT. Each output pixel depends only on the
/// corresponding input pixel value. Display-referred frames stay in [0, 1].
pub fn apply_lut_trilinear<T: Scalar>(frame: &Frame<T>, lut: &Lut3D<T>) -> Frame<T> {
    let display = frame.colorimetry().is_display();
    let pixels: Vec<Rgb<T>> = frame
        .pixels()
        .par_iter()
        .map(|&p| {
            let out = lut.sample(p);
            if display {
                out.map(|v| v.clamp01())
            } else {
                out
            }
        })
        .collect();
    Frame::from_parts_unchecked(frame.width(), frame.height(), pixels, frame.colorimetry())
}
