//! Full-clip rendering: decode, Rec.709 transform and LUT per frame.
//!
//! The LUT maps normalized Rec.709 values, the same domain the search
//! previews are scored in, so every frame is decoded and transformed before
//! the lookup. Frames are independent and render in parallel.

use std::path::{Path, PathBuf};

use lumi_core::color::{rec709_oetf, Chromaticity, ColorError, Gamut, LogCurve, Rec709Transform};
use lumi_core::frame_io::{list_clip_frames, quantize_u16, read_frame_u16, write_frame_u16, FrameIoError};
use lumi_core::lut::Lut3D;
use rayon::prelude::*;
use serde::Serialize;

/// Cells in the interpolated Rec.709 encode table. Linear interpolation
/// over 8192 cells stays within 1e-6 of the curve.
const OETF_CELLS: usize = 8192;

/// Per-pixel render path specialised for 16-bit input: the log decode is a
/// table lookup, the transform a 3x3 matrix plus a tabulated Rec.709 curve,
/// then one trilinear LUT sample.
pub struct FrameRenderer {
    decode: Vec<f32>,
    transform: Rec709Transform<f32>,
    oetf: Vec<f32>,
    lattice: Vec<[f32; 3]>,
    size: usize,
}

impl FrameRenderer {
    /// Panics unless `lut` has the default unit domain.
    pub fn new(lut: &Lut3D<f64>, curve: LogCurve, gamut: Gamut) -> Result<Self, ColorError> {
        assert!(lut.has_default_domain(), "renderer LUTs map the unit cube");
        Ok(Self {
            decode: curve.decode_table_u16(),
            transform: Rec709Transform::new(&Chromaticity::<f32>::from_gamut(gamut))?,
            oetf: (0..=OETF_CELLS).map(|i| rec709_oetf(i as f64 / OETF_CELLS as f64) as f32).collect(),
            lattice: lut.cast::<f32>().lattice().to_vec(),
            size: lut.size(),
        })
    }

    #[inline]
    fn encode(&self, linear: f32) -> f32 {
        let t = linear.clamp(0.0, 1.0) * OETF_CELLS as f32;
        let i = (t as usize).min(OETF_CELLS - 1);
        let f = t - i as f32;
        self.oetf[i] + (self.oetf[i + 1] - self.oetf[i]) * f
    }

    #[inline]
    pub fn pixel(&self, code: [u16; 3]) -> [u16; 3] {
        let lin = self.transform.linear(code.map(|c| self.decode[c as usize]));
        self.sample(lin.map(|c| self.encode(c))).map(quantize_u16)
    }

    /// Trilinear lookup for inputs already in [0, 1].
    #[inline]
    fn sample(&self, rgb: [f32; 3]) -> [f32; 3] {
        let n = self.size;
        let last = (n - 1) as f32;
        let mut base = [0usize; 3];
        let mut frac = [0f32; 3];
        for c in 0..3 {
            let t = rgb[c] * last;
            let i = (t as usize).min(n - 2);
            base[c] = i;
            frac[c] = t - i as f32;
        }
        let (sg, sb) = (n, n * n);
        let i = (base[2] * n + base[1]) * n + base[0];
        let l = &self.lattice;
        let [fr, fg, fb] = frac;
        let mut out = [0f32; 3];
        for c in 0..3 {
            let lerp = |a: f32, b: f32, t: f32| a + (b - a) * t;
            let c00 = lerp(l[i][c], l[i + 1][c], fr);
            let c10 = lerp(l[i + sg][c], l[i + sg + 1][c], fr);
            let c01 = lerp(l[i + sb][c], l[i + sb + 1][c], fr);
            let c11 = lerp(l[i + sb + sg][c], l[i + sb + sg + 1][c], fr);
            out[c] = lerp(lerp(c00, c10, fg), lerp(c01, c11, fg), fb);
        }
        out
    }

    /// Renders interleaved RGB code values.
    pub fn render_raw(&self, raw: &[u16]) -> Vec<u16> {
        let mut out = Vec::with_capacity(raw.len());
        for px in raw.chunks_exact(3) {
            out.extend_from_slice(&self.pixel([px[0], px[1], px[2]]));
        }
        out
    }

    pub fn render_file(&self, input: &Path, output: &Path) -> Result<(), FrameIoError> {
        let (w, h, raw) = read_frame_u16(input)?;
        write_frame_u16(output, w, h, &self.render_raw(&raw))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameFailure {
    pub frame: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderReport {
    pub frames: usize,
    pub written: Vec<PathBuf>,
    pub failures: Vec<FrameFailure>,
}

impl RenderReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Output path for an input frame: same stem, 16-bit PNG.
pub fn output_path(out_dir: &Path, input: &Path) -> PathBuf {
    let stem = input.file_stem().unwrap_or_default();
    let mut name = stem.to_os_string();
    name.push(".png");
    out_dir.join(name)
}

/// Renders every frame of `clip_dir` into `out_dir`. A frame that cannot be
/// read or written is reported and the rest still render.
pub fn render_clip(renderer: &FrameRenderer, clip_dir: &Path, out_dir: &Path) -> Result<RenderReport, FrameIoError> {
    let frames = list_clip_frames(clip_dir)?;
    std::fs::create_dir_all(out_dir).map_err(|source| FrameIoError::Io { path: out_dir.into(), source })?;
    let results: Vec<Result<PathBuf, FrameFailure>> = frames
        .par_iter()
        .map(|f| {
            let out = output_path(out_dir, f);
            renderer.render_file(f, &out).map(|_| out).map_err(|e| FrameFailure { frame: f.clone(), message: e.to_string() })
        })
        .collect();
    let mut report = RenderReport { frames: frames.len(), written: Vec::new(), failures: Vec::new() };
    for r in results {
        match r {
            Ok(p) => report.written.push(p),
            Err(f) => report.failures.push(f),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lumi_core::cdl::{CdlParams, RolloffConfig};
    use lumi_core::color::normalize_log_frame;
    use lumi_core::frame::{Colorimetry, Frame};
    use lumi_core::lut::{apply_lut_trilinear, compile_lut};

    #[test]
    fn fast_path_matches_the_reference_pipeline() {
        let mut p = CdlParams::identity();
        p.gain = [1.1, 1.0, 0.9];
        p.lift = [0.02, 0.0, -0.01];
        p.saturation = 1.2;
        let lut = compile_lut(&p, RolloffConfig::default(), 33).unwrap();
        let (curve, gamut) = (LogCurve::SLog3, Gamut::SGamut3Cine);
        let r = FrameRenderer::new(&lut, curve, gamut).unwrap();
        let codes: Vec<[u16; 3]> = (0..4096u32).map(|i| [(i * 16) as u16, (i * 7919 % 65536) as u16, (65535 - i * 13) as u16]).collect();
        let log = Frame::new(
            codes.len(),
            1,
            codes.iter().map(|c| c.map(|v| v as f32 / 65535.0)).collect(),
            Colorimetry::CameraLog { curve, gamut },
        )
        .unwrap();
        let reference = apply_lut_trilinear(&normalize_log_frame(&log, curve).unwrap(), &lut.cast::<f32>());
        for (c, want) in codes.iter().zip(reference.pixels()) {
            let got = r.pixel(*c);
            for k in 0..3 {
                let d = (got[k] as i32 - quantize_u16(want[k]) as i32).abs();
                assert!(d <= 2, "{c:?}: {got:?} vs {want:?}");
            }
        }
    }
}
