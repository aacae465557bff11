//! Synthetic camera-log test charts for demos and hermetic tests.

use crate::color::{Chromaticity, Gamut, LogCurve, Rec709Transform};
use crate::frame::{Colorimetry, Frame};
use crate::scalar::Rgb;

/// Linear Rec.709 reflectances of the chart's colour patches.
const PATCHES: [Rgb<f64>; 8] = [
    [0.40, 0.22, 0.15], // light skin
    [0.18, 0.10, 0.07], // dark skin
    [0.12, 0.20, 0.40], // sky
    [0.10, 0.25, 0.08], // foliage
    [0.50, 0.08, 0.06], // red
    [0.55, 0.42, 0.05], // yellow
    [0.05, 0.30, 0.35], // teal
    [0.90, 0.90, 0.88], // near white
];

/// A `width`x`height` chart: the top half is a horizontal exposure ramp from
/// -6 to +3 stops around 18% gray, the bottom half a row of colour patches.
/// Values are authored in linear Rec.709, moved into `gamut`, and encoded
/// with `curve`.
pub fn log_chart(curve: LogCurve, gamut: Gamut, width: usize, height: usize) -> Frame<f32> {
    let to709 = Rec709Transform::<f64>::new(&Chromaticity::from_gamut(gamut)).expect("built-in gamut");
    let from709 = to709.matrix().inverse().expect("invertible");
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let t = x as f64 / (width.max(2) - 1) as f64;
            let lin709 = if y < height / 2 {
                let stops = -6.0 + 9.0 * t;
                [0.18 * 2f64.powf(stops); 3]
            } else {
                PATCHES[(t * PATCHES.len() as f64).floor().min(PATCHES.len() as f64 - 1.0) as usize]
            };
            let cam = from709.apply(lin709);
            pixels.push(cam.map(|c| curve.encode(c.max(0.0)).clamp(0.0, 1.0) as f32));
        }
    }
    Frame::new(width, height, pixels, Colorimetry::CameraLog { curve, gamut }).expect("chart pixels are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_tagged_and_in_range() {
        let f = log_chart(LogCurve::SLog3, Gamut::SGamut3Cine, 64, 32);
        assert_eq!(f.len(), 64 * 32);
        assert!(f.pixels().iter().all(|p| p.iter().all(|c| (0.0..=1.0).contains(c))));
        assert_eq!(f.colorimetry(), Colorimetry::CameraLog { curve: LogCurve::SLog3, gamut: Gamut::SGamut3Cine });
    }
}
