//! Frame files: 8/16-bit PNG and binary PPM. A clip is a directory of
//! numbered frames.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ImageBuffer, ImageEncoder, ImageFormat};

use crate::frame::{Colorimetry, Frame, FrameError};

#[derive(Debug, thiserror::Error)]
pub enum FrameIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{0}: unsupported frame extension (use .png or .ppm)")]
    UnsupportedFormat(PathBuf),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("{0}: no frames found")]
    EmptyClip(PathBuf),
}

const FRAME_EXTENSIONS: [&str; 3] = ["png", "ppm", "pnm"];

fn format_for(path: &Path) -> Result<ImageFormat, FrameIoError> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("ppm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(FrameIoError::UnsupportedFormat(path.to_path_buf())),
    }
}

/// Reads a frame and tags it with `colorimetry`. Channels are normalised
/// code values in [0, 1].
pub fn read_frame(path: &Path, colorimetry: Colorimetry) -> Result<Frame<f32>, FrameIoError> {
    let format = format_for(path)?;
    let bytes = std::fs::read(path).map_err(|source| FrameIoError::Io { path: path.into(), source })?;
    decode_frame(&bytes, format, colorimetry).map_err(|e| match e {
        FrameIoError::Image { source, .. } => FrameIoError::Image { path: path.into(), source },
        e => e,
    })
}

pub fn decode_frame(bytes: &[u8], format: ImageFormat, colorimetry: Colorimetry) -> Result<Frame<f32>, FrameIoError> {
    let img = image::load_from_memory_with_format(bytes, format).map_err(|source| FrameIoError::Image { path: PathBuf::new(), source })?;
    let rgb = img.into_rgb16();
    let (w, h) = rgb.dimensions();
    let scale = 1.0 / 65535.0;
    let pixels = rgb.as_raw().chunks_exact(3).map(|p| [p[0] as f32 * scale, p[1] as f32 * scale, p[2] as f32 * scale]).collect();
    Ok(Frame::new(w as usize, h as usize, pixels, colorimetry)?)
}

#[inline]
pub fn quantize_u16(v: f32) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0 + 0.5) as u16
}

fn to_u16_buffer(frame: &Frame<f32>) -> Vec<u16> {
    let mut raw = Vec::with_capacity(frame.len() * 3);
    for p in frame.pixels() {
        raw.extend(p.iter().map(|&c| quantize_u16(c)));
    }
    raw
}

/// Writes a 16-bit PNG or PPM, chosen by extension. Values are clamped to [0, 1].
pub fn write_frame(path: &Path, frame: &Frame<f32>) -> Result<(), FrameIoError> {
    let format = format_for(path)?;
    let raw = to_u16_buffer(frame);
    write_u16(path, frame.width() as u32, frame.height() as u32, &raw, format)
}

pub(crate) fn write_u16(path: &Path, w: u32, h: u32, raw: &[u16], format: ImageFormat) -> Result<(), FrameIoError> {
    let img_err = |source| FrameIoError::Image { path: path.into(), source };
    match format {
        ImageFormat::Png => {
            let file = std::fs::File::create(path).map_err(|source| FrameIoError::Io { path: path.into(), source })?;
            let writer = std::io::BufWriter::new(file);
            let enc = PngEncoder::new_with_quality(writer, CompressionType::Fast, FilterType::Sub);
            let bytes: Vec<u8> = raw.iter().flat_map(|v| v.to_ne_bytes()).collect();
            enc.write_image(&bytes, w, h, image::ExtendedColorType::Rgb16).map_err(img_err)
        }
        _ => {
            let buf: ImageBuffer<image::Rgb<u16>, Vec<u16>> = ImageBuffer::from_raw(w, h, raw.to_vec()).expect("buffer sized from frame");
            buf.save_with_format(path, format).map_err(img_err)
        }
    }
}

/// Writes a frame whose pixels are already quantized to 16 bits.
pub fn write_frame_u16(path: &Path, width: usize, height: usize, raw: &[u16]) -> Result<(), FrameIoError> {
    let format = format_for(path)?;
    write_u16(path, width as u32, height as u32, raw, format)
}

/// Reads a frame as raw 16-bit code values (row-major RGB).
pub fn read_frame_u16(path: &Path) -> Result<(usize, usize, Vec<u16>), FrameIoError> {
    let format = format_for(path)?;
    let bytes = std::fs::read(path).map_err(|source| FrameIoError::Io { path: path.into(), source })?;
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|source| FrameIoError::Image { path: path.into(), source })?;
    let rgb = img.into_rgb16();
    let (w, h) = rgb.dimensions();
    Ok((w as usize, h as usize, rgb.into_raw()))
}

/// 8-bit PNG encoding used for previews and model payloads.
pub fn encode_png8(frame: &Frame<f32>) -> Vec<u8> {
    let raw: Vec<u8> = frame.pixels().iter().flat_map(|p| p.map(|c| (c.clamp(0.0, 1.0) * 255.0 + 0.5) as u8)).collect();
    let mut out = Cursor::new(Vec::new());
    PngEncoder::new(&mut out)
        .write_image(&raw, frame.width() as u32, frame.height() as u32, image::ExtendedColorType::Rgb8)
        .expect("in-memory PNG encode");
    out.into_inner()
}

/// Decodes PNG bytes into a display-referred frame.
pub fn decode_png(bytes: &[u8]) -> Result<Frame<f32>, FrameIoError> {
    decode_frame(bytes, ImageFormat::Png, Colorimetry::Rec709Display)
}

fn frame_number(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

/// Frame files of a clip directory, ordered by their trailing frame number
/// (then by name).
pub fn list_clip_frames(dir: &Path) -> Result<Vec<PathBuf>, FrameIoError> {
    let entries = std::fs::read_dir(dir).map_err(|source| FrameIoError::Io { path: dir.into(), source })?;
    let mut frames: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension().and_then(|e| e.to_str()).is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    if frames.is_empty() {
        return Err(FrameIoError::EmptyClip(dir.into()));
    }
    frames.sort_by(|a, b| frame_number(a).cmp(&frame_number(b)).then_with(|| a.cmp(b)));
    Ok(frames)
}

/// The middle frame of an ordered clip (1-based frame `n/2 + 1`).
pub fn middle_frame(frames: &[PathBuf]) -> Option<(usize, &PathBuf)> {
    if frames.is_empty() {
        return None;
    }
    let i = frames.len() / 2;
    Some((i, &frames[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Frame<f32> {
        let px = (0..12).map(|i| [i as f32 / 11.0, 0.5, 1.0 - i as f32 / 11.0]).collect();
        Frame::new(4, 3, px, Colorimetry::Rec709Display).unwrap()
    }

    #[test]
    fn png16_and_ppm_round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.png", "a.ppm"] {
            let path = dir.path().join(name);
            write_frame(&path, &ramp()).unwrap();
            let back = read_frame(&path, Colorimetry::Rec709Display).unwrap();
            for (a, b) in ramp().pixels().iter().zip(back.pixels()) {
                for c in 0..3 {
                    assert!((a[c] - b[c]).abs() <= 1.0 / 65535.0, "{name}");
                }
            }
        }
    }

    #[test]
    fn unsupported_extension() {
        let err = write_frame(Path::new("/tmp/x.exr"), &ramp()).unwrap_err();
        assert!(matches!(err, FrameIoError::UnsupportedFormat(_)));
    }

    #[test]
    fn clip_listing_orders_numerically_and_picks_middle() {
        let dir = tempfile::tempdir().unwrap();
        for i in [1, 2, 10, 3, 11, 4, 5, 6, 7, 8, 9] {
            write_frame(&dir.path().join(format!("shot_{i}.png")), &ramp()).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let frames = list_clip_frames(dir.path()).unwrap();
        assert_eq!(frames.len(), 11);
        assert!(frames[0].ends_with("shot_1.png"));
        assert!(frames[10].ends_with("shot_11.png"));
        let (idx, mid) = middle_frame(&frames).unwrap();
        assert_eq!(idx, 5);
        assert!(mid.ends_with("shot_6.png"));
    }

    #[test]
    fn png8_preview_round_trip() {
        let png = encode_png8(&ramp());
        let back = decode_png(&png).unwrap();
        assert_eq!((back.width(), back.height()), (4, 3));
        assert!((back.pixels()[0][2] - 1.0).abs() < 1.0 / 255.0 + 1e-6);
    }
}
