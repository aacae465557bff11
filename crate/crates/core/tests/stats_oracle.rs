use lumi_core::frame::{Colorimetry, Frame};
use lumi_core::stats::{exposure_profile, hue_distance, protected_tone_shift, HueRange};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn display(w: usize, h: usize, px: Vec<[f64; 3]>) -> Frame<f64> {
    Frame::new(w, h, px, Colorimetry::Rec709Display).unwrap()
}

#[test]
fn ramp_percentiles_follow_nearest_rank() {
    let ramp: Vec<[f64; 3]> = (0..100).map(|i| [i as f64 / 100.0; 3]).collect();
    let p = exposure_profile(&display(10, 10, ramp.clone())).unwrap();
    assert!((p.black_point_ire - 0.0).abs() <= 1e-9);
    assert!((p.mid_gray_ire - 49.0).abs() <= 1e-9);
    assert!((p.white_point_ire - 98.0).abs() <= 1e-9);

    let mut shuffled = ramp;
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
    assert_eq!(exposure_profile(&display(10, 10, shuffled)).unwrap(), p);
}

#[test]
fn constant_frames_have_equal_percentiles() {
    let p = exposure_profile(&display(20, 10, vec![[0.5; 3]; 200])).unwrap();
    assert_eq!((p.black_point_ire, p.mid_gray_ire, p.white_point_ire), (50.0, 50.0, 50.0));
    let p = exposure_profile(&display(20, 10, vec![[0.0; 3]; 200])).unwrap();
    assert_eq!((p.black_point_ire, p.mid_gray_ire, p.white_point_ire), (0.0, 0.0, 0.0));
}

#[test]
fn tiny_frames_are_rejected() {
    assert!(exposure_profile(&display(9, 11, vec![[0.5; 3]; 99])).is_err());
}

// Reference HSV conversion, written out per sextant.
fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

#[test]
fn global_rotation_reads_as_ten_degrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut before = Vec::new();
    let mut after = Vec::new();
    for _ in 0..4096 {
        let (h, s, v) = (rng.gen_range(0.0..360.0), rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0));
        before.push(hsv_to_rgb(h, s, v));
        after.push(hsv_to_rgb(h + 10.0, s, v));
    }
    let ranges = [
        HueRange::new("skin", 15.0, 45.0).unwrap(),
        HueRange::new("foliage", 80.0, 150.0).unwrap(),
        HueRange::new("sky", 190.0, 240.0).unwrap(),
        HueRange::new("wrap", 340.0, 20.0).unwrap(),
    ];
    let report = protected_tone_shift(&display(64, 64, before.clone()), &display(64, 64, after), &ranges, 0.05).unwrap();
    for r in &report.ranges {
        assert!(r.pixel_count > 0, "{}", r.name);
        assert!((r.mean_abs_hue_shift_deg - 10.0).abs() <= 0.1, "{} {}", r.name, r.mean_abs_hue_shift_deg);
        assert!((r.mean_saturation_ratio - 1.0).abs() < 1e-9);
    }

    let same = protected_tone_shift(&display(64, 64, before.clone()), &display(64, 64, before), &ranges, 0.05).unwrap();
    assert!(same.ranges.iter().all(|r| r.mean_abs_hue_shift_deg == 0.0 && r.max_abs_hue_shift_deg == 0.0));
}

#[test]
fn empty_range_is_flagged() {
    let f = display(10, 10, vec![[0.8, 0.2, 0.2]; 100]);
    let report = protected_tone_shift(&f, &f, &[HueRange::new("sky", 190.0, 240.0).unwrap()], 0.05).unwrap();
    let r = &report.ranges[0];
    assert!(r.empty);
    assert_eq!((r.pixel_count, r.mean_abs_hue_shift_deg), (0, 0.0));
}

#[test]
fn hueless_pixels_are_skipped() {
    let f = display(10, 10, vec![[0.5, 0.49, 0.49]; 100]);
    let report = protected_tone_shift(&f, &f, &[HueRange::new("all", 0.0, 359.9).unwrap()], 0.05).unwrap();
    assert_eq!(report.ranges[0].pixel_count, 0);
}

#[test]
fn hue_distance_is_circular() {
    assert!((hue_distance(359.0, 1.0) - 2.0).abs() < 1e-12);
    assert!((hue_distance(1.0, 359.0) - 2.0).abs() < 1e-12);
    assert_eq!(hue_distance(0.0, 180.0), 180.0);
}

#[test]
fn mismatched_sizes_are_rejected() {
    let a = display(10, 10, vec![[0.5; 3]; 100]);
    let b = display(20, 5, vec![[0.5; 3]; 100]);
    assert!(protected_tone_shift(&a, &b, &[], 0.05).is_err());
}
