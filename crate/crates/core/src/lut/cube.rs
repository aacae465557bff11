//! Reader and writer for the `.cube` 3D LUT text format.
//!
//! Written files look like:
//!
//! ```text
//! # Generated by lumi-core
//! TITLE "session 42 iter0"
//! LUT_3D_SIZE 33
//! 0.000000 0.000000 0.000000
//! 0.031250 0.000000 0.000000
//! ...
//! ```
//!
//! `DOMAIN_MIN`/`DOMAIN_MAX` lines are emitted only for non-unit domains.
//! Data lines carry six fractional digits with red varying fastest. Line
//! endings are LF. Double quotes in titles are replaced by single quotes.

use std::io::{self, BufRead, Write};

use crate::lut::{Lut3D, LutError};
use crate::scalar::{Rgb, Scalar};

pub const GENERATOR_COMMENT: &str = "# Generated by lumi-core";
/// Largest lattice accepted when reading.
pub const MAX_READ_SIZE: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum CubeError {
    #[error("line {line}: data before LUT_3D_SIZE was declared")]
    MissingSize { line: usize },
    #[error("line {line}: cannot parse {token:?} as a number")]
    Parse { line: usize, token: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: 1D LUTs are not supported")]
    Unsupported1D { line: usize },
    #[error("truncated LUT: expected {expected} data lines, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("line {line}: more data lines than LUT_3D_SIZE^3 = {expected}")]
    ExtraData { line: usize, expected: usize },
    #[error(transparent)]
    Lut(#[from] LutError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn sanitize_title(title: &str) -> String {
    title.chars().map(|c| if c == '"' { '\'' } else { c }).filter(|c| !c.is_control()).collect()
}

/// Serializes `lut` in `.cube` form.
pub fn write_cube<T: Scalar, W: Write>(lut: &Lut3D<T>, mut out: W) -> io::Result<()> {
    let mut buf = String::with_capacity(lut.lattice().len() * 27 + 128);
    buf.push_str(GENERATOR_COMMENT);
    buf.push('\n');
    if let Some(title) = lut.title() {
        buf.push_str(&format!("TITLE \"{}\"\n", sanitize_title(title)));
    }
    buf.push_str(&format!("LUT_3D_SIZE {}\n", lut.size()));
    if !lut.has_default_domain() {
        let (lo, hi) = lut.domain();
        let line = |v: Rgb<T>| v.map(|c| fmt6(c.to_f64_lossy())).join(" ");
        buf.push_str(&format!("DOMAIN_MIN {}\n", line(lo)));
        buf.push_str(&format!("DOMAIN_MAX {}\n", line(hi)));
    }
    for p in lut.lattice() {
        buf.push_str(&fmt6(p[0].to_f64_lossy()));
        buf.push(' ');
        buf.push_str(&fmt6(p[1].to_f64_lossy()));
        buf.push(' ');
        buf.push_str(&fmt6(p[2].to_f64_lossy()));
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    out.flush()
}

pub fn to_cube_string<T: Scalar>(lut: &Lut3D<T>) -> String {
    let mut v = Vec::new();
    write_cube(lut, &mut v).expect("writing to a Vec cannot fail");
    String::from_utf8(v).expect("cube output is ASCII")
}

fn parse_triple<T: Scalar>(tokens: &[&str], line: usize) -> Result<Rgb<T>, CubeError> {
    if tokens.len() != 3 {
        return Err(CubeError::Malformed { line, message: format!("expected 3 values, found {}", tokens.len()) });
    }
    let mut out = [T::zero(); 3];
    for (slot, tok) in out.iter_mut().zip(tokens) {
        let v: f64 = tok.parse().map_err(|_| CubeError::Parse { line, token: tok.to_string() })?;
        if !v.is_finite() {
            return Err(CubeError::Parse { line, token: tok.to_string() });
        }
        *slot = T::lit(v);
    }
    Ok(out)
}

/// Parses a `.cube` file. Blank lines and `#` comments are ignored, CRLF is
/// accepted, and header keywords may appear in any order before the data.
pub fn parse_cube<T: Scalar, R: BufRead>(input: R) -> Result<Lut3D<T>, CubeError> {
    let mut size: Option<usize> = None;
    let mut title = None;
    let mut domain_min = [T::zero(); 3];
    let mut domain_max = [T::one(); 3];
    let mut lattice: Vec<Rgb<T>> = Vec::new();
    let mut expected = 0usize;

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim_end_matches('\r').trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let head = tokens[0];
        let is_keyword = head.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') && head.parse::<f64>().is_err();
        if is_keyword {
            if !lattice.is_empty() {
                return Err(CubeError::Malformed { line: line_no, message: format!("keyword {head} after data") });
            }
            match head {
                "TITLE" => {
                    let rest = text["TITLE".len()..].trim();
                    title = Some(rest.trim_matches('"').to_string());
                }
                "LUT_3D_SIZE" => {
                    let n: usize = tokens
                        .get(1)
                        .ok_or_else(|| CubeError::Malformed { line: line_no, message: "LUT_3D_SIZE without a value".into() })?
                        .parse()
                        .map_err(|_| CubeError::Parse { line: line_no, token: tokens[1].to_string() })?;
                    if !(2..=MAX_READ_SIZE).contains(&n) {
                        return Err(CubeError::Malformed {
                            line: line_no,
                            message: format!("LUT_3D_SIZE {n} outside [2, {MAX_READ_SIZE}]"),
                        });
                    }
                    size = Some(n);
                    expected = n * n * n;
                    lattice.reserve(expected);
                }
                "LUT_1D_SIZE" => return Err(CubeError::Unsupported1D { line: line_no }),
                "DOMAIN_MIN" => domain_min = parse_triple(&tokens[1..], line_no)?,
                "DOMAIN_MAX" => domain_max = parse_triple(&tokens[1..], line_no)?,
                "LUT_3D_INPUT_RANGE" => {
                    if tokens.len() != 3 {
                        return Err(CubeError::Malformed { line: line_no, message: "LUT_3D_INPUT_RANGE needs 2 values".into() });
                    }
                    let lo = parse_triple::<T>(&[tokens[1], tokens[1], tokens[1]], line_no)?;
                    let hi = parse_triple::<T>(&[tokens[2], tokens[2], tokens[2]], line_no)?;
                    domain_min = lo;
                    domain_max = hi;
                }
                // vendor extensions we do not interpret
                _ => {}
            }
            continue;
        }
        if size.is_none() {
            return Err(CubeError::MissingSize { line: line_no });
        }
        if lattice.len() == expected {
            return Err(CubeError::ExtraData { line: line_no, expected });
        }
        lattice.push(parse_triple(&tokens, line_no)?);
    }

    let size = size.ok_or(CubeError::MissingSize { line: 0 })?;
    if lattice.len() != expected {
        return Err(CubeError::Truncated { expected, found: lattice.len() });
    }
    Ok(Lut3D::new(size, lattice, domain_min, domain_max, title)?)
}

pub fn parse_cube_str<T: Scalar>(text: &str) -> Result<Lut3D<T>, CubeError> {
    parse_cube(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_size_two_layout() {
        let s = to_cube_string(&Lut3D::<f64>::identity(2).unwrap());
        let data: Vec<&str> = s.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).collect();
        assert_eq!(data.len(), 8);
        assert_eq!(data[0], "0.000000 0.000000 0.000000");
        assert_eq!(data[1], "1.000000 0.000000 0.000000");
        assert_eq!(data[7], "1.000000 1.000000 1.000000");
        assert!(!s.contains("DOMAIN_MIN"));
        assert!(!s.contains('\r'));
        assert!(s.starts_with("# Generated by lumi-core\n"));
    }

    #[test]
    fn title_quotes_are_replaced() {
        let lut = Lut3D::<f64>::identity(2).unwrap().with_title("my \"best\" look\n");
        let s = to_cube_string(&lut);
        assert!(s.contains("TITLE \"my 'best' look\"\n"));
    }

    #[test]
    fn missing_size_names_the_line() {
        let err = parse_cube_str::<f64>("# c\n\n0 0 0\n").unwrap_err();
        assert!(matches!(err, CubeError::MissingSize { line: 3 }));
    }

    #[test]
    fn truncation_reports_expected_count() {
        let mut s = String::from("LUT_3D_SIZE 33\n");
        for _ in 0..10 {
            s.push_str("0 0 0\n");
        }
        match parse_cube_str::<f64>(&s).unwrap_err() {
            CubeError::Truncated { expected, found } => {
                assert_eq!(expected, 35937);
                assert_eq!(found, 10);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_token_has_location() {
        let err = parse_cube_str::<f64>("LUT_3D_SIZE 2\n0 0 0\n1 x 0\n").unwrap_err();
        match err {
            CubeError::Parse { line, token } => {
                assert_eq!(line, 3);
                assert_eq!(token, "x");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn crlf_and_keyword_order() {
        let body = "DOMAIN_MAX 1 1 1\r\n# x\r\nTITLE \"t\"\r\nLUT_3D_SIZE 2\r\nDOMAIN_MIN 0 0 0\r\n\r\n\
                    0 0 0\r\n1 0 0\r\n0 1 0\r\n1 1 0\r\n0 0 1\r\n1 0 1\r\n0 1 1\r\n1 1 1\r\n";
        let lut = parse_cube_str::<f64>(body).unwrap();
        assert_eq!(lut, Lut3D::identity(2).unwrap().with_title("t"));
    }

    #[test]
    fn rejects_1d_and_extra_data() {
        assert!(matches!(parse_cube_str::<f64>("LUT_1D_SIZE 4\n"), Err(CubeError::Unsupported1D { line: 1 })));
        let mut s = to_cube_string(&Lut3D::<f64>::identity(2).unwrap());
        s.push_str("0 0 0\n");
        assert!(matches!(parse_cube_str::<f64>(&s), Err(CubeError::ExtraData { .. })));
    }

    #[test]
    fn non_default_domain_round_trips() {
        let lut =
            Lut3D::<f64>::new(2, Lut3D::<f64>::identity(2).unwrap().lattice().to_vec(), [-0.25, 0.0, 0.0], [1.5, 1.0, 2.0], None).unwrap();
        let s = to_cube_string(&lut);
        assert!(s.contains("DOMAIN_MIN -0.250000 0.000000 0.000000\n"));
        assert_eq!(parse_cube_str::<f64>(&s).unwrap(), lut);
    }
}
