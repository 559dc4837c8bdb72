//! Plain-text persistence for tensors, matrices and HOSVD results.
//!
//! Two sibling formats, both UTF-8 with LF line endings:
//!
//! * `.tsr` (tensors): line 1 is the literal `tsr3`, line 2 is `d1 d2 d3` as
//!   space-separated decimal integers, followed by `d1*d2*d3` whitespace
//!   separated reals in layout order (first index slowest, last fastest).
//! * `.mat` (matrices): line 1 is the literal `mat`, line 2 is `rows cols`,
//!   followed by `rows*cols` reals in row-major order.
//!
//! Writers emit 17 significant digits so every finite 64-bit value round
//! trips bit-exactly. Readers accept arbitrary whitespace between values and
//! report malformed input as format errors carrying the path and line.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::HosvdResult;
use crate::matrix::Matrix;
use crate::tensor::{Dims, Tensor3};

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Splits file content into (header line 1, header line 2, remaining lines
/// with their 1-based numbers), checking the magic token.
fn parse_header<'a>(
    path: &Path,
    text: &'a str,
    magic: &str,
) -> Result<(Vec<usize>, Vec<(usize, &'a str)>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    if first.trim_end() != magic {
        return Err(format_err(
            path,
            1,
            format!("expected header `{magic}`, got `{}`", first.trim_end()),
        ));
    }
    let (_, second) = lines
        .next()
        .ok_or_else(|| format_err(path, 2, "missing dimension line"))?;
    let dims = second
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| format_err(path, 2, format!("invalid dimension `{tok}`")))
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok((dims, lines.collect()))
}

/// Parses the value block, enforcing the exact count and finiteness.
fn parse_values(path: &Path, lines: &[(usize, &str)], expected: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(expected);
    for (lineno, line) in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| format_err(path, *lineno, format!("invalid value `{tok}`")))?;
            if !v.is_finite() {
                return Err(format_err(path, *lineno, format!("non-finite value `{tok}`")));
            }
            if values.len() == expected {
                return Err(format_err(
                    path,
                    *lineno,
                    format!("more than {expected} values"),
                ));
            }
            values.push(v);
        }
    }
    if values.len() != expected {
        let last = lines.last().map_or(2, |(n, _)| *n);
        return Err(format_err(
            path,
            last,
            format!("expected {expected} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

fn push_value_rows(out: &mut String, values: &[f64], per_line: usize) {
    for chunk in values.chunks(per_line) {
        for (i, v) in chunk.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
}

/// Reads a tensor from a `.tsr` file.
pub fn read_tsr(path: impl AsRef<Path>) -> Result<Tensor3> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let (dims, rest) = parse_header(path, &text, "tsr3")?;
    let [d1, d2, d3] = dims[..] else {
        return Err(format_err(
            path,
            2,
            format!("expected 3 dimensions, got {}", dims.len()),
        ));
    };
    if d1 == 0 || d2 == 0 || d3 == 0 {
        return Err(format_err(path, 2, "dimensions must be positive"));
    }
    let values = parse_values(path, &rest, d1 * d2 * d3)?;
    Tensor3::new((d1, d2, d3), values)
}

/// Writes a tensor to a `.tsr` file, one mode-3 fiber per line.
pub fn write_tsr(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    let (d1, d2, d3) = t.dims();
    let mut out = String::new();
    let _ = writeln!(out, "tsr3\n{d1} {d2} {d3}");
    push_value_rows(&mut out, t.values(), d3);
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a matrix from a `.mat` file.
pub fn read_mat(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let (dims, rest) = parse_header(path, &text, "mat")?;
    let [rows, cols] = dims[..] else {
        return Err(format_err(
            path,
            2,
            format!("expected 2 dimensions, got {}", dims.len()),
        ));
    };
    if rows == 0 || cols == 0 {
        return Err(format_err(path, 2, "dimensions must be positive"));
    }
    let values = parse_values(path, &rest, rows * cols)?;
    Matrix::new(rows, cols, values)
}

/// Writes a matrix to a `.mat` file, one row per line.
pub fn write_mat(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "mat\n{} {}", m.rows(), m.cols());
    push_value_rows(&mut out, m.values(), m.cols());
    std::fs::write(path, out)?;
    Ok(())
}

/// Persists an HOSVD result as four companion files:
/// `{prefix}.core.tsr`, `{prefix}.u.mat`, `{prefix}.v.mat`, `{prefix}.w.mat`.
pub fn save_hosvd(prefix: impl AsRef<Path>, h: &HosvdResult) -> Result<()> {
    let prefix = prefix.as_ref();
    let with = |suffix: &str| {
        let mut name = prefix.as_os_str().to_os_string();
        name.push(suffix);
        std::path::PathBuf::from(name)
    };
    write_tsr(with(".core.tsr"), h.core())?;
    let (u, v, w) = h.factors();
    write_mat(with(".u.mat"), u)?;
    write_mat(with(".v.mat"), v)?;
    write_mat(with(".w.mat"), w)?;
    Ok(())
}

/// Reads back an HOSVD result written by [`save_hosvd`], revalidating shape
/// consistency and orthonormality of the factors.
pub fn load_hosvd(prefix: impl AsRef<Path>) -> Result<HosvdResult> {
    let prefix = prefix.as_ref();
    let with = |suffix: &str| {
        let mut name = prefix.as_os_str().to_os_string();
        name.push(suffix);
        std::path::PathBuf::from(name)
    };
    let core = read_tsr(with(".core.tsr"))?;
    let u = read_mat(with(".u.mat"))?;
    let v = read_mat(with(".v.mat"))?;
    let w = read_mat(with(".w.mat"))?;
    HosvdResult::from_parts(core, u, v, w)
}

/// Returns dims parsed from a `r1,r2,r3` rank triple, shared by CLI flags.
pub fn parse_rank_triple(text: &str) -> Result<Dims> {
    let parts: Vec<&str> = text.split(',').collect();
    let [a, b, c] = parts[..] else {
        return Err(Error::arg(format!(
            "expected three comma-separated ranks, got `{text}`"
        )));
    };
    let parse = |tok: &str| {
        tok.trim()
            .parse::<usize>()
            .map_err(|_| Error::arg(format!("invalid rank `{}`", tok.trim())))
    };
    let triple = (parse(a)?, parse(b)?, parse(c)?);
    if triple.0 == 0 || triple.1 == 0 || triple.2 == 0 {
        return Err(Error::arg("ranks must be positive"));
    }
    Ok(triple)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn tmpfile(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        // Leak the dir so files survive until the process exits; tests are
        // short-lived and the OS reclaims the space.
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn tsr_round_trip_is_exact() {
        let t = Tensor3::new(
            (2, 2, 2),
            vec![1.0, -2.5, 3.25, 0.1, 1e-300, -7.125e12, 0.3, 8.0],
        )
        .unwrap();
        let path = tmpfile("t.tsr");
        write_tsr(&path, &t).unwrap();
        let back = read_tsr(&path).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn tsr_wrong_count_is_format_error() {
        let path = tmpfile("short.tsr");
        std::fs::write(&path, "tsr3\n2 2 2\n1 2 3 4 5 6 7\n").unwrap();
        match read_tsr(&path) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn tsr_nan_value_is_format_error() {
        let path = tmpfile("nan.tsr");
        std::fs::write(&path, "tsr3\n1 1 2\n1.0 NaN\n").unwrap();
        assert!(matches!(read_tsr(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn tsr_bad_header_is_format_error() {
        let path = tmpfile("bad.tsr");
        std::fs::write(&path, "tensor\n1 1 1\n1.0\n").unwrap();
        match read_tsr(&path) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn mat_round_trip_and_errors() {
        let m = Matrix::new(2, 3, vec![1.5, -2.0, 0.0, 4.0, 5.5, -6.25]).unwrap();
        let path = tmpfile("m.mat");
        write_mat(&path, &m).unwrap();
        let back = read_mat(&path).unwrap();
        assert_eq!(back.values(), m.values());
        assert_eq!((back.rows(), back.cols()), (2, 3));

        let bad = tmpfile("bad.mat");
        std::fs::write(&bad, "mat\n2 2\n1 2 3 4 5\n").unwrap();
        assert!(matches!(read_mat(&bad), Err(Error::Format { .. })));
    }

    #[test]
    fn rank_triple_parsing() {
        assert_eq!(parse_rank_triple("2,3,4").unwrap(), (2, 3, 4));
        assert_eq!(parse_rank_triple(" 1, 1 ,1").unwrap(), (1, 1, 1));
        assert!(parse_rank_triple("2,3").is_err());
        assert!(parse_rank_triple("2,3,x").is_err());
        assert!(parse_rank_triple("0,1,1").is_err());
    }
}
