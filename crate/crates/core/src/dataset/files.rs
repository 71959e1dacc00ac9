//! Homography and detection text files.
//!
//! Detection files start with the line `detbench-det/1`, then the feature
//! count, then one feature per line: `u v m11 m12 m22 score`, where
//! `(m11, m12, m22)` are the entries of the shape matrix `M` of the region
//! `{p : (p - c)ᵀ M (p - c) ≤ 1}`.
//!
//! Files without that header are read as legacy affine-region files: an
//! optional two-line numeric preamble (a version number and the count),
//! then rows `u v a b c` describing `a·dx² + 2·b·dx·dy + c·dy² = 1`. The
//! off-diagonal coefficient `b` is therefore taken as `m12` directly, not
//! halved. Legacy rows carry no score; the first row ranks highest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Point2};

use crate::dataset::manifest::HomographyDirection;
use crate::error::{Error, Result};
use crate::geometry::{Homography, Region};

pub const DETECTION_HEADER: &str = "detbench-det/1";

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("not UTF-8: {e}"),
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_numbers(path: &Path, line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(path, line_no, format!("invalid number `{tok}`")))
        })
        .collect()
}

/// Parses nine whitespace-separated reals (row-major 3×3).
pub fn parse_homography(text: &str, path: &Path, direction: HomographyDirection) -> Result<Homography> {
    let mut values = Vec::with_capacity(9);
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        last_line = i + 1;
        values.extend(parse_numbers(path, i + 1, line)?);
    }
    if values.len() != 9 {
        return Err(parse_error(
            path,
            last_line,
            format!("expected 9 numbers, found {}", values.len()),
        ));
    }
    let m = Matrix3::from_row_slice(&values);
    match direction {
        HomographyDirection::FromToTo => Homography::new(m),
        HomographyDirection::ToToFrom => Homography::from_target_to_ref(m),
    }
}

pub fn load_homography(path: impl AsRef<Path>, direction: HomographyDirection) -> Result<Homography> {
    let path = path.as_ref();
    parse_homography(&read_text(path)?, path, direction)
}

pub fn format_homography(h: &Homography) -> String {
    let m = h.matrix();
    let mut out = String::new();
    for r in 0..3 {
        let _ = writeln!(out, "{} {} {}", m[(r, 0)], m[(r, 1)], m[(r, 2)]);
    }
    out
}

/// Parses a detection file in either the canonical or the legacy format.
pub fn parse_detections(text: &str, path: &Path) -> Result<Vec<Region>> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    match lines.first() {
        Some((_, first)) if *first == DETECTION_HEADER => parse_canonical(&lines[1..], path),
        Some((no, first)) if first.starts_with("detbench-det/") => {
            Err(parse_error(path, *no, format!("unsupported format version `{first}`")))
        }
        _ => parse_legacy(&lines, path),
    }
}

fn parse_count(path: &Path, line_no: usize, line: &str) -> Result<usize> {
    line.parse::<usize>()
        .map_err(|_| parse_error(path, line_no, format!("invalid feature count `{line}`")))
}

fn parse_canonical(lines: &[(usize, &str)], path: &Path) -> Result<Vec<Region>> {
    let Some(&(count_line, count_text)) = lines.first() else {
        return Err(parse_error(path, 1, "missing feature count"));
    };
    let count = parse_count(path, count_line, count_text)?;
    let rows = &lines[1..];
    if rows.len() != count {
        return Err(parse_error(
            path,
            count_line,
            format!("header declares {count} features, file has {}", rows.len()),
        ));
    }
    let mut regions = Vec::with_capacity(count);
    let mut invalid = Vec::new();
    for &(no, line) in rows {
        let v = parse_numbers(path, no, line)?;
        if v.len() != 6 {
            return Err(parse_error(path, no, format!("expected 6 fields, found {}", v.len())));
        }
        match Region::from_shape(Point2::new(v[0], v[1]), v[2], v[3], v[4], v[5]) {
            Ok(r) => regions.push(r),
            Err(_) => invalid.push(no),
        }
    }
    if !invalid.is_empty() {
        return Err(Error::InvalidDetections {
            path: path.to_path_buf(),
            lines: invalid,
        });
    }
    Ok(regions)
}

fn parse_legacy(lines: &[(usize, &str)], path: &Path) -> Result<Vec<Region>> {
    let mut rows = lines;
    let mut declared = None;
    let single = |l: &str| l.split_whitespace().count() == 1;
    if rows.len() >= 2 && single(rows[0].1) && single(rows[1].1) {
        parse_numbers(path, rows[0].0, rows[0].1)?;
        declared = Some((rows[1].0, parse_count(path, rows[1].0, rows[1].1)?));
        rows = &rows[2..];
    }
    if let Some((no, count)) = declared {
        if count != rows.len() {
            return Err(parse_error(
                path,
                no,
                format!("header declares {count} features, file has {}", rows.len()),
            ));
        }
    }
    let k = rows.len();
    let mut regions = Vec::with_capacity(k);
    let mut invalid = Vec::new();
    for (i, &(no, line)) in rows.iter().enumerate() {
        let v = parse_numbers(path, no, line)?;
        if v.len() != 5 {
            return Err(parse_error(
                path,
                no,
                format!(
                    "expected 5 fields (u v a b c) in a file without `{DETECTION_HEADER}` header, found {}",
                    v.len()
                ),
            ));
        }
        match Region::from_shape(Point2::new(v[0], v[1]), v[2], v[3], v[4], (k - i) as f64) {
            Ok(r) => regions.push(r),
            Err(_) => invalid.push(no),
        }
    }
    if !invalid.is_empty() {
        return Err(Error::InvalidDetections {
            path: path.to_path_buf(),
            lines: invalid,
        });
    }
    Ok(regions)
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<Region>> {
    let path = path.as_ref();
    parse_detections(&read_text(path)?, path)
}

/// Canonical text for `regions`; every value uses the shortest decimal
/// form that reads back to the same bits.
pub fn format_detections(regions: &[Region]) -> String {
    let mut out = String::with_capacity(32 + regions.len() * 96);
    out.push_str(DETECTION_HEADER);
    out.push('\n');
    let _ = writeln!(out, "{}", regions.len());
    for r in regions {
        let c = r.center();
        let m = r.shape();
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            c.x,
            c.y,
            m[(0, 0)],
            m[(0, 1)],
            m[(1, 1)],
            r.score()
        );
    }
    out
}

pub fn write_detections(path: impl AsRef<Path>, regions: &[Region]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    fs::write(path, format_detections(regions)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Rewrites a legacy file in the canonical format.
pub fn convert_legacy(src: impl AsRef<Path>, dst: impl AsRef<Path>) -> Result<usize> {
    let regions = load_detections(src)?;
    write_detections(dst, &regions)?;
    Ok(regions.len())
}
