//! Two-column numeric CSV files with mandatory unit-tagged headers.
//!
//! Spectrum and sweep files use the fixed header `frequency_Hz,amplitude_V`.
//! Values are written with Rust's shortest round-trip float formatting, so
//! a write/read cycle reproduces every number bit-exactly.

use super::DataError;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const SPECTRUM_HEADER: (&str, &str) = ("frequency_Hz", "amplitude_V");

/// Read a two-column CSV, enforcing the expected header. A header whose
/// column base names match but whose unit tags differ reports a unit
/// error; anything else malformed reports a schema error with position.
pub fn read_two_column(
    path: &Path,
    expected: (&str, &str),
) -> Result<(Vec<f64>, Vec<f64>), DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let file = path.display().to_string();
    let mut lines = text.lines().enumerate();

    let (header_idx, header) = lines
        .next()
        .ok_or_else(|| DataError::schema(&file, 1, 1, "empty file, expected a header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() != 2 {
        return Err(DataError::schema(
            &file,
            header_idx + 1,
            1,
            format!("expected 2 header columns, found {}", cols.len()),
        ));
    }
    for (i, (found, want)) in cols.iter().zip([expected.0, expected.1]).enumerate() {
        if *found != want {
            let col = if i == 0 { 1 } else { header.find(',').unwrap_or(0) + 2 };
            // Same base name with a different unit suffix is a unit
            // problem, not a structural one.
            let (fb, ft) = split_unit(found);
            let (wb, wt) = split_unit(want);
            if fb == wb && ft != wt {
                return Err(DataError::Unit {
                    file,
                    line: header_idx + 1,
                    found: (*found).to_string(),
                    expected: want.to_string(),
                });
            }
            return Err(DataError::schema(
                &file,
                header_idx + 1,
                col,
                format!("expected header column `{want}`, found `{found}`"),
            ));
        }
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let a = parts.next().unwrap_or("");
        let b = parts.next().ok_or_else(|| {
            DataError::schema(&file, line_no, line.len() + 1, "expected 2 fields, found 1")
        })?;
        xs.push(parse_float(&file, line_no, 1, a)?);
        ys.push(parse_float(&file, line_no, a.len() + 2, b)?);
    }
    Ok((xs, ys))
}

pub fn write_two_column(
    path: &Path,
    header: (&str, &str),
    xs: &[f64],
    ys: &[f64],
) -> Result<(), DataError> {
    let mut out = String::with_capacity(xs.len() * 32 + 32);
    out.push_str(header.0);
    out.push(',');
    out.push_str(header.1);
    out.push('\n');
    for (x, y) in xs.iter().zip(ys) {
        out.push_str(&format!("{x},{y}\n"));
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let io_err = |e| DataError::Io { path: path.display().to_string(), source: e };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(bytes)
        .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    Ok(())
}

pub fn parse_float(file: &str, line: usize, col: usize, text: &str) -> Result<f64, DataError> {
    let trimmed = text.trim();
    trimmed.parse::<f64>().map_err(|_| {
        DataError::schema(file, line, col, format!("expected a number, found `{trimmed}`"))
    })
}

/// Split `name_Tag` into (base, tag); names with no underscore have an
/// empty tag.
pub fn split_unit(name: &str) -> (&str, &str) {
    match name.rfind('_') {
        Some(i) => (&name[..i], &name[i + 1..]),
        None => (name, ""),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("spec.csv");
        let xs = vec![6.94016e6, 6.94018e6, 0.1 + 0.2, 1.0 / 3.0];
        let ys = vec![2.5e-7, 1.0e-300, std::f64::consts::PI, 4.7e-5];
        write_two_column(&path, SPECTRUM_HEADER, &xs, &ys).unwrap();
        let (rx, ry) = read_two_column(&path, SPECTRUM_HEADER).unwrap();
        assert_eq!(xs, rx);
        assert_eq!(ys, ry);
    }

    #[test]
    fn wrong_unit_tag_is_a_unit_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "frequency_MHz,amplitude_V\n1.0,2.0\n").unwrap();
        let err = read_two_column(&path, SPECTRUM_HEADER).unwrap_err();
        assert!(matches!(err, DataError::Unit { .. }), "got {err}");
    }

    #[test]
    fn malformed_number_reports_position() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "frequency_Hz,amplitude_V\n1.0,2.0\n3.0,oops\n").unwrap();
        let err = read_two_column(&path, SPECTRUM_HEADER).unwrap_err();
        match err {
            DataError::Schema { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, 5);
            }
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn missing_field_reports_schema_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "frequency_Hz,amplitude_V\n1.0\n").unwrap();
        assert!(matches!(
            read_two_column(&path, SPECTRUM_HEADER),
            Err(DataError::Schema { .. })
        ));
    }
}
