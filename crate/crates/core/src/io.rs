//! Text file formats.
//!
//! * Datasets: one `theta<delim>x` record per line, an optional header line,
//!   and `#` comment lines.
//! * Density matrices, real matrices and Wigner grids: `key = value` header
//!   lines, a `data` line, then whitespace-separated numeric rows. Floats are
//!   written with 17 significant digits so doubles round-trip exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dataset::QuadratureDataset;
use crate::density::{CMatrix, DensityMatrix};
use crate::error::{Result, TomoError};
use crate::fock::QuadraturePoint;
use crate::wigner::{GridProvenance, WignerGrid, WignerGridSpec};

pub const DENSITY_FORMAT: &str = "hdtomo-density/1";
pub const REAL_MATRIX_FORMAT: &str = "hdtomo-real-matrix/1";
pub const WIGNER_FORMAT: &str = "hdtomo-wigner/1";
pub const DATASET_FORMAT: &str = "hdtomo-dataset/1";

/// At most this many offending lines are listed in a parse error.
const MAX_REPORTED: usize = 10;

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseUnit {
    #[default]
    Radians,
    Degrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IngestOptions {
    pub phase_unit: PhaseUnit,
    /// `None` detects `,`, `;`, tab or runs of whitespace per line.
    pub delimiter: Option<char>,
}

fn split_fields(line: &str, delimiter: Option<char>) -> Vec<&str> {
    let delim = delimiter.or_else(|| [',', ';', '\t'].into_iter().find(|c| line.contains(*c)));
    match delim {
        Some(d) if !d.is_whitespace() => line.split(d).map(str::trim).collect(),
        _ => line.split_whitespace().collect(),
    }
}

/// Parses dataset text; `eta` is attached as metadata.
pub fn parse_dataset(
    text: &str,
    options: &IngestOptions,
    eta: f64,
    origin: &Path,
) -> Result<QuadratureDataset> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut error_count = 0;
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line, options.delimiter);
        let parsed: Option<(f64, f64)> = match fields.as_slice() {
            [t, x] => t.parse().ok().zip(x.parse().ok()),
            _ => None,
        };
        let first = !seen_content;
        seen_content = true;
        match parsed {
            Some((t, x)) if t.is_finite() && x.is_finite() => {
                let theta = match options.phase_unit {
                    PhaseUnit::Radians => t,
                    PhaseUnit::Degrees => t * PI / 180.0,
                };
                records.push(QuadraturePoint::new(theta, x)?);
            }
            // a non-numeric first line is a header
            None if first && fields.iter().all(|f| f.parse::<f64>().is_err()) => {}
            _ => {
                error_count += 1;
                if errors.len() < MAX_REPORTED {
                    errors.push(format!("  line {}: {raw:?}", idx + 1));
                }
            }
        }
    }
    if error_count > 0 {
        if error_count > errors.len() {
            errors.push(format!("  ... and {} more", error_count - errors.len()));
        }
        return Err(TomoError::Parse {
            path: origin.to_path_buf(),
            details: errors.join("\n"),
        });
    }
    if records.is_empty() {
        return Err(TomoError::EmptyDataset);
    }
    QuadratureDataset::new(records, eta, origin.display().to_string())
}

pub fn read_dataset(path: &Path, options: &IngestOptions, eta: f64) -> Result<QuadratureDataset> {
    let text = read_text(path)?;
    parse_dataset(&text, options, eta, path)
}

/// Renders a dataset with a `theta,x` header, preceded by `#` comment lines.
pub fn render_dataset(dataset: &QuadratureDataset, comments: &[String]) -> String {
    let mut out = String::with_capacity(48 * (dataset.len() + 4));
    let _ = writeln!(out, "# format = {DATASET_FORMAT}");
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    out.push_str("theta,x\n");
    for r in dataset.records() {
        let _ = writeln!(out, "{},{}", fmt_f64(r.theta()), fmt_f64(r.x()));
    }
    out
}

/// Header-plus-numeric-rows document shared by the matrix and grid formats.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TextDocument {
    pub headers: BTreeMap<String, String>,
    pub rows: Vec<Vec<f64>>,
}

impl TextDocument {
    pub fn render(&self, format: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format = {format}");
        for (k, v) in &self.headers {
            let _ = writeln!(out, "{k} = {v}");
        }
        out.push_str("data\n");
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, format: &str, origin: &Path) -> Result<Self> {
        let perr = |details: String| TomoError::Parse {
            path: origin.to_path_buf(),
            details,
        };
        let mut doc = TextDocument::default();
        let mut lines = text.lines().enumerate();
        let mut found_format = None;
        for (idx, line) in lines.by_ref() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "data" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("  line {}: expected `key = value`", idx + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "format" {
                found_format = Some(v.to_string());
            } else {
                doc.headers.insert(k.to_string(), v.to_string());
            }
        }
        match found_format.as_deref() {
            Some(f) if f == format => {}
            other => return Err(perr(format!("  expected format {format}, found {other:?}"))),
        }
        let mut errors = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
            {
                Ok(row) => doc.rows.push(row),
                Err(_) if errors.len() < MAX_REPORTED => errors.push(format!("  line {}: {line:?}", idx + 1)),
                Err(_) => {}
            }
        }
        if !errors.is_empty() {
            return Err(perr(errors.join("\n")));
        }
        Ok(doc)
    }

    pub fn header(&self, key: &str, origin: &Path) -> Result<&str> {
        self.headers.get(key).map(String::as_str).ok_or_else(|| TomoError::Parse {
            path: origin.to_path_buf(),
            details: format!("  missing header `{key}`"),
        })
    }

    fn header_usize(&self, key: &str, origin: &Path) -> Result<usize> {
        self.header(key, origin)?.parse().map_err(|_| TomoError::Parse {
            path: origin.to_path_buf(),
            details: format!("  header `{key}` is not a non-negative integer"),
        })
    }
}

/// Matrix rows are `row col re im`, column-major.
pub fn render_density(rho: &DensityMatrix, meta: &BTreeMap<String, String>) -> String {
    render_complex_matrix(rho.matrix(), meta, DENSITY_FORMAT)
}

fn render_complex_matrix(m: &CMatrix, meta: &BTreeMap<String, String>, format: &str) -> String {
    let mut doc = TextDocument {
        headers: meta.clone(),
        rows: Vec::with_capacity(m.len()),
    };
    doc.headers.insert("rows".into(), m.nrows().to_string());
    doc.headers.insert("cols".into(), m.ncols().to_string());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            doc.rows.push(vec![i as f64, j as f64, z.re, z.im]);
        }
    }
    doc.render(format)
}

fn matrix_shape(doc: &TextDocument, origin: &Path, width: usize) -> Result<(usize, usize)> {
    let rows = doc.header_usize("rows", origin)?;
    let cols = doc.header_usize("cols", origin)?;
    if doc.rows.len() != rows * cols || doc.rows.iter().any(|r| r.len() != width) {
        return Err(TomoError::Parse {
            path: origin.to_path_buf(),
            details: format!("  expected {} entries of {width} fields", rows * cols),
        });
    }
    Ok((rows, cols))
}

fn entry_index(row: &[f64], rows: usize, cols: usize, origin: &Path) -> Result<(usize, usize)> {
    let (i, j) = (row[0], row[1]);
    if i.fract() != 0.0 || j.fract() != 0.0 || i < 0.0 || j < 0.0 || i as usize >= rows || j as usize >= cols {
        return Err(TomoError::Parse {
            path: origin.to_path_buf(),
            details: format!("  entry index ({i}, {j}) out of range"),
        });
    }
    Ok((i as usize, j as usize))
}

pub fn parse_density(text: &str, origin: &Path) -> Result<(DensityMatrix, BTreeMap<String, String>)> {
    let doc = TextDocument::parse(text, DENSITY_FORMAT, origin)?;
    let (rows, cols) = matrix_shape(&doc, origin, 4)?;
    let mut m = CMatrix::zeros(rows, cols);
    for row in &doc.rows {
        let (i, j) = entry_index(row, rows, cols, origin)?;
        m[(i, j)] = Complex64::new(row[2], row[3]);
    }
    let mut meta = doc.headers;
    meta.remove("rows");
    meta.remove("cols");
    Ok((DensityMatrix::new(m)?, meta))
}

pub fn read_density(path: &Path) -> Result<(DensityMatrix, BTreeMap<String, String>)> {
    parse_density(&read_text(path)?, path)
}

/// Rows are `row col value`, column-major.
pub fn render_real_matrix(m: &DMatrix<f64>, meta: &BTreeMap<String, String>) -> String {
    let mut doc = TextDocument {
        headers: meta.clone(),
        rows: Vec::with_capacity(m.len()),
    };
    doc.headers.insert("rows".into(), m.nrows().to_string());
    doc.headers.insert("cols".into(), m.ncols().to_string());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            doc.rows.push(vec![i as f64, j as f64, m[(i, j)]]);
        }
    }
    doc.render(REAL_MATRIX_FORMAT)
}

pub fn parse_real_matrix(text: &str, origin: &Path) -> Result<DMatrix<f64>> {
    let doc = TextDocument::parse(text, REAL_MATRIX_FORMAT, origin)?;
    let (rows, cols) = matrix_shape(&doc, origin, 3)?;
    let mut m = DMatrix::zeros(rows, cols);
    for row in &doc.rows {
        let (i, j) = entry_index(row, rows, cols, origin)?;
        m[(i, j)] = row[2];
    }
    Ok(m)
}

/// Rows are `x p W`, with x varying slowest.
pub fn render_wigner(grid: &WignerGrid, meta: &BTreeMap<String, String>) -> String {
    let s = &grid.spec;
    let mut doc = TextDocument {
        headers: meta.clone(),
        rows: Vec::with_capacity(s.nx * s.np),
    };
    doc.headers.insert(
        "grid".into(),
        serde_json::to_string(s).expect("grid spec serializes"),
    );
    doc.headers.insert(
        "provenance".into(),
        serde_json::to_string(&grid.provenance).expect("provenance serializes"),
    );
    for i in 0..s.nx {
        for j in 0..s.np {
            doc.rows.push(vec![s.x(i), s.p(j), grid.values[(i, j)]]);
        }
    }
    doc.render(WIGNER_FORMAT)
}

pub fn parse_wigner(text: &str, origin: &Path) -> Result<WignerGrid> {
    let doc = TextDocument::parse(text, WIGNER_FORMAT, origin)?;
    let perr = |details: String| TomoError::Parse {
        path: origin.to_path_buf(),
        details,
    };
    let spec: WignerGridSpec = serde_json::from_str(doc.header("grid", origin)?)
        .map_err(|e| perr(format!("  grid header: {e}")))?;
    spec.validate()?;
    let provenance: GridProvenance = serde_json::from_str(doc.header("provenance", origin)?)
        .map_err(|e| perr(format!("  provenance header: {e}")))?;
    if doc.rows.len() != spec.nx * spec.np || doc.rows.iter().any(|r| r.len() != 3) {
        return Err(perr(format!("  expected {} rows of `x p W`", spec.nx * spec.np)));
    }
    let values = DMatrix::from_fn(spec.nx, spec.np, |i, j| doc.rows[i * spec.np + j][2]);
    Ok(WignerGrid {
        values,
        spec,
        provenance,
        warnings: Vec::new(),
    })
}

/// `x_min,x_max,nx,p_min,p_max,np`
pub fn parse_grid_spec(text: &str) -> Result<WignerGridSpec> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || TomoError::param("grid", format!("expected x_min,x_max,nx,p_min,p_max,np; got {text:?}"));
    if fields.len() != 6 {
        return Err(bad());
    }
    let f = |i: usize| fields[i].parse::<f64>().map_err(|_| bad());
    let n = |i: usize| fields[i].parse::<usize>().map_err(|_| bad());
    let spec = WignerGridSpec {
        x_min: f(0)?,
        x_max: f(1)?,
        nx: n(2)?,
        p_min: f(3)?,
        p_max: f(4)?,
        np: n(5)?,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| TomoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes via a temporary sibling file and an atomic rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| TomoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| TomoError::param("path", format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp: PathBuf = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn origin() -> &'static Path {
        Path::new("<test>")
    }

    #[test]
    fn plain_and_headed_datasets() {
        let a = parse_dataset("0.0,1.25\n1.5708,-0.3\n", &IngestOptions::default(), 1.0, origin()).unwrap();
        let b = parse_dataset("theta,x\n0.0,1.25\n1.5708,-0.3\n", &IngestOptions::default(), 1.0, origin())
            .unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a.records(), b.records());
        assert_eq!(a.records()[1].theta(), 1.5708);
        assert_eq!(a.records()[0].x(), 1.25);
    }

    #[test]
    fn degrees_and_whitespace() {
        let opts = IngestOptions {
            phase_unit: PhaseUnit::Degrees,
            delimiter: None,
        };
        let d = parse_dataset("90 0.5\n180\t-1\n", &opts, 0.9, origin()).unwrap();
        assert!((d.records()[0].theta() - PI / 2.0).abs() < 1e-15);
        assert!((d.records()[1].theta() - PI).abs() < 1e-15);
        assert_eq!(d.eta(), 0.9);
    }

    #[test]
    fn malformed_lines_are_reported() {
        let text = "theta,x\n0,1\n0,abc\n1,2,3\n2,nan\n";
        match parse_dataset(text, &IngestOptions::default(), 1.0, origin()) {
            Err(TomoError::Parse { details, .. }) => {
                assert!(details.contains("line 3"));
                assert!(details.contains("line 4"));
                assert!(details.contains("line 5"));
            }
            other => panic!("{other:?}"),
        }
        let many: String = (0..25).map(|_| "x,y\n").collect();
        let err = parse_dataset(&format!("0,0\n{many}"), &IngestOptions::default(), 1.0, origin()).unwrap_err();
        let details = err.to_string();
        assert!(details.contains("and 15 more"), "{details}");
    }

    #[test]
    fn empty_files_rejected() {
        assert!(matches!(
            parse_dataset("# nothing\n\n", &IngestOptions::default(), 1.0, origin()),
            Err(TomoError::EmptyDataset)
        ));
        assert!(matches!(
            parse_dataset("theta,x\n", &IngestOptions::default(), 1.0, origin()),
            Err(TomoError::EmptyDataset)
        ));
    }

    #[test]
    fn density_roundtrip_is_exact() {
        let psi: Vec<Complex64> = (0..5).map(|n| Complex64::new(0.1 * n as f64 + 0.3, -0.7 / (n + 1) as f64)).collect();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("config".into(), "{\"n_max\":4}".into());
        let text = render_density(&rho, &meta);
        let (back, meta_back) = parse_density(&text, origin()).unwrap();
        assert_eq!(back, rho);
        assert_eq!(meta_back, meta);
    }

    #[test]
    fn wrong_format_rejected() {
        let m = DMatrix::<f64>::identity(2, 2);
        let text = render_real_matrix(&m, &BTreeMap::new());
        assert!(parse_density(&text, origin()).is_err());
        assert_eq!(parse_real_matrix(&text, origin()).unwrap(), m);
    }

    #[test]
    fn grid_spec_parsing() {
        let s = parse_grid_spec("-2,2,41,-3,3,61").unwrap();
        assert_eq!((s.nx, s.np, s.p_min), (41, 61, -3.0));
        assert!(parse_grid_spec("-2,2,41").is_err());
        assert!(parse_grid_spec("2,-2,41,-3,3,61").is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, "hello").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/out.txt"), "x").is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn dataset_text_roundtrips_bit_exactly(
            pairs in proptest::collection::vec((0.0f64..std::f64::consts::TAU, -1e3f64..1e3), 1..50)
        ) {
            let d = QuadratureDataset::from_pairs(pairs, 1.0, "p").unwrap();
            let text = render_dataset(&d, &["seed = 1".to_string()]);
            let back = parse_dataset(&text, &IngestOptions::default(), 1.0, origin()).unwrap();
            prop_assert_eq!(back.records(), d.records());
        }

        #[test]
        fn f64_text_roundtrips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
