//! On-disk formats: raw little-endian dumps with JSON headers, JSON lines for
//! scattering samples, CSV for curves.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use calderon_core::domain::Domain;
use calderon_core::forward::DtnMap;
use calderon_core::grid::Grid;
use calderon_core::recon::{ScatteringSample, ScatteringSamples};
use calderon_core::{Complex64, ScalarField};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub n_per_axis: usize,
    pub box_halfwidth: f64,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnHeader {
    pub label: String,
    pub n_boundary: usize,
    pub domain_hash: String,
}

/// One line of the samples file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub xi: [f64; 3],
    pub k: f64,
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut p = stem.as_os_str().to_owned();
    p.push(".");
    p.push(ext);
    PathBuf::from(p)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> LabResult<()> {
    std::fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serialises");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> LabResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::format(path, e.to_string()))
}

fn complex_bytes(values: impl Iterator<Item = Complex64>) -> Vec<u8> {
    let mut out = Vec::new();
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn read_complex(path: &Path, expected: usize) -> LabResult<Vec<Complex64>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| LabError::io(path, e))?;
    if bytes.len() != expected * 16 {
        return Err(LabError::format(path, format!("{} bytes, expected {}", bytes.len(), expected * 16)));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

/// Writes `<stem>.bin` (complex pairs, x fastest) and `<stem>.json`.
/// Returns both paths.
pub fn write_field(stem: &Path, field: &ScalarField, kind: &str) -> LabResult<Vec<PathBuf>> {
    let g = field.grid();
    let header = FieldHeader { n_per_axis: g.n(), box_halfwidth: g.half_width(), kind: kind.to_owned() };
    let bin = with_ext(stem, "bin");
    let json = with_ext(stem, "json");
    write_bytes(&bin, &complex_bytes(field.values().iter().copied()))?;
    write_json(&json, &header)?;
    Ok(vec![bin, json])
}

pub fn read_field(stem: &Path) -> LabResult<(FieldHeader, ScalarField)> {
    let json = with_ext(stem, "json");
    let header: FieldHeader = read_json(&json)?;
    let grid = Grid::new(header.n_per_axis, header.box_halfwidth).map_err(|e| LabError::format(&json, e.to_string()))?;
    let bin = with_ext(stem, "bin");
    let values = read_complex(&bin, grid.len())?;
    let field = ScalarField::from_values(grid, values).map_err(|e| LabError::format(&bin, e.to_string()))?;
    Ok((header, field))
}

/// Writes the nodal matrix row by row as complex pairs.
pub fn write_dtn(stem: &Path, map: &DtnMap) -> LabResult<Vec<PathBuf>> {
    let m = map.matrix();
    let nb = m.nrows();
    let header =
        DtnHeader { label: map.label().to_owned(), n_boundary: nb, domain_hash: map.domain().hash().to_owned() };
    let bin = with_ext(stem, "bin");
    let json = with_ext(stem, "json");
    let values = (0..nb).flat_map(|i| (0..nb).map(move |j| Complex64::new(m[(i, j)], 0.0)));
    write_bytes(&bin, &complex_bytes(values))?;
    write_json(&json, &header)?;
    Ok(vec![bin, json])
}

/// Reads a map and attaches it to `domain`, refusing maps from other domains.
pub fn read_dtn(stem: &Path, domain: &Arc<Domain>) -> LabResult<DtnMap> {
    let json = with_ext(stem, "json");
    let header: DtnHeader = read_json(&json)?;
    if header.domain_hash != domain.hash() || header.n_boundary != domain.n_boundary() {
        return Err(LabError::format(&json, "map belongs to a different domain"));
    }
    let nb = header.n_boundary;
    let bin = with_ext(stem, "bin");
    let values = read_complex(&bin, nb * nb)?;
    if values.iter().any(|v| v.im != 0.0) {
        return Err(LabError::format(&bin, "map entries must be real"));
    }
    let m = Mat::<f64>::from_fn(nb, nb, |i, j| values[i * nb + j].re);
    DtnMap::from_matrix(domain.clone(), m, header.label).map_err(|e| LabError::format(&bin, e.to_string()))
}

pub fn sample_records(samples: &ScatteringSamples) -> Vec<SampleRecord> {
    samples
        .samples
        .iter()
        .map(|s: &ScatteringSample| SampleRecord {
            xi: s.xi,
            k: s.k,
            re: s.value.re,
            im: s.value.im,
            residual: s.bie_residual,
        })
        .collect()
}

pub fn write_samples(path: &Path, samples: &ScatteringSamples) -> LabResult<()> {
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in sample_records(samples) {
        let line = serde_json::to_string(&r).expect("record serialises");
        writeln!(w, "{line}").map_err(|e| LabError::io(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn read_samples(path: &Path) -> LabResult<Vec<SampleRecord>> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| LabError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| LabError::format(path, e.to_string()))?);
    }
    Ok(out)
}

/// Writes a CSV table; values use the shortest representation that reads
/// back exactly.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> LabResult<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}
