//! Headerless CSV for point clouds and multichannel series.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Boundary, PointCloud};

/// Reads rows of decimal reals; every row must have the same width.
pub fn read_matrix<R: Read>(reader: R, origin: &Path) -> Result<(Vec<f64>, usize)> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut values = Vec::new();
    let mut width = None;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Parse {
                    path: origin.to_owned(),
                    message: format!("row {} has {} fields, expected {w}", i + 1, rec.len()),
                })
            }
            _ => {}
        }
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: origin.to_owned(),
                message: format!("row {}: `{field}` is not a number", i + 1),
            })?;
            values.push(v);
        }
    }
    let width = width.ok_or_else(|| Error::Parse { path: origin.to_owned(), message: "no data rows".into() })?;
    Ok((values, width))
}

pub fn read_cloud_csv(path: &Path, boundary: Boundary) -> Result<PointCloud> {
    let file = std::fs::File::open(path)?;
    let (values, width) = read_matrix(file, path)?;
    PointCloud::new(values, width, boundary)
        .map_err(|e| Error::Parse { path: path.to_owned(), message: e.to_string() })
}

pub fn write_matrix<W: Write>(writer: W, values: &[f64], width: usize) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in values.chunks_exact(width) {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cloud_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_matrix(std::io::BufWriter::new(file), cloud.coords(), cloud.dim())
}
