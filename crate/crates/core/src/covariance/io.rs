//! Location CSV files and covariance matrix output.
//!
//! Locations: header `x,y` or `x,y,z`, one row per location, the optional
//! `z` column holding an observation. Matrices: CSV rows with 17 significant
//! digits, or a binary file made of the magic `CVMX`, a little-endian `u32`
//! version (1), a `u64` order `N`, then `N²` little-endian `f64` values in
//! column-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CovarianceMatrix, LocationSet};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CVMX";
const VERSION: u32 = 1;

/// Locations and, when present, the `z` column.
pub fn read_locations<R: Read>(r: R) -> Result<(LocationSet, Option<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let has_z = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "y"] => false,
        ["x", "y", "z"] => true,
        _ => return Err(Error::Parse(format!("expected header x,y or x,y,z, got {}", header.join(",")))),
    };
    let mut coords = Vec::new();
    let mut z = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64> {
            let s = rec.get(k).ok_or_else(|| Error::Parse(format!("row {}: missing column {k}", row + 1)))?;
            s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number '{s}'", row + 1)))
        };
        coords.push([field(0)?, field(1)?]);
        if has_z {
            z.push(field(2)?);
        }
    }
    if coords.is_empty() {
        return Err(Error::Parse("no locations in input".into()));
    }
    Ok((LocationSet::new(coords)?, has_z.then_some(z)))
}

pub fn read_locations_path(path: &Path) -> Result<(LocationSet, Option<Vec<f64>>)> {
    let f = File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    read_locations(BufReader::new(f))
}

pub fn write_locations<W: Write>(locs: &LocationSet, z: Option<&[f64]>, w: W) -> Result<()> {
    if let Some(z) = z {
        if z.len() != locs.len() {
            return Err(Error::domain("observation count differs from location count"));
        }
    }
    let mut out = csv::Writer::from_writer(w);
    if z.is_some() {
        out.write_record(["x", "y", "z"])?;
    } else {
        out.write_record(["x", "y"])?;
    }
    for (i, c) in locs.coords().iter().enumerate() {
        let mut rec = vec![format!("{:.16e}", c[0]), format!("{:.16e}", c[1])];
        if let Some(z) = z {
            rec.push(format!("{:.16e}", z[i]));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Row-major CSV, no header.
pub fn write_matrix_csv<W: Write>(m: &CovarianceMatrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let n = m.n();
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for j in 0..n {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", m.get(i, j)));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_binary<W: Write>(m: &CovarianceMatrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.n() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_binary<R: Read>(r: R) -> Result<CovarianceMatrix> {
    let mut r = BufReader::new(r);
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if &head[0..4] != MAGIC {
        return Err(Error::Parse("not a CVMX matrix file".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported matrix file version {version}")));
    }
    let n = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let len = n.checked_mul(n).ok_or_else(|| Error::Parse("matrix order too large".into()))?;
    let mut data = Vec::new();
    data.try_reserve_exact(len).map_err(|_| Error::Allocation(len.saturating_mul(8)))?;
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    CovarianceMatrix::from_column_major(n, n, data)
}
