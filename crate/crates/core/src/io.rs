//! Plot-ready CSV exports and a compact binary field dump.
//!
//! All writers format floats with Rust's shortest-roundtrip `Display`, so
//! identical inputs produce byte-identical files. The binary dump is a JSON
//! header (grid metadata) followed by raw little-endian f64 values.

use crate::ensemble::SampleTable;
use crate::fields::{Grid2D, ScalarField};
use crate::front::FrontCurve;
use crate::metric::CorrectorField;
use crate::noise::NoisePath;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

pub fn write_field_csv<T: Scalar>(path: &Path, field: &ScalarField<T>) -> io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,y,value")?;
    let g = field.grid;
    for ix in 0..g.nx {
        for iy in 0..g.ny {
            writeln!(w, "{},{},{}", g.x_at(ix), g.y_at(iy), field.get(ix, iy))?;
        }
    }
    Ok(())
}

pub fn write_noise_csv<T: Scalar>(path: &Path, noise: &NoisePath<T>) -> io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "y,w,w_prime")?;
    for i in 0..noise.len() {
        writeln!(
            w,
            "{},{},{}",
            noise.y_at(i),
            noise.w_values[i],
            noise.w_deriv_values[i]
        )?;
    }
    Ok(())
}

pub fn write_front_csv<T: Scalar>(path: &Path, fronts: &[FrontCurve<T>]) -> io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,x,y_front,flagged")?;
    for front in fronts {
        for i in 0..front.x_nodes.len() {
            writeln!(
                w,
                "{},{},{},{}",
                front.time_stamp,
                front.x_nodes[i],
                front.y_front[i],
                front.multivalued_flag[i] as u8
            )?;
        }
    }
    Ok(())
}

pub fn write_corrector_csv<T: Scalar>(
    path: &Path,
    corr: &CorrectorField<T>,
) -> io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let td = !corr.tau_nodes.is_empty();
    if td {
        writeln!(w, "x,xi,tau,chi,chi_bar")?;
    } else {
        writeln!(w, "x,xi,chi,chi_bar")?;
    }
    let n_tau = corr.tau_nodes.len().max(1);
    for it in 0..n_tau {
        for ix in 0..corr.n_x() {
            for k in 0..corr.n_xi() {
                let i = corr.idx(it, ix, k);
                if !corr.valid[i] {
                    continue;
                }
                if td {
                    writeln!(
                        w,
                        "{},{},{},{},{}",
                        corr.x_nodes[ix],
                        corr.xi_nodes[k],
                        corr.tau_nodes[it],
                        corr.chi[i],
                        corr.chi_bar[i]
                    )?;
                } else {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        corr.x_nodes[ix], corr.xi_nodes[k], corr.chi[i], corr.chi_bar[i]
                    )?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_samples_csv(path: &Path, table: &SampleTable) -> io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "sample_id,seed,probe,value")?;
    for row in &table.rows {
        writeln!(w, "{},{},{},{}", row.sample_id, row.seed, row.probe, row.value)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct DumpHeader {
    nx: usize,
    ny: usize,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    time_stamp: f64,
    dtype: String,
}

const DUMP_MAGIC: &[u8; 4] = b"HJF1";

/// Binary dump: magic, u32 header length, JSON header, raw LE f64 values.
pub fn write_field_dump<T: Scalar>(path: &Path, field: &ScalarField<T>) -> io::Result<()> {
    let g = field.grid;
    let header = DumpHeader {
        nx: g.nx,
        ny: g.ny,
        x_min: g.x_min.as_f64(),
        x_max: g.x_max.as_f64(),
        y_min: g.y_min.as_f64(),
        y_max: g.y_max.as_f64(),
        time_stamp: field.time_stamp.as_f64(),
        dtype: "f64".into(),
    };
    let hjson = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(hjson.len() as u32).to_le_bytes())?;
    w.write_all(&hjson)?;
    for v in &field.values {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_dump(path: &Path) -> io::Result<ScalarField<f64>> {
    let mut r = std::fs::File::open(path)?;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut hjson = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut hjson)?;
    let header: DumpHeader = serde_json::from_slice(&hjson)?;
    let grid = Grid2D::new(
        (header.x_min, header.x_max),
        header.nx,
        (header.y_min, header.y_max),
        header.ny,
    )
    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let mut values = vec![0.0f64; header.nx * header.ny];
    let mut buf = [0u8; 8];
    for v in values.iter_mut() {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    ScalarField::new(grid, values, header.time_stamp)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid2D;

    #[test]
    fn dump_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.bin");
        let g = Grid2D::new((0.0f64, 6.0), 5, (-1.0, 2.0), 13).unwrap();
        let f = ScalarField::from_fn(g, 0.7, |x, y| (x * 1.37).sin() + y * y);
        write_field_dump(&path, &f).unwrap();
        let back = read_field_dump(&path).unwrap();
        assert_eq!(back.grid, g);
        assert_eq!(back.time_stamp, 0.7);
        assert_eq!(back.values, f.values);
    }

    #[test]
    fn csv_outputs_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2D::new((0.0f64, 6.0), 3, (-1.0, 1.0), 5).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |x, y| x + y / 3.0);
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_field_csv(&a, &f).unwrap();
        write_field_csv(&b, &f).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let text = std::fs::read_to_string(&a).unwrap();
        assert!(text.starts_with("x,y,value\n"));
    }
}
