//! Field snapshot files: a flat binary layout plus a text sidecar.
//!
//! Binary layout (all little-endian): u32 dimension d, u32 modes-per-axis n,
//! f64 box length L, u32 component count, then component-major f64 samples in
//! x-fastest node order. The sidecar `<path>.meta` carries key=value lines
//! describing provenance (time, step, kind); it is advisory — the binary file
//! alone reconstructs the field.

use crate::error::{Error, Result};
use crate::spectral::{Grid, ScalarField, VectorField};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

fn meta_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    PathBuf::from(os)
}

fn write_header(buf: &mut Vec<u8>, grid: &Grid, ncomp: u32) {
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.box_len().to_le_bytes());
    buf.extend_from_slice(&ncomp.to_le_bytes());
}

fn write_snapshot(path: &Path, grid: &Grid, comps: &[&[f64]], meta: &[(&str, String)]) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + comps.len() * grid.points() * 8);
    write_header(&mut buf, grid, comps.len() as u32);
    for comp in comps {
        debug_assert_eq!(comp.len(), grid.points());
        for x in *comp {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;

    let mut side = String::new();
    for (k, v) in meta {
        side.push_str(k);
        side.push_str(" = ");
        side.push_str(v);
        side.push('\n');
    }
    fs::write(meta_path(path), side)?;
    Ok(())
}

/// Writes a velocity (or any vector) snapshot with its sidecar.
pub fn write_vector(path: &Path, v: &VectorField, meta: &[(&str, String)]) -> Result<()> {
    let grid = v.grid();
    let comps: Vec<&[f64]> = (0..grid.dim()).map(|a| v.comp(a)).collect();
    write_snapshot(path, &grid, &comps, meta)
}

/// Writes a scalar snapshot (pressure, diagnostics) with its sidecar.
pub fn write_scalar(path: &Path, f: &ScalarField, meta: &[(&str, String)]) -> Result<()> {
    write_snapshot(path, &f.grid(), &[f.data()], meta)
}

struct RawSnapshot {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

fn read_snapshot(path: &Path) -> Result<RawSnapshot> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let fail = |msg: &str| Error::Snapshot(format!("{}: {msg}", path.display()));
    if bytes.len() < 20 {
        return Err(fail("file shorter than the 20-byte header"));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let d = u32_at(0) as usize;
    let n = u32_at(4) as usize;
    let box_len = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let ncomp = u32_at(16) as usize;
    if !(1..=3).contains(&d) {
        return Err(fail(&format!("dimension {d} out of range")));
    }
    let grid = Grid::new(n, box_len, d)
        .map_err(|e| fail(&format!("invalid grid header: {e}")))?;
    let expected = 20 + ncomp * grid.points() * 8;
    if bytes.len() != expected {
        return Err(fail(&format!(
            "payload length {} does not match header ({} expected)",
            bytes.len(),
            expected
        )));
    }
    let mut comps = Vec::with_capacity(ncomp);
    let mut off = 20;
    for _ in 0..ncomp {
        let mut comp = Vec::with_capacity(grid.points());
        for _ in 0..grid.points() {
            comp.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        comps.push(comp);
    }
    Ok(RawSnapshot { grid, comps })
}

/// Reads a vector snapshot; the component count must match the grid dimension.
pub fn read_vector(path: &Path) -> Result<VectorField> {
    let raw = read_snapshot(path)?;
    if raw.comps.len() != raw.grid.dim() {
        return Err(Error::Snapshot(format!(
            "{}: {} components for a {}-D vector field",
            path.display(),
            raw.comps.len(),
            raw.grid.dim()
        )));
    }
    Ok(VectorField::from_comps(raw.grid, raw.comps))
}

/// Reads a scalar snapshot (exactly one component).
pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let raw = read_snapshot(path)?;
    match <[Vec<f64>; 1]>::try_from(raw.comps) {
        Ok([data]) => Ok(ScalarField::from_data(raw.grid, data)),
        Err(comps) => Err(Error::Snapshot(format!(
            "{}: {} components for a scalar field",
            path.display(),
            comps.len()
        ))),
    }
}

/// Reads the sidecar back as (key, value) pairs in file order.
pub fn read_meta(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(meta_path(path))?;
    Ok(text
        .lines()
        .filter_map(|line| {
            line.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        })
        .collect())
}

/// Exports the 1-D slice along `axis` through node `through` (multi-index of
/// the remaining coordinates fixed) as CSV with coordinate + one column per
/// component.
pub fn write_axis_slice_csv(
    path: &Path,
    v: &VectorField,
    axis: usize,
    through: [usize; 3],
) -> Result<()> {
    let grid = v.grid();
    let d = grid.dim();
    if axis >= d {
        return Err(Error::ConfigGeneral(format!(
            "slice axis {axis} out of range for a {d}-D field"
        )));
    }
    let mut csv = String::from("coord");
    for a in 0..d {
        csv.push_str(&format!(",v{a}"));
    }
    csv.push('\n');
    let h = grid.box_len() / grid.n() as f64;
    let mut idx = through;
    for i in 0..grid.n() {
        idx[axis] = i;
        let flat = grid.flat(idx[0], idx[1], idx[2]);
        csv.push_str(&format!("{:.17e}", i as f64 * h));
        for a in 0..d {
            csv.push_str(&format!(",{:.17e}", v.comp(a)[flat]));
        }
        csv.push('\n');
    }
    fs::write(path, csv)?;
    Ok(())
}
