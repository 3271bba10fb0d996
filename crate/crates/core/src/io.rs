//! Field serialization: a compact binary container and legacy VTK text.
//!
//! Container layout, all integers and floats little-endian:
//!
//! ```text
//! magic       8 bytes  "TPMSFLD1"
//! axis order  u8       0 = x fastest (n = i + Nx (j + Ny k))
//! field count u32
//! dims        3 × u64
//! extents     3 × f64
//! origin      3 × f64
//! per field:  u32 name length, UTF-8 name, Nx·Ny·Nz × f64
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};

pub const MAGIC: &[u8; 8] = b"TPMSFLD1";
pub const AXIS_ORDER_X_FASTEST: u8 = 0;

/// Named fields sharing one grid.
pub type NamedFields = Vec<(String, ScalarField)>;

pub fn write_fields<W: Write>(fields: &[(&str, &ScalarField)], mut out: W) -> Result<()> {
    let Some((_, first)) = fields.first() else {
        return Err(Error::param("fields", "at least one field is required"));
    };
    let grid = first.grid();
    for (name, f) in fields {
        f.grid().ensure_same(grid, name)?;
    }
    out.write_all(MAGIC)?;
    out.write_all(&[AXIS_ORDER_X_FASTEST])?;
    out.write_all(&(fields.len() as u32).to_le_bytes())?;
    for d in grid.dims() {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in grid.extents().iter().chain(grid.origin().iter()) {
        out.write_all(&v.to_le_bytes())?;
    }
    for (name, f) in fields {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        let mut buf = Vec::with_capacity(8 * f.values().len());
        for v in f.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::format("field container", format!("truncated: {e}")))?;
    Ok(b)
}

pub fn read_fields<R: Read>(mut r: R) -> Result<(GridSpec, NamedFields)> {
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(Error::format("field container", "bad magic bytes"));
    }
    let order = read_array::<1, _>(&mut r)?[0];
    if order != AXIS_ORDER_X_FASTEST {
        return Err(Error::format(
            "field container",
            format!("unsupported axis order {order}"),
        ));
    }
    let count = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = usize::try_from(u64::from_le_bytes(read_array(&mut r)?))
            .map_err(|_| Error::format("field container", "dimension overflows usize"))?;
    }
    let mut reals = [0.0; 6];
    for v in &mut reals {
        *v = f64::from_le_bytes(read_array(&mut r)?);
    }
    let grid = GridSpec::new(dims, [reals[0], reals[1], reals[2]])?
        .with_origin([reals[3], reals[4], reals[5]])?;
    let mut fields = Vec::with_capacity(count);
    for _ in 0..count {
        let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|e| Error::format("field container", format!("truncated name: {e}")))?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::format("field container", "field name is not UTF-8"))?;
        let mut raw = vec![0u8; 8 * grid.len()];
        r.read_exact(&mut raw)
            .map_err(|e| Error::format("field container", format!("truncated values: {e}")))?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        fields.push((name, ScalarField::new(grid.clone(), values)?));
    }
    Ok((grid, fields))
}

/// Legacy VTK structured points with one scalar array per field. Points sit
/// at the cell centers.
pub fn write_vtk<W: Write>(fields: &[(&str, &ScalarField)], mut out: W) -> Result<()> {
    let Some((_, first)) = fields.first() else {
        return Err(Error::param("fields", "at least one field is required"));
    };
    let grid = first.grid();
    for (name, f) in fields {
        f.grid().ensure_same(grid, name)?;
    }
    let (d, h, o) = (grid.dims(), grid.spacing(), grid.origin());
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "tpms-dehom fields")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {} {} {}", d[0], d[1], d[2])?;
    writeln!(
        out,
        "ORIGIN {:.17e} {:.17e} {:.17e}",
        o[0] + 0.5 * h[0],
        o[1] + 0.5 * h[1],
        o[2] + 0.5 * h[2]
    )?;
    writeln!(out, "SPACING {:.17e} {:.17e} {:.17e}", h[0], h[1], h[2])?;
    writeln!(out, "POINT_DATA {}", grid.len())?;
    for (name, f) in fields {
        let clean: String = name
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        writeln!(out, "SCALARS {clean} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in f.values() {
            writeln!(out, "{v:.17e}")?;
        }
    }
    Ok(())
}
