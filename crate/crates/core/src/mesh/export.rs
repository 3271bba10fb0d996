//! STL (binary and ASCII) and OBJ serialization.

use std::io::Write;

use super::{SurfaceMesh, WELD_RELATIVE_TOLERANCE};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeshFormat {
    StlBinary,
    StlAscii,
    Obj,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MeshFormat::StlBinary | MeshFormat::StlAscii => "stl",
            MeshFormat::Obj => "obj",
        }
    }
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stl" | "stl-binary" | "stl_binary" => Ok(MeshFormat::StlBinary),
            "stl-ascii" | "stl_ascii" => Ok(MeshFormat::StlAscii),
            "obj" => Ok(MeshFormat::Obj),
            _ => Err(Error::param("format", format!("unknown mesh format `{s}`"))),
        }
    }
}

const STL_HEADER: &[u8; 80] =
    b"binary STL written by tpms-dehom                                                ";

pub fn write_stl_binary<W: Write>(mesh: &SurfaceMesh, mut out: W) -> Result<()> {
    let count = u32::try_from(mesh.triangles().len())
        .map_err(|_| Error::format("stl", "more than u32::MAX triangles"))?;
    out.write_all(STL_HEADER)?;
    out.write_all(&count.to_le_bytes())?;
    let mut record = [0u8; 50];
    for t in 0..mesh.triangles().len() {
        let n = mesh.triangle_normal(t);
        let vs = mesh.corners(t);
        let floats = n.iter().chain(vs.iter().flatten());
        for (slot, v) in record.chunks_exact_mut(4).zip(floats) {
            slot.copy_from_slice(&(*v as f32).to_le_bytes());
        }
        out.write_all(&record)?;
    }
    Ok(())
}

pub fn write_stl_ascii<W: Write>(mesh: &SurfaceMesh, mut out: W) -> Result<()> {
    writeln!(out, "solid tpms")?;
    for t in 0..mesh.triangles().len() {
        let n = mesh.triangle_normal(t);
        writeln!(out, "  facet normal {:.9e} {:.9e} {:.9e}", n[0], n[1], n[2])?;
        writeln!(out, "    outer loop")?;
        for v in mesh.corners(t) {
            writeln!(out, "      vertex {:.9e} {:.9e} {:.9e}", v[0], v[1], v[2])?;
        }
        writeln!(out, "    endloop")?;
        writeln!(out, "  endfacet")?;
    }
    writeln!(out, "endsolid tpms")?;
    Ok(())
}

pub fn write_obj<W: Write>(mesh: &SurfaceMesh, mut out: W) -> Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {:.9e} {:.9e} {:.9e}", v[0], v[1], v[2])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn write_mesh<W: Write>(mesh: &SurfaceMesh, format: MeshFormat, out: W) -> Result<()> {
    match format {
        MeshFormat::StlBinary => write_stl_binary(mesh, out),
        MeshFormat::StlAscii => write_stl_ascii(mesh, out),
        MeshFormat::Obj => write_obj(mesh, out),
    }
}

pub fn export_mesh(mesh: &SurfaceMesh, format: MeshFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    write_mesh(mesh, format, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

fn soup_to_mesh(corners: Vec<[f64; 3]>) -> Result<SurfaceMesh> {
    let n = corners.len() as u32;
    let triangles = (0..n / 3).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect();
    let soup = SurfaceMesh::new(corners, triangles)?;
    let extent = soup.bounding_box().map_or(0.0, |(lo, hi)| {
        (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max)
    });
    Ok(soup.weld(WELD_RELATIVE_TOLERANCE * extent))
}

fn read_stl_binary(bytes: &[u8]) -> Result<SurfaceMesh> {
    let count = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
    let mut corners = Vec::with_capacity(3 * count);
    for rec in bytes[84..].chunks_exact(50) {
        let f = |k: usize| {
            f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().expect("4 bytes")) as f64
        };
        for v in 0..3 {
            corners.push([f(3 + 3 * v), f(4 + 3 * v), f(5 + 3 * v)]);
        }
    }
    soup_to_mesh(corners)
}

fn read_stl_ascii(text: &str) -> Result<SurfaceMesh> {
    let mut corners = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let mut words = line.split_whitespace();
        if words.next() != Some("vertex") {
            continue;
        }
        let coords: Vec<f64> = words
            .map(|w| w.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format("stl", format!("line {}: {e}", line_no + 1)))?;
        let v: [f64; 3] = coords.try_into().map_err(|_| {
            Error::format(
                "stl",
                format!("line {}: expected 3 coordinates", line_no + 1),
            )
        })?;
        corners.push(v);
    }
    if corners.len() % 3 != 0 {
        return Err(Error::format("stl", "vertex count is not a multiple of 3"));
    }
    soup_to_mesh(corners)
}

/// Parse binary or ASCII STL and weld the triangle soup into an indexed mesh.
pub fn read_stl(bytes: &[u8]) -> Result<SurfaceMesh> {
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as u64;
        if bytes.len() as u64 == 84 + 50 * count {
            return read_stl_binary(bytes);
        }
    }
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::format("stl", "neither a valid binary nor an ASCII file"))?;
    if !text.trim_start().starts_with("solid") {
        return Err(Error::format("stl", "ASCII file must start with `solid`"));
    }
    read_stl_ascii(text)
}
