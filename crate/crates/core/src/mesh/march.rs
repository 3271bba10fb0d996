//! Blockwise marching cubes on the zero level of a sampled field.
//!
//! The grid is surrounded by one layer of virtual samples with value `−∞`,
//! so the solid `G ≥ 0` is closed off where it meets the sampled box. Cells
//! are indexed in this padded frame: cell `c` spans padded samples `c` and
//! `c + 1`, and padded sample `q` is grid sample `q − 1`. Every vertex is
//! computed from its edge's two samples in a fixed order, so blocks that
//! share an interface produce bit-identical seam vertices.

use std::collections::HashMap;
use std::ops::Range;

use rayon::prelude::*;

use super::tables::{case_table, corner_offset, edge_endpoints};
use super::{stitch, SurfaceMesh};
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// An axis-aligned range of padded cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub id: u32,
    pub cells: [Range<usize>; 3],
}

/// Partition of the padded cells `0..=N` of each axis into blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    dims: [usize; 3],
    cuts: [Vec<usize>; 3],
}

impl BlockLayout {
    pub fn single(dims: [usize; 3]) -> Self {
        BlockLayout {
            dims,
            cuts: dims.map(|n| vec![0, n + 1]),
        }
    }

    /// `counts[a]` nearly equal blocks along each axis.
    pub fn split(dims: [usize; 3], counts: [usize; 3]) -> Result<Self> {
        let mut cuts: [Vec<usize>; 3] = Default::default();
        for a in 0..3 {
            let cells = dims[a] + 1;
            if counts[a] == 0 || counts[a] > cells {
                return Err(Error::param(
                    "blocks",
                    format!(
                        "axis {a} has {cells} cells, cannot split into {}",
                        counts[a]
                    ),
                ));
            }
            cuts[a] = (0..=counts[a]).map(|k| k * cells / counts[a]).collect();
        }
        Ok(BlockLayout { dims, cuts })
    }

    /// Blocks of `size` grid cells per axis, aligned to the grid samples, so
    /// that each block holds the fine cells of one coarse cell.
    pub fn by_size(dims: [usize; 3], size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::param("block size", "must be >= 1"));
        }
        let cuts = dims.map(|n| {
            let mut c: Vec<usize> = (0..=n).step_by(size).collect();
            if *c.last().unwrap_or(&0) != n + 1 {
                c.push(n + 1);
            }
            c
        });
        Ok(BlockLayout { dims, cuts })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn blocks(&self) -> Vec<Block> {
        let mut out = Vec::new();
        let [cx, cy, cz] = &self.cuts;
        for k in 0..cz.len() - 1 {
            for j in 0..cy.len() - 1 {
                for i in 0..cx.len() - 1 {
                    out.push(Block {
                        id: out.len() as u32,
                        cells: [cx[i]..cx[i + 1], cy[j]..cy[j + 1], cz[k]..cz[k + 1]],
                    });
                }
            }
        }
        out
    }
}

struct Padded<'a> {
    field: &'a ScalarField,
    dims: [usize; 3],
}

impl Padded<'_> {
    #[inline]
    fn value(&self, q: [usize; 3]) -> f64 {
        if (0..3).any(|a| q[a] == 0 || q[a] > self.dims[a]) {
            f64::NEG_INFINITY
        } else {
            self.field.get(q[0] - 1, q[1] - 1, q[2] - 1)
        }
    }

    #[inline]
    fn position(&self, q: [usize; 3]) -> [f64; 3] {
        let g = self.field.grid();
        let (o, h) = (g.origin(), g.spacing());
        std::array::from_fn(|a| o[a] + (q[a] as f64 - 0.5) * h[a])
    }

    /// Zero crossing on the edge from padded sample `q` along `axis`.
    fn crossing(&self, q: [usize; 3], axis: usize) -> [f64; 3] {
        let mut r = q;
        r[axis] += 1;
        let (ga, gb) = (self.value(q), self.value(r));
        if ga == f64::NEG_INFINITY {
            return self.position(r);
        }
        if gb == f64::NEG_INFINITY {
            return self.position(q);
        }
        let (pa, pb) = (self.position(q), self.position(r));
        let t = ga / (ga - gb);
        let mut p = pa;
        p[axis] = pa[axis] + t * (pb[axis] - pa[axis]);
        p
    }
}

/// Extract the surface `G = 0` inside one block; vertices are shared within
/// the block but not welded.
pub fn marching_cubes_block(g: &ScalarField, block: &Block) -> Result<SurfaceMesh> {
    let dims = g.grid().dims();
    if (0..3).any(|a| block.cells[a].end > dims[a] + 1 || block.cells[a].is_empty()) {
        return Err(Error::param(
            "block",
            format!("{:?} outside padded cells of {dims:?}", block.cells),
        ));
    }
    crate::field::check_finite(g.values())?;
    let pad = Padded { field: g, dims };
    let table = case_table();
    let stride = [1, dims[0] + 2, (dims[0] + 2) * (dims[1] + 2)];
    let mut index: HashMap<(usize, u8), u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for k in block.cells[2].clone() {
        for j in block.cells[1].clone() {
            for i in block.cells[0].clone() {
                let cell = [i, j, k];
                let mut case = 0usize;
                for c in 0..8 {
                    let o = corner_offset(c);
                    if pad.value([i + o[0], j + o[1], k + o[2]]) >= 0.0 {
                        case |= 1 << c;
                    }
                }
                for tri in &table[case] {
                    let t = tri.map(|e| {
                        let (axis, c) = edge_endpoints(e as usize);
                        let o = corner_offset(c);
                        let q: [usize; 3] = std::array::from_fn(|a| cell[a] + o[a]);
                        let key = (
                            q[0] * stride[0] + q[1] * stride[1] + q[2] * stride[2],
                            axis as u8,
                        );
                        *index.entry(key).or_insert_with(|| {
                            vertices.push(pad.crossing(q, axis));
                            (vertices.len() - 1) as u32
                        })
                    });
                    triangles.push(t);
                }
            }
        }
    }
    Ok(SurfaceMesh::new(vertices, triangles)?.with_block_id(block.id))
}

/// Extract every block in parallel and stitch the result.
pub fn extract_surface(g: &ScalarField, layout: &BlockLayout) -> Result<SurfaceMesh> {
    if layout.dims() != g.grid().dims() {
        return Err(Error::GridMismatch(format!(
            "block layout for {:?} applied to field of {:?}",
            layout.dims(),
            g.grid().dims()
        )));
    }
    let meshes = layout
        .blocks()
        .par_iter()
        .map(|b| marching_cubes_block(g, b))
        .collect::<Result<Vec<_>>>()?;
    stitch(&meshes)
}
