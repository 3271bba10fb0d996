//! Indexed triangle meshes: blockwise marching cubes, stitching, export and
//! nearest-triangle queries.

pub mod distance;
pub mod export;
pub mod march;
pub(crate) mod tables;

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};

pub use export::{export_mesh, read_stl, MeshFormat};
pub use march::{extract_surface, marching_cubes_block, Block, BlockLayout};

/// Triangles whose area falls below this are collapsed by [`stitch`].
pub const DEGENERATE_AREA: f64 = 1e-14;

/// Weld tolerance relative to the largest bounding-box extent.
pub const WELD_RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[u32; 3]>,
    /// Block of origin per vertex, present on unstitched block meshes.
    block_ids: Option<Vec<u32>>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::format("mesh", "non-finite vertex coordinate"));
        }
        if u32::try_from(vertices.len()).is_err() {
            return Err(Error::format("mesh", "more than u32::MAX vertices"));
        }
        let n = vertices.len() as u32;
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::format(
                "mesh",
                format!("triangle {t:?} references a vertex beyond {n}"),
            ));
        }
        Ok(SurfaceMesh {
            vertices,
            triangles,
            block_ids: None,
        })
    }

    pub(crate) fn with_block_id(mut self, id: u32) -> Self {
        self.block_ids = Some(vec![id; self.vertices.len()]);
        self
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn block_ids(&self) -> Option<&[u32]> {
        self.block_ids.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [[f64; 3]; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    /// Right-handed unit normal of triangle `t`, zero if degenerate.
    pub fn triangle_normal(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.corners(t);
        let n = cross(sub(b, a), sub(c, a));
        let l = norm(n);
        if l > 0.0 {
            n.map(|v| v / l)
        } else {
            [0.0; 3]
        }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Signed enclosed volume by the divergence theorem; positive for a
    /// closed surface whose normals point outward.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    /// `V − E + F` over referenced vertices and undirected edges.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        let mut edges = std::collections::HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                used[a as usize] = true;
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - edges.len() as i64 + self.triangles.len() as i64
    }

    /// Axis-aligned bounds, `None` for a mesh without vertices.
    pub fn bounding_box(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (
                [lo[0].min(v[0]), lo[1].min(v[1]), lo[2].min(v[2])],
                [hi[0].max(v[0]), hi[1].max(v[1]), hi[2].max(v[2])],
            )
        }))
    }

    /// Number of directed edges `a→b` without a matching `b→a`. Zero for a
    /// closed, consistently oriented surface.
    pub fn unmatched_edges(&self) -> usize {
        let mut balance: HashMap<(u32, u32), i64> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a < b {
                    *balance.entry((a, b)).or_default() += 1;
                } else {
                    *balance.entry((b, a)).or_default() -= 1;
                }
            }
        }
        balance.values().map(|v| v.unsigned_abs() as usize).sum()
    }

    /// Merge vertices closer than `tolerance`, keeping the first occurrence,
    /// collapse near-zero-area triangles and drop unreferenced vertices.
    pub fn weld(&self, tolerance: f64) -> SurfaceMesh {
        let cell = if tolerance > 0.0 {
            tolerance
        } else {
            f64::MIN_POSITIVE
        };
        let key = |p: [f64; 3]| p.map(|v| (v / cell).floor() as i64);
        let mut buckets: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        let mut merged: Vec<[f64; 3]> = Vec::new();
        let remap: Vec<u32> = self
            .vertices
            .iter()
            .map(|&p| {
                let k = key(p);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            if let Some(list) = buckets.get(&[
                                k[0].saturating_add(dx),
                                k[1].saturating_add(dy),
                                k[2].saturating_add(dz),
                            ]) {
                                for &i in list {
                                    let q = merged[i as usize];
                                    if (0..3).all(|a| (p[a] - q[a]).abs() <= tolerance) {
                                        return i;
                                    }
                                }
                            }
                        }
                    }
                }
                let i = merged.len() as u32;
                merged.push(p);
                buckets.entry(k).or_default().push(i);
                i
            })
            .collect();
        let triangles: Vec<[u32; 3]> = self
            .triangles
            .iter()
            .map(|t| t.map(|i| remap[i as usize]))
            .filter(|t| !index_degenerate(t))
            .collect();
        let mut mesh = SurfaceMesh {
            vertices: merged,
            triangles,
            block_ids: None,
        };
        mesh.collapse_small_triangles();
        mesh.compact()
    }

    /// Collapse the shortest edge of every triangle with area below
    /// [`DEGENERATE_AREA`] until none is left. Dropping such a triangle would
    /// open a hole; collapsing keeps every edge paired. The surviving vertex
    /// is the lexicographically smaller one, so the result depends on the
    /// geometry only.
    fn collapse_small_triangles(&mut self) {
        let lex = |a: &[f64; 3], b: &[f64; 3]| {
            a[0].total_cmp(&b[0])
                .then(a[1].total_cmp(&b[1]))
                .then(a[2].total_cmp(&b[2]))
        };
        loop {
            let mut parent: Vec<u32> = (0..self.vertices.len() as u32).collect();
            fn root(parent: &mut [u32], mut i: u32) -> u32 {
                while parent[i as usize] != i {
                    let up = parent[parent[i as usize] as usize];
                    parent[i as usize] = up;
                    i = up;
                }
                i
            }
            let mut collapsed = false;
            for t in 0..self.triangles.len() {
                if self.triangle_area(t) >= DEGENERATE_AREA {
                    continue;
                }
                let tri = self.triangles[t];
                let [a, b] = (0..3)
                    .map(|k| {
                        let (p, q) = (tri[k], tri[(k + 1) % 3]);
                        if lex(&self.vertices[p as usize], &self.vertices[q as usize]).is_le() {
                            [p, q]
                        } else {
                            [q, p]
                        }
                    })
                    .min_by(|e, f| {
                        let len = |e: &[u32; 2]| {
                            let (p, q) =
                                (self.vertices[e[0] as usize], self.vertices[e[1] as usize]);
                            (0..3).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>()
                        };
                        len(e)
                            .total_cmp(&len(f))
                            .then_with(|| {
                                lex(&self.vertices[e[0] as usize], &self.vertices[f[0] as usize])
                            })
                            .then_with(|| {
                                lex(&self.vertices[e[1] as usize], &self.vertices[f[1] as usize])
                            })
                    })
                    .expect("three edges");
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                if ra != rb {
                    let (keep, drop) =
                        if lex(&self.vertices[ra as usize], &self.vertices[rb as usize]).is_le() {
                            (ra, rb)
                        } else {
                            (rb, ra)
                        };
                    parent[drop as usize] = keep;
                    collapsed = true;
                }
            }
            if !collapsed {
                return;
            }
            let reps: Vec<u32> = (0..parent.len() as u32)
                .map(|i| root(&mut parent, i))
                .collect();
            self.triangles = self
                .triangles
                .iter()
                .map(|t| t.map(|i| reps[i as usize]))
                .filter(|t| !index_degenerate(t))
                .collect();
        }
    }

    /// Drop vertices that no triangle references, preserving order.
    fn compact(self) -> SurfaceMesh {
        let mut new_index = vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for t in &self.triangles {
            for &i in t {
                if new_index[i as usize] == u32::MAX {
                    new_index[i as usize] = vertices.len() as u32;
                    vertices.push(self.vertices[i as usize]);
                }
            }
        }
        let triangles = self
            .triangles
            .iter()
            .map(|t| t.map(|i| new_index[i as usize]))
            .collect();
        SurfaceMesh {
            vertices,
            triangles,
            block_ids: None,
        }
    }

    /// Vertices sorted lexicographically, each triangle rotated to start at
    /// its smallest index, triangles sorted. Orientation is preserved.
    pub fn canonical(&self) -> SurfaceMesh {
        let mut order: Vec<u32> = (0..self.vertices.len() as u32).collect();
        let cmp = |a: &[f64; 3], b: &[f64; 3]| {
            a[0].total_cmp(&b[0])
                .then(a[1].total_cmp(&b[1]))
                .then(a[2].total_cmp(&b[2]))
        };
        order.sort_by(|&a, &b| cmp(&self.vertices[a as usize], &self.vertices[b as usize]));
        let mut rank = vec![0u32; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i as usize] = r as u32;
        }
        let vertices = order.iter().map(|&i| self.vertices[i as usize]).collect();
        let mut triangles: Vec<[u32; 3]> = self
            .triangles
            .iter()
            .map(|t| {
                let r = t.map(|i| rank[i as usize]);
                let m = (0..3).min_by_key(|&k| r[k]).unwrap_or(0);
                [r[m], r[(m + 1) % 3], r[(m + 2) % 3]]
            })
            .collect();
        triangles.sort_unstable();
        SurfaceMesh {
            vertices,
            triangles,
            block_ids: None,
        }
    }

    /// Hash of the canonical geometry; equal for meshes that differ only in
    /// vertex and triangle ordering.
    pub fn geometry_hash(&self) -> u64 {
        let c = self.canonical();
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for v in &c.vertices {
            for x in v {
                x.to_bits().hash(&mut h);
            }
        }
        c.triangles.hash(&mut h);
        h.finish()
    }
}

fn index_degenerate(t: &[u32; 3]) -> bool {
    t[0] == t[1] || t[1] == t[2] || t[0] == t[2]
}

/// Concatenate block meshes, weld coincident vertices and verify the seams.
///
/// Fails with [`Error::SeamDefect`] if more than `max_unmatched` directed
/// edges are left without a partner after welding.
pub fn stitch_with_threshold(blocks: &[SurfaceMesh], max_unmatched: usize) -> Result<SurfaceMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for b in blocks {
        let base = u32::try_from(vertices.len())
            .map_err(|_| Error::format("mesh", "more than u32::MAX vertices"))?;
        vertices.extend_from_slice(&b.vertices);
        triangles.extend(b.triangles.iter().map(|t| t.map(|i| i + base)));
    }
    let soup = SurfaceMesh::new(vertices, triangles)?;
    let extent = soup.bounding_box().map_or(0.0, |(lo, hi)| {
        (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max)
    });
    let welded = soup.weld(WELD_RELATIVE_TOLERANCE * extent);
    let unmatched = welded.unmatched_edges();
    if unmatched > max_unmatched {
        return Err(Error::SeamDefect {
            unmatched,
            threshold: max_unmatched,
        });
    }
    Ok(welded)
}

/// [`stitch_with_threshold`] requiring a watertight result.
pub fn stitch(blocks: &[SurfaceMesh]) -> Result<SurfaceMesh> {
    stitch_with_threshold(blocks, 0)
}
