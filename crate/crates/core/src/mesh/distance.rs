//! Exact point-to-triangle distances with a bounding-volume hierarchy.

use super::SurfaceMesh;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 4;

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn along(a: [f64; 3], d: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]]
}

/// Closest point to `p` on triangle `(a, b, c)`, by Voronoi-region tests.
pub fn closest_point_on_triangle(p: [f64; 3], a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return along(a, ab, d1 / (d1 - d3));
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return along(a, ac, d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return along(b, sub(c, b), (d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ]
}

pub fn point_triangle_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let q = closest_point_on_triangle(p, a, b, c);
    dot(sub(p, q), sub(p, q)).sqrt()
}

/// Distance from `p` to the nearest triangle by scanning all of them.
pub fn brute_force_distance(mesh: &SurfaceMesh, p: [f64; 3]) -> f64 {
    (0..mesh.triangles().len())
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            point_triangle_distance(p, a, b, c)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug)]
struct Aabb {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            lo: [f64::INFINITY; 3],
            hi: [f64::NEG_INFINITY; 3],
        }
    }

    fn grow(&mut self, p: [f64; 3]) {
        for a in 0..3 {
            self.lo[a] = self.lo[a].min(p[a]);
            self.hi[a] = self.hi[a].max(p[a]);
        }
    }

    fn distance_sq(&self, p: [f64; 3]) -> f64 {
        (0..3)
            .map(|a| {
                let d = (self.lo[a] - p[a]).max(0.0).max(p[a] - self.hi[a]);
                d * d
            })
            .sum()
    }
}

#[derive(Debug)]
enum Node {
    Leaf {
        bounds: Aabb,
        first: usize,
        count: usize,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Median-split AABB tree over the triangles of a mesh.
#[derive(Debug)]
pub struct TriangleBvh {
    triangles: Vec<[[f64; 3]; 3]>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(mesh: &SurfaceMesh) -> Result<Self> {
        if mesh.triangles().is_empty() {
            return Err(Error::EmptyMesh(
                "cannot build a distance tree without triangles",
            ));
        }
        let mut triangles: Vec<[[f64; 3]; 3]> = (0..mesh.triangles().len())
            .map(|t| mesh.corners(t))
            .collect();
        let mut nodes = Vec::new();
        let len = triangles.len();
        build(&mut triangles, 0, len, &mut nodes);
        Ok(TriangleBvh { triangles, nodes })
    }

    pub fn distance(&self, p: [f64; 3]) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds().distance_sq(p) >= best * best {
                continue;
            }
            match *node {
                Node::Leaf { first, count, .. } => {
                    for [a, b, c] in &self.triangles[first..first + count] {
                        best = best.min(point_triangle_distance(p, *a, *b, *c));
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_sq(p);
                    let dr = self.nodes[right].bounds().distance_sq(p);
                    // Visit the nearer child first.
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }
}

fn build(tris: &mut [[[f64; 3]; 3]], first: usize, count: usize, nodes: &mut Vec<Node>) -> usize {
    let slice = &mut tris[first..first + count];
    let mut bounds = Aabb::empty();
    let mut centroids = Aabb::empty();
    for t in slice.iter() {
        t.iter().for_each(|&v| bounds.grow(v));
        centroids.grow(centroid(t));
    }
    let id = nodes.len();
    if count <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            bounds,
            first,
            count,
        });
        return id;
    }
    let axis = (0..3)
        .max_by(|&a, &b| {
            (centroids.hi[a] - centroids.lo[a]).total_cmp(&(centroids.hi[b] - centroids.lo[b]))
        })
        .unwrap_or(0);
    let mid = count / 2;
    slice.select_nth_unstable_by(mid, |x, y| centroid(x)[axis].total_cmp(&centroid(y)[axis]));
    nodes.push(Node::Leaf {
        bounds,
        first,
        count: 0,
    });
    let left = build(tris, first, mid, nodes);
    let right = build(tris, first + mid, count - mid, nodes);
    nodes[id] = Node::Inner {
        bounds,
        left,
        right,
    };
    id
}

fn centroid(t: &[[f64; 3]; 3]) -> [f64; 3] {
    std::array::from_fn(|a| (t[0][a] + t[1][a] + t[2][a]) / 3.0)
}
