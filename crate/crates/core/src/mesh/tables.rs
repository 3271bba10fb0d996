//! Marching-cubes case table, generated from the cube's face structure.
//!
//! Corner `c` sits at offset `(c & 1, (c >> 1) & 1, (c >> 2) & 1)` and bit `c`
//! of the case index marks it solid. Edge `4a + t` runs along axis `a` from
//! the corner whose remaining two coordinates are `(t & 1, t >> 1)`.
//!
//! On every face the sign changes are joined by segments that keep the solid
//! corners to their left as seen from outside the cube. A face with four
//! crossings is split so that each solid corner is cut off on its own, which
//! makes neighbouring cubes agree on the shared face. The segments of a cube
//! close into loops, and each loop is fan-triangulated with the winding that
//! makes normals point out of the solid.

use std::sync::OnceLock;

pub(crate) type Case = Vec<[u8; 3]>;

fn other_axes(a: usize) -> (usize, usize) {
    match a {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

pub(crate) fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

fn corner_index(o: [usize; 3]) -> usize {
    o[0] | (o[1] << 1) | (o[2] << 2)
}

/// Axis and lower corner of edge `e`.
pub(crate) fn edge_endpoints(e: usize) -> (usize, usize) {
    let a = e / 4;
    let t = e % 4;
    let (u, v) = other_axes(a);
    let mut o = [0; 3];
    o[u] = t & 1;
    o[v] = t >> 1;
    (a, corner_index(o))
}

/// Edge joining two corners that differ in exactly one coordinate.
fn edge_between(c0: usize, c1: usize) -> usize {
    let diff = c0 ^ c1;
    let a = diff.trailing_zeros() as usize;
    let lo = corner_offset(c0.min(c1));
    let (u, v) = other_axes(a);
    4 * a + lo[u] + 2 * lo[v]
}

fn edge_midpoint(e: usize) -> [f64; 3] {
    let (a, c) = edge_endpoints(e);
    let mut p = corner_offset(c).map(|x| x as f64);
    p[a] += 0.5;
    p
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

/// Order `(e1, e2)` so that `reference` lies left of the segment when viewed
/// along the outward `normal`.
fn oriented(e1: usize, e2: usize, reference: [f64; 3], normal: [f64; 3]) -> (usize, usize) {
    let (m1, m2) = (edge_midpoint(e1), edge_midpoint(e2));
    if dot(cross(normal, sub(m2, m1)), sub(reference, m1)) > 0.0 {
        (e1, e2)
    } else {
        (e2, e1)
    }
}

fn face_segments(case: usize) -> Vec<(usize, usize)> {
    let solid = |c: usize| case & (1 << c) != 0;
    let mut segments = Vec::new();
    for a in 0..3 {
        let (u, v) = other_axes(a);
        for side in 0..2 {
            let mut normal = [0.0; 3];
            normal[a] = if side == 0 { -1.0 } else { 1.0 };
            let corners: [usize; 4] = [(0, 0), (1, 0), (1, 1), (0, 1)].map(|(du, dv)| {
                let mut o = [0; 3];
                o[a] = side;
                o[u] = du;
                o[v] = dv;
                corner_index(o)
            });
            let crossings: Vec<usize> = (0..4)
                .filter(|&k| solid(corners[k]) != solid(corners[(k + 1) % 4]))
                .map(|k| edge_between(corners[k], corners[(k + 1) % 4]))
                .collect();
            let position = |c: usize| corner_offset(c).map(|x| x as f64);
            match crossings.len() {
                0 => {}
                2 => {
                    let inside: Vec<[f64; 3]> = corners
                        .iter()
                        .filter(|&&c| solid(c))
                        .map(|&c| position(c))
                        .collect();
                    let n = inside.len() as f64;
                    let centroid = inside.iter().fold([0.0; 3], |acc, p| {
                        [acc[0] + p[0] / n, acc[1] + p[1] / n, acc[2] + p[2] / n]
                    });
                    segments.push(oriented(crossings[0], crossings[1], centroid, normal));
                }
                4 => {
                    for k in 0..4 {
                        let c = corners[k];
                        if solid(c) {
                            let prev = edge_between(corners[(k + 3) % 4], c);
                            let next = edge_between(c, corners[(k + 1) % 4]);
                            segments.push(oriented(prev, next, position(c), normal));
                        }
                    }
                }
                _ => unreachable!("a quadrilateral has an even number of sign changes"),
            }
        }
    }
    segments
}

fn build_case(case: usize) -> Case {
    let segments = face_segments(case);
    let mut next = [usize::MAX; 12];
    for &(s, e) in &segments {
        debug_assert_eq!(next[s], usize::MAX, "edge {s} starts two segments");
        next[s] = e;
    }
    let mut visited = [false; 12];
    let mut triangles = Vec::new();
    for start in 0..12 {
        if next[start] == usize::MAX || visited[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut e = start;
        while !visited[e] {
            visited[e] = true;
            cycle.push(e as u8);
            e = next[e];
        }
        debug_assert_eq!(e, start, "segments do not close into a loop");
        cycle.reverse();
        for k in 1..cycle.len() - 1 {
            triangles.push([cycle[0], cycle[k], cycle[k + 1]]);
        }
    }
    triangles
}

/// Triangles (as edge triples) for each of the 256 cases.
pub(crate) fn case_table() -> &'static [Case; 256] {
    static TABLE: OnceLock<[Case; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(build_case))
}
