//! Independent reference implementations used by the integration suites.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;
use tpms_dehom::{GridSpec, ScalarField};

/// Direct `O(N²)` orthonormal DCT-II along every axis.
pub fn direct_dct(grid: &GridSpec, x: &[f64]) -> Vec<f64> {
    let d = grid.dims();
    let mut out = vec![0.0; x.len()];
    for l in 0..d[0] {
        for m in 0..d[1] {
            for n in 0..d[2] {
                let mut acc = 0.0;
                for k in 0..d[2] {
                    for j in 0..d[1] {
                        for i in 0..d[0] {
                            acc += x[grid.index(i, j, k)]
                                * basis(d[0], l, i)
                                * basis(d[1], m, j)
                                * basis(d[2], n, k);
                        }
                    }
                }
                out[grid.index(l, m, n)] = acc;
            }
        }
    }
    out
}

/// Direct inverse (DCT-III with the same normalization).
pub fn direct_idct(grid: &GridSpec, c: &[f64]) -> Vec<f64> {
    let d = grid.dims();
    let mut out = vec![0.0; c.len()];
    for i in 0..d[0] {
        for j in 0..d[1] {
            for k in 0..d[2] {
                let mut acc = 0.0;
                for n in 0..d[2] {
                    for m in 0..d[1] {
                        for l in 0..d[0] {
                            acc += c[grid.index(l, m, n)]
                                * basis(d[0], l, i)
                                * basis(d[1], m, j)
                                * basis(d[2], n, k);
                        }
                    }
                }
                out[grid.index(i, j, k)] = acc;
            }
        }
    }
    out
}

fn basis(n: usize, l: usize, i: usize) -> f64 {
    let beta = if l == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    };
    beta * (PI * l as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n as f64)).cos()
}

/// Dense reflective 7-point Laplacian.
pub fn dense_laplacian(grid: &GridSpec) -> DMatrix<f64> {
    let n = grid.len();
    let d = grid.dims();
    let h = grid.spacing();
    let mut a = DMatrix::zeros(n, n);
    for row in 0..n {
        let idx = grid.unravel(row);
        for ax in 0..3 {
            let w = 1.0 / (h[ax] * h[ax]);
            for step in [-1i64, 1] {
                let q = idx[ax] as i64 + step;
                if q < 0 || q >= d[ax] as i64 {
                    continue;
                }
                let mut nb = idx;
                nb[ax] = q as usize;
                let col = grid.index(nb[0], nb[1], nb[2]);
                a[(row, col)] += w;
                a[(row, row)] -= w;
            }
        }
    }
    a
}

/// LU factorization of the Laplacian with its first row replaced by the
/// zero-mean constraint.
pub struct DenseNeumann {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseNeumann {
    pub fn new(grid: &GridSpec) -> Self {
        let mut a = dense_laplacian(grid);
        a.row_mut(0).fill(1.0);
        DenseNeumann { lu: a.lu() }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = DVector::from_column_slice(b);
        rhs[0] = 0.0;
        self.lu
            .solve(&rhs)
            .expect("nonsingular")
            .as_slice()
            .to_vec()
    }
}

/// Explicit least squares over interior faces: minimize
/// `Σ ((φ[i+e] − φ[i]) / h − ω_face)²` along `axis` (and `Σ ((φ[i+e] − φ[i]) / h)²`
/// across the other axes) via the normal equations, pinned to zero mean.
pub fn normal_equations_phase(omega: &ScalarField, axis: usize) -> Vec<f64> {
    let grid = omega.grid();
    let n = grid.len();
    let d = grid.dims();
    let h = grid.spacing();
    let mut rows: Vec<(usize, usize, f64, f64)> = Vec::new();
    for cell in 0..n {
        let idx = grid.unravel(cell);
        for ax in 0..3 {
            if idx[ax] + 1 < d[ax] {
                let mut nb = idx;
                nb[ax] += 1;
                let other = grid.index(nb[0], nb[1], nb[2]);
                let t = if ax == axis {
                    0.5 * (omega.values()[cell] + omega.values()[other])
                } else {
                    0.0
                };
                rows.push((cell, other, 1.0 / h[ax], t));
            }
        }
    }
    let mut dtd = DMatrix::<f64>::zeros(n, n);
    let mut dtt = DVector::<f64>::zeros(n);
    for &(lo, hi, w, t) in &rows {
        dtd[(lo, lo)] += w * w;
        dtd[(hi, hi)] += w * w;
        dtd[(lo, hi)] -= w * w;
        dtd[(hi, lo)] -= w * w;
        dtt[hi] += w * t;
        dtt[lo] -= w * t;
    }
    // Adding 1·1ᵀ fixes the free constant; the right-hand side is orthogonal to 1.
    dtd.add_scalar_mut(1.0);
    dtd.cholesky()
        .expect("positive definite")
        .solve(&dtt)
        .as_slice()
        .to_vec()
}

pub fn random_values(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Smooth positive size field in `[p_min, p_max]` from a few random cosines.
pub fn random_smooth_size(
    rng: &mut StdRng,
    grid: &GridSpec,
    p_min: f64,
    p_max: f64,
) -> ScalarField {
    let e = grid.extents();
    let modes: Vec<([f64; 3], [f64; 3], f64)> = (0..4)
        .map(|_| {
            let k = [0, 1, 2].map(|_| rng.gen_range(0..3) as f64);
            let phase = [0, 1, 2].map(|_| rng.gen_range(0.0..2.0 * PI));
            (k, phase, rng.gen_range(-1.0..1.0))
        })
        .collect();
    let raw = ScalarField::from_fn(grid.clone(), |p| {
        modes
            .iter()
            .map(|(k, ph, a)| {
                a * (0..3)
                    .map(|s| (PI * k[s] * p[s] / e[s] + ph[s]).cos())
                    .product::<f64>()
            })
            .sum()
    })
    .unwrap();
    let (lo, hi) = (raw.min(), raw.max());
    let span = if hi > lo { hi - lo } else { 1.0 };
    raw.map(|v| p_min + (p_max - p_min) * (v - lo) / span)
        .unwrap()
}
