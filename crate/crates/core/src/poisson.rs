//! Spectral solver for the cell-centered Neumann Poisson problem.
//!
//! The 7-point Laplacian with reflective (half-sample) closure,
//!
//! ```text
//! (Δd φ)[i] = Σs (φ[i+es] − 2φ[i] + φ[i−es]) / hs²,  φ[−1] := φ[0], φ[N] := φ[N−1]
//! ```
//!
//! is diagonalized by the orthonormal DCT-II with eigenvalues `−λ(l,m,n)`,
//! `λ = Σs (2 − 2 cos(π q / Ns)) / hs²`. Dividing by the eigenvalues therefore
//! solves `Δd φ = b` exactly up to transform round-off.

use rayon::prelude::*;

use crate::dct::{dct3_forward, dct3_inverse};
use crate::error::{Error, Result};
use crate::field::{ordered_sum, GridSpec, ScalarField};

/// Relative size of the DC coefficient of `b` tolerated before the right-hand
/// side is rejected as incompatible.
pub const DEFAULT_COMPATIBILITY_TOLERANCE: f64 = 1e-8;

/// 1D eigenvalues `(2 − 2 cos(π q / N)) / h²` for `q = 0..N`.
pub fn axis_eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|q| (2.0 - 2.0 * (std::f64::consts::PI * q as f64 / n as f64).cos()) / (h * h))
        .collect()
}

/// Solve `Δd φ = b − mean(b)` and return the zero-mean solution.
pub fn neumann_poisson_solve(b: &ScalarField) -> Result<ScalarField> {
    neumann_poisson_solve_with_tolerance(b, DEFAULT_COMPATIBILITY_TOLERANCE)
}

/// As [`neumann_poisson_solve`] with an explicit compatibility tolerance:
/// the solve fails when `|b̂(0,0,0)| > tolerance · ‖b‖₂`.
pub fn neumann_poisson_solve_with_tolerance(
    b: &ScalarField,
    tolerance: f64,
) -> Result<ScalarField> {
    let grid = b.grid().clone();
    let mut spectrum = dct3_forward(b)?;
    let norm = ordered_sum(grid.len(), |n| b.values()[n].powi(2)).sqrt();
    if norm == 0.0 {
        return Ok(ScalarField::zeros(grid));
    }
    let dc = spectrum.dc();
    if dc.abs() > tolerance * norm {
        return Err(Error::Incompatible {
            dc: dc.abs(),
            norm,
            tolerance,
        });
    }

    let [nx, ny, nz] = grid.dims();
    let h = grid.spacing();
    let (lx, ly, lz) = (
        axis_eigenvalues(nx, h[0]),
        axis_eigenvalues(ny, h[1]),
        axis_eigenvalues(nz, h[2]),
    );
    spectrum
        .coefficients_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(idx, c)| {
            if idx == 0 {
                *c = 0.0;
                return;
            }
            let l = idx % nx;
            let r = idx / nx;
            let lambda = lx[l] + ly[r % ny] + lz[r / ny];
            *c = -*c / lambda;
        });
    Ok(dct3_inverse(&spectrum))
}

/// Apply the reflective 7-point Laplacian.
pub fn neumann_laplacian(phi: &ScalarField) -> ScalarField {
    let grid: &GridSpec = phi.grid();
    let dims = grid.dims();
    let strides = grid.strides();
    let h = grid.spacing();
    let v = phi.values();
    let out = (0..v.len())
        .into_par_iter()
        .map(|n| {
            let idx = grid.unravel(n);
            let mut acc = 0.0;
            for a in 0..3 {
                let lo = if idx[a] > 0 { v[n - strides[a]] } else { v[n] };
                let hi = if idx[a] + 1 < dims[a] {
                    v[n + strides[a]]
                } else {
                    v[n]
                };
                acc += (hi - 2.0 * v[n] + lo) / (h[a] * h[a]);
            }
            acc
        })
        .collect();
    ScalarField::from_parts(grid.clone(), out)
}
