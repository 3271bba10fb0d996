//! Orthonormal type-II discrete cosine transform in three dimensions.
//!
//! Along an axis with `N` samples the forward transform is
//!
//! ```text
//! X[l] = β(l) Σ_i x[i] cos(π l (2i + 1) / 2N),   β(0) = √(1/N), β(l>0) = √(2/N)
//! ```
//!
//! and the inverse is its transpose. The 3D transform applies the 1D one along
//! x, y and z in turn. Fast 1D kernels come from `rustdct`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};
use crate::field::{check_finite, GridSpec, ScalarField};

/// DCT-II coefficients of a field, indexed `(l, m, n)` with the same x-fastest
/// layout as the spatial samples. Coefficient `(0, 0, 0)` is the DC mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coefficients: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "spectrum needs {} coefficients, got {}",
                grid.len(),
                coefficients.len()
            )));
        }
        check_finite(&coefficients)?;
        Ok(Spectrum { grid, coefficients })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn get(&self, l: usize, m: usize, n: usize) -> f64 {
        self.coefficients[self.grid.index(l, m, n)]
    }

    pub fn dc(&self) -> f64 {
        self.coefficients[0]
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

struct Plans(HashMap<usize, Arc<dyn TransformType2And3<f64>>>);

impl Plans {
    fn for_dims(dims: [usize; 3]) -> Self {
        let mut planner = DctPlanner::new();
        let mut map = HashMap::new();
        for n in dims {
            map.entry(n).or_insert_with(|| planner.plan_dct2(n));
        }
        Plans(map)
    }
}

fn transform_line(plan: &dyn TransformType2And3<f64>, line: &mut [f64], dir: Direction) {
    let n = line.len() as f64;
    let (b0, b) = ((1.0 / n).sqrt(), (2.0 / n).sqrt());
    match dir {
        Direction::Forward => {
            plan.process_dct2(line);
            line[0] *= b0;
            line[1..].iter_mut().for_each(|v| *v *= b);
        }
        Direction::Inverse => {
            // rustdct's DCT-III halves the first input.
            line[0] *= 2.0 * b0;
            line[1..].iter_mut().for_each(|v| *v *= b);
            plan.process_dct3(line);
        }
    }
}

/// Run `op` on every line of `data` parallel to `axis`.
pub(crate) fn apply_along_axis<F>(data: &mut [f64], dims: [usize; 3], axis: usize, op: F)
where
    F: Fn(&mut [f64]) + Sync,
{
    let n = dims[axis];
    if axis == 0 {
        data.par_chunks_mut(n).for_each(&op);
        return;
    }
    let [nx, ny, _] = dims;
    let stride = if axis == 1 { nx } else { nx * ny };
    // Line `l` enumerates the two remaining axes, the lower one fastest.
    let base = |l: usize| {
        if axis == 1 {
            l % nx + nx * ny * (l / nx)
        } else {
            l
        }
    };
    let mut buf = vec![0.0; data.len()];
    {
        let src: &[f64] = data;
        buf.par_chunks_mut(n).enumerate().for_each(|(l, line)| {
            let b = base(l);
            for (q, v) in line.iter_mut().enumerate() {
                *v = src[b + q * stride];
            }
            op(line);
        });
    }
    data.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let i = idx % nx;
        let r = idx / nx;
        let (j, k) = (r % ny, r / ny);
        let (q, l) = if axis == 1 {
            (j, i + nx * k)
        } else {
            (k, i + nx * j)
        };
        *v = buf[l * n + q];
    });
}

fn transform(values: &mut [f64], dims: [usize; 3], dir: Direction) {
    let plans = Plans::for_dims(dims);
    for axis in 0..3 {
        let plan = plans.0[&dims[axis]].as_ref();
        apply_along_axis(values, dims, axis, |line| transform_line(plan, line, dir));
    }
}

/// Orthonormal 3D DCT-II.
pub fn dct3_forward(f: &ScalarField) -> Result<Spectrum> {
    check_finite(f.values())?;
    let mut values = f.values().to_vec();
    transform(&mut values, f.grid().dims(), Direction::Forward);
    Ok(Spectrum {
        grid: f.grid().clone(),
        coefficients: values,
    })
}

/// Inverse of [`dct3_forward`] (orthonormal DCT-III).
pub fn dct3_inverse(s: &Spectrum) -> ScalarField {
    let mut values = s.coefficients.clone();
    transform(&mut values, s.grid.dims(), Direction::Inverse);
    ScalarField::from_parts(s.grid.clone(), values)
}
