//! Cell-centered regular grids, scalar/vector fields and the finite-difference
//! calculus shared by every other module.
//!
//! Sample `(i, j, k)` lives at `origin + (index + ½)·h` and dense arrays are
//! stored x-fastest: `n = i + Nx·(j + Ny·k)`.
//!
//! Derivatives use central differences in the interior and second-order
//! one-sided differences on the first and last sample of each line, so every
//! stencil is exact for quadratics.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Fixed chunk length for parallel reductions. Partial sums are combined in
/// chunk order, so energies do not depend on the thread count.
const REDUCE_CHUNK: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Axis::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Regular cell-centered sampling of an axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    dims: [usize; 3],
    extents: [f64; 3],
    origin: [f64; 3],
}

impl GridSpec {
    pub fn new(dims: [usize; 3], extents: [f64; 3]) -> Result<Self> {
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least 2 samples, got {d} in {dims:?}"
            )));
        }
        if extents.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extents must be finite and positive, got {extents:?}"
            )));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidGrid(format!("{dims:?} overflows usize")))?;
        Ok(GridSpec {
            dims,
            extents,
            origin: [0.0; 3],
        })
    }

    pub fn with_origin(mut self, origin: [f64; 3]) -> Result<Self> {
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite origin {origin:?}")));
        }
        self.origin = origin;
        Ok(self)
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn extents(&self) -> [f64; 3] {
        self.extents
    }

    #[inline]
    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        [
            self.extents[0] / self.dims[0] as f64,
            self.extents[1] / self.dims[1] as f64,
            self.extents[2] / self.dims[2] as f64,
        ]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h[0] * h[1] * h[2]
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    pub fn max_extent(&self) -> f64 {
        self.extents.iter().cloned().fold(0.0, f64::max)
    }

    /// Linear-index strides, x fastest.
    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        [1, self.dims[0], self.dims[0] * self.dims[1]]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn unravel(&self, n: usize) -> [usize; 3] {
        let i = n % self.dims[0];
        let r = n / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    /// Coordinate of sample `idx` along `axis`.
    #[inline]
    pub fn coord(&self, axis: Axis, idx: usize) -> f64 {
        let a = axis.index();
        self.origin[a] + (idx as f64 + 0.5) * self.extents[a] / self.dims[a] as f64
    }

    #[inline]
    pub fn center(&self, n: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(n);
        [
            self.coord(Axis::X, i),
            self.coord(Axis::Y, j),
            self.coord(Axis::Z, k),
        ]
    }

    /// Same box, `factor` times as many samples per axis.
    pub fn refined(&self, factor: [usize; 3]) -> Result<GridSpec> {
        if factor.contains(&0) {
            return Err(Error::param("factor", "refinement factor must be >= 1"));
        }
        GridSpec::new(
            [
                self.dims[0] * factor[0],
                self.dims[1] * factor[1],
                self.dims[2] * factor[2],
            ],
            self.extents,
        )?
        .with_origin(self.origin)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {:?}/{:?} vs {:?}/{:?}",
                self.dims, self.extents, other.dims, other.extents
            )))
        }
    }
}

/// Dense finite values on a [`GridSpec`], x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values for dims {:?}, got {}",
                grid.len(),
                grid.dims(),
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(ScalarField { grid, values })
    }

    /// Crate-internal constructor for values that are finite by construction.
    pub(crate) fn from_parts(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self> {
        let n = grid.len();
        ScalarField::new(grid, vec![value; n])
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        ScalarField::from_parts(grid, vec![0.0; n])
    }

    /// Evaluate `f` at every cell center.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|n| f(grid.center(n)))
            .collect();
        ScalarField::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    /// Pointwise map; fails if the result is not finite.
    pub fn map<F>(&self, f: F) -> Result<ScalarField>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let values: Vec<f64> = self.values.par_iter().map(|&v| f(v)).collect();
        ScalarField::new(self.grid.clone(), values)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<F>(&self, other: &ScalarField, f: F) -> Result<ScalarField>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        self.grid.ensure_same(&other.grid, "zip_map")?;
        let values: Vec<f64> = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        ScalarField::new(self.grid.clone(), values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        ordered_sum(self.values.len(), |n| self.values[n]) / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Three scalar components on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<Self> {
        x.grid.ensure_same(&y.grid, "vector components x/y")?;
        x.grid.ensure_same(&z.grid, "vector components x/z")?;
        Ok(VectorField {
            components: [x, y, z],
        })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        self.components[0].grid()
    }

    #[inline]
    pub fn component(&self, axis: Axis) -> &ScalarField {
        &self.components[axis.index()]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        let [x, y, z] = &self.components;
        let values = (0..x.values.len())
            .into_par_iter()
            .map(|n| (x.values[n].powi(2) + y.values[n].powi(2) + z.values[n].powi(2)).sqrt())
            .collect();
        ScalarField::from_parts(self.grid().clone(), values)
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Deterministic parallel sum of `term(n)` for `n in 0..len`.
pub(crate) fn ordered_sum<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..len.div_ceil(REDUCE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCE_CHUNK;
            let hi = (lo + REDUCE_CHUNK).min(len);
            (lo..hi).map(&term).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

/// First derivative of the samples `line` (spacing `h`) at position `m`.
#[inline]
fn line_derivative(at: impl Fn(usize) -> f64, m: usize, len: usize, h: f64) -> f64 {
    if len == 2 {
        return (at(1) - at(0)) / h;
    }
    if m == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
    } else if m == len - 1 {
        (3.0 * at(len - 1) - 4.0 * at(len - 2) + at(len - 3)) / (2.0 * h)
    } else {
        (at(m + 1) - at(m - 1)) / (2.0 * h)
    }
}

/// `∂f/∂axis` at every sample.
pub fn partial(f: &ScalarField, axis: Axis) -> ScalarField {
    let grid = f.grid();
    let a = axis.index();
    let len = grid.dims()[a];
    let stride = grid.strides()[a];
    let h = grid.spacing()[a];
    let vals = f.values();
    let out: Vec<f64> = (0..vals.len())
        .into_par_iter()
        .map(|n| {
            let m = grid.unravel(n)[a];
            let base = n - m * stride;
            line_derivative(|q| vals[base + q * stride], m, len, h)
        })
        .collect();
    ScalarField::from_parts(grid.clone(), out)
}

/// Gradient with central differences inside and second-order one-sided
/// differences on the boundary samples.
pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    check_finite(f.values())?;
    let [x, y, z] = Axis::ALL.map(|a| partial(f, a));
    VectorField::new(x, y, z)
}

/// Divergence using the same stencils as [`gradient`].
pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    for c in v.components() {
        check_finite(c.values())?;
    }
    let [dx, dy, dz] = Axis::ALL.map(|a| partial(v.component(a), a));
    let values = (0..dx.values.len())
        .into_par_iter()
        .map(|n| dx.values[n] + dy.values[n] + dz.values[n])
        .collect();
    Ok(ScalarField::from_parts(v.grid().clone(), values))
}

/// `Σ ‖v‖²` over all samples, without any volume weight.
pub fn sum_of_squares(v: &VectorField) -> f64 {
    let [x, y, z] = v.components();
    ordered_sum(x.values.len(), |n| {
        x.values[n].powi(2) + y.values[n].powi(2) + z.values[n].powi(2)
    })
}

/// Midpoint-rule approximation of `∫ ‖v‖² dΩ`.
pub fn l2_energy(v: &VectorField) -> f64 {
    sum_of_squares(v) * v.grid().cell_volume()
}

/// Per-axis interpolation stencil: lower index and weight of the upper one.
fn interp_stencil(u: f64, len: usize) -> (usize, f64) {
    let u = u.clamp(0.0, (len - 1) as f64);
    let i0 = (u.floor() as usize).min(len - 2);
    (i0, u - i0 as f64)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (1.0 - t) + b * t
}

fn trilinear_at(f: &ScalarField, sx: (usize, f64), sy: (usize, f64), sz: (usize, f64)) -> f64 {
    let g = f.grid();
    let v = |i, j, k| f.values[g.index(i, j, k)];
    let (i, tx) = sx;
    let (j, ty) = sy;
    let (k, tz) = sz;
    let c00 = lerp(v(i, j, k), v(i + 1, j, k), tx);
    let c10 = lerp(v(i, j + 1, k), v(i + 1, j + 1, k), tx);
    let c01 = lerp(v(i, j, k + 1), v(i + 1, j, k + 1), tx);
    let c11 = lerp(v(i, j + 1, k + 1), v(i + 1, j + 1, k + 1), tx);
    lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz)
}

/// Evaluate the trilinear interpolant of `f` at a physical point. Points
/// beyond the outermost sample centers take the nearest face value.
pub fn sample_trilinear(f: &ScalarField, p: [f64; 3]) -> f64 {
    let g = f.grid();
    let (o, h, d) = (g.origin(), g.spacing(), g.dims());
    let s = |a: usize| interp_stencil((p[a] - o[a]) / h[a] - 0.5, d[a]);
    trilinear_at(f, s(0), s(1), s(2))
}

/// Refine `f` by an integer factor per axis using trilinear interpolation of
/// the coarse samples (nearest-value extension past the outer centers).
pub fn trilinear_upsample(f: &ScalarField, factor: [usize; 3]) -> Result<ScalarField> {
    let fine = f.grid().refined(factor)?;
    if factor == [1, 1, 1] {
        return Ok(f.clone());
    }
    let coarse = f.grid().dims();
    let stencils: [Vec<(usize, f64)>; 3] = std::array::from_fn(|a| {
        (0..fine.dims()[a])
            .map(|m| {
                let u = (m as f64 + 0.5) / factor[a] as f64 - 0.5;
                interp_stencil(u, coarse[a])
            })
            .collect()
    });
    let values: Vec<f64> = (0..fine.len())
        .into_par_iter()
        .map(|n| {
            let [i, j, k] = fine.unravel(n);
            trilinear_at(f, stencils[0][i], stencils[1][j], stencils[2][k])
        })
        .collect();
    Ok(ScalarField::from_parts(fine, values))
}
