//! Cell-size fields `P(r)`: sigmoid generators over normalized distance
//! sources, constant fields, mesh-distance ingestion and Gaussian smoothing.

use rayon::prelude::*;

use crate::dct::apply_along_axis;
use crate::error::{Error, Result};
use crate::field::{Axis, GridSpec, ScalarField};
use crate::mesh::distance::TriangleBvh;
use crate::mesh::SurfaceMesh;

/// Number of alternating bands in [`DistanceSource::Stripes`].
pub const STRIPE_BANDS: usize = 6;

/// A cell-size field with its declared bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeField {
    field: ScalarField,
    p_min: f64,
    p_max: f64,
    provenance: String,
}

impl SizeField {
    pub fn new(
        field: ScalarField,
        p_min: f64,
        p_max: f64,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if !(p_min.is_finite() && p_min > 0.0) {
            return Err(Error::param(
                "p_min",
                format!("must be positive, got {p_min}"),
            ));
        }
        if !(p_max.is_finite() && p_max >= p_min) {
            return Err(Error::param(
                "p_max",
                format!("must be >= p_min = {p_min}, got {p_max}"),
            ));
        }
        let slack = 1e-12 * p_max.max(1.0);
        if let Some(n) = field
            .values()
            .iter()
            .position(|&p| p < p_min - slack || p > p_max + slack)
        {
            return Err(Error::param(
                "size",
                format!(
                    "sample {n} = {} outside [{p_min}, {p_max}]",
                    field.values()[n]
                ),
            ));
        }
        Ok(SizeField {
            field,
            p_min,
            p_max,
            provenance: provenance.into(),
        })
    }

    /// Wrap externally supplied sizes, taking the bounds from the data.
    pub fn from_samples(field: ScalarField) -> Result<Self> {
        let (lo, hi) = (field.min(), field.max());
        SizeField::new(field, lo, hi, "external")
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &GridSpec {
        self.field.grid()
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// `(P − p_min) / (p_max − p_min)`, or zero for a degenerate range.
    pub fn normalized(&self) -> ScalarField {
        let span = self.p_max - self.p_min;
        let values = self
            .field
            .values()
            .iter()
            .map(|&p| {
                if span > 0.0 {
                    (p - self.p_min) / span
                } else {
                    0.0
                }
            })
            .collect();
        ScalarField::from_parts(self.grid().clone(), values)
    }
}

/// How the smoothing scale `α` maps to a kernel width in cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SigmaRule {
    /// `σc = α · max(Nx, Ny, Nz)`.
    GridMax,
    /// `σc = α · max(Ns / Ls)`, i.e. `σ = α` model length units.
    #[default]
    PerUnitLength,
}

/// Gaussian smoothing parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingSpec {
    alpha: f64,
    rule: SigmaRule,
}

impl SmoothingSpec {
    pub fn new(alpha: f64, rule: SigmaRule) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::param("alpha", format!("must be >= 0, got {alpha}")));
        }
        Ok(SmoothingSpec { alpha, rule })
    }

    pub fn identity() -> Self {
        SmoothingSpec {
            alpha: 0.0,
            rule: SigmaRule::default(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rule(&self) -> SigmaRule {
        self.rule
    }

    pub fn is_identity(&self) -> bool {
        self.alpha == 0.0
    }

    /// Kernel standard deviation in cells.
    pub fn sigma_cells(&self, grid: &GridSpec) -> f64 {
        let d = grid.dims();
        match self.rule {
            SigmaRule::GridMax => self.alpha * d.iter().cloned().max().unwrap_or(0) as f64,
            SigmaRule::PerUnitLength => {
                let e = grid.extents();
                let density = (0..3).map(|a| d[a] as f64 / e[a]).fold(0.0, f64::max);
                self.alpha * density
            }
        }
    }

    /// Smallest integer `K ≥ 3 σc`.
    pub fn truncation_radius(&self, grid: &GridSpec) -> usize {
        (3.0 * self.sigma_cells(grid)).ceil() as usize
    }

    /// Normalized 1D weights for offsets `−K..=K`. The 3D kernel is their
    /// outer product.
    pub fn kernel_1d(&self, grid: &GridSpec) -> Vec<f64> {
        let sigma = self.sigma_cells(grid);
        if sigma == 0.0 {
            return vec![1.0];
        }
        let k = self.truncation_radius(grid) as i64;
        let w: Vec<f64> = (-k..=k)
            .map(|p| (-((p * p) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }
}

/// Normalized distance `d` fed to [`sigmoid_size`].
#[derive(Clone, Debug, PartialEq)]
pub enum DistanceSource {
    /// `d = (s − origin_s) / L_s` along one axis.
    AxisRamp(Axis),
    /// `d = sqrt(((x/Lx)² + (y/Ly)² + (z/Lz)²) / 3)`, measured from the grid origin.
    Radial,
    /// `d = 1` on bands `[n Lx/6, (n+1) Lx/6)` for even `n`, else 0.
    Stripes,
    /// Precomputed samples, e.g. from [`mesh_distance_field`].
    Sampled(ScalarField),
}

impl DistanceSource {
    pub fn sample(&self, grid: &GridSpec) -> Result<ScalarField> {
        let o = grid.origin();
        let l = grid.extents();
        match self {
            DistanceSource::AxisRamp(axis) => {
                let a = axis.index();
                ScalarField::from_fn(grid.clone(), |p| (p[a] - o[a]) / l[a])
            }
            DistanceSource::Radial => ScalarField::from_fn(grid.clone(), |p| {
                let s: f64 = (0..3).map(|a| ((p[a] - o[a]) / l[a]).powi(2)).sum();
                (s / 3.0).sqrt()
            }),
            DistanceSource::Stripes => ScalarField::from_fn(grid.clone(), |p| {
                let band = ((p[0] - o[0]) / (l[0] / STRIPE_BANDS as f64)).floor() as i64;
                if band.rem_euclid(2) == 0 {
                    1.0
                } else {
                    0.0
                }
            }),
            DistanceSource::Sampled(f) => {
                f.grid().ensure_same(grid, "distance samples")?;
                Ok(f.clone())
            }
        }
    }

    fn label(&self) -> &'static str {
        match self {
            DistanceSource::AxisRamp(_) => "ramp",
            DistanceSource::Radial => "radial",
            DistanceSource::Stripes => "stripes",
            DistanceSource::Sampled(_) => "sampled",
        }
    }
}

/// `P = p_min + (p_max − p_min) / (1 + exp(−κ (d − ½)))` at every cell.
pub fn sigmoid_size(
    grid: &GridSpec,
    source: &DistanceSource,
    p_min: f64,
    p_max: f64,
    kappa: f64,
) -> Result<SizeField> {
    if !(p_min.is_finite() && p_min > 0.0) {
        return Err(Error::param(
            "p_min",
            format!("must be positive, got {p_min}"),
        ));
    }
    if !(p_max.is_finite() && p_max >= p_min) {
        return Err(Error::param(
            "p_max",
            format!("must be >= p_min, got {p_max}"),
        ));
    }
    if !kappa.is_finite() {
        return Err(Error::param(
            "kappa",
            format!("must be finite, got {kappa}"),
        ));
    }
    let d = source.sample(grid)?;
    let span = p_max - p_min;
    let field = d.map(|d| p_min + span / (1.0 + (-kappa * (d - 0.5)).exp()))?;
    SizeField::new(
        field,
        p_min,
        p_max,
        format!(
            "sigmoid({}, p_min={p_min}, p_max={p_max}, kappa={kappa})",
            source.label()
        ),
    )
}

pub fn uniform_size(grid: &GridSpec, p: f64) -> Result<SizeField> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::param("p", format!("must be positive, got {p}")));
    }
    SizeField::new(
        ScalarField::constant(grid.clone(), p)?,
        p,
        p,
        format!("uniform(p={p})"),
    )
}

/// Convolve one line with the truncated kernel `w` (offsets `−K..=K`),
/// clamping indices to the line ends.
fn smooth_line(line: &mut [f64], w: &[f64], left_tail: &[f64], right_tail: &[f64]) {
    let n = line.len();
    let k = (w.len() / 2) as isize;
    let src = line.to_vec();
    for (i, out) in line.iter_mut().enumerate() {
        let ii = i as isize;
        let lo = (ii - k).max(0) as usize;
        let hi = (ii + k).min(n as isize - 1) as usize;
        let mut acc = left_tail[i] * src[0] + right_tail[i] * src[n - 1];
        for (j, &v) in src.iter().enumerate().take(hi + 1).skip(lo) {
            acc += w[(j as isize - ii + k) as usize] * v;
        }
        *out = acc;
    }
}

/// Weight mass that falls before index 0 / after index `n − 1` for each output.
fn clamp_tails(w: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let k = (w.len() / 2) as isize;
    let weight = |p: isize| w[(p + k) as usize];
    let left = (0..n as isize)
        .map(|i| (-k..=(-i - 1).min(k)).map(weight).sum())
        .collect();
    let right = (0..n as isize)
        .map(|i| ((n as isize - i).max(-k)..=k).map(weight).sum())
        .collect();
    (left, right)
}

/// Normalized, truncated Gaussian smoothing with nearest-value extension.
///
/// The cube-truncated 3D kernel factorizes, so the convolution runs as three
/// 1D passes.
pub fn gaussian_smooth(size: &SizeField, spec: &SmoothingSpec) -> Result<SizeField> {
    if spec.is_identity() {
        return Ok(size.clone());
    }
    let grid = size.grid().clone();
    let w = spec.kernel_1d(&grid);
    let dims = grid.dims();
    let mut values = size.field().values().to_vec();
    for axis in 0..3 {
        let (left, right) = clamp_tails(&w, dims[axis]);
        apply_along_axis(&mut values, dims, axis, |line| {
            smooth_line(line, &w, &left, &right)
        });
    }
    // Convex combinations stay inside the declared bounds up to round-off.
    let (lo, hi) = (size.p_min(), size.p_max());
    values.par_iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    SizeField::new(
        ScalarField::new(grid, values)?,
        lo,
        hi,
        format!("{} | gaussian(alpha={})", size.provenance(), spec.alpha()),
    )
}

/// Unsigned distance from each cell center to the nearest triangle of
/// `mesh`, divided by `normalization`.
pub fn mesh_distance_field(
    grid: &GridSpec,
    mesh: &SurfaceMesh,
    normalization: f64,
) -> Result<DistanceSource> {
    if mesh.triangles().is_empty() {
        return Err(Error::EmptyMesh(
            "distance source needs at least one triangle",
        ));
    }
    if !(normalization.is_finite() && normalization != 0.0) {
        return Err(Error::param(
            "normalization",
            format!("must be finite and nonzero, got {normalization}"),
        ));
    }
    let bvh = TriangleBvh::new(mesh)?;
    let field = ScalarField::from_fn(grid.clone(), |p| bvh.distance(p) / normalization)?;
    Ok(DistanceSource::Sampled(field))
}
