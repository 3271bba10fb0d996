//! Phase fields for graded TPMS lattices.
//!
//! The periodic-modulation baseline sets `φs = ω(r)·(s − os)` directly. The
//! distortion-minimizing alternative solves, per axis,
//!
//! ```text
//! min_φ  Σ_faces ((φ[i+es] − φ[i]) / hs − ω_face)²
//! ```
//!
//! whose normal equations are the reflective 7-point Neumann system
//! `Δd φ = b` handled by [`crate::poisson`]. Interior faces carry the average
//! of the two neighbouring wavenumbers; boundary faces drop out, which is the
//! same as the full face divergence minus the boundary flux `g/h` with
//! `g = ω es·n` sampled at the boundary cells.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{gradient, ordered_sum, partial, Axis, GridSpec, ScalarField};
use crate::poisson::{neumann_poisson_solve, DEFAULT_COMPATIBILITY_TOLERANCE};
use crate::size_field::{gaussian_smooth, SizeField, SmoothingSpec};

/// Pointwise target wavenumber `ω = 2π / P`.
#[derive(Clone, Debug, PartialEq)]
pub struct WavenumberTarget {
    omega: ScalarField,
}

impl WavenumberTarget {
    pub fn new(omega: ScalarField) -> Result<Self> {
        if let Some(n) = omega.values().iter().position(|&w| w <= 0.0) {
            return Err(Error::param(
                "omega",
                format!(
                    "wavenumber must be positive, sample {n} = {}",
                    omega.values()[n]
                ),
            ));
        }
        Ok(WavenumberTarget { omega })
    }

    pub fn omega(&self) -> &ScalarField {
        &self.omega
    }

    pub fn grid(&self) -> &GridSpec {
        self.omega.grid()
    }
}

pub fn target_wavenumbers(size: &SizeField) -> Result<WavenumberTarget> {
    if let Some(n) = size.field().values().iter().position(|&p| p <= 0.0) {
        return Err(Error::param(
            "size",
            format!(
                "cell size must be positive, sample {n} = {}",
                size.field().values()[n]
            ),
        ));
    }
    WavenumberTarget::new(size.field().map(|p| 2.0 * std::f64::consts::PI / p)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Periodic modulation `φs = ω·(s − os)`.
    Pm,
    /// Least-squares phases from the Neumann Poisson solve.
    Poisson,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pm => "pm",
            Method::Poisson => "poisson",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pm" => Ok(Method::Pm),
            "poisson" => Ok(Method::Poisson),
            _ => Err(Error::param("method", format!("unknown method `{s}`"))),
        }
    }
}

/// The phase triple `(φx, φy, φz)` with how it was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSet {
    phases: [ScalarField; 3],
    method: Method,
    smoothing: Option<SmoothingSpec>,
    origin: Option<[f64; 3]>,
}

impl PhaseSet {
    pub fn new(
        phases: [ScalarField; 3],
        method: Method,
        smoothing: Option<SmoothingSpec>,
        origin: Option<[f64; 3]>,
    ) -> Result<Self> {
        phases[0]
            .grid()
            .ensure_same(phases[1].grid(), "phase components")?;
        phases[0]
            .grid()
            .ensure_same(phases[2].grid(), "phase components")?;
        Ok(PhaseSet {
            phases,
            method,
            smoothing,
            origin,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.phases[0].grid()
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.phases
    }

    pub fn component(&self, axis: Axis) -> &ScalarField {
        &self.phases[axis.index()]
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.phases
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn smoothing(&self) -> Option<SmoothingSpec> {
        self.smoothing
    }

    /// Smoothing scale used before phase construction, zero if none.
    pub fn alpha(&self) -> f64 {
        self.smoothing.map_or(0.0, |s| s.alpha())
    }

    pub fn origin(&self) -> Option<[f64; 3]> {
        self.origin
    }
}

/// `φs = (2π / P(r)) · (s − origin_s)` at every cell center.
pub fn pm_phases(size: &SizeField, origin: [f64; 3]) -> Result<PhaseSet> {
    let target = target_wavenumbers(size)?;
    let grid = size.grid();
    let omega = target.omega().values();
    let phases = Axis::ALL.map(|axis| {
        let a = axis.index();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|n| omega[n] * (grid.center(n)[a] - origin[a]))
            .collect();
        ScalarField::from_parts(grid.clone(), values)
    });
    PhaseSet::new(phases, Method::Pm, None, Some(origin))
}

/// [`pm_phases`] on the Gaussian-smoothed size field.
pub fn pm_phases_smoothed(
    size: &SizeField,
    smoothing: &SmoothingSpec,
    origin: [f64; 3],
) -> Result<PhaseSet> {
    let smoothed = gaussian_smooth(size, smoothing)?;
    let mut phases = pm_phases(&smoothed, origin)?;
    phases.smoothing = Some(*smoothing);
    Ok(phases)
}

/// Right-hand side `b` of `Δd φ = b` for the phase along `axis`.
///
/// `b[i] = (ω[i+½] − ω[i−½]) / h` with face values averaged from the two
/// neighbours and the two boundary faces of every line removed, so the
/// entries of `b` sum to zero exactly.
pub fn assemble_poisson_rhs(target: &WavenumberTarget, axis: Axis) -> Result<ScalarField> {
    let grid = target.grid();
    let a = axis.index();
    let len = grid.dims()[a];
    let stride = grid.strides()[a];
    let h = grid.spacing()[a];
    let w = target.omega().values();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|n| {
            let m = grid.unravel(n)[a];
            let hi = if m + 1 < len {
                0.5 * (w[n] + w[n + stride])
            } else {
                0.0
            };
            let lo = if m > 0 {
                0.5 * (w[n - stride] + w[n])
            } else {
                0.0
            };
            (hi - lo) / h
        })
        .collect();
    let b = ScalarField::from_parts(grid.clone(), values);
    let total = ordered_sum(grid.len(), |n| b.values()[n]);
    let norm = ordered_sum(grid.len(), |n| b.values()[n].powi(2)).sqrt();
    // The DC coefficient of the orthonormal DCT is Σb / √len.
    let dc = total / (grid.len() as f64).sqrt();
    if dc.abs() > DEFAULT_COMPATIBILITY_TOLERANCE * norm {
        return Err(Error::Incompatible {
            dc: dc.abs(),
            norm,
            tolerance: DEFAULT_COMPATIBILITY_TOLERANCE,
        });
    }
    Ok(b)
}

/// Least-squares phases for an arbitrary wavenumber target.
pub fn optimize_target(target: &WavenumberTarget) -> Result<PhaseSet> {
    let solved: Vec<ScalarField> = Axis::ALL
        .par_iter()
        .map(|&axis| neumann_poisson_solve(&assemble_poisson_rhs(target, axis)?))
        .collect::<Result<_>>()?;
    let [x, y, z]: [ScalarField; 3] = solved.try_into().expect("three axes");
    PhaseSet::new([x, y, z], Method::Poisson, None, None)
}

/// Distortion-minimized phases for the raw size field.
pub fn optimize_phases(size: &SizeField) -> Result<PhaseSet> {
    optimize_target(&target_wavenumbers(size)?)
}

/// Phases for `method`; the smoothing spec applies to PM only.
pub fn build_phases(
    size: &SizeField,
    method: Method,
    smoothing: &SmoothingSpec,
    origin: [f64; 3],
) -> Result<PhaseSet> {
    match method {
        Method::Pm => pm_phases_smoothed(size, smoothing, origin),
        Method::Poisson => optimize_phases(size),
    }
}

/// Which wavenumber a residual is measured against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResidualTarget {
    /// `ω = 2π / P` from the unsmoothed size field.
    Raw,
    /// `ω̃ = 2π / P̃` from the size field smoothed with the given spec.
    Smoothed(SmoothingSpec),
}

/// Per-axis residuals `rs = ∇φs − ω es`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    method: Method,
    alpha: f64,
    target: ResidualTarget,
    energies: [f64; 3],
    integrals: [f64; 3],
    magnitudes: [ScalarField; 3],
}

impl ResidualReport {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn target(&self) -> ResidualTarget {
        self.target
    }

    /// `Σ ‖rs‖²` over all samples, in rad²/length².
    pub fn energies(&self) -> [f64; 3] {
        self.energies
    }

    pub fn energy(&self, axis: Axis) -> f64 {
        self.energies[axis.index()]
    }

    pub fn total(&self) -> f64 {
        self.energies.iter().sum()
    }

    /// Midpoint-rule `∫ ‖rs‖² dΩ`, i.e. the energies times the cell volume.
    pub fn integrals(&self) -> [f64; 3] {
        self.integrals
    }

    pub fn total_integral(&self) -> f64 {
        self.integrals.iter().sum()
    }

    /// Pointwise `‖rs‖`.
    pub fn magnitude(&self, axis: Axis) -> &ScalarField {
        &self.magnitudes[axis.index()]
    }
}

/// Residuals of `phases` against an explicit target.
pub fn residual_against(phases: &PhaseSet, target: &WavenumberTarget) -> Result<ResidualReport> {
    phases
        .grid()
        .ensure_same(target.grid(), "phases vs target")?;
    let grid = phases.grid().clone();
    let omega = target.omega().values();
    let mut energies = [0.0; 3];
    let mut magnitudes = Vec::with_capacity(3);
    for axis in Axis::ALL {
        let g = gradient(phases.component(axis))?;
        let [gx, gy, gz] = g.components().each_ref().map(|c| c.values());
        let a = axis.index();
        let sq: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|n| {
                let mut r = [gx[n], gy[n], gz[n]];
                r[a] -= omega[n];
                r[0] * r[0] + r[1] * r[1] + r[2] * r[2]
            })
            .collect();
        energies[a] = ordered_sum(sq.len(), |n| sq[n]);
        magnitudes.push(ScalarField::from_parts(
            grid.clone(),
            sq.into_par_iter().map(f64::sqrt).collect(),
        ));
    }
    let dv = grid.cell_volume();
    Ok(ResidualReport {
        method: phases.method(),
        alpha: phases.alpha(),
        target: ResidualTarget::Raw,
        energies,
        integrals: energies.map(|e| e * dv),
        magnitudes: magnitudes.try_into().expect("three axes"),
    })
}

/// Residuals of `phases` against the raw or smoothed target derived from `size`.
pub fn residual_report(
    phases: &PhaseSet,
    size: &SizeField,
    target: ResidualTarget,
) -> Result<ResidualReport> {
    let omega = match target {
        ResidualTarget::Raw => target_wavenumbers(size)?,
        ResidualTarget::Smoothed(spec) => target_wavenumbers(&gaussian_smooth(size, &spec)?)?,
    };
    let mut report = residual_against(phases, &omega)?;
    report.target = target;
    Ok(report)
}

/// All nine partials; entry `[s][t]` is `∂φs/∂t`.
pub fn jacobian_diagnostics(phases: &PhaseSet) -> [[ScalarField; 3]; 3] {
    Axis::ALL.map(|s| Axis::ALL.map(|t| partial(phases.component(s), t)))
}

/// One row of a residual benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub alpha: f64,
    pub energies: [f64; 3],
}

impl SweepRow {
    pub fn total(&self) -> f64 {
        self.energies.iter().sum()
    }
}

impl From<&ResidualReport> for SweepRow {
    fn from(r: &ResidualReport) -> Self {
        SweepRow {
            method: r.method(),
            alpha: r.alpha(),
            energies: r.energies(),
        }
    }
}

/// How the PM rows of a sweep are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PmTarget {
    /// Against the raw wavenumber `ω`.
    #[default]
    Raw,
    /// Against `ω̃` from the same smoothed field the phases were built from.
    Smoothed,
}

/// Residual energies of PM over `alphas` and of the Poisson phases, the
/// latter repeated for every alpha. PM rows come first.
pub fn residual_sweep(
    size: &SizeField,
    alphas: &[f64],
    rule: crate::size_field::SigmaRule,
    origin: [f64; 3],
    pm_target: PmTarget,
) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::param("alphas", "at least one alpha is required"));
    }
    let specs = alphas
        .iter()
        .map(|&a| SmoothingSpec::new(a, rule))
        .collect::<Result<Vec<_>>>()?;
    let raw = target_wavenumbers(size)?;
    let mut rows = Vec::with_capacity(2 * alphas.len());
    for spec in &specs {
        let smoothed = gaussian_smooth(size, spec)?;
        let mut phases = pm_phases(&smoothed, origin)?;
        phases.smoothing = Some(*spec);
        let report = match pm_target {
            PmTarget::Raw => residual_against(&phases, &raw)?,
            PmTarget::Smoothed => residual_against(&phases, &target_wavenumbers(&smoothed)?)?,
        };
        rows.push(SweepRow::from(&report));
    }
    let poisson = residual_against(&optimize_target(&raw)?, &raw)?;
    rows.extend(specs.iter().map(|spec| SweepRow {
        method: Method::Poisson,
        alpha: spec.alpha(),
        energies: poisson.energies(),
    }));
    Ok(rows)
}

pub const CSV_HEADER: &str = "method,alpha,res_x,res_y,res_z,total";

/// Write rows as `method,alpha,res_x,res_y,res_z,total`.
pub fn write_residual_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.9e},{:.9e},{:.9e},{:.9e}",
            r.method.name(),
            r.alpha,
            r.energies[0],
            r.energies[1],
            r.energies[2],
            r.total()
        )?;
    }
    Ok(())
}
