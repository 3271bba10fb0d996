//! TPMS implicit functions, wall-thickness to level conversion, solid
//! classification and the fitted effective-property polynomials.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::phase::PhaseSet;
use crate::size_field::SizeField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TpmsKind {
    Gyroid,
    SchwarzP,
}

impl TpmsKind {
    /// Implicit function value for the phase triple `phi`.
    #[inline]
    pub fn eval(self, phi: [f64; 3]) -> f64 {
        match self {
            TpmsKind::Gyroid => {
                let (sx, cx) = phi[0].sin_cos();
                let (sy, cy) = phi[1].sin_cos();
                let (sz, cz) = phi[2].sin_cos();
                sx * cy + sy * cz + sz * cx
            }
            TpmsKind::SchwarzP => phi[0].cos() + phi[1].cos() + phi[2].cos(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TpmsKind::Gyroid => "gyroid",
            TpmsKind::SchwarzP => "schwarz-p",
        }
    }
}

impl std::str::FromStr for TpmsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gyroid" | "g" => Ok(TpmsKind::Gyroid),
            "schwarz-p" | "schwarzp" | "schwarz_p" | "p" => Ok(TpmsKind::SchwarzP),
            _ => Err(Error::param("kind", format!("unknown TPMS kind `{s}`"))),
        }
    }
}

/// Evaluate the implicit function on the phase grid.
pub fn tpms_value(kind: TpmsKind, phases: &PhaseSet) -> ScalarField {
    let [px, py, pz] = phases.components();
    let values = (0..px.values().len())
        .into_par_iter()
        .map(|n| kind.eval([px.values()[n], py.values()[n], pz.values()[n]]))
        .collect();
    ScalarField::from_parts(px.grid().clone(), values)
}

/// `c = √2 · p · sin(π t / p)` for a wall thickness `0 < t < p/2`.
pub fn level_from_thickness(t: f64, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::param("p", format!("must be positive, got {p}")));
    }
    if !(t.is_finite() && t > 0.0 && t < p / 2.0) {
        return Err(Error::param(
            "t",
            format!("thickness must lie in (0, p/2) = (0, {}), got {t}", p / 2.0),
        ));
    }
    Ok(SQRT_2 * p * (PI * t / p).sin())
}

/// Inverse of [`level_from_thickness`]: `t = (p/π) · asin(c / (√2 p))`.
pub fn thickness_from_level(c: f64, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::param("p", format!("must be positive, got {p}")));
    }
    let s = c / (SQRT_2 * p);
    if !(s.is_finite() && s > 0.0 && s <= 1.0) {
        return Err(Error::param(
            "c",
            format!(
                "level must lie in (0, sqrt(2) p] = (0, {}], got {c}",
                SQRT_2 * p
            ),
        ));
    }
    Ok(p / PI * s.asin())
}

/// Where the cell size entering `c/P` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum LevelMode {
    /// Resolve `c` and divide by the local `P(r)` at every sample.
    #[default]
    Local,
    /// One fixed `c/P` computed from a reference size, e.g. the mid-range size.
    Global { reference_p: f64 },
}

/// Wall specification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LevelSpec {
    /// Explicit level parameter `c`.
    Level { c: f64, mode: LevelMode },
    /// Wall thickness `t`, converted with [`level_from_thickness`].
    Thickness { t: f64, mode: LevelMode },
}

impl LevelSpec {
    pub fn mode(&self) -> LevelMode {
        match *self {
            LevelSpec::Level { mode, .. } | LevelSpec::Thickness { mode, .. } => mode,
        }
    }

    /// Band half-width `c/P` for a sample of size `p`.
    pub fn band(&self, p: f64) -> Result<f64> {
        let p = match self.mode() {
            LevelMode::Local => p,
            LevelMode::Global { reference_p } => reference_p,
        };
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::param("p", format!("must be positive, got {p}")));
        }
        let c = match *self {
            LevelSpec::Level { c, .. } => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::param("c", format!("must be positive, got {c}")));
                }
                c
            }
            LevelSpec::Thickness { t, .. } => level_from_thickness(t, p)?,
        };
        Ok(c / p)
    }
}

/// `G = c(r)/P(r) − |F(r)|`; the solid is `G ≥ 0`.
pub fn solid_indicator(
    f: &ScalarField,
    level: &LevelSpec,
    size: &SizeField,
) -> Result<ScalarField> {
    f.grid()
        .ensure_same(size.grid(), "implicit values vs size field")?;
    let band: Vec<f64> = match level.mode() {
        LevelMode::Global { .. } => vec![level.band(1.0)?; 1],
        LevelMode::Local => size
            .field()
            .values()
            .par_iter()
            .map(|&p| level.band(p))
            .collect::<Result<_>>()?,
    };
    let values = f
        .values()
        .par_iter()
        .enumerate()
        .map(|(n, v)| band[if band.len() == 1 { 0 } else { n }] - v.abs())
        .collect();
    Ok(ScalarField::from_parts(f.grid().clone(), values))
}

/// Quartic `a P̄⁴ + b P̄³ + c P̄² + d P̄ + e`, coefficients highest degree first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropertyPoly {
    pub coefficients: [f64; 5],
}

impl PropertyPoly {
    pub const YOUNGS_MODULUS: PropertyPoly = PropertyPoly {
        coefficients: [624.0, -1662.0, 1672.0, -841.0, 263.0],
    };
    pub const POISSON_RATIO: PropertyPoly = PropertyPoly {
        coefficients: [-0.058, 0.151, -0.146, 0.073, 0.326],
    };
    pub const DENSITY: PropertyPoly = PropertyPoly {
        coefficients: [521.0, -1442.0, 1555.0, -887.0, 341.0],
    };

    pub fn eval(&self, pbar: f64) -> f64 {
        self.coefficients.iter().fold(0.0, |acc, &c| acc * pbar + c)
    }

    pub fn derivative(&self, pbar: f64) -> f64 {
        let [a, b, c, d, _] = self.coefficients;
        ((4.0 * a * pbar + 3.0 * b) * pbar + 2.0 * c) * pbar + d
    }
}

/// Homogenized properties of a lattice with normalized cell size `P̄`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveProperties {
    /// Young's modulus in MPa.
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Density in kg/m³.
    pub density: f64,
    /// `P̄` lay outside the fitted range `[0, 1]`.
    pub extrapolated: bool,
}

pub fn effective_properties(pbar: f64) -> EffectiveProperties {
    EffectiveProperties {
        youngs_modulus: PropertyPoly::YOUNGS_MODULUS.eval(pbar),
        poisson_ratio: PropertyPoly::POISSON_RATIO.eval(pbar),
        density: PropertyPoly::DENSITY.eval(pbar),
        extrapolated: !(0.0..=1.0).contains(&pbar),
    }
}
