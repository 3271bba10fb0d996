//! Grid and sigmoid parameters of the reference examples.

use crate::error::{Error, Result};
use crate::field::{Axis, GridSpec};
use crate::size_field::{sigmoid_size, DistanceSource, SizeField};

/// Size-field generator of a preset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetSource {
    /// Sigmoid of the normalized x coordinate.
    Ramp,
    /// Six alternating bands along x.
    Stripes,
    /// Sigmoid of the normalized distance from the origin corner.
    Radial,
    /// Sigmoid of the distance to an external surface mesh.
    MeshDistance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub dims: [usize; 3],
    pub extents: [f64; 3],
    pub p_min: f64,
    pub p_max: f64,
    pub kappa: f64,
    pub source: PresetSource,
}

impl Preset {
    pub const ONE_D: Preset = Preset {
        name: "1d",
        dims: [360, 120, 120],
        extents: [3.0, 1.0, 1.0],
        p_min: 0.1,
        p_max: 0.5,
        kappa: 10.0,
        source: PresetSource::Ramp,
    };
    pub const ONE_D_DISCRETE: Preset = Preset {
        name: "1d-discrete",
        source: PresetSource::Stripes,
        ..Preset::ONE_D
    };
    pub const THREE_D: Preset = Preset {
        name: "3d",
        dims: [360, 360, 360],
        extents: [3.0, 3.0, 3.0],
        p_min: 0.1,
        p_max: 0.5,
        kappa: 10.0,
        source: PresetSource::Radial,
    };
    pub const BONE: Preset = Preset {
        name: "bone",
        dims: [678, 457, 1132],
        extents: [1.8, 1.2, 3.0],
        p_min: 0.02,
        p_max: 0.25,
        kappa: 5.0,
        source: PresetSource::MeshDistance,
    };
    pub const BUNNY: Preset = Preset {
        name: "bunny",
        dims: [792, 659, 793],
        extents: [3.0, 2.5, 3.0],
        p_min: 0.05,
        p_max: 0.5,
        kappa: 8.0,
        source: PresetSource::MeshDistance,
    };

    pub const ALL: [Preset; 5] = [
        Preset::ONE_D,
        Preset::ONE_D_DISCRETE,
        Preset::THREE_D,
        Preset::BONE,
        Preset::BUNNY,
    ];

    pub fn by_name(name: &str) -> Result<Preset> {
        Preset::ALL
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .copied()
            .ok_or_else(|| Error::param("preset", format!("unknown preset `{name}`")))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.dims, self.extents)
    }

    /// The preset with every grid dimension divided by `factor`.
    pub fn coarsened(&self, factor: usize) -> Result<Preset> {
        if factor == 0 {
            return Err(Error::param("factor", "must be >= 1"));
        }
        Ok(Preset {
            dims: self.dims.map(|d| d / factor),
            ..*self
        })
    }

    /// Distance source for the analytic generators; mesh-based presets need
    /// the caller to supply the sampled distances.
    pub fn distance_source(&self) -> Option<DistanceSource> {
        match self.source {
            PresetSource::Ramp => Some(DistanceSource::AxisRamp(Axis::X)),
            PresetSource::Stripes => Some(DistanceSource::Stripes),
            PresetSource::Radial => Some(DistanceSource::Radial),
            PresetSource::MeshDistance => None,
        }
    }

    /// Size field on the preset grid for the analytic generators.
    pub fn size_field(&self) -> Result<SizeField> {
        let source = self.distance_source().ok_or_else(|| {
            Error::param("preset", format!("`{}` needs a surface mesh", self.name))
        })?;
        sigmoid_size(&self.grid()?, &source, self.p_min, self.p_max, self.kappa)
    }
}
