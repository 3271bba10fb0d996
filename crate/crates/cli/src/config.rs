//! Pipeline configuration: TOML file, flag overrides and resolution to a plan.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use tpms_dehom::mesh::MeshFormat;
use tpms_dehom::phase::PmTarget;
use tpms_dehom::presets::{Preset, PresetSource};
use tpms_dehom::{LevelMode, LevelSpec, Method, SigmaRule, SmoothingSpec, TpmsKind};

/// Default wall thickness in model units.
pub const DEFAULT_THICKNESS: f64 = 0.5;
/// Thickness to mid-size ratio used when the default thickness does not fit
/// the smallest cell: `0.5 / 12.5`.
pub const DEFAULT_THICKNESS_RATIO: f64 = 0.04;
/// Fine cells per block edge.
pub const DEFAULT_BLOCK_CELLS: usize = 32;
pub const DEFAULT_ALPHAS: [f64; 7] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5];

/// Configuration as written by the user; every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub size: SizeConfig,
    #[serde(default)]
    pub phase: PhaseConfig,
    #[serde(default)]
    pub solid: SolidConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub bench: BenchConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extents: Option<[f64; 3]>,
    /// Divide every preset or configured dimension by this factor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarsen: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeConfig {
    /// `ramp`, `stripes`, `radial`, `mesh` or `uniform`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Cell size of the `uniform` source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// STL surface for the `mesh` source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    /// Length dividing the surface distance; the largest sampled distance
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// `per-unit-length` or `grid-max`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 3]>,
    /// `raw` or `smoothed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pm_target: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thickness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// `local` or `global`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_mode: Option<String>,
    /// Cell size used by the global level mode; the mid-range size when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_size: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upsample: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_cells: Option<usize>,
    /// Explicit block counts per axis; overrides `block_cells`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: Config =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let (Some(mesh), Some(dir)) = (&config.size.mesh, path.parent()) {
            if mesh.is_relative() {
                config.size.mesh = Some(dir.join(mesh));
            }
        }
        Ok(config)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: Config) -> Config {
        macro_rules! take {
            ($($section:ident . $field:ident),* $(,)?) => {
                $(if other.$section.$field.is_some() {
                    self.$section.$field = other.$section.$field;
                })*
            };
        }
        if other.preset.is_some() {
            self.preset = other.preset;
        }
        take!(
            grid.dims,
            grid.extents,
            grid.coarsen,
            size.source,
            size.p_min,
            size.p_max,
            size.kappa,
            size.value,
            size.mesh,
            size.normalization,
            phase.method,
            phase.alpha,
            phase.sigma_rule,
            phase.origin,
            phase.pm_target,
            solid.kind,
            solid.thickness,
            solid.level,
            solid.level_mode,
            solid.reference_size,
            mesh.enabled,
            mesh.upsample,
            mesh.block_cells,
            mesh.blocks,
            mesh.format,
            bench.alphas,
            output.dir,
        );
        self
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing config")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SizeSource {
    Ramp,
    Stripes,
    Radial,
    Mesh {
        path: PathBuf,
        normalization: Option<f64>,
    },
    Uniform(f64),
}

/// Fully resolved size-field generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SizePlan {
    pub source: SizeSource,
    pub p_min: f64,
    pub p_max: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshPlan {
    pub enabled: bool,
    pub upsample: usize,
    pub block_cells: usize,
    pub blocks: Option<[usize; 3]>,
    pub format: MeshFormat,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub dims: [usize; 3],
    pub extents: [f64; 3],
    pub size: SizePlan,
    pub method: Method,
    pub alpha: f64,
    pub sigma_rule: SigmaRule,
    pub origin: [f64; 3],
    pub pm_target: PmTarget,
    pub kind: TpmsKind,
    pub level: LevelSpec,
    pub mesh: MeshPlan,
    pub alphas: Vec<f64>,
    pub out_dir: PathBuf,
}

impl Plan {
    pub fn smoothing(&self) -> Result<SmoothingSpec> {
        Ok(SmoothingSpec::new(self.alpha, self.sigma_rule)?)
    }

    /// The plan written back as a config with every field explicit.
    pub fn to_config(&self) -> Config {
        let (source, value, mesh, normalization) = match &self.size.source {
            SizeSource::Ramp => ("ramp", None, None, None),
            SizeSource::Stripes => ("stripes", None, None, None),
            SizeSource::Radial => ("radial", None, None, None),
            SizeSource::Mesh {
                path,
                normalization,
            } => ("mesh", None, Some(path.clone()), *normalization),
            SizeSource::Uniform(p) => ("uniform", Some(*p), None, None),
        };
        let (thickness, level, mode) = match self.level {
            LevelSpec::Thickness { t, mode } => (Some(t), None, mode),
            LevelSpec::Level { c, mode } => (None, Some(c), mode),
        };
        let (level_mode, reference_size) = match mode {
            LevelMode::Local => ("local", None),
            LevelMode::Global { reference_p } => ("global", Some(reference_p)),
        };
        Config {
            preset: None,
            grid: GridConfig {
                dims: Some(self.dims),
                extents: Some(self.extents),
                coarsen: None,
            },
            size: SizeConfig {
                source: Some(source.into()),
                p_min: Some(self.size.p_min),
                p_max: Some(self.size.p_max),
                kappa: Some(self.size.kappa),
                value,
                mesh,
                normalization,
            },
            phase: PhaseConfig {
                method: Some(self.method.name().into()),
                alpha: Some(self.alpha),
                sigma_rule: Some(sigma_rule_name(self.sigma_rule).into()),
                origin: Some(self.origin),
                pm_target: Some(pm_target_name(self.pm_target).into()),
            },
            solid: SolidConfig {
                kind: Some(self.kind.name().into()),
                thickness,
                level,
                level_mode: Some(level_mode.into()),
                reference_size,
            },
            mesh: MeshConfig {
                enabled: Some(self.mesh.enabled),
                upsample: Some(self.mesh.upsample),
                block_cells: Some(self.mesh.block_cells),
                blocks: self.mesh.blocks,
                format: Some(format_name(self.mesh.format).into()),
            },
            bench: BenchConfig {
                alphas: Some(self.alphas.clone()),
            },
            output: OutputConfig {
                dir: Some(self.out_dir.clone()),
            },
        }
    }
}

fn sigma_rule_name(rule: SigmaRule) -> &'static str {
    match rule {
        SigmaRule::PerUnitLength => "per-unit-length",
        SigmaRule::GridMax => "grid-max",
    }
}

fn pm_target_name(t: PmTarget) -> &'static str {
    match t {
        PmTarget::Raw => "raw",
        PmTarget::Smoothed => "smoothed",
    }
}

fn format_name(f: MeshFormat) -> &'static str {
    match f {
        MeshFormat::StlBinary => "stl-binary",
        MeshFormat::StlAscii => "stl-ascii",
        MeshFormat::Obj => "obj",
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        bail!("{name} must be finite, got {v}")
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if finite(name, v)? > 0.0 {
        Ok(v)
    } else {
        bail!("{name} must be positive, got {v}")
    }
}

fn lookup_preset(name: &str) -> Result<Preset> {
    // The first surface-distance column of the reference table.
    let name = if name.eq_ignore_ascii_case("mesh-distance") {
        "bone"
    } else {
        name
    };
    Preset::by_name(name).map_err(|_| {
        let known: Vec<_> = Preset::ALL.iter().map(|p| p.name).collect();
        anyhow!("unknown preset `{name}`; expected one of {known:?} or mesh-distance")
    })
}

/// Validate and fill defaults.
pub fn resolve(config: &Config) -> Result<Plan> {
    let preset = config.preset.as_deref().map(lookup_preset).transpose()?;

    let mut dims = config
        .grid
        .dims
        .or(preset.map(|p| p.dims))
        .ok_or_else(|| anyhow!("grid.dims is required without a preset"))?;
    let extents = config
        .grid
        .extents
        .or(preset.map(|p| p.extents))
        .ok_or_else(|| anyhow!("grid.extents is required without a preset"))?;
    for (a, e) in extents.iter().enumerate() {
        positive(&format!("grid.extents[{a}]"), *e)?;
    }
    if let Some(f) = config.grid.coarsen {
        if f == 0 {
            bail!("grid.coarsen must be >= 1");
        }
        dims = dims.map(|d| d / f);
    }
    if let Some(d) = dims.iter().find(|&&d| d < 2) {
        bail!("every grid dimension must be >= 2, got {d} in {dims:?}");
    }

    let s = &config.size;
    let source_name = s.source.clone().or_else(|| {
        preset.map(|p| {
            match p.source {
                PresetSource::Ramp => "ramp",
                PresetSource::Stripes => "stripes",
                PresetSource::Radial => "radial",
                PresetSource::MeshDistance => "mesh",
            }
            .to_string()
        })
    });
    let source_name = source_name
        .or_else(|| s.value.map(|_| "uniform".to_string()))
        .ok_or_else(|| anyhow!("size.source is required without a preset"))?;
    let source = match source_name.to_ascii_lowercase().as_str() {
        "ramp" => SizeSource::Ramp,
        "stripes" => SizeSource::Stripes,
        "radial" => SizeSource::Radial,
        "mesh" | "mesh-distance" => SizeSource::Mesh {
            path: s.mesh.clone().ok_or_else(|| {
                anyhow!("the mesh-distance size field needs size.mesh (an STL path)")
            })?,
            normalization: s
                .normalization
                .map(|n| positive("size.normalization", n))
                .transpose()?,
        },
        "uniform" => SizeSource::Uniform(positive(
            "size.value",
            s.value
                .ok_or_else(|| anyhow!("the uniform size field needs size.value"))?,
        )?),
        other => bail!("unknown size.source `{other}`"),
    };
    let (p_min, p_max) = match source {
        SizeSource::Uniform(p) => (s.p_min.unwrap_or(p), s.p_max.unwrap_or(p)),
        _ => (
            s.p_min
                .or(preset.map(|p| p.p_min))
                .ok_or_else(|| anyhow!("size.p_min is required without a preset"))?,
            s.p_max
                .or(preset.map(|p| p.p_max))
                .ok_or_else(|| anyhow!("size.p_max is required without a preset"))?,
        ),
    };
    positive("size.p_min", p_min)?;
    positive("size.p_max", p_max)?;
    if p_max < p_min {
        bail!("size.p_max ({p_max}) must be >= size.p_min ({p_min})");
    }
    if let SizeSource::Uniform(p) = source {
        if p < p_min || p > p_max {
            bail!("size.value {p} lies outside [{p_min}, {p_max}]");
        }
    }
    let kappa = finite(
        "size.kappa",
        s.kappa.or(preset.map(|p| p.kappa)).unwrap_or(10.0),
    )?;

    let ph = &config.phase;
    let method: Method = ph.method.as_deref().unwrap_or("poisson").parse()?;
    let alpha = ph.alpha.unwrap_or(0.0);
    if !(alpha.is_finite() && alpha >= 0.0) {
        bail!("phase.alpha must be finite and >= 0, got {alpha}");
    }
    let sigma_rule = match ph.sigma_rule.as_deref().unwrap_or("per-unit-length") {
        "per-unit-length" => SigmaRule::PerUnitLength,
        "grid-max" => SigmaRule::GridMax,
        other => bail!("unknown phase.sigma_rule `{other}`; expected per-unit-length or grid-max"),
    };
    let origin = ph.origin.unwrap_or([0.0; 3]);
    for (a, o) in origin.iter().enumerate() {
        finite(&format!("phase.origin[{a}]"), *o)?;
    }
    let pm_target = match ph.pm_target.as_deref().unwrap_or("raw") {
        "raw" => PmTarget::Raw,
        "smoothed" => PmTarget::Smoothed,
        other => bail!("unknown phase.pm_target `{other}`; expected raw or smoothed"),
    };

    let (kind, level) = resolve_solid(&config.solid, p_min, p_max)?;
    let mesh = resolve_mesh(&config.mesh)?;

    let alphas = config
        .bench
        .alphas
        .clone()
        .unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        bail!("bench.alphas must be finite and >= 0, got {a}");
    }

    Ok(Plan {
        dims,
        extents,
        size: SizePlan {
            source,
            p_min,
            p_max,
            kappa,
        },
        method,
        alpha,
        sigma_rule,
        origin,
        pm_target,
        kind,
        level,
        mesh,
        alphas,
        out_dir: config
            .output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(".")),
    })
}

/// TPMS kind and wall specification for sizes in `[p_min, p_max]`.
pub fn resolve_solid(so: &SolidConfig, p_min: f64, p_max: f64) -> Result<(TpmsKind, LevelSpec)> {
    let kind: TpmsKind = so.kind.as_deref().unwrap_or("gyroid").parse()?;
    let mode = match so.level_mode.as_deref().unwrap_or("local") {
        "local" => LevelMode::Local,
        "global" => LevelMode::Global {
            reference_p: positive(
                "solid.reference_size",
                so.reference_size.unwrap_or(0.5 * (p_min + p_max)),
            )?,
        },
        other => bail!("unknown solid.level_mode `{other}`; expected local or global"),
    };
    let level = match (so.thickness, so.level) {
        (Some(_), Some(_)) => bail!("set either solid.thickness or solid.level, not both"),
        (None, Some(c)) => LevelSpec::Level {
            c: positive("solid.level", c)?,
            mode,
        },
        (Some(t), None) => LevelSpec::Thickness {
            t: positive("solid.thickness", t)?,
            mode,
        },
        (None, None) => {
            let smallest = match mode {
                LevelMode::Local => p_min,
                LevelMode::Global { reference_p } => reference_p,
            };
            let t = if DEFAULT_THICKNESS < smallest / 2.0 {
                DEFAULT_THICKNESS
            } else {
                DEFAULT_THICKNESS_RATIO * 0.5 * (p_min + p_max)
            };
            LevelSpec::Thickness { t, mode }
        }
    };
    let probe = match mode {
        LevelMode::Local => p_min,
        LevelMode::Global { reference_p } => reference_p,
    };
    level
        .band(probe)
        .context("solid thickness does not fit the smallest cell size")?;
    Ok((kind, level))
}

pub fn resolve_mesh(m: &MeshConfig) -> Result<MeshPlan> {
    let upsample = m.upsample.unwrap_or(1);
    let block_cells = m.block_cells.unwrap_or(DEFAULT_BLOCK_CELLS);
    if upsample == 0 || block_cells == 0 {
        bail!("mesh.upsample and mesh.block_cells must be >= 1");
    }
    if let Some(b) = m.blocks {
        if b.contains(&0) {
            bail!("mesh.blocks entries must be >= 1, got {b:?}");
        }
    }
    let format: MeshFormat = m.format.as_deref().unwrap_or("stl-binary").parse()?;
    Ok(MeshPlan {
        enabled: m.enabled.unwrap_or(true),
        upsample,
        block_cells,
        blocks: m.blocks,
        format,
    })
}
