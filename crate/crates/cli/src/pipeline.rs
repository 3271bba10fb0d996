//! The pipeline commands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};
use tpms_dehom::field::trilinear_upsample;
use tpms_dehom::io::{read_fields, write_fields};
use tpms_dehom::mesh::{export_mesh, extract_surface, read_stl, BlockLayout};
use tpms_dehom::phase::{
    build_phases, residual_report, residual_sweep, write_residual_csv, PmTarget, ResidualTarget,
    SweepRow,
};
use tpms_dehom::size_field::{mesh_distance_field, sigmoid_size, uniform_size};
use tpms_dehom::tpms::{solid_indicator, tpms_value};
use tpms_dehom::{
    Axis, DistanceSource, GridSpec, LevelSpec, Method, PhaseSet, ScalarField, SizeField,
    SurfaceMesh, TpmsKind,
};

use crate::config::{MeshPlan, Plan, SizeSource};

pub const SIZE_FILE: &str = "size.fld";
pub const PHASES_FILE: &str = "phases.fld";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const BENCH_FILE: &str = "bench_residuals.csv";
pub const MESH_STEM: &str = "mesh";

const PHASE_NAMES: [&str; 3] = ["phi_x", "phi_y", "phi_z"];

/// A failure tagged with the pipeline stage it came from.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: anyhow::Error,
}

pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|e| StageError {
            stage,
            error: e.into(),
        })
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

pub fn size_field(plan: &Plan) -> Result<SizeField> {
    let grid = GridSpec::new(plan.dims, plan.extents)?;
    let s = &plan.size;
    let source = match &s.source {
        SizeSource::Uniform(p) => return Ok(uniform_size(&grid, *p)?),
        SizeSource::Ramp => DistanceSource::AxisRamp(Axis::X),
        SizeSource::Stripes => DistanceSource::Stripes,
        SizeSource::Radial => DistanceSource::Radial,
        SizeSource::Mesh {
            path,
            normalization,
        } => surface_distance(&grid, path, *normalization)?,
    };
    Ok(sigmoid_size(&grid, &source, s.p_min, s.p_max, s.kappa)?)
}

fn surface_distance(
    grid: &GridSpec,
    path: &Path,
    normalization: Option<f64>,
) -> Result<DistanceSource> {
    let bytes = std::fs::read(path).with_context(|| format!("reading mesh {}", path.display()))?;
    let mesh = read_stl(&bytes).with_context(|| format!("parsing mesh {}", path.display()))?;
    match normalization {
        Some(n) => Ok(mesh_distance_field(grid, &mesh, n)?),
        None => {
            let DistanceSource::Sampled(raw) = mesh_distance_field(grid, &mesh, 1.0)? else {
                unreachable!("mesh distances are sampled")
            };
            let longest = raw.max();
            if longest <= 0.0 {
                bail!("every cell center lies on the surface mesh");
            }
            Ok(DistanceSource::Sampled(raw.map(|d| d / longest)?))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_field_file(path: &Path, fields: &[(&str, &ScalarField)]) -> Result<()> {
    let mut w = create(path)?;
    write_fields(fields, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = create(path)?;
    write_residual_csv(rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_mesh_file(dir: &Path, mesh: &SurfaceMesh, plan: &MeshPlan) -> Result<PathBuf> {
    let path = dir.join(format!("{MESH_STEM}.{}", plan.format.extension()));
    let mut w = create(&path)?;
    w.write_all(&export_mesh(mesh, plan.format))?;
    w.flush()?;
    Ok(path)
}

fn row_json(row: &SweepRow) -> Value {
    json!({
        "method": row.method.name(),
        "alpha": row.alpha,
        "res_x": row.energies[0],
        "res_y": row.energies[1],
        "res_z": row.energies[2],
        "total": row.total(),
    })
}

fn mesh_json(mesh: &SurfaceMesh) -> Value {
    json!({
        "vertices": mesh.vertices().len(),
        "triangles": mesh.triangles().len(),
        "unmatched_edges": mesh.unmatched_edges(),
        "volume": mesh.signed_volume(),
    })
}

/// Upsample phases and sizes, evaluate the solid indicator and extract it.
pub fn solid_mesh(
    phases: &[ScalarField; 3],
    size: &SizeField,
    kind: TpmsKind,
    level: &LevelSpec,
    plan: &MeshPlan,
) -> Result<SurfaceMesh> {
    let factor = [plan.upsample; 3];
    let fine = phases
        .iter()
        .map(|p| trilinear_upsample(p, factor))
        .collect::<tpms_dehom::Result<Vec<_>>>()?;
    let fine: [ScalarField; 3] = fine.try_into().map_err(|_| anyhow!("three phase fields"))?;
    let fine_size = SizeField::new(
        trilinear_upsample(size.field(), factor)?,
        size.p_min(),
        size.p_max(),
        size.provenance(),
    )?;
    let phases = PhaseSet::new(fine, Method::Poisson, None, None)?;
    let f = tpms_value(kind, &phases);
    let g = solid_indicator(&f, level, &fine_size)?;
    let dims = g.grid().dims();
    let layout = match plan.blocks {
        Some(counts) => BlockLayout::split(dims, counts)?,
        None => BlockLayout::by_size(dims, plan.block_cells)?,
    };
    Ok(extract_surface(&g, &layout)?)
}

pub fn cmd_size(plan: &Plan) -> StageResult<Value> {
    let size = size_field(plan).stage("size")?;
    let path = plan.out_dir.join(SIZE_FILE);
    write_field_file(&path, &[("size", size.field())]).stage("output")?;
    Ok(json!({
        "command": "size",
        "provenance": size.provenance(),
        "min": size.field().min(),
        "max": size.field().max(),
        "files": [path],
    }))
}

pub fn cmd_dehom(plan: &Plan) -> StageResult<Value> {
    let size = size_field(plan).stage("size")?;
    let spec = plan.smoothing().stage("config")?;
    let phases = build_phases(&size, plan.method, &spec, plan.origin).stage("phases")?;
    let target = match (plan.method, plan.pm_target) {
        (Method::Pm, PmTarget::Smoothed) => ResidualTarget::Smoothed(spec),
        _ => ResidualTarget::Raw,
    };
    let report = residual_report(&phases, &size, target).stage("residuals")?;
    let row = SweepRow::from(&report);

    let phases_path = plan.out_dir.join(PHASES_FILE);
    let csv_path = plan.out_dir.join(RESIDUALS_FILE);
    let c = phases.components();
    write_field_file(
        &phases_path,
        &[
            ("size", size.field()),
            (PHASE_NAMES[0], &c[0]),
            (PHASE_NAMES[1], &c[1]),
            (PHASE_NAMES[2], &c[2]),
        ],
    )
    .stage("output")?;
    write_csv(&csv_path, std::slice::from_ref(&row)).stage("output")?;
    let mut files = vec![phases_path, csv_path];

    let mut summary = json!({
        "command": "dehom",
        "residuals": row_json(&row),
    });
    if plan.mesh.enabled {
        let mesh = solid_mesh(c, &size, plan.kind, &plan.level, &plan.mesh).stage("mesh")?;
        files.push(write_mesh_file(&plan.out_dir, &mesh, &plan.mesh).stage("output")?);
        summary["mesh"] = mesh_json(&mesh);
    }
    summary["files"] = json!(files);
    Ok(summary)
}

pub fn cmd_bench_residuals(plan: &Plan) -> StageResult<Value> {
    let size = size_field(plan).stage("size")?;
    let rows = residual_sweep(
        &size,
        &plan.alphas,
        plan.sigma_rule,
        plan.origin,
        plan.pm_target,
    )
    .stage("residuals")?;
    let path = plan.out_dir.join(BENCH_FILE);
    write_csv(&path, &rows).stage("output")?;
    Ok(json!({
        "command": "bench-residuals",
        "rows": rows.iter().map(row_json).collect::<Vec<_>>(),
        "files": [path],
    }))
}

/// Phases and sizes previously written by `dehom`.
pub fn read_phase_file(path: &Path) -> Result<([ScalarField; 3], SizeField)> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (_, fields) = read_fields(BufReader::new(f))?;
    let take = |name: &str| {
        fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f.clone())
            .ok_or_else(|| anyhow!("{} has no field `{name}`", path.display()))
    };
    let size = SizeField::from_samples(take("size")?)?;
    let phases = [
        take(PHASE_NAMES[0])?,
        take(PHASE_NAMES[1])?,
        take(PHASE_NAMES[2])?,
    ];
    Ok((phases, size))
}

pub fn cmd_mesh_only(
    phases: &[ScalarField; 3],
    size: &SizeField,
    kind: TpmsKind,
    level: &LevelSpec,
    mesh: &MeshPlan,
    out_dir: &Path,
) -> StageResult<Value> {
    let m = solid_mesh(phases, size, kind, level, mesh).stage("mesh")?;
    let path = write_mesh_file(out_dir, &m, mesh).stage("output")?;
    Ok(json!({
        "command": "mesh-only",
        "mesh": mesh_json(&m),
        "files": [path],
    }))
}
