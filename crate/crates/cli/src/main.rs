mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{resolve, resolve_mesh, resolve_solid, Config};
use pipeline::{Stage, StageError, StageResult};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "TPMS_DEHOM_THREADS";

#[derive(Parser)]
#[command(
    name = "tpms-dehom",
    version,
    about = "Size-graded TPMS lattices from a cell-size field"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and write the size field.
    Size(Overrides),
    /// Build phases, residuals and the solid mesh.
    Dehom(Overrides),
    /// Residual energies of PM over a list of alphas against the Poisson phases.
    BenchResiduals {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated smoothing factors.
        #[arg(long)]
        alphas: Option<String>,
    },
    /// Mesh phases written by `dehom`.
    MeshOnly {
        #[command(flatten)]
        overrides: Overrides,
        /// Phase file produced by `dehom`.
        #[arg(long)]
        phases: PathBuf,
    },
    /// Print the fully resolved configuration as TOML.
    DumpConfig(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// 1d, 1d-discrete, 3d, bone, bunny or mesh-distance.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_parser = triple::<usize>)]
    dims: Option<[usize; 3]>,
    #[arg(long, value_parser = triple::<f64>, allow_hyphen_values = true)]
    extents: Option<[f64; 3]>,
    /// Divide every grid dimension by this factor.
    #[arg(long)]
    coarsen: Option<usize>,
    /// ramp, stripes, radial, mesh or uniform.
    #[arg(long)]
    source: Option<String>,
    /// Constant cell size; selects the uniform source.
    #[arg(long)]
    uniform: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    /// STL surface for the mesh-distance size field.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Length dividing the surface distance.
    #[arg(long)]
    normalization: Option<f64>,
    /// pm or poisson.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// per-unit-length or grid-max.
    #[arg(long)]
    sigma_rule: Option<String>,
    #[arg(long, value_parser = triple::<f64>, allow_hyphen_values = true)]
    origin: Option<[f64; 3]>,
    /// raw or smoothed.
    #[arg(long)]
    pm_target: Option<String>,
    /// gyroid or schwarz-p.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    thickness: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    /// local or global.
    #[arg(long)]
    level_mode: Option<String>,
    #[arg(long)]
    reference_size: Option<f64>,
    /// Skip mesh extraction.
    #[arg(long)]
    no_mesh: bool,
    #[arg(long)]
    upsample: Option<usize>,
    /// Fine cells per block edge.
    #[arg(long)]
    block_cells: Option<usize>,
    #[arg(long, value_parser = triple::<usize>)]
    blocks: Option<[usize; 3]>,
    /// stl-binary, stl-ascii or obj.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `a,b,c`.
fn triple<T: std::str::FromStr>(text: &str) -> Result<[T; 3], String> {
    let parts = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| format!("invalid value `{s}`"))
        })
        .collect::<Result<Vec<T>, _>>()?;
    parts
        .try_into()
        .map_err(|_| format!("expected three comma-separated values, got `{text}`"))
}

impl Overrides {
    fn to_config(&self) -> Config {
        let mut c = Config {
            preset: self.preset.clone(),
            ..Config::default()
        };
        c.grid.dims = self.dims;
        c.grid.extents = self.extents;
        c.grid.coarsen = self.coarsen;
        c.size.source = self.source.clone();
        if self.uniform.is_some() {
            c.size.source = Some("uniform".into());
            c.size.value = self.uniform;
        }
        c.size.p_min = self.p_min;
        c.size.p_max = self.p_max;
        c.size.kappa = self.kappa;
        c.size.mesh = self.mesh.clone();
        c.size.normalization = self.normalization;
        c.phase.method = self.method.clone();
        c.phase.alpha = self.alpha;
        c.phase.sigma_rule = self.sigma_rule.clone();
        c.phase.origin = self.origin;
        c.phase.pm_target = self.pm_target.clone();
        c.solid.kind = self.kind.clone();
        c.solid.thickness = self.thickness;
        c.solid.level = self.level;
        c.solid.level_mode = self.level_mode.clone();
        c.solid.reference_size = self.reference_size;
        c.mesh.enabled = self.no_mesh.then_some(false);
        c.mesh.upsample = self.upsample;
        c.mesh.block_cells = self.block_cells;
        c.mesh.blocks = self.blocks;
        c.mesh.format = self.format.clone();
        c.output.dir = self.out.clone();
        c
    }

    /// The config file, if any, with the flags laid over it.
    fn merged(&self) -> anyhow::Result<Config> {
        let base = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        Ok(base.overlay(self.to_config()))
    }
}

fn parse_alphas(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .with_context(|| format!("invalid alpha `{s}`"))
        })
        .collect()
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")
}

fn run(command: Command) -> StageResult<serde_json::Value> {
    configure_threads().stage("config")?;
    match command {
        Command::Size(o) => {
            pipeline::cmd_size(&resolve(&o.merged().stage("config")?).stage("config")?)
        }
        Command::Dehom(o) => {
            pipeline::cmd_dehom(&resolve(&o.merged().stage("config")?).stage("config")?)
        }
        Command::BenchResiduals { overrides, alphas } => {
            let mut config = overrides.merged().stage("config")?;
            if let Some(text) = alphas {
                config.bench.alphas = Some(parse_alphas(&text).stage("config")?);
            }
            pipeline::cmd_bench_residuals(&resolve(&config).stage("config")?)
        }
        Command::MeshOnly { overrides, phases } => {
            let config = overrides.merged().stage("config")?;
            let (phases, size) = pipeline::read_phase_file(&phases).stage("input")?;
            let (kind, level) =
                resolve_solid(&config.solid, size.p_min(), size.p_max()).stage("config")?;
            let mesh = resolve_mesh(&config.mesh).stage("config")?;
            let out = config.output.dir.unwrap_or_else(|| PathBuf::from("."));
            pipeline::cmd_mesh_only(&phases, &size, kind, &level, &mesh, &out)
        }
        Command::DumpConfig(o) => {
            let plan = resolve(&o.merged().stage("config")?).stage("config")?;
            let text = plan.to_config().to_toml().stage("config")?;
            print!("{text}");
            Ok(serde_json::Value::Null)
        }
    }
}

fn error_record(stage: &str, error: &anyhow::Error) -> String {
    json!({
        "status": "error",
        "stage": stage,
        "message": error.to_string(),
        "causes": error.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
    })
    .to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!(
                "{}",
                error_record("arguments", &anyhow!(e.to_string().trim().to_string()))
            );
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(serde_json::Value::Null) => ExitCode::SUCCESS,
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(StageError { stage, error }) => {
            eprintln!("{}", error_record(stage, &error));
            ExitCode::FAILURE
        }
    }
}
