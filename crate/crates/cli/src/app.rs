//! Subcommands. Each reads its inputs, runs one stage or the whole pipeline,
//! and writes its outputs into `--out`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use vdlo::fem::{gauss_point_stresses, solve_static, LoadCase};
use vdlo::lp::SimplexSolver;
use vdlo::recovery::{build_smoothing_system, recover_nodal_stresses, GaussStressField, NodalStressField, SamplingRule};
use vdlo::scenarios::{InclusionParams, KalthoffParams, PrandtlParams, ScenarioKind};
use vdlo::vdlo::{
    limit_quantity, run_pseudostatic, run_snapshot, static_snapshot, Snapshot, Status, VdloOptions, VdloResult,
};
use vdlo::{Mesh, MeshFile};

use crate::config::{Overrides, RunConfig, ScenarioSpec, StressSource};
use crate::error::CliError;
use crate::files::{create_dir, read_json, read_mesh, write_bytes, write_json};
use crate::render::{render_pattern_svg, render_stress_ppm, ChannelRange, SvgStyle};

#[derive(Debug, Parser)]
#[command(name = "vdlo", version, about = "Upper-bound limit analysis by discontinuity layout optimization")]
pub struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized scenario layouts.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline from a config file.
    Run(RunArgs),
    /// Elastic solve: element stresses and displacements.
    Fem(FemArgs),
    /// Least-squares recovery of nodal stresses from element stresses.
    Smooth(SmoothArgs),
    /// Limit analysis of a nodal stress field.
    Vdlo(VdloArgs),
    /// Stress image and failure-pattern drawing.
    Render(RenderArgs),
    /// Writes a built-in scenario as mesh, load and config files.
    Scenario(ScenarioArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Longest candidate discontinuity (m).
    #[arg(long)]
    pub max_length: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FemArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub load: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// JSON array of per-element `[σx, σy, τxy]`.
    #[arg(long)]
    pub element_stress: PathBuf,
    #[arg(long, value_enum, default_value_t = Sampling::ThreePoint)]
    pub sampling: Sampling,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Sampling {
    Centroid,
    ThreePoint,
}

impl From<Sampling> for SamplingRule {
    fn from(s: Sampling) -> Self {
        match s {
            Sampling::Centroid => SamplingRule::Centroid,
            Sampling::ThreePoint => SamplingRule::ThreePoint,
        }
    }
}

#[derive(Debug, Args)]
pub struct VdloArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Nodal stress field, from `smooth` or any external solver.
    #[arg(long)]
    pub stress: PathBuf,
    #[arg(long)]
    pub max_length: Option<f64>,
    /// Pattern cut-off relative to the largest slip.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Applied magnitude; prints the limit value λ times this.
    #[arg(long)]
    pub applied: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Nodal stress field for `stress.ppm`.
    #[arg(long)]
    pub stress: Option<PathBuf>,
    /// σx range as `lo:hi`; defaults to the field's extent.
    #[arg(long)]
    pub red: Option<RangeArg>,
    /// σy range as `lo:hi`.
    #[arg(long)]
    pub green: Option<RangeArg>,
    /// τxy range as `lo:hi`.
    #[arg(long)]
    pub blue: Option<RangeArg>,
    #[arg(long, default_value_t = 400)]
    pub width: usize,
    /// Result JSON for `pattern.svg`.
    #[arg(long)]
    pub result: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeArg(pub ChannelRange);

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        Ok(RangeArg(ChannelRange::new(parse(lo)?, parse(hi)?)))
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(value_enum)]
    pub name: ScenarioName,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScenarioName {
    Prandtl,
    MatrixInclusion,
    Kalthoff,
}

/// One pseudostatic snapshot in `series.json`.
#[derive(Serialize)]
struct SeriesRecord<'a> {
    time: f64,
    #[serde(flatten)]
    result: &'a VdloResult,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Run(a) => cmd_run(&a, cli.seed),
        Command::Fem(a) => cmd_fem(&a),
        Command::Smooth(a) => cmd_smooth(&a),
        Command::Vdlo(a) => cmd_vdlo(&a),
        Command::Render(a) => cmd_render(&a),
        Command::Scenario(a) => cmd_scenario(&a, cli.seed),
    }
}

fn report(result: &VdloResult, applied: Option<f64>) {
    let t = &result.timing;
    info!("{} candidates, LP {} x {}, {} iterations, {:.2} s", t.candidates, t.lp_rows, t.lp_vars, t.iterations, t.seconds);
    match (result.status, result.lambda) {
        (Status::Failure, Some(l)) => {
            print!("lambda = {l:.6}");
            if let Some(a) = applied {
                print!("  limit = {:.6e}", limit_quantity(result, a).unwrap_or(f64::INFINITY));
            }
            println!("  ({} pattern segments)", result.pattern.len());
        }
        _ => println!("lambda = inf (stable)"),
    }
}

fn write_svg(path: &Path, mesh: &Mesh, result: &VdloResult) -> Result<(), CliError> {
    let svg = render_pattern_svg(mesh, result, &SvgStyle::default())?;
    write_bytes(path, svg.as_bytes())
}

pub fn cmd_run(args: &RunArgs, seed: Option<u64>) -> Result<(), CliError> {
    let config = RunConfig::load(&args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let overrides = Overrides { out: args.out.clone(), max_length: args.max_length, seed };
    let r = config.resolve(base, &overrides)?;
    create_dir(&r.out)?;
    info!("{}: {} nodes, {} elements", r.name, r.mesh.node_count(), r.mesh.element_count());
    match (&r.analysis, &r.source) {
        (ScenarioKind::Static, source) => {
            let snapshot = match source {
                StressSource::Load(load) => static_snapshot(&r.mesh, load, r.options.sampling)?,
                StressSource::Imported(field) => Snapshot::imported(field.clone()),
            };
            let result = run_snapshot(&r.mesh, &snapshot, &r.options)?;
            write_json(&r.out.join("result.json"), &result)?;
            write_json(&r.out.join("stress.json"), &snapshot.stress)?;
            write_svg(&r.out.join("pattern.svg"), &r.mesh, &result)?;
            report(&result, r.applied);
        }
        (ScenarioKind::Pseudostatic { dynamic, times }, StressSource::Load(load)) => {
            let series = run_pseudostatic(&r.mesh, load, dynamic, times, &r.options, &SimplexSolver::default())?;
            let records: Vec<SeriesRecord> = series.iter().map(|(time, result)| SeriesRecord { time: *time, result }).collect();
            write_json(&r.out.join("series.json"), &records)?;
            for (k, (time, result)) in series.iter().enumerate() {
                write_svg(&r.out.join(format!("pattern_{k:03}.svg")), &r.mesh, result)?;
                print!("t = {time:.4e}  ");
                report(result, r.applied);
            }
        }
        (ScenarioKind::Pseudostatic { .. }, StressSource::Imported(_)) => {
            unreachable!("rejected by validation")
        }
    }
    Ok(())
}

pub fn cmd_fem(args: &FemArgs) -> Result<(), CliError> {
    let mesh = read_mesh(&args.mesh)?;
    let load: LoadCase = read_json(&args.load)?;
    let state = solve_static(&mesh, &load)?;
    create_dir(&args.out)?;
    let displacement: Vec<[f64; 2]> = state.u.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    write_json(&args.out.join("element_stress.json"), &gauss_point_stresses(&mesh, &state))?;
    write_json(&args.out.join("displacement.json"), &displacement)?;
    info!("static solve: {} nodes, {} elements", mesh.node_count(), mesh.element_count());
    Ok(())
}

pub fn cmd_smooth(args: &SmoothArgs) -> Result<(), CliError> {
    let mesh = read_mesh(&args.mesh)?;
    let element_stress: Vec<[f64; 3]> = read_json(&args.element_stress)?;
    if element_stress.len() != mesh.element_count() {
        return Err(CliError::Config(format!(
            "{} element stresses for {} elements",
            element_stress.len(),
            mesh.element_count()
        )));
    }
    let system = build_smoothing_system(&mesh, args.sampling.into())?;
    let field = recover_nodal_stresses(&system, &GaussStressField::from_elements(system.rule, &element_stress))?;
    create_dir(&args.out)?;
    write_json(&args.out.join("stress.json"), &field)
}

pub fn cmd_vdlo(args: &VdloArgs) -> Result<(), CliError> {
    let mesh = read_mesh(&args.mesh)?;
    let field: NodalStressField = read_json(&args.stress)?;
    let mut options = VdloOptions::default();
    if let Some(m) = args.max_length {
        if !(m > 0.0) {
            return Err(CliError::Config(format!("--max-length must be positive, got {m}")));
        }
        options.candidates.max_length = Some(m);
    }
    if let Some(t) = args.threshold {
        if !(0.0..1.0).contains(&t) {
            return Err(CliError::Config(format!("--threshold must lie in [0, 1), got {t}")));
        }
        options.threshold = t;
    }
    if let Some(a) = args.applied {
        if !(a.is_finite() && a > 0.0) {
            return Err(CliError::Config(format!("--applied must be positive, got {a}")));
        }
    }
    let result = run_snapshot(&mesh, &Snapshot::imported(field), &options)?;
    create_dir(&args.out)?;
    write_json(&args.out.join("result.json"), &result)?;
    report(&result, args.applied);
    Ok(())
}

pub fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    if args.stress.is_none() && args.result.is_none() {
        return Err(CliError::Config("nothing to render: give --stress and/or --result".into()));
    }
    let mesh = read_mesh(&args.mesh)?;
    create_dir(&args.out)?;
    if let Some(path) = &args.stress {
        let field: NodalStressField = read_json(path)?;
        let pick = |arg: Option<RangeArg>, k| arg.map(|r| r.0).unwrap_or_else(|| ChannelRange::covering(&field, k));
        let ranges = [pick(args.red, 0), pick(args.green, 1), pick(args.blue, 2)];
        let image = render_stress_ppm(&mesh, &field, ranges, args.width)?;
        write_bytes(&args.out.join("stress.ppm"), &image)?;
    }
    if let Some(path) = &args.result {
        let result: VdloResult = read_json(path)?;
        write_svg(&args.out.join("pattern.svg"), &mesh, &result)?;
    }
    Ok(())
}

pub fn cmd_scenario(args: &ScenarioArgs, seed: Option<u64>) -> Result<(), CliError> {
    let spec = match args.name {
        ScenarioName::Prandtl => ScenarioSpec::Prandtl(PrandtlParams::default()),
        ScenarioName::MatrixInclusion => ScenarioSpec::MatrixInclusion(InclusionParams::default()),
        ScenarioName::Kalthoff => ScenarioSpec::Kalthoff(KalthoffParams::default()),
    };
    let spec = match seed {
        Some(s) => spec.with_seed(s),
        None => spec,
    };
    let s = spec.build()?;
    create_dir(&args.out)?;
    write_json(&args.out.join("mesh.json"), &MeshFile::from_mesh(&s.mesh))?;
    write_json(&args.out.join("load.json"), &s.load)?;
    let config = RunConfig {
        mesh: Some("mesh.json".into()),
        load: Some("load.json".into()),
        analysis: Some(s.kind),
        vdlo: Some(s.options),
        applied: Some(s.applied),
        ..RunConfig::default()
    };
    write_json(&args.out.join("config.json"), &config)?;
    info!("{}: {} nodes, {} elements", s.name, s.mesh.node_count(), s.mesh.element_count());
    Ok(())
}
