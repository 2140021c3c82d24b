//! Run configuration files.
//!
//! A config names a mesh (a file or a built-in scenario) and exactly one
//! stress source: a load case for the elastic solver, or an imported nodal
//! stress field. Relative paths resolve against the config's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vdlo::fem::LoadCase;
use vdlo::recovery::NodalStressField;
use vdlo::scenarios::{
    kalthoff, matrix_inclusion, prandtl, InclusionParams, KalthoffParams, PrandtlParams, Scenario, ScenarioKind,
};
use vdlo::vdlo::VdloOptions;
use vdlo::Mesh;

use crate::error::CliError;
use crate::files::{read_json, read_mesh};

/// A built-in scenario with its parameters; omitted fields take defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Prandtl(PrandtlParams),
    MatrixInclusion(InclusionParams),
    Kalthoff(KalthoffParams),
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<Scenario, CliError> {
        Ok(match self {
            ScenarioSpec::Prandtl(p) => prandtl(p)?,
            ScenarioSpec::MatrixInclusion(p) => matrix_inclusion(p)?,
            ScenarioSpec::Kalthoff(p) => kalthoff(p)?,
        })
    }

    /// Applies `--seed` where the scenario has a random layout.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let ScenarioSpec::MatrixInclusion(p) = &mut self {
            p.seed = seed;
        }
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    /// Load case for the elastic solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<PathBuf>,
    /// Imported nodal stress field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stress: Option<PathBuf>,
    /// Static unless given; scenarios bring their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<ScenarioKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vdlo: Option<VdloOptions>,
    /// Applied load or displacement magnitude, reported as λ times this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applied: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub max_length: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub enum StressSource {
    Load(LoadCase),
    Imported(NodalStressField),
}

/// A config with its files read and checked.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub name: String,
    pub mesh: Mesh,
    pub source: StressSource,
    pub analysis: ScenarioKind,
    pub options: VdloOptions,
    pub applied: Option<f64>,
    pub out: PathBuf,
}

pub const DEFAULT_OUT: &str = "vdlo_out";

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        read_json(path)
    }

    /// Checks the source rules without touching the file system.
    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.mesh, &self.scenario) {
            (Some(_), Some(_)) => return Err(CliError::Config("both `mesh` and `scenario` given; use one".into())),
            (None, None) => return Err(CliError::Config("no mesh: give `mesh` or `scenario`".into())),
            _ => {}
        }
        let mut sources = Vec::new();
        if self.scenario.is_some() {
            sources.push("scenario");
        }
        if self.load.is_some() {
            sources.push("load");
        }
        if self.stress.is_some() {
            sources.push("stress");
        }
        if sources.len() != 1 {
            return Err(CliError::Config(if sources.is_empty() {
                "no stress source: give `load` or `stress`".into()
            } else {
                format!("exactly one stress source allowed, found {}", sources.join(" and "))
            }));
        }
        if self.stress.is_some() && matches!(self.analysis, Some(ScenarioKind::Pseudostatic { .. })) {
            return Err(CliError::Config("an imported stress field is a single snapshot; use a static analysis".into()));
        }
        if let Some(a) = self.applied {
            if !(a.is_finite() && a > 0.0) {
                return Err(CliError::Config(format!("`applied` must be positive, got {a}")));
            }
        }
        Ok(())
    }

    /// Reads mesh and stress source; `base` is the config's directory.
    pub fn resolve(&self, base: &Path, overrides: &Overrides) -> Result<Resolved, CliError> {
        self.validate()?;
        let at = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        let out = match (&overrides.out, &self.out) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => at(o),
            (None, None) => PathBuf::from(DEFAULT_OUT),
        };
        let (name, mesh, source, mut analysis, mut options, mut applied) = match &self.scenario {
            Some(spec) => {
                let spec = match overrides.seed {
                    Some(seed) => spec.clone().with_seed(seed),
                    None => spec.clone(),
                };
                let s = spec.build()?;
                (s.name, s.mesh, StressSource::Load(s.load), s.kind, s.options, Some(s.applied))
            }
            None => {
                let mesh_path = at(self.mesh.as_ref().expect("validated"));
                let mesh = read_mesh(&mesh_path)?;
                let source = match (&self.load, &self.stress) {
                    (Some(l), None) => StressSource::Load(read_json(&at(l))?),
                    (None, Some(s)) => StressSource::Imported(read_json(&at(s))?),
                    _ => unreachable!("validated"),
                };
                let name = mesh_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (name, mesh, source, ScenarioKind::Static, VdloOptions::default(), None)
            }
        };
        if let Some(a) = &self.analysis {
            analysis = a.clone();
        }
        if let Some(o) = &self.vdlo {
            options = o.clone();
        }
        if let Some(m) = overrides.max_length {
            if !(m > 0.0) {
                return Err(CliError::Config(format!("--max-length must be positive, got {m}")));
            }
            options.candidates.max_length = Some(m);
        }
        if self.applied.is_some() {
            applied = self.applied;
        }
        Ok(Resolved { name, mesh, source, analysis, options, applied, out })
    }
}
