//! Factor of safety and failure pattern for stress snapshots, and
//! pseudostatic sequences of snapshots.

use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{assign_work_coefficients, enumerate_candidates, Candidate, CandidateError, CandidateOptions};
use crate::fem::{gauss_point_stresses, solve_static, DynamicConfig, FemError, LoadCase, Newmark};
use crate::lp::{assemble_lp, LpError, LpSolver, LpStatus, SimplexSolver, VdloLp};
use crate::mesh::Mesh;
use crate::recovery::{
    build_smoothing_system, recover_nodal_stresses, GaussStressField, NodalStressField, RecoveryError, SamplingRule,
    SmoothingSystem,
};

#[derive(Debug, Error)]
pub enum VdloError {
    #[error(transparent)]
    Candidates(#[from] CandidateError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("snapshot has {got} nodal stresses, mesh has {expected} nodes")]
    SnapshotLength { expected: usize, got: usize },
    #[error("LP reported an unbounded mechanism; some inner candidate has zero dissipation")]
    Unbounded,
    #[error("internal consistency: {0}")]
    Internal(String),
    #[error("structure is stable: no finite limit value")]
    NoFiniteLimit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Computed,
    Imported,
}

/// A frozen nodal stress state.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub stress: NodalStressField,
    pub time: Option<f64>,
    pub provenance: Provenance,
}

impl Snapshot {
    pub fn computed(stress: NodalStressField) -> Self {
        Snapshot { stress, time: None, provenance: Provenance::Computed }
    }

    pub fn imported(stress: NodalStressField) -> Self {
        Snapshot { stress, time: None, provenance: Provenance::Imported }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdloOptions {
    /// Pattern cut-off relative to the largest slip.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default, flatten)]
    pub candidates: CandidateOptions,
    #[serde(default)]
    pub sampling: SamplingRule,
}

fn default_threshold() -> f64 {
    1e-6
}

impl Default for VdloOptions {
    fn default() -> Self {
        VdloOptions { threshold: default_threshold(), candidates: CandidateOptions::default(), sampling: SamplingRule::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Failure,
    Stable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub a: usize,
    pub b: usize,
    /// |ζ_t|
    pub slip: f64,
    /// ζ_n
    pub opening: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub candidates: usize,
    pub lp_rows: usize,
    pub lp_vars: usize,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdloResult {
    pub status: Status,
    /// Factor of safety; `None` when stable.
    pub lambda: Option<f64>,
    #[serde(rename = "dW")]
    pub dw: f64,
    #[serde(rename = "dE")]
    pub de: f64,
    pub pattern: Vec<PatternEntry>,
    pub timing: Timing,
}

impl VdloResult {
    fn stable(timing: Timing) -> Self {
        VdloResult { status: Status::Stable, lambda: None, dw: 0.0, de: 0.0, pattern: Vec::new(), timing }
    }
}

/// `λ · applied`, the limit load or displacement.
pub fn limit_quantity(result: &VdloResult, applied: f64) -> Result<f64, VdloError> {
    match (result.status, result.lambda) {
        (Status::Failure, Some(l)) => Ok(l * applied),
        _ => Err(VdloError::NoFiniteLimit),
    }
}

/// Inner candidates with |ζ_t| above `threshold · max|ζ_t|`, largest first.
pub fn failure_pattern(
    lp: &VdloLp,
    x: &[f64],
    candidates: &[Candidate],
    threshold: f64,
) -> Result<Vec<PatternEntry>, VdloError> {
    let slips: Vec<(usize, f64, f64)> = lp
        .layout
        .inner
        .iter()
        .map(|&i| {
            let [zt, zn] = lp.zeta(x, i);
            (i, zt.abs(), zn)
        })
        .collect();
    let max = slips.iter().fold(0.0f64, |m, s| m.max(s.1));
    let max_open = slips.iter().fold(0.0f64, |m, s| m.max(s.2.abs()));
    if !(max > 0.0) && !(max_open > 0.0) {
        return Err(VdloError::Internal("optimal mechanism has no active discontinuity".into()));
    }
    let mut pattern: Vec<(usize, f64, f64)> = slips.into_iter().filter(|s| s.1 > threshold * max).collect();
    pattern.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(pattern
        .into_iter()
        .map(|(i, slip, opening)| PatternEntry { a: candidates[i].a, b: candidates[i].b, slip, opening: opening + 0.0 })
        .collect())
}

/// Work terms recomputed from a raw solution: (δW, δE).
pub fn work_terms(lp: &VdloLp, x: &[f64], candidates: &[Candidate]) -> (f64, f64) {
    let mut dw = 0.0;
    let mut de = 0.0;
    for (k, &i) in lp.layout.inner.iter().enumerate() {
        let c = &candidates[i];
        let [zt, zn] = lp.zeta(x, i);
        let [pp, pm] = lp.p(x, k);
        dw += c.g_t * zt + c.g_n * zn;
        de += c.ce * (pp + pm);
    }
    (dw, de)
}

/// Assembles and solves the LP for candidates whose work coefficients are set.
/// Returns the result and, when a mechanism exists, the program and solution.
pub fn solve_candidates(
    n_nodes: usize,
    candidates: &[Candidate],
    threshold: f64,
    solver: &dyn LpSolver,
) -> Result<(VdloResult, Option<(VdloLp, Vec<f64>)>), VdloError> {
    let start = Instant::now();
    let mut timing = Timing { candidates: candidates.len(), ..Timing::default() };
    let lp = match assemble_lp(n_nodes, candidates) {
        Ok(lp) => lp,
        Err(LpError::NoDrivingWork) => {
            timing.seconds = start.elapsed().as_secs_f64();
            return Ok((VdloResult::stable(timing), None));
        }
        Err(e) => return Err(e.into()),
    };
    timing.lp_rows = lp.lp.n_rows();
    timing.lp_vars = lp.lp.n_vars();
    let sol = solver.solve(&lp.lp)?;
    timing.iterations = sol.iterations;
    info!(
        "LP: {} candidates, {} rows, {} vars, {} iterations, status {:?}",
        candidates.len(),
        timing.lp_rows,
        timing.lp_vars,
        sol.iterations,
        sol.status
    );
    match sol.status {
        LpStatus::Infeasible => {
            timing.seconds = start.elapsed().as_secs_f64();
            Ok((VdloResult::stable(timing), None))
        }
        LpStatus::Unbounded => Err(VdloError::Unbounded),
        LpStatus::Optimal => {
            let (dw, de) = work_terms(&lp, &sol.x, candidates);
            let lambda = sol.objective;
            if (de / dw - lambda).abs() > 1e-8 * lambda.abs().max(1e-300) && lambda.abs() > 1e-300 {
                return Err(VdloError::Internal(format!("δE/δW = {} but LP objective {}", de / dw, lambda)));
            }
            let pattern = failure_pattern(&lp, &sol.x, candidates, threshold)?;
            timing.seconds = start.elapsed().as_secs_f64();
            let result = VdloResult { status: Status::Failure, lambda: Some(lambda), dw, de, pattern, timing };
            Ok((result, Some((lp, sol.x))))
        }
    }
}

/// Stress-independent part of the analysis: candidate geometry and materials.
pub struct Analysis<'m> {
    pub mesh: &'m Mesh,
    pub candidates: Vec<Candidate>,
    pub options: VdloOptions,
}

impl<'m> Analysis<'m> {
    pub fn new(mesh: &'m Mesh, options: VdloOptions) -> Result<Self, VdloError> {
        let candidates = enumerate_candidates(mesh, &options.candidates)?;
        info!("{} candidates ({} inner)", candidates.len(), candidates.iter().filter(|c| c.is_inner()).count());
        Ok(Analysis { mesh, candidates, options })
    }

    /// Candidates with work coefficients for `snapshot`.
    pub fn loaded_candidates(&self, snapshot: &Snapshot) -> Result<Vec<Candidate>, VdloError> {
        if snapshot.stress.len() != self.mesh.node_count() {
            return Err(VdloError::SnapshotLength { expected: self.mesh.node_count(), got: snapshot.stress.len() });
        }
        let mut cands = self.candidates.clone();
        assign_work_coefficients(self.mesh, &snapshot.stress, &mut cands)?;
        Ok(cands)
    }

    pub fn run(&self, snapshot: &Snapshot, solver: &dyn LpSolver) -> Result<VdloResult, VdloError> {
        let cands = self.loaded_candidates(snapshot)?;
        Ok(solve_candidates(self.mesh.node_count(), &cands, self.options.threshold, solver)?.0)
    }
}

/// Full pipeline for one snapshot with the built-in solver.
pub fn run_snapshot(mesh: &Mesh, snapshot: &Snapshot, options: &VdloOptions) -> Result<VdloResult, VdloError> {
    Analysis::new(mesh, options.clone())?.run(snapshot, &SimplexSolver::default())
}

/// Smoothed nodal stresses of the static solution of `load`.
pub fn static_snapshot(mesh: &Mesh, load: &LoadCase, rule: SamplingRule) -> Result<Snapshot, VdloError> {
    let state = solve_static(mesh, load)?;
    let system = build_smoothing_system(mesh, rule)?;
    Ok(Snapshot::computed(smooth(&system, &gauss_point_stresses(mesh, &state))?))
}

fn smooth(system: &SmoothingSystem, element_stresses: &[[f64; 3]]) -> Result<NodalStressField, VdloError> {
    Ok(recover_nodal_stresses(system, &GaussStressField::from_elements(system.rule, element_stresses))?)
}

/// Nodal stress snapshots along a Newmark time history started from the
/// static equilibrium of `load`. `times` are rounded to the nearest step.
pub fn pseudostatic_snapshots(
    mesh: &Mesh,
    load: &LoadCase,
    config: &DynamicConfig,
    times: &[f64],
    rule: SamplingRule,
) -> Result<Vec<Snapshot>, VdloError> {
    let mut steps: Vec<(usize, usize)> =
        times.iter().enumerate().map(|(k, &t)| ((t / config.dt).round().max(0.0) as usize, k)).collect();
    steps.sort();
    let system = build_smoothing_system(mesh, rule)?;
    let integrator = Newmark::new(mesh, load, config.params())?;
    let u0 = solve_static(mesh, load)?.u;
    let mut state = integrator.initial_state(&u0, &vec![0.0; u0.len()])?;
    let mut step = 0usize;
    let mut out: Vec<Option<Snapshot>> = vec![None; times.len()];
    for &(target, k) in &steps {
        while step < target {
            state = integrator.step(&state);
            step += 1;
        }
        let stress = smooth(&system, &gauss_point_stresses(mesh, &state))?;
        out[k] = Some(Snapshot { stress, time: Some(state.t), provenance: Provenance::Computed });
    }
    Ok(out.into_iter().map(|s| s.expect("every time visited")).collect())
}

/// Steps the FEM model, smooths each scheduled snapshot and runs the limit
/// analysis on each; results are ordered as `times`.
pub fn run_pseudostatic(
    mesh: &Mesh,
    load: &LoadCase,
    config: &DynamicConfig,
    times: &[f64],
    options: &VdloOptions,
    solver: &dyn LpSolver,
) -> Result<Vec<(f64, VdloResult)>, VdloError> {
    let snapshots = pseudostatic_snapshots(mesh, load, config, times, options.sampling)?;
    let analysis = Analysis::new(mesh, options.clone())?;
    snapshots
        .par_iter()
        .map(|s| Ok((s.time.unwrap_or(0.0), analysis.run(s, solver)?)))
        .collect()
}
