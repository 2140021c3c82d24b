//! Linear-elastic constant-strain-triangle FEM: static solves, Newmark time
//! stepping and element stresses.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{orient, Point};
use crate::linalg::{norm_inf, CsrMatrix, LinalgError, SkylineCholesky};
use crate::mesh::{AnalysisMode, Material, Mesh};

#[derive(Debug, Error)]
pub enum FemError {
    #[error("element {0} is degenerate")]
    DegenerateElement(usize),
    #[error("stiffness matrix is singular: boundary conditions leave a rigid-body mode (near dof {dof})")]
    Singular { dof: usize },
    #[error("invalid load case: {0}")]
    InvalidLoad(String),
    #[error("invalid time stepping: {0}")]
    InvalidStep(String),
    #[error("equilibrium residual {residual:e} exceeds tolerance")]
    Residual { residual: f64 },
    #[error("cannot read load file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("load parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

fn singular(err: LinalgError, free: &[usize]) -> FemError {
    match err {
        LinalgError::NotPositiveDefinite { row, .. } => FemError::Singular { dof: free.get(row).copied().unwrap_or(row) },
        LinalgError::Dimension { .. } => FemError::Singular { dof: 0 },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Both,
}

impl Axis {
    fn components(self) -> &'static [usize] {
        match self {
            Axis::X => &[0],
            Axis::Y => &[1],
            Axis::Both => &[0, 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalForce {
    pub node: usize,
    /// Force (N).
    pub value: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prescribed {
    pub node: usize,
    pub axis: Axis,
    /// Displacement (m).
    #[serde(default)]
    pub value: f64,
}

/// Prescribed velocity (m/s) on one node; optionally ramped linearly from zero
/// over `ramp` seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityBc {
    pub node: usize,
    pub axis: Axis,
    pub value: f64,
    #[serde(default)]
    pub ramp: f64,
}

impl VelocityBc {
    pub fn velocity(&self, t: f64) -> f64 {
        if self.ramp > 0.0 && t < self.ramp {
            self.value * t.max(0.0) / self.ramp
        } else {
            self.value
        }
    }

    /// Displacement accumulated from time 0 to `t`.
    pub fn displacement(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        if self.ramp > 0.0 {
            if t < self.ramp {
                0.5 * self.value * t * t / self.ramp
            } else {
                self.value * (t - 0.5 * self.ramp)
            }
        } else {
            self.value * t
        }
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        if self.ramp > 0.0 && t < self.ramp {
            self.value / self.ramp
        } else {
            0.0
        }
    }
}

/// Uniform traction (N/m² of edge area) on a boundary edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeTraction {
    pub edge: [usize; 2],
    pub value: [f64; 2],
}

/// Loads and kinematic constraints for one analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    #[serde(default)]
    pub forces: Vec<NodalForce>,
    #[serde(default)]
    pub fixed: Vec<Prescribed>,
    #[serde(default)]
    pub velocity_bc: Vec<VelocityBc>,
    /// Body acceleration (m/s²), applied through the element densities.
    #[serde(default)]
    pub gravity: [f64; 2],
    #[serde(default = "unit_thickness")]
    pub thickness: f64,
    #[serde(default)]
    pub tractions: Vec<EdgeTraction>,
}

fn unit_thickness() -> f64 {
    1.0
}

impl Default for LoadCase {
    fn default() -> Self {
        LoadCase {
            forces: Vec::new(),
            fixed: Vec::new(),
            velocity_bc: Vec::new(),
            gravity: [0.0, 0.0],
            thickness: 1.0,
            tractions: Vec::new(),
        }
    }
}

/// How a constrained degree of freedom moves.
#[derive(Clone, Copy, Debug)]
enum Constraint<'a> {
    Displacement(f64),
    Velocity(&'a VelocityBc),
}

impl LoadCase {
    pub fn load(path: impl AsRef<Path>) -> Result<LoadCase, FemError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| FemError::Io { path: path.display().to_string(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Multiplies every load and prescribed motion by `k`.
    pub fn scaled(&self, k: f64) -> LoadCase {
        let mut out = self.clone();
        out.forces.iter_mut().for_each(|f| f.value = [f.value[0] * k, f.value[1] * k]);
        out.fixed.iter_mut().for_each(|p| p.value *= k);
        out.velocity_bc.iter_mut().for_each(|v| v.value *= k);
        out.gravity = [self.gravity[0] * k, self.gravity[1] * k];
        out.tractions.iter_mut().for_each(|t| t.value = [t.value[0] * k, t.value[1] * k]);
        out
    }

    fn constraints(&self, n_nodes: usize) -> Result<BTreeMap<usize, Constraint<'_>>, FemError> {
        if !(self.thickness > 0.0) {
            return Err(FemError::InvalidLoad("thickness must be positive".into()));
        }
        let check = |node: usize| {
            if node >= n_nodes {
                Err(FemError::InvalidLoad(format!("node {node} does not exist")))
            } else {
                Ok(())
            }
        };
        let mut map = BTreeMap::new();
        for p in &self.fixed {
            check(p.node)?;
            for &c in p.axis.components() {
                if map.insert(2 * p.node + c, Constraint::Displacement(p.value)).is_some() {
                    return Err(FemError::InvalidLoad(format!("dof {} of node {} constrained twice", c, p.node)));
                }
            }
        }
        for v in &self.velocity_bc {
            check(v.node)?;
            for &c in v.axis.components() {
                if map.insert(2 * v.node + c, Constraint::Velocity(v)).is_some() {
                    return Err(FemError::InvalidLoad(format!("dof {} of node {} constrained twice", c, v.node)));
                }
            }
        }
        for f in &self.forces {
            check(f.node)?;
        }
        for t in &self.tractions {
            check(t.edge[0])?;
            check(t.edge[1])?;
        }
        Ok(map)
    }
}

/// Nodal kinematics at one instant; vectors are interleaved `[x0, y0, x1, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FemState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub t: f64,
}

impl FemState {
    pub fn at_rest(n_nodes: usize) -> FemState {
        FemState { u: vec![0.0; 2 * n_nodes], v: vec![0.0; 2 * n_nodes], a: vec![0.0; 2 * n_nodes], t: 0.0 }
    }
}

/// Elasticity matrix in Voigt notation [σx, σy, τxy].
pub fn elasticity_matrix(material: &Material, mode: AnalysisMode) -> [[f64; 3]; 3] {
    let e = material.youngs_modulus;
    let nu = material.poisson_ratio;
    match mode {
        AnalysisMode::PlaneStress => {
            let k = e / (1.0 - nu * nu);
            [[k, k * nu, 0.0], [k * nu, k, 0.0], [0.0, 0.0, k * (1.0 - nu) / 2.0]]
        }
        AnalysisMode::PlaneStrain => {
            let k = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
            [[k * (1.0 - nu), k * nu, 0.0], [k * nu, k * (1.0 - nu), 0.0], [0.0, 0.0, k * (1.0 - 2.0 * nu) / 2.0]]
        }
    }
}

/// Strain–displacement matrix of a CST and its area.
pub fn strain_displacement(p: [Point; 3]) -> Option<([[f64; 6]; 3], f64)> {
    let area2 = orient(p[0], p[1], p[2]);
    if !(area2.abs() > 0.0) {
        return None;
    }
    let mut b = [[0.0; 6]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let bi = (p[j].y - p[k].y) / area2;
        let ci = (p[k].x - p[j].x) / area2;
        b[0][2 * i] = bi;
        b[1][2 * i + 1] = ci;
        b[2][2 * i] = ci;
        b[2][2 * i + 1] = bi;
    }
    Some((b, 0.5 * area2.abs()))
}

/// CST stiffness `t·A·BᵀDB`, DOFs ordered `[x0, y0, x1, y1, x2, y2]`.
pub fn element_stiffness(
    p: [Point; 3],
    material: &Material,
    thickness: f64,
    mode: AnalysisMode,
) -> Option<[[f64; 6]; 6]> {
    let (b, area) = strain_displacement(p)?;
    let d = elasticity_matrix(material, mode);
    let mut db = [[0.0; 6]; 3];
    for r in 0..3 {
        for c in 0..6 {
            db[r][c] = (0..3).map(|k| d[r][k] * b[k][c]).sum();
        }
    }
    let mut k = [[0.0; 6]; 6];
    for r in 0..6 {
        for c in 0..6 {
            k[r][c] = thickness * area * (0..3).map(|s| b[s][r] * db[s][c]).sum::<f64>();
        }
    }
    // Exact symmetry.
    for r in 0..6 {
        for c in 0..r {
            let avg = 0.5 * (k[r][c] + k[c][r]);
            k[r][c] = avg;
            k[c][r] = avg;
        }
    }
    Some(k)
}

/// Consistent CST mass matrix `ρtA/12 · (1 + δ_ij)` per displacement component.
pub fn element_mass(p: [Point; 3], density: f64, thickness: f64) -> [[f64; 6]; 6] {
    let area = 0.5 * orient(p[0], p[1], p[2]).abs();
    let m0 = density * thickness * area / 12.0;
    let mut m = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            let v = if i == j { 2.0 * m0 } else { m0 };
            m[2 * i][2 * j] = v;
            m[2 * i + 1][2 * j + 1] = v;
        }
    }
    m
}

/// Assembled global stiffness and mass.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
}

impl FemSystem {
    pub fn assemble(mesh: &Mesh, thickness: f64) -> Result<FemSystem, FemError> {
        let ndof = 2 * mesh.node_count();
        let mut kt = Vec::with_capacity(36 * mesh.element_count());
        let mut mt = Vec::with_capacity(36 * mesh.element_count());
        for (e, tri) in mesh.elements().iter().enumerate() {
            let p = mesh.element_points(e);
            let mat = mesh.element_material(e);
            let ke = element_stiffness(p, mat, thickness, mesh.mode()).ok_or(FemError::DegenerateElement(e))?;
            let me = element_mass(p, mat.density, thickness);
            for r in 0..6 {
                let gr = 2 * tri[r / 2] + r % 2;
                for c in 0..6 {
                    let gc = 2 * tri[c / 2] + c % 2;
                    kt.push((gr, gc, ke[r][c]));
                    if me[r][c] != 0.0 {
                        mt.push((gr, gc, me[r][c]));
                    }
                }
            }
        }
        Ok(FemSystem {
            stiffness: CsrMatrix::from_triplets(ndof, ndof, &kt),
            mass: CsrMatrix::from_triplets(ndof, ndof, &mt),
        })
    }

    pub fn ndof(&self) -> usize {
        self.stiffness.nrows
    }

    /// ½ vᵀMv + ½ uᵀKu.
    pub fn energy(&self, state: &FemState) -> f64 {
        let ku = self.stiffness.mul_vec(&state.u);
        let mv = self.mass.mul_vec(&state.v);
        0.5 * dot(&state.u, &ku) + 0.5 * dot(&state.v, &mv)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// External load vector from nodal forces, edge tractions and body force.
pub fn load_vector(mesh: &Mesh, load: &LoadCase) -> Vec<f64> {
    let mut f = vec![0.0; 2 * mesh.node_count()];
    for nf in &load.forces {
        f[2 * nf.node] += nf.value[0];
        f[2 * nf.node + 1] += nf.value[1];
    }
    for tr in &load.tractions {
        let [a, b] = tr.edge;
        let half = 0.5 * mesh.node(a).distance(mesh.node(b)) * load.thickness;
        for n in [a, b] {
            f[2 * n] += tr.value[0] * half;
            f[2 * n + 1] += tr.value[1] * half;
        }
    }
    if load.gravity != [0.0, 0.0] {
        for (e, tri) in mesh.elements().iter().enumerate() {
            let w = mesh.element_material(e).density * load.thickness * mesh.element_area(e) / 3.0;
            for &n in tri {
                f[2 * n] += w * load.gravity[0];
                f[2 * n + 1] += w * load.gravity[1];
            }
        }
    }
    f
}

/// Solves K u = f with prescribed displacements eliminated exactly.
/// Velocity-controlled DOFs are held at their displacement at t = 0 (zero).
pub fn solve_static(mesh: &Mesh, load: &LoadCase) -> Result<FemState, FemError> {
    let constraints = load.constraints(mesh.node_count())?;
    let system = FemSystem::assemble(mesh, load.thickness)?;
    let ndof = system.ndof();
    let mut u = vec![0.0; ndof];
    for (&dof, c) in &constraints {
        u[dof] = match c {
            Constraint::Displacement(v) => *v,
            Constraint::Velocity(bc) => bc.displacement(0.0),
        };
    }
    let free: Vec<usize> = (0..ndof).filter(|d| !constraints.contains_key(d)).collect();
    let f = load_vector(mesh, load);
    let k = &system.stiffness;
    let rhs: Vec<f64> = free
        .iter()
        .map(|&d| f[d] - k.row(d).filter(|(c, _)| constraints.contains_key(c)).map(|(c, v)| v * u[c]).sum::<f64>())
        .collect();
    if !free.is_empty() {
        let kff = k.submatrix(&free);
        let chol = SkylineCholesky::factor(&kff).map_err(|e| singular(e, &free))?;
        let x = chol.solve(&rhs);
        // Equilibrium check on the free DOFs.
        let r: Vec<f64> = kff.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let scale = norm_inf(&rhs).max(f64::MIN_POSITIVE);
        if norm_inf(&r) > 1e-8 * scale && norm_inf(&rhs) > 0.0 {
            return Err(FemError::Residual { residual: norm_inf(&r) / scale });
        }
        for (&d, xv) in free.iter().zip(x) {
            u[d] = xv;
        }
    }
    Ok(FemState { u, v: vec![0.0; ndof], a: vec![0.0; ndof], t: 0.0 })
}

/// Newmark parameters and step size. Defaults are the average-acceleration
/// scheme, α = 0.25, δ = 0.5.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewmarkParams {
    pub dt: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_alpha() -> f64 {
    0.25
}

fn default_delta() -> f64 {
    0.5
}

impl NewmarkParams {
    pub fn average_acceleration(dt: f64) -> Self {
        NewmarkParams { dt, alpha: 0.25, delta: 0.5 }
    }
}

/// Time-history driver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicConfig {
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default = "one")]
    pub snapshot_every: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn one() -> usize {
    1
}

impl DynamicConfig {
    pub fn params(&self) -> NewmarkParams {
        NewmarkParams { dt: self.dt, alpha: self.alpha, delta: self.delta }
    }
}

/// Newmark integrator with the effective stiffness factored once.
pub struct Newmark<'a> {
    params: NewmarkParams,
    load: &'a LoadCase,
    system: FemSystem,
    constraints: BTreeMap<usize, Constraint<'a>>,
    free: Vec<usize>,
    /// Global dof → position in `free`, or `usize::MAX`.
    free_index: Vec<usize>,
    k_eff: CsrMatrix,
    factor: Option<SkylineCholesky>,
    force: Vec<f64>,
}

impl<'a> Newmark<'a> {
    pub fn new(mesh: &Mesh, load: &'a LoadCase, params: NewmarkParams) -> Result<Self, FemError> {
        if !(params.dt > 0.0) {
            return Err(FemError::InvalidStep("dt must be positive".into()));
        }
        if !(params.alpha > 0.0) || !(params.delta >= 0.0) {
            return Err(FemError::InvalidStep("alpha must be positive and delta non-negative".into()));
        }
        let constraints = load.constraints(mesh.node_count())?;
        let system = FemSystem::assemble(mesh, load.thickness)?;
        let ndof = system.ndof();
        let c0 = 1.0 / (params.alpha * params.dt * params.dt);
        let mut triplets = Vec::with_capacity(system.stiffness.nnz());
        for r in 0..ndof {
            for (c, v) in system.stiffness.row(r) {
                triplets.push((r, c, v));
            }
            for (c, v) in system.mass.row(r) {
                triplets.push((r, c, c0 * v));
            }
        }
        let k_eff = CsrMatrix::from_triplets(ndof, ndof, &triplets);
        let free: Vec<usize> = (0..ndof).filter(|d| !constraints.contains_key(d)).collect();
        let mut free_index = vec![usize::MAX; ndof];
        for (k, &d) in free.iter().enumerate() {
            free_index[d] = k;
        }
        let factor = if free.is_empty() {
            None
        } else {
            Some(SkylineCholesky::factor(&k_eff.submatrix(&free)).map_err(|e| singular(e, &free))?)
        };
        let force = load_vector(mesh, load);
        Ok(Newmark { params, load, system, constraints, free, free_index, k_eff, factor, force })
    }

    pub fn system(&self) -> &FemSystem {
        &self.system
    }

    pub fn params(&self) -> NewmarkParams {
        self.params
    }

    fn prescribed(&self, dof: usize, t: f64) -> (f64, f64, f64) {
        match self.constraints[&dof] {
            Constraint::Displacement(v) => (v, 0.0, 0.0),
            Constraint::Velocity(bc) => (bc.displacement(t), bc.velocity(t), bc.acceleration(t)),
        }
    }

    /// State at t = 0 from given free-DOF displacements and velocities, with
    /// the acceleration solved from M a = f − K u.
    pub fn initial_state(&self, u0: &[f64], v0: &[f64]) -> Result<FemState, FemError> {
        let ndof = self.system.ndof();
        let mut state = FemState { u: u0.to_vec(), v: v0.to_vec(), a: vec![0.0; ndof], t: 0.0 };
        for &dof in self.constraints.keys() {
            let (u, v, a) = self.prescribed(dof, 0.0);
            state.u[dof] = u;
            state.v[dof] = v;
            state.a[dof] = a;
        }
        if self.free.is_empty() {
            return Ok(state);
        }
        let ku = self.system.stiffness.mul_vec(&state.u);
        let ma = self.system.mass.mul_vec(&state.a);
        let rhs: Vec<f64> = self.free.iter().map(|&d| self.force[d] - ku[d] - ma[d]).collect();
        if norm_inf(&rhs) > 0.0 {
            let mff = self.system.mass.submatrix(&self.free);
            let chol = SkylineCholesky::factor(&mff).map_err(|e| singular(e, &self.free))?;
            for (&d, a) in self.free.iter().zip(chol.solve(&rhs)) {
                state.a[d] = a;
            }
        }
        Ok(state)
    }

    /// Advances one step of size `dt`.
    pub fn step(&self, state: &FemState) -> FemState {
        let NewmarkParams { dt, alpha, delta } = self.params;
        let c0 = 1.0 / (alpha * dt * dt);
        let c2 = 1.0 / (alpha * dt);
        let c3 = 1.0 / (2.0 * alpha) - 1.0;
        let t1 = state.t + dt;
        let ndof = self.system.ndof();

        let mut next = FemState { u: vec![0.0; ndof], v: vec![0.0; ndof], a: vec![0.0; ndof], t: t1 };
        for &dof in self.constraints.keys() {
            let (u, v, a) = self.prescribed(dof, t1);
            next.u[dof] = u;
            next.v[dof] = v;
            next.a[dof] = a;
        }
        if let Some(factor) = &self.factor {
            // M_ff (c0 u_n + c2 v_n + c3 a_n) restricted to free rows, plus
            // couplings to the prescribed motion at t+dt.
            let mut hist = vec![0.0; ndof];
            for &d in &self.free {
                hist[d] = c0 * state.u[d] + c2 * state.v[d] + c3 * state.a[d];
            }
            let rhs: Vec<f64> = self
                .free
                .iter()
                .map(|&d| {
                    let mut s = self.force[d];
                    for (c, m) in self.system.mass.row(d) {
                        if self.free_index[c] != usize::MAX {
                            s += m * hist[c];
                        } else {
                            s -= m * next.a[c];
                        }
                    }
                    for (c, k) in self.system.stiffness.row(d) {
                        if self.free_index[c] == usize::MAX {
                            s -= k * next.u[c];
                        }
                    }
                    s
                })
                .collect();
            let x = factor.solve(&rhs);
            for (&d, u1) in self.free.iter().zip(x) {
                let a1 = c0 * (u1 - state.u[d]) - c2 * state.v[d] - c3 * state.a[d];
                next.u[d] = u1;
                next.a[d] = a1;
                next.v[d] = state.v[d] + dt * ((1.0 - delta) * state.a[d] + delta * a1);
            }
        }
        next
    }

    /// Effective stiffness K + M/(αΔt²) over all DOFs.
    pub fn effective_stiffness(&self) -> &CsrMatrix {
        &self.k_eff
    }

    pub fn load(&self) -> &LoadCase {
        self.load
    }
}

/// One Newmark step from `state`; builds and factors the effective stiffness.
/// Prefer [`Newmark`] when stepping repeatedly.
pub fn newmark_step(
    mesh: &Mesh,
    state: &FemState,
    params: NewmarkParams,
    load: &LoadCase,
) -> Result<FemState, FemError> {
    if state.u.len() != 2 * mesh.node_count() {
        return Err(FemError::InvalidStep("state length does not match mesh".into()));
    }
    Ok(Newmark::new(mesh, load, params)?.step(state))
}

/// Constant CST stress `D·B·u_e` per element.
pub fn gauss_point_stresses(mesh: &Mesh, state: &FemState) -> Vec<[f64; 3]> {
    assert_eq!(state.u.len(), 2 * mesh.node_count(), "state length does not match mesh");
    (0..mesh.element_count())
        .map(|e| {
            let tri = mesh.elements()[e];
            let (b, _) = strain_displacement(mesh.element_points(e)).expect("validated element");
            let d = elasticity_matrix(mesh.element_material(e), mesh.mode());
            let ue: Vec<f64> = (0..6).map(|k| state.u[2 * tri[k / 2] + k % 2]).collect();
            let strain: Vec<f64> = (0..3).map(|r| (0..6).map(|c| b[r][c] * ue[c]).sum()).collect();
            let mut s = [0.0; 3];
            for r in 0..3 {
                s[r] = (0..3).map(|k| d[r][k] * strain[k]).sum();
            }
            s
        })
        .collect()
}
