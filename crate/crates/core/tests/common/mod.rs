//! Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vdlo::candidates::{Candidate, CandidateKind};
use vdlo::lp::VdloLp;
use vdlo::lp::{LpSolver, SimplexOptions, SimplexSolver};
use vdlo::mesh::{AnalysisMode, BoundaryTag, Material};
use vdlo::fem::{gauss_point_stresses, solve_static, Axis, EdgeTraction, LoadCase, Newmark, NewmarkParams, Prescribed};
use vdlo::recovery::{NodalStressField, SamplingRule};
use vdlo::scenarios::{matrix_inclusion, prandtl, InclusionParams, PrandtlParams, Scenario};
use vdlo::vdlo::{solve_candidates, static_snapshot, Analysis, Status, VdloOptions, VdloResult};
use vdlo::{Mesh, Point};

/// A candidate set on its own, without a mesh.
#[derive(Clone, Debug)]
pub struct Instance {
    pub n_nodes: usize,
    pub candidates: Vec<Candidate>,
}

fn candidate(points: &[Point], a: usize, b: usize, kind: CandidateKind) -> Candidate {
    let d = points[b] - points[a];
    let l = d.norm();
    let t = d * (1.0 / l);
    Candidate {
        a,
        b,
        t,
        n: Point::new(-t.y, t.x),
        l,
        kind,
        g_t: 0.0,
        g_n: 0.0,
        ce: 0.0,
        tan_phi: 0.0,
        crosses_interface: false,
    }
}

/// Up to `max_candidates` random node pairs among 3 or 4 random points, at
/// most `max_inner` of them inner, with random work, cohesion and friction.
pub fn random_instance(rng: &mut impl Rng, max_candidates: usize, max_inner: usize) -> Instance {
    let n_nodes = rng.gen_range(3..=4);
    let points: Vec<Point> = (0..n_nodes).map(|_| Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
    let mut pairs: Vec<(usize, usize)> = (0..n_nodes).flat_map(|a| (a + 1..n_nodes).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    let most = max_candidates.min(pairs.len());
    pairs.truncate(rng.gen_range(most.min(3)..=most));
    // Unpinned tags are drawn more often; pinned edges rarely admit a mechanism.
    let tags = [
        BoundaryTag::Free,
        BoundaryTag::Free,
        BoundaryTag::Loaded,
        BoundaryTag::Fixed,
        BoundaryTag::RollerN,
        BoundaryTag::RollerT,
    ];
    let mut inner = 0;
    let mut candidates: Vec<Candidate> = pairs
        .into_iter()
        .map(|(a, b)| {
            let kind = if inner < max_inner && rng.gen_bool(0.65) {
                inner += 1;
                CandidateKind::Inner
            } else {
                CandidateKind::Boundary(*tags.choose(rng).unwrap())
            };
            let mut c = candidate(&points, a, b, kind);
            if c.is_inner() {
                c.g_t = rng.gen_range(-1.0..1.0);
                c.g_n = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-1.0..1.0) };
                c.ce = rng.gen_range(0.2..2.0);
                c.tan_phi = if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(0.0..0.7) };
            }
            c
        })
        .collect();
    if inner == 0 {
        let c = &mut candidates[0];
        c.kind = CandidateKind::Inner;
        c.g_t = 0.5;
        c.ce = 1.0;
    }
    Instance { n_nodes, candidates }
}

/// Outcome of the vertex enumeration: the least dissipation, or `None` when
/// no mechanism does unit work.
///
/// Inner jumps are written through the plastic multipliers
/// (ζ_t = p₊ − p₋, ζ_n = tanφ (p₊ + p₋)); unpinned boundary jumps stay free.
/// Every vertex of {p ≥ 0 : ∃z, A_p p + A_z z = b} has a support whose
/// columns are independent modulo the span of A_z, so trying all such
/// supports finds the optimum.
pub fn vertex_enumeration(inst: &Instance) -> Option<f64> {
    let inner: Vec<&Candidate> = inst.candidates.iter().filter(|c| c.is_inner()).collect();
    let m = 2 * inst.n_nodes + 1;
    let work = 2 * inst.n_nodes;
    let np = 2 * inner.len();
    let mut ap = DMatrix::<f64>::zeros(m, np);
    let mut cost = vec![0.0; np];
    for (k, c) in inner.iter().enumerate() {
        for (col, sign) in [(2 * k, 1.0), (2 * k + 1, -1.0)] {
            // Jump direction for a unit multiplier.
            let jump = c.t * sign + c.n * c.tan_phi;
            ap[(2 * c.a, col)] += jump.x;
            ap[(2 * c.a + 1, col)] += jump.y;
            ap[(2 * c.b, col)] -= jump.x;
            ap[(2 * c.b + 1, col)] -= jump.y;
            ap[(work, col)] = sign * c.g_t + c.tan_phi * c.g_n;
            cost[col] = c.ce;
        }
    }
    let mut z_cols: Vec<Point> = Vec::new();
    let mut z_nodes = Vec::new();
    for c in &inst.candidates {
        if let CandidateKind::Boundary(tag) = c.kind {
            let (pin_t, pin_n) = tag.pins();
            if !pin_t {
                z_cols.push(c.t);
                z_nodes.push((c.a, c.b));
            }
            if !pin_n {
                z_cols.push(c.n);
                z_nodes.push((c.a, c.b));
            }
        }
    }
    let mut az = DMatrix::<f64>::zeros(m, z_cols.len());
    for (j, (dir, &(a, b))) in z_cols.iter().zip(&z_nodes).enumerate() {
        az[(2 * a, j)] += dir.x;
        az[(2 * a + 1, j)] += dir.y;
        az[(2 * b, j)] -= dir.x;
        az[(2 * b + 1, j)] -= dir.y;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    rhs[work] = 1.0;
    let rank = |a: &DMatrix<f64>| if a.ncols() == 0 { 0 } else { a.clone().svd(false, false).rank(1e-10) };
    let rz = rank(&az);
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << np) {
        let support: Vec<usize> = (0..np).filter(|j| mask >> j & 1 == 1).collect();
        if support.len() + rz > m {
            continue;
        }
        let mut cols: Vec<DVector<f64>> = support.iter().map(|&j| ap.column(j).into_owned()).collect();
        cols.extend(az.column_iter().map(|c| c.into_owned()));
        if cols.is_empty() {
            continue;
        }
        let mat = DMatrix::from_columns(&cols);
        if rank(&mat) != support.len() + rz {
            continue;
        }
        let svd = mat.clone().svd(true, true);
        let y = svd.solve(&rhs, 1e-12).expect("thin SVD solves");
        if (&mat * &y - &rhs).amax() > 1e-9 {
            continue;
        }
        if (0..support.len()).any(|k| y[k] < -1e-9) {
            continue;
        }
        let obj: f64 = support.iter().enumerate().map(|(k, &j)| cost[j] * y[k]).sum();
        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
    }
    best
}

pub fn solver(dual: bool, presolve: bool) -> SimplexSolver {
    SimplexSolver::new(SimplexOptions { dual, presolve, ..SimplexOptions::default() })
}

/// λ of a candidate set, `None` when stable.
pub fn solve_instance(inst: &Instance, solver: &dyn LpSolver) -> Option<f64> {
    let (result, _) = solve_candidates(inst.n_nodes, &inst.candidates, 1e-6, solver).expect("solves");
    lambda(&result)
}

pub fn lambda(result: &VdloResult) -> Option<f64> {
    match result.status {
        Status::Failure => result.lambda,
        Status::Stable => None,
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// A scenario mesh with the smoothed static stress of its load case.
pub struct Fixture {
    pub name: &'static str,
    pub scenario: Scenario,
    pub stress: NodalStressField,
}

impl Fixture {
    pub fn new(name: &'static str, scenario: Scenario) -> Fixture {
        let stress = static_snapshot(&scenario.mesh, &scenario.load, scenario.options.sampling).unwrap().stress;
        Fixture { name, scenario, stress }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.scenario.mesh
    }

    pub fn analysis(&self) -> Analysis<'_> {
        Analysis::new(&self.scenario.mesh, self.scenario.options.clone()).unwrap()
    }

    pub fn options(&self) -> &VdloOptions {
        &self.scenario.options
    }
}

pub fn coarse_prandtl() -> Fixture {
    Fixture::new("prandtl", prandtl(&PrandtlParams { h: 0.25, ..PrandtlParams::default() }).unwrap())
}

pub fn coarse_inclusion() -> Fixture {
    let p = InclusionParams { cells: 8, inclusions: 2, ..InclusionParams::default() };
    Fixture::new("matrix_inclusion", matrix_inclusion(&p).unwrap())
}

pub fn material(id: u32) -> Material {
    Material { id, youngs_modulus: 2.0e7, poisson_ratio: 0.3, density: 1800.0, cohesion: 10.0, friction_angle: 0.3 }
}

/// `nx × ny` cells over `[0, width] × [0, height]`, each split along a
/// diagonal of alternating direction, interior nodes moved by up to
/// `jitter` cell sizes. All boundary edges are free.
pub fn grid_mesh(nx: usize, ny: usize, width: f64, height: f64, jitter: f64, rng: &mut impl Rng, mode: AnalysisMode) -> Mesh {
    let (dx, dy) = (width / nx as f64, height / ny as f64);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let interior = i > 0 && i < nx && j > 0 && j < ny;
            let (ox, oy) = if interior && jitter > 0.0 {
                (rng.gen_range(-jitter..jitter) * dx, rng.gen_range(-jitter..jitter) * dy)
            } else {
                (0.0, 0.0)
            };
            nodes.push(Point::new(i as f64 * dx + ox, j as f64 * dy + oy));
        }
    }
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                elements.push(([a, b, c], 1));
                elements.push(([a, c, d], 1));
            } else {
                elements.push(([a, b, d], 1));
                elements.push(([b, c, d], 1));
            }
        }
    }
    Mesh::new(nodes, elements, Vec::new(), mode, vec![material(1)]).unwrap()
}

/// Largest violation of each constraint family at a solution, relative to
/// the largest solution entry.
#[derive(Clone, Copy, Debug, Default)]
pub struct Residuals {
    /// Jump balance at every node and pinned boundary components.
    pub compatibility: f64,
    /// Flow rule and multiplier signs.
    pub flow: f64,
    /// |Gζ − 1|
    pub work: f64,
    /// max p₊p₋ over inner candidates with positive cohesion.
    pub complementarity: f64,
    /// The same over frictionless candidates only.
    pub complementarity_frictionless: f64,
}

impl Residuals {
    pub fn max(self, o: Residuals) -> Residuals {
        Residuals {
            compatibility: self.compatibility.max(o.compatibility),
            flow: self.flow.max(o.flow),
            work: self.work.max(o.work),
            complementarity: self.complementarity.max(o.complementarity),
            complementarity_frictionless: self.complementarity_frictionless.max(o.complementarity_frictionless),
        }
    }
}

/// Residuals recomputed from candidate geometry, not from the assembled rows.
pub fn certificate(n_nodes: usize, cands: &[Candidate], lp: &VdloLp, x: &[f64]) -> Residuals {
    let zmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut r = Residuals::default();
    let mut sums = vec![Point::new(0.0, 0.0); n_nodes];
    for (i, c) in cands.iter().enumerate() {
        let [zt, zn] = lp.zeta(x, i);
        let jump = c.t * zt + c.n * zn;
        sums[c.a] = sums[c.a] + jump;
        sums[c.b] = sums[c.b] - jump;
        if let CandidateKind::Boundary(tag) = c.kind {
            let (pt, pn) = tag.pins();
            if pt {
                r.compatibility = r.compatibility.max(zt.abs() / zmax);
            }
            if pn {
                r.compatibility = r.compatibility.max(zn.abs() / zmax);
            }
        }
    }
    for s in sums {
        r.compatibility = r.compatibility.max(s.norm() / zmax);
    }
    let mut work = 0.0;
    for (k, &i) in lp.layout.inner.iter().enumerate() {
        let c = &cands[i];
        let [zt, zn] = lp.zeta(x, i);
        let [pp, pm] = lp.p(x, k);
        r.flow = r.flow.max((zt - (pp - pm)).abs() / zmax).max((zn - c.tan_phi * (pp + pm)).abs() / zmax);
        r.flow = r.flow.max(pp.min(0.0).abs() / zmax).max(pm.min(0.0).abs() / zmax);
        if c.ce > 0.0 {
            let prod = pp.max(0.0) * pm.max(0.0) / (zmax * zmax);
            r.complementarity = r.complementarity.max(prod);
            if c.tan_phi == 0.0 {
                r.complementarity_frictionless = r.complementarity_frictionless.max(prod);
            }
        }
        work += c.g_t * zt + c.g_n * zn;
    }
    r.work = (work - 1.0).abs();
    r
}

/// Rectangle on rollers at x = 0 with one pinned node, loaded on every other
/// edge by the tractions of σ = [[q0, q1], [q1, 0]].
pub fn patch(mode: AnalysisMode, seed: u64) -> (Mesh, LoadCase, [f64; 2]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = grid_mesh(5, 3, 2.0, 1.0, 0.3, &mut rng, mode);
    let q = [3.0e3, -1.2e3];
    let mut fixed: Vec<Prescribed> = (0..mesh.node_count())
        .filter(|&n| mesh.node(n).x.abs() < 1e-12)
        .map(|node| Prescribed { node, axis: Axis::X, value: 0.0 })
        .collect();
    let origin = mesh.nodes().iter().position(|p| p.norm() < 1e-12).unwrap();
    fixed.push(Prescribed { node: origin, axis: Axis::Y, value: 0.0 });
    // On the roller edge only the tangential part; the normal part is the reaction.
    let tractions = mesh
        .boundary()
        .iter()
        .filter_map(|e| {
            let (a, b) = (mesh.node(e.nodes[0]), mesh.node(e.nodes[1]));
            let normal = (b - a).perp().normalized() * -1.0;
            let value = [q[0] * normal.x + q[1] * normal.y, q[1] * normal.x];
            let on_roller = a.x.abs() < 1e-12 && b.x.abs() < 1e-12;
            (!on_roller || value[1] != 0.0).then_some(EdgeTraction { edge: e.nodes, value: if on_roller { [0.0, value[1]] } else { value } })
        })
        .collect();
    (mesh, LoadCase { fixed, tractions, ..LoadCase::default() }, q)
}

/// Largest element stress error of the patch test relative to q0.
pub fn patch_error(mode: AnalysisMode, seed: u64) -> f64 {
    let (mesh, load, q) = patch(mode, seed);
    let state = solve_static(&mesh, &load).unwrap();
    gauss_point_stresses(&mesh, &state)
        .iter()
        .map(|s| (s[0] - q[0]).abs().max(s[1].abs()).max((s[2] - q[1]).abs()) / q[0].abs())
        .fold(0.0, f64::max)
}

/// Relative change of total energy of an undamped cantilever released from
/// rest after `steps` average-acceleration steps.
pub fn free_vibration_drift(steps: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mesh = grid_mesh(6, 4, 1.5, 1.0, 0.2, &mut rng, AnalysisMode::PlaneStrain);
    let fixed = (0..mesh.node_count())
        .filter(|&n| mesh.node(n).x.abs() < 1e-12)
        .map(|node| Prescribed { node, axis: Axis::Both, value: 0.0 })
        .collect();
    let load = LoadCase { fixed, ..LoadCase::default() };
    let integrator = Newmark::new(&mesh, &load, NewmarkParams::average_acceleration(1e-4)).unwrap();
    let u0: Vec<f64> = (0..2 * mesh.node_count())
        .map(|d| {
            let p = mesh.node(d / 2);
            if d % 2 == 1 {
                1e-4 * p.x * p.x
            } else {
                rng.gen_range(-1e-5..1e-5) * p.x
            }
        })
        .collect();
    let mut state = integrator.initial_state(&u0, &vec![0.0; u0.len()]).unwrap();
    let e0 = integrator.system().energy(&state);
    for _ in 0..steps {
        state = integrator.step(&state);
    }
    (integrator.system().energy(&state) - e0).abs() / e0
}

/// Largest gradient entry of ½‖Aσ − s‖² at `field`, assembled element by
/// element, relative to the size of the data it is built from.
pub fn normal_equation_residual(mesh: &Mesh, rule: SamplingRule, values: &[[f64; 3]], field: &NodalStressField) -> f64 {
    let mut worst = 0.0f64;
    for comp in 0..3 {
        let mut grad = vec![0.0; mesh.node_count()];
        let mut scale = vec![0.0; mesh.node_count()];
        for (e, tri) in mesh.elements().iter().enumerate() {
            for (q, w) in rule.points().iter().enumerate() {
                let s = values[e * rule.per_element() + q][comp];
                let fit: f64 = (0..3).map(|i| w[i] * field.0[tri[i]][comp]).sum();
                for i in 0..3 {
                    grad[tri[i]] += w[i] * (fit - s);
                    scale[tri[i]] += w[i] * s.abs();
                }
            }
        }
        let norm = scale.iter().fold(0.0f64, |m, v| m.max(*v)).max(1e-300);
        worst = grad.iter().fold(worst, |m, g| m.max(g.abs() / norm));
    }
    worst
}
