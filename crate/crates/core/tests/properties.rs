mod common;

use common::{certificate, close, grid_mesh, lambda, random_instance, solve_instance, Instance, Residuals};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vdlo::lp::SimplexSolver;
use vdlo::mesh::{AnalysisMode, BoundaryTag, MeshFile, NodeRecord};
use vdlo::recovery::{build_smoothing_system, recover_nodal_stresses, GaussStressField, NodalStressField, SamplingRule};
use vdlo::vdlo::{run_snapshot, solve_candidates, Snapshot, VdloOptions};
use vdlo::{Mesh, Point};

fn instance(seed: u64) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 8, 6)
}

fn residuals(inst: &Instance) -> Option<Residuals> {
    let (_, solved) = solve_candidates(inst.n_nodes, &inst.candidates, 1e-6, &SimplexSolver::default()).unwrap();
    let (lp, x) = solved?;
    Some(certificate(inst.n_nodes, &inst.candidates, &lp, &x))
}

/// Grid on a clamped base with a free top, optionally rotated by `angle`.
fn rotated_block(angle: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = grid_mesh(4, 3, 1.0, 0.75, 0.2, &mut rng, AnalysisMode::PlaneStrain);
    let mut file = MeshFile::from_mesh(&base);
    for rec in &mut file.boundary {
        let (a, b) = (base.node(rec.edge[0]), base.node(rec.edge[1]));
        if a.y.abs() < 1e-12 && b.y.abs() < 1e-12 {
            rec.tag = BoundaryTag::Fixed;
        } else if a.x.abs() < 1e-12 && b.x.abs() < 1e-12 {
            rec.tag = BoundaryTag::RollerN;
        }
    }
    let (s, c) = angle.sin_cos();
    for n in &mut file.nodes {
        if let NodeRecord::Plain([x, y]) = n {
            *n = NodeRecord::Plain([c * *x - s * *y, s * *x + c * *y]);
        }
    }
    file.into_mesh().unwrap()
}

/// A linear stress field in the unrotated frame, expressed in the frame
/// rotated by `angle`.
fn rotated_stress(mesh: &Mesh, angle: f64, coef: &[f64; 9]) -> NodalStressField {
    let (s, c) = angle.sin_cos();
    NodalStressField(
        mesh.nodes()
            .iter()
            .map(|p| {
                // Back to the original frame to evaluate the field.
                let (x, y) = (c * p.x + s * p.y, -s * p.x + c * p.y);
                let sx = coef[0] + coef[1] * x + coef[2] * y;
                let sy = coef[3] + coef[4] * x + coef[5] * y;
                let txy = coef[6] + coef[7] * x + coef[8] * y;
                // σ' = R σ Rᵀ
                [
                    c * c * sx + s * s * sy - 2.0 * s * c * txy,
                    s * s * sx + c * c * sy + 2.0 * s * c * txy,
                    s * c * (sx - sy) + (c * c - s * s) * txy,
                ]
            })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn optimum_satisfies_every_constraint_family(seed in any::<u64>()) {
        let inst = instance(seed);
        if let Some(r) = residuals(&inst) {
            prop_assert!(r.compatibility <= 1e-9, "compatibility {}", r.compatibility);
            prop_assert!(r.flow <= 1e-9, "flow {}", r.flow);
            prop_assert!(r.work <= 1e-9, "work {}", r.work);
            prop_assert!(r.complementarity_frictionless <= 1e-9, "complementarity {}", r.complementarity_frictionless);
        }
    }

    #[test]
    fn scaling_work_scales_lambda_inversely(seed in any::<u64>(), k in prop::sample::select(vec![0.5, 2.0, 10.0, 1e-3, 1e3])) {
        let inst = instance(seed);
        let mut scaled = inst.clone();
        for c in &mut scaled.candidates {
            c.g_t *= k;
            c.g_n *= k;
        }
        match (solve_instance(&inst, &SimplexSolver::default()), solve_instance(&scaled, &SimplexSolver::default())) {
            (Some(a), Some(b)) => prop_assert!(close(a / k, b, 1e-8), "{a}/{k} vs {b}"),
            (None, None) => {}
            (a, b) => prop_assert!(false, "status changed: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn removing_candidates_never_lowers_lambda(seed in any::<u64>(), drop in any::<prop::sample::Index>()) {
        let inst = instance(seed);
        let Some(full) = solve_instance(&inst, &SimplexSolver::default()) else { return Ok(()) };
        let mut fewer = inst.clone();
        fewer.candidates.remove(drop.index(fewer.candidates.len()));
        if fewer.candidates.iter().any(|c| c.is_inner()) {
            if let Some(l) = solve_instance(&fewer, &SimplexSolver::default()) {
                prop_assert!(l >= full * (1.0 - 1e-9), "{l} < {full}");
            }
        }
    }

    #[test]
    fn orientation_of_candidates_is_irrelevant(seed in any::<u64>(), flips in any::<u8>()) {
        let inst = instance(seed);
        let mut flipped = inst.clone();
        for (i, c) in flipped.candidates.iter_mut().enumerate() {
            if flips >> (i % 8) & 1 == 1 {
                *c = c.reversed();
            }
        }
        match (solve_instance(&inst, &SimplexSolver::default()), solve_instance(&flipped, &SimplexSolver::default())) {
            (Some(a), Some(b)) => prop_assert!(close(a, b, 1e-8), "{a} vs {b}"),
            (None, None) => {}
            (a, b) => prop_assert!(false, "status changed: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn smoothing_reproduces_linear_fields(seed in any::<u64>(), coef in prop::array::uniform9(-10.0f64..10.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = grid_mesh(5, 4, 1.0, 0.8, 0.3, &mut rng, AnalysisMode::PlaneStress);
        let lin = |p: Point| [
            coef[0] + coef[1] * p.x + coef[2] * p.y,
            coef[3] + coef[4] * p.x + coef[5] * p.y,
            coef[6] + coef[7] * p.x + coef[8] * p.y,
        ];
        let rule = SamplingRule::ThreePoint;
        let mut values = Vec::new();
        for e in 0..mesh.element_count() {
            let pts = mesh.element_points(e);
            for w in rule.points() {
                values.push(lin(pts[0] * w[0] + pts[1] * w[1] + pts[2] * w[2]));
            }
        }
        let system = build_smoothing_system(&mesh, rule).unwrap();
        let field = recover_nodal_stresses(&system, &GaussStressField { values }).unwrap();
        let scale = coef.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (p, s) in mesh.nodes().iter().zip(&field.0) {
            let want = lin(*p);
            for k in 0..3 {
                prop_assert!((s[k] - want[k]).abs() <= 1e-9 * scale, "node {p:?} comp {k}: {} vs {}", s[k], want[k]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn lambda_is_invariant_under_rotation(angle in 0.0f64..std::f64::consts::TAU, coef in prop::array::uniform9(-5.0f64..5.0)) {
        let options = VdloOptions::default();
        let base = rotated_block(0.0, 3);
        let turned = rotated_block(angle, 3);
        let a = run_snapshot(&base, &Snapshot::imported(rotated_stress(&base, 0.0, &coef)), &options).unwrap();
        let b = run_snapshot(&turned, &Snapshot::imported(rotated_stress(&turned, angle, &coef)), &options).unwrap();
        match (lambda(&a), lambda(&b)) {
            (Some(x), Some(y)) => prop_assert!(close(x, y, 1e-7), "{x} vs {y} at {angle}"),
            (None, None) => {}
            (x, y) => prop_assert!(false, "status changed: {x:?} vs {y:?}"),
        }
    }
}
