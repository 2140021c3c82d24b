//! Global least-squares smoothing of element stresses to the nodes, and
//! interpolation of the smoothed field.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::linalg::{norm2, CsrMatrix, LinalgError, SkylineCholesky};
use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("node {0} belongs to no element")]
    IsolatedNode(usize),
    #[error("normal matrix is singular (rank deficient near node {node}); use the three-point sampling rule")]
    SingularNormalMatrix { node: usize },
    #[error("expected {expected} sampled stresses, got {got}")]
    Length { expected: usize, got: usize },
    #[error("point ({x}, {y}) lies outside the mesh")]
    OutsideDomain { x: f64, y: f64 },
    #[error("normal-equation residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("cannot access stress file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("stress field parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Where element stresses are sampled for the least-squares fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingRule {
    /// One point at the centroid.
    Centroid,
    /// Three interior points at barycentric (2/3, 1/6, 1/6) and permutations.
    #[default]
    ThreePoint,
}

impl SamplingRule {
    pub fn points(self) -> &'static [[f64; 3]] {
        const C: [[f64; 3]; 1] = [[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
        const T: [[f64; 3]; 3] =
            [[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]];
        match self {
            SamplingRule::Centroid => &C,
            SamplingRule::ThreePoint => &T,
        }
    }

    pub fn per_element(self) -> usize {
        self.points().len()
    }
}

/// Sampled stresses `[σx, σy, τxy]`, element-major, `per_element` values each.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussStressField {
    pub values: Vec<[f64; 3]>,
}

impl GaussStressField {
    /// Replicates constant per-element stresses at every sampling point.
    pub fn from_elements(rule: SamplingRule, element_stresses: &[[f64; 3]]) -> Self {
        let k = rule.per_element();
        GaussStressField { values: element_stresses.iter().flat_map(|s| std::iter::repeat(*s).take(k)).collect() }
    }
}

/// Smoothed nodal stresses `[σx, σy, τxy]` (Pa).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodalStressField(pub Vec<[f64; 3]>);

impl NodalStressField {
    pub fn zeros(n: usize) -> Self {
        NodalStressField(vec![[0.0; 3]; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, k: f64) -> Self {
        NodalStressField(self.0.iter().map(|s| [s[0] * k, s[1] * k, s[2] * k]).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RecoveryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| RecoveryError::Io { path: path.display().to_string(), source })?;
        let field: NodalStressField = serde_json::from_str(&text)?;
        Ok(field)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RecoveryError> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string(self)?)
            .map_err(|source| RecoveryError::Io { path: path.display().to_string(), source })
    }
}

/// The sampling operator A (g × n) and the factored normal matrix AᵀA.
#[derive(Debug, Clone)]
pub struct SmoothingSystem {
    pub rule: SamplingRule,
    pub sampling: CsrMatrix,
    pub normal_matrix: CsrMatrix,
    factor: Result<SkylineCholesky, usize>,
}

impl SmoothingSystem {
    pub fn nodes(&self) -> usize {
        self.sampling.ncols
    }

    pub fn samples(&self) -> usize {
        self.sampling.nrows
    }

    /// Aᵀ·s for one stress component.
    fn rhs(&self, values: &[[f64; 3]], comp: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes()];
        for (r, s) in values.iter().enumerate() {
            for (c, v) in self.sampling.row(r) {
                out[c] += v * s[comp];
            }
        }
        out
    }
}

pub fn build_smoothing_system(mesh: &Mesh, rule: SamplingRule) -> Result<SmoothingSystem, RecoveryError> {
    let n = mesh.node_count();
    if let Some(k) = (0..n).find(|&k| mesh.node_elements(k).is_empty()) {
        return Err(RecoveryError::IsolatedNode(k));
    }
    let mut a = Vec::new();
    let mut ata = Vec::new();
    let mut row = 0;
    for tri in mesh.elements() {
        for w in rule.points() {
            for i in 0..3 {
                a.push((row, tri[i], w[i]));
                for j in 0..3 {
                    ata.push((tri[i], tri[j], w[i] * w[j]));
                }
            }
            row += 1;
        }
    }
    let sampling = CsrMatrix::from_triplets(row, n, &a);
    let normal_matrix = CsrMatrix::from_triplets(n, n, &ata);
    let factor = SkylineCholesky::factor(&normal_matrix).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { row, .. } => row,
        LinalgError::Dimension { .. } => 0,
    });
    Ok(SmoothingSystem { rule, sampling, normal_matrix, factor })
}

/// Solves (AᵀA) σ_N = Aᵀ σ_G for each stress component.
pub fn recover_nodal_stresses(
    system: &SmoothingSystem,
    sampled: &GaussStressField,
) -> Result<NodalStressField, RecoveryError> {
    if sampled.values.len() != system.samples() {
        return Err(RecoveryError::Length { expected: system.samples(), got: sampled.values.len() });
    }
    let factor = system.factor.as_ref().map_err(|&node| RecoveryError::SingularNormalMatrix { node })?;
    let mut out = vec![[0.0; 3]; system.nodes()];
    for comp in 0..3 {
        let rhs = system.rhs(&sampled.values, comp);
        let x = factor.solve(&rhs);
        let r: Vec<f64> = system.normal_matrix.mul_vec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        let scale = norm2(&rhs);
        if norm2(&r) > 1e-10 * scale {
            return Err(RecoveryError::Residual(norm2(&r) / scale));
        }
        for (o, v) in out.iter_mut().zip(x) {
            o[comp] = v;
        }
    }
    Ok(NodalStressField(out))
}

/// Convenience: smooth constant per-element stresses with the default rule.
pub fn smooth_element_stresses(mesh: &Mesh, element_stresses: &[[f64; 3]]) -> Result<NodalStressField, RecoveryError> {
    let system = build_smoothing_system(mesh, SamplingRule::default())?;
    recover_nodal_stresses(&system, &GaussStressField::from_elements(system.rule, element_stresses))
}

/// Barycentric interpolation of the nodal field inside element `e`.
pub fn interpolate_in_element(mesh: &Mesh, field: &NodalStressField, e: usize, p: Point) -> [f64; 3] {
    let w = mesh.barycentric(e, p);
    let tri = mesh.elements()[e];
    let mut s = [0.0; 3];
    for k in 0..3 {
        let sk = field.0[tri[k]];
        for c in 0..3 {
            s[c] += w[k] * sk[c];
        }
    }
    s
}

pub fn stress_at_point(mesh: &Mesh, field: &NodalStressField, p: Point) -> Result<[f64; 3], RecoveryError> {
    let e = mesh.locate_element(p).ok_or(RecoveryError::OutsideDomain { x: p.x, y: p.y })?;
    Ok(interpolate_in_element(mesh, field, e, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{AnalysisMode, Material};

    fn square(rule: SamplingRule) -> (Mesh, SmoothingSystem) {
        let nodes = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        let mat = Material { id: 1, youngs_modulus: 1.0, poisson_ratio: 0.0, density: 0.0, cohesion: 1.0, friction_angle: 0.0 };
        let mesh = Mesh::new(nodes, vec![([0, 1, 2], 1), ([0, 2, 3], 1)], vec![], AnalysisMode::PlaneStress, vec![mat]).unwrap();
        let sys = build_smoothing_system(&mesh, rule).unwrap();
        (mesh, sys)
    }

    #[test]
    fn centroid_row_is_one_third() {
        let (_, sys) = square(SamplingRule::Centroid);
        let row: Vec<(usize, f64)> = sys.sampling.row(0).collect();
        assert_eq!(row.len(), 3);
        for (_, v) in row {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn centroid_rule_is_rank_deficient_on_two_triangles() {
        let (_, sys) = square(SamplingRule::Centroid);
        let g = GaussStressField { values: vec![[1.0, 0.0, 0.0]; 2] };
        assert!(matches!(recover_nodal_stresses(&sys, &g), Err(RecoveryError::SingularNormalMatrix { .. })));
    }

    #[test]
    fn constant_is_preserved() {
        let (mesh, sys) = square(SamplingRule::ThreePoint);
        let s = [3.0, -2.0, 0.5];
        let out = recover_nodal_stresses(&sys, &GaussStressField::from_elements(sys.rule, &[s, s])).unwrap();
        assert_eq!(out.len(), mesh.node_count());
        for v in &out.0 {
            for c in 0..3 {
                assert!((v[c] - s[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn point_queries() {
        let (mesh, _) = square(SamplingRule::ThreePoint);
        let field = NodalStressField(vec![[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0], [4.0, 1.0, 0.0]]);
        for k in 0..4 {
            assert_eq!(stress_at_point(&mesh, &field, mesh.node(k)).unwrap()[0], field.0[k][0]);
        }
        let c = stress_at_point(&mesh, &field, mesh.centroid(1)).unwrap();
        assert!((c[0] - (1.0 + 3.0 + 4.0) / 3.0).abs() < 1e-14);
        assert!(stress_at_point(&mesh, &field, Point::new(2.0, 2.0)).is_err());
    }
}
