//! Built-in benchmark models: strip footing on cohesive soil, a
//! matrix-inclusion block in compression and the half Kalthoff specimen
//! under edge impact.
//!
//! Each builder returns a [`Scenario`] bundling mesh, loads, analysis kind
//! and limit-analysis options.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fem::{Axis, DynamicConfig, EdgeTraction, LoadCase, Prescribed, VelocityBc};
use crate::geometry::Point;
use crate::mesh::{AnalysisMode, BoundaryTag, Material, Mesh, MeshError};
use crate::vdlo::VdloOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ScenarioKind {
    Static,
    Pseudostatic { dynamic: DynamicConfig, times: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub mesh: Mesh,
    pub load: LoadCase,
    pub kind: ScenarioKind,
    pub options: VdloOptions,
    /// Magnitude of the applied action (pressure, displacement or velocity),
    /// so that λ times this value is the limit quantity.
    pub applied: f64,
}

/// Tensor-product grid of quadrilateral cells, each split into two triangles.
struct Grid<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
}

struct GridMesh {
    nodes: Vec<Point>,
    elements: Vec<([usize; 3], u32)>,
    /// Grid vertex (i, j) → node id.
    index: HashMap<(usize, usize), usize>,
}

impl Grid<'_> {
    /// `cell(i, j)` returns the material of cell (i, j) or `None` to leave
    /// it out; `rising(i, j)` picks the diagonal from (i, j) to (i+1, j+1).
    fn build(
        &self,
        mut cell: impl FnMut(usize, usize) -> Option<u32>,
        rising: impl Fn(usize, usize) -> bool,
    ) -> GridMesh {
        let mut index = HashMap::new();
        let mut nodes = Vec::new();
        let mut elements = Vec::new();
        let (nx, ny) = (self.xs.len() - 1, self.ys.len() - 1);
        let mut kept = vec![None; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                kept[j * nx + i] = cell(i, j);
            }
        }
        // Number vertices row by row so node ids follow the grid.
        for j in 0..=ny {
            for i in 0..=nx {
                let touches = [(i.wrapping_sub(1), j.wrapping_sub(1)), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j)]
                    .iter()
                    .any(|&(ci, cj)| ci < nx && cj < ny && kept[cj * nx + ci].is_some());
                if touches {
                    index.insert((i, j), nodes.len());
                    nodes.push(Point::new(self.xs[i], self.ys[j]));
                }
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                let Some(m) = kept[j * nx + i] else { continue };
                let v = |a: usize, b: usize| index[&(a, b)];
                let (p00, p10, p11, p01) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
                if rising(i, j) {
                    elements.push(([p00, p10, p11], m));
                    elements.push(([p00, p11, p01], m));
                } else {
                    elements.push(([p00, p10, p01], m));
                    elements.push(([p10, p11, p01], m));
                }
            }
        }
        GridMesh { nodes, elements, index }
    }
}

/// Boundary edges of a counter-clockwise triangulation, domain on the left.
fn boundary_edges(elements: &[([usize; 3], u32)]) -> Vec<[usize; 2]> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for (tri, _) in elements {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for (tri, _) in elements {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 {
                out.push([a, b]);
            }
        }
    }
    out.sort();
    out
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrandtlParams {
    /// Soil Young's modulus (Pa).
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Soil cohesion (Pa).
    pub cohesion: f64,
    /// Strip pressure (Pa).
    pub pressure: f64,
    /// Strip width (m).
    pub footing_width: f64,
    /// Soil domain half-width and depth (m).
    pub half_width: f64,
    pub depth: f64,
    /// Cell size (m).
    pub h: f64,
    pub max_length: Option<f64>,
}

impl Default for PrandtlParams {
    fn default() -> Self {
        PrandtlParams {
            youngs_modulus: 30e6,
            poisson_ratio: 0.3,
            cohesion: 1.0,
            pressure: 1.0,
            footing_width: 1.0,
            half_width: 1.5,
            depth: 1.0,
            h: 1.0 / 18.0,
            max_length: None,
        }
    }
}

/// Strip load on weightless cohesive soil. A uniform pressure acts on the
/// surface over the strip width; the soil is clamped at the base and on
/// rollers at the sides. Diagonals mirror about the strip axis so the mesh
/// is symmetric.
pub fn prandtl(p: &PrandtlParams) -> Result<Scenario, MeshError> {
    let nx = (2.0 * p.half_width / p.h).round() as usize;
    let ny = (p.depth / p.h).round() as usize;
    let xs = linspace(-p.half_width, p.half_width, nx);
    let ys = linspace(-p.depth, 0.0, ny);
    let half_b = 0.5 * p.footing_width;
    let grid = Grid { xs: &xs, ys: &ys };
    let built = grid.build(|_, _| Some(1), |i, _| 0.5 * (xs[i] + xs[i + 1]) < 0.0);
    let nodes = built.nodes;
    let mut boundary = Vec::new();
    let mut tractions = Vec::new();
    for [a, b] in boundary_edges(&built.elements) {
        let (pa, pb) = (nodes[a], nodes[b]);
        let tag = if near(pa.y, -p.depth) && near(pb.y, -p.depth) {
            BoundaryTag::Fixed
        } else if (near(pa.x, -p.half_width) && near(pb.x, -p.half_width))
            || (near(pa.x, p.half_width) && near(pb.x, p.half_width))
        {
            BoundaryTag::RollerN
        } else if near(pa.y, 0.0) && near(pb.y, 0.0) && pa.x.abs().max(pb.x.abs()) <= half_b + 1e-12 {
            tractions.push(EdgeTraction { edge: [a, b], value: [0.0, -p.pressure] });
            BoundaryTag::Loaded
        } else {
            BoundaryTag::Free
        };
        boundary.push(([a, b], tag));
    }
    let mut fixed = Vec::new();
    for (k, q) in nodes.iter().enumerate() {
        if near(q.y, -p.depth) {
            fixed.push(Prescribed { node: k, axis: Axis::Both, value: 0.0 });
        } else if near(q.x.abs(), p.half_width) {
            fixed.push(Prescribed { node: k, axis: Axis::X, value: 0.0 });
        }
    }
    let materials = vec![Material {
        id: 1,
        youngs_modulus: p.youngs_modulus,
        poisson_ratio: p.poisson_ratio,
        density: 0.0,
        cohesion: p.cohesion,
        friction_angle: 0.0,
    }];
    let mesh = Mesh::new(nodes, built.elements, boundary, AnalysisMode::PlaneStress, materials)?;
    let mut options = VdloOptions::default();
    options.candidates.max_length = p.max_length;
    Ok(Scenario {
        name: "prandtl".into(),
        mesh,
        load: LoadCase { fixed, tractions, ..LoadCase::default() },
        kind: ScenarioKind::Static,
        options,
        applied: p.pressure,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InclusionParams {
    /// Side of the square specimen (m).
    pub size: f64,
    /// Cells per side.
    pub cells: usize,
    /// Number of inclusions and their side in cells.
    pub inclusions: usize,
    pub inclusion_cells: usize,
    pub seed: u64,
    pub matrix_modulus: f64,
    pub inclusion_modulus: f64,
    pub poisson_ratio: f64,
    pub matrix_cohesion: f64,
    pub inclusion_cohesion: f64,
    /// Friction angle of both phases (rad).
    pub friction_angle: f64,
    /// Downward displacement of the top edge (m).
    pub displacement: f64,
    pub max_length: Option<f64>,
}

impl Default for InclusionParams {
    fn default() -> Self {
        InclusionParams {
            size: 1.0,
            cells: 20,
            inclusions: 10,
            inclusion_cells: 2,
            seed: 7,
            matrix_modulus: 30e9,
            inclusion_modulus: 60e9,
            poisson_ratio: 0.2,
            matrix_cohesion: 3e6,
            inclusion_cohesion: 9e6,
            friction_angle: 10f64.to_radians(),
            displacement: 1e-4,
            max_length: None,
        }
    }
}

/// Square inclusions placed at random cell positions, kept apart from each
/// other and from the specimen edges by at least one cell.
pub fn inclusion_layout(p: &InclusionParams) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let k = p.inclusion_cells;
    let mut placed: Vec<(usize, usize)> = Vec::new();
    if p.cells < k + 2 {
        return placed;
    }
    for _ in 0..10_000 {
        if placed.len() == p.inclusions {
            break;
        }
        let i = rng.gen_range(1..=p.cells - k - 1);
        let j = rng.gen_range(1..=p.cells - k - 1);
        let clear = placed.iter().all(|&(a, b)| i + k < a || a + k < i || j + k < b || b + k < j);
        if clear {
            placed.push((i, j));
        }
    }
    placed
}

/// Unit block of matrix material with stiffer, stronger inclusions,
/// compressed by a prescribed top displacement. The base is on rollers with
/// its midpoint pinned horizontally.
pub fn matrix_inclusion(p: &InclusionParams) -> Result<Scenario, MeshError> {
    let xs = linspace(0.0, p.size, p.cells);
    let layout = inclusion_layout(p);
    let k = p.inclusion_cells;
    let grid = Grid { xs: &xs, ys: &xs };
    let built = grid.build(
        |i, j| {
            let inside = layout.iter().any(|&(a, b)| (a..a + k).contains(&i) && (b..b + k).contains(&j));
            Some(if inside { 2 } else { 1 })
        },
        |i, j| (i + j) % 2 == 0,
    );
    let nodes = built.nodes;
    let mut boundary = Vec::new();
    for [a, b] in boundary_edges(&built.elements) {
        let (pa, pb) = (nodes[a], nodes[b]);
        let tag = if near(pa.y, 0.0) && near(pb.y, 0.0) {
            BoundaryTag::Fixed
        } else if near(pa.y, p.size) && near(pb.y, p.size) {
            BoundaryTag::Loaded
        } else {
            BoundaryTag::Free
        };
        boundary.push(([a, b], tag));
    }
    let mut fixed = Vec::new();
    let mid = built.index[&(p.cells / 2, 0)];
    for (n, q) in nodes.iter().enumerate() {
        if near(q.y, 0.0) {
            fixed.push(Prescribed { node: n, axis: if n == mid { Axis::Both } else { Axis::Y }, value: 0.0 });
        } else if near(q.y, p.size) {
            fixed.push(Prescribed { node: n, axis: Axis::Y, value: -p.displacement });
        }
    }
    let material = |id, e, c| Material {
        id,
        youngs_modulus: e,
        poisson_ratio: p.poisson_ratio,
        density: 0.0,
        cohesion: c,
        friction_angle: p.friction_angle,
    };
    let materials =
        vec![material(1, p.matrix_modulus, p.matrix_cohesion), material(2, p.inclusion_modulus, p.inclusion_cohesion)];
    let mesh = Mesh::new(nodes, built.elements, boundary, AnalysisMode::PlaneStress, materials)?;
    let mut options = VdloOptions::default();
    options.candidates.max_length = p.max_length;
    Ok(Scenario {
        name: "matrix_inclusion".into(),
        mesh,
        load: LoadCase { fixed, ..LoadCase::default() },
        kind: ScenarioKind::Static,
        options,
        applied: p.displacement,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KalthoffParams {
    /// Half-specimen width and height (m).
    pub width: f64,
    pub height: f64,
    pub notch_length: f64,
    pub notch_width: f64,
    /// Distance of the notch axis from the symmetry line (m).
    pub notch_offset: f64,
    /// Cell size away from the notch (m).
    pub h: f64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub cohesion: f64,
    pub friction_angle: f64,
    /// Impact velocity (m/s) and its rise time (s).
    pub velocity: f64,
    pub ramp: f64,
    pub dt: f64,
    pub duration: f64,
    /// Interval between analysed snapshots (s).
    pub snapshot_interval: f64,
    pub max_length: Option<f64>,
}

impl Default for KalthoffParams {
    fn default() -> Self {
        KalthoffParams {
            width: 0.1,
            height: 0.1,
            notch_length: 0.05,
            notch_width: 1.5e-3,
            notch_offset: 0.025,
            h: 3.125e-3,
            youngs_modulus: 190e9,
            poisson_ratio: 0.3,
            density: 8000.0,
            cohesion: 1e9,
            friction_angle: 0.0,
            velocity: 33.0,
            ramp: 1e-6,
            dt: 0.5e-6,
            duration: 50e-6,
            snapshot_interval: 2.5e-6,
            max_length: None,
        }
    }
}

/// Lower half of the edge-notched plate, symmetric about y = 0. The notch
/// runs from the struck edge x = 0 and the projectile pushes the edge below
/// it with a prescribed velocity. Plane strain, standard maraging-steel
/// properties.
pub fn kalthoff(p: &KalthoffParams) -> Result<Scenario, MeshError> {
    let nx = (p.width / p.h).round() as usize;
    let xs = linspace(0.0, p.width, nx);
    let (lo, hi) = (p.notch_offset - 0.5 * p.notch_width, p.notch_offset + 0.5 * p.notch_width);
    let mut ys: Vec<f64> = linspace(0.0, p.height, (p.height / p.h).round() as usize)
        .into_iter()
        .filter(|&y| y < lo - 0.25 * p.h || y > hi + 0.25 * p.h)
        .collect();
    ys.extend([lo, hi]);
    ys.sort_by(f64::total_cmp);
    let notch_row = ys.iter().position(|&y| near(y, lo)).expect("notch line present");
    let grid = Grid { xs: &xs, ys: &ys };
    let built = grid.build(
        |i, j| (!(j == notch_row && xs[i + 1] <= p.notch_length + 1e-12)).then_some(1),
        |i, j| (i + j) % 2 == 0,
    );
    let nodes = built.nodes;
    let mut boundary = Vec::new();
    for [a, b] in boundary_edges(&built.elements) {
        let (pa, pb) = (nodes[a], nodes[b]);
        let tag = if near(pa.y, 0.0) && near(pb.y, 0.0) {
            BoundaryTag::RollerN
        } else if near(pa.x, 0.0) && near(pb.x, 0.0) && pa.y.max(pb.y) <= lo + 1e-12 {
            BoundaryTag::Loaded
        } else {
            BoundaryTag::Free
        };
        boundary.push(([a, b], tag));
    }
    let mut fixed = Vec::new();
    let mut velocity_bc = Vec::new();
    for (n, q) in nodes.iter().enumerate() {
        if near(q.x, 0.0) && q.y <= lo + 1e-12 {
            velocity_bc.push(VelocityBc { node: n, axis: Axis::X, value: p.velocity, ramp: p.ramp });
        }
        if near(q.y, 0.0) {
            fixed.push(Prescribed { node: n, axis: Axis::Y, value: 0.0 });
        }
    }
    let materials = vec![Material {
        id: 1,
        youngs_modulus: p.youngs_modulus,
        poisson_ratio: p.poisson_ratio,
        density: p.density,
        cohesion: p.cohesion,
        friction_angle: p.friction_angle,
    }];
    let mesh = Mesh::new(nodes, built.elements, boundary, AnalysisMode::PlaneStrain, materials)?;
    let n_steps = (p.duration / p.dt).round() as usize;
    let every = (p.snapshot_interval / p.dt).round().max(1.0) as usize;
    let times = (1..)
        .map(|k| k * every)
        .take_while(|&s| s <= n_steps)
        .map(|s| s as f64 * p.dt)
        .collect();
    let mut options = VdloOptions::default();
    options.candidates.max_length = p.max_length;
    Ok(Scenario {
        name: "kalthoff".into(),
        mesh,
        load: LoadCase { fixed, velocity_bc, ..LoadCase::default() },
        kind: ScenarioKind::Pseudostatic {
            dynamic: DynamicConfig { dt: p.dt, n_steps, snapshot_every: every, alpha: 0.25, delta: 0.5 },
            times,
        },
        options,
        applied: p.velocity,
    })
}
