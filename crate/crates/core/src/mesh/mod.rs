//! Triangular plane meshes: validation, boundary topology, point location and
//! segment admissibility tests.

mod grid;
mod io;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    on_open_segment, orient, segments_cross_properly, segments_overlap, signed_distance, BoundingBox, Point,
};
use grid::UniformGrid;

pub use io::{MeshFile, NodeRecord};

/// Relative geometric tolerance; multiplied by the bounding-box diagonal.
pub const DEFAULT_TOLERANCE_FACTOR: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("cannot read mesh file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("mesh parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("mesh has no elements")]
    Empty,
    #[error("duplicate node id {0}")]
    DuplicateNodeId(usize),
    #[error("node ids must be 0..{count}, found {id}")]
    NodeIdOutOfRange { id: usize, count: usize },
    #[error("{context} references node {index}, but the mesh has {count} nodes")]
    NodeOutOfRange { context: String, index: usize, count: usize },
    #[error("element {0} is degenerate (zero or near-zero area)")]
    DegenerateElement(usize),
    #[error("edge ({0}, {1}) is shared by more than two elements")]
    NonManifoldEdge(usize, usize),
    #[error("boundary entry ({0}, {1}) is not an edge on the mesh boundary")]
    NotABoundaryEdge(usize, usize),
    #[error("boundary edge ({0}, {1}) listed more than once")]
    DuplicateBoundaryEdge(usize, usize),
    #[error("element {element} uses unknown material id {material}")]
    UnknownMaterial { element: usize, material: u32 },
    #[error("material {id}: {reason}")]
    InvalidMaterial { id: u32, reason: String },
    #[error("duplicate material id {0}")]
    DuplicateMaterial(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisMode {
    PlaneStress,
    PlaneStrain,
}

/// Kinematic condition attached to a boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    Free,
    Fixed,
    RollerN,
    RollerT,
    Loaded,
}

impl BoundaryTag {
    /// Whether the tangential / normal displacement of the edge is suppressed.
    pub fn pins(self) -> (bool, bool) {
        match self {
            BoundaryTag::Fixed => (true, true),
            BoundaryTag::RollerN => (false, true),
            BoundaryTag::RollerT => (true, false),
            BoundaryTag::Free | BoundaryTag::Loaded => (false, false),
        }
    }

    /// The most restrictive combination of two tags.
    pub fn combine(self, other: BoundaryTag) -> BoundaryTag {
        let (t0, n0) = self.pins();
        let (t1, n1) = other.pins();
        match (t0 || t1, n0 || n1) {
            (true, true) => BoundaryTag::Fixed,
            (false, true) => BoundaryTag::RollerN,
            (true, false) => BoundaryTag::RollerT,
            (false, false) => {
                if self == BoundaryTag::Loaded || other == BoundaryTag::Loaded {
                    BoundaryTag::Loaded
                } else {
                    BoundaryTag::Free
                }
            }
        }
    }
}

/// Linear elastic / Mohr–Coulomb material record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub id: u32,
    /// Young's modulus (Pa).
    #[serde(rename = "E")]
    pub youngs_modulus: f64,
    /// Poisson ratio.
    #[serde(rename = "nu")]
    pub poisson_ratio: f64,
    /// Density (kg/m³).
    #[serde(rename = "rho", default)]
    pub density: f64,
    /// Cohesion (Pa).
    #[serde(rename = "c")]
    pub cohesion: f64,
    /// Friction angle (rad).
    #[serde(rename = "phi", default)]
    pub friction_angle: f64,
}

impl Material {
    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |reason: &str| MeshError::InvalidMaterial { id: self.id, reason: reason.to_string() };
        if !(self.youngs_modulus > 0.0) {
            return Err(bad("E must be positive"));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(bad("nu must lie in [0, 0.5)"));
        }
        if !(self.cohesion >= 0.0) {
            return Err(bad("cohesion must be non-negative"));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.friction_angle) {
            return Err(bad("friction angle must lie in [0, pi/2)"));
        }
        if !(self.density >= 0.0) {
            return Err(bad("density must be non-negative"));
        }
        Ok(())
    }

    pub fn tan_phi(&self) -> f64 {
        self.friction_angle.tan()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Oriented with the domain on the left.
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// A validated, immutable triangular mesh.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<Point>,
    elements: Vec<[usize; 3]>,
    element_material: Vec<usize>,
    materials: Vec<Material>,
    boundary: Vec<BoundaryEdge>,
    mode: AnalysisMode,
    tolerance: f64,
    bbox: BoundingBox,
    node_elements: Vec<Vec<usize>>,
    boundary_lookup: HashMap<(usize, usize), usize>,
    edge_count: usize,
    min_edge: f64,
    element_grid: UniformGrid,
    node_grid: UniformGrid,
    boundary_grid: UniformGrid,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Validates the raw parts and builds the query structures.
    ///
    /// `elements` hold node triples plus a material id. Clockwise triangles are
    /// reordered; boundary edges not listed in `boundary` are tagged free.
    pub fn new(
        nodes: Vec<Point>,
        elements: Vec<([usize; 3], u32)>,
        boundary: Vec<([usize; 2], BoundaryTag)>,
        mode: AnalysisMode,
        materials: Vec<Material>,
    ) -> Result<Mesh, MeshError> {
        Self::with_tolerance_factor(nodes, elements, boundary, mode, materials, DEFAULT_TOLERANCE_FACTOR)
    }

    pub fn with_tolerance_factor(
        nodes: Vec<Point>,
        elements: Vec<([usize; 3], u32)>,
        boundary: Vec<([usize; 2], BoundaryTag)>,
        mode: AnalysisMode,
        materials: Vec<Material>,
        tolerance_factor: f64,
    ) -> Result<Mesh, MeshError> {
        if elements.is_empty() || nodes.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = nodes.len();
        let mut material_index = BTreeMap::new();
        for (k, m) in materials.iter().enumerate() {
            m.validate()?;
            if material_index.insert(m.id, k).is_some() {
                return Err(MeshError::DuplicateMaterial(m.id));
            }
        }
        let bbox = BoundingBox::from_points(&nodes).ok_or(MeshError::Empty)?;
        let tolerance = tolerance_factor * bbox.diagonal();

        let mut tris = Vec::with_capacity(elements.len());
        let mut element_material = Vec::with_capacity(elements.len());
        for (e, (tri, mat)) in elements.into_iter().enumerate() {
            for &v in &tri {
                if v >= n {
                    return Err(MeshError::NodeOutOfRange { context: format!("element {e}"), index: v, count: n });
                }
            }
            let [a, b, c] = tri;
            let (pa, pb, pc) = (nodes[a], nodes[b], nodes[c]);
            let twice_area = orient(pa, pb, pc);
            let longest = pa.distance(pb).max(pb.distance(pc)).max(pc.distance(pa));
            if !(twice_area.abs() / longest > tolerance) || a == b || b == c || a == c {
                return Err(MeshError::DegenerateElement(e));
            }
            tris.push(if twice_area > 0.0 { [a, b, c] } else { [a, c, b] });
            let k = *material_index.get(&mat).ok_or(MeshError::UnknownMaterial { element: e, material: mat })?;
            element_material.push(k);
        }

        // Edge → incident elements, with the edge direction as seen from each.
        let mut edge_use: BTreeMap<(usize, usize), Vec<(usize, [usize; 2])>> = BTreeMap::new();
        let mut min_edge = f64::INFINITY;
        for (e, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_use.entry(edge_key(a, b)).or_default().push((e, [a, b]));
                min_edge = min_edge.min(nodes[a].distance(nodes[b]));
            }
        }
        let mut open_edges = BTreeMap::new();
        for (key, uses) in &edge_use {
            match uses.len() {
                1 => {
                    open_edges.insert(*key, uses[0].1);
                }
                2 => {}
                _ => return Err(MeshError::NonManifoldEdge(key.0, key.1)),
            }
        }

        let mut tags: BTreeMap<(usize, usize), BoundaryTag> = BTreeMap::new();
        for ([a, b], tag) in boundary {
            for v in [a, b] {
                if v >= n {
                    return Err(MeshError::NodeOutOfRange { context: format!("boundary edge ({a}, {b})"), index: v, count: n });
                }
            }
            let key = edge_key(a, b);
            if !open_edges.contains_key(&key) {
                return Err(MeshError::NotABoundaryEdge(a, b));
            }
            if tags.insert(key, tag).is_some() {
                return Err(MeshError::DuplicateBoundaryEdge(a, b));
            }
        }
        let mut boundary = Vec::with_capacity(open_edges.len());
        let mut boundary_lookup = HashMap::with_capacity(open_edges.len());
        for (key, oriented) in &open_edges {
            let tag = tags.get(key).copied().unwrap_or(BoundaryTag::Free);
            boundary_lookup.insert(*key, boundary.len());
            boundary.push(BoundaryEdge { nodes: *oriented, tag });
        }

        let mut node_elements = vec![Vec::new(); n];
        for (e, tri) in tris.iter().enumerate() {
            for &v in tri {
                node_elements[v].push(e);
            }
        }

        let cells = tris.len().max(1);
        let element_grid = UniformGrid::build(bbox, cells, tris.len(), |e| {
            let [a, b, c] = tris[e];
            let mut bb = BoundingBox::from_points([&nodes[a], &nodes[b], &nodes[c]]).unwrap();
            bb.min = bb.min - Point::new(tolerance, tolerance);
            bb.max = bb.max + Point::new(tolerance, tolerance);
            bb
        });
        let node_grid = UniformGrid::build(bbox, cells, n, |v| {
            let p = nodes[v];
            BoundingBox { min: p - Point::new(tolerance, tolerance), max: p + Point::new(tolerance, tolerance) }
        });
        let boundary_grid = UniformGrid::build_segments(bbox, cells, boundary.len(), tolerance, |k| {
            let [a, b] = boundary[k].nodes;
            (nodes[a], nodes[b])
        });

        Ok(Mesh {
            nodes,
            elements: tris,
            element_material,
            materials,
            boundary,
            mode,
            tolerance,
            bbox,
            node_elements,
            boundary_lookup,
            edge_count: edge_use.len(),
            min_edge,
            element_grid,
            node_grid,
            boundary_grid,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| MeshError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Mesh, MeshError> {
        let file: MeshFile = serde_json::from_str(text)?;
        file.into_mesh()
    }

    pub fn to_file(&self) -> MeshFile {
        MeshFile::from_mesh(self)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> Point {
        self.nodes[k]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn element_material(&self, e: usize) -> &Material {
        &self.materials[self.element_material[e]]
    }

    /// Index into [`Mesh::materials`] for element `e`.
    pub fn element_material_index(&self, e: usize) -> usize {
        self.element_material[e]
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn boundary_edge(&self, a: usize, b: usize) -> Option<&BoundaryEdge> {
        self.boundary_lookup.get(&edge_key(a, b)).map(|&k| &self.boundary[k])
    }

    pub fn mode(&self) -> AnalysisMode {
        self.mode
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn bounding_box(&self) -> BoundingBox {
        self.bbox
    }

    /// Shortest element edge.
    pub fn min_edge_length(&self) -> f64 {
        self.min_edge
    }

    pub fn node_elements(&self, k: usize) -> &[usize] {
        &self.node_elements[k]
    }

    pub fn element_points(&self, e: usize) -> [Point; 3] {
        let [a, b, c] = self.elements[e];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn element_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_points(e);
        0.5 * orient(a, b, c)
    }

    pub fn centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.element_points(e);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Barycentric coordinates of `p` with respect to element `e`.
    pub fn barycentric(&self, e: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.element_points(e);
        let area2 = orient(a, b, c);
        let mut w = [orient(p, b, c) / area2, orient(a, p, c) / area2, orient(a, b, p) / area2];
        // Close the partition of unity on the dominant weight, so vertices map exactly to 1.
        let k = (0..3).max_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap();
        w[k] = 1.0 - w[(k + 1) % 3] - w[(k + 2) % 3];
        w
    }

    /// Whether `p` lies in element `e`, within the geometric tolerance.
    pub fn element_contains(&self, e: usize, p: Point) -> bool {
        let [a, b, c] = self.element_points(e);
        signed_distance(a, b, p) >= -self.tolerance
            && signed_distance(b, c, p) >= -self.tolerance
            && signed_distance(c, a, p) >= -self.tolerance
    }

    fn strictly_inside(&self, e: usize, p: Point) -> bool {
        let [a, b, c] = self.element_points(e);
        signed_distance(a, b, p) > self.tolerance
            && signed_distance(b, c, p) > self.tolerance
            && signed_distance(c, a, p) > self.tolerance
    }

    /// Element containing `p`; the lowest id wins on shared edges and vertices.
    pub fn locate_element(&self, p: Point) -> Option<usize> {
        if !self.bbox.contains(p, self.tolerance) {
            return None;
        }
        self.element_grid.items_at(p).iter().copied().find(|&e| self.element_contains(e, p))
    }

    /// Same result as [`Mesh::locate_element`], trying `hint` first. A hint is
    /// only accepted when `p` is strictly interior to it, so the tie-break rule
    /// is unaffected.
    pub fn locate_element_near(&self, p: Point, hint: Option<usize>) -> Option<usize> {
        if let Some(e) = hint {
            if self.strictly_inside(e, p) {
                return Some(e);
            }
        }
        self.locate_element(p)
    }

    /// Among the elements containing `p`, the one with the weakest material
    /// (lowest cohesion, then lowest friction, then lowest id).
    pub fn weakest_element_at(&self, p: Point, hint: Option<usize>) -> Option<usize> {
        if let Some(e) = hint {
            if self.strictly_inside(e, p) {
                return Some(e);
            }
        }
        if !self.bbox.contains(p, self.tolerance) {
            return None;
        }
        self.element_grid.items_at(p).iter().copied().filter(|&e| self.element_contains(e, p)).min_by(|&e, &f| {
            let (me, mf) = (self.element_material(e), self.element_material(f));
            me.cohesion
                .total_cmp(&mf.cohesion)
                .then(me.friction_angle.total_cmp(&mf.friction_angle))
                .then(e.cmp(&f))
        })
    }

    /// Whether the direction `dir` leaving node `k` points into one of the
    /// elements around `k` (boundary directions count as inside).
    pub fn direction_enters_domain(&self, k: usize, dir: Point) -> bool {
        const ANGLE_TOL: f64 = 1e-9;
        let d = dir.normalized();
        let pk = self.nodes[k];
        self.node_elements[k].iter().any(|&e| {
            let tri = self.elements[e];
            let at = tri.iter().position(|&v| v == k).unwrap();
            let p = (self.nodes[tri[(at + 1) % 3]] - pk).normalized();
            let q = (self.nodes[tri[(at + 2) % 3]] - pk).normalized();
            p.cross(d) >= -ANGLE_TOL && d.cross(q) >= -ANGLE_TOL
        })
    }

    /// True iff the open segment between nodes `a` and `b` leaves the domain,
    /// properly crosses a boundary (or slit) edge, runs along a boundary edge
    /// other than (a, b) itself, or passes through a third node.
    pub fn segment_blocked(&self, a: usize, b: usize) -> bool {
        if a == b {
            return true;
        }
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        let tol = self.tolerance;
        if pa.distance(pb) <= tol {
            return true;
        }
        if !self.direction_enters_domain(a, pb - pa) || !self.direction_enters_domain(b, pa - pb) {
            return true;
        }
        let key = edge_key(a, b);
        let blocked_by_edge = |k: usize| {
            let [c, d] = self.boundary[k].nodes;
            if edge_key(c, d) == key {
                return false;
            }
            let (pc, pd) = (self.nodes[c], self.nodes[d]);
            segments_cross_properly(pa, pb, pc, pd, tol) || segments_overlap(pa, pb, pc, pd, tol)
        };
        let blocked_by_node =
            |k: usize| k != a && k != b && on_open_segment(pa, pb, self.nodes[k], tol);
        let mut blocked = false;
        self.boundary_grid.visit_segment(pa, pb, tol, |cell| {
            blocked = self.boundary_grid.cell(cell).iter().any(|&k| blocked_by_edge(k));
            blocked
        });
        if blocked {
            return true;
        }
        self.node_grid.visit_segment(pa, pb, tol, |cell| {
            blocked = self.node_grid.cell(cell).iter().any(|&k| blocked_by_node(k));
            blocked
        });
        blocked
    }

    /// If the segment (a, b) is covered by a chain of collinear boundary edges,
    /// returns the combined (most restrictive) tag of that chain.
    pub fn boundary_chain_tag(&self, a: usize, b: usize) -> Option<BoundaryTag> {
        if let Some(edge) = self.boundary_edge(a, b) {
            return Some(edge.tag);
        }
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        let len = pa.distance(pb);
        let tol = self.tolerance;
        let t = (pb - pa) * (1.0 / len);
        let mut pieces: Vec<(f64, f64, BoundaryTag)> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        self.boundary_grid.visit_segment(pa, pb, tol, |cell| {
            for &k in self.boundary_grid.cell(cell) {
                if !seen.insert(k) {
                    continue;
                }
                let [c, d] = self.boundary[k].nodes;
                let (pc, pd) = (self.nodes[c], self.nodes[d]);
                if signed_distance(pa, pb, pc).abs() > tol || signed_distance(pa, pb, pd).abs() > tol {
                    continue;
                }
                let (s0, s1) = ((pc - pa).dot(t), (pd - pa).dot(t));
                let (lo, hi) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
                if lo >= -tol && hi <= len + tol && hi - lo > tol {
                    pieces.push((lo, hi, self.boundary[k].tag));
                }
            }
            false
        });
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut reach = 0.0;
        let mut tag: Option<BoundaryTag> = None;
        for (lo, hi, t) in pieces {
            if lo > reach + tol {
                return None;
            }
            reach = f64::max(reach, hi);
            tag = Some(tag.map_or(t, |acc| acc.combine(t)));
        }
        if reach >= len - tol {
            tag
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn material(id: u32) -> Material {
        Material { id, youngs_modulus: 1.0, poisson_ratio: 0.0, density: 1.0, cohesion: 1.0, friction_angle: 0.0 }
    }

    /// Unit square split along the (0,0)-(1,1) diagonal.
    fn unit_square() -> Mesh {
        let nodes = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        Mesh::new(nodes, vec![([0, 1, 2], 1), ([0, 2, 3], 1)], vec![], AnalysisMode::PlaneStress, vec![material(1)])
            .unwrap()
    }

    /// Structured nx × ny grid on [0, w] × [0, h], cells split along "/".
    fn grid(nx: usize, ny: usize, w: f64, h: f64) -> Mesh {
        let mut nodes = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(Point::new(w * i as f64 / nx as f64, h * j as f64 / ny as f64));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                elements.push(([id(i, j), id(i + 1, j), id(i + 1, j + 1)], 1));
                elements.push(([id(i, j), id(i + 1, j + 1), id(i, j + 1)], 1));
            }
        }
        Mesh::new(nodes, elements, vec![], AnalysisMode::PlaneStress, vec![material(1)]).unwrap()
    }

    #[test]
    fn unit_square_counts() {
        let m = unit_square();
        assert_eq!(m.node_count(), 4);
        assert_eq!(m.element_count(), 2);
        assert_eq!(m.boundary().len(), 4);
        assert_eq!(m.node_count() as i64 - m.edge_count() as i64 + m.element_count() as i64, 1);
    }

    #[test]
    fn clockwise_triangle_is_reoriented() {
        let nodes = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let m = Mesh::new(nodes, vec![([0, 2, 1], 1)], vec![], AnalysisMode::PlaneStress, vec![material(1)]).unwrap();
        assert!(m.element_area(0) > 0.0);
        assert_eq!(m.elements()[0], [0, 1, 2]);
    }

    #[test]
    fn out_of_range_node_is_rejected() {
        let nodes = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        let err = Mesh::new(nodes, vec![([0, 1, 99], 1)], vec![], AnalysisMode::PlaneStress, vec![material(1)])
            .unwrap_err();
        assert!(matches!(err, MeshError::NodeOutOfRange { index: 99, .. }));
    }

    #[test]
    fn degenerate_and_non_manifold_are_rejected() {
        let nodes = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        let err = Mesh::new(nodes, vec![([0, 1, 2], 1)], vec![], AnalysisMode::PlaneStress, vec![material(1)])
            .unwrap_err();
        assert!(matches!(err, MeshError::DegenerateElement(0)));

        let nodes = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 1.0),
            Point::new(0.5, -1.0),
            Point::new(0.5, 2.0),
        ];
        let elements = vec![([0, 1, 2], 1), ([1, 0, 3], 1), ([0, 1, 4], 1)];
        let err = Mesh::new(nodes, elements, vec![], AnalysisMode::PlaneStress, vec![material(1)]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldEdge(0, 1)));
    }

    #[test]
    fn interior_edge_cannot_be_tagged() {
        let nodes = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        let err = Mesh::new(
            nodes,
            vec![([0, 1, 2], 1), ([0, 2, 3], 1)],
            vec![([0, 2], BoundaryTag::Fixed)],
            AnalysisMode::PlaneStress,
            vec![material(1)],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::NotABoundaryEdge(0, 2)));
    }

    #[test]
    fn locate_centroids_and_outside() {
        let m = grid(4, 3, 2.0, 1.5);
        for e in 0..m.element_count() {
            assert_eq!(m.locate_element(m.centroid(e)), Some(e));
        }
        assert_eq!(m.locate_element(Point::new(5.0, 5.0)), None);
        assert_eq!(m.locate_element(Point::new(-0.1, 0.5)), None);
    }

    #[test]
    fn shared_edge_goes_to_lowest_id() {
        let m = grid(4, 3, 2.0, 1.5);
        // Every interior edge: its midpoint belongs to the lower-numbered neighbour.
        for e in 0..m.element_count() {
            let tri = m.elements()[e];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let mid = m.node(a).lerp(m.node(b), 0.5);
                let owners: Vec<usize> = (0..m.element_count())
                    .filter(|&f| m.elements()[f].contains(&a) && m.elements()[f].contains(&b))
                    .collect();
                assert_eq!(m.locate_element(mid), owners.iter().copied().min());
            }
        }
    }

    #[test]
    fn diagonal_of_square_is_admissible() {
        let m = unit_square();
        assert!(!m.segment_blocked(1, 3));
        assert!(!m.segment_blocked(0, 2));
        assert!(!m.segment_blocked(0, 1));
    }

    #[test]
    fn collinear_node_blocks() {
        let m = grid(2, 1, 2.0, 1.0);
        // nodes 0 (0,0), 1 (1,0), 2 (2,0)
        assert!(m.segment_blocked(0, 2));
        assert!(m.segment_blocked(2, 0));
        assert!(!m.segment_blocked(0, 1));
    }

    #[test]
    fn segment_blocked_is_symmetric() {
        let m = grid(3, 3, 1.0, 1.0);
        for a in 0..m.node_count() {
            for b in 0..m.node_count() {
                if a != b {
                    assert_eq!(m.segment_blocked(a, b), m.segment_blocked(b, a), "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn non_convex_domain_blocks_exterior_chords() {
        // L-shape: unit square minus the upper-right quarter.
        let p = |x: f64, y: f64| Point::new(x, y);
        let nodes = vec![p(0.0, 0.0), p(0.5, 0.0), p(1.0, 0.0), p(0.0, 0.5), p(0.5, 0.5), p(1.0, 0.5), p(0.0, 1.0), p(0.5, 1.0)];
        let elements = vec![
            ([0, 1, 4], 1),
            ([0, 4, 3], 1),
            ([1, 2, 5], 1),
            ([1, 5, 4], 1),
            ([3, 4, 7], 1),
            ([3, 7, 6], 1),
        ];
        let m = Mesh::new(nodes, elements, vec![], AnalysisMode::PlaneStress, vec![material(1)]).unwrap();
        // (1,0.5) to (0.5,1) runs through the missing quarter.
        assert!(m.segment_blocked(5, 7));
        assert!(!m.segment_blocked(0, 5));
    }

    #[test]
    fn tag_combination_prefers_restrictive() {
        use BoundaryTag::*;
        assert_eq!(Free.combine(Fixed), Fixed);
        assert_eq!(RollerN.combine(RollerT), Fixed);
        assert_eq!(Free.combine(Loaded), Loaded);
        assert_eq!(RollerN.combine(Free), RollerN);
    }
}
