//! JSON mesh format.

use serde::{Deserialize, Serialize};

use super::{AnalysisMode, BoundaryTag, Material, Mesh, MeshError};
use crate::geometry::Point;

/// A node entry: either a bare `[x, y]` pair (id = position in the array) or
/// an explicit `{"id", "x", "y"}` record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeRecord {
    Plain([f64; 2]),
    WithId { id: usize, x: f64, y: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub edge: [usize; 2],
    pub tag: BoundaryTag,
}

/// On-disk mesh layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub nodes: Vec<NodeRecord>,
    /// `[i, j, k, material_id]`
    pub elements: Vec<[u64; 4]>,
    #[serde(default)]
    pub boundary: Vec<BoundaryRecord>,
    pub mode: AnalysisMode,
    pub materials: Vec<Material>,
}

impl MeshFile {
    pub fn into_mesh(self) -> Result<Mesh, MeshError> {
        let count = self.nodes.len();
        let mut slots: Vec<Option<Point>> = vec![None; count];
        for (k, rec) in self.nodes.into_iter().enumerate() {
            let (id, p) = match rec {
                NodeRecord::Plain([x, y]) => (k, Point::new(x, y)),
                NodeRecord::WithId { id, x, y } => (id, Point::new(x, y)),
            };
            if id >= count {
                return Err(MeshError::NodeIdOutOfRange { id, count });
            }
            if slots[id].is_some() {
                return Err(MeshError::DuplicateNodeId(id));
            }
            slots[id] = Some(p);
        }
        // With n records and no duplicates among ids < n, every slot is filled.
        let nodes: Vec<Point> = slots.into_iter().map(|p| p.expect("node slot filled")).collect();
        let to_index = |v: u64| usize::try_from(v).unwrap_or(usize::MAX);
        let elements = self
            .elements
            .iter()
            .map(|e| ([to_index(e[0]), to_index(e[1]), to_index(e[2])], u32::try_from(e[3]).unwrap_or(u32::MAX)))
            .collect();
        let boundary = self.boundary.into_iter().map(|r| (r.edge, r.tag)).collect();
        Mesh::new(nodes, elements, boundary, self.mode, self.materials)
    }

    pub fn from_mesh(mesh: &Mesh) -> MeshFile {
        MeshFile {
            nodes: mesh.nodes().iter().map(|p| NodeRecord::Plain([p.x, p.y])).collect(),
            elements: mesh
                .elements()
                .iter()
                .enumerate()
                .map(|(e, t)| [t[0] as u64, t[1] as u64, t[2] as u64, mesh.element_material(e).id as u64])
                .collect(),
            boundary: mesh.boundary().iter().map(|b| BoundaryRecord { edge: b.nodes, tag: b.tag }).collect(),
            mode: mesh.mode(),
            materials: mesh.materials().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh file serializes")
    }
}
