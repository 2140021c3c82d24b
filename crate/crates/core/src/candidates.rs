//! Candidate discontinuities between node pairs: enumeration, classification,
//! virtual-work coefficients and dissipation coefficients.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::mesh::{BoundaryTag, Mesh};
use crate::recovery::{interpolate_in_element, NodalStressField};

#[derive(Debug, Error)]
pub enum CandidateError {
    #[error("sample point ({x}, {y}) on candidate ({a}, {b}) is outside the mesh")]
    SampleOutside { a: usize, b: usize, x: f64, y: f64 },
    #[error("stress field has {got} entries, mesh has {expected} nodes")]
    FieldLength { expected: usize, got: usize },
    #[error("cannot write candidate dump: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "tag")]
pub enum CandidateKind {
    Inner,
    Boundary(BoundaryTag),
}

/// A potential discontinuity between nodes `a < b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub a: usize,
    pub b: usize,
    /// Unit tangent from a to b.
    pub t: Point,
    /// Left unit normal `[-t_y, t_x]`.
    pub n: Point,
    pub l: f64,
    pub kind: CandidateKind,
    pub g_t: f64,
    pub g_n: f64,
    /// ∫c dl (N/m per unit slip, per unit thickness).
    pub ce: f64,
    pub tan_phi: f64,
    /// True when the segment samples more than one material.
    pub crosses_interface: bool,
}

impl Candidate {
    pub fn is_inner(&self) -> bool {
        self.kind == CandidateKind::Inner
    }

    /// The same candidate stored with the opposite orientation.
    pub fn reversed(&self) -> Candidate {
        Candidate { a: self.b, b: self.a, t: -self.t, n: -self.n, ..self.clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateOptions {
    /// Drop candidates longer than this (m).
    #[serde(default)]
    pub max_length: Option<f64>,
    /// Drop inner candidates whose samples see more than one material.
    #[serde(default)]
    pub exclude_interface_crossing: bool,
}

/// Number of stress samples on a segment of length `l`: odd, at least 3.
pub fn sample_count(l: f64, h_min: f64) -> usize {
    let k = (l / h_min - 1e-9).ceil().max(0.0) as usize;
    (2 * k + 1).max(3)
}

/// All admissible node pairs `(a, b)`, `a < b`, in lexicographic order.
pub fn admissible_pairs(mesh: &Mesh, options: &CandidateOptions) -> Vec<(usize, usize)> {
    let n = mesh.node_count();
    let max_len = options.max_length.unwrap_or(f64::INFINITY);
    (0..n)
        .into_par_iter()
        .map(|a| {
            let pa = mesh.node(a);
            ((a + 1)..n)
                .filter(|&b| pa.distance(mesh.node(b)) <= max_len && !mesh.segment_blocked(a, b))
                .map(|b| (a, b))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

pub fn classify(mesh: &Mesh, a: usize, b: usize) -> CandidateKind {
    match mesh.boundary_chain_tag(a, b) {
        Some(tag) => CandidateKind::Boundary(tag),
        None => CandidateKind::Inner,
    }
}

/// Locates successive points along a segment, reusing the last element.
struct Walker<'m> {
    mesh: &'m Mesh,
    hint: Option<usize>,
}

impl<'m> Walker<'m> {
    fn new(mesh: &'m Mesh) -> Self {
        Walker { mesh, hint: None }
    }

    fn locate(&mut self, p: Point) -> Option<usize> {
        let e = self.mesh.locate_element_near(p, self.hint)?;
        self.hint = Some(e);
        Some(e)
    }
}

/// Work coefficients (G_t, G_n) of segment a→b by composite Simpson over the
/// smoothed stress field.
pub fn work_coefficients(
    mesh: &Mesh,
    field: &NodalStressField,
    a: usize,
    b: usize,
) -> Result<(f64, f64), CandidateError> {
    let (pa, pb) = (mesh.node(a), mesh.node(b));
    let l = pa.distance(pb);
    let t = (pb - pa) * (1.0 / l);
    let n = t.perp();
    let ct = [t.x * n.x, t.y * n.y, t.x * n.y + t.y * n.x];
    let cn = [n.x * n.x, n.y * n.y, 2.0 * n.x * n.y];
    let count = sample_count(l, mesh.min_edge_length());
    let h = l / (count - 1) as f64;
    let mut walker = Walker::new(mesh);
    let (mut gt, mut gn) = (0.0, 0.0);
    for k in 0..count {
        let s = if k == 0 {
            field.0[a]
        } else if k == count - 1 {
            field.0[b]
        } else {
            let p = pa.lerp(pb, k as f64 / (count - 1) as f64);
            let e = walker.locate(p).ok_or(CandidateError::SampleOutside { a, b, x: p.x, y: p.y })?;
            interpolate_in_element(mesh, field, e, p)
        };
        let w = if k == 0 || k == count - 1 {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        gt += w * (ct[0] * s[0] + ct[1] * s[1] + ct[2] * s[2]);
        gn += w * (cn[0] * s[0] + cn[1] * s[1] + cn[2] * s[2]);
    }
    Ok((gt * h / 3.0, gn * h / 3.0))
}

/// Material integrals along a→b: (∫c dl, mean tan φ, crosses an interface).
///
/// Uses `sample_count` points at the centres of equal sub-intervals, so no
/// sample sits on a node. A sample on an element edge takes the weaker of
/// the adjacent materials.
pub fn material_integrals(mesh: &Mesh, a: usize, b: usize) -> Result<(f64, f64, bool), CandidateError> {
    let (pa, pb) = (mesh.node(a), mesh.node(b));
    let l = pa.distance(pb);
    let count = sample_count(l, mesh.min_edge_length());
    let mut hint = None;
    let (mut c, mut tan) = (0.0, 0.0);
    let mut first_material = None;
    let mut crosses = false;
    for k in 0..count {
        let p = pa.lerp(pb, (k as f64 + 0.5) / count as f64);
        let e = mesh.weakest_element_at(p, hint).ok_or(CandidateError::SampleOutside { a, b, x: p.x, y: p.y })?;
        hint = Some(e);
        let m = mesh.element_material_index(e);
        match first_material {
            None => first_material = Some(m),
            Some(f) if f != m => crosses = true,
            _ => {}
        }
        let mat = mesh.element_material(e);
        c += mat.cohesion;
        tan += mat.tan_phi();
    }
    Ok((c * l / count as f64, tan / count as f64, crosses))
}

pub fn dissipation_coefficient(mesh: &Mesh, a: usize, b: usize) -> Result<f64, CandidateError> {
    material_integrals(mesh, a, b).map(|(ce, _, _)| ce)
}

pub fn effective_friction(mesh: &Mesh, a: usize, b: usize) -> Result<f64, CandidateError> {
    material_integrals(mesh, a, b).map(|(_, tan, _)| tan)
}

/// Enumerates and classifies candidates and computes their material
/// coefficients. Work coefficients are left at zero; see
/// [`assign_work_coefficients`].
pub fn enumerate_candidates(mesh: &Mesh, options: &CandidateOptions) -> Result<Vec<Candidate>, CandidateError> {
    let pairs = admissible_pairs(mesh, options);
    let built: Result<Vec<Option<Candidate>>, CandidateError> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (pa, pb) = (mesh.node(a), mesh.node(b));
            let l = pa.distance(pb);
            let t = (pb - pa) * (1.0 / l);
            let kind = classify(mesh, a, b);
            let (ce, tan_phi, crosses) = match kind {
                CandidateKind::Inner => material_integrals(mesh, a, b)?,
                CandidateKind::Boundary(_) => (0.0, 0.0, false),
            };
            if crosses && options.exclude_interface_crossing {
                return Ok(None);
            }
            Ok(Some(Candidate {
                a,
                b,
                t,
                n: t.perp(),
                l,
                kind,
                g_t: 0.0,
                g_n: 0.0,
                ce,
                tan_phi,
                crosses_interface: crosses,
            }))
        })
        .collect();
    Ok(built?.into_iter().flatten().collect())
}

/// Fills G_t, G_n of every inner candidate from a nodal stress field.
pub fn assign_work_coefficients(
    mesh: &Mesh,
    field: &NodalStressField,
    candidates: &mut [Candidate],
) -> Result<(), CandidateError> {
    if field.len() != mesh.node_count() {
        return Err(CandidateError::FieldLength { expected: mesh.node_count(), got: field.len() });
    }
    candidates.par_iter_mut().try_for_each(|c| {
        let (gt, gn) = if c.is_inner() { work_coefficients(mesh, field, c.a, c.b)? } else { (0.0, 0.0) };
        c.g_t = gt;
        c.g_n = gn;
        Ok(())
    })
}

#[derive(Serialize)]
struct DumpRecord<'a> {
    a: usize,
    b: usize,
    kind: &'a CandidateKind,
    l: f64,
    g_t: f64,
    g_n: f64,
    ce: f64,
    tan_phi: f64,
}

/// Writes one JSON object per line: a, b, kind, l, g_t, g_n, ce, tan_phi.
pub fn write_dump(candidates: &[Candidate], mut out: impl Write) -> Result<(), CandidateError> {
    for c in candidates {
        let rec = DumpRecord { a: c.a, b: c.b, kind: &c.kind, l: c.l, g_t: c.g_t, g_n: c.g_n, ce: c.ce, tan_phi: c.tan_phi };
        serde_json::to_writer(&mut out, &rec).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
