//! The discontinuity-layout LP: nodal compatibility, flow rule and unit work.

use crate::candidates::{Candidate, CandidateKind};
use crate::lp::{LinearProgram, LpError};

/// Variable and row numbering of an assembled VDLO program.
///
/// Variables: `[ζ_t, ζ_n]` per candidate, then `[p₊, p₋]` per inner candidate.
/// Rows: two compatibility rows per node, two flow rows per inner candidate,
/// then the unit-work row.
#[derive(Clone, Debug, PartialEq)]
pub struct VdloLayout {
    pub n_nodes: usize,
    pub n_candidates: usize,
    /// Candidate index of each inner candidate.
    pub inner: Vec<usize>,
    /// Inner position of each candidate, if inner.
    pub inner_index: Vec<Option<usize>>,
}

impl VdloLayout {
    pub fn new(n_nodes: usize, candidates: &[Candidate]) -> Self {
        let mut inner = Vec::new();
        let mut inner_index = vec![None; candidates.len()];
        for (i, c) in candidates.iter().enumerate() {
            if c.is_inner() {
                inner_index[i] = Some(inner.len());
                inner.push(i);
            }
        }
        VdloLayout { n_nodes, n_candidates: candidates.len(), inner, inner_index }
    }

    pub fn zeta_t(&self, i: usize) -> usize {
        2 * i
    }

    pub fn zeta_n(&self, i: usize) -> usize {
        2 * i + 1
    }

    pub fn p_plus(&self, k: usize) -> usize {
        2 * self.n_candidates + 2 * k
    }

    pub fn p_minus(&self, k: usize) -> usize {
        2 * self.n_candidates + 2 * k + 1
    }

    pub fn n_vars(&self) -> usize {
        2 * self.n_candidates + 2 * self.inner.len()
    }

    pub fn compatibility_row(&self, node: usize) -> usize {
        2 * node
    }

    pub fn flow_row(&self, k: usize) -> usize {
        2 * self.n_nodes + 2 * k
    }

    pub fn work_row(&self) -> usize {
        2 * self.n_nodes + 2 * self.inner.len()
    }

    pub fn n_rows(&self) -> usize {
        self.work_row() + 1
    }
}

/// An assembled program together with its numbering.
#[derive(Clone, Debug)]
pub struct VdloLp {
    pub lp: LinearProgram,
    pub layout: VdloLayout,
}

impl VdloLp {
    /// `[ζ_t, ζ_n]` of candidate `i`.
    pub fn zeta(&self, x: &[f64], i: usize) -> [f64; 2] {
        [x[self.layout.zeta_t(i)], x[self.layout.zeta_n(i)]]
    }

    /// `[p₊, p₋]` of inner candidate `k`.
    pub fn p(&self, x: &[f64], k: usize) -> [f64; 2] {
        [x[self.layout.p_plus(k)], x[self.layout.p_minus(k)]]
    }
}

/// The two compatibility rows at `node`, as `(variable, coefficient)` lists.
/// `incident` pairs candidate indices with candidates touching the node.
pub fn compatibility_rows(node: usize, incident: &[(usize, &Candidate)]) -> [Vec<(usize, f64)>; 2] {
    let mut rx = Vec::with_capacity(2 * incident.len());
    let mut ry = Vec::with_capacity(2 * incident.len());
    for &(i, c) in incident {
        // Tangent pointing away from the node.
        let t = if c.a == node { c.t } else { -c.t };
        rx.push((2 * i, t.x));
        rx.push((2 * i + 1, -t.y));
        ry.push((2 * i, t.y));
        ry.push((2 * i + 1, t.x));
    }
    [rx, ry]
}

/// The flow-rule rows of inner candidate `i` (inner position `k`) in a program
/// with `n_candidates` candidates:
/// `ζ_t − p₊ + p₋ = 0` and `−ζ_n + tanφ (p₊ + p₋) = 0`.
pub fn flow_rows(
    i: usize,
    k: usize,
    n_candidates: usize,
    candidate: &Candidate,
) -> Result<[Vec<(usize, f64)>; 2], LpError> {
    if !candidate.is_inner() {
        return Err(LpError::NotInner(i));
    }
    let (pp, pm) = (2 * n_candidates + 2 * k, 2 * n_candidates + 2 * k + 1);
    let tan = candidate.tan_phi;
    Ok([vec![(2 * i, 1.0), (pp, -1.0), (pm, 1.0)], vec![(2 * i + 1, -1.0), (pp, tan), (pm, tan)]])
}

/// Assembles the full program over `candidates` (work coefficients must be set).
pub fn assemble_lp(n_nodes: usize, candidates: &[Candidate]) -> Result<VdloLp, LpError> {
    let layout = VdloLayout::new(n_nodes, candidates);
    if !layout.inner.iter().any(|&i| candidates[i].g_t != 0.0 || candidates[i].g_n != 0.0) {
        return Err(LpError::NoDrivingWork);
    }
    let mut incident: Vec<Vec<(usize, &Candidate)>> = vec![Vec::new(); n_nodes];
    for (i, c) in candidates.iter().enumerate() {
        if c.a >= n_nodes || c.b >= n_nodes {
            return Err(LpError::Malformed(format!("candidate {i} references a missing node")));
        }
        incident[c.a].push((i, c));
        incident[c.b].push((i, c));
    }
    let mut triplets = Vec::with_capacity(12 * candidates.len());
    for (node, inc) in incident.iter().enumerate() {
        let [rx, ry] = compatibility_rows(node, inc);
        let row = layout.compatibility_row(node);
        triplets.extend(rx.into_iter().map(|(v, a)| (row, v, a)));
        triplets.extend(ry.into_iter().map(|(v, a)| (row + 1, v, a)));
    }
    let mut objective = vec![0.0; layout.n_vars()];
    let mut nonneg = vec![false; layout.n_vars()];
    for (k, &i) in layout.inner.iter().enumerate() {
        let [f0, f1] = flow_rows(i, k, candidates.len(), &candidates[i])?;
        let row = layout.flow_row(k);
        triplets.extend(f0.into_iter().map(|(v, a)| (row, v, a)));
        triplets.extend(f1.into_iter().map(|(v, a)| (row + 1, v, a)));
        objective[layout.p_plus(k)] = candidates[i].ce;
        objective[layout.p_minus(k)] = candidates[i].ce;
        nonneg[layout.p_plus(k)] = true;
        nonneg[layout.p_minus(k)] = true;
    }
    let work = layout.work_row();
    for &i in &layout.inner {
        let c = &candidates[i];
        if c.g_t != 0.0 {
            triplets.push((work, layout.zeta_t(i), c.g_t));
        }
        if c.g_n != 0.0 {
            triplets.push((work, layout.zeta_n(i), c.g_n));
        }
    }
    let mut pinned = vec![false; layout.n_vars()];
    for (i, c) in candidates.iter().enumerate() {
        if let CandidateKind::Boundary(tag) = c.kind {
            let (pt, pn) = tag.pins();
            pinned[layout.zeta_t(i)] = pt;
            pinned[layout.zeta_n(i)] = pn;
        }
    }
    let mut rhs = vec![0.0; layout.n_rows()];
    rhs[work] = 1.0;
    let mut lp = LinearProgram::from_triplets(layout.n_rows(), objective, &triplets, rhs, nonneg, pinned)?;
    let mut names = Vec::with_capacity(layout.n_vars());
    for c in candidates {
        names.push(format!("zt_{}_{}", c.a, c.b));
        names.push(format!("zn_{}_{}", c.a, c.b));
    }
    for &i in &layout.inner {
        let c = &candidates[i];
        names.push(format!("pp_{}_{}", c.a, c.b));
        names.push(format!("pm_{}_{}", c.a, c.b));
    }
    lp.names = Some(names);
    Ok(VdloLp { lp, layout })
}
