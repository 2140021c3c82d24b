//! Bounded primal revised simplex with a composite phase 1, Harris ratio
//! test, partial pricing, bound perturbation and Bland fallback on degenerate
//! streaks, and column sifting. A dual simplex pass runs first when the
//! initial basis is dual feasible.

use log::debug;
use rayon::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lu::BasisFactor;
use super::presolve::presolve;
use super::{LinearProgram, LpError, LpSolution, LpSolver, LpStatus};

/// Bound relaxation applied on degenerate stalls (scaled units).
const PERTURBATION: f64 = 1e-7;

/// Bound shifting stops after this many restorations of the true
/// right-hand side.
const MAX_RESTORES: usize = 3;

/// Columns per parallel task in the dual pivot row.
const CHUNK: usize = 8192;

/// Length of the partial-pricing list.
const SHORTLIST: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexOptions {
    /// 0 selects a limit from the problem size.
    pub max_iterations: usize,
    pub refactor_interval: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub degenerate_streak: usize,
    pub presolve: bool,
    pub scaling: bool,
    /// Solve over a growing working set of columns when columns greatly outnumber rows.
    pub sifting: bool,
    /// Start with the dual simplex over all columns when the initial basis
    /// is dual feasible; the primal loop finishes if it gives up.
    pub dual: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 0,
            refactor_interval: 100,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            degenerate_streak: 50,
            presolve: true,
            scaling: true,
            sifting: true,
            dual: true,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SimplexSolver {
    pub options: SimplexOptions,
}

impl SimplexSolver {
    pub fn new(options: SimplexOptions) -> Self {
        SimplexSolver { options }
    }
}

impl LpSolver for SimplexSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let opts = &self.options;
        let infeasible = |iterations| LpSolution { status: LpStatus::Infeasible, objective: f64::NAN, x: Vec::new(), iterations };
        let (reduced, pre) = if opts.presolve {
            let pre = presolve(lp)?;
            match pre.reduced.clone() {
                Some(r) => (r, Some(pre)),
                None => return Ok(infeasible(0)),
            }
        } else {
            (drop_pinned(lp), None)
        };
        let (status, xr, iterations) = solve_core(&reduced, opts)?;
        match status {
            LpStatus::Optimal => {
                let x = match &pre {
                    Some(p) => p.postsolve(&xr),
                    None => {
                        let mut x = vec![0.0; lp.n_vars()];
                        let kept = (0..lp.n_vars()).filter(|&j| !lp.pinned[j]);
                        for (j, v) in kept.zip(xr) {
                            x[j] = v;
                        }
                        x
                    }
                };
                let objective = lp.objective_value(&x);
                Ok(LpSolution { status, objective, x, iterations })
            }
            LpStatus::Infeasible => Ok(infeasible(iterations)),
            LpStatus::Unbounded => {
                Ok(LpSolution { status, objective: f64::NEG_INFINITY, x: Vec::new(), iterations })
            }
        }
    }
}

/// The program without its pinned columns, which stay at zero.
fn drop_pinned(lp: &LinearProgram) -> LinearProgram {
    if !lp.pinned.iter().any(|&p| p) {
        return lp.clone();
    }
    let kept: Vec<usize> = (0..lp.n_vars()).filter(|&j| !lp.pinned[j]).collect();
    let triplets: Vec<(usize, usize, f64)> =
        kept.iter().enumerate().flat_map(|(k, &j)| lp.column(j).map(move |(r, a)| (r, k, a))).collect();
    LinearProgram::from_triplets(
        lp.n_rows(),
        kept.iter().map(|&j| lp.objective[j]).collect(),
        &triplets,
        lp.rhs.clone(),
        kept.iter().map(|&j| lp.nonneg[j]).collect(),
        vec![false; kept.len()],
    )
    .expect("same rows")
}

fn pow2_scale(v: f64) -> f64 {
    if v > 0.0 && v.is_finite() {
        (2.0f64).powi(-(v.log2().round() as i32))
    } else {
        1.0
    }
}

/// Row-then-column inf-norm equilibration with power-of-two factors,
/// followed by a common variable factor normalizing the right-hand side.
fn scale(lp: &LinearProgram) -> (LinearProgram, Vec<f64>, f64) {
    let m = lp.n_rows();
    let n = lp.n_vars();
    let mut row_max = vec![0.0f64; m];
    for j in 0..n {
        for (r, a) in lp.column(j) {
            row_max[r] = row_max[r].max(a.abs());
        }
    }
    let rs: Vec<f64> = row_max.iter().map(|&v| pow2_scale(v)).collect();
    let mut cs = vec![1.0; n];
    let mut triplets = Vec::with_capacity(lp.columns.nnz());
    for j in 0..n {
        let cmax = lp.column(j).fold(0.0f64, |mx, (r, a)| mx.max((a * rs[r]).abs()));
        cs[j] = pow2_scale(cmax);
        for (r, a) in lp.column(j) {
            triplets.push((r, j, a * rs[r] * cs[j]));
        }
    }
    let cmax = (0..n).fold(0.0f64, |mx, j| mx.max((lp.objective[j] * cs[j]).abs()));
    let obj_scale = pow2_scale(cmax);
    let objective = (0..n).map(|j| lp.objective[j] * cs[j] * obj_scale).collect();
    // Bounds are 0 or infinite, so all variables can share one more factor
    // that brings the right-hand side to unit size; the tolerances then
    // apply relative to it.
    let mut rhs: Vec<f64> = lp.rhs.iter().zip(&rs).map(|(b, s)| b * s).collect();
    let gamma = pow2_scale(rhs.iter().fold(0.0f64, |m, b| m.max(b.abs())));
    for b in &mut rhs {
        *b *= gamma;
    }
    for c in &mut cs {
        *c /= gamma;
    }
    let scaled =
        LinearProgram::from_triplets(m, objective, &triplets, rhs, lp.nonneg.clone(), lp.pinned.clone()).expect("same shape");
    (scaled, cs, obj_scale)
}

/// Solves a program without pinned variables. Returns values for its variables.
fn solve_core(lp: &LinearProgram, opts: &SimplexOptions) -> Result<(LpStatus, Vec<f64>, usize), LpError> {
    let n = lp.n_vars();
    if lp.n_rows() == 0 {
        // Only bounds remain: optimal at zero unless some cost can decrease forever.
        let unbounded = (0..n).any(|j| lp.objective[j] < 0.0 || (!lp.nonneg[j] && lp.objective[j] != 0.0));
        let status = if unbounded { LpStatus::Unbounded } else { LpStatus::Optimal };
        return Ok((status, vec![0.0; n], 0));
    }
    let (scaled, col_scale) = if opts.scaling {
        let (s, cs, _) = scale(lp);
        (s, cs)
    } else {
        (lp.clone(), vec![1.0; n])
    };
    let mut core = Core::new(&scaled, opts);
    let status = match if opts.dual { core.run_dual()? } else { None } {
        Some(status) => status,
        None => core.run()?,
    };
    let x = match status {
        LpStatus::Optimal => {
            let xs = core.primal();
            xs.iter().zip(&col_scale).map(|(v, s)| v * s).collect()
        }
        _ => Vec::new(),
    };
    Ok((status, x, core.iterations))
}

struct Core<'a> {
    lp: &'a LinearProgram,
    opts: &'a SimplexOptions,
    m: usize,
    n: usize,
    /// Basis position → variable (n + i is the artificial of row i).
    basis: Vec<usize>,
    /// Variable → basis position, or usize::MAX.
    position: Vec<usize>,
    x_b: Vec<f64>,
    factor: BasisFactor,
    active: Vec<bool>,
    active_list: Vec<usize>,
    /// Columns kept between full pricing passes.
    shortlist: Vec<usize>,
    iterations: usize,
    max_iterations: usize,
    degenerate: usize,
    /// Right-hand side in use; perturbed while `perturbed` is set.
    rhs: Vec<f64>,
    perturbed: bool,
    /// Columns whose improving direction met no breakpoint; skipped until
    /// the next pivot.
    rejected: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

impl<'a> Core<'a> {
    fn new(lp: &'a LinearProgram, opts: &'a SimplexOptions) -> Self {
        let m = lp.n_rows();
        let n = lp.n_vars();
        let basis: Vec<usize> = (n..n + m).collect();
        let mut position = vec![usize::MAX; n + m];
        for (p, &v) in basis.iter().enumerate() {
            position[v] = p;
        }
        let unit: Vec<Vec<(usize, f64)>> = (0..m).map(|i| vec![(i, 1.0)]).collect();
        let refs: Vec<&[(usize, f64)]> = unit.iter().map(|c| c.as_slice()).collect();
        let factor = BasisFactor::factor(m, &refs).ok().expect("identity basis");
        let mut active = vec![true; n];
        let sift_threshold = 8 * m + 2000;
        if opts.sifting && n > sift_threshold {
            let keep = (2 * m).max(500);
            let mut nonneg: Vec<usize> = (0..n).filter(|&j| lp.nonneg[j]).collect();
            nonneg.sort_by(|&a, &b| lp.objective[a].total_cmp(&lp.objective[b]).then(a.cmp(&b)));
            active = vec![false; n];
            for j in 0..n {
                if !lp.nonneg[j] {
                    active[j] = true;
                }
            }
            for &j in nonneg.iter().take(keep) {
                active[j] = true;
            }
        }
        let active_list = (0..n).filter(|&j| active[j]).collect();
        let max_iterations = if opts.max_iterations > 0 { opts.max_iterations } else { 100 * m + 50 * n.min(20 * m) + 100_000 };
        Core {
            lp,
            opts,
            m,
            n,
            basis,
            position,
            x_b: lp.rhs.clone(),
            factor,
            active,
            active_list,
            shortlist: Vec::new(),
            iterations: 0,
            max_iterations,
            degenerate: 0,
            rhs: lp.rhs.clone(),
            perturbed: false,
            rejected: Vec::new(),
        }
    }

    /// Shifts the right-hand side by A·δ for a small random δ ≥ 0 over the
    /// sign-constrained columns. This relaxes their bounds to x ≥ −δ, which
    /// splits degenerate vertices while keeping the rows consistent.
    fn perturb(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for j in 0..self.n {
            if self.lp.nonneg[j] {
                let d = PERTURBATION * rng.gen_range(0.5..1.0);
                for (r, a) in self.lp.column(j) {
                    self.rhs[r] += a * d;
                }
            }
        }
        self.perturbed = true;
        self.recompute_primal();
    }

    fn bounds(&self, var: usize) -> (f64, f64) {
        if var >= self.n {
            (0.0, 0.0)
        } else if self.lp.nonneg[var] {
            (0.0, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }

    fn column(&self, var: usize) -> Vec<(usize, f64)> {
        if var >= self.n {
            vec![(var - self.n, 1.0)]
        } else {
            self.lp.column(var).collect()
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        for _attempt in 0..3 {
            let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&v| self.column(v)).collect();
            let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
            match BasisFactor::factor(self.m, &refs) {
                Ok(f) => {
                    self.factor = f;
                    self.recompute_primal();
                    return Ok(());
                }
                Err(sing) => {
                    debug!("basis repair: {} dependent columns", sing.positions.len());
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let old = self.basis[pos];
                        self.position[old] = usize::MAX;
                        let art = self.n + row;
                        self.basis[pos] = art;
                        self.position[art] = pos;
                    }
                }
            }
        }
        Err(LpError::Numerical("basis repair failed".into()))
    }

    fn recompute_primal(&mut self) {
        let mut x = self.rhs.clone();
        self.factor.ftran(&mut x);
        self.x_b = x;
    }

    fn infeasibility(&self, pos: usize) -> f64 {
        let (l, u) = self.bounds(self.basis[pos]);
        let x = self.x_b[pos];
        if x < l {
            l - x
        } else if x > u {
            x - u
        } else {
            0.0
        }
    }

    fn phase(&self) -> Phase {
        let tol = self.opts.feasibility_tol;
        if (0..self.m).any(|p| self.infeasibility(p) > tol) {
            Phase::One
        } else {
            Phase::Two
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let tol = self.opts.feasibility_tol;
        let mut c: Vec<f64> = (0..self.m)
            .map(|p| {
                let v = self.basis[p];
                match phase {
                    Phase::One => {
                        let (l, u) = self.bounds(v);
                        let x = self.x_b[p];
                        if x < l - tol {
                            -1.0
                        } else if x > u + tol {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Phase::Two => {
                        if v < self.n {
                            self.lp.objective[v]
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect();
        self.factor.btran(&mut c);
        c
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase: Phase) -> f64 {
        let c = if phase == Phase::Two { self.lp.objective[j] } else { 0.0 };
        c - self.lp.column(j).map(|(r, a)| a * y[r]).sum::<f64>()
    }

    /// Improving direction for nonbasic `j` with reduced cost `d`: +1, -1 or 0.
    fn direction(&self, j: usize, d: f64) -> f64 {
        let tol = self.opts.optimality_tol;
        if d < -tol {
            1.0
        } else if d > tol && !self.lp.nonneg[j] {
            -1.0
        } else {
            0.0
        }
    }

    /// Dantzig pricing over a short list of the most attractive columns,
    /// rebuilt by a full scan of the working set when it runs dry.
    fn price(&mut self, y: &[f64], phase: Phase, bland: bool) -> Option<(usize, f64)> {
        if bland {
            return self.active_list.iter().find_map(|&j| {
                if self.position[j] != usize::MAX || self.rejected.contains(&j) {
                    return None;
                }
                let d = self.reduced_cost(j, y, phase);
                (self.direction(j, d) != 0.0).then_some((j, d))
            });
        }
        let mut best: Option<(usize, f64)> = None;
        let mut kept = Vec::with_capacity(self.shortlist.len());
        for &j in &self.shortlist {
            if self.position[j] != usize::MAX || self.rejected.contains(&j) {
                continue;
            }
            let d = self.reduced_cost(j, y, phase);
            if self.direction(j, d) == 0.0 {
                continue;
            }
            kept.push(j);
            if best.map_or(true, |(_, b)| d.abs() > b.abs()) {
                best = Some((j, d));
            }
        }
        self.shortlist = kept;
        if best.is_some() {
            return best;
        }
        let mut found: Vec<(f64, usize)> = Vec::new();
        for &j in &self.active_list {
            if self.position[j] != usize::MAX || self.rejected.contains(&j) {
                continue;
            }
            let d = self.reduced_cost(j, y, phase);
            if self.direction(j, d) != 0.0 {
                found.push((-d.abs(), j));
            }
        }
        if found.len() > SHORTLIST {
            found.select_nth_unstable_by(SHORTLIST, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            found.truncate(SHORTLIST);
        }
        let &(_, j) = found.iter().min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))?;
        self.shortlist = found.iter().map(|&(_, k)| k).collect();
        Some((j, self.reduced_cost(j, y, phase)))
    }

    /// Adds improving inactive columns to the working set. Returns how many.
    fn sift(&mut self, y: &[f64], phase: Phase) -> usize {
        if self.active_list.len() == self.n {
            return 0;
        }
        let mut found: Vec<(f64, usize)> = Vec::new();
        for j in 0..self.n {
            if self.active[j] {
                continue;
            }
            let d = self.reduced_cost(j, y, phase);
            if self.direction(j, d) != 0.0 {
                found.push((-d.abs(), j));
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let cap = (2 * self.m).max(500);
        for &(_, j) in found.iter().take(cap) {
            self.active[j] = true;
        }
        let added = found.len().min(cap);
        if added > 0 {
            self.active_list = (0..self.n).filter(|&j| self.active[j]).collect();
            debug!("sifting: added {added} columns, working set {}", self.active_list.len());
        }
        added
    }

    /// Phase 2 reduced costs of every nonbasic column.
    fn all_reduced_costs(&self) -> Vec<f64> {
        let y = self.duals(Phase::Two);
        (0..self.n)
            .map(|j| if self.position[j] == usize::MAX { self.reduced_cost(j, &y, Phase::Two) } else { 0.0 })
            .collect()
    }

    fn dual_feasible(&self, d: &[f64]) -> bool {
        let tol = self.opts.optimality_tol;
        (0..self.n).all(|j| {
            self.position[j] != usize::MAX || if self.lp.nonneg[j] { d[j] >= -tol } else { d[j].abs() <= tol }
        })
    }

    /// Dual simplex over all columns from a dual feasible basis. Returns
    /// `None` when dual feasibility is lost and the primal loop must finish.
    fn run_dual(&mut self) -> Result<Option<LpStatus>, LpError> {
        let tol = self.opts.feasibility_tol;
        let dtol = self.opts.optimality_tol;
        let ptol = self.opts.pivot_tol;
        let mut d = self.all_reduced_costs();
        if !self.dual_feasible(&d) {
            return Ok(None);
        }
        let mut arow = vec![0.0; self.n];
        let mut verified = false;
        loop {
            if self.factor.updates() >= self.opts.refactor_interval {
                self.refactor()?;
                d = self.all_reduced_costs();
                if !self.dual_feasible(&d) {
                    return Ok(None);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            for p in 0..self.m {
                let v = self.infeasibility(p);
                if v > tol && leave.map_or(true, |(_, b)| v > b) {
                    leave = Some((p, v));
                }
            }
            let Some((r, _)) = leave else {
                if !verified {
                    self.refactor()?;
                    d = self.all_reduced_costs();
                    if !self.dual_feasible(&d) {
                        return Ok(None);
                    }
                    verified = true;
                    continue;
                }
                return Ok(Some(LpStatus::Optimal));
            };
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            let (l, _) = self.bounds(self.basis[r]);
            let below = self.x_b[r] < l;
            let target = if below { l } else { self.bounds(self.basis[r]).1 };
            let sigma = if below { 1.0 } else { -1.0 };
            let mut rho = vec![0.0; self.m];
            rho[r] = 1.0;
            self.factor.btran(&mut rho);
            // Pivot row over the nonbasic columns, with the Harris bound
            // and the columns that may fall within it.
            let lp = self.lp;
            let position = &self.position;
            let d_ref = &d;
            let (theta_max, near) = arow
                .par_chunks_mut(CHUNK)
                .enumerate()
                .map(|(c, out)| {
                    let mut bound = f64::INFINITY;
                    let mut near = Vec::new();
                    for (k, o) in out.iter_mut().enumerate() {
                        let j = c * CHUNK + k;
                        if position[j] != usize::MAX {
                            *o = 0.0;
                            continue;
                        }
                        let a: f64 = lp.column(j).map(|(i, v)| rho[i] * v).sum();
                        *o = a;
                        let slack = if lp.nonneg[j] {
                            if sigma * a >= -ptol {
                                continue;
                            }
                            d_ref[j].max(0.0)
                        } else {
                            if a.abs() <= ptol {
                                continue;
                            }
                            d_ref[j].abs()
                        };
                        bound = bound.min((slack + dtol) / a.abs());
                        if slack / a.abs() <= bound {
                            near.push((j, slack));
                        }
                    }
                    (bound, near)
                })
                .reduce(
                    || (f64::INFINITY, Vec::new()),
                    |(t1, mut l1), (t2, l2)| {
                        l1.extend(l2);
                        (t1.min(t2), l1)
                    },
                );
            if theta_max == f64::INFINITY {
                if !verified {
                    self.refactor()?;
                    d = self.all_reduced_costs();
                    verified = true;
                    continue;
                }
                return Ok(Some(LpStatus::Infeasible));
            }
            let mut q = usize::MAX;
            for &(j, slack) in &near {
                let a = arow[j].abs();
                if slack / a <= theta_max && (q == usize::MAX || a > arow[q].abs()) {
                    q = j;
                }
            }
            let arq = arow[q];
            let mut alpha = vec![0.0; self.m];
            for (i, v) in self.lp.column(q) {
                alpha[i] = v;
            }
            self.factor.ftran(&mut alpha);
            if (alpha[r] - arq).abs() > 1e-7 * (1.0 + arq.abs()) {
                debug!("dual simplex: pivot mismatch {} vs {arq}, refactoring", alpha[r]);
                self.refactor()?;
                d = self.all_reduced_costs();
                if !self.dual_feasible(&d) {
                    return Ok(None);
                }
                continue;
            }
            verified = false;
            self.iterations += 1;
            let theta_d = d[q] / arq;
            if theta_d != 0.0 {
                d.par_iter_mut().zip(arow.par_iter()).with_min_len(CHUNK).for_each(|(dj, &a)| *dj -= theta_d * a);
            }
            d[q] = 0.0;
            let leaving = self.basis[r];
            if leaving < self.n {
                d[leaving] = -theta_d;
            }
            let theta_p = (self.x_b[r] - target) / alpha[r];
            for p in 0..self.m {
                if alpha[p] != 0.0 {
                    self.x_b[p] -= theta_p * alpha[p];
                }
            }
            self.x_b[r] = theta_p;
            self.position[leaving] = usize::MAX;
            self.basis[r] = q;
            self.position[q] = r;
            self.factor.update(r, &alpha);
        }
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        let mut verified = false;
        let mut perturbed_once = false;
        let mut ray_retry = false;
        let mut restores = 0;
        loop {
            if self.factor.updates() >= self.opts.refactor_interval {
                self.refactor()?;
            }
            let phase = self.phase();
            let y = self.duals(phase);
            if phase == Phase::Two && self.degenerate > self.opts.degenerate_streak && !perturbed_once {
                perturbed_once = true;
                self.degenerate = 0;
                self.perturb();
                continue;
            }
            let bland = self.degenerate > self.opts.degenerate_streak;
            let Some((q, d)) = self.price(&y, phase, bland) else {
                if self.sift(&y, phase) > 0 {
                    verified = false;
                    continue;
                }
                // Confirm with a fresh factorization before declaring a result.
                if !verified {
                    self.refactor()?;
                    verified = true;
                    continue;
                }
                if self.perturbed {
                    self.rhs = self.lp.rhs.clone();
                    self.perturbed = false;
                    restores += 1;
                    self.degenerate = 0;
                    self.refactor()?;
                    verified = false;
                    continue;
                }
                return Ok(match phase {
                    Phase::One => LpStatus::Infeasible,
                    Phase::Two => LpStatus::Optimal,
                });
            };
            verified = false;
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            self.iterations += 1;
            let dir = self.direction(q, d);
            let mut alpha = vec![0.0; self.m];
            for (r, a) in self.lp.column(q) {
                alpha[r] = a;
            }
            self.factor.ftran(&mut alpha);
            match self.ratio_test(&alpha, dir, bland) {
                None => {
                    if !ray_retry {
                        // Retry once on a fresh factorization before trusting the ray.
                        ray_retry = true;
                        self.iterations -= 1;
                        self.refactor()?;
                        continue;
                    }
                    if phase == Phase::Two {
                        return Ok(LpStatus::Unbounded);
                    }
                    // A phase 1 cost cannot fall forever: the pivot column is
                    // numerically empty where it matters.
                    ray_retry = false;
                    self.iterations -= 1;
                    debug!("simplex: rejecting column {q} with phase 1 ray");
                    self.rejected.push(q);
                    continue;
                }
                Some((r, theta, _)) => {
                    ray_retry = false;
                    self.rejected.clear();
                    let tiny = self.opts.feasibility_tol * 1e-3;
                    if theta <= tiny {
                        self.degenerate += 1;
                    } else {
                        self.degenerate = 0;
                    }
                    for p in 0..self.m {
                        if alpha[p] != 0.0 {
                            self.x_b[p] -= theta * dir * alpha[p];
                        }
                    }
                    self.x_b[r] = dir * theta;
                    let leaving = self.basis[r];
                    self.position[leaving] = usize::MAX;
                    self.basis[r] = q;
                    self.position[q] = r;
                    self.factor.update(r, &alpha);
                    if phase == Phase::Two && restores < MAX_RESTORES {
                        self.shift_bounds();
                    }
                }
            }
        }
    }

    /// Moves basic values left just outside their bounds by the Harris test
    /// back onto them, absorbing the difference in the right-hand side, so
    /// phase 2 never slides back into phase 1.
    fn shift_bounds(&mut self) {
        for p in 0..self.m {
            let (l, u) = self.bounds(self.basis[p]);
            let x = self.x_b[p];
            let delta = x.clamp(l, u) - x;
            if delta != 0.0 {
                for (i, a) in self.column(self.basis[p]) {
                    self.rhs[i] += a * delta;
                }
                self.x_b[p] += delta;
                self.perturbed = true;
            }
        }
    }

    /// Harris two-pass ratio test. Returns (position, step, bound reached).
    fn ratio_test(&self, alpha: &[f64], dir: f64, bland: bool) -> Option<(usize, f64, f64)> {
        let tol = self.opts.feasibility_tol;
        let harris = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;
        // (position, exact ratio, relaxed ratio, bound)
        let mut cands: Vec<(usize, f64, f64, f64)> = Vec::new();
        for p in 0..self.m {
            let a = alpha[p];
            if a.abs() <= ptol {
                continue;
            }
            let delta = -dir * a;
            let (l, u) = self.bounds(self.basis[p]);
            let x = self.x_b[p];
            if delta < 0.0 {
                if x > u + tol && u.is_finite() {
                    cands.push((p, (x - u) / -delta, (x - u) / -delta, u));
                } else if x >= l - tol && l.is_finite() {
                    cands.push((p, ((x - l) / -delta).max(0.0), (x - l + harris).max(0.0) / -delta, l));
                }
            } else if x < l - tol && l.is_finite() {
                cands.push((p, (l - x) / delta, (l - x) / delta, l));
            } else if x <= u + tol && u.is_finite() {
                cands.push((p, ((u - x) / delta).max(0.0), (u - x + harris).max(0.0) / delta, u));
            }
        }
        if cands.is_empty() {
            return None;
        }
        if bland {
            let min = cands.iter().fold(f64::INFINITY, |m, c| m.min(c.1));
            return cands
                .iter()
                .filter(|c| c.1 <= min + 1e-12 * (1.0 + min))
                .min_by_key(|c| self.basis[c.0])
                .map(|c| (c.0, c.1, c.3));
        }
        let theta_max = cands.iter().fold(f64::INFINITY, |m, c| m.min(c.2));
        let mut best: Option<&(usize, f64, f64, f64)> = None;
        for c in cands.iter().filter(|c| c.1 <= theta_max) {
            best = match best {
                None => Some(c),
                Some(b) => {
                    let (ac, ab) = (alpha[c.0].abs(), alpha[b.0].abs());
                    if ac > ab || (ac == ab && self.basis[c.0] < self.basis[b.0]) {
                        Some(c)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best.map(|c| (c.0, c.1, c.3))
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (p, &v) in self.basis.iter().enumerate() {
            if v < self.n {
                let (l, u) = self.bounds(v);
                x[v] = self.x_b[p].clamp(l, u);
            }
        }
        x
    }
}
