//! Presolve: pinned variables, free-variable substitution from short rows,
//! singleton/empty rows and duplicate rows.

use std::collections::HashMap;

use crate::lp::{LinearProgram, LpError};

#[derive(Clone, Debug)]
struct Substitution {
    var: usize,
    pivot: f64,
    rhs: f64,
    /// Other entries of the defining row.
    others: Vec<(usize, f64)>,
}

/// A reduced program and the data to map its solutions back.
#[derive(Clone, Debug)]
pub struct Presolved {
    /// `None` when presolve proved infeasibility.
    pub reduced: Option<LinearProgram>,
    /// Original index of each reduced variable.
    pub var_map: Vec<usize>,
    /// Original index of each reduced row.
    pub row_map: Vec<usize>,
    /// Objective constant dropped by fixing variables.
    pub objective_offset: f64,
    n_vars: usize,
    fixed: Vec<(usize, f64)>,
    substitutions: Vec<Substitution>,
}

impl Presolved {
    /// Expands a reduced solution to all original variables.
    pub fn postsolve(&self, reduced_x: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_vars];
        for (k, &j) in self.var_map.iter().enumerate() {
            x[j] = reduced_x[k];
        }
        for &(j, v) in &self.fixed {
            x[j] = v;
        }
        for s in &self.substitutions {
            let acc: f64 = s.others.iter().map(|&(k, a)| a * x[k]).sum();
            x[s.var] = (s.rhs - acc) / s.pivot;
        }
        x
    }
}

struct Work {
    cols: Vec<Vec<(usize, f64)>>,
    obj: Vec<f64>,
    rhs: Vec<f64>,
    nonneg: Vec<bool>,
    var_alive: Vec<bool>,
    row_alive: Vec<bool>,
    offset: f64,
    fixed: Vec<(usize, f64)>,
}

impl Work {
    fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.rhs.len()];
        for (j, col) in self.cols.iter().enumerate() {
            if self.var_alive[j] {
                for &(r, a) in col {
                    if self.row_alive[r] {
                        rows[r].push((j, a));
                    }
                }
            }
        }
        rows
    }

    fn fix(&mut self, j: usize, v: f64) {
        for &(r, a) in &self.cols[j] {
            self.rhs[r] -= a * v;
        }
        self.offset += self.obj[j] * v;
        self.var_alive[j] = false;
        self.fixed.push((j, v));
    }
}

fn dedupe(col: &mut Vec<(usize, f64)>) {
    col.sort_by_key(|&(r, _)| r);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(col.len());
    let scale = col.iter().fold(0.0f64, |m, &(_, a)| m.max(a.abs()));
    for &(r, a) in col.iter() {
        match out.last_mut() {
            Some(last) if last.0 == r => last.1 += a,
            _ => out.push((r, a)),
        }
    }
    out.retain(|&(_, a)| a.abs() > 1e-14 * scale);
    *col = out;
}

/// Tolerance for deciding that a row residual is zero.
const FEAS_TOL: f64 = 1e-11;

pub fn presolve(lp: &LinearProgram) -> Result<Presolved, LpError> {
    let n = lp.n_vars();
    let m = lp.n_rows();
    let mut w = Work {
        cols: (0..n).map(|j| lp.column(j).collect()).collect(),
        obj: lp.objective.clone(),
        rhs: lp.rhs.clone(),
        nonneg: lp.nonneg.clone(),
        var_alive: vec![true; n],
        row_alive: vec![true; m],
        offset: 0.0,
        fixed: Vec::new(),
    };
    for j in 0..n {
        if lp.pinned[j] {
            w.fix(j, 0.0);
        }
    }

    // Free-variable substitution from rows with at most three entries. The
    // chosen rows are mutually independent: no substituted column touches
    // another chosen row, so all substitutions can be applied in one pass.
    let rows = w.rows();
    let mut selected_row = vec![false; m];
    let mut touched = vec![false; m];
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for r in 0..m {
        let row = &rows[r];
        if row.len() < 2 || row.len() > 3 || touched[r] {
            continue;
        }
        let free: Vec<&(usize, f64)> = row.iter().filter(|(j, _)| !w.nonneg[*j]).collect();
        if free.len() != 1 {
            continue;
        }
        let (j, a) = *free[0];
        let row_max = row.iter().fold(0.0f64, |mx, &(_, v)| mx.max(v.abs()));
        if a.abs() < 1e-3 * row_max {
            continue;
        }
        if w.cols[j].iter().any(|&(i, _)| i != r && w.row_alive[i] && selected_row[i]) {
            continue;
        }
        selected_row[r] = true;
        for &(i, _) in &w.cols[j] {
            touched[i] = true;
        }
        chosen.push((r, j));
    }
    let mut substitutions = Vec::with_capacity(chosen.len());
    for &(r, j) in &chosen {
        let pivot = rows[r].iter().find(|&&(v, _)| v == j).unwrap().1;
        let others: Vec<(usize, f64)> = rows[r].iter().copied().filter(|&(v, _)| v != j).collect();
        let b_r = w.rhs[r];
        let col_j: Vec<(usize, f64)> = w.cols[j].iter().copied().filter(|&(i, _)| i != r).collect();
        for &(i, a) in &col_j {
            w.rhs[i] -= a * b_r / pivot;
        }
        w.offset += w.obj[j] * b_r / pivot;
        for &(k, a) in &others {
            let f = -a / pivot;
            w.obj[k] += f * w.obj[j];
            w.cols[k].extend(col_j.iter().map(|&(i, v)| (i, f * v)));
        }
        w.var_alive[j] = false;
        w.row_alive[r] = false;
        substitutions.push(Substitution { var: j, pivot, rhs: b_r, others });
    }
    for col in w.cols.iter_mut() {
        dedupe(col);
    }

    let infeasible = |w: Work, substitutions| {
        Ok(Presolved {
            reduced: None,
            var_map: Vec::new(),
            row_map: Vec::new(),
            objective_offset: w.offset,
            n_vars: n,
            fixed: w.fixed,
            substitutions,
        })
    };

    // Empty and singleton rows, repeated to a fixed point.
    let rhs_scale = lp.rhs.iter().fold(1.0f64, |mx, b| mx.max(b.abs()));
    loop {
        let rows = w.rows();
        let mut changed = false;
        for r in 0..m {
            if !w.row_alive[r] {
                continue;
            }
            let live: Vec<(usize, f64)> = rows[r].iter().copied().filter(|&(j, _)| w.var_alive[j]).collect();
            match live.len() {
                0 => {
                    if w.rhs[r].abs() > FEAS_TOL * rhs_scale {
                        return infeasible(w, substitutions);
                    }
                    w.row_alive[r] = false;
                    changed = true;
                }
                1 => {
                    let (j, a) = live[0];
                    let v = w.rhs[r] / a;
                    if w.nonneg[j] && v < -FEAS_TOL * rhs_scale {
                        return infeasible(w, substitutions);
                    }
                    let v = if w.nonneg[j] { v.max(0.0) } else { v };
                    w.row_alive[r] = false;
                    w.fix(j, v);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    // Duplicate rows: same pattern, proportional coefficients.
    let rows = w.rows();
    let mut groups: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for r in 0..m {
        if w.row_alive[r] {
            groups.entry(rows[r].iter().map(|&(j, _)| j).collect()).or_default().push(r);
        }
    }
    let mut keys: Vec<&Vec<usize>> = groups.keys().collect();
    keys.sort();
    let mut drop = Vec::new();
    for key in keys {
        let members = &groups[key];
        for (ia, &ra) in members.iter().enumerate() {
            if drop.contains(&ra) {
                continue;
            }
            for &rb in &members[ia + 1..] {
                let ratio = rows[rb][0].1 / rows[ra][0].1;
                let scale = rows[ra].iter().fold(0.0f64, |mx, &(_, a)| mx.max(a.abs()));
                let proportional =
                    rows[ra].iter().zip(&rows[rb]).all(|(&(_, a), &(_, b))| (b - ratio * a).abs() <= 1e-12 * scale * ratio.abs().max(1.0));
                if proportional {
                    if (w.rhs[rb] - ratio * w.rhs[ra]).abs() > FEAS_TOL * rhs_scale {
                        return infeasible(w, substitutions);
                    }
                    drop.push(rb);
                }
            }
        }
    }
    for r in drop {
        w.row_alive[r] = false;
    }

    let var_map: Vec<usize> = (0..n).filter(|&j| w.var_alive[j]).collect();
    let row_map: Vec<usize> = (0..m).filter(|&r| w.row_alive[r]).collect();
    let mut new_row = vec![usize::MAX; m];
    for (k, &r) in row_map.iter().enumerate() {
        new_row[r] = k;
    }
    let mut triplets = Vec::new();
    for (k, &j) in var_map.iter().enumerate() {
        for &(r, a) in &w.cols[j] {
            if new_row[r] != usize::MAX {
                triplets.push((new_row[r], k, a));
            }
        }
    }
    let names = lp.names.as_ref().map(|names| var_map.iter().map(|&j| names[j].clone()).collect());
    let mut reduced = LinearProgram::from_triplets(
        row_map.len(),
        var_map.iter().map(|&j| w.obj[j]).collect(),
        &triplets,
        row_map.iter().map(|&r| w.rhs[r]).collect(),
        var_map.iter().map(|&j| w.nonneg[j]).collect(),
        vec![false; var_map.len()],
    )?;
    reduced.names = names;
    Ok(Presolved {
        reduced: Some(reduced),
        var_map,
        row_map,
        objective_offset: w.offset,
        n_vars: n,
        fixed: w.fixed,
        substitutions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_round_trip() {
        // x0 free, x1, x2 ≥ 0:  x0 - x1 + x2 = 0 ;  3 x0 + x1 = 3.
        let lp = LinearProgram::from_triplets(
            2,
            vec![0.0, 1.0, 1.0],
            &[(0, 0, 1.0), (0, 1, -1.0), (0, 2, 1.0), (1, 0, 3.0), (1, 1, 1.0)],
            vec![0.0, 3.0],
            vec![false, true, true],
            vec![false; 3],
        )
        .unwrap();
        let pre = presolve(&lp).unwrap();
        let red = pre.reduced.as_ref().unwrap();
        // x0 eliminated: 4 x1 - 3 x2 = 3.
        assert_eq!(red.n_vars(), 2);
        assert_eq!(red.n_rows(), 1);
        let x = pre.postsolve(&[0.75, 0.0]);
        assert!(lp.max_violation(&x) < 1e-14);
        assert_eq!(x[0], 0.75);
    }

    #[test]
    fn pinned_contradiction_is_infeasible() {
        // x0 pinned, x0 = 1 required.
        let lp = LinearProgram::from_triplets(1, vec![0.0], &[(0, 0, 1.0)], vec![1.0], vec![false], vec![true]).unwrap();
        assert!(presolve(&lp).unwrap().reduced.is_none());
    }

    #[test]
    fn duplicate_rows_are_dropped() {
        let lp = LinearProgram::from_triplets(
            2,
            vec![1.0, 1.0],
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, -2.0), (1, 1, -4.0)],
            vec![1.0, -2.0],
            vec![true, true],
            vec![false; 2],
        )
        .unwrap();
        let pre = presolve(&lp).unwrap();
        assert_eq!(pre.reduced.unwrap().n_rows(), 1);
    }
}
