//! Sparse LU factorization of simplex bases with product-form updates.

/// Factorization of the basis matrix whose columns are given at `factor` time.
///
/// Column step `k` of the elimination corresponds to basis position `q[k]`
/// and pivot row `prow[k]`; `B Q = L̂ U` with `L̂` unit in the pivot rows.
#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    prow: Vec<usize>,
    q: Vec<usize>,
    /// Off-pivot entries of each L column: (row, multiplier).
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Above-diagonal entries of each U column: (step, value).
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    /// Eta file: (basis position, column of B⁻¹a at the pivot).
    etas: Vec<(usize, Vec<(usize, f64)>, f64)>,
}

/// Result of a factorization: positions whose columns were dependent, each
/// paired with a row that received no pivot.
#[derive(Debug)]
pub(crate) struct Singularity {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

const PIVOT_THRESHOLD: f64 = 0.1;

impl BasisFactor {
    /// Factors the m×m basis given as sparse columns. On singularity, returns
    /// the dependent positions and free rows for repair.
    pub(crate) fn factor(m: usize, columns: &[&[(usize, f64)]]) -> Result<Self, Singularity> {
        debug_assert_eq!(columns.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (columns[p].len(), p));
        let mut row_count = vec![0usize; m];
        for col in columns {
            for &(r, _) in col.iter() {
                row_count[r] += 1;
            }
        }
        let mut pivoted = vec![usize::MAX; m];
        let mut prow = Vec::with_capacity(m);
        let mut q = Vec::with_capacity(m);
        let mut l_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut u_cols = Vec::with_capacity(m);
        let mut u_diag = Vec::with_capacity(m);
        let mut bad_positions = Vec::new();
        let mut x = vec![0.0; m];
        let mut nz_mark = vec![false; m];
        let mut nz: Vec<usize> = Vec::new();
        for &pos in &order {
            for &(r, v) in columns[pos] {
                x[r] += v;
                if !nz_mark[r] {
                    nz_mark[r] = true;
                    nz.push(r);
                }
            }
            // Apply previous L columns in pivot order.
            for step in 0..prow.len() {
                let v = x[prow[step]];
                if v != 0.0 {
                    for &(r, l) in &l_cols[step] {
                        x[r] -= l * v;
                        if !nz_mark[r] {
                            nz_mark[r] = true;
                            nz.push(r);
                        }
                    }
                }
            }
            let mut ucol = Vec::new();
            let mut cmax = 0.0f64;
            for &r in &nz {
                if pivoted[r] != usize::MAX {
                    if x[r] != 0.0 {
                        ucol.push((pivoted[r], x[r]));
                    }
                } else {
                    cmax = cmax.max(x[r].abs());
                }
            }
            let col_scale = columns[pos].iter().fold(0.0f64, |mx, &(_, v)| mx.max(v.abs()));
            if cmax <= 1e-11 * col_scale.max(1e-300) || cmax == 0.0 {
                bad_positions.push(pos);
            } else {
                let mut best: Option<usize> = None;
                for &r in &nz {
                    if pivoted[r] == usize::MAX && x[r].abs() >= PIVOT_THRESHOLD * cmax {
                        best = match best {
                            None => Some(r),
                            Some(b) => {
                                if (row_count[r], r) < (row_count[b], b) {
                                    Some(r)
                                } else {
                                    Some(b)
                                }
                            }
                        }
                    }
                }
                let pr = best.unwrap();
                let piv = x[pr];
                let mut lcol = Vec::new();
                for &r in &nz {
                    if pivoted[r] == usize::MAX && r != pr && x[r] != 0.0 {
                        lcol.push((r, x[r] / piv));
                    }
                }
                ucol.sort_by_key(|&(s, _)| s);
                pivoted[pr] = prow.len();
                prow.push(pr);
                q.push(pos);
                l_cols.push(lcol);
                u_cols.push(ucol);
                u_diag.push(piv);
            }
            for &r in &nz {
                x[r] = 0.0;
                nz_mark[r] = false;
            }
            nz.clear();
        }
        if !bad_positions.is_empty() {
            let rows = (0..m).filter(|&r| pivoted[r] == usize::MAX).collect();
            return Err(Singularity { positions: bad_positions, rows });
        }
        Ok(BasisFactor { m, prow, q, l_cols, u_cols, u_diag, etas: Vec::new() })
    }

    pub(crate) fn updates(&self) -> usize {
        self.etas.len()
    }

    /// Solves B x = a in place (`a` indexed by row on entry, by basis position on exit).
    pub(crate) fn ftran(&self, a: &mut [f64]) {
        let m = self.m;
        for step in 0..m {
            let v = a[self.prow[step]];
            if v != 0.0 {
                for &(r, l) in &self.l_cols[step] {
                    a[r] -= l * v;
                }
            }
        }
        let mut z: Vec<f64> = self.prow.iter().map(|&r| a[r]).collect();
        for k in (0..m).rev() {
            let xk = z[k] / self.u_diag[k];
            z[k] = xk;
            if xk != 0.0 {
                for &(j, u) in &self.u_cols[k] {
                    z[j] -= u * xk;
                }
            }
        }
        for k in 0..m {
            a[self.q[k]] = z[k];
        }
        for (r, col, piv) in &self.etas {
            let xr = a[*r] / piv;
            a[*r] = xr;
            if xr != 0.0 {
                for &(i, v) in col {
                    a[i] -= v * xr;
                }
            }
        }
    }

    /// Solves Bᵀ y = c in place (`c` indexed by basis position on entry, by row on exit).
    pub(crate) fn btran(&self, c: &mut [f64]) {
        let m = self.m;
        for (r, col, piv) in self.etas.iter().rev() {
            let s: f64 = col.iter().map(|&(i, v)| v * c[i]).sum();
            c[*r] = (c[*r] - s) / piv;
        }
        let mut z: Vec<f64> = self.q.iter().map(|&p| c[p]).collect();
        for k in 0..m {
            let s: f64 = self.u_cols[k].iter().map(|&(j, u)| u * z[j]).sum();
            z[k] = (z[k] - s) / self.u_diag[k];
        }
        for step in (0..m).rev() {
            let s: f64 = self.l_cols[step].iter().map(|&(r, l)| l * c[r]).sum();
            c[self.prow[step]] = z[step] - s;
        }
    }

    /// Records the replacement of basis position `r` by a column whose FTRAN
    /// result is `alpha` (indexed by basis position).
    pub(crate) fn update(&mut self, r: usize, alpha: &[f64]) {
        let col = alpha.iter().enumerate().filter(|&(i, &v)| i != r && v != 0.0).map(|(i, &v)| (i, v)).collect();
        self.etas.push((r, col, alpha[r]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(cols: &[Vec<(usize, f64)>], x: &[f64], m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (p, col) in cols.iter().enumerate() {
            for &(r, v) in col {
                out[r] += v * x[p];
            }
        }
        out
    }

    #[test]
    fn ftran_btran_and_updates() {
        let m = 5;
        let mut cols: Vec<Vec<(usize, f64)>> = vec![
            vec![(0, 2.0), (3, 1.0)],
            vec![(1, 1.0), (2, -1.0)],
            vec![(2, 3.0), (4, 1.0), (0, 0.5)],
            vec![(3, 4.0), (1, 1.0)],
            vec![(4, -2.0), (0, 1.0)],
        ];
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        let mut f = BasisFactor::factor(m, &refs).unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0, 1.5];
        let mut x = b.clone();
        f.ftran(&mut x);
        let bx = dense_mul(&cols, &x, m);
        for i in 0..m {
            assert!((bx[i] - b[i]).abs() < 1e-12);
        }
        // Replace position 2 with a new column.
        let newcol = vec![(0, 1.0), (1, 1.0), (2, 1.0), (4, 2.0)];
        let mut alpha = vec![0.0; m];
        for &(r, v) in &newcol {
            alpha[r] = v;
        }
        f.ftran(&mut alpha);
        f.update(2, &alpha);
        cols[2] = newcol;
        let mut x = b.clone();
        f.ftran(&mut x);
        let bx = dense_mul(&cols, &x, m);
        for i in 0..m {
            assert!((bx[i] - b[i]).abs() < 1e-12);
        }
        // Bᵀ y = c  ⇔  col_p · y = c_p
        let c = vec![0.3, -1.0, 2.0, 0.0, 1.0];
        let mut y = c.clone();
        f.btran(&mut y);
        for (p, col) in cols.iter().enumerate() {
            let s: f64 = col.iter().map(|&(r, v)| v * y[r]).sum();
            assert!((s - c[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_basis_reports_positions() {
        let cols: Vec<Vec<(usize, f64)>> = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)], vec![(2, 1.0)]];
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        let err = BasisFactor::factor(3, &refs).err().unwrap();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }
}
