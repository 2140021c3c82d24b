//! Sparse matrix storage and a profile (skyline) Cholesky solver with
//! reverse Cuthill–McKee reordering.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[fill[r]] = c;
            vals[fill[r]] = v;
            fill[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..nrows {
            order.clear();
            order.extend(counts[r]..counts[r + 1]);
            order.sort_by_key(|&k| cols[k]);
            let start = indices.len();
            for &k in &order {
                if indices.len() > start && *indices.last().unwrap() == cols[k] {
                    *values.last_mut().unwrap() += vals[k];
                } else {
                    indices.push(cols[k]);
                    values.push(vals[k]);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[r]..self.indptr[r + 1];
        self.indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.indptr[r]..self.indptr[r + 1];
        match self.indices[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, &triplets)
    }

    /// Principal submatrix on `keep` (indices into both rows and columns).
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.nrows.max(self.ncols)];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_r, &r) in keep.iter().enumerate() {
            for (c, v) in self.row(r) {
                if map[c] != usize::MAX {
                    triplets.push((new_r, map[c], v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), keep.len(), &triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[r][c] = v;
            }
        }
        d
    }
}

/// Reverse Cuthill–McKee ordering of a structurally symmetric matrix.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows;
    let degree: Vec<usize> = (0..n).map(|r| a.indptr[r + 1] - a.indptr[r]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut neighbours = Vec::new();
    while order.len() < n {
        // Start each component from a minimum-degree vertex (lowest index on ties).
        let start = (0..n).filter(|&v| !visited[v]).min_by_key(|&v| (degree[v], v)).unwrap();
        let start = pseudo_peripheral(a, start, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            neighbours.clear();
            neighbours.extend(a.row(v).map(|(c, _)| c).filter(|&c| !visited[c]));
            neighbours.sort_by_key(|&c| (degree[c], c));
            for &c in &neighbours {
                visited[c] = true;
                queue.push_back(c);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &CsrMatrix, start: usize) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; a.nrows];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = start;
    while let Some(v) = queue.pop_front() {
        last = v;
        for (c, _) in a.row(v) {
            if level[c] == usize::MAX {
                level[c] = level[v] + 1;
                queue.push_back(c);
            }
        }
    }
    (level, last)
}

fn pseudo_peripheral(a: &CsrMatrix, start: usize, degree: &[usize]) -> usize {
    let mut root = start;
    let (mut level, _) = bfs_levels(a, root);
    let mut ecc = level.iter().filter(|&&l| l != usize::MAX).max().copied().unwrap_or(0);
    for _ in 0..8 {
        let candidate = (0..a.nrows)
            .filter(|&v| level[v] == ecc)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(root);
        let (next_level, _) = bfs_levels(a, candidate);
        let next_ecc = next_level.iter().filter(|&&l| l != usize::MAX).max().copied().unwrap_or(0);
        if next_ecc <= ecc {
            break;
        }
        root = candidate;
        level = next_level;
        ecc = next_ecc;
    }
    root
}

/// Cholesky factor of a symmetric positive definite matrix in variable-band
/// (skyline) storage, after a fill-reducing symmetric permutation.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// First stored column of each row of L.
    first: Vec<usize>,
    /// Offset of row i's profile in `values`; row i holds columns first[i]..=i.
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors `a` (full symmetric storage) using an RCM ordering.
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinalgError> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_permutation(a, perm)
    }

    pub fn factor_with_permutation(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self, LinalgError> {
        let n = a.nrows;
        if a.ncols != n || perm.len() != n {
            return Err(LinalgError::Dimension { expected: n, got: a.ncols.min(perm.len()) });
        }
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_r in 0..n {
            let r = inv[old_r];
            for (old_c, _) in a.row(old_r) {
                let c = inv[old_c];
                if c < r {
                    first[r] = first[r].min(c);
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for i in 0..n {
            offset.push(total);
            total += i - first[i] + 1;
        }
        offset.push(total);
        let mut values = vec![0.0; total];
        for old_r in 0..n {
            let r = inv[old_r];
            for (old_c, v) in a.row(old_r) {
                let c = inv[old_c];
                if c <= r {
                    values[offset[r] + c - first[r]] += v;
                }
            }
        }
        let scale = (0..n).map(|i| values[offset[i] + i - first[i]].abs()).fold(0.0, f64::max);
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = values[offset[i] + j - fi];
                let ri = offset[i] + k0 - fi;
                let rj = offset[j] + k0 - fj;
                for k in 0..(j - k0) {
                    s -= values[ri + k] * values[rj + k];
                }
                values[offset[i] + j - fi] = s / values[offset[j] + j - fj];
            }
            let row = &values[offset[i]..offset[i] + i - fi];
            let d = values[offset[i] + i - fi] - row.iter().map(|v| v * v).sum::<f64>();
            if !(d > scale * 1e-14) {
                return Err(LinalgError::NotPositiveDefinite { row: perm[i], pivot: d });
            }
            values[offset[i] + i - fi] = d.sqrt();
        }
        Ok(SkylineCholesky { n, perm, first, offset, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn profile_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let mut s = y[i];
            for (k, &l) in row[..i - fi].iter().enumerate() {
                s -= l * y[fi + k];
            }
            y[i] = s / row[i - fi];
        }
        // Lᵀ x = y, column-oriented
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, &l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
