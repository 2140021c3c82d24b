//! Sparse equality-form linear programs, the discontinuity-layout LP and a
//! deterministic bounded revised simplex solver.
//!
//! Problems have the form `min cᵀx  s.t.  A x = b,  x_j ≥ 0 (j nonneg),
//! x_j = 0 (j pinned)`, other variables free.

mod assemble;
mod lu;
mod presolve;
mod simplex;

use std::io::Write;

use thiserror::Error;

use crate::linalg::CsrMatrix;

pub use assemble::{assemble_lp, compatibility_rows, flow_rows, VdloLayout, VdloLp};
pub use presolve::{presolve, Presolved};
pub use simplex::{SimplexOptions, SimplexSolver};

#[derive(Debug, Error)]
pub enum LpError {
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("structurally stable: no inner candidate carries virtual work")]
    NoDrivingWork,
    #[error("flow rule requested for boundary candidate {0}")]
    NotInner(usize),
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("cannot write LP: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Constraint matrix stored by columns: row k of this matrix is column k of A.
    pub columns: CsrMatrix,
    pub rhs: Vec<f64>,
    pub nonneg: Vec<bool>,
    pub pinned: Vec<bool>,
    pub names: Option<Vec<String>>,
}

impl LinearProgram {
    /// Builds from triplets `(row, var, value)`.
    pub fn from_triplets(
        n_rows: usize,
        objective: Vec<f64>,
        triplets: &[(usize, usize, f64)],
        rhs: Vec<f64>,
        nonneg: Vec<bool>,
        pinned: Vec<bool>,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        if rhs.len() != n_rows || nonneg.len() != n || pinned.len() != n {
            return Err(LpError::Malformed("vector lengths disagree".into()));
        }
        let swapped: Vec<(usize, usize, f64)> = triplets.iter().map(|&(r, v, a)| (v, r, a)).collect();
        if swapped.iter().any(|&(v, r, _)| v >= n || r >= n_rows) {
            return Err(LpError::Malformed("triplet index out of range".into()));
        }
        let columns = CsrMatrix::from_triplets(n, n_rows, &swapped);
        Ok(LinearProgram { objective, columns, rhs, nonneg, pinned, names: None })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.columns.row(j)
    }

    /// A·x.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows()];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (r, a) in self.column(j) {
                    out[r] += a * xj;
                }
            }
        }
        out
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of rows, bounds and pins, each relative to
    /// max(1, |x|∞) for rows.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let ax = self.row_activity(x);
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let rows = ax.iter().zip(&self.rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / scale));
        let bounds = (0..self.n_vars()).fold(0.0f64, |m, j| {
            let v = if self.pinned[j] {
                x[j].abs()
            } else if self.nonneg[j] {
                (-x[j]).max(0.0)
            } else {
                0.0
            };
            m.max(v)
        });
        rows.max(bounds)
    }

    fn var_name(&self, j: usize) -> String {
        match &self.names {
            Some(n) => n[j].clone(),
            None => format!("X{j}"),
        }
    }

    /// Writes the program in free-format MPS. Free variables get `FR`
    /// bounds, pinned ones `FX 0`; nonnegative is the MPS default.
    pub fn write_mps(&self, name: &str, mut out: impl Write) -> Result<(), LpError> {
        writeln!(out, "NAME {name}")?;
        writeln!(out, "ROWS")?;
        writeln!(out, " N OBJ")?;
        for r in 0..self.n_rows() {
            writeln!(out, " E R{r}")?;
        }
        writeln!(out, "COLUMNS")?;
        for j in 0..self.n_vars() {
            let name = self.var_name(j);
            if self.objective[j] != 0.0 {
                writeln!(out, " {name} OBJ {:e}", self.objective[j])?;
            }
            for (r, a) in self.column(j) {
                writeln!(out, " {name} R{r} {a:e}")?;
            }
        }
        writeln!(out, "RHS")?;
        for (r, &b) in self.rhs.iter().enumerate() {
            if b != 0.0 {
                writeln!(out, " RHS R{r} {b:e}")?;
            }
        }
        writeln!(out, "BOUNDS")?;
        for j in 0..self.n_vars() {
            if self.pinned[j] {
                writeln!(out, " FX BND {} 0", self.var_name(j))?;
            } else if !self.nonneg[j] {
                writeln!(out, " FR BND {}", self.var_name(j))?;
            }
        }
        writeln!(out, "ENDATA")?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Primal values for every variable of the original program (empty
    /// unless optimal).
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// A solver for [`LinearProgram`]s. Implementations must be deterministic.
pub trait LpSolver: Sync {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError>;
}
