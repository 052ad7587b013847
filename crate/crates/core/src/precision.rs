//! Estimation of the precision matrix Ω = Σ⁻¹ for the max-type mean tests.
//!
//! The constrained ℓ1 estimator solves, for every column j, the linear program
//!
//! ```text
//! minimize ‖β‖₁  subject to  ‖Sβ − e_j‖_∞ ≤ γ
//! ```
//!
//! written in split form β = β⁺ − β⁻ with 2p inequality rows
//! S(β⁺ − β⁻) ≤ e_j + γ and −S(β⁺ − β⁻) ≤ γ − e_j. Every cost is nonnegative, so
//! the all-slack basis is dual feasible and a dual simplex starting there needs
//! roughly one pivot per nonzero of the solution. The basis is kept in compact
//! form: k basic structural columns and the k rows whose slacks left the basis,
//! giving a k×k core matrix that is refactorized after every pivot.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::positive_diagonal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionMethod {
    ConstrainedL1,
    Known,
    DiagonalInverse,
}

impl PrecisionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrecisionMethod::ConstrainedL1 => "constrained_l1",
            PrecisionMethod::Known => "known",
            PrecisionMethod::DiagonalInverse => "diagonal_inverse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    pub omega: DMatrix<f64>,
    /// Tuning value γ used; 0 for methods without one.
    pub gamma: f64,
    pub method: PrecisionMethod,
}

impl PrecisionEstimate {
    /// A known precision matrix, used verbatim.
    pub fn known(omega: DMatrix<f64>) -> Result<Self> {
        if !omega.is_square() {
            return Err(Error::DimensionMismatch { expected: omega.nrows(), actual: omega.ncols() });
        }
        Ok(Self { omega, gamma: 0.0, method: PrecisionMethod::Known })
    }

    /// Ω̂ = D_S⁻¹. Studentizes componentwise instead of by the full precision matrix.
    pub fn diagonal_inverse(s: &DMatrix<f64>) -> Result<Self> {
        let d = positive_diagonal(s)?;
        Ok(Self {
            omega: DMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|v| 1.0 / v))),
            gamma: 0.0,
            method: PrecisionMethod::DiagonalInverse,
        })
    }

    pub fn p(&self) -> usize {
        self.omega.nrows()
    }
}

/// γ_n = C·√(log p / n).
pub fn default_gamma(n: usize, p: usize, c: f64) -> Result<f64> {
    if n < 2 || p < 2 {
        return Err(Error::InvalidParameter(format!("default γ needs n ≥ 2 and p ≥ 2, got n = {n}, p = {p}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("γ constant must be positive, got {c}")));
    }
    Ok(c * ((p as f64).ln() / n as f64).sqrt())
}

/// Default constant C in γ_n = C·√(log p / n).
pub const DEFAULT_GAMMA_CONSTANT: f64 = 2.0;

/// Optimal solution of one column program with its optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSolution {
    pub beta: DVector<f64>,
    /// ‖β‖₁
    pub objective: f64,
    /// Objective of the dual solution recovered from the final basis.
    pub dual_bound: f64,
    /// ‖Sβ − e_j‖_∞
    pub residual: f64,
    pub pivots: usize,
}

/// Solves minimize ‖β‖₁ subject to ‖Sβ − e_j‖_∞ ≤ γ.
pub fn clime_column(s: &DMatrix<f64>, j: usize, gamma: f64) -> Result<DVector<f64>> {
    Ok(clime_column_certified(s, j, gamma)?.beta)
}

/// As [`clime_column`], returning the certificate.
pub fn clime_column_certified(s: &DMatrix<f64>, j: usize, gamma: f64) -> Result<ColumnSolution> {
    let p = s.nrows();
    if !s.is_square() {
        return Err(Error::DimensionMismatch { expected: p, actual: s.ncols() });
    }
    if j >= p {
        return Err(Error::IndexOutOfRange(format!("column {j} of a {p}×{p} matrix")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("γ must be finite and ≥ 0, got {gamma}")));
    }
    DualSimplex::new(s, j, gamma).solve()
}

/// Assembles Ω̂ columnwise and symmetrizes by keeping, for each pair, the entry
/// of smaller magnitude.
pub fn clime(s: &DMatrix<f64>, gamma: f64) -> Result<PrecisionEstimate> {
    let p = s.nrows();
    let cols: Vec<DVector<f64>> = (0..p).into_par_iter().map(|j| clime_column(s, j, gamma)).collect::<Result<_>>()?;
    let mut omega = DMatrix::zeros(p, p);
    for (j, c) in cols.iter().enumerate() {
        omega.set_column(j, c);
    }
    for i in 0..p {
        for j in (i + 1)..p {
            let (a, b) = (omega[(i, j)], omega[(j, i)]);
            let v = if a.abs() <= b.abs() { a } else { b };
            omega[(i, j)] = v;
            omega[(j, i)] = v;
        }
    }
    Ok(PrecisionEstimate { omega, gamma, method: PrecisionMethod::ConstrainedL1 })
}

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-12;

/// Row r < p is the upper row S_r β ≤ δ_rj + γ; row p + r is the lower row
/// −S_r β ≤ γ − δ_rj. Column q < p is β⁺_q; column p + q is β⁻_q.
struct DualSimplex<'a> {
    s: &'a DMatrix<f64>,
    p: usize,
    j: usize,
    gamma: f64,
    /// basic structural columns
    cols: Vec<usize>,
    /// rows whose slacks are nonbasic, paired positionally with `cols`
    rows: Vec<usize>,
}

impl<'a> DualSimplex<'a> {
    fn new(s: &'a DMatrix<f64>, j: usize, gamma: f64) -> Self {
        Self { s, p: s.nrows(), j, gamma, cols: Vec::new(), rows: Vec::new() }
    }

    fn rhs(&self, row: usize) -> f64 {
        let (r, upper) = self.split_row(row);
        let e = if r == self.j { 1.0 } else { 0.0 };
        if upper {
            e + self.gamma
        } else {
            self.gamma - e
        }
    }

    fn split_row(&self, row: usize) -> (usize, bool) {
        if row < self.p {
            (row, true)
        } else {
            (row - self.p, false)
        }
    }

    /// Entry A[row, col] of the split constraint matrix.
    fn a(&self, row: usize, col: usize) -> f64 {
        let (r, upper) = self.split_row(row);
        let (c, plus) = if col < self.p { (col, true) } else { (col - self.p, false) };
        let v = self.s[(r, c)];
        if upper == plus {
            v
        } else {
            -v
        }
    }

    fn core(&self) -> DMatrix<f64> {
        let k = self.cols.len();
        DMatrix::from_fn(k, k, |a, b| self.a(self.rows[a], self.cols[b]))
    }

    fn solve(mut self) -> Result<ColumnSolution> {
        let p = self.p;
        let max_pivots = 50 * p + 100;
        for pivots in 0..=max_pivots {
            let k = self.cols.len();
            let core = self.core();
            let lu = core.clone().lu();
            let lu_t = core.transpose().lu();
            let (xb, y) = if k == 0 {
                (DVector::zeros(0), DVector::zeros(0))
            } else {
                let b_r = DVector::from_fn(k, |a, _| self.rhs(self.rows[a]));
                let xb = lu.solve(&b_r).ok_or_else(|| Error::Singular("basis core matrix".into()))?;
                let ones = DVector::from_element(k, 1.0);
                let y = lu_t.solve(&ones).ok_or_else(|| Error::Singular("basis core matrix".into()))?;
                (xb, y)
            };
            let beta = self.beta(&xb);
            let sb = self.s * &beta;

            // Most negative basic variable leaves.
            let mut leave: Option<(Leaving, f64)> = None;
            let in_r = self.row_mask();
            for row in 0..2 * p {
                if in_r[row] {
                    continue;
                }
                let (r, upper) = self.split_row(row);
                let slack = self.rhs(row) - if upper { sb[r] } else { -sb[r] };
                if slack < -FEAS_TOL * (1.0 + self.rhs(row).abs()) && leave.is_none_or(|(_, v)| slack < v) {
                    leave = Some((Leaving::Slack(row), slack));
                }
            }
            for (pos, &v) in xb.iter().enumerate() {
                if v < -FEAS_TOL && leave.is_none_or(|(_, w)| v < w) {
                    leave = Some((Leaving::Structural(pos), v));
                }
            }
            let Some((leaving, _)) = leave else {
                return Ok(self.certificate(beta, &sb, &y, pivots));
            };

            // Row of B⁻¹ for the leaving variable, supported on R (and the leaving row).
            let rho_r: DVector<f64> = match leaving {
                Leaving::Slack(row) => {
                    if k == 0 {
                        DVector::zeros(0)
                    } else {
                        let rhs = DVector::from_fn(k, |b, _| -self.a(row, self.cols[b]));
                        lu_t.solve(&rhs).ok_or_else(|| Error::Singular("basis core matrix".into()))?
                    }
                }
                Leaving::Structural(pos) => {
                    let mut e = DVector::zeros(k);
                    e[pos] = 1.0;
                    lu_t.solve(&e).ok_or_else(|| Error::Singular("basis core matrix".into()))?
                }
            };
            // w = S(ρ_U − ρ_L); the pivot-row entry of β⁺_q is w_q and of β⁻_q is −w_q.
            let mut u = DVector::zeros(p);
            for (a, &row) in self.rows.iter().enumerate() {
                let (r, upper) = self.split_row(row);
                u[r] += if upper { rho_r[a] } else { -rho_r[a] };
            }
            if let Leaving::Slack(row) = leaving {
                let (r, upper) = self.split_row(row);
                u[r] += if upper { 1.0 } else { -1.0 };
            }
            let w = self.s * &u;
            // Reduced costs: d_q = 1 − y'A[R, q] for structural q; −y_r for slack r ∈ R.
            let mut yu = DVector::zeros(p);
            for (a, &row) in self.rows.iter().enumerate() {
                let (r, upper) = self.split_row(row);
                yu[r] += if upper { y[a] } else { -y[a] };
            }
            let sy = self.s * &yu;

            let mut best: Option<(Entering, f64, f64)> = None;
            let mut consider = |cand: Entering, alpha: f64, d: f64| {
                if alpha < -PIVOT_TOL {
                    let ratio = d.max(0.0) / -alpha;
                    let better = match best {
                        None => true,
                        Some((_, r, a)) => ratio < r - 1e-14 || (ratio <= r + 1e-14 && alpha.abs() > a.abs()),
                    };
                    if better {
                        best = Some((cand, ratio, alpha));
                    }
                }
            };
            let basic_col = self.col_mask();
            for q in 0..2 * p {
                if basic_col[q] {
                    continue;
                }
                let (c, plus) = if q < p { (q, true) } else { (q - p, false) };
                let alpha = if plus { w[c] } else { -w[c] };
                let d = 1.0 - if plus { sy[c] } else { -sy[c] };
                consider(Entering::Structural(q), alpha, d);
            }
            for a in 0..k {
                consider(Entering::Slack(a), rho_r[a], -y[a]);
            }
            let Some((entering, _, _)) = best else {
                return Err(Error::Infeasible(format!("no feasible β for column {} at γ = {}", self.j, self.gamma)));
            };
            match (leaving, entering) {
                (Leaving::Slack(row), Entering::Structural(q)) => {
                    self.rows.push(row);
                    self.cols.push(q);
                }
                (Leaving::Slack(row), Entering::Slack(a)) => self.rows[a] = row,
                (Leaving::Structural(pos), Entering::Structural(q)) => self.cols[pos] = q,
                (Leaving::Structural(pos), Entering::Slack(a)) => {
                    self.cols.remove(pos);
                    self.rows.remove(a);
                }
            }
        }
        Err(Error::Infeasible(format!("dual simplex exceeded {max_pivots} pivots on column {}", self.j)))
    }

    fn beta(&self, xb: &DVector<f64>) -> DVector<f64> {
        let mut beta = DVector::zeros(self.p);
        for (pos, &q) in self.cols.iter().enumerate() {
            if q < self.p {
                beta[q] += xb[pos];
            } else {
                beta[q - self.p] -= xb[pos];
            }
        }
        beta
    }

    fn row_mask(&self) -> Vec<bool> {
        let mut m = vec![false; 2 * self.p];
        for &r in &self.rows {
            m[r] = true;
        }
        m
    }

    fn col_mask(&self) -> Vec<bool> {
        let mut m = vec![false; 2 * self.p];
        for &c in &self.cols {
            m[c] = true;
        }
        m
    }

    fn certificate(&self, beta: DVector<f64>, sb: &DVector<f64>, y: &DVector<f64>, pivots: usize) -> ColumnSolution {
        let mut residual = 0.0f64;
        for r in 0..self.p {
            let e = if r == self.j { 1.0 } else { 0.0 };
            residual = residual.max((sb[r] - e).abs());
        }
        // Dual objective b'y over the rows in R (y ≤ 0 there, zero elsewhere).
        let dual_bound = self.rows.iter().enumerate().map(|(a, &row)| self.rhs(row) * y[a]).sum::<f64>();
        ColumnSolution { objective: beta.iter().map(|v| v.abs()).sum(), beta, dual_bound, residual, pivots }
    }
}

#[derive(Debug, Clone, Copy)]
enum Leaving {
    Slack(usize),
    /// position in the basic structural list
    Structural(usize),
}

#[derive(Debug, Clone, Copy)]
enum Entering {
    Structural(usize),
    /// position in the nonbasic-slack row list
    Slack(usize),
}
