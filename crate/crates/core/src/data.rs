//! Sample containers and elementary moments.
//!
//! A [`DataMatrix`] stores one sample with observations in rows and variables
//! in columns. [`GroupedData`] holds k ≥ 2 samples over the same variables.

use nalgebra::{DMatrix, DVector};

use crate::error::{require_n, Error, Result};

/// An n×p sample: row j is the observation X_j'.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    /// Wraps an n×p matrix, checking n ≥ 2, p ≥ 1 and finiteness.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        require_n(values.nrows(), 2)?;
        if values.ncols() == 0 {
            return Err(Error::InvalidParameter("dimension p must be at least 1".into()));
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch { expected: p, actual: bad.len() });
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    pub fn row(&self, j: usize) -> DVector<f64> {
        self.values.row(j).transpose()
    }

    /// Copy of the data with `shift` subtracted from every row.
    pub fn shifted(&self, shift: &DVector<f64>) -> Result<Self> {
        check_len(shift, self.p())?;
        let mut v = self.values.clone();
        for (c, mut col) in v.column_iter_mut().enumerate() {
            col.add_scalar_mut(-shift[c]);
        }
        Ok(Self { values: v })
    }

    /// Copy of the data centered at its sample mean.
    pub fn centered(&self) -> Self {
        Self { values: center_columns(&self.values) }
    }

    /// Copy with column j multiplied by `scales[j]`.
    pub fn scaled_columns(&self, scales: &[f64]) -> Result<Self> {
        if scales.len() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), actual: scales.len() });
        }
        let mut v = self.values.clone();
        for (c, mut col) in v.column_iter_mut().enumerate() {
            col *= scales[c];
        }
        Self::new(v)
    }
}

/// k ≥ 2 samples sharing the same dimension p.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedData {
    groups: Vec<DataMatrix>,
}

impl GroupedData {
    pub fn new(groups: Vec<DataMatrix>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidParameter(format!("grouped data needs at least 2 groups, got {}", groups.len())));
        }
        let p = groups[0].p();
        for g in &groups[1..] {
            if g.p() != p {
                return Err(Error::DimensionMismatch { expected: p, actual: g.p() });
            }
        }
        Ok(Self { groups })
    }

    pub fn two(a: DataMatrix, b: DataMatrix) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn groups(&self) -> &[DataMatrix] {
        &self.groups
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.groups[0].p()
    }

    /// Total sample size n = Σ n_i.
    pub fn total_n(&self) -> usize {
        self.groups.iter().map(DataMatrix::n).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(DataMatrix::n).collect()
    }

    /// Realized proportions κ_i = n_i / n.
    pub fn kappas(&self) -> Vec<f64> {
        let n = self.total_n() as f64;
        self.groups.iter().map(|g| g.n() as f64 / n).collect()
    }

    pub(crate) fn require_k(&self, k: usize, test: &str) -> Result<()> {
        if self.k() != k {
            return Err(Error::InvalidParameter(format!("{test} needs exactly {k} groups, got {}", self.k())));
        }
        Ok(())
    }

    pub fn swapped(&self) -> Self {
        let mut groups = self.groups.clone();
        groups.reverse();
        Self { groups }
    }
}

pub(crate) fn check_len(v: &DVector<f64>, p: usize) -> Result<()> {
    if v.len() != p {
        return Err(Error::DimensionMismatch { expected: p, actual: v.len() });
    }
    Ok(())
}

pub(crate) fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

pub(crate) fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = column_means(m);
    let mut out = m.clone();
    for (c, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[c]);
    }
    out
}

/// Centered scatter Σ_j (X_j − X̄)(X_j − X̄)'.
pub(crate) fn scatter(m: &DMatrix<f64>) -> DMatrix<f64> {
    let c = center_columns(m);
    symmetrize(c.transpose() * &c)
}

pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let p = m.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Componentwise average of the rows.
pub fn sample_mean(x: &DataMatrix) -> DVector<f64> {
    column_means(x.values())
}

/// Sample covariance with divisor n − 1.
pub fn sample_covariance(x: &DataMatrix) -> Result<DMatrix<f64>> {
    require_n(x.n(), 2)?;
    Ok(scatter(x.values()) / (x.n() - 1) as f64)
}

/// Within-group scatter divided by n − k.
pub fn pooled_covariance(g: &GroupedData) -> Result<DMatrix<f64>> {
    let n = g.total_n();
    let k = g.k();
    for grp in g.groups() {
        require_n(grp.n(), 2)?;
    }
    if n <= k {
        return Err(Error::InsufficientData { required: k + 1, actual: n });
    }
    let p = g.p();
    let mut w = DMatrix::zeros(p, p);
    for grp in g.groups() {
        w += scatter(grp.values());
    }
    Ok(w / (n - k) as f64)
}

/// R = D^{-1/2} S D^{-1/2}. Fails on the first non-positive diagonal entry.
pub fn sample_correlation(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = s.nrows();
    if s.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, actual: s.ncols() });
    }
    let mut inv_sd = Vec::with_capacity(p);
    for i in 0..p {
        let d = s[(i, i)];
        if d.is_nan() || d <= 0.0 {
            return Err(Error::DegenerateVariable { index: i, value: d });
        }
        inv_sd.push(1.0 / d.sqrt());
    }
    let mut r = DMatrix::identity(p, p);
    for j in 0..p {
        for i in 0..j {
            let v = s[(i, j)] * inv_sd[i] * inv_sd[j];
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(r)
}

/// Diagonal of a covariance matrix, failing on non-positive entries.
pub(crate) fn positive_diagonal(s: &DMatrix<f64>) -> Result<Vec<f64>> {
    (0..s.nrows())
        .map(|i| {
            let d = s[(i, i)];
            if d.is_nan() || d <= 0.0 {
                Err(Error::DegenerateVariable { index: i, value: d })
            } else {
                Ok(d)
            }
        })
        .collect()
}

/// tr(A²) for symmetric A, i.e. the squared Frobenius norm.
pub(crate) fn trace_sq(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}
