//! U-statistic estimators of trace functionals.
//!
//! Each estimator with a distinct-index definition comes in two forms: a literal
//! enumeration over index tuples (the oracle, restricted to small n) and a fast
//! form obtained by rewriting distinct-index sums as signed combinations of
//! unrestricted power sums. Tests hold the two forms equal.
//!
//! σ̂², A, C and σ̂²_{l,l+q} are unbiased for functionals that do not depend on
//! the mean, and their values are unchanged by shifting every row by the same
//! vector. The fast forms therefore center their input first, which removes the
//! large cancelling terms that the raw power sums would otherwise carry.

use nalgebra::{DMatrix, DVector};

use crate::data::{center_columns, DataMatrix};
use crate::error::{require_n, Error, Result};

/// Largest n accepted by the 5- and 6-tuple enumeration oracle.
pub const SIX_TUPLE_CAP: usize = 10;
/// Largest n accepted by the 4-tuple enumeration oracles.
pub const FOUR_TUPLE_CAP: usize = 12;

/// Falling factorial (n)_l = n(n−1)···(n−l+1), formed in exact integer arithmetic.
pub fn falling(n: usize, l: usize) -> f64 {
    if l > n {
        return 0.0;
    }
    let mut acc: u128 = 1;
    for i in 0..l {
        acc *= (n - i) as u128;
    }
    acc as f64
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub(crate) fn compensated_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Compensated::default();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Unrestricted power sums of the rows X_1, …, X_n.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSums {
    /// Σ_j X_j
    pub xsum: DVector<f64>,
    /// Σ_j X_j'X_j
    pub a: f64,
    /// Σ_j X_jX_j'
    pub x2: DMatrix<f64>,
    /// Σ_j (X_j'X_j)X_j
    pub x3: DVector<f64>,
    /// Σ_j (X_j'X_j)²
    pub b: f64,
}

impl PowerSums {
    /// Power sums of the rows of any matrix, including a single row.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let (n, p) = m.shape();
        let norms: Vec<f64> = (0..n).map(|j| compensated_sum(m.row(j).iter().map(|v| v * v))).collect();
        let xsum = DVector::from_fn(p, |c, _| compensated_sum(m.column(c).iter().copied()));
        let x3 = DVector::from_fn(p, |c, _| compensated_sum((0..n).map(|j| norms[j] * m[(j, c)])));
        let a = compensated_sum(norms.iter().copied());
        let b = compensated_sum(norms.iter().map(|v| v * v));
        let x2 = crate::data::symmetrize(m.transpose() * m);
        Self { xsum, a, x2, x3, b }
    }

    /// X'X_(2)X with X = Σ_j X_j.
    pub fn x_x2_x(&self) -> f64 {
        (&self.x2 * &self.xsum).dot(&self.xsum)
    }

    /// tr(X_(2)²).
    pub fn tr_x2_sq(&self) -> f64 {
        crate::data::trace_sq(&self.x2)
    }
}

pub fn power_sums(x: &DataMatrix) -> PowerSums {
    PowerSums::from_matrix(x.values())
}

/// The scalar power-sum functionals that the fast forms need, computed without
/// forming the p×p matrix X_(2) when p > n.
#[derive(Debug, Clone, Copy)]
struct Scalars {
    n: usize,
    /// X'X
    xx: f64,
    a: f64,
    b: f64,
    /// X'X_(3)
    x_x3: f64,
    /// X'X_(2)X
    x_x2_x: f64,
    /// tr(X_(2)²)
    tr_x2_sq: f64,
}

impl Scalars {
    fn of(m: &DMatrix<f64>) -> Self {
        let (n, p) = m.shape();
        let xsum = DVector::from_fn(p, |c, _| compensated_sum(m.column(c).iter().copied()));
        let norms: Vec<f64> = (0..n).map(|j| compensated_sum(m.row(j).iter().map(|v| v * v))).collect();
        // g_j = X_j'X
        let g = m * &xsum;
        let tr_x2_sq = if p <= n {
            crate::data::trace_sq(&(m.transpose() * m))
        } else {
            crate::data::trace_sq(&(m * m.transpose()))
        };
        Self {
            n,
            xx: compensated_sum(xsum.iter().map(|v| v * v)),
            a: compensated_sum(norms.iter().copied()),
            b: compensated_sum(norms.iter().map(|v| v * v)),
            x_x3: compensated_sum((0..n).map(|j| norms[j] * g[j])),
            x_x2_x: compensated_sum(g.iter().map(|v| v * v)),
            tr_x2_sq,
        }
    }

    fn index_sums(&self) -> [f64; 6] {
        let Scalars { xx, a, b, x_x3, x_x2_x, tr_x2_sq, .. } = *self;
        [
            b,
            x_x3 - b,
            a * a - b,
            x_x2_x - 2.0 * x_x3 - tr_x2_sq + 2.0 * b,
            xx * a - a * a - 2.0 * x_x3 + 2.0 * b,
            xx * xx - 2.0 * xx * a - 4.0 * x_x2_x + a * a + 2.0 * tr_x2_sq + 8.0 * x_x3 - 6.0 * b,
        ]
    }
}

/// The six distinct-index sums I1..I6 from their power-sum closed forms:
///
/// - I1 = Σ_j (X_j'X_j)²
/// - I2 = Σ_{j1≠j2} X_{j1}'X_{j1} X_{j1}'X_{j2}
/// - I3 = Σ_{j1≠j2} X_{j1}'X_{j1} X_{j2}'X_{j2}
/// - I4 = Σ_{distinct} X_{j1}'X_{j2} X_{j1}'X_{j3}
/// - I5 = Σ_{distinct} X_{j1}'X_{j1} X_{j2}'X_{j3}
/// - I6 = Σ_{distinct} X_{j1}'X_{j2} X_{j3}'X_{j4}
pub fn index_sums_closed(ps: &PowerSums) -> [f64; 6] {
    Scalars {
        n: 0,
        xx: ps.xsum.dot(&ps.xsum),
        a: ps.a,
        b: ps.b,
        x_x3: ps.xsum.dot(&ps.x3),
        x_x2_x: ps.x_x2_x(),
        tr_x2_sq: ps.tr_x2_sq(),
    }
    .index_sums()
}

/// I1..I6 by literal enumeration over distinct index tuples.
pub fn index_sums_enumerated(x: &DataMatrix) -> Result<[f64; 6]> {
    let n = x.n();
    if n > FOUR_TUPLE_CAP {
        return Err(Error::OracleCap { n, cap: FOUR_TUPLE_CAP });
    }
    let g = gram(x.values());
    let mut s = [Compensated::default(); 6];
    for j in 0..n {
        s[0].add(g[(j, j)] * g[(j, j)]);
    }
    for_each_distinct(n, 2, |t| {
        let (i, j) = (t[0], t[1]);
        s[1].add(g[(i, i)] * g[(i, j)]);
        s[2].add(g[(i, i)] * g[(j, j)]);
    });
    for_each_distinct(n, 3, |t| {
        let (i, j, k) = (t[0], t[1], t[2]);
        s[3].add(g[(i, j)] * g[(i, k)]);
        s[4].add(g[(i, i)] * g[(j, k)]);
    });
    for_each_distinct(n, 4, |t| s[5].add(g[(t[0], t[1])] * g[(t[2], t[3])]));
    Ok(s.map(|c| c.value()))
}

/// Ratio-consistent estimator σ̂_n² of the variance of the centered squared
/// mean norm, via the power-sum reduction. O(np·min(n,p)).
pub fn sigma2_hat_fast(x: &DataMatrix) -> Result<f64> {
    require_n(x.n(), 6)?;
    Ok(sigma2_from_scalars(&Scalars::of(&center_columns(x.values()))))
}

fn sigma2_from_scalars(s: &Scalars) -> f64 {
    let n = s.n;
    let i = s.index_sums();
    i[0] / n as f64 - 4.0 * i[1] / falling(n, 2) - i[2] / falling(n, 2)
        + 4.0 * i[3] / falling(n, 3)
        + 4.0 * i[4] / falling(n, 3)
        - 4.0 * i[5] / falling(n, 4)
}

/// σ̂_n² by literal enumeration over distinct 5- and 6-tuples:
///
/// (1/(n)_5) Σ (a'b)(c'd) with a = X1−X2, b = X1−X3, c = X1−X4, d = X1−X5,
/// minus (1/(n)_6) Σ (a'b)(c'd) with a = X1−X2, b = X1−X3, c = X6−X4, d = X6−X5,
/// where subscripts name the positions of a distinct index tuple.
pub fn sigma2_hat_oracle(x: &DataMatrix) -> Result<f64> {
    sigma2_hat_oracle_with_cap(x, SIX_TUPLE_CAP)
}

pub fn sigma2_hat_oracle_with_cap(x: &DataMatrix, cap: usize) -> Result<f64> {
    let n = x.n();
    require_n(n, 6)?;
    if n > cap {
        return Err(Error::OracleCap { n, cap });
    }
    let g = gram(x.values());
    // (X_i − X_j)'(X_k − X_l)
    let d = |i: usize, j: usize, k: usize, l: usize| g[(i, k)] - g[(i, l)] - g[(j, k)] + g[(j, l)];
    let mut s5 = Compensated::default();
    for_each_distinct(n, 5, |t| {
        s5.add(d(t[0], t[1], t[0], t[2]) * d(t[0], t[3], t[0], t[4]));
    });
    let mut s6 = Compensated::default();
    for_each_distinct(n, 6, |t| {
        s6.add(d(t[0], t[1], t[0], t[2]) * d(t[5], t[3], t[5], t[4]));
    });
    Ok(s5.value() / falling(n, 5) - s6.value() / falling(n, 6))
}

/// σ̂_n² from the six index sums, each evaluated by 1- to 4-fold enumeration
/// with inner products recomputed inside the loops. Cost O(pn⁴); used as the
/// baseline for timing the fast form.
pub fn sigma2_hat_enum4(x: &DataMatrix) -> Result<f64> {
    let n = x.n();
    require_n(n, 6)?;
    let m = center_columns(x.values());
    let rows: Vec<Vec<f64>> = (0..n).map(|j| m.row(j).iter().copied().collect()).collect();
    let dot = |i: usize, j: usize| -> f64 { rows[i].iter().zip(&rows[j]).map(|(u, v)| u * v).sum() };
    let mut s = [0.0f64; 6];
    for j in 0..n {
        let v = dot(j, j);
        s[0] += v * v;
    }
    for_each_distinct(n, 2, |t| {
        s[1] += dot(t[0], t[0]) * dot(t[0], t[1]);
        s[2] += dot(t[0], t[0]) * dot(t[1], t[1]);
    });
    for_each_distinct(n, 3, |t| {
        s[3] += dot(t[0], t[1]) * dot(t[0], t[2]);
        s[4] += dot(t[0], t[0]) * dot(t[1], t[2]);
    });
    for_each_distinct(n, 4, |t| s[5] += dot(t[0], t[1]) * dot(t[2], t[3]));
    Ok(s[0] / n as f64 - 4.0 * s[1] / falling(n, 2) - s[2] / falling(n, 2)
        + 4.0 * s[3] / falling(n, 3)
        + 4.0 * s[4] / falling(n, 3)
        - 4.0 * s[5] / falling(n, 4))
}

/// Leave-two-out estimator of tr Σ²:
/// (1/(n(n−1))) Σ_{j≠k} X_k'(X_j − X̄_(jk)) X_j'(X_k − X̄_(jk)).
///
/// Evaluated from the n×n Gram matrix in O(n²p). The data are used as given;
/// callers testing a mean hypothesis pass data centered at the hypothesized mean.
pub fn tr_sigma2_hat_cq(x: &DataMatrix) -> Result<f64> {
    let n = x.n();
    require_n(n, 4)?;
    let m = x.values();
    let g = gram(m);
    let xsum = column_sums(m);
    // h_k = X_k'Σ_i X_i
    let h = m * &xsum;
    let r = 1.0 / (n - 2) as f64;
    let mut acc = Compensated::default();
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let gjk = g[(j, k)];
            let f1 = gjk - r * (h[k] - gjk - g[(k, k)]);
            let f2 = gjk - r * (h[j] - gjk - g[(j, j)]);
            acc.add(f1 * f2);
        }
    }
    Ok(acc.value() / falling(n, 2))
}

/// Leave-one-out estimator of tr Σ₁Σ₂:
/// (1/(n1n2)) Σ_j Σ_k X_2k'(X_1j − X̄_1(j)) X_1j'(X_2k − X̄_2(k)). O(n1n2p).
pub fn tr_cross_hat_cq(x1: &DataMatrix, x2: &DataMatrix) -> Result<f64> {
    check_same_p(x1, x2)?;
    let (n1, n2) = (x1.n(), x2.n());
    require_n(n1, 3)?;
    require_n(n2, 3)?;
    let h = x1.values() * x2.values().transpose();
    let col: Vec<f64> = (0..n2).map(|k| h.column(k).sum()).collect();
    let row: Vec<f64> = (0..n1).map(|j| h.row(j).sum()).collect();
    let r1 = 1.0 / (n1 - 1) as f64;
    let r2 = 1.0 / (n2 - 1) as f64;
    let mut acc = Compensated::default();
    for j in 0..n1 {
        for k in 0..n2 {
            let hjk = h[(j, k)];
            acc.add((hjk - r1 * (col[k] - hjk)) * (hjk - r2 * (row[j] - hjk)));
        }
    }
    Ok(acc.value() / (n1 * n2) as f64)
}

/// Unbiased estimator A_n of tr Σ²:
/// Σ_{i≠j}(X_i'X_j)²/(n)_2 − 2Σ_{distinct} X_i'X_j X_j'X_k/(n)_3
/// + Σ_{distinct} X_i'X_j X_k'X_l/(n)_4, via power sums.
pub fn lc_a(x: &DataMatrix) -> Result<f64> {
    let n = x.n();
    require_n(n, 4)?;
    let s = Scalars::of(&center_columns(x.values()));
    let i = s.index_sums();
    let t1 = s.tr_x2_sq - s.b;
    Ok(t1 / falling(n, 2) - 2.0 * i[3] / falling(n, 3) + i[5] / falling(n, 4))
}

/// A_n by literal enumeration.
pub fn lc_a_oracle(x: &DataMatrix) -> Result<f64> {
    let n = x.n();
    require_n(n, 4)?;
    if n > FOUR_TUPLE_CAP {
        return Err(Error::OracleCap { n, cap: FOUR_TUPLE_CAP });
    }
    let g = gram(x.values());
    let mut t1 = Compensated::default();
    let mut t2 = Compensated::default();
    let mut t3 = Compensated::default();
    for_each_distinct(n, 2, |t| t1.add(g[(t[0], t[1])].powi(2)));
    for_each_distinct(n, 3, |t| t2.add(g[(t[0], t[1])] * g[(t[1], t[2])]));
    for_each_distinct(n, 4, |t| t3.add(g[(t[0], t[1])] * g[(t[2], t[3])]));
    Ok(t1.value() / falling(n, 2) - 2.0 * t2.value() / falling(n, 3) + t3.value() / falling(n, 4))
}

/// Unbiased estimator C_{n1n2} of tr Σ₁Σ₂, via power sums of both samples.
pub fn lc_c(x1: &DataMatrix, x2: &DataMatrix) -> Result<f64> {
    check_same_p(x1, x2)?;
    let (n1, n2) = (x1.n(), x2.n());
    require_n(n1, 2)?;
    require_n(n2, 2)?;
    let x = center_columns(x1.values());
    let y = center_columns(x2.values());
    let sx = column_sums(&x);
    let sy = column_sums(&y);
    let h = &x * y.transpose();
    let t = crate::data::trace_sq(&h);
    let sx_y2_sx = (&y * &sx).norm_squared();
    let sy_x2_sy = (&x * &sy).norm_squared();
    let sxy = sx.dot(&sy);
    let c1 = t;
    let c2 = sx_y2_sx - t;
    let c3 = sy_x2_sy - t;
    let c4 = sxy * sxy - sy_x2_sy - sx_y2_sx + t;
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    Ok(c1 / (n1f * n2f) - c2 / (n2f * falling(n1, 2)) - c3 / (n1f * falling(n2, 2))
        + c4 / (falling(n1, 2) * falling(n2, 2)))
}

/// C_{n1n2} by literal enumeration.
pub fn lc_c_oracle(x1: &DataMatrix, x2: &DataMatrix) -> Result<f64> {
    check_same_p(x1, x2)?;
    let (n1, n2) = (x1.n(), x2.n());
    require_n(n1, 2)?;
    require_n(n2, 2)?;
    for n in [n1, n2] {
        if n > FOUR_TUPLE_CAP {
            return Err(Error::OracleCap { n, cap: FOUR_TUPLE_CAP });
        }
    }
    let h = x1.values() * x2.values().transpose();
    let mut c1 = Compensated::default();
    for v in h.iter() {
        c1.add(v * v);
    }
    let mut c2 = Compensated::default();
    let mut c3 = Compensated::default();
    let mut c4 = Compensated::default();
    for_each_distinct(n1, 2, |t| {
        for j in 0..n2 {
            c2.add(h[(t[0], j)] * h[(t[1], j)]);
        }
    });
    for_each_distinct(n2, 2, |t| {
        for j in 0..n1 {
            c3.add(h[(j, t[0])] * h[(j, t[1])]);
        }
    });
    let pairs2: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        for_each_distinct(n2, 2, |t| v.push((t[0], t[1])));
        v
    };
    for_each_distinct(n1, 2, |t| {
        for &(j, l) in &pairs2 {
            c4.add(h[(t[0], j)] * h[(t[1], l)]);
        }
    });
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    Ok(c1.value() / (n1f * n2f) - c2.value() / (n2f * falling(n1, 2)) - c3.value() / (n1f * falling(n2, 2))
        + c4.value() / (falling(n1, 2) * falling(n2, 2)))
}

fn check_lag_indices(p: usize, l: usize, q: usize) -> Result<()> {
    if l >= p || l + q >= p {
        return Err(Error::IndexOutOfRange(format!("pair ({l}, {}) outside 0..{p} (zero-based)", l + q)));
    }
    Ok(())
}

/// Unbiased estimator of σ²_{l,l+q}, with zero-based column index l:
/// Σ_{i≠j} u_iv_iu_jv_j/(n)_2 − 2Σ_{distinct} u_iv_ju_kv_k/(n)_3
/// + Σ_{distinct} u_iv_ju_kv_m/(n)_4 with u = column l and v = column l+q.
///
/// The value does not depend on the column means, so no centering by the
/// caller is needed; the input is centered internally for accuracy.
pub fn qc_sigma_sq_hat(x: &DataMatrix, l: usize, q: usize) -> Result<f64> {
    check_lag_indices(x.p(), l, q)?;
    let n = x.n();
    require_n(n, 4)?;
    let u = centered_column(x.values(), l);
    let v = centered_column(x.values(), l + q);
    Ok(qc_from_columns(&u, &v))
}

pub(crate) fn centered_column(m: &DMatrix<f64>, c: usize) -> Vec<f64> {
    let col = m.column(c);
    let mean = compensated_sum(col.iter().copied()) / col.len() as f64;
    col.iter().map(|v| v - mean).collect()
}

/// σ̂²_{l,l+q} from two (centered) columns in one O(n) pass. The three
/// distinct-index sums are expanded over set partitions into the power sums
/// Σu, Σv, Σu², Σv², Σuv, Σu²v, Σuv² and Σu²v².
pub(crate) fn qc_from_columns(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let (mut a, mut b, mut suu, mut svv, mut w, mut uuv, mut uvv, mut w2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in u.iter().zip(v) {
        let xy = x * y;
        a += x;
        b += y;
        suu += x * x;
        svv += y * y;
        w += xy;
        uuv += xy * x;
        uvv += xy * y;
        w2 += xy * xy;
    }
    let s1 = w * w - w2;
    let s2 = a * b * w - w * w - b * uuv - a * uvv + 2.0 * w2;
    let s3 = a * a * b * b - 4.0 * w * a * b - suu * b * b - svv * a * a
        + 2.0 * w * w
        + suu * svv
        + 4.0 * b * uuv
        + 4.0 * a * uvv
        - 6.0 * w2;
    s1 / falling(n, 2) - 2.0 * s2 / falling(n, 3) + s3 / falling(n, 4)
}

/// σ̂²_{l,l+q} by literal enumeration.
pub fn qc_sigma_sq_hat_oracle(x: &DataMatrix, l: usize, q: usize) -> Result<f64> {
    check_lag_indices(x.p(), l, q)?;
    let n = x.n();
    require_n(n, 4)?;
    if n > FOUR_TUPLE_CAP {
        return Err(Error::OracleCap { n, cap: FOUR_TUPLE_CAP });
    }
    let m = x.values();
    let u = |i: usize| m[(i, l)];
    let v = |i: usize| m[(i, l + q)];
    let mut s1 = Compensated::default();
    let mut s2 = Compensated::default();
    let mut s3 = Compensated::default();
    for_each_distinct(n, 2, |t| s1.add(u(t[0]) * v(t[0]) * u(t[1]) * v(t[1])));
    for_each_distinct(n, 3, |t| s2.add(u(t[0]) * v(t[1]) * u(t[2]) * v(t[2])));
    for_each_distinct(n, 4, |t| s3.add(u(t[0]) * v(t[1]) * u(t[2]) * v(t[3])));
    Ok(s1.value() / falling(n, 2) - 2.0 * s2.value() / falling(n, 3) + s3.value() / falling(n, 4))
}

/// Per-column leave-two-out sample variances (divisor n−3), computed from
/// centered column sums and sums of squares.
pub(crate) struct LeaveTwoOut {
    n: usize,
    /// centered data
    pub(crate) z: DMatrix<f64>,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl LeaveTwoOut {
    pub(crate) fn new(m: &DMatrix<f64>) -> Self {
        let z = center_columns(m);
        let sum = z.column_iter().map(|c| compensated_sum(c.iter().copied())).collect();
        let sumsq = z.column_iter().map(|c| compensated_sum(c.iter().map(|v| v * v))).collect();
        Self { n: m.nrows(), z, sum, sumsq }
    }

    /// Variance of column c with rows i and j removed, and the mean shift
    /// of the leave-two-out mean relative to the full-sample mean.
    #[inline]
    pub(crate) fn var_and_mean(&self, c: usize, i: usize, j: usize) -> (f64, f64) {
        let zi = self.z[(i, c)];
        let zj = self.z[(j, c)];
        let s = self.sum[c] - zi - zj;
        let ss = self.sumsq[c] - zi * zi - zj * zj;
        let m = (self.n - 2) as f64;
        ((ss - s * s / m) / (self.n - 3) as f64, s / m)
    }
}

/// Park–Ayyala estimator of tr R² with leave-two-out diagonal scaling:
/// (1/(n(n−1))) Σ_{i≠j} X_i'D_(ij)⁻¹(X_j − X̄_(ij)) X_j'D_(ij)⁻¹(X_i − X̄_(ij)).
///
/// Ratio-consistent for tr R². For normal data with R = I its expectation is
/// p·m²/((m−2)(m−4)) with m = n − 3, the factor coming from E[s⁻⁴].
pub fn tr_r2_hat_pa(x: &DataMatrix) -> Result<f64> {
    let n = x.n();
    require_n(n, 6)?;
    let lto = LeaveTwoOut::new(x.values());
    let raw = x.values();
    let means = crate::data::column_means(raw);
    let p = x.p();
    let mut acc = Compensated::default();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut f1 = 0.0;
            let mut f2 = 0.0;
            for c in 0..p {
                let (v, mshift) = lto.var_and_mean(c, i, j);
                if !(v > 0.0) {
                    return Err(Error::DegenerateVariable { index: c, value: v });
                }
                // X̄_(ij) in raw coordinates is the full mean plus the shift.
                let mbar = means[c] + mshift;
                f1 += raw[(i, c)] * (raw[(j, c)] - mbar) / v;
                f2 += raw[(j, c)] * (raw[(i, c)] - mbar) / v;
            }
            acc.add(f1 * f2);
        }
    }
    Ok(acc.value() / falling(n, 2))
}

/// Trace functionals of one or two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEstimates {
    /// tr S
    pub tr_sigma: f64,
    /// leave-two-out estimate of tr Σ²
    pub tr_sigma2: f64,
    /// leave-one-out estimate of tr Σ₁Σ₂ (two-sample only)
    pub tr_cross: Option<f64>,
    /// leave-two-out estimate of tr R² (requires n ≥ 6)
    pub tr_r2: Option<f64>,
}

impl TraceEstimates {
    pub fn one_sample(x: &DataMatrix) -> Result<Self> {
        let xc = x.centered();
        Ok(Self {
            tr_sigma: crate::data::sample_covariance(x)?.trace(),
            tr_sigma2: tr_sigma2_hat_cq(&xc)?,
            tr_cross: None,
            tr_r2: if x.n() >= 6 { Some(tr_r2_hat_pa(&xc)?) } else { None },
        })
    }
}

pub(crate) fn gram(m: &DMatrix<f64>) -> DMatrix<f64> {
    crate::data::symmetrize(m * m.transpose())
}

pub(crate) fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| compensated_sum(c.iter().copied())))
}

pub(crate) fn check_same_p(x1: &DataMatrix, x2: &DataMatrix) -> Result<()> {
    if x1.p() != x2.p() {
        return Err(Error::DimensionMismatch { expected: x1.p(), actual: x2.p() });
    }
    Ok(())
}

/// Calls `f` on every ordered tuple of `k` distinct indices from 0..n.
pub fn for_each_distinct(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(n: usize, k: usize, tuple: &mut Vec<usize>, used: &mut [bool], f: &mut dyn FnMut(&[usize])) {
        if tuple.len() == k {
            f(tuple);
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                tuple.push(i);
                rec(n, k, tuple, used, f);
                tuple.pop();
                used[i] = false;
            }
        }
    }
    if k > n {
        return;
    }
    let mut used = vec![false; n];
    rec(n, k, &mut Vec::with_capacity(k), &mut used, &mut f);
}
