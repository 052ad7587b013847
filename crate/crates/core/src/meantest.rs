//! One- and two-sample location tests and their asymptotic power functions.
//!
//! Every test returns a [`TestResult`] whose standardized statistic is referred
//! to the upper tail of its limiting null law. Variance estimates that come out
//! non-positive raise [`Error::Calibration`] with the raw value instead of being
//! clamped.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{
    check_len, column_means, pooled_covariance, positive_diagonal, sample_correlation, sample_covariance, trace_sq,
    DataMatrix, GroupedData,
};
use crate::error::{require_n, Error, Result};
use crate::law::{phi, quantile, NullLaw};
use crate::precision::{clime, default_gamma, PrecisionEstimate, PrecisionMethod, DEFAULT_GAMMA_CONSTANT};
use crate::result::TestResult;
use crate::ustat::{
    compensated_sum, falling, tr_cross_hat_cq, tr_r2_hat_pa, tr_sigma2_hat_cq, Compensated, LeaveTwoOut,
};

const NAIVE_ALTERNATIVES: &str = "bs1/cq1/sd1 (one sample) or bs2/cq2/sd2 (two samples)";

/// Tuning shared by the location tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeanTestConfig {
    /// Nominal level used by callers that need a decision.
    pub alpha: f64,
    /// Include c_{p,n} = 1 + tr R²/p^{3/2} in the Srivastava–Du variance.
    pub sd_use_cpn: bool,
    /// Two-sample Srivastava–Du with D_{S1}/n1 + D_{S2}/n2 instead of the pooled D_S.
    pub sd_unequal: bool,
    /// Ridge λ > 0 of the regularized Hotelling test.
    pub rht_lambda: f64,
    /// γ of the constrained ℓ1 precision estimate; `None` uses C·√(log p / n).
    pub clx_gamma: Option<f64>,
}

impl Default for MeanTestConfig {
    fn default() -> Self {
        Self { alpha: 0.05, sd_use_cpn: true, sd_unequal: false, rht_lambda: 1.0, clx_gamma: None }
    }
}

impl MeanTestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if let Some(g) = self.clx_gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("clx_gamma must be nonnegative, got {g}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn calibrated(what: &'static str, var: f64) -> Result<f64> {
    if var > 0.0 && var.is_finite() {
        Ok(var.sqrt())
    } else {
        Err(Error::Calibration { what, value: var })
    }
}

pub(crate) fn require_two<'a>(g: &'a GroupedData, test: &str) -> Result<(&'a DataMatrix, &'a DataMatrix)> {
    g.require_k(2, test)?;
    Ok((&g.groups()[0], &g.groups()[1]))
}

fn mean_difference(x1: &DataMatrix, x2: &DataMatrix) -> DVector<f64> {
    column_means(x1.values()) - column_means(x2.values())
}

fn cholesky_of(s: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(s).ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))
}

/// One-sample Hotelling T² = n(X̄ − μ0)'S⁻¹(X̄ − μ0).
///
/// Standardized value (n−p)/(p(n−1))·T² against F(p, n−p).
pub fn hotelling_one(x: &DataMatrix, mu0: &DVector<f64>) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    check_len(mu0, p)?;
    if p >= n {
        return Err(Error::NotDefined {
            test: "hotelling1",
            reason: format!("p = {p} is not below n = {n}, so S is singular"),
            alternatives: NAIVE_ALTERNATIVES,
        });
    }
    let d = column_means(x.values()) - mu0;
    let chol = cholesky_of(sample_covariance(x)?, "sample covariance")?;
    let t2 = n as f64 * d.dot(&chol.solve(&d));
    let scaled = (n - p) as f64 / (p as f64 * (n - 1) as f64) * t2;
    TestResult::new("hotelling1", vec![n], p, t2, scaled, NullLaw::FisherF { d1: p as f64, d2: (n - p) as f64 })
}

/// Two-sample Hotelling T² with the pooled covariance.
///
/// Standardized value (N−p+1)/(pN)·T² against F(p, N−p+1), N = n1 + n2 − 2.
pub fn hotelling_two(g: &GroupedData) -> Result<TestResult> {
    let (x1, x2) = require_two(g, "hotelling2")?;
    let (n1, n2, p) = (x1.n(), x2.n(), g.p());
    let big_n = n1 + n2 - 2;
    if p >= big_n {
        return Err(Error::NotDefined {
            test: "hotelling2",
            reason: format!("p = {p} is not below the degrees of freedom N = {big_n}"),
            alternatives: NAIVE_ALTERNATIVES,
        });
    }
    let d = mean_difference(x1, x2);
    let chol = cholesky_of(pooled_covariance(g)?, "pooled covariance")?;
    let t2 = (n1 * n2) as f64 / (n1 + n2) as f64 * d.dot(&chol.solve(&d));
    let scaled = (big_n - p + 1) as f64 / (p * big_n) as f64 * t2;
    TestResult::new(
        "hotelling2",
        vec![n1, n2],
        p,
        t2,
        scaled,
        NullLaw::FisherF { d1: p as f64, d2: (big_n - p + 1) as f64 },
    )
}

/// Rows y_1', …, y_n' of H'𝒳 for an orthogonal H whose first column is the
/// normalized all-ones vector and whose second column is the normalized group
/// contrast. The remaining columns complete the basis by Gram–Schmidt applied
/// to `candidates` (n×m, taken column by column) followed by the standard basis;
/// dependent candidates are skipped.
pub fn dempster_transform(g: &GroupedData, candidates: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    let (x1, x2) = require_two(g, "dempster")?;
    let (n1, n2) = (x1.n(), x2.n());
    let n = n1 + n2;
    if let Some(c) = candidates {
        if c.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: c.nrows() });
        }
    }
    let h1 = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let scale = ((n1 * n2) as f64 / n as f64).sqrt();
    let h2 = DVector::from_fn(n, |i, _| if i < n1 { scale / n1 as f64 } else { -scale / n2 as f64 });
    let mut basis: Vec<DVector<f64>> = vec![h1, h2];
    let extra = candidates.map_or(0, |c| c.ncols());
    let mut next = 0;
    while basis.len() < n && next < extra + n {
        let mut v = if next < extra {
            candidates.unwrap().column(next).into_owned()
        } else {
            let mut e = DVector::zeros(n);
            e[next - extra] = 1.0;
            e
        };
        next += 1;
        let norm0 = v.norm();
        // Two passes of modified Gram–Schmidt keep the basis orthogonal to rounding.
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 * norm0.max(1.0) {
            basis.push(v / norm);
        }
    }
    let h = DMatrix::from_columns(&basis);
    let stacked =
        DMatrix::from_fn(n, g.p(), |i, j| if i < n1 { x1.values()[(i, j)] } else { x2.values()[(i - n1, j)] });
    Ok(h.transpose() * stacked)
}

/// Dempster's degrees-of-freedom factor r = (tr Σ)²/tr Σ².
pub fn dempster_r(sigma: &DMatrix<f64>) -> Result<f64> {
    let tr2 = trace_sq(sigma);
    if !(tr2 > 0.0) {
        return Err(Error::Calibration { what: "dempster r", value: tr2 });
    }
    Ok(sigma.trace().powi(2) / tr2)
}

/// Dempster's non-exact test T_D = ‖y₂‖²/(‖y₃‖² + … + ‖y_n‖²) on the rows of
/// [`dempster_transform`] with the standard-basis completion.
///
/// The reported statistic is N·T_D with N = n1 + n2 − 2, referred to
/// F(r̂, N·r̂) with r̂ = (tr S)²/tr S² from the pooled covariance.
pub fn dempster_net(g: &GroupedData) -> Result<TestResult> {
    let (x1, x2) = require_two(g, "dempster")?;
    let (n1, n2, p) = (x1.n(), x2.n(), g.p());
    require_n(n1 + n2, 3)?;
    let big_n = (n1 + n2 - 2) as f64;
    let y = dempster_transform(g, None)?;
    let num = y.row(1).norm_squared();
    let den = compensated_sum((2..y.nrows()).map(|j| y.row(j).norm_squared()));
    if !(den > 0.0) {
        return Err(Error::Calibration { what: "dempster residual energy", value: den });
    }
    let r_hat = dempster_r(&pooled_covariance(g)?)?;
    let stat = big_n * num / den;
    TestResult::new("dempster", vec![n1, n2], p, stat, stat, NullLaw::FisherF { d1: r_hat, d2: big_n * r_hat })
        .map(|r| r.with_tuning("r_hat", r_hat))
}

/// One-sample Bai–Saranadasa statistic ‖X̄ − μ0‖² − tr S/n.
///
/// Standardized by σ̂_n/n, where σ̂_n² estimates 2 tr Σ² plus the fourth-cumulant
/// term, so that the ratio is asymptotically N(0, 1).
pub fn bs_ant_one(x: &DataMatrix, mu0: &DVector<f64>) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 6)?;
    let xs = x.shifted(mu0)?;
    let d = column_means(xs.values());
    let stat = d.norm_squared() - sample_covariance(x)?.trace() / n as f64;
    let sigma2 = crate::ustat::sigma2_hat_fast(&xs)?;
    let sd = calibrated("bs1 variance estimate", sigma2)? / n as f64;
    TestResult::new("bs1", vec![n], p, stat, stat / sd, NullLaw::StandardNormal)
}

/// Two-sample Bai–Saranadasa M_n = ‖X̄₁ − X̄₂‖² − (n/(n1n2)) tr S with the pooled S.
pub fn bs_ant_two(g: &GroupedData) -> Result<TestResult> {
    let (x1, x2) = require_two(g, "bs2")?;
    let (n1, n2, p) = (x1.n(), x2.n(), g.p());
    let (n, big_n) = ((n1 + n2) as f64, (n1 + n2 - 2) as f64);
    let s = pooled_covariance(g)?;
    let tr = s.trace();
    let m_n = mean_difference(x1, x2).norm_squared() - n / (n1 * n2) as f64 * tr;
    let (f1, f2) = (n1 as f64, n2 as f64);
    let var = 2.0 * (big_n + 2.0) * (big_n + 1.0) * big_n / (f1 * f1 * f2 * f2 * (big_n - 1.0))
        * (trace_sq(&s) - tr * tr / big_n);
    let sd = calibrated("bs2 variance estimate", var)?;
    TestResult::new("bs2", vec![n1, n2], p, m_n, m_n / sd, NullLaw::StandardNormal)
}

/// Σ_{i≠j} X_i'X_j = ‖Σ X_i‖² − Σ ‖X_i‖².
pub(crate) fn off_diagonal_inner(m: &DMatrix<f64>) -> f64 {
    let total: f64 = m.column_iter().map(|c| c.sum().powi(2)).sum();
    let diag: f64 = m.iter().map(|v| v * v).sum();
    total - diag
}

/// One-sample Chen–Qin T_CQ = Σ_{i≠j}(X_i − μ0)'(X_j − μ0)/(n(n−1)),
/// studentized by √(2 tr̂Σ²/(n(n−1))) with the leave-two-out trace estimator.
pub fn cq_one(x: &DataMatrix, mu0: &DVector<f64>) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 4)?;
    let xs = x.shifted(mu0)?;
    let stat = off_diagonal_inner(xs.values()) / falling(n, 2);
    let var = 2.0 * tr_sigma2_hat_cq(&xs)? / falling(n, 2);
    let sd = calibrated("cq1 variance estimate", var)?;
    TestResult::new("cq1", vec![n], p, stat, stat / sd, NullLaw::StandardNormal)
}

/// Two-sample Chen–Qin statistic; does not assume Σ₁ = Σ₂.
pub fn cq_two(g: &GroupedData) -> Result<TestResult> {
    let (x1, x2) = require_two(g, "cq2")?;
    let (n1, n2, p) = (x1.n(), x2.n(), g.p());
    require_n(n1, 4)?;
    require_n(n2, 4)?;
    let cross: f64 = {
        let s1 = crate::ustat::column_sums(x1.values());
        let s2 = crate::ustat::column_sums(x2.values());
        s1.dot(&s2)
    };
    let stat = off_diagonal_inner(x1.values()) / falling(n1, 2) + off_diagonal_inner(x2.values()) / falling(n2, 2)
        - 2.0 * cross / (n1 * n2) as f64;
    let var = 2.0 * tr_sigma2_hat_cq(x1)? / falling(n1, 2)
        + 2.0 * tr_sigma2_hat_cq(x2)? / falling(n2, 2)
        + 4.0 * tr_cross_hat_cq(x1, x2)? / (n1 * n2) as f64;
    let sd = calibrated("cq2 variance estimate", var)?;
    TestResult::new("cq2", vec![n1, n2], p, stat, stat / sd, NullLaw::StandardNormal)
}

pub(crate) fn c_pn(tr_r2: f64, p: usize, use_cpn: bool) -> f64 {
    if use_cpn {
        1.0 + tr_r2 / (p as f64).powf(1.5)
    } else {
        1.0
    }
}

/// T_SD,1 together with the sample covariance it used.
fn sd_one_statistic(x: &DataMatrix, mu0: &DVector<f64>) -> Result<(f64, DMatrix<f64>)> {
    check_len(mu0, x.p())?;
    let s = sample_covariance(x)?;
    let diag = positive_diagonal(&s)?;
    let d = column_means(x.values()) - mu0;
    Ok((d.iter().zip(&diag).map(|(v, s)| v * v / s).sum(), s))
}

/// One-sample Srivastava–Du T_SD,1 = (X̄ − μ0)'D_S⁻¹(X̄ − μ0), standardized as
/// (nT − (n−1)p/(n−3)) / √(2(tr R² − p²/(n−1))·c_{p,n}).
pub fn sd_one(x: &DataMatrix, mu0: &DVector<f64>, cfg: &MeanTestConfig) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 4)?;
    let (t, s) = sd_one_statistic(x, mu0)?;
    let tr_r2 = trace_sq(&sample_correlation(&s)?);
    let (nf, pf) = (n as f64, p as f64);
    let c = c_pn(tr_r2, p, cfg.sd_use_cpn);
    let var = 2.0 * (tr_r2 - pf * pf / (nf - 1.0)) * c;
    let sd = calibrated("sd1 variance estimate", var)?;
    let z = (nf * t - (nf - 1.0) * pf / (nf - 3.0)) / sd;
    TestResult::new("sd1", vec![n], p, t, z, NullLaw::StandardNormal).map(|r| r.with_tuning("c_pn", c))
}

/// Two-sample Srivastava–Du test.
///
/// Pooled variant: T = (n1n2/n)·d'D_S⁻¹d standardized as
/// (T − Np/(N−2)) / √(2(tr R² − p²/n)·c_{p,n}).
/// Unequal-covariance variant (`cfg.sd_unequal`): T = d'(D_{S1}/n1 + D_{S2}/n2)⁻¹d,
/// centered at p, with tr R² taken from D^{-1/2}(S1/n1 + S2/n2)D^{-1/2} and corrected by
/// Σ_i (tr(D⁻¹S_i)/n_i)²/(n_i − 1).
pub fn sd_two(g: &GroupedData, cfg: &MeanTestConfig) -> Result<TestResult> {
    let (x1, x2) = require_two(g, "sd2")?;
    let (n1, n2, p) = (x1.n(), x2.n(), g.p());
    require_n(n1, 4)?;
    require_n(n2, 4)?;
    let d = mean_difference(x1, x2);
    let pf = p as f64;
    if cfg.sd_unequal {
        let (f1, f2) = (n1 as f64, n2 as f64);
        let s1 = sample_covariance(x1)? / f1;
        let s2 = sample_covariance(x2)? / f2;
        let combined = &s1 + &s2;
        let diag = positive_diagonal(&combined)?;
        let t = d.iter().zip(&diag).map(|(v, s)| v * v / s).sum::<f64>();
        let r = sample_correlation(&combined)?;
        let a1: f64 = (0..p).map(|i| s1[(i, i)] / diag[i]).sum();
        let a2: f64 = (0..p).map(|i| s2[(i, i)] / diag[i]).sum();
        let tr_r2 = trace_sq(&r) - a1 * a1 / (f1 - 1.0) - a2 * a2 / (f2 - 1.0);
        let c = c_pn(tr_r2, p, cfg.sd_use_cpn);
        let sd = calibrated("sd2 variance estimate", 2.0 * tr_r2 * c)?;
        return TestResult::new("sd2", vec![n1, n2], p, t, (t - pf) / sd, NullLaw::StandardNormal)
            .map(|r| r.with_tuning("c_pn", c).with_tuning("unequal", 1.0));
    }
    let s = pooled_covariance(g)?;
    let diag = positive_diagonal(&s)?;
    let n = (n1 + n2) as f64;
    let big_n = n - 2.0;
    let t = (n1 * n2) as f64 / n * d.iter().zip(&diag).map(|(v, s)| v * v / s).sum::<f64>();
    let tr_r2 = trace_sq(&sample_correlation(&s)?);
    let c = c_pn(tr_r2, p, cfg.sd_use_cpn);
    let var = 2.0 * (tr_r2 - pf * pf / n) * c;
    let sd = calibrated("sd2 variance estimate", var)?;
    let z = (t - big_n * pf / (big_n - 2.0)) / sd;
    TestResult::new("sd2", vec![n1, n2], p, t, z, NullLaw::StandardNormal).map(|r| r.with_tuning("c_pn", c))
}

/// Park–Ayyala T_PA = (n−5)/(n(n−1)(n−3))·Σ_{i≠j} X_i'D_{S(i,j)}⁻¹X_j for H₀: μ = 0,
/// standardized as √(n(n−1))·T_PA/√(2·tr̂R²). Callers subtract μ0 first for other
/// hypothesized means.
pub fn pa_one(x: &DataMatrix) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 6)?;
    let lto = LeaveTwoOut::new(x.values());
    let m = x.values();
    let mut acc = Compensated::default();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for c in 0..p {
                let (v, _) = lto.var_and_mean(c, i, j);
                if !(v > 0.0) {
                    return Err(Error::DegenerateVariable { index: c, value: v });
                }
                s += m[(i, c)] * m[(j, c)] / v;
            }
            acc.add(2.0 * s);
        }
    }
    let nf = n as f64;
    let stat = (nf - 5.0) / (nf * (nf - 1.0) * (nf - 3.0)) * acc.value();
    let tr_r2 = tr_r2_hat_pa(x)?;
    let sd = calibrated("pa1 tr R² estimate", 2.0 * tr_r2)?;
    TestResult::new("pa1", vec![n], p, stat, (nf * (nf - 1.0)).sqrt() * stat / sd, NullLaw::StandardNormal)
}

/// Cai–Liu–Xia max test T_CLX = (n1n2/(n1+n2))·max_i 𝒳_i²/b_ii with 𝒳 = Ω̂(X̄₁ − X̄₂).
///
/// A known Ω is used verbatim with b_ii = ω_ii. For an estimated Ω̂ the
/// studentizer is b_ii = (Ω̂SΩ̂)_ii with the pooled S, the sample variance of
/// 𝒳_i, since shrinkage in Ω̂ makes ω_ii a biased scale. Standardized value
/// T_CLX − 2 log p − log log p against the extreme-value law A.
pub fn clx_two(g: &GroupedData, omega: &PrecisionEstimate) -> Result<TestResult> {
    let (x1, x2) = require_two(g, "clx2")?;
    let (n1, n2, p) = (x1.n(), x2.n(), g.p());
    if p <= 2 {
        return Err(Error::UnsupportedDimension { p, reason: "the centering log log p needs p ≥ 3" });
    }
    if omega.p() != p {
        return Err(Error::DimensionMismatch { expected: p, actual: omega.p() });
    }
    let d = mean_difference(x1, x2);
    let xv = &omega.omega * d;
    let b: Vec<f64> = match omega.method {
        PrecisionMethod::Known => (0..p).map(|i| omega.omega[(i, i)]).collect(),
        _ => {
            let s = pooled_covariance(g)?;
            let os = &omega.omega * s;
            (0..p).map(|i| os.row(i).dot(&omega.omega.row(i))).collect()
        }
    };
    let mut best = f64::NEG_INFINITY;
    for i in 0..p {
        if !(b[i] > 0.0) {
            return Err(Error::DegenerateVariable { index: i, value: b[i] });
        }
        best = best.max(xv[i] * xv[i] / b[i]);
    }
    let stat = (n1 * n2) as f64 / (n1 + n2) as f64 * best;
    let lp = (p as f64).ln();
    TestResult::new("clx2", vec![n1, n2], p, stat, stat - 2.0 * lp - lp.ln(), NullLaw::ExtremeValueA)
        .map(|r| r.with_tuning("gamma", omega.gamma).with_note(format!("precision: {}", omega.method.as_str())))
}

/// [`clx_two`] with Ω̂ from the constrained ℓ1 estimator on the pooled covariance.
pub fn clx_two_estimated(g: &GroupedData, cfg: &MeanTestConfig) -> Result<TestResult> {
    cfg.validate()?;
    let s = pooled_covariance(g)?;
    let gamma = match cfg.clx_gamma {
        Some(v) => v,
        None => default_gamma(g.total_n(), g.p(), DEFAULT_GAMMA_CONSTANT)?,
    };
    clx_two(g, &clime(&s, gamma)?)
}

/// m(λ) = (1/p)Σ(ℓ_k + λ)⁻¹ and m'(λ) = (1/p)Σ(ℓ_k + λ)⁻² from the eigenvalues ℓ_k of S,
/// that is (1/p)tr(S+λI)⁻¹ and (1/p)tr(S+λI)⁻². Rounding-level negative eigenvalues count as 0.
pub fn resolvent_moments(eigenvalues: &[f64], lambda: f64) -> (f64, f64) {
    let p = eigenvalues.len() as f64;
    let (mut m, mut m1) = (0.0, 0.0);
    for &l in eigenvalues {
        let inv = 1.0 / (l.max(0.0) + lambda);
        m += inv;
        m1 += inv * inv;
    }
    (m / p, m1 / p)
}

/// Regularized Hotelling T_RHT = X̄'(S + λI)⁻¹X̄ for H₀: μ = 0.
///
/// With γ = p/n, m = (1/p)tr(S+λI)⁻¹ and m' = (1/p)tr(S+λI)⁻², the
/// standardized value is √p·(nT/p − Θ₁)/√(2Θ₂) where
/// Θ₁ = (1−λm)/(1−γ(1−λm)) and
/// Θ₂ = (1−λm)/(1−γ+γλm)³ − λ(m−λm')/(1−γ+γλm)⁴.
pub fn rht_one(x: &DataMatrix, cfg: &MeanTestConfig) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    let lambda = cfg.rht_lambda;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge λ must be positive, got {lambda}")));
    }
    let s = sample_covariance(x)?;
    let eig = SymmetricEigen::new(s);
    let xbar = column_means(x.values());
    // T = Σ_k (u_k'X̄)²/(ℓ_k + λ) in the eigenbasis of S.
    let proj = eig.eigenvectors.transpose() * &xbar;
    let t: f64 = eig.eigenvalues.iter().zip(proj.iter()).map(|(&l, &u)| u * u / (l.max(0.0) + lambda)).sum();
    let (m, m1) = resolvent_moments(eig.eigenvalues.as_slice(), lambda);
    let (pf, nf) = (p as f64, n as f64);
    let gam = pf / nf;
    let one_minus = 1.0 - lambda * m;
    let theta1 = one_minus / (1.0 - gam * one_minus);
    let base = 1.0 - gam + gam * lambda * m;
    let theta2 = one_minus / base.powi(3) - lambda * (m - lambda * m1) / base.powi(4);
    let sd = calibrated("rht scale", 2.0 * theta2)?;
    let z = pf.sqrt() * (nf * t / pf - theta1) / sd;
    TestResult::new("rht1", vec![n], p, t, z, NullLaw::StandardNormal)
        .map(|r| r.with_tuning("lambda", lambda).with_tuning("m", m).with_tuning("m_prime", m1))
}

/// Power formula selector for [`asymptotic_power`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerKind {
    Hotelling,
    Dempster,
    Bs,
    CqCase1,
    CqCase2,
    Sd,
}

/// Inputs of the asymptotic power formulas. `kappa = None` selects the
/// one-sample displays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerInputs {
    /// Total sample size n (n = n1 + n2 for two samples).
    pub n: usize,
    pub p: usize,
    /// ‖δ‖² (Hotelling), ‖μ − μ0‖² (Dempster, BS, CQ) or (μ − μ0)'D_Σ⁻¹(μ − μ0) (SD).
    pub delta_sq: f64,
    /// tr Σ², or tr(κΣ₁ + (1−κ)Σ₂)² for the Chen–Qin formula.
    pub tr_sigma2: f64,
    /// tr ℛ² of the population correlation matrix.
    pub tr_r2: f64,
    /// Limit of n1/n; `None` for one sample.
    pub kappa: Option<f64>,
    pub alpha: f64,
}

impl PowerInputs {
    /// y = p/n, or p/(n − 2) for two samples.
    pub fn y(&self) -> f64 {
        match self.kappa {
            Some(_) => self.p as f64 / (self.n as f64 - 2.0),
            None => self.p as f64 / self.n as f64,
        }
    }
}

/// Asymptotic power Φ(−ξ_α + shift) of the named test.
///
/// Two-sample shifts, with w = κ(1−κ):
/// Hotelling √(n(1−y)/(2y))·w·‖δ‖²; Dempster, BS and CQ case 1
/// n·w·‖μ‖²/√(2 tr Σ²); SD n·w·μ'D_Σ⁻¹μ/√(2 tr ℛ²). One-sample shifts drop w.
/// CQ case 2 (mean shift dominating the variance) has power 1.
pub fn asymptotic_power(kind: PowerKind, inp: &PowerInputs) -> Result<f64> {
    if !(inp.alpha > 0.0 && inp.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {}", inp.alpha)));
    }
    if !(inp.delta_sq >= 0.0) || inp.n < 3 || inp.p < 1 {
        return Err(Error::InvalidParameter("power needs delta_sq ≥ 0, n ≥ 3 and p ≥ 1".into()));
    }
    let w = match inp.kappa {
        Some(k) if k > 0.0 && k < 1.0 => k * (1.0 - k),
        Some(k) => return Err(Error::InvalidParameter(format!("kappa must lie in (0,1), got {k}"))),
        None => 1.0,
    };
    let xi = quantile(&NullLaw::StandardNormal, inp.alpha)?;
    let n = inp.n as f64;
    let positive = |v: f64, name: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
        }
    };
    let shift = match kind {
        PowerKind::Hotelling => {
            let y = inp.y();
            if !(y > 0.0 && y < 1.0) {
                return Err(Error::InvalidParameter(format!("Hotelling power needs y = p/n in (0,1), got {y}")));
            }
            (n * (1.0 - y) / (2.0 * y)).sqrt() * w * inp.delta_sq
        }
        PowerKind::Dempster | PowerKind::Bs | PowerKind::CqCase1 => {
            n * w * inp.delta_sq / (2.0 * positive(inp.tr_sigma2, "tr_sigma2")?).sqrt()
        }
        PowerKind::CqCase2 => return Ok(1.0),
        PowerKind::Sd => n * w * inp.delta_sq / (2.0 * positive(inp.tr_r2, "tr_r2")?).sqrt(),
    };
    Ok(phi(-xi + shift))
}
