//! Tests on covariance matrices: sphericity and identity (Ledoit–Wolf and
//! Srivastava), two-sample equality (Li–Chen and the Cai–Liu–Xia maximum
//! difference) and bandedness (Qiu–Chen and Cai–Jiang).
//!
//! Statistics built on the sample covariance S use the divisor n − 1, and the
//! Ledoit–Wolf formulas use the matching degrees of freedom m = n − 1 wherever a
//! sample size enters, so that their centering terms are exact under the null.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{sample_correlation, sample_covariance, trace_sq, DataMatrix, GroupedData};
use crate::error::{require_n, Error, Result};
use crate::law::NullLaw;
use crate::meantest::require_two;
use crate::result::TestResult;
use crate::ustat::{centered_column, lc_a, lc_c, qc_from_columns};

/// Bandwidth τ of the banded hypothesis σ_ij = 0 for all |i − j| ≥ τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandSpec {
    pub tau: usize,
}

impl BandSpec {
    pub fn new(tau: usize) -> Self {
        Self { tau }
    }

    /// Checks 1 ≤ τ ≤ p − 1.
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.tau == 0 || self.tau >= p {
            return Err(Error::InvalidParameter(format!(
                "bandwidth τ = {} must satisfy 1 ≤ τ ≤ p − 1 = {}",
                self.tau,
                p.saturating_sub(1)
            )));
        }
        Ok(())
    }
}

/// Per-entry variance estimates θ̂_ij of one sample, with the divisor-n sample
/// covariance they are built around.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimates {
    /// θ̂_ij = (1/n)Σ_k [(X_ki − X̄_i)(X_kj − X̄_j) − s_ij]².
    pub theta: DMatrix<f64>,
    /// s_ij = (1/n)Σ_k (X_ki − X̄_i)(X_kj − X̄_j).
    pub covariance: DMatrix<f64>,
}

impl ThetaEstimates {
    pub fn new(x: &DataMatrix) -> Result<Self> {
        let (n, p) = (x.n(), x.p());
        require_n(n, 2)?;
        let cols: Vec<Vec<f64>> = (0..p).map(|c| centered_column(x.values(), c)).collect();
        let nf = n as f64;
        let mut theta = DMatrix::zeros(p, p);
        let mut covariance = DMatrix::zeros(p, p);
        let mut prod = vec![0.0; n];
        for j in 0..p {
            for i in 0..=j {
                for (k, v) in prod.iter_mut().enumerate() {
                    *v = cols[i][k] * cols[j][k];
                }
                let s = prod.iter().sum::<f64>() / nf;
                let t = prod.iter().map(|v| (v - s) * (v - s)).sum::<f64>() / nf;
                covariance[(i, j)] = s;
                covariance[(j, i)] = s;
                theta[(i, j)] = t;
                theta[(j, i)] = t;
            }
        }
        Ok(Self { theta, covariance })
    }
}

/// Which limiting law standardizes the Ledoit–Wolf W statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LwRegime {
    /// Normal law when p ≥ [`LW_NORMAL_THRESHOLD`], chi-squared otherwise.
    #[default]
    Auto,
    Normal,
    ChiSquared,
}

/// Smallest p at which the automatic regime switches W to its normal law.
pub const LW_NORMAL_THRESHOLD: usize = 20;

fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Calibration { what, value })
    }
}

/// Ledoit–Wolf V = (1/p)tr(S − I)². Reported without a null law because V is
/// not consistent when p/n → c > 0: under Σ = αI it tends to cα² + (α − 1)².
pub fn lw_v(x: &DataMatrix) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 2)?;
    let s = sample_covariance(x)?;
    let v = trace_sq(&(s - DMatrix::identity(p, p))) / p as f64;
    let c = p as f64 / (n - 1) as f64;
    Ok(TestResult::diagnostic("lw_v", vec![n], p, v)
        .with_tuning("c", c)
        .with_note("diagnostic only; limit under Σ = αI is cα² + (α − 1)², which is 1 at α = 1 and c = 1"))
}

/// Ledoit–Wolf sphericity statistic U = (1/p)tr(S/((1/p)tr S) − I)²,
/// standardized as (mU − p − 1)/2 with m = n − 1.
pub fn lw_u(x: &DataMatrix) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 2)?;
    let s = sample_covariance(x)?;
    let a = positive("lw_u trace of S", s.trace())? / p as f64;
    let u = trace_sq(&(s / a - DMatrix::identity(p, p))) / p as f64;
    let m = (n - 1) as f64;
    TestResult::new("lw_u", vec![n], p, u, (m * u - p as f64 - 1.0) / 2.0, NullLaw::StandardNormal)
}

/// Ledoit–Wolf identity statistic W = (1/p)tr(S − I)² − (p/m)((1/p)tr S)² + p/m
/// with m = n − 1. The normal regime standardizes as (mW − p − 1)/2; the
/// chi-squared regime refers mpW/2 to χ² with p(p + 1)/2 degrees of freedom.
pub fn lw_w(x: &DataMatrix, regime: LwRegime) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 2)?;
    let s = sample_covariance(x)?;
    let (m, pf) = ((n - 1) as f64, p as f64);
    let a = s.trace() / pf;
    let w = trace_sq(&(s - DMatrix::identity(p, p))) / pf - pf / m * a * a + pf / m;
    let normal = match regime {
        LwRegime::Auto => p >= LW_NORMAL_THRESHOLD,
        LwRegime::Normal => true,
        LwRegime::ChiSquared => false,
    };
    let r = if normal {
        TestResult::new("lw_w", vec![n], p, w, (m * w - pf - 1.0) / 2.0, NullLaw::StandardNormal)?
    } else {
        let df = pf * (pf + 1.0) / 2.0;
        TestResult::new("lw_w", vec![n], p, w, m * pf * w / 2.0, NullLaw::ChiSquared { df })?
    };
    Ok(r.with_tuning("normal_regime", if normal { 1.0 } else { 0.0 }))
}

/// Unbiased estimates of ((1/p)tr Σ, (1/p)tr Σ²) under normality:
/// (1/p)tr S and ((n−1)²/(p(n−2)(n+1)))·(tr S² − (tr S)²/(n−1)).
pub fn srivastava_moments(x: &DataMatrix) -> Result<(f64, f64)> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 3)?;
    let s = sample_covariance(x)?;
    let (nf, pf) = (n as f64, p as f64);
    let tr = s.trace();
    let a1 = tr / pf;
    let a2 = (nf - 1.0).powi(2) / (pf * (nf - 2.0) * (nf + 1.0)) * (trace_sq(&s) - tr * tr / (nf - 1.0));
    Ok((a1, a2))
}

/// Srivastava identity statistic T_S1 = â₂ − 2â₁ + 1, standardized as (n/2)T_S1.
pub fn srivastava_s1(x: &DataMatrix) -> Result<TestResult> {
    let (a1, a2) = srivastava_moments(x)?;
    let t = a2 - 2.0 * a1 + 1.0;
    let n = x.n();
    TestResult::new("s1", vec![n], x.p(), t, n as f64 / 2.0 * t, NullLaw::StandardNormal)
}

/// Srivastava sphericity statistic T_S2 = (â₂ − â₁²)/â₁², standardized as (n/2)T_S2.
pub fn srivastava_s2(x: &DataMatrix) -> Result<TestResult> {
    let (a1, a2) = srivastava_moments(x)?;
    positive("s2 trace estimate", a1)?;
    let t = (a2 - a1 * a1) / (a1 * a1);
    let n = x.n();
    TestResult::new("s2", vec![n], x.p(), t, n as f64 / 2.0 * t, NullLaw::StandardNormal)
}

/// Li–Chen T_LC = A_{n1} + A_{n2} − 2C_{n1n2}, unbiased for tr(Σ₁ − Σ₂)²,
/// standardized as T_LC/(2A_{n1}/n1 + 2A_{n2}/n2).
pub fn lc_two(g: &GroupedData) -> Result<TestResult> {
    let (x1, x2) = require_two(g, "lc")?;
    let (n1, n2) = (x1.n(), x2.n());
    require_n(n1, 4)?;
    require_n(n2, 4)?;
    let (a1, a2) = (lc_a(x1)?, lc_a(x2)?);
    // Averaging both orders makes the statistic exactly symmetric in the samples.
    let c = 0.5 * (lc_c(x1, x2)? + lc_c(x2, x1)?);
    let t = a1 + a2 - 2.0 * c;
    let scale = positive("lc scale estimate", 2.0 * a1 / n1 as f64 + 2.0 * a2 / n2 as f64)?;
    Ok(TestResult::new("lc", vec![n1, n2], g.p(), t, t / scale, NullLaw::StandardNormal)?
        .with_tuning("a1", a1)
        .with_tuning("a2", a2)
        .with_tuning("c", c))
}

/// Cai–Liu–Xia M_n = max_{i≤j}(s_ij1 − s_ij2)²/(θ̂_ij1/n1 + θ̂_ij2/n2),
/// standardized as M_n − 4 log p + log log p and referred to the extreme-value
/// law with CDF exp(−(8π)^{−1/2}e^{−x/2}).
pub fn clx_cov(g: &GroupedData) -> Result<TestResult> {
    let (x1, x2) = require_two(g, "clx_cov")?;
    let (n1, n2, p) = (x1.n(), x2.n(), g.p());
    if p < 3 {
        return Err(Error::UnsupportedDimension {
            p,
            reason: "the extreme-value calibration needs log log p > 0, so p ≥ 3",
        });
    }
    let t1 = ThetaEstimates::new(x1)?;
    let t2 = ThetaEstimates::new(x2)?;
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let mut m = 0.0f64;
    let mut arg = (0, 0);
    for j in 0..p {
        for i in 0..=j {
            let den = t1.theta[(i, j)] / n1f + t2.theta[(i, j)] / n2f;
            if !(den > 0.0 && den.is_finite()) {
                return Err(Error::DegeneratePair { i, j, value: den });
            }
            let d = t1.covariance[(i, j)] - t2.covariance[(i, j)];
            let v = d * d / den;
            if v > m {
                m = v;
                arg = (i, j);
            }
        }
    }
    let lp = (p as f64).ln();
    Ok(TestResult::new("clx_cov", vec![n1, n2], p, m, m - 4.0 * lp + lp.ln(), NullLaw::ExtremeValueB)?
        .with_tuning("argmax_i", arg.0 as f64)
        .with_tuning("argmax_j", arg.1 as f64))
}

/// Qiu–Chen banded test. T = 2Σ_{q=τ}^{p−1}Σ_l σ̂²_{l,l+q} is unbiased for
/// 2Σ_{i<j, j−i≥τ} σ_ij²; with V = Σ_l σ̂²_ll + 2Σ_{q=1}^{τ}Σ_l σ̂²_{l,l+q} the
/// standardized value is (nT/V)/2.
pub fn qc_banded(x: &DataMatrix, band: BandSpec) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 4)?;
    band.validate(p)?;
    let cols: Vec<Vec<f64>> = (0..p).map(|c| centered_column(x.values(), c)).collect();
    let lag_sum = |q: usize| -> f64 { (0..p - q).map(|l| qc_from_columns(&cols[l], &cols[l + q])).sum() };
    let t = 2.0 * (band.tau..p).map(lag_sum).sum::<f64>();
    let v = lag_sum(0) + 2.0 * (1..=band.tau).map(lag_sum).sum::<f64>();
    positive("qc scale estimate V", v)?;
    Ok(TestResult::new("qc", vec![n], p, t, n as f64 * t / v / 2.0, NullLaw::StandardNormal)?
        .with_tuning("tau", band.tau as f64)
        .with_tuning("v", v))
}

/// Cai–Jiang T = max_{|i−j|≥τ}|ρ̂_ij|, standardized as nT² − 4 log p + log log p.
/// With τ = 1 this is the complete-independence test.
pub fn cj_banded(x: &DataMatrix, band: BandSpec) -> Result<TestResult> {
    let (n, p) = (x.n(), x.p());
    require_n(n, 3)?;
    band.validate(p)?;
    if p < 3 {
        return Err(Error::UnsupportedDimension {
            p,
            reason: "the extreme-value calibration needs log log p > 0, so p ≥ 3",
        });
    }
    let r = sample_correlation(&sample_covariance(x)?)?;
    let mut t = 0.0f64;
    for j in band.tau..p {
        for i in 0..=j - band.tau {
            t = t.max(r[(i, j)].abs());
        }
    }
    let lp = (p as f64).ln();
    Ok(TestResult::new("cj", vec![n], p, t, n as f64 * t * t - 4.0 * lp + lp.ln(), NullLaw::ExtremeValueB)?
        .with_tuning("tau", band.tau as f64))
}

/// Number of (l, q) pairs summed by the Qiu–Chen statistic at bandwidth τ.
pub fn qc_pair_count(p: usize, tau: usize) -> usize {
    (tau..p).map(|q| p - q).sum()
}
