//! Limiting null distributions and the upper-tail p-value / quantile machinery.

use serde::{Deserialize, Serialize};
use statrs::function::beta::checked_beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::{checked_gamma_ur, gamma};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Closed-form limiting law of a standardized statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NullLaw {
    StandardNormal,
    Normal {
        mean: f64,
        variance: f64,
    },
    FisherF {
        d1: f64,
        d2: f64,
    },
    ChiSquared {
        df: f64,
    },
    /// CDF exp(−(1/π)·exp(−x/2)).
    ExtremeValueA,
    /// CDF exp(−(1/√(8π))·exp(−x/2)).
    ExtremeValueB,
    /// CDF exp(−H/Γ(d/2)·exp(−x/(2λ²))).
    ExtremeValueCx {
        lambda_sq: f64,
        d: u32,
        h: f64,
    },
}

fn normal_upper(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Upper tail of an extreme-value law with CDF exp(−c·exp(−x/s)).
fn gumbel_upper(c: f64, s: f64, x: f64) -> f64 {
    // 1 − exp(−t) computed as −expm1(−t) keeps precision in the far tail.
    let t = c * (-x / s).exp();
    -(-t).exp_m1()
}

impl NullLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            NullLaw::Normal { mean, variance } => {
                if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
                    return bad(format!(
                        "normal law needs finite mean and positive variance, got ({mean}, {variance})"
                    ));
                }
            }
            NullLaw::FisherF { d1, d2 } => {
                if !(d1 > 0.0 && d2 > 0.0 && d1.is_finite() && d2.is_finite()) {
                    return bad(format!("F law needs positive degrees of freedom, got ({d1}, {d2})"));
                }
            }
            NullLaw::ChiSquared { df } => {
                if !(df > 0.0 && df.is_finite()) {
                    return bad(format!("chi-squared law needs positive df, got {df}"));
                }
            }
            NullLaw::ExtremeValueCx { lambda_sq, d, h } => {
                if !(lambda_sq > 0.0 && lambda_sq.is_finite()) || d < 1 || !(h > 0.0 && h.is_finite()) {
                    return bad(format!("extreme-value law needs λ² > 0, d ≥ 1, H > 0, got ({lambda_sq}, {d}, {h})"));
                }
            }
            NullLaw::StandardNormal | NullLaw::ExtremeValueA | NullLaw::ExtremeValueB => {}
        }
        Ok(())
    }

    /// Upper-tail probability 1 − CDF(z) in [0, 1].
    pub fn upper_tail(&self, z: f64) -> Result<f64> {
        self.validate()?;
        if z.is_nan() {
            return Err(Error::InvalidParameter("p-value requested at NaN".into()));
        }
        let p = match *self {
            NullLaw::StandardNormal => normal_upper(z),
            NullLaw::Normal { mean, variance } => normal_upper((z - mean) / variance.sqrt()),
            NullLaw::FisherF { d1, d2 } => {
                if z <= 0.0 {
                    1.0
                } else if z == f64::INFINITY {
                    0.0
                } else {
                    let x = d2 / (d2 + d1 * z);
                    checked_beta_reg(d2 / 2.0, d1 / 2.0, x).map_err(|e| Error::InvalidParameter(e.to_string()))?
                }
            }
            NullLaw::ChiSquared { df } => {
                if z <= 0.0 {
                    1.0
                } else if z == f64::INFINITY {
                    0.0
                } else {
                    checked_gamma_ur(df / 2.0, z / 2.0).map_err(|e| Error::InvalidParameter(e.to_string()))?
                }
            }
            NullLaw::ExtremeValueA => gumbel_upper(1.0 / PI, 2.0, z),
            NullLaw::ExtremeValueB => gumbel_upper(1.0 / (8.0 * PI).sqrt(), 2.0, z),
            NullLaw::ExtremeValueCx { lambda_sq, d, h } => gumbel_upper(h / gamma(d as f64 / 2.0), 2.0 * lambda_sq, z),
        };
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        Ok(1.0 - self.upper_tail(z)?)
    }

    /// Lower end of the support, if bounded.
    fn support_min(&self) -> Option<f64> {
        match self {
            NullLaw::FisherF { .. } | NullLaw::ChiSquared { .. } => Some(0.0),
            _ => None,
        }
    }
}

/// Upper-tail p-value of `z` under `law`.
pub fn p_value(law: &NullLaw, z: f64) -> Result<f64> {
    law.upper_tail(z)
}

/// Upper α quantile: the t with p_value(law, t) = α, by bracketing and bisection.
pub fn quantile(law: &NullLaw, alpha: f64) -> Result<f64> {
    law.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile level must lie in (0,1), got {alpha}")));
    }
    let (mut lo, mut hi) = match law.support_min() {
        Some(m) => (m, m + 1.0),
        None => (-1.0, 1.0),
    };
    while law.upper_tail(hi)? > alpha {
        lo = hi;
        hi = if hi > 0.0 { 2.0 * hi } else { 1.0 };
        if hi > 1e300 {
            return Err(Error::InvalidParameter("quantile bracket overflow".into()));
        }
    }
    if law.support_min().is_none() {
        let mut step = 1.0;
        while law.upper_tail(lo)? < alpha {
            hi = lo;
            lo -= step;
            step *= 2.0;
            if lo < -1e300 {
                return Err(Error::InvalidParameter("quantile bracket overflow".into()));
            }
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if law.upper_tail(mid)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Standard normal CDF Φ.
pub fn phi(x: f64) -> f64 {
    1.0 - normal_upper(x)
}
