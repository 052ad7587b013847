//! Catalogue of every test by identifier, with a single dispatch entry point
//! shared by the simulation harness and the command-line front end.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::covtest::{self, BandSpec, LwRegime};
use crate::data::{pooled_covariance, DataMatrix, GroupedData};
use crate::error::{Error, Result};
use crate::manova;
use crate::meantest::{self, MeanTestConfig};
use crate::precision::PrecisionEstimate;
use crate::result::TestResult;

/// How many samples a test takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arity {
    One,
    Two,
    /// Two or more groups.
    Many,
}

/// Source of the precision matrix for the max-type mean tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionChoice {
    /// Constrained ℓ1 estimate from the pooled covariance.
    #[default]
    Estimated,
    /// A caller-supplied Ω, used verbatim.
    Known,
    /// The inverse diagonal of the pooled covariance.
    DiagonalInverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestInfo {
    pub id: &'static str,
    /// Module that implements the test: meantest, manova or covtest.
    pub module: &'static str,
    pub arity: Arity,
    /// Smallest per-group sample size accepted.
    pub min_n: usize,
    /// False for diagnostics that carry no null law.
    pub has_null_law: bool,
    pub description: &'static str,
}

const fn info(
    id: &'static str,
    module: &'static str,
    arity: Arity,
    min_n: usize,
    description: &'static str,
) -> TestInfo {
    TestInfo { id, module, arity, min_n, has_null_law: true, description }
}

/// Every test, in a fixed order.
pub const REGISTRY: &[TestInfo] = &[
    info("hotelling1", "meantest", Arity::One, 2, "one-sample Hotelling T², exact F law (p < n)"),
    info("hotelling2", "meantest", Arity::Two, 2, "two-sample Hotelling T², exact F law (p < n1+n2−2)"),
    info("dempster", "meantest", Arity::Two, 2, "Dempster non-exact test, F(r̂, N r̂)"),
    info("bs1", "meantest", Arity::One, 6, "one-sample Bai–Saranadasa"),
    info("bs2", "meantest", Arity::Two, 2, "two-sample Bai–Saranadasa"),
    info("cq1", "meantest", Arity::One, 4, "one-sample Chen–Qin"),
    info("cq2", "meantest", Arity::Two, 4, "two-sample Chen–Qin"),
    info("sd1", "meantest", Arity::One, 4, "one-sample Srivastava–Du (scale invariant)"),
    info("sd2", "meantest", Arity::Two, 4, "two-sample Srivastava–Du (scale invariant)"),
    info("pa1", "meantest", Arity::One, 6, "one-sample Park–Ayyala leave-two-out"),
    info("clx2", "meantest", Arity::Two, 2, "two-sample Cai–Liu–Xia maximum of transformed differences"),
    info("rht1", "meantest", Arity::One, 2, "one-sample regularized Hotelling"),
    info("sk", "manova", Arity::Many, 2, "Srivastava–Kubokawa k-sample"),
    info("hb", "manova", Arity::Many, 4, "Hu–Bai k-sample"),
    info("cx", "manova", Arity::Many, 2, "Cao–Xu k-sample maximum type"),
    TestInfo {
        has_null_law: false,
        ..info("lw_v", "covtest", Arity::One, 2, "Ledoit–Wolf V (diagnostic, no null law)")
    },
    info("lw_u", "covtest", Arity::One, 2, "Ledoit–Wolf U sphericity"),
    info("lw_w", "covtest", Arity::One, 2, "Ledoit–Wolf W identity"),
    info("s1", "covtest", Arity::One, 3, "Srivastava identity T_S1"),
    info("s2", "covtest", Arity::One, 3, "Srivastava sphericity T_S2"),
    info("lc", "covtest", Arity::Two, 4, "Li–Chen two-sample covariance equality"),
    info("clx_cov", "covtest", Arity::Two, 2, "Cai–Liu–Xia maximum covariance difference"),
    info("qc", "covtest", Arity::One, 4, "Qiu–Chen banded covariance"),
    info("cj", "covtest", Arity::One, 3, "Cai–Jiang maximum correlation outside the band"),
];

/// Looks up a test by identifier.
pub fn lookup(id: &str) -> Result<&'static TestInfo> {
    REGISTRY.iter().find(|t| t.id == id).ok_or_else(|| {
        let ids: Vec<&str> = REGISTRY.iter().map(|t| t.id).collect();
        Error::InvalidParameter(format!("unknown test '{id}'; known tests: {}", ids.join(", ")))
    })
}

/// Options for every test; each test reads only the fields it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    #[serde(flatten)]
    pub mean: MeanTestConfig,
    /// Hypothesized center of one-sample location tests; `None` is the zero vector.
    pub mu0: Option<Vec<f64>>,
    /// Bandwidth of the banded covariance tests.
    pub tau: usize,
    pub lw_regime: LwRegime,
    pub precision: PrecisionChoice,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            mean: MeanTestConfig::default(),
            mu0: None,
            tau: 1,
            lw_regime: LwRegime::Auto,
            precision: PrecisionChoice::Estimated,
        }
    }
}

/// Checks group count and sizes against the registry entry.
pub fn check_shape(info: &TestInfo, groups: &[DataMatrix]) -> Result<()> {
    let k = groups.len();
    let ok = match info.arity {
        Arity::One => k == 1,
        Arity::Two => k == 2,
        Arity::Many => k >= 2,
    };
    if !ok {
        let want = match info.arity {
            Arity::One => "1 group",
            Arity::Two => "2 groups",
            Arity::Many => "at least 2 groups",
        };
        return Err(Error::InvalidParameter(format!("{} needs {want}, got {k}", info.id)));
    }
    for grp in groups {
        if grp.n() < info.min_n {
            return Err(Error::InsufficientData { required: info.min_n, actual: grp.n() });
        }
    }
    Ok(())
}

fn precision_for(g: &GroupedData, cfg: &TestConfig, known: Option<&DMatrix<f64>>) -> Result<Option<PrecisionEstimate>> {
    match cfg.precision {
        PrecisionChoice::Estimated => Ok(None),
        PrecisionChoice::Known => {
            let omega = known.ok_or_else(|| {
                Error::InvalidParameter("precision 'known' requested but no precision matrix was supplied".into())
            })?;
            Ok(Some(PrecisionEstimate::known(omega.clone())?))
        }
        PrecisionChoice::DiagonalInverse => Ok(Some(PrecisionEstimate::diagonal_inverse(&pooled_covariance(g)?)?)),
    }
}

/// Runs test `id` on `g`. `known_precision` supplies Ω when the configuration
/// asks for a known precision matrix.
pub fn run_test(
    id: &str,
    groups: Vec<DataMatrix>,
    cfg: &TestConfig,
    known_precision: Option<&DMatrix<f64>>,
) -> Result<TestResult> {
    let info = lookup(id)?;
    check_shape(info, &groups)?;
    if info.arity == Arity::One {
        return run_one(info.id, &groups[0], cfg);
    }
    let g = &GroupedData::new(groups)?;
    match info.id {
        "hotelling2" => meantest::hotelling_two(g),
        "dempster" => meantest::dempster_net(g),
        "bs2" => meantest::bs_ant_two(g),
        "cq2" => meantest::cq_two(g),
        "sd2" => meantest::sd_two(g, &cfg.mean),
        "clx2" => match precision_for(g, cfg, known_precision)? {
            Some(om) => meantest::clx_two(g, &om),
            None => meantest::clx_two_estimated(g, &cfg.mean),
        },
        "sk" => manova::sk_test(g),
        "hb" => manova::hb_test(g),
        "cx" => match precision_for(g, cfg, known_precision)? {
            Some(om) => manova::cx_test(g, &om),
            None => manova::cx_test_estimated(g, cfg.mean.clx_gamma),
        },
        "lc" => covtest::lc_two(g),
        "clx_cov" => covtest::clx_cov(g),
        other => unreachable!("registry entry '{other}' has no dispatch arm"),
    }
}

fn run_one(id: &str, x: &DataMatrix, cfg: &TestConfig) -> Result<TestResult> {
    let p = x.p();
    let mu0 = || -> Result<DVector<f64>> {
        match &cfg.mu0 {
            None => Ok(DVector::zeros(p)),
            Some(v) if v.len() == p => Ok(DVector::from_column_slice(v)),
            Some(v) => Err(Error::DimensionMismatch { expected: p, actual: v.len() }),
        }
    };
    match id {
        "hotelling1" => meantest::hotelling_one(x, &mu0()?),
        "bs1" => meantest::bs_ant_one(x, &mu0()?),
        "cq1" => meantest::cq_one(x, &mu0()?),
        "sd1" => meantest::sd_one(x, &mu0()?, &cfg.mean),
        "pa1" => meantest::pa_one(&x.shifted(&mu0()?)?),
        "rht1" => meantest::rht_one(&x.shifted(&mu0()?)?, &cfg.mean),
        "lw_v" => covtest::lw_v(x),
        "lw_u" => covtest::lw_u(x),
        "lw_w" => covtest::lw_w(x, cfg.lw_regime),
        "s1" => covtest::srivastava_s1(x),
        "s2" => covtest::srivastava_s2(x),
        "qc" => covtest::qc_banded(x, BandSpec::new(cfg.tau)),
        "cj" => covtest::cj_banded(x, BandSpec::new(cfg.tau)),
        other => unreachable!("registry entry '{other}' has no dispatch arm"),
    }
}
