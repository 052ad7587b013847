//! The `test`, `simulate`, `calibrate` and `list` commands.

use std::path::{Path, PathBuf};

use hdtest::meantest::MeanTestConfig;
use hdtest::registry::{self, Arity, PrecisionChoice, TestConfig, TestInfo};
use hdtest::simharness::{self, CalibrationReport, GroupSpec, InnovationSpec, MeanSpec, Scenario, SigmaSpec};
use hdtest::{pooled_covariance, DataMatrix, GroupedData};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::args::{CalibrateArgs, SimulateArgs, TestArgs, TestOptions};
use crate::ingest::{read_csv, read_matrix, read_vector};
use crate::report::{CalibrationRow, CalibrationSummary, Decision, RowStatus, RunReport, SCHEMA_VERSION};
use crate::CliError;

/// Ratio λ_max/√trΣ² above which a report carries an outside-theory warning.
const OUTSIDE_THEORY_RATIO: f64 = 0.5;

fn lookup(id: &str) -> Result<&'static TestInfo, CliError> {
    registry::lookup(id).map_err(|e| match e {
        hdtest::Error::InvalidParameter(msg) => CliError::Usage(msg),
        other => other.into(),
    })
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {alpha}")))
    }
}

fn test_config(alpha: f64, opts: &TestOptions) -> TestConfig {
    let defaults = TestConfig::default();
    TestConfig {
        mean: MeanTestConfig {
            alpha,
            sd_use_cpn: !opts.no_cpn,
            sd_unequal: opts.sd_unequal,
            rht_lambda: opts.lambda.unwrap_or(defaults.mean.rht_lambda),
            clx_gamma: opts.gamma,
        },
        mu0: None,
        tau: opts.tau.unwrap_or(defaults.tau),
        lw_regime: opts.lw_regime.map_or(defaults.lw_regime, Into::into),
        precision: opts.precision.map_or(defaults.precision, Into::into),
    }
}

/// Options a test cannot run without.
fn require_options(id: &str, opts: &TestOptions) -> Result<(), CliError> {
    if matches!(id, "qc" | "cj") && opts.tau.is_none() {
        return Err(CliError::Usage(format!("{id} needs --tau")));
    }
    if id == "rht1" && opts.lambda.is_none() {
        return Err(CliError::Usage("rht1 needs --lambda".into()));
    }
    Ok(())
}

/// Loads every group named by `--data` and `--group`.
fn load_groups(args: &TestArgs) -> Result<(Vec<String>, Vec<DataMatrix>), CliError> {
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    let mut columns: Option<(Vec<String>, &PathBuf)> = None;
    for path in &args.data {
        let d = read_csv(path, args.group.as_deref())?;
        match &columns {
            None => columns = Some((d.columns.clone(), path)),
            Some((cols, first)) if *cols != d.columns => {
                return Err(CliError::Parse(format!(
                    "{} has columns {:?} but {} has {:?}",
                    path.display(),
                    d.columns,
                    first.display(),
                    cols
                )));
            }
            Some(_) => {}
        }
        let file = path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned());
        for (label, g) in d.labels.into_iter().zip(d.groups) {
            labels.push(if args.group.is_some() && args.data.len() > 1 {
                format!("{file}:{label}")
            } else if args.group.is_some() {
                label
            } else {
                file.clone()
            });
            groups.push(g);
        }
    }
    Ok((labels, groups))
}

/// Power iteration for the largest eigenvalue of a positive semidefinite matrix.
fn largest_eigenvalue(s: &DMatrix<f64>) -> f64 {
    let p = s.nrows();
    let mut v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = s * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= 1e-10 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Sample check of λ_max(Σ) = o(√trΣ²) for the location tests, using the
/// pooled covariance and the unbiased estimate of trΣ² under normality.
fn outside_theory_warning(groups: &[DataMatrix]) -> Option<String> {
    let s = if groups.len() == 1 {
        hdtest::sample_covariance(&groups[0]).ok()?
    } else {
        pooled_covariance(&GroupedData::new(groups.to_vec()).ok()?).ok()?
    };
    let m = groups.iter().map(|g| g.n() - 1).sum::<usize>() as f64;
    let tr = s.trace();
    let tr2 = s.iter().map(|v| v * v).sum::<f64>();
    let tr_sigma2 = m * m / ((m - 1.0) * (m + 2.0)) * (tr2 - tr * tr / m);
    if !(tr_sigma2 > 0.0) {
        return None;
    }
    let ratio = largest_eigenvalue(&s) / tr_sigma2.sqrt();
    (ratio > OUTSIDE_THEORY_RATIO).then(|| {
        format!("outside theory: estimated λ_max/√trΣ² = {ratio:.3} exceeds {OUTSIDE_THEORY_RATIO}; the normal limit may be inaccurate")
    })
}

/// Runs one test on CSV data.
pub fn cmd_test(args: &TestArgs) -> Result<RunReport, CliError> {
    let info = lookup(&args.method)?;
    check_alpha(args.alpha)?;
    require_options(info.id, &args.options)?;
    let (labels, groups) = load_groups(args)?;
    let p = groups[0].p();
    let mut cfg = test_config(args.alpha, &args.options);
    if args.mu0 != "zeros" {
        if info.arity != Arity::One || info.module != "meantest" {
            return Err(CliError::Usage(format!("--mu0 applies to one-sample location tests, not {}", info.id)));
        }
        cfg.mu0 = Some(read_vector(Path::new(&args.mu0))?);
    }
    let omega = match (&args.omega, cfg.precision) {
        (Some(path), PrecisionChoice::Known) => Some(read_matrix(path)?),
        (None, PrecisionChoice::Known) => return Err(CliError::Usage("--precision known needs --omega FILE".into())),
        (Some(_), _) => return Err(CliError::Usage("--omega needs --precision known".into())),
        (None, _) => None,
    };
    let mut warnings = Vec::new();
    let exact_law = matches!(info.id, "hotelling1" | "hotelling2");
    if info.module != "covtest" && !exact_law {
        warnings.extend(outside_theory_warning(&groups));
    }
    let result = registry::run_test(info.id, groups, &cfg, omega.as_ref())?;
    if !info.has_null_law {
        warnings.push(format!("{} is a diagnostic without a null law; no decision is made", info.id));
    }
    let decision = match result.rejects(args.alpha) {
        Some(true) => Decision::Reject,
        Some(false) => Decision::Retain,
        None => Decision::NotApplicable,
    };
    let meta = result.metadata;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        test: meta.test,
        n: meta.sizes.iter().sum(),
        p,
        sizes: meta.sizes,
        groups: labels,
        statistic: result.statistic,
        standardized: result.standardized,
        null_law: result.null_law,
        p_value: result.p_value,
        alpha: args.alpha,
        decision,
        tuning: meta.tuning,
        notes: meta.notes,
        warnings,
    })
}

fn fields<'a>(spec: &'a str, flag: &str, want: usize) -> Result<Vec<&'a str>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != want {
        return Err(CliError::Usage(format!("{flag} '{spec}' needs {} field(s) after the kind", want - 1)));
    }
    Ok(parts)
}

fn number<T: std::str::FromStr>(s: &str, flag: &str) -> Result<T, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("{flag}: '{s}' is not a valid number")))
}

/// Parses identity, scaled:a, ar1:rho, banded:tau:coef and spiked:base:value:count.
pub fn parse_sigma(spec: &str) -> Result<SigmaSpec, CliError> {
    let flag = "--sigma";
    let kind = spec.split(':').next().unwrap_or_default();
    Ok(match kind {
        "identity" => {
            fields(spec, flag, 1)?;
            SigmaSpec::Identity
        }
        "scaled" => SigmaSpec::Scaled { a: number(fields(spec, flag, 2)?[1], flag)? },
        "ar1" => SigmaSpec::Ar1 { rho: number(fields(spec, flag, 2)?[1], flag)? },
        "banded" => {
            let f = fields(spec, flag, 3)?;
            SigmaSpec::Banded { tau: number(f[1], flag)?, coef: number(f[2], flag)? }
        }
        "spiked" => {
            let f = fields(spec, flag, 4)?;
            SigmaSpec::Spiked {
                base: number(f[1], flag)?,
                spike_value: number(f[2], flag)?,
                spike_count: number(f[3], flag)?,
            }
        }
        other => return Err(CliError::Usage(format!("unknown --sigma kind '{other}'"))),
    })
}

/// Parses normal, gamma:shape and rademacher.
pub fn parse_innovation(spec: &str) -> Result<InnovationSpec, CliError> {
    let flag = "--innovation";
    Ok(match spec.split(':').next().unwrap_or_default() {
        "normal" => {
            fields(spec, flag, 1)?;
            InnovationSpec::StandardNormal
        }
        "gamma" => InnovationSpec::StandardizedGamma { shape: number(fields(spec, flag, 2)?[1], flag)? },
        "rademacher" => {
            fields(spec, flag, 1)?;
            InnovationSpec::Rademacher
        }
        other => return Err(CliError::Usage(format!("unknown --innovation kind '{other}'"))),
    })
}

/// Parses dense:norm_sq and sparse:count:value.
pub fn parse_mean(spec: &str) -> Result<MeanSpec, CliError> {
    let flag = "--mu-alt";
    Ok(match spec.split(':').next().unwrap_or_default() {
        "dense" => MeanSpec::Dense { norm_sq: number(fields(spec, flag, 2)?[1], flag)? },
        "sparse" => {
            let f = fields(spec, flag, 3)?;
            MeanSpec::Sparse { count: number(f[1], flag)?, value: number(f[2], flag)? }
        }
        other => return Err(CliError::Usage(format!("unknown --mu-alt kind '{other}'"))),
    })
}

/// Builds the scenario described by inline flags.
fn inline_scenario(args: &SimulateArgs) -> Result<Scenario, CliError> {
    let missing = |f: &str| CliError::Usage(format!("{f} is required without --scenario"));
    let test = args.test.clone().ok_or_else(|| missing("--test"))?;
    let info = lookup(&test)?;
    require_options(info.id, &args.options)?;
    let alpha = args.alpha.unwrap_or(0.05);
    let k = args.n.len();
    let sigmas = match args.sigma.len() {
        0 => vec![SigmaSpec::Identity; k],
        1 => vec![parse_sigma(&args.sigma[0])?; k],
        m if m == k => args.sigma.iter().map(|s| parse_sigma(s)).collect::<Result<_, _>>()?,
        m => return Err(CliError::Usage(format!("{m} --sigma values for {k} groups; give 1 or {k}"))),
    };
    let innovation = args.innovation.as_deref().map(parse_innovation).transpose()?.unwrap_or_default();
    let mut groups: Vec<GroupSpec> =
        args.n.iter().zip(sigmas).map(|(&n, sigma)| GroupSpec { n, sigma, innovation, mean: MeanSpec::Zero }).collect();
    if let (Some(spec), Some(last)) = (&args.mu_alt, groups.last_mut()) {
        last.mean = parse_mean(spec)?;
    }
    Ok(Scenario {
        name: args.name.clone().unwrap_or_else(|| format!("{test}_inline")),
        test,
        config: test_config(alpha, &args.options),
        p: args.p.ok_or_else(|| missing("--p"))?,
        groups,
        alpha,
        reps: args.reps.ok_or_else(|| missing("--reps"))?,
        seed: args.seed.unwrap_or(0),
        expect: Default::default(),
    })
}

/// Reads and validates a scenario file.
pub fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let s: Scenario =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: schema error: {e}", path.display())))?;
    s.validate()?;
    Ok(s)
}

/// Runs one Monte Carlo scenario.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<CalibrationReport, CliError> {
    if args.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let mut s = match &args.scenario {
        Some(path) => {
            let mut s = read_scenario(path)?;
            if args.options != TestOptions::default() {
                s.config = test_config(s.config.mean.alpha, &args.options);
            }
            s
        }
        None => inline_scenario(args)?,
    };
    if let Some(alpha) = args.alpha {
        check_alpha(alpha)?;
        s.alpha = alpha;
        s.config.mean.alpha = alpha;
    }
    s.validate()?;
    Ok(simharness::simulate(&s, args.threads)?)
}

fn module_of(test: &str) -> Option<&'static str> {
    registry::lookup(test).ok().map(|i| i.module)
}

fn matches_filter(s: &Scenario, filter: &str) -> bool {
    s.name.contains(filter) || s.test == filter || module_of(&s.test) == Some(filter)
}

fn calibration_row(file: &Path, s: &Scenario, threads: usize) -> CalibrationRow {
    let mut row = CalibrationRow {
        scenario: s.name.clone(),
        file: file.display().to_string(),
        test: s.test.clone(),
        empirical_size: None,
        band: s.expect.rejection_rate,
        ks_distance: None,
        ks_max: s.expect.ks_max,
        mean_statistic: None,
        status: RowStatus::Error,
        misses: Vec::new(),
        error: None,
    };
    match simharness::simulate(s, threads) {
        Err(e) => row.error = Some(e.to_string()),
        Ok(r) => {
            row.empirical_size = r.empirical_size;
            row.ks_distance = r.ks_distance;
            row.mean_statistic = Some(r.mean_statistic);
            row.misses = s.expect.misses(&r);
            row.status = if !row.misses.is_empty() {
                RowStatus::Fail
            } else if s.expect.is_empty() || r.outside_theory() {
                RowStatus::NotAsserted
            } else {
                RowStatus::Pass
            };
        }
    }
    row
}

/// Runs every scenario file (`*.json`) of a directory, in file-name order.
pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<CalibrationSummary, CliError> {
    if args.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let dir = &args.dir;
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!("{} contains no scenario files", dir.display())));
    }
    let mut selected = Vec::new();
    for f in files {
        let s = read_scenario(&f)?;
        if args.filter.as_deref().is_none_or(|flt| matches_filter(&s, flt)) {
            selected.push((f, s));
        }
    }
    if selected.is_empty() {
        return Err(CliError::Usage(format!(
            "no scenario in {} matches filter '{}'",
            dir.display(),
            args.filter.as_deref().unwrap_or_default()
        )));
    }
    let rows = selected.iter().map(|(f, s)| calibration_row(f, s, args.threads)).collect();
    Ok(CalibrationSummary::from_rows(rows))
}

/// One entry of `hdtest list`.
#[derive(Debug, Clone, Serialize)]
pub struct ListedTest {
    pub id: &'static str,
    pub module: &'static str,
    pub arity: Arity,
    pub min_n: usize,
    pub has_null_law: bool,
    pub description: &'static str,
}

pub fn cmd_list() -> Vec<ListedTest> {
    registry::REGISTRY
        .iter()
        .map(|t| ListedTest {
            id: t.id,
            module: t.module,
            arity: t.arity,
            min_n: t.min_n,
            has_null_law: t.has_null_law,
            description: t.description,
        })
        .collect()
}
