//! `validate`: simulate, analyze, compare with the analytic spectrum and
//! run the quadrature cross-checks, producing a JSON verdict.

use std::time::Instant;

use serde::Serialize;
use skewfield::io::write_json;
use skewfield::special::{a_h, increment_variance_constant, increment_variance_constant_pv, variance_ibp, variance_symmetric, Cutoff};
use skewfield::stats::Moment;
use skewfield::Variant;

use crate::analyze::{analyze, AnalyzeOptions};
use crate::config::{RunConfig, Tier};
use crate::simulate::{regime_warnings, simulate_into};
use crate::{CliError, Result};

/// Soft wall-time budget of the smoke tier, in seconds.
pub const SMOKE_BUDGET: f64 = 60.0;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub stage: &'static str,
    pub passed: bool,
    pub value: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Check {
    fn within(name: &str, stage: &'static str, value: f64, target: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            stage,
            passed: (value - target).abs() <= tolerance,
            value: Some(value),
            target: Some(target),
            tolerance: Some(tolerance),
            detail: format!("|{value:.6} - {target:.6}| <= {tolerance}"),
        }
    }

    fn relative(name: &str, stage: &'static str, value: f64, target: f64, tolerance: f64) -> Self {
        let r = (value - target).abs() / target.abs();
        Check {
            name: name.into(),
            stage,
            passed: r <= tolerance,
            value: Some(value),
            target: Some(target),
            tolerance: Some(tolerance),
            detail: format!("relative difference {r:.3e} (limit {tolerance:.0e})"),
        }
    }

    fn failed(name: &str, stage: &'static str, err: &CliError) -> Self {
        Check {
            name: name.into(),
            stage,
            passed: false,
            value: None,
            target: None,
            tolerance: None,
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub tier: Tier,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

/// Tolerance on the fitted second-order exponent; the smoke grid spans
/// too few octaves for the desk tolerance.
pub fn xi2_tolerance(tier: Tier) -> f64 {
    match tier {
        Tier::Smoke => 0.1,
        Tier::Desk | Tier::Full => 0.05,
    }
}

fn quadrature_checks(cfg: &RunConfig) -> Vec<Check> {
    let stage = "special";
    let mut out = Vec::new();
    for hurst in [0.2, 1.0 / 3.0, 0.7] {
        let name = format!("a_H = 1/H at H = {hurst:.4}");
        out.push(match a_h(hurst) {
            Ok(q) => Check::relative(&name, stage, q.value, 1.0 / hurst, 1e-6),
            Err(e) => Check::failed(&name, stage, &e.into()),
        });
    }
    let p = &cfg.params;
    if p.variant == Variant::Skewed && p.gamma > 0.0 {
        let c = Cutoff::TruncatedGaussian;
        out.push(match (variance_symmetric(p.h, p.gamma, c), variance_ibp(p.h, p.gamma, c)) {
            (Ok(s), Ok(i)) => Check::relative("variance routes agree", stage, i.value, s.value, 1e-4),
            (Err(e), _) | (_, Err(e)) => Check::failed("variance routes agree", stage, &e.into()),
        });
        out.push(match (increment_variance_constant(p.h, p.gamma), increment_variance_constant_pv(p.h, p.gamma)) {
            (Ok(a), Ok(b)) => Check::relative("C2 routes agree", stage, b.value, a.value, 1e-3),
            (Err(e), _) | (_, Err(e)) => Check::failed("C2 routes agree", stage, &e.into()),
        });
    }
    out
}

/// Runs the pipeline for `cfg` at `tier`; `N` and the replicate count come
/// from the tier. Writes `fields/`, the analysis outputs and
/// `verdict.json` under `cfg.out`.
pub fn validate(cfg: &RunConfig, tier: Tier) -> Result<Verdict> {
    let start = Instant::now();
    let params = cfg.params.with_grid(tier.grid());
    params.validate()?;
    let run = RunConfig {
        params,
        replicates: tier.replicates(),
        tier: Some(tier),
        ..cfg.clone()
    };
    let mut checks = Vec::new();
    let mut warnings = regime_warnings(&params, &run.q_list);

    let fields_dir = run.out.join("fields");
    match simulate_into(&params, run.replicates, &fields_dir).map_err(|e| e.in_stage("simulate")) {
        Err(e) => checks.push(Check::failed("simulate", "simulate", &e)),
        Ok(files) => match analyze(&files, &AnalyzeOptions::from(&run), &run.out).map_err(|e| e.in_stage("analyze")) {
            Err(e) => checks.push(Check::failed("analyze", "analyze", &e)),
            Ok(analysis) => {
                let stage = "compare";
                let hash = params.law_hash();
                let mismatched: Vec<&str> = analysis
                    .sidecar
                    .inputs
                    .iter()
                    .filter(|i| i.params_hash != hash)
                    .map(|i| i.file.as_str())
                    .collect();
                checks.push(Check {
                    name: "params hash matches every field file".into(),
                    stage,
                    passed: mismatched.is_empty() && analysis.sidecar.params_hash == hash,
                    value: None,
                    target: None,
                    tolerance: None,
                    detail: if mismatched.is_empty() {
                        hash
                    } else {
                        format!("mismatched: {mismatched:?}")
                    },
                });
                match analysis.fit(Moment::Absolute(2.0)) {
                    Some(f) => match f.xi_fitted {
                        Some(x) => checks.push(Check::within("xi(2) fit", stage, x, f.xi_analytic, xi2_tolerance(tier))),
                        None => checks.push(Check::failed(
                            "xi(2) fit",
                            stage,
                            &CliError::Usage(f.error.clone().unwrap_or_default()),
                        )),
                    },
                    None => checks.push(Check::failed("xi(2) fit", stage, &CliError::Usage("q = 2 not analyzed".into()))),
                }
            }
        },
    }
    checks.extend(quadrature_checks(&run));

    let seconds = start.elapsed().as_secs_f64();
    if tier == Tier::Smoke && seconds > SMOKE_BUDGET {
        warnings.push(format!("smoke tier took {seconds:.1} s, over the {SMOKE_BUDGET} s budget"));
    }
    let verdict = Verdict {
        tier,
        passed: checks.iter().all(|c| c.passed),
        seconds,
        checks,
        warnings,
    };
    std::fs::create_dir_all(&run.out)?;
    write_json(&run.out.join("verdict.json"), &verdict)?;
    Ok(verdict)
}
