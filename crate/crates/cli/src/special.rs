//! `special`: tables of the deterministic integrals, one row per result
//! with its error estimate and convergence flag. A failing row records
//! the error and the run continues.

use std::path::Path;

use serde::Serialize;
use skewfield::io::{fmt17, write_json};
use skewfield::special::{
    a_gamma_h, a_h, d_h, f_h_eval, increment_variance_constant, increment_variance_constant_pv, kernel_energy,
    phi_star_phi_deriv, pv_constant, r_gamma_const, third_moment_coefficient, third_moment_equivalent, third_moment_exact,
    variance_ibp, variance_symmetric, Cutoff, QuadResult,
};

use crate::{CliError, Result};

/// Hurst exponents of the reference `f_H` family.
pub const F_H_FAMILY: [f64; 9] = [0.3, 0.35, 0.38, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    FHTable,
    SignScan,
    Constants,
    ThirdMoment,
    PvDeriv,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::FHTable => "f_h_table",
            Task::SignScan => "sign_scan",
            Task::Constants => "constants",
            Task::ThirdMoment => "third_moment",
            Task::PvDeriv => "pv_deriv",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        [Task::FHTable, Task::SignScan, Task::Constants, Task::ThirdMoment, Task::PvDeriv]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown task `{s}` (f_h_table, sign_scan, constants, third_moment, pv_deriv)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub quantity: String,
    pub hurst: f64,
    pub gamma: f64,
    /// Lag `h` or scale `ell`, in units of the cutoff length, when the
    /// quantity is a function.
    pub arg: Option<f64>,
    pub value: Option<f64>,
    pub abs_err: Option<f64>,
    pub subdivisions: Option<usize>,
    pub converged: bool,
    /// Outcome of the row's built-in check, for rows that carry one.
    pub passed: Option<bool>,
    pub error: Option<String>,
}

impl Row {
    fn new(quantity: &str, hurst: f64, gamma: f64, arg: Option<f64>, r: skewfield::Result<QuadResult>) -> Self {
        let mut row = Row {
            quantity: quantity.to_string(),
            hurst,
            gamma,
            arg,
            value: None,
            abs_err: None,
            subdivisions: None,
            converged: false,
            passed: None,
            error: None,
        };
        match r {
            Ok(q) => {
                row.value = Some(q.value);
                row.abs_err = Some(q.abs_err_estimate);
                row.subdivisions = Some(q.subdivisions_used);
                row.converged = q.converged;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    }

    fn check(mut self, ok: impl FnOnce(f64) -> bool) -> Self {
        self.passed = Some(self.value.is_some_and(ok));
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecialReport {
    pub task: &'static str,
    pub cutoff: &'static str,
    pub rows: Vec<Row>,
}

impl SpecialReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some() || r.passed == Some(false)).count()
    }

    pub fn row(&self, quantity: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }
}

/// `count` points from `lo` to `hi`, evenly spaced in `ln`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn f_h_rows(sign_check: bool) -> Vec<Row> {
    let grid = log_grid(1e-2, 1e2, 41);
    let mut rows = Vec::new();
    for &hurst in &F_H_FAMILY {
        for &h in &grid {
            let row = Row::new("f_H", hurst, 0.0, Some(h), f_h_eval(hurst, h, 0.0));
            rows.push(if !sign_check {
                row
            } else if hurst == 0.5 {
                row.check(|v| v.abs() < 1e-10)
            } else {
                row.check(|v| (0.5 - hurst) * v > 0.0)
            });
        }
    }
    rows
}

fn constant_rows(hurst: f64, gamma: f64, cutoff: Cutoff) -> Vec<Row> {
    let g2 = gamma * gamma;
    let mut rows = vec![
        Row::new("a_H", hurst, 0.0, None, a_h(hurst)).check(|v| rel(v, 1.0 / hurst) < 1e-6),
        Row::new("a_gamma_H", hurst, gamma, None, a_gamma_h(hurst, gamma)),
        Row::new("pv_constant", hurst, 0.0, None, pv_constant(hurst)),
        Row::new("d_H", hurst, 0.0, None, d_h(hurst)),
        Row::new("r_gamma", 0.0, gamma, None, r_gamma_const(gamma)),
        Row::new("third_moment_coefficient", hurst, gamma, None, third_moment_coefficient(hurst, gamma)),
        Row::new("kernel_energy", hurst, 0.0, None, kernel_energy(hurst, cutoff)),
    ];
    let c2 = Row::new("C2", hurst, gamma, None, increment_variance_constant(hurst, gamma));
    let c2_pv = Row::new("C2_pv_route", hurst, gamma, None, increment_variance_constant_pv(hurst, gamma));
    let reference = c2.value;
    rows.push(c2);
    rows.push(c2_pv.check(|v| reference.is_some_and(|c| rel(v, c) < 1e-3)));
    let sym = Row::new("variance_symmetric", hurst, gamma, None, variance_symmetric(hurst, gamma, cutoff));
    let ibp = Row::new("variance_ibp", hurst, gamma, None, variance_ibp(hurst, gamma, cutoff));
    let reference = sym.value;
    rows.push(sym);
    rows.push(ibp.check(|v| reference.is_some_and(|s| rel(v, s) < 1e-4)));
    if g2 == 0.0 {
        rows.retain(|r| r.quantity != "r_gamma");
    }
    rows
}

fn third_moment_rows(hurst: f64, gamma: f64, cutoff: Cutoff, ells: &[f64]) -> Vec<Row> {
    let mut rows = Vec::new();
    for &ell in ells {
        rows.push(Row::new("third_moment_exact", hurst, gamma, Some(ell), third_moment_exact(ell, hurst, gamma, cutoff)));
        rows.push(Row::new("third_moment_equivalent", hurst, gamma, Some(ell), third_moment_equivalent(ell, hurst, gamma)));
    }
    rows
}

fn pv_deriv_rows(hurst: f64, cutoff: Cutoff) -> Vec<Row> {
    log_grid(1e-4, 1.0, 25)
        .into_iter()
        .map(|h| Row::new("phi_star_phi_deriv", hurst, 0.0, Some(h), phi_star_phi_deriv(h, hurst, cutoff)))
        .collect()
}

/// Evaluates a task. `hurst` and `gamma` parametrize every task except
/// the `f_H` family scans; lengths are in units of the cutoff length.
pub fn run_task(task: Task, hurst: f64, gamma: f64, cutoff: Cutoff) -> SpecialReport {
    let rows = match task {
        Task::FHTable => f_h_rows(false),
        Task::SignScan => f_h_rows(true),
        Task::Constants => constant_rows(hurst, gamma, cutoff),
        Task::ThirdMoment => third_moment_rows(hurst, gamma, cutoff, &[1e-4, 1e-3, 1e-2, 1e-1]),
        Task::PvDeriv => pv_deriv_rows(hurst, cutoff),
    };
    SpecialReport {
        task: task.name(),
        cutoff: cutoff.name(),
        rows,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

/// Writes `special_<task>.csv` and `special_<task>.json` into `out`.
pub fn write_report(report: &SpecialReport, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join(format!("special_{}.csv", report.task)))?;
    w.write_record(["quantity", "H", "gamma", "arg", "value", "abs_err", "subdivisions", "converged", "passed", "error"])?;
    for r in &report.rows {
        w.write_record([
            r.quantity.clone(),
            fmt17(r.hurst),
            fmt17(r.gamma),
            opt(r.arg),
            opt(r.value),
            opt(r.abs_err),
            r.subdivisions.map(|s| s.to_string()).unwrap_or_default(),
            r.converged.to_string(),
            r.passed.map(|p| p.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    write_json(&out.join(format!("special_{}.json", report.task)), report)?;
    Ok(())
}
