//! `predict`: the analytic scaling spectrum and regime flags.

use std::path::Path;

use serde::Serialize;
use skewfield::io::{write_json, write_table_csv};
use skewfield::model::{holder_exponent, moment_existence_bound, third_moment_exists, xi_spectrum};
use skewfield::ModelParams;

use crate::Result;

pub const NONEXISTENT: &str = "nonexistent moment";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictRow {
    pub q: f64,
    pub xi: f64,
    pub exists: bool,
    pub flag: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictReport {
    pub params: ModelParams,
    /// `None` when every order is bounded.
    pub moment_bound: Option<f64>,
    pub gamma2_below_eighth: bool,
    pub third_moment_exists: bool,
    /// Guaranteed lower bound on the Hölder exponent, when one applies.
    pub holder_lower_bound: Option<f64>,
    pub rows: Vec<PredictRow>,
}

pub fn predict(params: &ModelParams, q_grid: &[f64]) -> PredictReport {
    let bound = moment_existence_bound(params);
    let rows = q_grid
        .iter()
        .map(|&q| {
            let exists = q < bound;
            PredictRow {
                q,
                xi: xi_spectrum(q, params),
                exists,
                flag: (!exists).then_some(NONEXISTENT),
            }
        })
        .collect();
    PredictReport {
        params: *params,
        moment_bound: bound.is_finite().then_some(bound),
        gamma2_below_eighth: params.gamma2() < 0.125,
        third_moment_exists: third_moment_exists(params),
        holder_lower_bound: holder_exponent(params),
        rows,
    }
}

impl PredictReport {
    pub fn to_text(&self) -> String {
        let mut s = String::from("q\txi(q)\tstatus\n");
        for r in &self.rows {
            s.push_str(&format!("{}\t{:.6}\t{}\n", r.q, r.xi, r.flag.unwrap_or("ok")));
        }
        let bound = self.moment_bound.map_or("none".to_string(), |b| format!("{b:.6}"));
        s.push_str(&format!("moment bound: {bound}\n"));
        s.push_str(&format!("gamma^2 < 1/8: {}\n", self.gamma2_below_eighth));
        let holder = self.holder_lower_bound.map_or("no guarantee".to_string(), |h| format!(">= {h:.6}"));
        s.push_str(&format!("Hölder exponent: {holder}\n"));
        s
    }

    /// Writes `predict.csv` (q, xi, exists) and `predict.json`.
    pub fn write(&self, out: &Path) -> Result<()> {
        std::fs::create_dir_all(out)?;
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| vec![r.q, r.xi, f64::from(u8::from(r.exists))]).collect();
        write_table_csv(&out.join("predict.csv"), &["q", "xi", "exists"], &rows)?;
        write_json(&out.join("predict.json"), self)?;
        Ok(())
    }
}
