//! `simulate`: one field file per replicate.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use skewfield::io::write_field;
use skewfield::model::{holder_exponent, moment_existence_bound, third_moment_exists};
use skewfield::stats::orders_beyond_bound;
use skewfield::synth::Synthesizer;
use skewfield::ModelParams;

use crate::{RunConfig, Result};

pub fn field_file_name(replicate: u64) -> String {
    format!("field_{replicate:04}.skf")
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub files: Vec<PathBuf>,
    pub seconds: f64,
    pub samples_per_second: f64,
    pub warnings: Vec<String>,
}

/// Regime notes for a parameter set and requested orders; never fatal.
pub fn regime_warnings(params: &ModelParams, q_list: &[f64]) -> Vec<String> {
    let mut out = Vec::new();
    let beyond = orders_beyond_bound(params, q_list);
    if !beyond.is_empty() {
        out.push(format!(
            "orders {beyond:?} reach the moment bound {:.4}; their moments do not exist in the limit",
            moment_existence_bound(params)
        ));
    }
    if !third_moment_exists(params) {
        out.push(format!("gamma^2 = {} >= 1/8: signed third moments do not exist", params.gamma2()));
    }
    if holder_exponent(params).is_none() {
        out.push("no Hölder regularity guarantee for these parameters".into());
    }
    out
}

/// Writes `field_XXXX.skf` for replicates `0..replicates` into `dir`.
pub fn simulate_into(params: &ModelParams, replicates: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let synth = Synthesizer::new(params)?;
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let path = dir.join(field_file_name(r));
            write_field(&path, &synth.realize(r)?)?;
            Ok(path)
        })
        .collect()
}

pub fn simulate(cfg: &RunConfig) -> Result<SimulateReport> {
    let warnings = regime_warnings(&cfg.params, &cfg.q_list);
    let start = Instant::now();
    let files = simulate_into(&cfg.params, cfg.replicates, &cfg.out)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(SimulateReport {
        samples_per_second: (cfg.replicates * cfg.params.n) as f64 / seconds.max(1e-9),
        files,
        seconds,
        warnings,
    })
}
