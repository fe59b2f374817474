//! `analyze`: ensemble statistics, histograms and scaling fits over a set
//! of field files.
//!
//! Outputs in the target directory:
//! `stats.csv`, `stats.json` (sidecar), `pdf_lagNNNNNN.csv` per histogram
//! lag and `path.csv`, a decimated copy of the first replicate. Nothing
//! written depends on absolute paths, clocks or thread count.

use std::path::{Path, PathBuf};

use serde::Serialize;
use skewfield::io::{file_digest, read_field, write_histogram_csv, write_json, write_stats_csv, write_table_csv};
use skewfield::model::{moment_existence_bound, xi_spectrum};
use skewfield::stats::{
    ensemble_average, fit_scaling_exponent, mean_and_se, moment_table, moment_table_samples, orders_beyond_bound,
    pdf_with_sigma, Ensemble, FitRange, Histogram, IncrementStats, Moment,
};
use skewfield::ModelParams;

use crate::config::{RunConfig, ScaleSpec};
use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub q_list: Vec<f64>,
    pub scales: ScaleSpec,
    /// `None` uses [`RunConfig::pdf_lags`] for the inputs' parameters.
    pub pdf_scales: Option<Vec<usize>>,
    pub bins: usize,
    pub clip: f64,
    pub path_points: usize,
}

impl From<&RunConfig> for AnalyzeOptions {
    fn from(c: &RunConfig) -> Self {
        AnalyzeOptions {
            q_list: c.q_list.clone(),
            scales: c.scales.clone(),
            pdf_scales: c.pdf_scales.clone(),
            bins: c.bins,
            clip: c.clip,
            path_points: c.path_points,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub file: String,
    pub rng_stream_id: u64,
    pub params_hash: String,
    pub sha256: String,
}

/// One scaling fit; failed fits keep the reason instead of a value.
#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub moment: Moment,
    pub q: f64,
    pub xi_analytic: f64,
    pub xi_fitted: Option<f64>,
    /// Spread of the per-replicate slopes, over the replicates whose own
    /// fit succeeds (a noisy third moment can change sign in one of them).
    pub xi_fitted_se: Option<f64>,
    pub se_replicates: usize,
    pub residual_rms: Option<f64>,
    pub beyond_moment_bound: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramRecord {
    pub file: String,
    pub lag: usize,
    pub scale: f64,
    pub sigma: f64,
    pub bins: usize,
    pub clip: f64,
    pub underflow: u64,
    pub overflow: u64,
    pub n_total: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathRecord {
    pub file: String,
    pub stride: usize,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub params: ModelParams,
    pub params_hash: String,
    pub replicates: usize,
    pub inputs: Vec<InputRecord>,
    pub q_list: Vec<f64>,
    pub lags: Vec<usize>,
    pub fit_range: FitRange,
    pub moment_bound: f64,
    pub orders_beyond_bound: Vec<f64>,
    pub scaling: Vec<FitRecord>,
    pub histograms: Vec<HistogramRecord>,
    pub path: PathRecord,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub params: ModelParams,
    pub ensemble: Ensemble,
    pub replicates: Vec<IncrementStats>,
    pub histograms: Vec<Histogram>,
    pub sidecar: Sidecar,
}

impl Analysis {
    pub fn fit(&self, moment: Moment) -> Option<&FitRecord> {
        self.sidecar.scaling.iter().find(|f| f.moment == moment)
    }
}

/// `*.skf` files in a directory, sorted by name.
pub fn field_inputs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "skf"))
        .collect();
    files.sort();
    Ok(files)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn fit_record(ensemble: &Ensemble, tables: &[IncrementStats], params: &ModelParams, moment: Moment, range: FitRange) -> FitRecord {
    let q = moment.order();
    let mut rec = FitRecord {
        moment,
        q,
        xi_analytic: xi_spectrum(q, params),
        xi_fitted: None,
        xi_fitted_se: None,
        se_replicates: 0,
        residual_rms: None,
        beyond_moment_bound: q >= moment_existence_bound(params),
        error: None,
    };
    match fit_scaling_exponent(&ensemble.mean, moment, range) {
        Ok(fit) => {
            rec.xi_fitted = Some(fit.slope);
            rec.residual_rms = Some(fit.residual_rms);
            let slopes: Vec<f64> = tables
                .iter()
                .filter_map(|t| fit_scaling_exponent(t, moment, range).ok().map(|f| f.slope))
                .collect();
            rec.se_replicates = slopes.len();
            rec.xi_fitted_se = (slopes.len() > 1).then(|| mean_and_se(&slopes).1);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

pub fn analyze(inputs: &[PathBuf], opts: &AnalyzeOptions, out: &Path) -> Result<Analysis> {
    if inputs.is_empty() {
        return Err(CliError::Usage("no field files to analyze".into()));
    }
    let mut inputs = inputs.to_vec();
    inputs.sort_by_key(|p| file_name(p));

    // Pass 1: moment tables, one file in memory at a time.
    let mut params: Option<ModelParams> = None;
    let mut records = Vec::with_capacity(inputs.len());
    let mut tables = Vec::with_capacity(inputs.len());
    let mut lags = Vec::new();
    let mut pdf_lags = Vec::new();
    for path in &inputs {
        let field = read_field(path)?;
        let name = file_name(path);
        match &params {
            None => {
                lags = opts.scales.lags(&field.params)?;
                pdf_lags = opts.pdf_scales.clone().unwrap_or_else(|| {
                    RunConfig {
                        params: field.params,
                        ..RunConfig::default()
                    }
                    .pdf_lags()
                });
                params = Some(field.params);
            }
            Some(p) if *p != field.params => {
                return Err(CliError::Usage(format!(
                    "{name}: parameters differ from {} (hash {} vs {})",
                    records.first().map(|r: &InputRecord| r.file.as_str()).unwrap_or("?"),
                    field.params.law_hash(),
                    p.law_hash()
                )));
            }
            Some(_) => {}
        }
        if records.iter().any(|r: &InputRecord| r.rng_stream_id == field.rng_stream_id) {
            return Err(CliError::Usage(format!("{name}: replicate stream {} appears twice", field.rng_stream_id)));
        }
        tables.push(moment_table(&field, &lags, &opts.q_list)?);
        records.push(InputRecord {
            file: name,
            rng_stream_id: field.rng_stream_id,
            params_hash: field.params.law_hash(),
            sha256: file_digest(path)?,
        });
    }
    let params = params.expect("at least one input");
    let ensemble = ensemble_average(&tables)?;

    // Pass 2: histograms standardized by the ensemble deviation at each lag.
    let dx = params.dx();
    let mut sigmas = Vec::with_capacity(pdf_lags.len());
    for &lag in &pdf_lags {
        let m2: Vec<f64> = tables
            .iter()
            .zip(&inputs)
            .map(|(t, path)| match t.rows.iter().find(|r| r.lag == lag) {
                Some(r) => Ok(r.m2),
                None => {
                    let f = read_field(path)?;
                    Ok(moment_table_samples(&f.samples, dx, &[lag], &[])?.rows[0].m2)
                }
            })
            .collect::<Result<_>>()?;
        sigmas.push(mean_and_se(&m2).0.sqrt());
    }
    let mut histograms: Vec<Histogram> = Vec::with_capacity(pdf_lags.len());
    let mut first_samples = Vec::new();
    for (i, path) in inputs.iter().enumerate() {
        if pdf_lags.is_empty() && i > 0 {
            break;
        }
        let field = read_field(path)?;
        for (j, (&lag, &sigma)) in pdf_lags.iter().zip(&sigmas).enumerate() {
            let h = pdf_with_sigma(&field.samples, dx, lag, sigma, opts.bins, opts.clip)?;
            match histograms.get_mut(j) {
                Some(acc) => acc.merge(&h)?,
                None => histograms.push(h),
            }
        }
        if i == 0 {
            first_samples = field.samples;
        }
    }

    std::fs::create_dir_all(out)?;
    write_stats_csv(&out.join("stats.csv"), &ensemble)?;
    let mut hist_records = Vec::with_capacity(histograms.len());
    for h in &histograms {
        let file = format!("pdf_lag{:06}.csv", h.lag);
        write_histogram_csv(&out.join(&file), h)?;
        hist_records.push(HistogramRecord {
            file,
            lag: h.lag,
            scale: h.scale,
            sigma: h.sigma,
            bins: h.counts.len(),
            clip: opts.clip,
            underflow: h.underflow,
            overflow: h.overflow,
            n_total: h.n_total,
        });
    }
    let stride = (params.n / opts.path_points.max(1)).max(1);
    let path_rows: Vec<Vec<f64>> = first_samples
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(i, u)| vec![i as f64 * dx, *u])
        .collect();
    write_table_csv(&out.join("path.csv"), &["x", "u"], &path_rows)?;

    let range = FitRange::standard(&params);
    let mut moments: Vec<Moment> = opts.q_list.iter().map(|&q| Moment::Absolute(q)).collect();
    moments.push(Moment::SignedThird);
    let scaling = moments
        .into_iter()
        .map(|m| fit_record(&ensemble, &tables, &params, m, range))
        .collect();
    let sidecar = Sidecar {
        params,
        params_hash: params.law_hash(),
        replicates: tables.len(),
        inputs: records,
        q_list: opts.q_list.clone(),
        lags,
        fit_range: range,
        moment_bound: moment_existence_bound(&params),
        orders_beyond_bound: orders_beyond_bound(&params, &opts.q_list),
        scaling,
        histograms: hist_records,
        path: PathRecord {
            file: "path.csv".into(),
            stride,
            points: path_rows.len(),
        },
    };
    write_json(&out.join("stats.json"), &sidecar)?;
    Ok(Analysis {
        params,
        ensemble,
        replicates: tables,
        histograms,
        sidecar,
    })
}
