//! Flat `key = value` run configuration.
//!
//! ```text
//! # turbulence run at the desk scale
//! preset = turbulence
//! N = 2^20
//! replicates = 32
//! q = 1, 2, 3, 4, 5, 6
//! scales = 1:349525:2
//! ```
//!
//! A `preset` line applies first wherever it appears, then the tier, then
//! the remaining keys in order. Setting `N` without `epsilon` pins the
//! regularization at two cells.

use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use skewfield::model::turbulence_preset;
use skewfield::stats::{default_lags, log_lags};
use skewfield::{ModelParams, Variant};

use crate::{CliError, Result};

/// Problem size of a validation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Smoke,
    Desk,
    Full,
}

impl Tier {
    pub fn grid(self) -> usize {
        match self {
            Tier::Smoke => 1 << 14,
            Tier::Desk => 1 << 20,
            Tier::Full => 1 << 22,
        }
    }

    pub fn replicates(self) -> usize {
        match self {
            Tier::Smoke => 4,
            Tier::Desk => 32,
            Tier::Full => 64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::Smoke => "smoke",
            Tier::Desk => "desk",
            Tier::Full => "full",
        }
    }
}

impl FromStr for Tier {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "smoke" => Ok(Tier::Smoke),
            "desk" => Ok(Tier::Desk),
            "full" => Ok(Tier::Full),
            other => Err(CliError::Usage(format!("unknown tier `{other}` (smoke, desk, full)"))),
        }
    }
}

/// Which lags the statistics are computed at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleSpec {
    /// One cell up to the cutoff length, two per octave.
    Default,
    /// `min:max:per_octave`, in cells.
    Log { min: usize, max: usize, per_octave: usize },
    /// Explicit lags in cells.
    List(Vec<usize>),
}

impl ScaleSpec {
    pub fn lags(&self, params: &ModelParams) -> Result<Vec<usize>> {
        Ok(match self {
            ScaleSpec::Default => default_lags(params)?,
            ScaleSpec::Log { min, max, per_octave } => log_lags(*min, *max, *per_octave)?,
            ScaleSpec::List(l) => l.clone(),
        })
    }
}

impl FromStr for ScaleSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "default" {
            return Ok(ScaleSpec::Default);
        }
        let bad = || CliError::Usage(format!("scales must be `default`, `min:max:per_octave` or a lag list, got `{s}`"));
        if s.contains(':') {
            let parts: Vec<usize> = s.split(':').map(|p| parse_count(p).ok_or_else(bad)).collect::<Result<_>>()?;
            let [min, max, per_octave] = parts[..] else {
                return Err(bad());
            };
            return Ok(ScaleSpec::Log { min, max, per_octave });
        }
        let list: Vec<usize> = s.split(',').map(|p| parse_count(p).ok_or_else(bad)).collect::<Result<_>>()?;
        Ok(ScaleSpec::List(list))
    }
}

/// Integer, optionally spelled `2^k`.
fn parse_count(s: &str) -> Option<usize> {
    let s = s.trim();
    match s.split_once('^') {
        Some((b, e)) => b.trim().parse::<usize>().ok()?.checked_pow(e.trim().parse().ok()?),
        None => s.parse().ok(),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("not a number list: `{s}`"))))
        .collect()
}

fn parse_lag_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| parse_count(p).ok_or_else(|| CliError::Usage(format!("not a lag list: `{s}`"))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub replicates: usize,
    pub out: PathBuf,
    pub q_list: Vec<f64>,
    pub scales: ScaleSpec,
    /// Lags of the standardized histograms; `None` picks a spread of scales.
    pub pdf_scales: Option<Vec<usize>>,
    pub bins: usize,
    pub clip: f64,
    pub tier: Option<Tier>,
    /// Samples kept in the decimated sample-path export.
    pub path_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: turbulence_preset(),
            replicates: 4,
            out: PathBuf::from("out"),
            q_list: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            scales: ScaleSpec::Default,
            pdf_scales: None,
            bins: 200,
            clip: 10.0,
            tier: None,
            path_points: 4096,
        }
    }
}

/// One `key = value` assignment and the line it came from (0 for flags).
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl Entry {
    pub fn flag(key: &str, value: impl Into<String>) -> Self {
        Entry {
            line: 0,
            key: key.to_string(),
            value: value.into(),
        }
    }
}

pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
            line: i + 1,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        out.push(Entry {
            line: i + 1,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

fn preset(name: &str) -> Result<ModelParams> {
    match name.trim() {
        "turbulence" => Ok(turbulence_preset()),
        other => Err(CliError::Usage(format!("unknown preset `{other}` (turbulence)"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_entries(&parse_entries(text)?)
    }

    pub fn from_entries(entries: &[Entry]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let at = |e: &Entry, err: CliError| CliError::Config {
            line: e.line,
            reason: format!("`{}`: {err}", e.key),
        };
        for e in entries.iter().filter(|e| e.key == "preset") {
            cfg.params = preset(&e.value).map_err(|err| at(e, err))?;
        }
        let mut grid_set = false;
        let mut replicates_set = false;
        let mut epsilon_set = false;
        for e in entries.iter().filter(|e| e.key != "preset") {
            cfg.apply(e, &mut grid_set, &mut replicates_set, &mut epsilon_set).map_err(|err| at(e, err))?;
        }
        if let Some(tier) = cfg.tier {
            if !grid_set {
                cfg.params.n = tier.grid();
                grid_set = true;
            }
            if !replicates_set {
                cfg.replicates = tier.replicates();
            }
        }
        if grid_set && !epsilon_set {
            cfg.params.epsilon = 2.0 / cfg.params.n as f64;
        }
        cfg.params.validate()?;
        if cfg.replicates == 0 {
            return Err(CliError::Usage("replicates must be at least 1".into()));
        }
        Ok(cfg)
    }

    fn apply(&mut self, e: &Entry, grid_set: &mut bool, replicates_set: &mut bool, epsilon_set: &mut bool) -> Result<()> {
        let v = e.value.as_str();
        let num = || v.parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: `{v}`")));
        let count = || parse_count(v).ok_or_else(|| CliError::Usage(format!("not a non-negative integer: `{v}`")));
        let p = &mut self.params;
        match e.key.as_str() {
            "H" => p.h = num()?,
            "gamma" => p.gamma = num()?,
            "Htilde" => p.h_tilde = num()?,
            "L" => p.length = num()?,
            "epsilon" => {
                p.epsilon = num()?;
                *epsilon_set = true;
            }
            "N" => {
                p.n = count()?;
                *grid_set = true;
            }
            "seed" => p.seed = v.parse().map_err(|_| CliError::Usage(format!("not a u64: `{v}`")))?,
            "variant" => p.variant = v.parse::<Variant>()?,
            "replicates" => {
                self.replicates = count()?;
                *replicates_set = true;
            }
            "out" => self.out = PathBuf::from(v),
            "q" => self.q_list = parse_list(v)?,
            "scales" => self.scales = v.parse()?,
            "pdf_scales" => self.pdf_scales = Some(parse_lag_list(v)?),
            "bins" => self.bins = count()?,
            "clip" => self.clip = num()?,
            "tier" => self.tier = Some(v.parse()?),
            "path_points" => self.path_points = count()?,
            other => return Err(CliError::Usage(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Histogram lags: the requested ones, or powers of 16 cells below the
    /// cutoff length.
    pub fn pdf_lags(&self) -> Vec<usize> {
        if let Some(l) = &self.pdf_scales {
            return l.clone();
        }
        let max = ((self.params.length / self.params.dx()) as usize).min(self.params.n / 2);
        (0..).map(|k| 1usize << (4 * k)).take_while(|&l| l <= max).collect()
    }
}
