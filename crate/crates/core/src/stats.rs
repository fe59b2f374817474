//! Increment statistics on periodic realizations: signed and absolute
//! structure functions, skewness and flatness, standardized histograms,
//! ensemble averages and log-log scaling fits.
//!
//! Spatial sums are exact (correctly rounded), so every table is invariant
//! under cyclic shifts of the field and independent of thread scheduling.

use accurate::sum::OnlineExactSum;
use accurate::traits::SumAccumulator;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{moment_existence_bound, xi_spectrum, ModelParams};
use crate::synth::FieldRealization;

/// Periodic differences `u[(i + lag) mod n] - u[i]`.
pub fn increments(samples: &[f64], lag: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    if lag == 0 || lag >= n {
        return Err(Error::LagOutOfRange { lag, n });
    }
    let mut out = Vec::with_capacity(n);
    out.extend(samples[lag..].iter().zip(samples).map(|(b, a)| b - a));
    out.extend(samples[..lag].iter().zip(&samples[n - lag..]).map(|(b, a)| b - a));
    Ok(out)
}

/// Moments of the increments at one lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub lag: usize,
    pub scale: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    /// `mean |delta u|^q`, one per entry of the table's `q_list`.
    pub abs_moments: Vec<f64>,
    pub count: u64,
}

impl ScaleRow {
    pub fn skewness(&self) -> f64 {
        self.m3 / self.m2.powf(1.5)
    }

    pub fn flatness(&self) -> f64 {
        self.m4 / (self.m2 * self.m2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementStats {
    pub dx: f64,
    pub q_list: Vec<f64>,
    pub rows: Vec<ScaleRow>,
}

impl IncrementStats {
    pub fn scales(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.scale).collect()
    }

    fn q_index(&self, q: f64) -> Option<usize> {
        self.q_list.iter().position(|&p| (p - q).abs() <= 1e-12 * q.abs().max(1.0))
    }

    /// `mean |delta u|^q` per row, from the table or from the signed
    /// moments when `q` is 2 or 4.
    pub fn absolute_moment(&self, q: f64) -> Result<Vec<f64>> {
        if let Some(i) = self.q_index(q) {
            return Ok(self.rows.iter().map(|r| r.abs_moments[i]).collect());
        }
        if q == 2.0 {
            return Ok(self.rows.iter().map(|r| r.m2).collect());
        }
        if q == 4.0 {
            return Ok(self.rows.iter().map(|r| r.m4).collect());
        }
        Err(Error::Estimator(format!("order q = {q} is not in the table")))
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.q_list == other.q_list
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.lag == b.lag)
    }
}

fn check_lags(lags: &[usize], n: usize) -> Result<()> {
    if lags.is_empty() {
        return Err(Error::Estimator("no scales requested".into()));
    }
    if lags.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Estimator("scales must be strictly increasing".into()));
    }
    for &lag in lags {
        if lag == 0 || lag >= n {
            return Err(Error::LagOutOfRange { lag, n });
        }
    }
    Ok(())
}

fn check_orders(q_list: &[f64]) -> Result<()> {
    if let Some(q) = q_list.iter().find(|q| !(q.is_finite() && **q > 0.0)) {
        return Err(Error::param("q", format!("orders must be positive, got {q}")));
    }
    Ok(())
}

#[inline]
fn abs_power(d: f64, d2: f64, q: f64) -> f64 {
    if q == 2.0 {
        d2
    } else if q == 1.0 {
        d.abs()
    } else if q.fract() == 0.0 && q <= 16.0 {
        d.abs().powi(q as i32)
    } else {
        d.abs().powf(q)
    }
}

/// Orders whose absolute moment coincides with a signed one.
fn shared_order(q: f64) -> Option<usize> {
    match q {
        2.0 => Some(1),
        4.0 => Some(3),
        _ => None,
    }
}

fn scale_row(samples: &[f64], dx: f64, lag: usize, q_list: &[f64]) -> ScaleRow {
    let n = samples.len();
    let own: Vec<f64> = q_list.iter().copied().filter(|&q| shared_order(q).is_none()).collect();
    let mut signed: [OnlineExactSum<f64>; 4] = std::array::from_fn(|_| OnlineExactSum::zero());
    let mut abs: Vec<OnlineExactSum<f64>> = own.iter().map(|_| OnlineExactSum::zero()).collect();
    let mut take = |d: f64| {
        let d2 = d * d;
        signed[0] += d;
        signed[1] += d2;
        signed[2] += d2 * d;
        signed[3] += d2 * d2;
        for (acc, &q) in abs.iter_mut().zip(&own) {
            *acc += abs_power(d, d2, q);
        }
    };
    samples[lag..].iter().zip(samples).for_each(|(b, a)| take(b - a));
    samples[..lag].iter().zip(&samples[n - lag..]).for_each(|(b, a)| take(b - a));
    let inv = 1.0 / n as f64;
    let m: Vec<f64> = signed.into_iter().map(|s| s.sum() * inv).collect();
    let mut own_values = abs.into_iter().map(|a| a.sum() * inv);
    let abs_moments = q_list
        .iter()
        .map(|&q| match shared_order(q) {
            Some(k) => m[k],
            None => own_values.next().expect("one accumulator per unshared order"),
        })
        .collect();
    ScaleRow {
        lag,
        scale: lag as f64 * dx,
        m1: m[0],
        m2: m[1],
        m3: m[2],
        m4: m[3],
        abs_moments,
        count: n as u64,
    }
}

/// Spatial averages of `delta u^p` (p = 1..4) and `|delta u|^q` over the
/// periodic grid, one row per lag.
pub fn moment_table_samples(samples: &[f64], dx: f64, lags: &[usize], q_list: &[f64]) -> Result<IncrementStats> {
    check_lags(lags, samples.len())?;
    check_orders(q_list)?;
    let rows = lags.par_iter().map(|&lag| scale_row(samples, dx, lag, q_list)).collect();
    Ok(IncrementStats {
        dx,
        q_list: q_list.to_vec(),
        rows,
    })
}

pub fn moment_table(field: &FieldRealization, lags: &[usize], q_list: &[f64]) -> Result<IncrementStats> {
    moment_table_samples(&field.samples, field.params.dx(), lags, q_list)
}

/// Orders in `q_list` at or beyond the moment-existence threshold.
pub fn orders_beyond_bound(params: &ModelParams, q_list: &[f64]) -> Vec<f64> {
    let bound = moment_existence_bound(params);
    q_list.iter().copied().filter(|&q| q >= bound).collect()
}

/// Lags `round(min_lag 2^(j / per_octave))` up to `max_lag`, deduplicated.
pub fn log_lags(min_lag: usize, max_lag: usize, per_octave: usize) -> Result<Vec<usize>> {
    if min_lag == 0 || max_lag < min_lag || per_octave == 0 {
        return Err(Error::param(
            "scales",
            format!("need 1 <= min <= max and a positive density, got {min_lag}..{max_lag}/{per_octave}"),
        ));
    }
    let mut lags = Vec::new();
    for j in 0.. {
        let lag = (min_lag as f64 * 2f64.powf(j as f64 / per_octave as f64)).round() as usize;
        if lag > max_lag {
            break;
        }
        if lags.last() != Some(&lag) {
            lags.push(lag);
        }
    }
    Ok(lags)
}

/// Default analysis lags: one cell up to the cutoff length, two per octave.
pub fn default_lags(params: &ModelParams) -> Result<Vec<usize>> {
    let max = ((params.length / params.dx()).floor() as usize).min(params.n / 2);
    log_lags(1, max.max(1), 2)
}

/// Histogram of standardized increments on `[-clip, clip]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lag: usize,
    pub scale: f64,
    /// Standard deviation used to standardize the increments.
    pub sigma: f64,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Increments below `-clip` and above `clip`.
    pub underflow: u64,
    pub overflow: u64,
    pub n_total: u64,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Probability density per bin, normalized by the total count.
    pub fn density(&self) -> Vec<f64> {
        let norm = 1.0 / (self.n_total as f64 * self.bin_width());
        self.counts.iter().map(|&c| c as f64 * norm).collect()
    }

    /// Adds the counts of a histogram with identical binning.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges || self.lag != other.lag {
            return Err(Error::Estimator("histograms have different binning".into()));
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self.n_total += other.n_total;
        Ok(())
    }
}

/// Histogram of `delta u / sigma` at one lag.
pub fn pdf_with_sigma(samples: &[f64], dx: f64, lag: usize, sigma: f64, bins: usize, clip: f64) -> Result<Histogram> {
    if bins == 0 || !(clip > 0.0 && clip.is_finite()) {
        return Err(Error::param("bins", "need at least one bin and a positive clip"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Estimator(format!("degenerate scale: standard deviation {sigma}")));
    }
    let inc = increments(samples, lag)?;
    let width = 2.0 * clip / bins as f64;
    let mut counts = vec![0u64; bins];
    let (mut underflow, mut overflow) = (0, 0);
    for d in inc {
        let z = d / sigma;
        if z < -clip {
            underflow += 1;
        } else if z > clip {
            overflow += 1;
        } else {
            let i = (((z + clip) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
    }
    Ok(Histogram {
        lag,
        scale: lag as f64 * dx,
        sigma,
        edges: (0..=bins).map(|i| -clip + i as f64 * width).collect(),
        counts,
        underflow,
        overflow,
        n_total: samples.len() as u64,
    })
}

/// Histogram of increments standardized by their own second moment.
pub fn standardized_pdf(field: &FieldRealization, lag: usize, bins: usize, clip: f64) -> Result<Histogram> {
    let dx = field.params.dx();
    let row = scale_row(&field.samples, dx, lag, &[]);
    check_lags(&[lag], field.len())?;
    pdf_with_sigma(&field.samples, dx, lag, row.m2.sqrt(), bins, clip)
}

/// Standard errors matching the cells of a [`ScaleRow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowErrors {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub skewness: f64,
    pub flatness: f64,
    pub abs_moments: Vec<f64>,
}

/// Replicate means with per-cell standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub mean: IncrementStats,
    pub errors: Vec<RowErrors>,
    pub replicates: usize,
}

/// Mean and standard error of the mean (zero for a single value).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

pub fn ensemble_average(list: &[IncrementStats]) -> Result<Ensemble> {
    let first = list.first().ok_or_else(|| Error::Estimator("empty ensemble".into()))?;
    if list.iter().any(|s| !first.same_layout(s)) {
        return Err(Error::Estimator("replicate tables have different scales or orders".into()));
    }
    let cell = |f: &dyn Fn(&ScaleRow) -> f64, row: usize| -> (f64, f64) {
        let v: Vec<f64> = list.iter().map(|s| f(&s.rows[row])).collect();
        mean_and_se(&v)
    };
    let mut rows = Vec::with_capacity(first.rows.len());
    let mut errors = Vec::with_capacity(first.rows.len());
    for (i, r) in first.rows.iter().enumerate() {
        let (m1, e1) = cell(&|r| r.m1, i);
        let (m2, e2) = cell(&|r| r.m2, i);
        let (m3, e3) = cell(&|r| r.m3, i);
        let (m4, e4) = cell(&|r| r.m4, i);
        let (_, es) = cell(&|r| r.skewness(), i);
        let (_, ef) = cell(&|r| r.flatness(), i);
        let (abs, abs_err): (Vec<f64>, Vec<f64>) = (0..first.q_list.len()).map(|j| cell(&|r| r.abs_moments[j], i)).unzip();
        rows.push(ScaleRow {
            lag: r.lag,
            scale: r.scale,
            m1,
            m2,
            m3,
            m4,
            abs_moments: abs,
            count: list.iter().map(|s| s.rows[i].count).sum(),
        });
        errors.push(RowErrors {
            m1: e1,
            m2: e2,
            m3: e3,
            m4: e4,
            skewness: es,
            flatness: ef,
            abs_moments: abs_err,
        });
    }
    Ok(Ensemble {
        mean: IncrementStats {
            dx: first.dx,
            q_list: first.q_list.clone(),
            rows,
        },
        errors,
        replicates: list.len(),
    })
}

/// Which structure function a scaling fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    /// `mean |delta u|^q`.
    Absolute(f64),
    /// `|mean delta u^3|`, which must keep one sign across the range.
    SignedThird,
}

impl Moment {
    pub fn order(self) -> f64 {
        match self {
            Moment::Absolute(q) => q,
            Moment::SignedThird => 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub points: usize,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    if let Some((a, b)) = x.iter().zip(y).find(|(a, b)| !(**a > 0.0 && **b > 0.0)) {
        return Err(Error::Fit(format!("non-positive value ({a}, {b}) in a log-log fit")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(PowerFit {
        slope,
        intercept,
        residual_rms: (ss / n).sqrt(),
        points: lx.len(),
    })
}

/// Scale window `[min, max]` for scaling fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRange {
    pub min: f64,
    pub max: f64,
}

impl FitRange {
    /// `[8 epsilon, L / 8]`.
    pub fn standard(params: &ModelParams) -> Self {
        FitRange {
            min: 8.0 * params.epsilon,
            max: params.length / 8.0,
        }
    }

    /// Within `[4 epsilon, L / 4]`, where power laws are expected.
    pub fn check(&self, params: &ModelParams) -> Result<()> {
        let tol = 1e-12;
        if self.min < 4.0 * params.epsilon * (1.0 - tol) || self.max > params.length / 4.0 * (1.0 + tol) || self.min >= self.max {
            return Err(Error::param(
                "fit_range",
                format!("[{}, {}] must lie inside [4 epsilon, L/4]", self.min, self.max),
            ));
        }
        Ok(())
    }

    fn contains(&self, scale: f64) -> bool {
        let tol = 1e-12 * scale;
        scale >= self.min - tol && scale <= self.max + tol
    }
}

/// Log-log slope of a structure function over a scale window.
pub fn fit_scaling_exponent(stats: &IncrementStats, moment: Moment, range: FitRange) -> Result<PowerFit> {
    let values = match moment {
        Moment::Absolute(q) => stats.absolute_moment(q)?,
        Moment::SignedThird => stats.rows.iter().map(|r| r.m3).collect(),
    };
    let (x, mut y): (Vec<f64>, Vec<f64>) = stats
        .rows
        .iter()
        .zip(values)
        .filter(|(r, _)| range.contains(r.scale))
        .map(|(r, v)| (r.scale, v))
        .unzip();
    if x.len() < 5 {
        return Err(Error::Fit(format!("{} scales in range, need at least 5", x.len())));
    }
    if moment == Moment::SignedThird {
        if y.iter().all(|v| *v < 0.0) {
            y.iter_mut().for_each(|v| *v = -*v);
        } else if !y.iter().all(|v| *v > 0.0) {
            return Err(Error::Fit("third moment changes sign inside the fit range".into()));
        }
    }
    fit_power_law(&x, &y)
}

/// Slopes fitted replicate by replicate.
pub fn fit_each(list: &[IncrementStats], moment: Moment, range: FitRange) -> Result<Vec<f64>> {
    list.iter().map(|s| fit_scaling_exponent(s, moment, range).map(|f| f.slope)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub q: f64,
    pub moment: Moment,
    pub xi_analytic: f64,
    pub xi_fitted: f64,
    /// Standard error from the spread of per-replicate slopes.
    pub xi_fitted_se: f64,
    pub fit_range: FitRange,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub entries: Vec<ScalingEntry>,
}

impl ScalingReport {
    pub fn entry(&self, moment: Moment) -> Option<&ScalingEntry> {
        self.entries.iter().find(|e| e.moment == moment)
    }
}

/// Fitted exponents of the ensemble mean against the analytic spectrum.
pub fn scaling_report(
    ensemble: &Ensemble,
    replicates: &[IncrementStats],
    params: &ModelParams,
    moments: &[Moment],
    range: FitRange,
) -> Result<ScalingReport> {
    range.check(params)?;
    let entries = moments
        .iter()
        .map(|&m| {
            let fit = fit_scaling_exponent(&ensemble.mean, m, range)?;
            let se = if replicates.len() > 1 {
                mean_and_se(&fit_each(replicates, m, range)?).1
            } else {
                0.0
            };
            Ok(ScalingEntry {
                q: m.order(),
                moment: m,
                xi_analytic: xi_spectrum(m.order(), params),
                xi_fitted: fit.slope,
                xi_fitted_se: se,
                fit_range: range,
                residual_rms: fit.residual_rms,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScalingReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    #[test]
    fn increments_contract() {
        let u = vec![3.5; 16];
        assert!(increments(&u, 5).unwrap().iter().all(|d| *d == 0.0));
        assert!(increments(&u, 16).is_err());
        assert!(increments(&u, 0).is_err());
        let v = noise(64, 1);
        let d = increments(&v, 7).unwrap();
        assert_eq!(d[60], v[(60 + 7) % 64] - v[60]);
        let table = moment_table_samples(&v, 1.0 / 64.0, &[7], &[]).unwrap();
        assert!(table.rows[0].m1.abs() < 1e-15);
    }

    #[test]
    fn table_layout() {
        let v = noise(256, 2);
        let t = moment_table_samples(&v, 1.0 / 256.0, &[1, 2, 8], &[1.0, 2.0, 2.5]).unwrap();
        assert_eq!(t.scales(), vec![1.0 / 256.0, 2.0 / 256.0, 8.0 / 256.0]);
        for r in &t.rows {
            assert_eq!(r.abs_moments[1], r.m2);
            assert!(r.abs_moments[2] > 0.0);
            assert!(r.flatness() >= 1.0);
            assert!(r.m2 > 0.0);
        }
        assert!(moment_table_samples(&v, 1.0, &[], &[]).is_err());
        assert!(moment_table_samples(&v, 1.0, &[4, 2], &[]).is_err());
        assert!(moment_table_samples(&v, 1.0, &[2], &[-1.0]).is_err());
    }

    #[test]
    fn exact_power_law_fit() {
        let x: Vec<f64> = (0..8).map(|i| 2f64.powi(-i)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(0.7)).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert_relative_eq!(f.slope, 0.7, epsilon = 1e-13);
        assert!(f.residual_rms < 1e-13);
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, -1.0]).is_err());
    }

    #[test]
    fn fit_needs_five_scales_and_one_sign() {
        let rows = (1..=6)
            .map(|k| ScaleRow {
                lag: k,
                scale: k as f64,
                m1: 0.0,
                m2: (k as f64).powf(0.7),
                m3: if k == 3 { 1.0 } else { -(k as f64) },
                m4: 1.0,
                abs_moments: vec![],
                count: 1,
            })
            .collect();
        let t = IncrementStats {
            dx: 1.0,
            q_list: vec![],
            rows,
        };
        let all = FitRange { min: 1.0, max: 6.0 };
        assert_relative_eq!(fit_scaling_exponent(&t, Moment::Absolute(2.0), all).unwrap().slope, 0.7, epsilon = 1e-12);
        assert!(fit_scaling_exponent(&t, Moment::Absolute(2.0), FitRange { min: 1.0, max: 4.0 }).is_err());
        assert!(fit_scaling_exponent(&t, Moment::SignedThird, all).is_err());
        let upper = FitRange { min: 4.0, max: 6.0 };
        assert!(fit_scaling_exponent(&t, Moment::Absolute(3.0), upper).is_err());
    }

    #[test]
    fn ensemble_identities() {
        let t = moment_table_samples(&noise(128, 3), 1.0 / 128.0, &[1, 3], &[1.5]).unwrap();
        let one = ensemble_average(std::slice::from_ref(&t)).unwrap();
        assert_eq!(one.mean, t);
        assert!(one.errors.iter().all(|e| e.m2 == 0.0));
        let three = ensemble_average(&[t.clone(), t.clone(), t.clone()]).unwrap();
        for (a, b) in three.mean.rows.iter().zip(&t.rows) {
            assert_relative_eq!(a.m2, b.m2, max_relative = 1e-15);
        }
        assert!(three.errors.iter().all(|e| e.m3.abs() < 1e-15 && e.skewness.abs() < 1e-15));
        let other = moment_table_samples(&noise(128, 3), 1.0 / 128.0, &[1, 4], &[1.5]).unwrap();
        assert!(ensemble_average(&[t, other]).is_err());
        assert!(ensemble_average(&[]).is_err());
    }

    #[test]
    fn standard_error_shrinks_like_inverse_root() {
        // Tables of i.i.d. noise: the error of the mean m2 over K replicates.
        let tables: Vec<IncrementStats> = (0..256)
            .map(|s| moment_table_samples(&noise(64, 100 + s), 1.0 / 64.0, &[1], &[]).unwrap())
            .collect();
        let se = |k: usize| ensemble_average(&tables[..k]).unwrap().errors[0].m2;
        let ratio = se(16) / se(256);
        assert!((ratio - 4.0).abs() < 1.2, "{ratio}");
    }

    #[test]
    fn histogram_bins() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let h = pdf_with_sigma(&v, 0.01, 1, 1.0, 4, 2.0).unwrap();
        // All increments are 1 except the wrap-around one (-99).
        assert_eq!(h.counts, vec![0, 0, 0, 99]);
        assert_eq!(h.underflow, 1);
        assert_eq!(h.overflow, 0);
        assert_relative_eq!(h.density().iter().sum::<f64>() * h.bin_width(), 0.99, epsilon = 1e-12);
        assert!(pdf_with_sigma(&v, 0.01, 1, 0.0, 4, 2.0).is_err());
        let mut g = h.clone();
        g.merge(&h).unwrap();
        assert_eq!(g.n_total, 200);
    }

    #[test]
    fn lag_grids() {
        assert_eq!(log_lags(1, 8, 1).unwrap(), vec![1, 2, 4, 8]);
        let l = log_lags(1, 1000, 4).unwrap();
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        assert!(log_lags(0, 8, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cyclic_shift_invariance(seed in 0u64..1000, shift in 1usize..255) {
            let v = noise(256, seed);
            let mut w = v.clone();
            w.rotate_left(shift);
            let q = [0.5, 1.0, 3.0, 2.7];
            let a = moment_table_samples(&v, 1.0 / 256.0, &[1, 5, 17, 100], &q).unwrap();
            let b = moment_table_samples(&w, 1.0 / 256.0, &[1, 5, 17, 100], &q).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn flatness_at_least_one(seed in 0u64..1000, lag in 1usize..63) {
            let t = moment_table_samples(&noise(64, seed), 1.0, &[lag], &[]).unwrap();
            prop_assert!(t.rows[0].flatness() >= 1.0 - 1e-12);
        }
    }
}
