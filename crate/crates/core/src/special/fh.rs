//! The function `f_H` governing the small-scale third moment, its limiting
//! constants and its singular behaviour at `h = 1`.
//!
//! With `a = H - 1/2` and `P(x) = |x + 1/2|^a - |x - 1/2|^a`,
//! `f_H(h) = ∫ P(x) P(x + h)^2 dx`.

use serde::Serialize;

use super::powers::{abs_pow, pow_diff, pow_second_diff};
use super::quad::{adaptive_integrate_nodes, Node, QuadResult, QuadratureConfig, SingularPoint, TailExtrapolation};
use super::{check_hurst, kernel_exponent, sing};
use crate::error::{Error, Result};

const LOCAL_CUT: f64 = 4.0;

fn base_cfg() -> QuadratureConfig {
    QuadratureConfig::default().tolerances(1e-15, 1e-11)
}

/// `P(x + shift)` at a quadrature node, where
/// `P(x) = |x + 1/2|_eps^a - |x - 1/2|_eps^a`, with distances to the points
/// `±1/2 - shift` taken exactly.
#[inline]
pub(crate) fn p_node(n: Node, shift: f64, a: f64, eps: f64) -> f64 {
    let z = n.from(-shift);
    if z.abs() > 2.0 {
        pow_diff(z, 0.5, a, eps)
    } else {
        abs_pow(n.from(-0.5 - shift), a, eps) - abs_pow(n.from(0.5 - shift), a, eps)
    }
}

/// `|x - 1|^a - |x + 1|^a` and `|x - 1|^a + |x + 1|^a - 2 |x|^a` at a node.
#[inline]
fn unit_differences(n: Node, a: f64) -> (f64, f64) {
    let x = n.x;
    if x.abs() > 2.0 {
        (-pow_diff(x, 1.0, a, 0.0), pow_second_diff(x, 1.0, a, 0.0))
    } else {
        let (m, p, c) = (abs_pow(n.from(1.0), a, 0.0), abs_pow(n.from(-1.0), a, 0.0), abs_pow(n.from(0.0), a, 0.0));
        (m - p, m + p - 2.0 * c)
    }
}

/// `∫ F(x) dx` over the line for an integrand with one cluster of
/// singular points near `0` and another near `-h`.
///
/// The line is cut at `-h/2`; the left part is integrated in the shifted
/// variable `y = x + h` so both clusters are resolved in exact local
/// coordinates however large `h` is. `near_zero(x)` is `F(x)` and
/// `near_shift(y)` is `F(y - h)`. The singular points are `points` with
/// exponent `own` and `points - h` with exponent `shifted`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn two_cluster<F0, F1>(
    h: f64,
    near_zero: F0,
    near_shift: F1,
    points: &[f64],
    own: Option<f64>,
    shifted: Option<f64>,
    decay: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult>
where
    F0: Fn(Node) -> f64,
    F1: Fn(Node) -> f64,
{
    let mid = 0.5 * h;
    let right_points: Vec<SingularPoint> = points
        .iter()
        .flat_map(|&p| [(p, own), (p - h, shifted)])
        .filter(|&(p, _)| p >= -mid)
        .map(|(at, exponent)| SingularPoint { at, exponent })
        .collect();
    let left_points: Vec<SingularPoint> = points
        .iter()
        .flat_map(|&p| [(p + h, own), (p, shifted)])
        .filter(|&(p, _)| p <= mid)
        .map(|(at, exponent)| SingularPoint { at, exponent })
        .collect();
    let tail = TailExtrapolation::PowerLaw { exponent: decay };
    let mut right_cfg = cfg.clone().tail(LOCAL_CUT, tail);
    right_cfg.singular_points = right_points;
    let mut left_cfg = cfg.clone().tail(LOCAL_CUT, tail);
    left_cfg.singular_points = left_points;
    let right = adaptive_integrate_nodes(near_zero, -mid, f64::INFINITY, &right_cfg)?;
    let left = adaptive_integrate_nodes(near_shift, f64::NEG_INFINITY, mid, &left_cfg)?;
    Ok(QuadResult::sum_within(&[left, right], cfg))
}

/// `f_H(h)`; `epsilon > 0` replaces the bare norm by `|x|_eps`.
pub fn f_h_eval(hurst: f64, h: f64, epsilon: f64) -> Result<QuadResult> {
    f_h_eval_with(hurst, h, epsilon, &base_cfg())
}

pub fn f_h_eval_with(hurst: f64, h: f64, epsilon: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    check_hurst(hurst)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("h", format!("must be positive and finite, got {h}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", format!("must be >= 0, got {epsilon}")));
    }
    let a = kernel_exponent(hurst);
    if a == 0.0 {
        return Ok(QuadResult::exact(0.0));
    }
    let bare = epsilon == 0.0;
    let near_zero = |n: Node| {
        let q = p_node(n, h, a, epsilon);
        p_node(n, 0.0, a, epsilon) * q * q
    };
    let near_shift = |n: Node| {
        let q = p_node(n, 0.0, a, epsilon);
        p_node(n, -h, a, epsilon) * q * q
    };
    two_cluster(
        h,
        near_zero,
        near_shift,
        &[-0.5, 0.5],
        bare.then_some(a),
        bare.then_some(2.0 * a),
        3.0 - 3.0 * a,
        cfg,
    )
}

/// Slope `C` of `f_H(h) ~ C h` at the origin:
/// `-a ∫ x |x|^(a-2) D1(x) D2(x) dx` with `D1 = g(x-1) - g(x+1)`,
/// `D2 = g(x-1) + g(x+1) - 2 g(x)`, `g = |.|^a`.
pub fn f_h_small_constant(hurst: f64) -> Result<QuadResult> {
    check_hurst(hurst)?;
    let a = kernel_exponent(hurst);
    if a == 0.0 {
        return Ok(QuadResult::exact(0.0));
    }
    let cfg = base_cfg()
        .singular([sing(0.0, 2.0 * a), sing(1.0, 2.0 * a)])
        .tail(LOCAL_CUT, TailExtrapolation::PowerLaw { exponent: 4.0 - 3.0 * a });
    let f = |n: Node| -> f64 {
        let (d1, d2) = unit_differences(n, a);
        n.x.powf(a - 1.0) * d1 * d2
    };
    Ok(adaptive_integrate_nodes(f, 0.0, f64::INFINITY, &cfg)?.scale(-2.0 * a))
}

/// Coefficient `C` of `f_H(h) ~ C h^(H - 3/2)` at infinity:
/// `-a ∫ x D1(x) D2(x) dx`.
pub fn f_h_large_constant(hurst: f64) -> Result<QuadResult> {
    check_hurst(hurst)?;
    let a = kernel_exponent(hurst);
    if a == 0.0 {
        return Ok(QuadResult::exact(0.0));
    }
    let cfg = base_cfg()
        .singular([SingularPoint::new(0.0), sing(1.0, 2.0 * a)])
        .tail(LOCAL_CUT, TailExtrapolation::PowerLaw { exponent: 2.0 - 2.0 * a });
    let f = |n: Node| -> f64 {
        let (d1, d2) = unit_differences(n, a);
        n.x * d1 * d2
    };
    Ok(adaptive_integrate_nodes(f, 0.0, f64::INFINITY, &cfg)?.scale(-2.0 * a))
}

/// `d_H = ∫ |y + 1|^a |y|^(2a) dy`, finite for `H < 1/6`.
pub fn d_h(hurst: f64) -> Result<QuadResult> {
    check_hurst(hurst)?;
    if hurst >= 1.0 / 6.0 {
        return Err(Error::Regime(format!("d_H diverges for H >= 1/6 (H = {hurst})")));
    }
    let a = kernel_exponent(hurst);
    let cfg = base_cfg()
        .singular([sing(-1.0, a), sing(0.0, 2.0 * a)])
        .tail(LOCAL_CUT, TailExtrapolation::PowerLaw { exponent: -3.0 * a });
    adaptive_integrate_nodes(
        |n: Node| abs_pow(n.from(-1.0), a, 0.0) * abs_pow(n.from(0.0), 2.0 * a, 0.0),
        f64::NEG_INFINITY,
        f64::INFINITY,
        &cfg,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityKind {
    /// `f_H(h) ~ d_H |h - 1|^(3H - 1/2)`, for `H < 1/6`.
    Power,
    /// `f_H(h) ~ 2 ln(1/|h - 1|)`, at `H = 1/6`.
    Logarithmic,
    /// Continuous and bounded, for `H > 1/6`.
    Bounded,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularityDiagnostics {
    pub hurst: f64,
    pub kind: SingularityKind,
    pub predicted_exponent: Option<f64>,
    pub fitted_exponent: Option<f64>,
    /// `d_H` for the power branch, `2` for the logarithmic one.
    pub predicted_coefficient: Option<f64>,
    pub fitted_coefficient: Option<f64>,
    /// Power: |fitted - predicted exponent|. Logarithmic: relative error of
    /// the coefficient. Bounded: max of `|f_H|` near 1 over `|f_H(0.9)|`.
    pub deviation: f64,
    /// `f_H(h) / ln(1/|h - 1|)` at the closest sample.
    pub log_ratio: Option<f64>,
    pub max_near_one: f64,
    pub reference_value: f64,
    /// `(h - 1, f_H(h))` samples on `(1, 1.05]`.
    pub samples: Vec<(f64, f64)>,
}

const LOG_BRANCH_TOL: f64 = 1e-9;

/// Probe the behaviour of `f_H` as `h -> 1+`.
///
/// Samples sit at `h = 1 + delta_k`, `delta_k = 0.05 * 10^(-k/2)`.
/// Successive differences cancel the bounded part, so the exponent and
/// coefficient come from a least-squares fit of
/// `ln |f(1 + delta_k) - f(1 + delta_(k+1))|` against `ln delta_k`.
pub fn f_h_singularity_check(hurst: f64) -> Result<SingularityDiagnostics> {
    check_hurst(hurst)?;
    let kind = if (hurst - 1.0 / 6.0).abs() <= LOG_BRANCH_TOL {
        SingularityKind::Logarithmic
    } else if hurst < 1.0 / 6.0 {
        SingularityKind::Power
    } else {
        SingularityKind::Bounded
    };
    let ratio = 10f64.powf(-0.5);
    let deltas: Vec<f64> = (0..=12).map(|k| 0.05 * ratio.powi(k)).collect();
    let mut samples = Vec::with_capacity(deltas.len());
    for &d in &deltas {
        samples.push((d, f_h_eval(hurst, 1.0 + d, 0.0)?.require("f_H near h = 1")?.value));
    }
    let mut near = Vec::new();
    for k in 0..=20 {
        let h = 0.99 + 0.001 * k as f64;
        if h != 1.0 {
            near.push(f_h_eval(hurst, h, 0.0)?.value.abs());
        }
    }
    let max_near_one = near.iter().cloned().fold(0.0, f64::max);
    let reference_value = f_h_eval(hurst, 0.9, 0.0)?.value;

    let diffs: Vec<(f64, f64)> = samples
        .windows(2)
        .map(|w| (w[0].0, w[0].1 - w[1].1))
        .collect();
    let (delta_min, f_min) = *samples.last().expect("samples");
    let log_ratio = Some(f_min / (1.0 / delta_min).ln());

    let diag = match kind {
        SingularityKind::Power => {
            let predicted = 3.0 * hurst - 0.5;
            let pts: Vec<(f64, f64)> = diffs
                .iter()
                .filter(|(_, d)| *d != 0.0)
                .map(|(x, d)| (x.ln(), d.abs().ln()))
                .collect();
            let (slope, _) = least_squares(&pts);
            let (d_last, diff_last) = *diffs.last().expect("diffs");
            let coef = diff_last / (d_last.powf(predicted) * (1.0 - ratio.powf(predicted)));
            let dh = d_h(hurst)?.value;
            SingularityDiagnostics {
                hurst,
                kind,
                predicted_exponent: Some(predicted),
                fitted_exponent: Some(slope),
                predicted_coefficient: Some(dh),
                fitted_coefficient: Some(coef),
                deviation: (slope - predicted).abs(),
                log_ratio,
                max_near_one,
                reference_value,
                samples,
            }
        }
        SingularityKind::Logarithmic => {
            // f(1 + r d) - f(1 + d) = c ln(1/r) for f ~ c ln(1/delta).
            let step = (1.0 / ratio).ln();
            let tail: Vec<f64> = diffs.iter().rev().take(4).map(|(_, d)| -d / step).collect();
            let coef = tail.iter().sum::<f64>() / tail.len() as f64;
            SingularityDiagnostics {
                hurst,
                kind,
                predicted_exponent: Some(0.0),
                fitted_exponent: None,
                predicted_coefficient: Some(2.0),
                fitted_coefficient: Some(coef),
                deviation: (coef / 2.0 - 1.0).abs(),
                log_ratio,
                max_near_one,
                reference_value,
                samples,
            }
        }
        SingularityKind::Bounded => SingularityDiagnostics {
            hurst,
            kind,
            predicted_exponent: None,
            fitted_exponent: None,
            predicted_coefficient: None,
            fitted_coefficient: None,
            deviation: max_near_one / reference_value.abs(),
            log_ratio,
            max_near_one,
            reference_value,
            samples,
        },
    };
    Ok(diag)
}

/// Ordinary least squares `y = slope x + intercept`.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
