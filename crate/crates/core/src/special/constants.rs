//! Scaling constants of the increment moments and the correlation of the
//! log-correlated coupling.

use super::fh::{p_node, two_cluster};
use super::powers::{pow_diff, pow_second_diff};
use super::quad::{adaptive_integrate, adaptive_integrate_nodes, Node, QuadResult, QuadratureConfig, SingularPoint, TailExtrapolation};
use super::{check_gamma, check_hurst, kernel_exponent, sing, times_pow, Nested};
use crate::error::{Error, Result};

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default().tolerances(1e-15, 1e-11)
}

/// Product of two independent results with first-order error propagation.
fn product(x: QuadResult, y: QuadResult, factor: f64) -> QuadResult {
    QuadResult {
        value: factor * x.value * y.value,
        abs_err_estimate: factor.abs() * (x.value.abs() * y.abs_err_estimate + y.value.abs() * x.abs_err_estimate),
        subdivisions_used: x.subdivisions_used + y.subdivisions_used,
        converged: x.converged && y.converged,
    }
}

/// `∫_0^∞ f(h, h - 1) dh` for integrands singular at `0` and `1`, with the
/// offset from `1` passed exactly rather than recomputed from `h`.
fn split_at_one<F: Fn(f64, f64) -> f64>(
    f: F,
    at_zero: f64,
    at_one: f64,
    decay: f64,
    tail_cut: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult> {
    let head = adaptive_integrate(|h: f64| f(h, h - 1.0), 0.0, 0.5, &cfg.clone().singular([sing(0.0, at_zero)]))?;
    let below = adaptive_integrate(|t: f64| f(1.0 - t, -t), 0.0, 0.5, &cfg.clone().singular([sing(0.0, at_one)]))?;
    let above = adaptive_integrate(
        |t: f64| f(1.0 + t, t),
        0.0,
        f64::INFINITY,
        &cfg.clone()
            .singular([sing(0.0, at_one)])
            .tail(tail_cut, TailExtrapolation::PowerLaw { exponent: decay }),
    )?;
    Ok(QuadResult::sum_within(&[head, below, above], cfg))
}

fn check_second_order_regime(hurst: f64, gamma: f64) -> Result<()> {
    check_hurst(hurst)?;
    check_gamma(gamma)?;
    if gamma * gamma >= 0.5 * hurst {
        return Err(Error::Regime(format!(
            "increment variance needs gamma^2 < H/2 (gamma^2 = {}, H = {hurst})",
            gamma * gamma
        )));
    }
    Ok(())
}

/// `a_(gamma,H) = ∫_0^∞ h^(-4 gamma^2) [2 h^(2H-1) - (h+1)^(2H-1) - sgn(h-1) |h-1|^(2H-1)] dh`.
pub fn a_gamma_h(hurst: f64, gamma: f64) -> Result<QuadResult> {
    check_second_order_regime(hurst, gamma)?;
    let b = 2.0 * kernel_exponent(hurst);
    let g2 = gamma * gamma;
    let bracket = move |h: f64, d: f64| {
        if h > 2.0 {
            -pow_second_diff(h, 1.0, b, 0.0)
        } else {
            2.0 * h.powf(b) - (h + 1.0).powf(b) - d.signum() * d.abs().powf(b)
        }
    };
    split_at_one(move |h, d| h.powf(-4.0 * g2) * bracket(h, d), b - 4.0 * g2, b, 2.0 - b + 4.0 * g2, 4.0, &cfg())
}

/// `a_H = a_(0,H)`, equal to `1/H`.
pub fn a_h(hurst: f64) -> Result<QuadResult> {
    a_gamma_h(hurst, 0.0)
}

/// Principal value `P.V. ∫ |x|^a (x+1) |x+1|^(a-2) dx`, written as
/// `∫_0^∞ x^(a-1) [|x-1|^a - |x+1|^a] dx`.
pub fn pv_constant(hurst: f64) -> Result<QuadResult> {
    check_hurst(hurst)?;
    let a = kernel_exponent(hurst);
    if a == 0.0 {
        return Ok(QuadResult::exact(0.0));
    }
    let bracket = move |x: f64, d: f64| {
        if x > 2.0 {
            -pow_diff(x, 1.0, a, 0.0)
        } else {
            d.abs().powf(a) - (x + 1.0).powf(a)
        }
    };
    split_at_one(move |x, d| x.powf(a - 1.0) * bracket(x, d), a, a, 2.0 - 2.0 * a, 4.0, &cfg())
}

/// Where the `h` integral of the increment constant switches to its
/// analytic tail.
const C2_SPLIT: f64 = 64.0;

fn p_energy(a: f64) -> Result<QuadResult> {
    let cfg = cfg()
        .singular([sing(0.5, 2.0 * a)])
        .tail(4.0, TailExtrapolation::PowerLaw { exponent: 2.0 - 2.0 * a });
    Ok(adaptive_integrate_nodes(
        |n: Node| {
            let p = p_node(n, 0.0, a, 0.0);
            p * p
        },
        0.0,
        f64::INFINITY,
        &cfg,
    )?.scale(2.0))
}

/// `∫ (P(z + h) - P(z))^2 dz`, to an absolute accuracy whose integral
/// against `h^(-1 - g4)` over `(0, 1)` stays below `1e-12`.
fn p_increment_energy(h: f64, a: f64, g4: f64) -> Result<QuadResult> {
    let mut c = cfg();
    c.abs_tol = (1e-13 * h.powf(0.1 + g4).min(1.0)).max(1e-280);
    two_cluster(
        h,
        |n: Node| {
            let d = p_node(n, h, a, 0.0) - p_node(n, 0.0, a, 0.0);
            d * d
        },
        |n: Node| {
            let d = p_node(n, 0.0, a, 0.0) - p_node(n, -h, a, 0.0);
            d * d
        },
        &[-0.5, 0.5],
        Some(2.0 * a),
        Some(2.0 * a),
        2.0 - 2.0 * a,
        &c,
    )
}

/// `∫ P(z) P(z + h) dz`.
fn p_correlation(h: f64, a: f64) -> Result<QuadResult> {
    let mut c = cfg();
    c.abs_tol = 1e-13 * h.powf(2.0 * a - 1.0).min(1.0);
    two_cluster(
        h,
        |n: Node| p_node(n, 0.0, a, 0.0) * p_node(n, h, a, 0.0),
        |n: Node| p_node(n, -h, a, 0.0) * p_node(n, 0.0, a, 0.0),
        &[-0.5, 0.5],
        Some(a),
        Some(a),
        2.0 - 2.0 * a,
        &c,
    )
}

/// Constant `C_2` of `E (delta_l u)^2 ~ C_2 l^(2H - 4 gamma^2)` (with
/// `varphi(0) = 1`), from the double integral
/// `(1/2) ∬ (P(y) - P(z))^2 |y - z|^(-1 - 4 gamma^2) dy dz`.
///
/// Reduced to `∫_0^∞ h^(-1 - 4 gamma^2) J(h) dh` with
/// `J(h) = ∫ (P(z + h) - P(z))^2 dz`. Beyond `h = 64`,
/// `J = 2 |P|^2 - 2 (P ⋆ P)(h)` and the constant part is integrated in
/// closed form.
pub fn increment_variance_constant(hurst: f64, gamma: f64) -> Result<QuadResult> {
    check_second_order_regime(hurst, gamma)?;
    if gamma == 0.0 {
        return Err(Error::Regime(
            "the increment variance carries a logarithm at gamma = 0; no power-law constant".into(),
        ));
    }
    let a = kernel_exponent(hurst);
    let g2 = gamma * gamma;
    if a == 0.0 {
        // P vanishes identically.
        return Ok(QuadResult::exact(0.0));
    }
    let nested = Nested::new();
    let near = cfg().tolerances(1e-14, 1e-10).singular([sing(0.0, 2.0 * a - 4.0 * g2), SingularPoint::new(1.0)]);
    let body = adaptive_integrate(
        |h: f64| times_pow(nested.take(p_increment_energy(h, a, 4.0 * g2)), h, -1.0 - 4.0 * g2),
        0.0,
        C2_SPLIT,
        &near,
    );
    let body = nested.finish(body)?;

    let energy = p_energy(a)?;
    let constant_tail = energy.scale(2.0 * C2_SPLIT.powf(-4.0 * g2) / (4.0 * g2));

    let nested = Nested::new();
    let far = cfg()
        .tolerances(1e-18, 1e-8)
        .tail(C2_SPLIT, TailExtrapolation::PowerLaw { exponent: 2.0 - 2.0 * a + 4.0 * g2 });
    let corr_tail = adaptive_integrate(
        |h: f64| times_pow(nested.take(p_correlation(h, a)), h, -1.0 - 4.0 * g2),
        C2_SPLIT,
        f64::INFINITY,
        &far,
    );
    let corr_tail = nested.finish(corr_tail)?.scale(-2.0);
    Ok(QuadResult::sum(&[body, constant_tail, corr_tail]))
}

/// The same constant through the principal-value route:
/// `-(a_(gamma,H) / (2 gamma^2)) (H - 1/2) P.V.`.
pub fn increment_variance_constant_pv(hurst: f64, gamma: f64) -> Result<QuadResult> {
    check_second_order_regime(hurst, gamma)?;
    if gamma == 0.0 {
        return Err(Error::Regime(
            "the increment variance carries a logarithm at gamma = 0; no power-law constant".into(),
        ));
    }
    let a = kernel_exponent(hurst);
    let g2 = gamma * gamma;
    Ok(product(a_gamma_h(hurst, gamma)?, pv_constant(hurst)?, -a / (2.0 * g2)))
}

fn check_third_order_regime(gamma: f64) -> Result<()> {
    check_gamma(gamma)?;
    if gamma * gamma >= 0.125 {
        return Err(Error::Regime(format!("third moment needs gamma^2 < 1/8 (gamma^2 = {})", gamma * gamma)));
    }
    Ok(())
}

/// `r_gamma`, the coefficient of `C_gamma(h) ~ r_gamma |h|^(-8 gamma^2)`:
/// `∫_0^∞ x^b [(x+1)^b + sgn(x-1) |x-1|^b] dx`, `b = -1/2 - 4 gamma^2`.
pub fn r_gamma_const(gamma: f64) -> Result<QuadResult> {
    r_gamma_const_with(gamma, 4.0)
}

/// [`r_gamma_const`] with an explicit start of the power-law tail, as an
/// offset beyond `x = 1`.
pub fn r_gamma_const_with(gamma: f64, tail_cut: f64) -> Result<QuadResult> {
    check_third_order_regime(gamma)?;
    if gamma == 0.0 {
        return Err(Error::Regime("r_gamma diverges at gamma = 0".into()));
    }
    let g2 = gamma * gamma;
    let b = -0.5 - 4.0 * g2;
    let integrand = move |x: f64, d: f64| x.powf(b) * ((x + 1.0).powf(b) + d.signum() * d.abs().powf(b));
    split_at_one(integrand, b, b, -2.0 * b, tail_cut, &cfg())
}

/// `C_gamma(h) = ∫ k(x) k(x + h) e^(4 gamma^2 [C(x) + C(x + h)]) dx` with
/// `k(x) = x |x|^(-3/2)` on `|x| <= 1` and `C(x) = ln+(1/|x|)`, that is
/// `∫ sgn(x) sgn(x+h) |x|^b |x+h|^b dx` over `|x|, |x + h| <= 1`.
pub fn c_gamma_eval(h: f64, gamma: f64) -> Result<QuadResult> {
    check_third_order_regime(gamma)?;
    if !(h != 0.0 && h.abs() < 2.0) {
        return Err(Error::param("h", format!("must satisfy 0 < |h| < 2, got {h}")));
    }
    let b = -0.5 - 4.0 * gamma * gamma;
    let lo = (-1.0f64).max(-1.0 - h);
    let hi = 1.0f64.min(1.0 - h);
    // The two signs cancel near |h| = 0.56, where the value drops to
    // 1e-3 of the integrand's size; the absolute floor reflects that.
    let cfg = cfg().tolerances(1e-12, 1e-11).singular([sing(0.0, b), sing(-h, b)]);
    adaptive_integrate_nodes(
        |n: Node| {
            let (x, y) = (n.from(0.0), n.from(-h));
            x.signum() * y.signum() * x.abs().powf(b) * y.abs().powf(b)
        },
        lo,
        hi,
        &cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn a_h_closed_form() {
        for hurst in [0.2, 1.0 / 3.0, 0.5, 0.7] {
            let q = a_h(hurst).unwrap();
            assert!(q.converged);
            assert_relative_eq!(q.value, 1.0 / hurst, max_relative = 1e-8);
        }
    }

    #[test]
    fn pv_sign() {
        assert!(pv_constant(0.3).unwrap().value > 0.0);
        assert!(pv_constant(0.7).unwrap().value < 0.0);
        assert_eq!(pv_constant(0.5).unwrap().value, 0.0);
    }

    #[test]
    fn c_gamma_symmetric_in_h() {
        for g in [0.0, 0.1, 0.2] {
            for h in [1e-3, 0.2, 0.9] {
                let p = c_gamma_eval(h, g).unwrap().value;
                let m = c_gamma_eval(-h, g).unwrap().value;
                assert_relative_eq!(p, m, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn c_gamma_at_zero_gamma_is_log() {
        // C_0(h) - 2 ln(1/h) stays bounded.
        let vals: Vec<f64> = [1e-4, 1e-3, 1e-2, 0.1, 1.0]
            .iter()
            .map(|&h: &f64| c_gamma_eval(h, 0.0).unwrap().value - 2.0 * (1.0 / h).ln())
            .collect();
        assert!(vals.iter().all(|v| v.abs() < 50.0), "{vals:?}");
        // and converges as h -> 0
        assert!((vals[0] - vals[1]).abs() < 0.1, "{vals:?}");
    }

    #[test]
    fn regimes() {
        assert!(r_gamma_const(0.0).is_err());
        assert!(r_gamma_const((0.125f64).sqrt()).is_err());
        assert!(increment_variance_constant(0.3, 0.0).is_err());
        assert!(a_gamma_h(0.2, 0.33).is_err());
        assert!(c_gamma_eval(0.0, 0.1).is_err());
    }
}
