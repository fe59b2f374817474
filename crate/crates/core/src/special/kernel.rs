//! Integrals of the cutoff fractional kernel `phi(x) = varphi(x) |x|^a`:
//! the derivative of its autocorrelation, the limiting variance by two
//! routes, and the increment correlation `Phi_l ⋆ Phi_l^2`.

use super::quad::{adaptive_integrate, adaptive_integrate_nodes, Node, QuadResult, QuadratureConfig, SingularPoint};
use super::{check_gamma, check_hurst, kernel_exponent, sing, times_pow, Cutoff, Nested};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Variant};

fn inner_cfg() -> QuadratureConfig {
    QuadratureConfig::default().tolerances(1e-15, 1e-11)
}

fn outer_cfg() -> QuadratureConfig {
    QuadratureConfig::default().tolerances(1e-14, 1e-9)
}

/// Plain break points at positive truncation offsets.
fn jumps(cutoff: Cutoff, offsets: &[f64]) -> Vec<SingularPoint> {
    if cutoff.support().is_none() {
        return Vec::new();
    }
    offsets.iter().map(|&p| SingularPoint::new(p)).collect()
}

fn integrate_or_zero<F: Fn(Node) -> f64>(f: F, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    if lo < hi {
        adaptive_integrate_nodes(f, lo, hi, cfg)
    } else {
        Ok(QuadResult::exact(0.0))
    }
}

/// `(phi ⋆ phi)'(h)` where `(phi ⋆ phi)(h) = ∫ phi(x) phi(x + h) dx`.
///
/// Sum of the smooth part `∫ varphi(x) varphi'(x+h) |x|^a |x+h|^a dx`,
/// the principal-value part written as the convergent integral
/// `a ∫_0^∞ varphi(y) y^(a-1) [phi(y - h) - phi(y + h)] dy`, and, for the
/// truncated cutoff, the contribution of its jumps at `±1`.
pub fn phi_star_phi_deriv(h: f64, hurst: f64, cutoff: Cutoff) -> Result<QuadResult> {
    check_hurst(hurst)?;
    if !(h != 0.0 && h.is_finite()) {
        return Err(Error::param("h", format!("must be finite and non-zero, got {h}")));
    }
    let a = kernel_exponent(hurst);
    let s = h.abs();
    let sign = h.signum();
    let reach = cutoff.reach();

    let (lo, hi) = match cutoff.support() {
        Some(w) => ((-w).max(-w - h), w.min(w - h)),
        None => (-reach - s, reach + s),
    };
    // The smooth part is O(h) near the origin while the total stays O(1).
    let mut cfg = inner_cfg().singular([sing(0.0, a), sing(-h, a)]);
    cfg.abs_tol = 1e-13;
    let smooth = integrate_or_zero(
        |n: Node| {
            let (x, xh) = (n.from(0.0), n.from(-h));
            cutoff.value(x) * cutoff.deriv(xh) * x.abs().powf(a) * xh.abs().powf(a)
        },
        lo,
        hi,
        &cfg,
    )?;

    let pv = if a == 0.0 {
        QuadResult::exact(0.0)
    } else {
        let upper = match cutoff.support() {
            Some(w) => w,
            None => reach + s,
        };
        cfg = inner_cfg().singular([sing(0.0, a), sing(s, a)]);
        cfg.singular_points.extend(jumps(cutoff, &[s + 1.0, (s - 1.0).abs(), 1.0 - s]));
        let integrand = |n: Node| {
            let y = n.from(0.0);
            cutoff.value(y) * y.powf(a - 1.0) * cutoff.phi_odd_diff_exact(s, y, -n.from(s), a)
        };
        integrate_or_zero(integrand, 0.0, upper, &cfg)?.scale(a * sign)
    };

    let boundary = cutoff.edge_value() * (cutoff.phi(-h - 1.0, a) - cutoff.phi(1.0 - h, a));
    if !boundary.is_finite() {
        return Err(Error::Regime(format!("(phi*phi)' is singular at h = {h}")));
    }
    Ok(QuadResult::sum_within(&[smooth, pv, QuadResult::exact(boundary)], &inner_cfg()))
}

fn check_variance_regime(hurst: f64, gamma: f64) -> Result<()> {
    check_hurst(hurst)?;
    check_gamma(gamma)?;
    if gamma * gamma >= 0.5 * hurst {
        return Err(Error::Regime(format!(
            "variance diverges unless gamma^2 < H/2 (gamma^2 = {}, H = {hurst})",
            gamma * gamma
        )));
    }
    Ok(())
}

/// Limiting variance `E u^2` as
/// `(1/(2 gamma^2)) ∫_0^1 (phi ⋆ phi)'(h) (1 - h^(-4 gamma^2)) dh`,
/// or `2 ∫_0^1 (phi ⋆ phi)'(h) ln h dh` at `gamma = 0`.
pub fn variance_ibp(hurst: f64, gamma: f64, cutoff: Cutoff) -> Result<QuadResult> {
    check_variance_regime(hurst, gamma)?;
    let a = kernel_exponent(hurst);
    let g2 = gamma * gamma;
    let weight = move |h: f64| {
        if g2 == 0.0 {
            2.0 * h.ln()
        } else {
            -(-4.0 * g2 * h.ln()).exp_m1() / (2.0 * g2)
        }
    };
    let nested = Nested::new();
    let cfg = outer_cfg().singular([sing(0.0, 2.0 * a - 4.0 * g2)]);
    let outer = adaptive_integrate(
        |h: f64| nested.take(phi_star_phi_deriv(h, hurst, cutoff)) * weight(h),
        0.0,
        1.0,
        &cfg,
    );
    nested.finish(outer)
}

/// `J(h) = ∫ [phi(z + h) - phi(z)]^2 dz`.
fn phi_increment_energy(h: f64, a: f64, hurst: f64, cutoff: Cutoff) -> Result<QuadResult> {
    let (lo, hi) = match cutoff.support() {
        Some(w) => (-w - h, w),
        None => (-cutoff.reach() - h, cutoff.reach()),
    };
    let mut cfg = inner_cfg().singular([sing(0.0, 2.0 * a), sing(-h, 2.0 * a)]);
    cfg.singular_points.extend(jumps(cutoff, &[1.0, -1.0, 1.0 - h, -1.0 - h]));
    cfg.abs_tol = 1e-15 * h.powf(2.0 * hurst).max(1e-280);
    adaptive_integrate_nodes(
        |n: Node| {
            let d = cutoff.phi(n.from(-h), a) - cutoff.phi(n.from(0.0), a);
            d * d
        },
        lo,
        hi,
        &cfg,
    )
}

/// Limiting variance `E u^2` as
/// `∫_0^1 h^(-1 - 4 gamma^2) ∫ [phi(z + h) - phi(z)]^2 dz dh`.
pub fn variance_symmetric(hurst: f64, gamma: f64, cutoff: Cutoff) -> Result<QuadResult> {
    check_variance_regime(hurst, gamma)?;
    let a = kernel_exponent(hurst);
    let g2 = gamma * gamma;
    let nested = Nested::new();
    let cfg = outer_cfg().singular([sing(0.0, 2.0 * a - 4.0 * g2)]);
    let outer = adaptive_integrate(
        |h: f64| times_pow(nested.take(phi_increment_energy(h, a, hurst, cutoff)), h, -1.0 - 4.0 * g2),
        0.0,
        1.0,
        &cfg,
    );
    nested.finish(outer)
}

/// `∫ phi(x)^2 dx`, the variance of the Gaussian baseline field.
pub fn kernel_energy(hurst: f64, cutoff: Cutoff) -> Result<QuadResult> {
    check_hurst(hurst)?;
    let a = kernel_exponent(hurst);
    let cfg = inner_cfg().singular([sing(0.0, 2.0 * a)]);
    Ok(adaptive_integrate(
        |x: f64| {
            let p = cutoff.phi(x, a);
            p * p
        },
        0.0,
        cutoff.reach(),
        &cfg,
    )?
    .scale(2.0))
}

/// Predicted one-point variance `E u^2` in physical units: `L^(2H)` times
/// [`variance_ibp`] for the skewed field or [`kernel_energy`] for the
/// baseline, both with the truncated cutoff the synthesis uses.
pub fn variance_prediction(params: &ModelParams) -> Result<f64> {
    if params.h_tilde != 0.0 {
        return Err(Error::Regime("variance prediction assumes h_tilde = 0".into()));
    }
    let cutoff = Cutoff::TruncatedGaussian;
    let unit = match params.variant {
        Variant::Skewed => variance_ibp(params.h, params.gamma, cutoff)?,
        Variant::GaussianBaseline => kernel_energy(params.h, cutoff)?,
    };
    Ok(unit.require("variance")?.value * params.length.powf(2.0 * params.h))
}

fn check_ell(ell: f64) -> Result<()> {
    if ell > 0.0 && ell <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("ell", format!("must lie in (0, 1], got {ell}")))
    }
}

/// `[phi(x-l) - phi(x+l)] [phi(x-l) + phi(x+l) - 2 phi(x)]` for `x > 0`.
#[inline]
fn increment_pair(n: Node, ell: f64, a: f64, cutoff: Cutoff) -> f64 {
    let x = n.from(0.0);
    let below = n.from(ell);
    let d1 = cutoff.phi_odd_diff_exact(x, ell, below, a);
    let d2 = cutoff.phi(below, a) + cutoff.phi(x + ell, a) - 2.0 * cutoff.phi(x, a);
    d1 * d2
}

fn increment_breaks(cutoff: Cutoff, ell: f64, extra: &[f64]) -> Vec<SingularPoint> {
    let mut offsets = vec![1.0, 1.0 + ell, (1.0 - ell).abs()];
    offsets.extend_from_slice(extra);
    jumps(cutoff, &offsets)
}

/// `(Phi_l ⋆ Phi_l^2)(h) = ∫ Phi_l(x) Phi_l(x + h)^2 dx` for `h >= 0`, with
/// `Phi_l(x) = phi(x + l/2) - phi(x - l/2)`.
///
/// Evaluated through the equivalent form
/// `∫_0^∞ [phi(x - h) - phi(x + h)] [phi(x-l) - phi(x+l)] [phi(x-l) + phi(x+l) - 2 phi(x)] dx`,
/// which folds the odd integrand onto the half line.
pub fn phi_ell_star_sq(h: f64, ell: f64, hurst: f64, cutoff: Cutoff) -> Result<QuadResult> {
    check_hurst(hurst)?;
    check_ell(ell)?;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::param("h", format!("must be >= 0, got {h}")));
    }
    if h == 0.0 {
        return Ok(QuadResult::exact(0.0));
    }
    let a = kernel_exponent(hurst);
    let upper = match cutoff.support() {
        Some(w) => w + h.max(ell),
        None => cutoff.reach() + h + ell,
    };
    // Absolute floor on the natural scale l^(3H) of the function; it
    // vanishes faster than h at the origin.
    let mut cfg = inner_cfg().singular([sing(h, a), sing(ell, 2.0 * a)]);
    cfg.abs_tol = 1e-12 * ell.powf(3.0 * hurst);
    cfg.singular_points
        .extend(increment_breaks(cutoff, ell, &[h + 1.0, (h - 1.0).abs(), 1.0 - h]));
    cfg.singular_points.retain(|p| p.at > 0.0);
    adaptive_integrate_nodes(
        |n: Node| cutoff.phi_odd_diff_exact(n.from(0.0), h, n.from(h), a) * increment_pair(n, ell, a, cutoff),
        0.0,
        upper,
        &cfg,
    )
}

/// Slope of `(Phi_l ⋆ Phi_l^2)(h)` at `h = 0+`:
/// `2 ∫_0^∞ [-a varphi(x) - x varphi'(x)] x^(a-1) [..][..] dx`, plus the
/// jump contribution of the truncated cutoff.
pub fn phi_ell_star_sq_small_constant(ell: f64, hurst: f64, cutoff: Cutoff) -> Result<QuadResult> {
    check_hurst(hurst)?;
    check_ell(ell)?;
    let a = kernel_exponent(hurst);
    let upper = match cutoff.support() {
        Some(w) => w,
        None => cutoff.reach() + ell,
    };
    let mut cfg = inner_cfg().singular([sing(0.0, 2.0 * a), sing(ell, 2.0 * a)]);
    cfg.abs_tol = 1e-30;
    cfg.singular_points.extend(increment_breaks(cutoff, ell, &[]));
    let body = adaptive_integrate_nodes(
        |n: Node| {
            let x = n.from(0.0);
            let w = -a * cutoff.value(x) - x * cutoff.deriv(x);
            2.0 * w * x.powf(a - 1.0) * increment_pair(n, ell, a, cutoff)
        },
        0.0,
        upper,
        &cfg,
    )?;
    let edge = cutoff.edge_value();
    let inner = cutoff.phi(1.0 - ell, a);
    let boundary = 2.0 * edge * inner * (inner - edge);
    Ok(QuadResult::sum(&[body, QuadResult::exact(boundary)]))
}
