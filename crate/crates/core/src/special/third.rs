//! Third moment of increments, exactly and through its small-scale
//! equivalent.

use serde::{Deserialize, Serialize};

use super::constants::{c_gamma_eval, r_gamma_const};
use super::fh::f_h_eval;
use super::kernel::phi_ell_star_sq;
use super::quad::{adaptive_integrate, QuadResult, QuadratureConfig, SingularPoint, TailExtrapolation};
use super::{check_gamma, check_hurst, sing, Cutoff, Nested};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThirdMomentMode {
    /// Full double integral at the given scale.
    Exact,
    /// Leading power law as the scale goes to zero.
    Equivalent,
}

impl std::str::FromStr for ThirdMomentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ThirdMomentMode::Exact),
            "equivalent" => Ok(ThirdMomentMode::Equivalent),
            other => Err(Error::param("mode", format!("unknown third-moment mode '{other}'"))),
        }
    }
}

fn check_regime(hurst: f64, gamma: f64) -> Result<()> {
    check_hurst(hurst)?;
    check_gamma(gamma)?;
    if gamma * gamma >= 0.125 {
        return Err(Error::Regime(format!("third moment needs gamma^2 < 1/8 (gamma^2 = {})", gamma * gamma)));
    }
    Ok(())
}

/// `E (delta_l u)^3 = -12 ∫_0^1 (Phi_l ⋆ Phi_l^2)(h) h^(-1/2 - 4 gamma^2) C_gamma(h) dh`
/// in units of the cutoff length.
pub fn third_moment_exact(ell: f64, hurst: f64, gamma: f64, cutoff: Cutoff) -> Result<QuadResult> {
    check_regime(hurst, gamma)?;
    if !(ell > 0.0 && ell <= 1.0) {
        return Err(Error::param("ell", format!("must lie in (0, 1], got {ell}")));
    }
    let g2 = gamma * gamma;
    let mut points = vec![sing(ell, 3.0 * hurst - 0.5), SingularPoint::new(2.0 * ell)];
    if ell < 0.5 {
        points.push(SingularPoint::new(1.0 - ell));
    }
    points.retain(|p| p.at < 1.0);
    let mut cfg = QuadratureConfig::default().tolerances(1e-14, 1e-8).singular(points);
    cfg.abs_tol = 1e-12 * ell.powf(3.0 * hurst);
    let nested = Nested::new();
    let outer = adaptive_integrate(
        |h: f64| {
            if h == 0.0 {
                return 0.0;
            }
            let v = nested.take(phi_ell_star_sq(h, ell, hurst, cutoff));
            let c = nested.take(c_gamma_eval(h, gamma));
            v * h.powf(-0.5 - 4.0 * g2) * c
        },
        0.0,
        1.0,
        &cfg,
    );
    Ok(nested.finish(outer)?.scale(-12.0))
}

/// `∫_0^∞ f_H(h) h^(-1/2 - 12 gamma^2) dh`.
fn fh_moment(hurst: f64, gamma: f64) -> Result<QuadResult> {
    let g2 = gamma * gamma;
    let at_one = if hurst < 1.0 / 6.0 {
        sing(1.0, 3.0 * hurst - 0.5)
    } else {
        SingularPoint::new(1.0)
    };
    let cfg = QuadratureConfig::default()
        .tolerances(1e-14, 1e-9)
        .singular([SingularPoint::new(0.0), at_one])
        .tail(8.0, TailExtrapolation::PowerLaw { exponent: 2.0 - hurst + 12.0 * g2 });
    let nested = Nested::new();
    let outer = adaptive_integrate(
        |h: f64| {
            if h == 0.0 {
                return 0.0;
            }
            nested.take(f_h_eval(hurst, h, 0.0)) * h.powf(-0.5 - 12.0 * g2)
        },
        0.0,
        f64::INFINITY,
        &cfg,
    );
    nested.finish(outer)
}

/// Coefficient `K` of the small-scale equivalent: `E (delta_l u)^3 ~ K l^(3H - 12 gamma^2)`
/// for `gamma > 0`, and `~ K l^(3H) ln(1/l)` at `gamma = 0`.
pub fn third_moment_coefficient(hurst: f64, gamma: f64) -> Result<QuadResult> {
    check_regime(hurst, gamma)?;
    let integral = fh_moment(hurst, gamma)?;
    if gamma == 0.0 {
        return Ok(integral.scale(-24.0));
    }
    let r = r_gamma_const(gamma)?;
    Ok(QuadResult {
        value: -12.0 * r.value * integral.value,
        abs_err_estimate: 12.0 * (r.value.abs() * integral.abs_err_estimate + integral.value.abs() * r.abs_err_estimate),
        subdivisions_used: r.subdivisions_used + integral.subdivisions_used,
        converged: r.converged && integral.converged,
    })
}

fn equivalent_scale(ell: f64, hurst: f64, gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    if gamma == 0.0 {
        ell.powf(3.0 * hurst) * (1.0 / ell).ln()
    } else {
        ell.powf(3.0 * hurst - 12.0 * g2)
    }
}

/// Small-scale equivalent of the third moment at scale `ell` (cutoff
/// length 1, `varphi(0) = 1`).
pub fn third_moment_equivalent(ell: f64, hurst: f64, gamma: f64) -> Result<QuadResult> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::param("ell", format!("must be positive, got {ell}")));
    }
    let k = third_moment_coefficient(hurst, gamma)?;
    Ok(k.scale(equivalent_scale(ell, hurst, gamma)))
}

/// Predicted `E (delta_ell u)^3` in physical units for a parameter set.
/// The Gaussian baseline is symmetric and predicts zero.
pub fn third_moment_prediction(ell: f64, params: &ModelParams, mode: ThirdMomentMode) -> Result<f64> {
    if params.variant == Variant::GaussianBaseline {
        return Ok(0.0);
    }
    if params.h_tilde != 0.0 {
        return Err(Error::Regime("third-moment prediction assumes h_tilde = 0".into()));
    }
    let scaled = ell / params.length;
    let unit = params.length.powf(3.0 * params.h);
    let q = match mode {
        ThirdMomentMode::Exact => third_moment_exact(scaled, params.h, params.gamma, Cutoff::TruncatedGaussian)?,
        ThirdMomentMode::Equivalent => third_moment_equivalent(scaled, params.h, params.gamma)?,
    };
    Ok(q.require("third moment")?.value * unit)
}

/// Equivalent predictions at several scales, sharing one coefficient.
pub fn third_moment_equivalent_many(ells: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    if params.variant == Variant::GaussianBaseline {
        return Ok(vec![0.0; ells.len()]);
    }
    if params.h_tilde != 0.0 {
        return Err(Error::Regime("third-moment prediction assumes h_tilde = 0".into()));
    }
    let k = third_moment_coefficient(params.h, params.gamma)?.require("third moment coefficient")?.value;
    let unit = params.length.powf(3.0 * params.h);
    Ok(ells
        .iter()
        .map(|&ell| k * equivalent_scale(ell / params.length, params.h, params.gamma) * unit)
        .collect())
}
