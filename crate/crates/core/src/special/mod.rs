//! Deterministic integrals of the model.
//!
//! Everything here works in units where the cutoff length is 1; results for
//! a cutoff length `L` follow by scaling (variances by `L^(2H)`, third
//! moments by `L^(3H)`). The fractional kernel is
//! `phi(x) = varphi(x) |x|^(H - 1/2)` and the bare norm is used throughout,
//! except for the regularized comparison mode of [`f_h_eval`].

pub mod constants;
pub mod fh;
pub mod kernel;
mod powers;
pub mod quad;
pub mod third;

use std::cell::{Cell, RefCell};

pub use constants::{
    a_gamma_h, a_h, increment_variance_constant, increment_variance_constant_pv, pv_constant,
    r_gamma_const, r_gamma_const_with, c_gamma_eval,
};
pub use fh::{d_h, f_h_eval, f_h_large_constant, f_h_singularity_check, f_h_small_constant, SingularityDiagnostics, SingularityKind};
pub use kernel::{
    kernel_energy, phi_ell_star_sq, phi_ell_star_sq_small_constant, phi_star_phi_deriv, variance_ibp,
    variance_prediction, variance_symmetric,
};
pub use powers::{abs_pow, pow_diff, pow_second_diff};
pub use quad::{adaptive_integrate, adaptive_integrate_nodes, Node, QuadResult, QuadratureConfig, SingularPoint, TailExtrapolation};
pub use third::{
    third_moment_coefficient, third_moment_equivalent, third_moment_equivalent_many, third_moment_exact,
    third_moment_prediction, ThirdMomentMode,
};

use crate::error::{Error, Result};

/// Large-scale cutoff `varphi` in units of the cutoff length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cutoff {
    /// `exp(-x^2 / 2)` on the whole line.
    Gaussian,
    /// `exp(-x^2 / 2)` on `|x| <= 1`, zero outside; what the synthesis uses.
    #[default]
    TruncatedGaussian,
}

impl Cutoff {
    pub fn name(self) -> &'static str {
        match self {
            Cutoff::Gaussian => "gaussian",
            Cutoff::TruncatedGaussian => "truncated_gaussian",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Cutoff::Gaussian),
            "truncated_gaussian" | "truncated" => Ok(Cutoff::TruncatedGaussian),
            other => Err(Error::param("cutoff", format!("unknown cutoff '{other}'"))),
        }
    }

    #[inline]
    fn inside(self, x: f64) -> bool {
        match self {
            Cutoff::Gaussian => true,
            Cutoff::TruncatedGaussian => x.abs() <= 1.0,
        }
    }

    #[inline]
    pub fn value(self, x: f64) -> f64 {
        if self.inside(x) {
            (-0.5 * x * x).exp()
        } else {
            0.0
        }
    }

    /// Derivative away from the truncation points.
    #[inline]
    pub fn deriv(self, x: f64) -> f64 {
        if self.inside(x) {
            -x * (-0.5 * x * x).exp()
        } else {
            0.0
        }
    }

    /// `ln varphi(s - y) - ln varphi(s + y)`, exact for the Gaussian form.
    #[inline]
    fn ln_ratio(self, s: f64, y: f64) -> f64 {
        2.0 * s * y
    }

    /// Half-width of the support, `None` when unbounded.
    pub fn support(self) -> Option<f64> {
        match self {
            Cutoff::Gaussian => None,
            Cutoff::TruncatedGaussian => Some(1.0),
        }
    }

    /// Range beyond which the cutoff is negligible (or zero).
    fn reach(self) -> f64 {
        self.support().unwrap_or(12.0)
    }

    /// Value just inside the truncation point, zero without truncation.
    pub fn edge_value(self) -> f64 {
        match self {
            Cutoff::Gaussian => 0.0,
            Cutoff::TruncatedGaussian => (-0.5f64).exp(),
        }
    }

    /// `phi(x) = varphi(x) |x|^a`.
    #[inline]
    pub fn phi(self, x: f64, a: f64) -> f64 {
        if !self.inside(x) {
            return 0.0;
        }
        self.value(x) * x.abs().powf(a)
    }

    /// `phi(s - y) - phi(s + y)` for `s > 0`, `y >= 0`, stable for `y << s`.
    pub fn phi_odd_diff(self, s: f64, y: f64, a: f64) -> f64 {
        self.phi_odd_diff_exact(s, y, s - y, a)
    }

    /// [`Cutoff::phi_odd_diff`] with `s - y` supplied exactly.
    pub fn phi_odd_diff_exact(self, s: f64, y: f64, s_minus_y: f64, a: f64) -> f64 {
        if y < 0.5 * s && self.inside(s + y) {
            let delta = self.ln_ratio(s, y) + a * ((-y / s).ln_1p() - (y / s).ln_1p());
            self.phi(s + y, a) * delta.exp_m1()
        } else {
            self.phi(s_minus_y, a) - self.phi(s + y, a)
        }
    }
}

/// Exponent of the cutoff-free kernel, `H - 1/2`.
#[inline]
pub(crate) fn kernel_exponent(hurst: f64) -> f64 {
    hurst - 0.5
}

pub(crate) fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(Error::param("H", format!("must lie in (0, 1), got {hurst}")))
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::param("gamma", format!("must be finite and >= 0, got {gamma}")))
    }
}

/// Singular point with grading only when the exponent is negative.
pub(crate) fn sing(at: f64, exponent: f64) -> SingularPoint {
    SingularPoint::with_exponent(at, exponent)
}

/// `v h^e` for `h > 0`, without overflow in `h^e` when `v` is small.
#[inline]
pub(crate) fn times_pow(v: f64, h: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * (v.abs().ln() + e * h.ln()).exp()
    }
}

/// Collects failures of inner integrals evaluated inside an outer one.
#[derive(Default)]
pub(crate) struct Nested {
    error: RefCell<Option<Error>>,
    unconverged: Cell<usize>,
    calls: Cell<usize>,
}

impl Nested {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// Value of an inner result; a failure poisons the outer sample.
    pub(crate) fn take(&self, r: Result<QuadResult>) -> f64 {
        self.calls.set(self.calls.get() + 1);
        match r {
            Ok(q) => {
                if !q.converged {
                    self.unconverged.set(self.unconverged.get() + 1);
                }
                q.value
            }
            Err(e) => {
                self.error.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    pub(crate) fn finish(self, outer: Result<QuadResult>) -> Result<QuadResult> {
        if let Some(e) = self.error.into_inner() {
            return Err(e);
        }
        let mut q = outer?;
        if self.unconverged.get() > 0 {
            q.converged = false;
        }
        Ok(q)
    }
}
