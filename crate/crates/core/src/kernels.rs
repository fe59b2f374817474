//! Deterministic kernels of the model and their periodic grid samples.
//!
//! Grid layout: cell `i` sits at `x = i dx` for `i < N/2` and at
//! `x = (i - N) dx` otherwise, so index 0 holds the origin and index
//! reflection `i -> (N - i) mod N` is the map `x -> -x`.
//!
//! The simulation path uses the regularized norm `|x|_eps` inside the
//! fractional kernel; the quadrature code in [`crate::special`] uses the
//! bare norm and never goes through this module.

use crate::conv::Convolver;
use crate::error::Result;
use crate::model::ModelParams;

/// `sqrt(x^2 + eps^2)`.
pub fn regularized_norm(x: f64, epsilon: f64) -> f64 {
    x.hypot(epsilon)
}

/// Gaussian cutoff `exp(-x^2 / (2 L^2))`.
pub fn cutoff_varphi(x: f64, length: f64) -> f64 {
    let r = x / length;
    (-0.5 * r * r).exp()
}

/// Regularized fractional kernel `varphi_L(x) / |x|_eps^(1/2 - H)`.
pub fn phi_kernel(x: f64, params: &ModelParams) -> f64 {
    cutoff_varphi(x, params.length) * regularized_norm(x, params.epsilon).powf(params.h - 0.5)
}

/// Odd coupling kernel `x / |x|_eps^(3/2 - Htilde)` on `|x| <= L`.
pub fn k_kernel(x: f64, params: &ModelParams) -> f64 {
    if x.abs() > params.length {
        return 0.0;
    }
    x * regularized_norm(x, params.epsilon).powf(params.h_tilde - 1.5)
}

/// `phi(x + l/2) - phi(x - l/2)`.
pub fn increment_kernel(x: f64, ell: f64, params: &ModelParams) -> f64 {
    phi_kernel(x + 0.5 * ell, params) - phi_kernel(x - 0.5 * ell, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Phi,
    K,
    Cutoff,
}

/// Kernel sampled on the rotated periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    pub samples: Vec<f64>,
    pub kind: KernelKind,
    /// [`ModelParams::law_hash`] of the parameters the grid was built from.
    pub params_hash: String,
}

/// Signed offset (in cells) of grid index `i` from the origin.
pub fn cell_offset(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Number of cells `j` with `j dx <= L`; the boundary cell is included.
pub fn support_cells(params: &ModelParams) -> i64 {
    (params.length * params.n as f64 * (1.0 + 1e-12)).floor() as i64
}

impl KernelGrid {
    pub fn build(kind: KernelKind, params: &ModelParams) -> Self {
        let n = params.n;
        let dx = params.dx();
        let support = support_cells(params);
        let mut samples: Vec<f64> = (0..n)
            .map(|i| {
                let j = cell_offset(i, n);
                if j.abs() > support {
                    return 0.0;
                }
                let x = j as f64 * dx;
                match kind {
                    KernelKind::Phi => phi_kernel(x, params),
                    KernelKind::K => k_kernel(x, params),
                    KernelKind::Cutoff => cutoff_varphi(x, params.length),
                }
            })
            .collect();
        if kind == KernelKind::K {
            // x = -1/2 is its own mirror image; an odd grid must vanish there.
            samples[n / 2] = 0.0;
        }
        Self {
            samples,
            kind,
            params_hash: params.law_hash(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample at the mirror position `-x_i`.
    pub fn reflected(&self, i: usize) -> f64 {
        let n = self.samples.len();
        self.samples[(n - i) % n]
    }
}

/// Variance of the discrete log-correlated field: `(1/2) Σ_i k(x_i)^2 dx`.
///
/// The factor one half normalizes `k * W` so that its covariance tends to
/// `ln(L/|x|)` rather than twice that; see [`crate::synth::LOG_FIELD_SCALE`].
pub fn discrete_c_epsilon(params: &ModelParams) -> f64 {
    let grid = KernelGrid::build(KernelKind::K, params);
    discrete_c_epsilon_from(&grid, params.dx())
}

pub(crate) fn discrete_c_epsilon_from(k_grid: &KernelGrid, dx: f64) -> f64 {
    let s = crate::synth::LOG_FIELD_SCALE;
    s * s * k_grid.samples.iter().map(|k| k * k).sum::<f64>() * dx
}

/// Full discrete covariance `E[Xhat(x_h) Xhat(0)]` at every lag `h`.
pub fn log_field_covariance(params: &ModelParams) -> Result<Vec<f64>> {
    let grid = KernelGrid::build(KernelKind::K, params);
    let conv = Convolver::new(params.n)?;
    let s = crate::synth::LOG_FIELD_SCALE;
    let scale = s * s * params.dx();
    Ok(conv
        .autocorrelation(&grid.samples)?
        .into_iter()
        .map(|c| c * scale)
        .collect())
}
