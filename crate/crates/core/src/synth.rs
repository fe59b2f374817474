//! Field synthesis on the periodic grid.
//!
//! Two independent white fields `W` and `What` drive one realization.
//! `What` builds the log-correlated field `Xhat = (k * What) / sqrt(2)` and
//! the chaos weight `g = exp(gamma Xhat - gamma^2 c_eps)`; `W` carries the
//! weight into both the coupling field `X = k * (g W)` and the final field
//! `u = phi * (X g W)`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::conv::{Convolver, KernelSpectrum, Semantics};
use crate::error::{Error, Result};
use crate::kernels::{discrete_c_epsilon_from, KernelGrid, KernelKind};
use crate::model::{ModelParams, Variant};

/// Scale applied to `k * What`. The continuous kernel gives a covariance of
/// `2 ln(L/|x|)`; the model needs `ln(L/|x|)`.
pub const LOG_FIELD_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Largest admissible exponent in the chaos weight.
pub const GMC_EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseStream {
    W = 0,
    What = 1,
}

/// ChaCha20 generator for one replicate and one noise role.
///
/// The key is derived from `seed`; the 64-bit stream number is
/// `2 * replicate + role`, so every (replicate, role) pair reads a disjoint
/// keystream and results do not depend on scheduling.
pub fn stream_rng(seed: u64, replicate: u64, role: NoiseStream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate.wrapping_mul(2).wrapping_add(role as u64));
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePair {
    pub w: Vec<f64>,
    pub w_hat: Vec<f64>,
}

fn white(n: usize, dx: f64, mut rng: ChaCha20Rng) -> Vec<f64> {
    let sd = dx.sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * sd
        })
        .collect()
}

/// Two independent white fields with per-cell variance `dx`.
pub fn sample_noise_pair(params: &ModelParams, replicate: u64) -> NoisePair {
    let dx = params.dx();
    NoisePair {
        w: white(params.n, dx, stream_rng(params.seed, replicate, NoiseStream::W)),
        w_hat: white(params.n, dx, stream_rng(params.seed, replicate, NoiseStream::What)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub samples: Vec<f64>,
    pub params: ModelParams,
    pub rng_stream_id: u64,
    pub model: Variant,
}

impl FieldRealization {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Plans and kernel spectra shared by every realization of one law.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    params: ModelParams,
    conv: Convolver,
    phi: KernelSpectrum,
    k: KernelSpectrum,
    c_epsilon: f64,
}

impl Synthesizer {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let conv = Convolver::new(params.n)?;
        let phi_grid = KernelGrid::build(KernelKind::Phi, params);
        let k_grid = KernelGrid::build(KernelKind::K, params);
        Ok(Self {
            params: *params,
            phi: conv.spectrum(&phi_grid)?,
            k: conv.spectrum(&k_grid)?,
            c_epsilon: discrete_c_epsilon_from(&k_grid, params.dx()),
            conv,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn c_epsilon(&self) -> f64 {
        self.c_epsilon
    }

    /// Log-correlated field `Xhat` built from `What`.
    pub fn log_field(&self, w_hat: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.conv.convolve(&self.k, w_hat, Semantics::Measure)?;
        x.iter_mut().for_each(|v| *v *= LOG_FIELD_SCALE);
        Ok(x)
    }

    /// Per-cell chaos weight `exp(gamma Xhat - gamma^2 c_eps)`.
    pub fn gmc_weight(&self, w_hat: &[f64]) -> Result<Vec<f64>> {
        let gamma = self.params.gamma;
        if gamma == 0.0 {
            return Ok(vec![1.0; w_hat.len()]);
        }
        let x_hat = self.log_field(w_hat)?;
        let peak = x_hat.iter().fold(f64::NEG_INFINITY, |m, v| m.max(gamma * v));
        if peak > GMC_EXPONENT_LIMIT {
            return Err(Error::GmcOverflow(peak));
        }
        let shift = gamma * gamma * self.c_epsilon;
        Ok(x_hat.into_iter().map(|x| (gamma * x - shift).exp()).collect())
    }

    pub fn assemble(&self, noise: &NoisePair) -> Result<Vec<f64>> {
        let n = self.params.n;
        for len in [noise.w.len(), noise.w_hat.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        match self.params.variant {
            Variant::GaussianBaseline => self.conv.convolve(&self.phi, &noise.w, Semantics::Measure),
            Variant::Skewed => {
                let g = self.gmc_weight(&noise.w_hat)?;
                let weighted: Vec<f64> = g.iter().zip(&noise.w).map(|(g, w)| g * w).collect();
                let coupling = self.conv.convolve(&self.k, &weighted, Semantics::Measure)?;
                let source: Vec<f64> = coupling.iter().zip(&weighted).map(|(x, gw)| x * gw).collect();
                self.conv.convolve(&self.phi, &source, Semantics::Measure)
            }
        }
    }

    pub fn realize(&self, replicate: u64) -> Result<FieldRealization> {
        let noise = sample_noise_pair(&self.params, replicate);
        Ok(FieldRealization {
            samples: self.assemble(&noise)?,
            params: self.params,
            rng_stream_id: replicate,
            model: self.params.variant,
        })
    }
}

/// Convenience wrapper around [`Synthesizer::gmc_weight`].
pub fn gmc_weight(w_hat: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    if params.variant != Variant::Skewed {
        return Err(Error::param("variant", "chaos weight requires the skewed variant"));
    }
    Synthesizer::new(params)?.gmc_weight(w_hat)
}

pub fn synthesize(params: &ModelParams, replicate: u64) -> Result<FieldRealization> {
    Synthesizer::new(params)?.realize(replicate)
}

/// Exact ensemble variance of the discrete field at one point.
///
/// Conditionally on `Xhat` the skewed field is a second-chaos functional of
/// `W`; with `k(0) = 0` Wick's rule leaves
/// `dx^2 Σ_h w_h (A_0 - A_h)` where `A` is the autocorrelation of the
/// `phi` grid and `w_h = k_h^2 exp(4 gamma^2 C_h)`.
pub fn discrete_variance(params: &ModelParams) -> Result<f64> {
    let grid = KernelGrid::build(KernelKind::Phi, params);
    discrete_second_moment(params, &grid.samples)
}

/// Exact ensemble mean of `(u(x + lag dx) - u(x))^2` for the discrete field.
pub fn discrete_increment_variance(params: &ModelParams, lag: usize) -> Result<f64> {
    let n = params.n;
    if lag == 0 || lag >= n {
        return Err(Error::LagOutOfRange { lag, n });
    }
    let phi = KernelGrid::build(KernelKind::Phi, params);
    // The increment of the field is the field of the differenced kernel.
    let diff: Vec<f64> = (0..n)
        .map(|i| phi.samples[(i + n - lag) % n] - phi.samples[i])
        .collect();
    discrete_second_moment(params, &diff)
}

fn discrete_second_moment(params: &ModelParams, kernel: &[f64]) -> Result<f64> {
    params.validate()?;
    let conv = Convolver::new(params.n)?;
    let dx = params.dx();
    let auto = conv.autocorrelation(kernel)?;
    match params.variant {
        Variant::GaussianBaseline => Ok(auto[0] * dx),
        Variant::Skewed => {
            let k = KernelGrid::build(KernelKind::K, params);
            let cov = crate::kernels::log_field_covariance(params)?;
            let four_g2 = 4.0 * params.gamma2();
            let total: f64 = (0..params.n)
                .map(|h| {
                    let kh = k.samples[h];
                    if kh == 0.0 {
                        0.0
                    } else {
                        kh * kh * (four_g2 * cov[h]).exp() * (auto[0] - auto[h])
                    }
                })
                .sum();
            Ok(total * dx * dx)
        }
    }
}
