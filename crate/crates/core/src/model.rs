//! Model parameters and the closed-form predictions that follow from them:
//! scaling spectrum, moment-existence thresholds and Hölder regularity.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Which field law a parameter set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Fractional kernel applied to the GMC-weighted, self-coupled noise.
    Skewed,
    /// Fractional kernel applied to plain white noise.
    GaussianBaseline,
}

impl Variant {
    pub fn tag(self) -> u8 {
        match self {
            Variant::Skewed => 0,
            Variant::GaussianBaseline => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Variant::Skewed),
            1 => Some(Variant::GaussianBaseline),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Skewed => "skewed",
            Variant::GaussianBaseline => "gaussian",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "skewed" => Ok(Variant::Skewed),
            "gaussian" | "gaussian_baseline" | "baseline" => Ok(Variant::GaussianBaseline),
            other => Err(Error::param("variant", format!("unknown variant `{other}`"))),
        }
    }
}

/// Full parameter set of one field law on the periodic unit grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Hurst exponent of the fractional kernel.
    pub h: f64,
    /// Intermittency coefficient.
    pub gamma: f64,
    /// Extra exponent of the coupling kernel; zero gives the base model.
    pub h_tilde: f64,
    /// Cutoff length of both kernels, as a fraction of the periodic domain.
    pub length: f64,
    /// Small-scale regularization length.
    pub epsilon: f64,
    /// Number of grid cells (power of two).
    pub n: usize,
    pub seed: u64,
    pub variant: Variant,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        finite("H", self.h)?;
        finite("gamma", self.gamma)?;
        finite("Htilde", self.h_tilde)?;
        finite("L", self.length)?;
        finite("epsilon", self.epsilon)?;

        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(Error::param("H", format!("{} not in (0, 1)", self.h)));
        }
        if self.gamma < 0.0 {
            return Err(Error::param("gamma", "must be non-negative"));
        }
        if 2.0 * self.gamma * self.gamma >= 1.0 {
            return Err(Error::param("gamma", "2 gamma^2 must be < 1"));
        }
        if self.h_tilde < 0.0 {
            return Err(Error::param("Htilde", "must be non-negative"));
        }
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(Error::param("N", format!("{} is not a power of two >= 4", self.n)));
        }
        if !(self.length > 0.0 && self.length <= 0.5) {
            return Err(Error::param("L", format!("{} not in (0, 1/2]", self.length)));
        }
        // Tolerate the rounding of `2.0 / n` written as a decimal.
        if self.epsilon <= 0.0 || self.epsilon < self.dx() * 2.0 * (1.0 - 1e-12) {
            return Err(Error::param(
                "epsilon",
                format!("{} is below two grid cells ({})", self.epsilon, 2.0 * self.dx()),
            ));
        }
        if self.epsilon >= self.length {
            return Err(Error::param("epsilon", "must be smaller than L"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma * self.gamma
    }

    /// True when H = 1/2, where the small-scale equivalents degenerate.
    pub fn is_degenerate_half(&self) -> bool {
        (self.h - 0.5).abs() < 1e-12
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Grid of `n` cells with the regularization pinned at two cells.
    pub fn with_grid(mut self, n: usize) -> Self {
        self.n = n;
        self.epsilon = 2.0 / n as f64;
        self
    }

    /// Short hex digest of the law-defining fields (seed excluded).
    pub fn law_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.h.to_le_bytes());
        hasher.update(self.gamma.to_le_bytes());
        hasher.update(self.h_tilde.to_le_bytes());
        hasher.update(self.length.to_le_bytes());
        hasher.update(self.epsilon.to_le_bytes());
        hasher.update((self.n as u64).to_le_bytes());
        hasher.update([self.variant.tag()]);
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Scaling exponent of the absolute increment moment of order `q`.
pub fn xi_spectrum(q: f64, params: &ModelParams) -> f64 {
    match params.variant {
        Variant::GaussianBaseline => q * params.h,
        Variant::Skewed => {
            let g2 = params.gamma2();
            (params.h + params.h_tilde + 2.0 * g2) * q - 2.0 * g2 * q * q
        }
    }
}

/// Largest order for which absolute moments stay bounded as the
/// regularization vanishes; `+inf` when there is no intermittency.
pub fn moment_existence_bound(params: &ModelParams) -> f64 {
    let g2 = params.gamma2();
    if params.variant == Variant::GaussianBaseline || g2 == 0.0 {
        return f64::INFINITY;
    }
    let chaos = 1.0 / (2.0 * g2);
    let kernel = 1.0 + (params.h + params.h_tilde) / (2.0 * g2);
    chaos.min(kernel)
}

/// Signed third moments exist iff gamma^2 < 1/8, whatever H.
pub fn third_moment_exists(params: &ModelParams) -> bool {
    params.gamma2() < 0.125
}

/// Lower bound on the local Hölder exponent of sample paths, when the
/// sufficient condition `H + (sqrt(2) gamma - 1)^2 > 1` holds.
///
/// This is a regularity guarantee, not the exact exponent.
pub fn holder_exponent(params: &ModelParams) -> Option<f64> {
    let s = std::f64::consts::SQRT_2 * params.gamma - 1.0;
    let margin = params.h + s * s - 1.0;
    (margin > 0.0).then_some(margin)
}

/// Parameters matching turbulence: 4 gamma^2 = 0.025, H = 1/3 + 4 gamma^2,
/// so that xi(3) = 1; on a 2^20 grid with L = 1/3 and epsilon = 2 dx.
pub fn turbulence_preset() -> ModelParams {
    let four_g2 = 0.025;
    let n = 1 << 20;
    ModelParams {
        h: 1.0 / 3.0 + four_g2,
        gamma: four_g2.sqrt() / 2.0,
        h_tilde: 0.0,
        length: 1.0 / 3.0,
        epsilon: 2.0 / n as f64,
        n,
        seed: 0,
        variant: Variant::Skewed,
    }
}
