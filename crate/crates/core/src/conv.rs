//! Periodic convolution through real FFTs.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};
use crate::kernels::KernelGrid;

/// How the convolved field is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    /// Samples are function values: the sum is weighted by `dx` so the
    /// result approximates `∫ k(x - y) f(y) dy`.
    Density,
    /// Samples already carry their cell measure (white-noise increments):
    /// the plain sum `Σ_j k(x_i - x_j) f_j` is returned.
    Measure,
}

/// Cached forward/inverse plans for one grid size.
#[derive(Clone)]
pub struct Convolver {
    n: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver").field("n", &self.n).finish()
    }
}

/// Spectrum of a kernel grid, ready to multiply.
#[derive(Debug, Clone)]
pub struct KernelSpectrum {
    n: usize,
    bins: Vec<Complex<f64>>,
}

impl Convolver {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    /// Unnormalized forward transform of a real signal.
    pub fn forward(&self, signal: &[f64]) -> Result<Vec<Complex<f64>>> {
        self.check(signal.len())?;
        let mut input = signal.to_vec();
        let mut out = self.forward.make_output_vec();
        self.forward
            .process(&mut input, &mut out)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(out)
    }

    /// Inverse transform, normalized so that `inverse(forward(x)) == x`.
    pub fn inverse(&self, mut bins: Vec<Complex<f64>>) -> Result<Vec<f64>> {
        // The imaginary parts of the DC and Nyquist bins must vanish for a
        // real signal; drop rounding residue rather than erroring.
        bins[0].im = 0.0;
        if let Some(last) = bins.last_mut() {
            last.im = 0.0;
        }
        let mut out = self.inverse.make_output_vec();
        self.inverse
            .process(&mut bins, &mut out)
            .map_err(|e| Error::Format(e.to_string()))?;
        let scale = 1.0 / self.n as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }

    pub fn spectrum(&self, kernel: &KernelGrid) -> Result<KernelSpectrum> {
        Ok(KernelSpectrum {
            n: self.n,
            bins: self.forward(&kernel.samples)?,
        })
    }

    pub fn convolve(
        &self,
        kernel: &KernelSpectrum,
        field: &[f64],
        semantics: Semantics,
    ) -> Result<Vec<f64>> {
        self.check(kernel.n)?;
        let mut bins = self.forward(field)?;
        for (b, k) in bins.iter_mut().zip(&kernel.bins) {
            *b *= *k;
        }
        let mut out = self.inverse(bins)?;
        if semantics == Semantics::Density {
            let dx = 1.0 / self.n as f64;
            out.iter_mut().for_each(|v| *v *= dx);
        }
        Ok(out)
    }

    /// Periodic autocorrelation `Σ_t a_t a_{t+h}` for every lag `h`.
    pub fn autocorrelation(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let mut bins = self.forward(signal)?;
        for b in bins.iter_mut() {
            *b = Complex::new(b.norm_sqr(), 0.0);
        }
        self.inverse(bins)
    }
}

/// One-shot periodic convolution of a kernel grid with a field.
pub fn circular_convolve(
    kernel: &KernelGrid,
    field: &[f64],
    semantics: Semantics,
) -> Result<Vec<f64>> {
    let n = field.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    if kernel.samples.len() != n {
        return Err(Error::LengthMismatch {
            expected: kernel.samples.len(),
            got: n,
        });
    }
    let conv = Convolver::new(n)?;
    let spec = conv.spectrum(kernel)?;
    conv.convolve(&spec, field, semantics)
}
