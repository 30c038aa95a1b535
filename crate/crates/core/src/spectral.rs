//! Two-dimensional periodic FFT plumbing shared by the spectral derivative
//! scheme, trigonometric interpolation, and the Fourier preconditioner of the
//! geodesic solver.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Integer wavenumbers in FFT order: 0, 1, .., N/2, -N/2+1, .., -1.
    wavenumber: Vec<f64>,
}

impl Spectral {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let wavenumber = (0..n)
            .map(|p| {
                if p <= n / 2 {
                    p as f64
                } else {
                    p as f64 - n as f64
                }
            })
            .collect();
        Self {
            n,
            forward,
            inverse,
            wavenumber,
        }
    }

    pub(crate) fn wavenumber(&self, p: usize) -> f64 {
        self.wavenumber[p]
    }

    /// Angular wavenumber used for first derivatives; the Nyquist mode is
    /// dropped so that derivatives of real data stay real.
    pub(crate) fn derivative_symbol(&self, p: usize) -> f64 {
        if self.n % 2 == 0 && p == self.n / 2 {
            0.0
        } else {
            2.0 * PI * self.wavenumber[p]
        }
    }

    fn transpose(&self, buf: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                buf.swap(i * n + j, j * n + i);
            }
        }
    }

    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        fft.process(buf);
        self.transpose(buf);
        fft.process(buf);
        self.transpose(buf);
    }

    /// Forward transform of a real field stored row-major (`i` along x).
    pub(crate) fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        buf
    }

    /// Inverse transform, normalized, keeping the real part.
    pub(crate) fn inverse_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut buf, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Evaluates the real trigonometric interpolant with coefficients
    /// `coeffs` (unnormalized forward transform) at the torus point `(x, y)`.
    /// Nyquist modes are split symmetrically so the interpolant is real.
    pub(crate) fn interpolate(&self, coeffs: &[Complex64], x: f64, y: f64) -> f64 {
        let n = self.n;
        let half = n / 2;
        let ex: Vec<Complex64> = (0..n)
            .map(|p| Complex64::from_polar(1.0, 2.0 * PI * self.wavenumber[p] * x))
            .collect();
        let ey: Vec<Complex64> = (0..n)
            .map(|q| Complex64::from_polar(1.0, 2.0 * PI * self.wavenumber[q] * y))
            .collect();
        let mut acc = 0.0;
        for p in 0..n {
            let wx = if n % 2 == 0 && p == half {
                Complex64::new((PI * n as f64 * x).cos(), 0.0)
            } else {
                ex[p]
            };
            let mut row = Complex64::new(0.0, 0.0);
            for q in 0..n {
                let wy = if n % 2 == 0 && q == half {
                    Complex64::new((PI * n as f64 * y).cos(), 0.0)
                } else {
                    ey[q]
                };
                row += coeffs[p * n + q] * wy;
            }
            acc += (row * wx).re;
        }
        acc / (n * n) as f64
    }
}
