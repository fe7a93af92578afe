//! Periodic Fourier substrate.
//!
//! A [`GridSpec`] describes the box `[-L, L)` sampled at `n` equispaced
//! points. A [`Field`] holds real samples together with their discrete
//! spectrum (unnormalized forward DFT, FFT index order). All operations are
//! pure; FFT plans are cached per thread.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use rustfft::num_complex::Complex64 as Complex;

/// Periodic computational domain `[-half_width, half_width)` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    n: usize,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 16;

    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if n < Self::MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Signed integer mode of FFT index `idx`; the Nyquist index maps to `-n/2`.
    pub fn mode(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let k = idx as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        PI * self.mode(idx) as f64 / self.half_width
    }

    /// Wavenumbers `ξ_k = πk/L` in FFT index order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Largest mode kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Largest representable wavenumber magnitude.
    pub fn max_wavenumber(&self) -> f64 {
        PI * (self.n / 2) as f64 / self.half_width
    }

    /// Same box with twice the resolution.
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            n: self.n * 2,
        }
    }
}

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, Plans>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(n: usize) -> Plans {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry(n)
            .or_insert_with(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
            .clone()
    })
}

/// Unnormalized forward DFT of real samples.
pub(crate) fn forward(values: &[f64]) -> Vec<Complex> {
    let mut buf: Vec<Complex> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    plans(values.len()).0.process(&mut buf);
    buf
}

/// Inverse DFT (with `1/n`), real part.
pub(crate) fn inverse_real(spectrum: &[Complex]) -> Vec<f64> {
    let n = spectrum.len();
    let mut buf = spectrum.to_vec();
    plans(n).1.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Project a spectrum onto the Hermitian-symmetric subspace.
pub(crate) fn symmetrize(spectrum: &mut [Complex]) {
    let n = spectrum.len();
    spectrum[0].im = 0.0;
    spectrum[n / 2].im = 0.0;
    for k in 1..n / 2 {
        let a = spectrum[k];
        let b = spectrum[n - k].conj();
        let avg = (a + b) * 0.5;
        spectrum[k] = avg;
        spectrum[n - k] = avg.conj();
    }
}

/// Sup norm, infimum and squared L² norm of sampled values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub sup_norm: f64,
    pub inf_value: f64,
    pub l2_norm_squared: f64,
}

/// Real periodic field with its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
    spectrum: Vec<Complex>,
}

impl Field {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        let spectrum = forward(&values);
        Ok(Self { grid, values, spectrum })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.points().into_iter().map(f).collect();
        let spectrum = forward(&values);
        Self { grid, values, spectrum }
    }

    /// Build a field from spectral coefficients. The imaginary (anti-Hermitian)
    /// part is discarded.
    pub fn from_spectrum(grid: GridSpec, mut spectrum: Vec<Complex>) -> Result<Self> {
        if spectrum.len() != grid.n() {
            return Err(Error::GridMismatch {
                expected: grid.n(),
                got: spectrum.len(),
            });
        }
        symmetrize(&mut spectrum);
        let values = inverse_real(&spectrum);
        Ok(Self { grid, values, spectrum })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n()],
            spectrum: vec![Complex::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spectrum(&self) -> &[Complex] {
        &self.spectrum
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Multiply every coefficient by `symbol(ξ_k, k)`.
    pub fn map_spectrum(&self, symbol: impl Fn(f64, usize) -> Complex) -> Field {
        let spectrum = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(self.grid.wavenumber(i), i))
            .collect();
        Field::from_spectrum(self.grid, spectrum).expect("same grid")
    }

    /// Spectral derivative of the given order. The Nyquist coefficient is
    /// dropped for every order so that repeated first derivatives agree with
    /// higher-order ones.
    pub fn derivative(&self, order: u32) -> Field {
        if order == 0 {
            return self.clone();
        }
        let nyq = self.grid.nyquist_index();
        self.map_spectrum(|xi, i| {
            if i == nyq {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(0.0, xi).powu(order)
            }
        })
    }

    pub fn norms(&self) -> Norms {
        if self.values.is_empty() {
            return Norms {
                sup_norm: 0.0,
                inf_value: 0.0,
                l2_norm_squared: 0.0,
            };
        }
        let sup_norm = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let inf_value = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let l2_norm_squared = self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>();
        Norms {
            sup_norm,
            inf_value,
            l2_norm_squared,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.norms().sup_norm
    }

    pub fn l2_norm(&self) -> f64 {
        self.norms().l2_norm_squared.sqrt()
    }

    /// Index of the smallest sample.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Index of the sample with largest magnitude.
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = i;
            }
        }
        best
    }

    /// Rectangle-rule inner product `dx·Σ f g`.
    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.dx() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.spectrum[0].re / self.grid.n() as f64
    }

    /// Zero every mode above the 2/3 cutoff (Nyquist included).
    pub fn dealias(&self) -> Field {
        let cutoff = self.grid.dealias_cutoff();
        let spectrum = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if self.grid.mode(i).abs() > cutoff {
                    Complex::new(0.0, 0.0)
                } else {
                    *c
                }
            })
            .collect();
        Field::from_spectrum(self.grid, spectrum).expect("same grid")
    }

    /// Fraction of spectral energy in the top eighth of the retained band
    /// (and anything above it).
    pub fn tail_ratio(&self) -> f64 {
        tail_ratio_of(&self.grid, &self.spectrum)
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
            spectrum: self.spectrum.iter().map(|c| c * a).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            spectrum: self
                .spectrum
                .iter()
                .zip(&other.spectrum)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        }
    }

    /// Zero-mean periodic antiderivative (the mean is discarded).
    pub fn antiderivative(&self) -> Field {
        let nyq = self.grid.nyquist_index();
        self.map_spectrum(|xi, i| {
            if i == 0 || i == nyq {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(0.0, -1.0 / xi)
            }
        })
    }

    /// Trigonometric interpolant evaluated at an arbitrary (periodically
    /// wrapped) position.
    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate_spectrum(&self.grid, &self.spectrum, x)
    }

    /// Supremum of `|f|` refined off-grid by golden-section search on the
    /// trigonometric interpolant around the largest sample.
    pub fn refined_sup_abs(&self) -> f64 {
        let j = self.argmax_abs();
        let x0 = self.grid.point(j);
        let dx = self.grid.dx();
        let f = |x: f64| self.interpolate(x).abs();
        let (mut a, mut b) = (x0 - dx, x0 + dx);
        let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = f(d);
            }
            if (b - a) < 1e-13 * dx.max(1.0) {
                break;
            }
        }
        fc.max(fd).max(self.values[j].abs())
    }
}

pub(crate) fn tail_ratio_of(grid: &GridSpec, spectrum: &[Complex]) -> f64 {
    let cutoff = grid.dealias_cutoff();
    let band_start = (7 * cutoff) / 8;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (i, c) in spectrum.iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        if grid.mode(i).abs() > band_start {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

pub(crate) fn interpolate_spectrum(grid: &GridSpec, spectrum: &[Complex], x: f64) -> f64 {
    let n = grid.n();
    let theta = PI * (x + grid.half_width()) / grid.half_width();
    let step = Complex::from_polar(1.0, theta);
    let mut z = Complex::new(1.0, 0.0);
    let mut acc = spectrum[0].re;
    for k in 1..n / 2 {
        if k % 64 == 0 {
            z = Complex::from_polar(1.0, theta * k as f64);
        } else {
            z *= step;
        }
        // Mode k and its conjugate partner -k.
        acc += (spectrum[k] * z).re + (spectrum[n - k] * z.conj()).re;
    }
    let nyq = spectrum[n / 2];
    acc += nyq.re * (theta * (n / 2) as f64).cos();
    acc / n as f64
}
