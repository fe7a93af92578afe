//! The nonlocal source term `N` of `u_t + (u²/2)_x = N[u]`.
//!
//! Every model acts as a Fourier multiplier of the form `iξ·(real even)`,
//! or `K̂(ξ)` for a tabulated odd kernel, which is what makes `N` commute with
//! differentiation and annihilate the quadratic form `∫N[g]g`.

mod kernels;
mod params;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Complex, Field, GridSpec};

pub use kernels::{bessel_kernel, fractional_kernel_constant, fractional_pv, whitham_kernel};
pub use params::{a2_params, fw_a2_params, A2Table, Branch, FwCase, OperatorParams};

/// Which sign the Whitham and Fornberg–Whitham source terms carry.
///
/// * `Default`: `N = −K∗u_x` (Whitham) and `N = +G_s∗u_x` (Fornberg–Whitham).
/// * `Alternate`: `N = +K∗u_x` (Whitham) and `N = −G_s∗u_x` (Fornberg–Whitham).
///
/// The fractional KdV and tabulated models ignore the flag. Criteria bound
/// `|N|`, so only the evolution depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    #[default]
    Default,
    Alternate,
}

/// Odd convolution kernel sampled on a uniform grid; `N[u] = K∗u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedKernel {
    spacing: f64,
    /// `K(i·spacing)` for `i = 0..`; `K(0) = 0`.
    half_samples: Vec<f64>,
}

impl TabulatedKernel {
    /// Build from samples on a uniform grid symmetric about the origin.
    pub fn new(xs: &[f64], ks: &[f64]) -> Result<Self> {
        if xs.len() != ks.len() || xs.len() < 3 || xs.len().is_multiple_of(2) {
            return Err(Error::InvalidModel(
                "tabulated kernel needs an odd number (>= 3) of paired samples".into(),
            ));
        }
        let m = xs.len() / 2;
        let h = xs[1] - xs[0];
        if !(h > 0.0) {
            return Err(Error::InvalidModel("kernel abscissae must increase".into()));
        }
        for (i, w) in xs.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
                return Err(Error::InvalidModel(format!(
                    "kernel abscissae must be uniform (gap {} at index {i})",
                    w[1] - w[0]
                )));
            }
        }
        if xs[m].abs() > 1e-9 * h {
            return Err(Error::InvalidModel("kernel grid must be centred at 0".into()));
        }
        let scale = ks.iter().fold(0.0_f64, |a, k| a.max(k.abs())).max(f64::MIN_POSITIVE);
        for i in 0..=m {
            let (left, right) = (ks[m - i], ks[m + i]);
            if (left + right).abs() > 1e-12 * scale {
                return Err(Error::InvalidModel(format!(
                    "kernel is not odd: K({}) = {right}, K({}) = {left}",
                    xs[m + i],
                    xs[m - i]
                )));
            }
        }
        let mut half_samples: Vec<f64> = ks[m..].to_vec();
        half_samples[0] = 0.0;
        Ok(Self {
            spacing: h,
            half_samples,
        })
    }

    /// Sample an odd function `k` on `[-extent, extent]` with `2m+1` points.
    pub fn from_fn(k: impl Fn(f64) -> f64, extent: f64, m: usize) -> Result<Self> {
        let h = extent / m as f64;
        let xs: Vec<f64> = (0..=2 * m).map(|i| (i as f64 - m as f64) * h).collect();
        let ks: Vec<f64> = xs.iter().map(|&x| if x == 0.0 { 0.0 } else { k(x) }).collect();
        Self::new(&xs, &ks)
    }

    /// `∫|K|` by the trapezoid rule. An odd kernel may jump at the origin, so
    /// the left end uses the one-sided limit extrapolated from `x = h, 2h`.
    pub fn l1_norm(&self) -> f64 {
        let k = &self.half_samples;
        let last = k.len() - 1;
        let start = if last >= 2 { 2.0 * k[1] - k[2] } else { k[1] };
        let interior: f64 = k[1..last].iter().map(|v| v.abs()).sum();
        2.0 * self.spacing * (0.5 * start.abs() + interior + 0.5 * k[last].abs())
    }

    /// `K̂(ξ) = −2i∫₀^∞ K(x) sin(ξx) dx` by the trapezoid rule.
    pub fn transform(&self, xi: f64) -> Complex {
        let last = self.half_samples.len() - 1;
        let mut acc = 0.0;
        for (i, k) in self.half_samples.iter().enumerate().skip(1) {
            let w = if i == last { 0.5 } else { 1.0 };
            acc += w * k * (xi * i as f64 * self.spacing).sin();
        }
        Complex::new(0.0, -2.0 * self.spacing * acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    Burgers,
    FractionalKdv { alpha: f64 },
    Whitham,
    FornbergWhitham { s: f64 },
    TabulatedOddKernel(TabulatedKernel),
}

/// Model choice plus sign convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub sign: SignConvention,
}

impl ModelSpec {
    pub fn burgers() -> Self {
        Self {
            kind: ModelKind::Burgers,
            sign: SignConvention::Default,
        }
    }

    pub fn fractional_kdv(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0 && alpha < 0.0) {
            return Err(Error::InvalidModel(format!(
                "fractional KdV exponent must lie in (-1, 0), got {alpha}"
            )));
        }
        Ok(Self {
            kind: ModelKind::FractionalKdv { alpha },
            sign: SignConvention::Default,
        })
    }

    pub fn whitham() -> Self {
        Self {
            kind: ModelKind::Whitham,
            sign: SignConvention::Default,
        }
    }

    pub fn fornberg_whitham(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidModel(format!(
                "Bessel potential order must be positive, got {s}"
            )));
        }
        Ok(Self {
            kind: ModelKind::FornbergWhitham { s },
            sign: SignConvention::Default,
        })
    }

    pub fn tabulated(kernel: TabulatedKernel) -> Self {
        Self {
            kind: ModelKind::TabulatedOddKernel(kernel),
            sign: SignConvention::Default,
        }
    }

    pub fn with_sign(mut self, sign: SignConvention) -> Self {
        self.sign = sign;
        self
    }

    /// Short identifier used in file names and reports.
    pub fn label(&self) -> String {
        match &self.kind {
            ModelKind::Burgers => "burgers".into(),
            ModelKind::FractionalKdv { alpha } => format!("fkdv(alpha={alpha})"),
            ModelKind::Whitham => "whitham".into(),
            ModelKind::FornbergWhitham { s } => format!("fornberg-whitham(s={s})"),
            ModelKind::TabulatedOddKernel(_) => "tabulated-kernel".into(),
        }
    }

    /// Multiplier values on every wavenumber of `grid` (FFT order).
    pub fn symbol_table(&self, grid: &GridSpec) -> Vec<Complex> {
        grid.wavenumbers().into_iter().map(|xi| multiplier(self, xi)).collect()
    }
}

/// Fourier symbol of `N` at wavenumber `xi`.
pub fn multiplier(model: &ModelSpec, xi: f64) -> Complex {
    if xi == 0.0 {
        return Complex::new(0.0, 0.0);
    }
    let (whitham_sign, fw_sign) = match model.sign {
        SignConvention::Default => (-1.0, 1.0),
        SignConvention::Alternate => (1.0, -1.0),
    };
    match &model.kind {
        ModelKind::Burgers => Complex::new(0.0, 0.0),
        ModelKind::FractionalKdv { alpha } => Complex::new(0.0, xi * xi.abs().powf(*alpha)),
        ModelKind::Whitham => Complex::new(0.0, whitham_sign * xi * (xi.tanh() / xi).sqrt()),
        ModelKind::FornbergWhitham { s } => Complex::new(0.0, fw_sign * xi * (1.0 + xi * xi).powf(-s / 2.0)),
        ModelKind::TabulatedOddKernel(k) => k.transform(xi),
    }
}

/// `N[g]` realized spectrally.
pub fn apply_n(model: &ModelSpec, g: &Field) -> Field {
    if matches!(model.kind, ModelKind::Burgers) {
        return Field::zeros(*g.grid());
    }
    let table = model.symbol_table(g.grid());
    g.map_spectrum(|_, i| table[i])
}

/// Residuals of the two structural identities `N[g]' = N[g']` and `∫N[g]g = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A1Check {
    pub commute_error: f64,
    pub orthogonality_error: f64,
}

pub fn verify_a1(model: &ModelSpec, g: &Field) -> A1Check {
    let ng = apply_n(model, g);
    let lhs = ng.derivative(1);
    let rhs = apply_n(model, &g.derivative(1));
    let commute_error = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    A1Check {
        commute_error,
        orthogonality_error: ng.inner(g).abs(),
    }
}

/// `max_k |multiplier(ξ_k)|` on a grid; the natural scale of `N`.
pub fn max_multiplier(model: &ModelSpec, grid: &GridSpec) -> f64 {
    model.symbol_table(grid).iter().fold(0.0, |m, c| m.max(c.norm()))
}
