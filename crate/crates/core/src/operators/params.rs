//! Constants in the pointwise bound
//! `‖N[g]‖∞ ≤ λ₁η^{−α₁}‖g‖∞ + λ₂η^{α₂}‖g′‖₂ + λ₃η^{α₃}‖g′‖∞`, `η ∈ (0, η₀)`,
//! for each supported model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::special::gamma_fn;

/// One optional term `λ η^{α} (...)` of the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub lambda: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub lambda1: f64,
    pub alpha1: f64,
    /// `λ₂η^{α₂}‖g′‖₂` term.
    pub l2_branch: Option<Branch>,
    /// `λ₃η^{α₃}‖g′‖∞` term.
    pub linf_branch: Option<Branch>,
    /// Upper end of the admissible η range (`f64::INFINITY` when unbounded).
    pub eta0: f64,
}

impl OperatorParams {
    /// Whether `α₁ < min{2α₂, 3α₃/2}` over the present branches.
    pub fn theorem_applicable(&self) -> bool {
        let mut ceiling = f64::INFINITY;
        if let Some(b) = self.l2_branch {
            ceiling = ceiling.min(2.0 * b.alpha);
        }
        if let Some(b) = self.linf_branch {
            ceiling = ceiling.min(1.5 * b.alpha);
        }
        self.alpha1 > 0.0 && self.alpha1 < ceiling
    }

    /// Right side of the bound at scale `eta`.
    pub fn bound(&self, eta: f64, g_sup: f64, dg_l2: f64, dg_sup: f64) -> f64 {
        let mut total = self.lambda1 * eta.powf(-self.alpha1) * g_sup;
        if let Some(b) = self.l2_branch {
            total += b.lambda * eta.powf(b.alpha) * dg_l2;
        }
        if let Some(b) = self.linf_branch {
            total += b.lambda * eta.powf(b.alpha) * dg_sup;
        }
        total
    }
}

/// The bound for a model: either the η-interpolation form or the plain
/// `‖N[g]‖∞ ≤ λ₁‖g‖∞` form (integrable kernels, Bessel order above one).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum A2Table {
    Interpolation(OperatorParams),
    Bounded { lambda1: f64 },
}

/// Regimes of the Fornberg–Whitham bound, by Bessel order `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum FwCase {
    /// `s ∈ (2/5, 1)`, sup-norm derivative branch.
    I,
    /// `s ∈ (2/3, 1)`, L² derivative branch.
    II,
    /// `s = 1` with auxiliary exponent `τ ∈ (2/3, 1)`.
    III { tau: f64 },
    /// `s > 1`, bounded operator.
    IV,
}

impl FwCase {
    pub fn label(&self) -> &'static str {
        match self {
            FwCase::I => "fw-case-i",
            FwCase::II => "fw-case-ii",
            FwCase::III { .. } => "fw-case-iii",
            FwCase::IV => "fw-case-iv",
        }
    }
}

/// Bound constants for the Fornberg–Whitham operator in a given regime.
pub fn fw_a2_params(s: f64, case: FwCase) -> Result<A2Table> {
    match case {
        FwCase::I => {
            if !(s > 0.4 && s < 1.0) {
                return Err(Error::UnsupportedCase(format!(
                    "Fornberg-Whitham case (i) needs s in (2/5, 1), got {s}"
                )));
            }
            let g = gamma_fn(s)?;
            let c = 2f64.powf(1.0 - s);
            Ok(A2Table::Interpolation(OperatorParams {
                lambda1: c * g,
                alpha1: 1.0 - s,
                l2_branch: None,
                linf_branch: Some(Branch {
                    lambda: c * (1.0 + s) * g / s,
                    alpha: s,
                }),
                eta0: f64::INFINITY,
            }))
        }
        FwCase::II => {
            if !(s > 2.0 / 3.0 && s < 1.0) {
                return Err(Error::UnsupportedCase(format!(
                    "Fornberg-Whitham case (ii) needs s in (2/3, 1), got {s}"
                )));
            }
            let g = gamma_fn(s)?;
            Ok(A2Table::Interpolation(OperatorParams {
                lambda1: 2f64.powf(2.0 - s) * g,
                alpha1: 1.0 - s,
                l2_branch: Some(Branch {
                    lambda: 2f64.powf(0.5 - s) * g / (2.0 * s - 1.0).sqrt(),
                    alpha: s - 0.5,
                }),
                linf_branch: None,
                eta0: f64::INFINITY,
            }))
        }
        FwCase::III { tau } => {
            if s != 1.0 {
                return Err(Error::UnsupportedCase(format!(
                    "Fornberg-Whitham case (iii) needs s = 1, got {s}"
                )));
            }
            if !(tau > 2.0 / 3.0 && tau < 1.0) {
                return Err(Error::UnsupportedCase(format!(
                    "Fornberg-Whitham case (iii) needs tau in (2/3, 1), got {tau}"
                )));
            }
            let lambda = 4.0 / (PI * (1.0 - tau));
            Ok(A2Table::Interpolation(OperatorParams {
                lambda1: lambda,
                alpha1: 1.0 - tau,
                l2_branch: Some(Branch {
                    lambda,
                    alpha: tau - 0.5,
                }),
                linf_branch: None,
                eta0: 1.0,
            }))
        }
        FwCase::IV => {
            if !(s > 1.0) {
                return Err(Error::UnsupportedCase(format!(
                    "Fornberg-Whitham case (iv) needs s > 1, got {s}"
                )));
            }
            Ok(A2Table::Bounded { lambda1: gamma_fn(s)? })
        }
    }
}

/// Default bound table for a model. Fornberg–Whitham picks case (i) on
/// `(2/5, 1)` and case (iv) above one; `s = 1` needs an explicit `τ` through
/// [`fw_a2_params`].
pub fn a2_params(model: &ModelSpec) -> Result<A2Table> {
    match &model.kind {
        ModelKind::Burgers => Ok(A2Table::Bounded { lambda1: 0.0 }),
        ModelKind::FractionalKdv { alpha } => {
            let alpha = *alpha;
            if !(alpha > -1.0 && alpha < 0.0) {
                return Err(Error::UnsupportedCase(format!(
                    "fractional KdV bound needs alpha in (-1, 0), got {alpha}"
                )));
            }
            Ok(A2Table::Interpolation(OperatorParams {
                lambda1: 4.0 / (1.0 + alpha),
                alpha1: 1.0 + alpha,
                l2_branch: None,
                linf_branch: Some(Branch {
                    lambda: 2.0 / alpha.abs(),
                    alpha: -alpha,
                }),
                eta0: f64::INFINITY,
            }))
        }
        ModelKind::Whitham => {
            let l = (2.0 / PI).sqrt();
            Ok(A2Table::Interpolation(OperatorParams {
                lambda1: l,
                alpha1: 0.5,
                l2_branch: None,
                linf_branch: Some(Branch {
                    lambda: 3.0 * l,
                    alpha: 0.5,
                }),
                eta0: f64::INFINITY,
            }))
        }
        ModelKind::FornbergWhitham { s } => {
            let s = *s;
            if s > 0.4 && s < 1.0 {
                fw_a2_params(s, FwCase::I)
            } else if s == 1.0 {
                Err(Error::UnsupportedCase(
                    "Fornberg-Whitham with s = 1 needs an auxiliary tau in (2/3, 1)".into(),
                ))
            } else if s > 1.0 {
                fw_a2_params(s, FwCase::IV)
            } else {
                Err(Error::UnsupportedCase(format!(
                    "no proved bound for Fornberg-Whitham with s in (0, 2/5], got {s}"
                )))
            }
        }
        ModelKind::TabulatedOddKernel(k) => Ok(A2Table::Bounded { lambda1: k.l1_norm() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interp(t: A2Table) -> OperatorParams {
        match t {
            A2Table::Interpolation(p) => p,
            other => panic!("expected interpolation table, got {other:?}"),
        }
    }

    #[test]
    fn fkdv_table() {
        let p = interp(a2_params(&ModelSpec::fractional_kdv(-0.5).unwrap()).unwrap());
        assert_eq!(p.lambda1, 8.0);
        assert_eq!(p.alpha1, 0.5);
        let b = p.linf_branch.unwrap();
        assert_eq!((b.lambda, b.alpha), (4.0, 0.5));
        assert!(p.eta0.is_infinite());
        assert!(p.theorem_applicable());
    }

    #[test]
    fn whitham_table() {
        let p = interp(a2_params(&ModelSpec::whitham()).unwrap());
        let l = (2.0 / PI).sqrt();
        assert_eq!(p.lambda1, l);
        assert_eq!(p.linf_branch.unwrap().lambda, 3.0 * l);
        assert_eq!((p.alpha1, p.linf_branch.unwrap().alpha), (0.5, 0.5));
    }

    #[test]
    fn fw_case_tables() {
        let g = gamma_fn(0.8).unwrap();
        let p = interp(fw_a2_params(0.8, FwCase::I).unwrap());
        assert!((p.alpha1 - 0.2).abs() < 1e-15);
        assert_eq!(p.linf_branch.unwrap().alpha, 0.8);
        assert!((p.lambda1 - 2f64.powf(0.2) * g).abs() < 1e-14);
        assert!((p.linf_branch.unwrap().lambda - 2f64.powf(0.2) * 1.8 / 0.8 * g).abs() < 1e-13);

        let p = interp(fw_a2_params(1.0, FwCase::III { tau: 0.8 }).unwrap());
        assert_eq!(p.eta0, 1.0);
        assert!(p.theorem_applicable());

        assert_eq!(
            fw_a2_params(2.0, FwCase::IV).unwrap(),
            A2Table::Bounded {
                lambda1: gamma_fn(2.0).unwrap()
            }
        );
    }

    #[test]
    fn unsupported_ranges() {
        assert!(a2_params(&ModelSpec::fornberg_whitham(0.3).unwrap()).is_err());
        assert!(a2_params(&ModelSpec::fornberg_whitham(1.0).unwrap()).is_err());
        assert!(fw_a2_params(0.6, FwCase::II).is_err());
        assert!(fw_a2_params(1.0, FwCase::III { tau: 0.5 }).is_err());
        assert!(fw_a2_params(0.9, FwCase::IV).is_err());
    }
}
