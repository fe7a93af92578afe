//! Explicit wave-breaking criteria and the predicted blow-up interval.
//!
//! Every criterion has the shape `−inf ū′ > threshold`. The general criterion
//! contains the shape ratio `γ = −inf ū′/‖ū′‖∞` on its right side, so the
//! threshold reported here is the *critical slope* `m_c` solving
//! `m = T(m)` where `T` is the right side with `γ = m/‖ū′‖∞`. Because `T` is
//! decreasing in `m`, `lhs > T(lhs)` holds exactly when `lhs > m_c`; the
//! literal `T(lhs)` is kept alongside for reference. With this convention the
//! model-specific closed forms coincide with the general one.

mod gagliardo;

pub use gagliardo::{estimate_cgn, rayleigh_quotient, CgnConfig, CgnEstimate, SeedResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{fw_a2_params, A2Table, FwCase, OperatorParams};
use crate::special::gamma_fn;
use crate::spectral::Field;

/// Derived exponents `ᾱ₂`, `ᾱ₃` and the ceiling `θ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha2_bar: Option<f64>,
    pub alpha3_bar: Option<f64>,
    pub theta0: f64,
    /// Neither derivative branch is present; the square-root criterion with
    /// `θ₀ = 1` applies instead.
    pub l1_path: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionConstants {
    pub c2: f64,
    pub c3: f64,
    pub c_gn: f64,
}

/// Norms of the initial data entering every criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    /// `−inf ū′`.
    pub slope: f64,
    /// `‖ū′‖∞`.
    pub slope_sup: f64,
    /// `‖ū″‖₂`.
    pub d2_l2: f64,
    /// `‖ū‴‖₂`.
    pub d3_l2: f64,
}

impl DataNorms {
    pub fn of(u: &Field) -> Self {
        let d1 = u.derivative(1).norms();
        Self {
            slope: -d1.inf_value,
            slope_sup: d1.sup_norm,
            d2_l2: u.derivative(2).l2_norm(),
            d3_l2: u.derivative(3).l2_norm(),
        }
    }

    pub fn gamma(&self) -> f64 {
        if self.slope_sup > 0.0 {
            self.slope / self.slope_sup
        } else {
            0.0
        }
    }

    fn require_decreasing(&self) -> Result<()> {
        if self.slope > 0.0 && self.slope.is_finite() {
            Ok(())
        } else {
            Err(Error::NotApplicable(format!(
                "initial slope must be negative somewhere (inf u' = {})",
                -self.slope
            )))
        }
    }
}

/// Threshold of one case, kept when several cases are compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseThreshold {
    pub case_label: String,
    pub rhs: f64,
    pub theta0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gamma_u: f64,
    pub theta: f64,
    pub theta0: f64,
    pub holds: bool,
    pub t_lo: f64,
    pub t_hi: f64,
    pub case_label: String,
    pub c_gn: Option<f64>,
    /// Right side evaluated literally at the measured `γ`.
    #[serde(skip)]
    pub literal_rhs: f64,
    /// Every case that was evaluated, including the reported one.
    #[serde(skip)]
    pub candidates: Vec<CaseThreshold>,
}

impl CriterionReport {
    fn build(
        norms: &DataNorms,
        theta: f64,
        theta0: f64,
        rhs: f64,
        literal_rhs: f64,
        case_label: &str,
        c_gn: Option<f64>,
    ) -> Self {
        let (t_lo, t_hi) = interval(norms.slope, theta).unwrap_or((f64::NAN, f64::NAN));
        let gamma_u = norms.gamma();
        Self {
            lhs: norms.slope,
            rhs,
            gamma_u,
            theta,
            theta0,
            holds: norms.slope > rhs && gamma_u > 0.0 && theta > 0.0 && theta <= theta0,
            t_lo,
            t_hi,
            case_label: case_label.to_string(),
            c_gn,
            literal_rhs,
            candidates: vec![CaseThreshold {
                case_label: case_label.to_string(),
                rhs,
                theta0,
            }],
        }
    }
}

/// `ᾱ₂ = α₁/(2α₁+α₂)`, `ᾱ₃ = 2α₁/(5α₁+3α₃)` and `θ₀` as the minimum over
/// the present branches.
pub fn exponents(params: &OperatorParams) -> Exponents {
    let a1 = params.alpha1;
    let mut theta0 = f64::INFINITY;
    let alpha2_bar = params.l2_branch.map(|b| {
        theta0 = theta0.min((2.0 * b.alpha - a1) / (4.0 * a1 + 2.0 * b.alpha));
        a1 / (2.0 * a1 + b.alpha)
    });
    let alpha3_bar = params.linf_branch.map(|b| {
        theta0 = theta0.min((3.0 * b.alpha - 2.0 * a1) / (5.0 * a1 + 3.0 * b.alpha));
        2.0 * a1 / (5.0 * a1 + 3.0 * b.alpha)
    });
    let l1_path = alpha2_bar.is_none() && alpha3_bar.is_none();
    if l1_path {
        theta0 = 1.0;
    }
    Exponents {
        alpha2_bar,
        alpha3_bar,
        theta0,
        l1_path,
    }
}

/// `C₂ = 3^{1−ᾱ₂}λ₁^{1−2ᾱ₂}λ₂^{ᾱ₂}`, `C₃ = 3^{1−ᾱ₃}λ₁^{(2−5ᾱ₃)/2}(C_GN λ₃)^{3ᾱ₃/2}`.
pub fn constants(params: &OperatorParams, exps: &Exponents, c_gn: f64) -> Result<CriterionConstants> {
    if !(c_gn > 0.0 && c_gn.is_finite()) {
        return Err(Error::Domain(format!("C_GN must be positive, got {c_gn}")));
    }
    let l1 = params.lambda1;
    let c2 = match (params.l2_branch, exps.alpha2_bar) {
        (Some(b), Some(a)) if b.lambda > 0.0 => 3f64.powf(1.0 - a) * l1.powf(1.0 - 2.0 * a) * b.lambda.powf(a),
        _ => 0.0,
    };
    let c3 = match (params.linf_branch, exps.alpha3_bar) {
        (Some(b), Some(a)) if b.lambda > 0.0 => {
            3f64.powf(1.0 - a) * l1.powf((2.0 - 5.0 * a) / 2.0) * (c_gn * b.lambda).powf(1.5 * a)
        }
        _ => 0.0,
    };
    Ok(CriterionConstants { c2, c3, c_gn })
}

/// `(1/((1+θ)m₀), 1/((1−θ)m₀))`; the upper end is infinite at `θ = 1`.
pub fn interval(m0: f64, theta: f64) -> Result<(f64, f64)> {
    if !(m0 > 0.0) {
        return Err(Error::Domain(format!("interval needs m0 > 0, got {m0}")));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::ThetaOutOfRange {
            theta,
            range: "[0, 1]".into(),
        });
    }
    let hi = if theta == 1.0 {
        f64::INFINITY
    } else {
        1.0 / ((1.0 - theta) * m0)
    };
    Ok((1.0 / ((1.0 + theta) * m0), hi))
}

fn check_theta(theta: f64, upper: f64, closed: bool) -> Result<()> {
    let ok = theta > 0.0 && if closed { theta <= upper } else { theta < upper };
    if ok {
        Ok(())
    } else {
        Err(Error::ThetaOutOfRange {
            theta,
            range: if closed {
                format!("(0, {upper}]")
            } else {
                format!("(0, {upper})")
            },
        })
    }
}

/// Terms `b·γ^{−q}` of the general right side, with `γ` pulled out.
struct PowerTerm {
    coeff: f64,
    q: f64,
}

/// Solve `m = Σ bᵢ·(m/M)^{−qᵢ}` for the increasing left side.
fn critical_slope(terms: &[PowerTerm], slope_sup: f64) -> f64 {
    let active: Vec<&PowerTerm> = terms.iter().filter(|t| t.coeff > 0.0).collect();
    match active.len() {
        0 => 0.0,
        1 => {
            let t = active[0];
            (t.coeff * slope_sup.powf(t.q)).powf(1.0 / (1.0 + t.q))
        }
        _ => {
            let excess = |m: f64| m - active.iter().map(|t| t.coeff * (m / slope_sup).powf(-t.q)).sum::<f64>();
            let (mut lo, mut hi) = (1e-300_f64.max(slope_sup * 1e-12), slope_sup.max(1.0));
            while excess(lo) > 0.0 {
                lo *= 1e-3;
            }
            while excess(hi) < 0.0 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = (lo * hi).sqrt();
                if excess(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi / lo - 1.0 < 1e-15 {
                    break;
                }
            }
            (lo * hi).sqrt()
        }
    }
}

/// General criterion for operators with an η-interpolation bound.
pub fn theorem_criterion(
    u: &Field,
    theta: f64,
    params: &OperatorParams,
    consts: &CriterionConstants,
    exps: &Exponents,
) -> Result<CriterionReport> {
    theorem_from_norms(&DataNorms::of(u), theta, params, consts, exps)
}

pub fn theorem_from_norms(
    norms: &DataNorms,
    theta: f64,
    params: &OperatorParams,
    consts: &CriterionConstants,
    exps: &Exponents,
) -> Result<CriterionReport> {
    norms.require_decreasing()?;
    if !exps.l1_path && !params.theorem_applicable() {
        return Err(Error::UnsupportedCase(format!(
            "alpha1 = {} must be below min(2 alpha2, 3 alpha3 / 2)",
            params.alpha1
        )));
    }
    check_theta(theta, exps.theta0, true)?;
    let gamma = norms.gamma();

    // η₀ branch: 3λ₁/(θγη₀^{α₁}), i.e. coefficient of γ^{−1}.
    let first = if params.eta0.is_finite() {
        3.0 * params.lambda1 / (theta * params.eta0.powf(params.alpha1))
    } else {
        0.0
    };
    let mut terms = Vec::new();
    if let Some(a) = exps.alpha2_bar {
        terms.push(PowerTerm {
            coeff: consts.c2 / theta.powf(1.0 - a) * norms.d2_l2.powf(a),
            q: 1.0 - 2.0 * a,
        });
    }
    if let Some(a) = exps.alpha3_bar {
        terms.push(PowerTerm {
            coeff: consts.c3 / theta.powf(1.0 - a) * norms.d3_l2.powf(a),
            q: 1.0 - 2.0 * a,
        });
    }
    let literal_sum: f64 = terms.iter().map(|t| t.coeff * gamma.powf(-t.q)).sum();
    let literal = (first / gamma).max(literal_sum);
    let m_first = critical_slope(&[PowerTerm { coeff: first, q: 1.0 }], norms.slope_sup);
    let m_sum = critical_slope(&terms, norms.slope_sup);
    let rhs = m_first.max(m_sum);
    Ok(CriterionReport::build(
        norms,
        theta,
        exps.theta0,
        rhs,
        literal,
        "theorem",
        Some(consts.c_gn),
    ))
}

/// Square-root criterion for bounded operators `‖N[g]‖∞ ≤ λ₁‖g‖∞`,
/// admissible for `θ ∈ (0, 1]`.
pub fn l1_criterion(u: &Field, theta: f64, lambda1: f64) -> Result<CriterionReport> {
    l1_from_norms(&DataNorms::of(u), theta, lambda1, "l1")
}

fn l1_from_norms(norms: &DataNorms, theta: f64, lambda1: f64, label: &str) -> Result<CriterionReport> {
    norms.require_decreasing()?;
    check_theta(theta, 1.0, true)?;
    if !(lambda1 >= 0.0) {
        return Err(Error::Domain(format!("lambda1 must be nonnegative, got {lambda1}")));
    }
    let rhs = (3.0 * lambda1 / theta).sqrt() * norms.slope_sup.sqrt();
    let literal = 3.0 * lambda1 / (theta * norms.gamma());
    Ok(CriterionReport::build(norms, theta, 1.0, rhs, literal, label, None))
}

/// `C(α) = √3((1+α)/4)^{α/2}(2C_GN/|α|)^{(1+α)/2}`.
pub fn fkdv_constant(alpha: f64, c_gn: f64) -> f64 {
    3f64.sqrt() * ((1.0 + alpha) / 4.0).powf(alpha / 2.0) * (2.0 * c_gn / alpha.abs()).powf((1.0 + alpha) / 2.0)
}

pub fn fkdv_theta_ceiling(alpha: f64) -> f64 {
    (-2.0 - 5.0 * alpha) / (5.0 + 2.0 * alpha)
}

pub fn fkdv_criterion(u: &Field, theta: f64, alpha: f64, c_gn: f64) -> Result<CriterionReport> {
    fkdv_from_norms(&DataNorms::of(u), theta, alpha, c_gn)
}

pub fn fkdv_from_norms(norms: &DataNorms, theta: f64, alpha: f64, c_gn: f64) -> Result<CriterionReport> {
    if !(alpha > -1.0 && alpha < -0.4) {
        return Err(Error::UnsupportedCase(format!(
            "fractional KdV criterion needs alpha in (-1, -2/5), got {alpha}"
        )));
    }
    check_cgn(c_gn)?;
    norms.require_decreasing()?;
    let ceiling = fkdv_theta_ceiling(alpha);
    check_theta(theta, ceiling, false)?;
    let rhs = fkdv_constant(alpha, c_gn) / theta.sqrt()
        * norms.slope_sup.powf(1.0 / 6.0 - alpha / 3.0)
        * norms.d3_l2.powf(1.0 / 3.0 + alpha / 3.0);
    Ok(CriterionReport::build(
        norms,
        theta,
        ceiling,
        rhs,
        rhs,
        "fkdv",
        Some(c_gn),
    ))
}

/// Coefficient `3^{3/4}2^{1/4}C_GN^{1/4}/(π^{1/4}θ^{1/2})`.
pub fn whitham_coefficient(theta: f64, c_gn: f64) -> f64 {
    use std::f64::consts::PI;
    3f64.powf(0.75) * 2f64.powf(0.25) * c_gn.powf(0.25) / (PI.powf(0.25) * theta.sqrt())
}

pub fn whitham_criterion(u: &Field, theta: f64, c_gn: f64) -> Result<CriterionReport> {
    whitham_from_norms(&DataNorms::of(u), theta, c_gn)
}

pub fn whitham_from_norms(norms: &DataNorms, theta: f64, c_gn: f64) -> Result<CriterionReport> {
    check_cgn(c_gn)?;
    norms.require_decreasing()?;
    check_theta(theta, 0.125, false)?;
    let rhs = whitham_coefficient(theta, c_gn) * norms.slope_sup.powf(1.0 / 3.0) * norms.d3_l2.powf(1.0 / 6.0);
    Ok(CriterionReport::build(
        norms,
        theta,
        0.125,
        rhs,
        rhs,
        "whitham",
        Some(c_gn),
    ))
}

/// `β₁(s) = [3γ(s)]^{1/2}[(2+2s)/s·C_GN]^{(1−s)/2}`.
pub fn beta1(s: f64, c_gn: f64) -> Result<f64> {
    Ok((3.0 * gamma_fn(s)?).sqrt() * ((2.0 + 2.0 * s) / s * c_gn).powf((1.0 - s) / 2.0))
}

/// `β₂(s) = [3γ(s)]^{1/2}[2^{2s−1}/(2s−1)^{1−s}]^{1/2}`.
pub fn beta2(s: f64) -> Result<f64> {
    if !(s > 0.5) {
        return Err(Error::Domain(format!("beta2 needs s > 1/2, got {s}")));
    }
    Ok((3.0 * gamma_fn(s)?).sqrt() * (2f64.powf(2.0 * s - 1.0) / (2.0 * s - 1.0).powf(1.0 - s)).sqrt())
}

/// `θ` ceiling of a Fornberg–Whitham case.
pub fn fw_theta_ceiling(s: f64, case: FwCase) -> f64 {
    match case {
        FwCase::I => (5.0 * s - 2.0) / (5.0 - 2.0 * s),
        FwCase::II => (3.0 * s - 2.0) / (3.0 - 2.0 * s),
        FwCase::III { tau } => (3.0 * tau - 2.0) / (3.0 - 2.0 * tau),
        FwCase::IV => 1.0,
    }
}

/// Fornberg–Whitham criterion in an explicitly chosen case.
pub fn fw_criterion_case(u: &Field, theta: f64, s: f64, case: FwCase, c_gn: f64) -> Result<CriterionReport> {
    fw_case_from_norms(&DataNorms::of(u), theta, s, case, c_gn)
}

pub fn fw_case_from_norms(norms: &DataNorms, theta: f64, s: f64, case: FwCase, c_gn: f64) -> Result<CriterionReport> {
    // Validates the (s, τ) range for the case.
    let table = fw_a2_params(s, case)?;
    check_cgn(c_gn)?;
    norms.require_decreasing()?;
    let label = case.label();
    if let (FwCase::IV, A2Table::Bounded { lambda1 }) = (case, table) {
        return l1_from_norms(norms, theta, lambda1, label);
    }
    let ceiling = fw_theta_ceiling(s, case);
    check_theta(theta, ceiling, false)?;
    let m = norms.slope_sup;
    let rhs = match case {
        FwCase::I => {
            beta1(s, c_gn)? / theta.sqrt() * m.powf(1.0 / 6.0 + s / 3.0) * norms.d3_l2.powf(1.0 / 3.0 - s / 3.0)
        }
        FwCase::II => beta2(s)? / theta.sqrt() * m.powf(s - 0.5) * norms.d2_l2.powf(1.0 - s),
        FwCase::III { tau } => {
            use std::f64::consts::PI;
            let c = (12.0 / (PI * (1.0 - tau) * theta)).sqrt();
            (c * m.sqrt()).max(c * m.powf(tau - 0.5) * norms.d2_l2.powf(1.0 - tau))
        }
        FwCase::IV => unreachable!("handled above"),
    };
    Ok(CriterionReport::build(
        norms,
        theta,
        ceiling,
        rhs,
        rhs,
        label,
        Some(c_gn),
    ))
}

/// Fornberg–Whitham criterion with automatic case selection. On
/// `s ∈ (2/3, 1)` both cases (i) and (ii) are evaluated where `θ` is admissible
/// and the smaller threshold is reported; `s = 1` needs `tau`.
pub fn fw_criterion(u: &Field, theta: f64, s: f64, tau: Option<f64>, c_gn: f64) -> Result<CriterionReport> {
    fw_from_norms(&DataNorms::of(u), theta, s, tau, c_gn)
}

pub fn fw_from_norms(norms: &DataNorms, theta: f64, s: f64, tau: Option<f64>, c_gn: f64) -> Result<CriterionReport> {
    if !(s > 0.4) {
        return Err(Error::UnsupportedCase(format!(
            "no proved Fornberg-Whitham criterion for s in (0, 2/5], got {s}"
        )));
    }
    if s == 1.0 {
        let tau =
            tau.ok_or_else(|| Error::UnsupportedCase("Fornberg-Whitham with s = 1 needs tau in (2/3, 1)".into()))?;
        return fw_case_from_norms(norms, theta, s, FwCase::III { tau }, c_gn);
    }
    if s > 1.0 {
        return fw_case_from_norms(norms, theta, s, FwCase::IV, c_gn);
    }
    if s <= 2.0 / 3.0 {
        return fw_case_from_norms(norms, theta, s, FwCase::I, c_gn);
    }
    let first = fw_case_from_norms(norms, theta, s, FwCase::I, c_gn);
    let second = fw_case_from_norms(norms, theta, s, FwCase::II, c_gn);
    match (first, second) {
        (Ok(a), Ok(b)) => {
            let candidates = vec![a.candidates[0].clone(), b.candidates[0].clone()];
            let mut best = if b.rhs < a.rhs { b } else { a };
            best.candidates = candidates;
            Ok(best)
        }
        (Ok(a), Err(_)) => Ok(a),
        (Err(_), Ok(b)) => Ok(b),
        (Err(e), Err(_)) => Err(match e {
            Error::ThetaOutOfRange { theta, .. } => Error::ThetaOutOfRange {
                theta,
                range: format!(
                    "(0, {}) for case (i) or (0, {}) for case (ii)",
                    fw_theta_ceiling(s, FwCase::I),
                    fw_theta_ceiling(s, FwCase::II)
                ),
            },
            other => other,
        }),
    }
}

fn check_cgn(c_gn: f64) -> Result<()> {
    if c_gn > 0.0 && c_gn.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("C_GN must be positive, got {c_gn}")))
    }
}

/// Sweep `θ` over a log grid of `(θ₀·10⁻³, θ₀]` and return the report with
/// the smallest threshold. Open-ended ranges are sampled just below `θ₀`.
pub fn best_theta(
    theta0: f64,
    points: usize,
    mut criterion: impl FnMut(f64) -> Result<CriterionReport>,
) -> Result<CriterionReport> {
    let points = points.max(2);
    let lo = (theta0 * 1e-3).ln();
    let hi = (theta0 * (1.0 - 1e-9)).ln();
    let mut best: Option<CriterionReport> = None;
    let mut last_err = None;
    for i in 0..points {
        let theta = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp();
        match criterion(theta) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.rhs < b.rhs) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::NotApplicable("empty theta grid".into())))
}

/// Amplitude `a` at which `lhs = rhs` for the data family `make(a)`, by
/// bisection in `ln a` on `[lo, hi]`. The family must make the verdict
/// monotone in `a`.
pub fn threshold_amplitude(
    make: impl Fn(f64) -> Field,
    criterion: impl Fn(&Field) -> Result<CriterionReport>,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let gap = |a: f64| -> Result<f64> {
        let r = criterion(&make(a))?;
        Ok(r.lhs - r.rhs)
    };
    let (mut lo, mut hi) = (lo, hi);
    if gap(lo)? > 0.0 || gap(hi)? <= 0.0 {
        return Err(Error::NotApplicable(format!(
            "threshold amplitude is not bracketed by [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if gap(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Criterion selected by model: the closed form where one exists, otherwise
/// the general or square-root criterion from the bound table.
pub fn model_params_report(norms: &DataNorms, theta: f64, table: &A2Table, c_gn: f64) -> Result<CriterionReport> {
    match table {
        A2Table::Bounded { lambda1 } => l1_from_norms(norms, theta, *lambda1, "l1"),
        A2Table::Interpolation(p) => {
            let exps = exponents(p);
            let consts = constants(p, &exps, c_gn)?;
            theorem_from_norms(norms, theta, p, &consts, &exps)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{a2_params, Branch, ModelSpec};
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    fn interp(t: A2Table) -> OperatorParams {
        match t {
            A2Table::Interpolation(p) => p,
            _ => panic!("expected interpolation table"),
        }
    }

    fn slope_profile(a: f64) -> Field {
        let grid = GridSpec::new(20.0, 512).unwrap();
        Field::from_fn(grid, |x| -a * x * (-x * x / 2.0).exp())
    }

    #[test]
    fn exponent_examples() {
        let w = exponents(&interp(a2_params(&ModelSpec::whitham()).unwrap()));
        assert_eq!(w.alpha3_bar, Some(0.25));
        assert!((w.theta0 - 0.125).abs() < 1e-15);
        let fw = exponents(&interp(fw_a2_params(0.8, FwCase::I).unwrap()));
        assert!((fw.theta0 - 2.0 / 3.4).abs() < 1e-14);
        assert!((fw.alpha3_bar.unwrap() - 0.4 / 3.4).abs() < 1e-14);
        let fw2 = exponents(&interp(fw_a2_params(0.8, FwCase::II).unwrap()));
        assert!((fw2.alpha2_bar.unwrap() - 2.0 / 7.0).abs() < 1e-14);
        assert!((fw2.theta0 - 2.0 / 7.0).abs() < 1e-14);
        let none = exponents(&OperatorParams {
            lambda1: 1.0,
            alpha1: 0.5,
            l2_branch: None,
            linf_branch: None,
            eta0: f64::INFINITY,
        });
        assert!(none.l1_path);
        assert_eq!(none.theta0, 1.0);
    }

    #[test]
    fn constant_examples() {
        let p = interp(a2_params(&ModelSpec::whitham()).unwrap());
        let e = exponents(&p);
        let c = 0.6;
        let k = constants(&p, &e, c).unwrap();
        let expected = 3f64.powf(9.0 / 8.0) * 2f64.powf(3.0 / 8.0) / PI.powf(3.0 / 8.0) * c.powf(3.0 / 8.0);
        assert!((k.c3 - expected).abs() < 1e-13 * expected);
        assert_eq!(k.c2, 0.0);

        let p = OperatorParams {
            lambda1: 2.0,
            alpha1: 1.0,
            l2_branch: Some(Branch {
                lambda: 1.0,
                alpha: 2.0,
            }),
            linf_branch: None,
            eta0: f64::INFINITY,
        };
        let e = exponents(&p);
        assert_eq!(e.alpha2_bar, Some(0.25));
        let k = constants(&p, &e, 1.0).unwrap();
        assert!((k.c2 - 3f64.powf(0.75) * 2f64.sqrt()).abs() < 1e-13);
        assert!((k.c2 - 3.2237).abs() < 1e-4);
        assert!(constants(&p, &e, 0.0).is_err());
    }

    #[test]
    fn interval_arithmetic() {
        let (lo, hi) = interval(1.0, 0.1).unwrap();
        assert!((lo - 1.0 / 1.1).abs() < 1e-15 && (hi - 1.0 / 0.9).abs() < 1e-15);
        let (lo, hi) = interval(2.0, 0.125).unwrap();
        assert!((lo - 4.0 / 9.0).abs() < 1e-15 && (hi - 4.0 / 7.0).abs() < 1e-15);
        let (lo, hi) = interval(3.0, 1e-12).unwrap();
        assert!((lo - 1.0 / 3.0).abs() < 1e-12 && (hi - 1.0 / 3.0).abs() < 1e-12);
        assert!(interval(0.0, 0.1).is_err());
    }

    #[test]
    fn vanishing_operator_always_breaks() {
        let p = OperatorParams {
            lambda1: 0.0,
            alpha1: 0.5,
            l2_branch: None,
            linf_branch: Some(Branch {
                lambda: 0.0,
                alpha: 0.5,
            }),
            eta0: f64::INFINITY,
        };
        let e = exponents(&p);
        let c = constants(&p, &e, 1.0).unwrap();
        let r = theorem_criterion(&slope_profile(0.01), e.theta0, &p, &c, &e).unwrap();
        assert_eq!(r.rhs, 0.0);
        assert!(r.holds);
        assert!(((r.t_hi / r.t_lo) - (1.0 + e.theta0) / (1.0 - e.theta0)).abs() < 1e-12);
    }

    #[test]
    fn rejections() {
        let p = interp(a2_params(&ModelSpec::whitham()).unwrap());
        let e = exponents(&p);
        let c = constants(&p, &e, 1.0).unwrap();
        let flat = slope_profile(0.0);
        assert!(matches!(
            theorem_criterion(&flat, 0.1, &p, &c, &e),
            Err(Error::NotApplicable(_))
        ));
        let u = slope_profile(1.0);
        assert!(matches!(
            theorem_criterion(&u, 0.2, &p, &c, &e),
            Err(Error::ThetaOutOfRange { .. })
        ));
        assert!(whitham_criterion(&u, 0.125, 1.0).is_err());
        assert!(fkdv_criterion(&u, 0.05, -0.3, 1.0).is_err());
        assert!(fw_criterion(&u, 0.1, 0.4, None, 1.0).is_err());
        assert!(fw_criterion(&u, 0.1, 1.0, None, 1.0).is_err());
    }

    #[test]
    fn l1_examples() {
        let u = slope_profile(1.0);
        assert!(l1_criterion(&u, 0.5, 0.0).unwrap().holds);
        let n = DataNorms {
            slope: 3.5,
            slope_sup: 1.0,
            d2_l2: 1.0,
            d3_l2: 1.0,
        };
        let r = l1_from_norms(&n, 1.0, 3.0, "l1").unwrap();
        assert!((r.rhs - 3.0).abs() < 1e-15);
        assert!(r.t_hi.is_infinite());
        let r = fw_criterion(&u, 0.3, 2.0, None, 1.0).unwrap();
        assert_eq!(r.case_label, "fw-case-iv");
        assert!((r.rhs - (3.0 / 0.3f64).sqrt() * DataNorms::of(&u).slope_sup.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fkdv_constant_hand_value() {
        let c = 0.7;
        assert!((fkdv_constant(-0.5, c) - 3f64.sqrt() * (32.0 * c).powf(0.25)).abs() < 1e-13);
        assert!((fkdv_theta_ceiling(-0.5) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn beta2_limit() {
        let s: f64 = 0.999;
        let v = (1.0 - s).sqrt() * beta2(s).unwrap();
        assert!((v - (12.0 / PI).sqrt()).abs() < 2e-2);
    }

    #[test]
    fn fw_case_i_exponents() {
        // Doubling ‖ū‴‖ alone scales the threshold by 2^{1/3 − s/3}.
        let s = 0.9;
        let base = DataNorms {
            slope: 1.0,
            slope_sup: 1.0,
            d2_l2: 1.0,
            d3_l2: 1.0,
        };
        let r1 = fw_case_from_norms(&base, 0.1, s, FwCase::I, 0.6).unwrap().rhs;
        let r2 = fw_case_from_norms(&DataNorms { d3_l2: 2.0, ..base }, 0.1, s, FwCase::I, 0.6)
            .unwrap()
            .rhs;
        let r3 = fw_case_from_norms(&DataNorms { slope_sup: 2.0, ..base }, 0.1, s, FwCase::I, 0.6)
            .unwrap()
            .rhs;
        assert!((r2 / r1 - 2f64.powf(1.0 / 3.0 - s / 3.0)).abs() < 1e-13);
        assert!((r3 / r1 - 2f64.powf(1.0 / 6.0 + s / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn overlap_reports_smaller_threshold() {
        let u = slope_profile(5.0);
        let r = fw_criterion(&u, 0.1, 0.8, None, 0.6).unwrap();
        assert_eq!(r.candidates.len(), 2);
        let min = r.candidates.iter().map(|c| c.rhs).fold(f64::INFINITY, f64::min);
        assert_eq!(r.rhs, min);
        // θ admissible for case (i) only.
        let r = fw_criterion(&u, 0.4, 0.8, None, 0.6).unwrap();
        assert_eq!(r.case_label, "fw-case-i");
    }

    #[test]
    fn specialization_matches_general_form() {
        let c_gn = 0.63;
        let u = slope_profile(3.0);
        let norms = DataNorms::of(&u);
        let general = |table: A2Table, theta: f64| model_params_report(&norms, theta, &table, c_gn).unwrap().rhs;
        let close = |a: f64, b: f64| ((a - b) / b).abs() < 1e-10;

        let alpha = -0.6;
        let table = a2_params(&ModelSpec::fractional_kdv(alpha).unwrap()).unwrap();
        assert!(close(
            fkdv_from_norms(&norms, 0.1, alpha, c_gn).unwrap().rhs,
            general(table, 0.1)
        ));

        let table = a2_params(&ModelSpec::whitham()).unwrap();
        assert!(close(
            whitham_from_norms(&norms, 0.1, c_gn).unwrap().rhs,
            general(table, 0.1)
        ));

        for (s, case) in [(0.8, FwCase::I), (0.9, FwCase::II), (1.0, FwCase::III { tau: 0.8 })] {
            let table = fw_a2_params(s, case).unwrap();
            let direct = fw_case_from_norms(&norms, 0.1, s, case, c_gn).unwrap().rhs;
            assert!(close(direct, general(table, 0.1)), "{case:?}");
        }
    }

    #[test]
    fn literal_and_critical_verdicts_agree() {
        let p = interp(a2_params(&ModelSpec::whitham()).unwrap());
        let e = exponents(&p);
        let c = constants(&p, &e, 0.6).unwrap();
        for a in [1.0, 10.0, 30.0, 60.0, 100.0, 300.0] {
            let r = theorem_criterion(&slope_profile(a), 0.1, &p, &c, &e).unwrap();
            assert_eq!(r.lhs > r.literal_rhs, r.holds, "a = {a}");
        }
    }

    #[test]
    fn threshold_amplitude_matches_homogeneity() {
        let c_gn = 0.6;
        let crit = |u: &Field| whitham_criterion(u, 0.1, c_gn);
        let a_th = threshold_amplitude(slope_profile, crit, 1e-3, 1e6).unwrap();
        let r1 = crit(&slope_profile(1.0)).unwrap();
        let expected = (r1.rhs / r1.lhs).powi(2);
        assert!(((a_th - expected) / expected).abs() < 1e-10);
    }

    #[test]
    fn best_theta_prefers_ceiling() {
        let u = slope_profile(10.0);
        let r = best_theta(0.125, 20, |t| whitham_criterion(&u, t, 0.6)).unwrap();
        assert!(r.theta > 0.12 && r.theta < 0.125);
    }

    #[test]
    fn report_json_fields() {
        let r = whitham_criterion(&slope_profile(100.0), 0.1, 0.6).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "c_gn",
                "case_label",
                "gamma_u",
                "holds",
                "lhs",
                "rhs",
                "t_hi",
                "t_lo",
                "theta",
                "theta0"
            ]
        );
    }
}
