//! Every numerical tolerance used by the verification suite, in one place.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub name: &'static str,
    pub value: f64,
    pub rationale: &'static str,
}

/// Sup-norm residual of `N[g]' − N[g']`.
pub const A1_COMMUTE: f64 = 1e-10;
/// `|∫N[g]g|` relative to `‖N[g]‖₂‖g‖₂`.
pub const A1_ORTHOGONALITY: f64 = 1e-12;
/// Slack below zero still counted as a satisfied pointwise bound, relative
/// to the bound (roundoff in the measured sup norm).
pub const A2_ROUNDOFF: f64 = 1e-12;
/// Slack on kernel bounds evaluated by quadrature.
pub const KERNEL_MARGIN: f64 = 1e-6;
/// Relative widening of `[T_lo, T_hi]` when comparing with a simulation.
pub const RECONCILE_SLACK: f64 = 0.05;
/// Widening of `[−(1+θ), −(1−θ)]` for the fitted slope of `1/m`.
pub const SANDWICH_SLACK: f64 = 0.05;
/// Relative drift of `‖u‖₂²` over the resolved part of a run.
pub const L2_DRIFT: f64 = 1e-8;
/// Tail ratio below which a row counts as resolved for conservation checks.
pub const L2_RESOLVED_TAIL: f64 = 1e-6;
/// Relative residual of the energy identities for `‖∂ᵏu‖₂²`.
pub const ENERGY_RESIDUAL: f64 = 1e-4;
/// Burgers characteristic slope vs the exact Riccati solution.
pub const CHARACTERISTIC: f64 = 1e-4;
/// Steepest tracked slope vs `m(t)`, relative.
pub const CHARACTERISTIC_SUP: f64 = 1e-3;
/// Closed-form thresholds vs the general one, relative.
pub const SPECIALIZATION: f64 = 1e-10;
/// Absolute error of the unperturbed Burgers breaking time.
pub const BURGERS_ORACLE: f64 = 0.02;

pub fn table() -> Vec<Tolerance> {
    vec![
        Tolerance {
            name: "a1_commute",
            value: A1_COMMUTE,
            rationale: "multiplier and derivative are both diagonal in Fourier space; only FFT roundoff remains",
        },
        Tolerance {
            name: "a1_orthogonality",
            value: A1_ORTHOGONALITY,
            rationale: "odd imaginary symbol makes the discrete pairing vanish up to roundoff",
        },
        Tolerance {
            name: "a2_roundoff",
            value: A2_ROUNDOFF,
            rationale: "measured sup norms carry relative roundoff near machine precision",
        },
        Tolerance {
            name: "kernel_margin",
            value: KERNEL_MARGIN,
            rationale: "kernel values come from adaptive quadrature with error well below this",
        },
        Tolerance {
            name: "reconcile_slack",
            value: RECONCILE_SLACK,
            rationale: "extrapolated breaking time carries fit and resolution error of a few parts per thousand",
        },
        Tolerance {
            name: "sandwich_slack",
            value: SANDWICH_SLACK,
            rationale: "slope of a finite-window fit to 1/m near blow-up",
        },
        Tolerance {
            name: "l2_drift",
            value: L2_DRIFT,
            rationale:
                "the semi-discrete scheme conserves the L2 norm exactly; RK4 error is far smaller on resolved rows",
        },
        Tolerance {
            name: "l2_resolved_tail",
            value: L2_RESOLVED_TAIL,
            rationale: "beyond this the 2/3 truncation starts to remove energy",
        },
        Tolerance {
            name: "energy_residual",
            value: ENERGY_RESIDUAL,
            rationale: "fourth-order differencing of the stored norms on an adaptive time grid",
        },
        Tolerance {
            name: "characteristic",
            value: CHARACTERISTIC,
            rationale: "RK4 on tracer ODEs sampled by trigonometric interpolation",
        },
        Tolerance {
            name: "characteristic_sup",
            value: CHARACTERISTIC_SUP,
            rationale: "grid minimum vs the tracked minimizing curve",
        },
        Tolerance {
            name: "specialization",
            value: SPECIALIZATION,
            rationale: "closed forms and the general root differ only by floating-point rearrangement",
        },
        Tolerance {
            name: "burgers_oracle",
            value: BURGERS_ORACLE,
            rationale: "absolute error of the fitted breaking time for sine data",
        },
    ]
}
