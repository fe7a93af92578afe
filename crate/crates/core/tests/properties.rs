use proptest::prelude::*;

use wavebreak_core::criteria::{fkdv_criterion, whitham_criterion};
use wavebreak_core::operators::{apply_n, verify_a1, ModelSpec};
use wavebreak_core::spectral::{Field, GridSpec};

const N: usize = 128;

fn grid() -> GridSpec {
    GridSpec::new(10.0, N).unwrap()
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0_f64..1.0, N)
}

fn models() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        Just(ModelSpec::burgers()),
        (-0.95_f64..-0.05).prop_map(|a| ModelSpec::fractional_kdv(a).unwrap()),
        Just(ModelSpec::whitham()),
        (0.1_f64..3.0).prop_map(|s| ModelSpec::fornberg_whitham(s).unwrap()),
    ]
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn parseval(values in samples()) {
        let f = Field::from_values(grid(), values).unwrap();
        let physical = f.l2_norm().powi(2);
        let spectral: f64 = f.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>() * grid().dx() / N as f64;
        prop_assert!((physical - spectral).abs() <= 1e-12 * physical.max(1e-300));
    }

    #[test]
    fn second_derivative_composes(values in samples()) {
        let f = Field::from_values(grid(), values).unwrap();
        let twice = f.derivative(1).derivative(1);
        let direct = f.derivative(2);
        prop_assert!(max_diff(&twice, &direct) <= 1e-10 * direct.sup_norm().max(1.0));
    }

    #[test]
    fn operator_is_linear(model in models(), a in samples(), b in samples(), s in -3.0_f64..3.0) {
        let (f, g) = (Field::from_values(grid(), a).unwrap(), Field::from_values(grid(), b).unwrap());
        let lhs = apply_n(&model, &f.combine(1.0, &g, s));
        let rhs = apply_n(&model, &f).combine(1.0, &apply_n(&model, &g), s);
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-10 * rhs.sup_norm().max(1.0));
    }

    #[test]
    fn structural_identities(model in models(), values in samples()) {
        let g = Field::from_values(grid(), values).unwrap();
        let check = verify_a1(&model, &g);
        let scale = apply_n(&model, &g).l2_norm() * g.l2_norm();
        prop_assert!(check.commute_error <= 1e-10 * g.derivative(1).sup_norm().max(1.0));
        prop_assert!(check.orthogonality_error <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn interpolation_reproduces_nodes(values in samples(), j in 0..N) {
        let f = Field::from_values(grid(), values).unwrap();
        let x = grid().point(j);
        prop_assert!((f.interpolate(x) - f.values()[j]).abs() < 1e-12);
    }

    // lhs grows linearly in the amplitude, the threshold like its square root.
    #[test]
    fn verdict_is_monotone_in_amplitude(a in 0.1_f64..500.0, factor in 1.0_f64..10.0, theta in 0.01_f64..0.1) {
        let g = GridSpec::new(20.0, 512).unwrap();
        let make = |a: f64| Field::from_fn(g, move |x| -a * x * (-x * x / 2.0).exp());
        let w1 = whitham_criterion(&make(a), theta, 0.92).unwrap();
        let w2 = whitham_criterion(&make(a * factor), theta, 0.92).unwrap();
        prop_assert!(!w1.holds || w2.holds);
        let f1 = fkdv_criterion(&make(a), theta, -0.6, 0.92).unwrap();
        let f2 = fkdv_criterion(&make(a * factor), theta, -0.6, 0.92).unwrap();
        prop_assert!(!f1.holds || f2.holds);
        prop_assert!((w2.rhs / w1.rhs - factor.sqrt()).abs() < 1e-9 * factor.sqrt());
    }
}
