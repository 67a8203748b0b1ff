use std::sync::Arc;

use proptest::prelude::*;

use phasespace::expr::{parse, Expr, Variable};
use phasespace::kernels::{classical_kinetic_kernel, quantum_kinetic_kernel, quantum_potential_kernel};
use phasespace::observables::{l2_norm_squared, moyal_bracket, total_integral, Operand};
use phasespace::propagator::{evolve, gaussian_state, olavo_gaussian, GaussianSpec, NoSnapshots};
use phasespace::{
    make_grid, AxisLabel, AxisSpec, Direction, EvolutionMode, Field, HamiltonianModel, Params, PhaseGrid,
};

fn grid(n: usize, half: f64) -> Arc<PhaseGrid> {
    make_grid(&[AxisSpec::new(AxisLabel::X, n, -half, half), AxisSpec::new(AxisLabel::P, n, -half, half)], 1.0).unwrap()
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|k| Expr::num(k as f64 / 8.0)),
        prop_oneof![Just(Variable::X), Just(Variable::P), Just(Variable::T)].prop_map(Expr::var),
        prop_oneof![Just("a"), Just("m"), Just("omega")].prop_map(Expr::param),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                phasespace::expr::BinOp::Div,
                Box::new(a),
                Box::new(b)
            )),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                phasespace::expr::BinOp::Pow,
                Box::new(a),
                Box::new(b)
            )),
            inner.clone().prop_map(|a| -a),
            (inner, 0usize..6).prop_map(|(a, k)| {
                use phasespace::expr::Func::*;
                Expr::Call([Exp, Sin, Cos, Sqrt, Tanh, Ln][k], Box::new(a))
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_expressions_parse_back(e in arb_expr()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &e, "text was {}", text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transforms_invert(seed in 0u64..1000, n in prop_oneof![Just(16usize), Just(32), Just(64)]) {
        let g = grid(n, 4.0);
        let f = Field::from_fn(&g, |z| {
            let s = seed as f64 * 0.01;
            num_complex::Complex64::new((z[0] * (1.0 + s)).sin() * (-z[1] * z[1]).exp(), (z[0] * z[1] + s).cos())
        });
        let back = f
            .transform(AxisLabel::X, Direction::ToConjugate).unwrap()
            .transform(AxisLabel::P, Direction::ToConjugate).unwrap()
            .transform(AxisLabel::X, Direction::ToDirect).unwrap()
            .transform(AxisLabel::P, Direction::ToDirect).unwrap();
        let err = f.data().iter().zip(back.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn kernels_are_odd_phase_rates(c2 in 0.1f64..2.0, c4 in -0.2f64..0.5, c3 in -0.5f64..0.5, hbar in 0.2f64..1.5) {
        let g = Arc::new(grid(32, 5.0).with_hbar(hbar).unwrap());
        let mut params = Params::new();
        params.insert("c2".into(), c2);
        params.insert("c3".into(), c3);
        params.insert("c4".into(), c4);
        let model = HamiltonianModel::parse("c2*p^2/2 + c4*p^4", "c2*x^2/2 + c3*x^3 + c4*x^4", params).unwrap();
        for k in [
            quantum_potential_kernel(&model, &g, 0.0, false).unwrap(),
            quantum_kinetic_kernel(&model, &g, 0.0, false).unwrap(),
            classical_kinetic_kernel(&model, &g, 0.0, false).unwrap(),
        ] {
            prop_assert!(k.data().iter().all(|c| c.re.abs() < 1e-14 * (1.0 + c.im.abs())));
        }
        // Swapping a kick's argument order is the same as conjugation.
        let k = quantum_potential_kernel(&model, &g, 0.0, false).unwrap();
        let (nx, np) = (g.shape()[0], g.shape()[1]);
        for i in 0..nx {
            for j in 1..np {
                let a = k.data()[i * np + j];
                let b = k.data()[i * np + (np - j)];
                prop_assert!((a + b).norm() < 1e-10 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn propagation_preserves_integral_and_norm(
        x0 in -1.5f64..1.5,
        p0 in -1.5f64..1.5,
        sx in 0.6f64..1.2,
        c4 in 0.0f64..0.3,
        mode in prop_oneof![Just(EvolutionMode::Moyal), Just(EvolutionMode::Liouville), Just(EvolutionMode::Olavo)],
    ) {
        let g = grid(64, 7.0);
        let mut params = Params::new();
        params.insert("c4".into(), c4);
        let model = HamiltonianModel::parse("p^2/2", "x^2/2 + c4*x^4", params).unwrap();
        let spec = GaussianSpec::minimum_uncertainty(x0, p0, sx, 1.0);
        let f0 = if mode == EvolutionMode::Olavo { olavo_gaussian(&g, &spec) } else { gaussian_state(&g, &spec) }.unwrap();
        let f = evolve(&f0, mode, &model, 0.0, 0.01, 100, 0, &mut NoSnapshots).unwrap();
        prop_assert!((l2_norm_squared(&f) / l2_norm_squared(&f0) - 1.0).abs() < 1e-11);
        if mode != EvolutionMode::Olavo {
            prop_assert!((total_integral(&f).unwrap() - total_integral(&f0).unwrap()).abs() < 1e-11);
            prop_assert!(f.max_imag() < 1e-11);
        }
    }

    #[test]
    fn moyal_bracket_is_antisymmetric(x1 in -1.0f64..1.0, p1 in -1.0f64..1.0, x2 in -1.0f64..1.0, w in 0.6f64..1.4) {
        let g = grid(64, 7.0);
        let a = Field::from_real_fn(&g, |z| (-((z[0] - x1).powi(2) + (z[1] - p1).powi(2)) / (2.0 * w * w)).exp());
        let b = Field::from_real_fn(&g, |z| (-((z[0] - x2).powi(2) + z[1] * z[1]) / 2.0).exp() * (1.0 + 0.3 * z[1]));
        let ab = moyal_bracket(&Operand::field(&a), &Operand::field(&b), &g, 0.0, 0.7).unwrap();
        let ba = moyal_bracket(&Operand::field(&b), &Operand::field(&a), &g, 0.0, 0.7).unwrap();
        let err = ab.data().iter().zip(ba.data()).map(|(u, v)| (u + v).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }
}
