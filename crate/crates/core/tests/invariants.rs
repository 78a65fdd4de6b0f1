use hhlab_core::dynamics::LimitTag;
use hhlab_core::energy::{energy, energy_rate, sphere_measure};
use hhlab_core::experiments::{generate_sample, run, ExperimentConfig, ExperimentKind, ParamPoint};
use hhlab_core::green::{bilaplacian_solve_radial, poisson_solve_radial, RadialField, RadialGrid};
use hhlab_core::params::a0_factored;
use hhlab_core::transform::neg_laplacian_radial;
use hhlab_core::{
    classify_limit, classify_regime, coefficients, critical_exponents, integrate, vector_field, IntegrateOptions,
    Model, OdeState, ProblemParams, Regime,
};
use proptest::prelude::*;

/// `(n, α, p)` with `P_C < p < (n+4)/(n−4)`, away from the endpoints by `margin` of the window.
fn window_params(margin: f64) -> impl Strategy<Value = (u32, f64, f64)> {
    (5u32..=12, -3.99f64..3.99, margin..1.0 - margin).prop_filter_map("empty window", |(n, alpha, u)| {
        let d = n as f64 - 4.0;
        let (pc, ps) = ((n as f64 + alpha) / d, (n as f64 + 4.0) / d);
        (pc < ps).then(|| (n, alpha, pc + u * (ps - pc)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn b_range_determines_the_regime((n, alpha, p) in window_params(1e-6)) {
        let params = ProblemParams::new(n, alpha, p).unwrap();
        let rep = classify_regime(&params).unwrap();
        let ps = critical_exponents(&params).unwrap().hardy_sobolev;
        prop_assume!((p - ps).abs() > 1e-9);
        let (b, half) = (params.scaling_exponent(), (n as f64 - 4.0) / 2.0);
        let sub = b > half && b < n as f64 - 4.0;
        let sup = b > 0.0 && b < half;
        prop_assert_eq!(rep.regime == Regime::Subcritical, sub);
        prop_assert_eq!(rep.regime == Regime::Supercritical, sup);
        prop_assert!(rep.signs_consistent());
    }

    #[test]
    fn factored_a0_matches((n, alpha, p) in window_params(1e-3)) {
        let params = ProblemParams::new(n, alpha, p).unwrap();
        let a0 = coefficients(&params).unwrap().a0;
        let f = a0_factored(&params).unwrap();
        // The last factor vanishes as B → n−4; measure against the product without it.
        let (b, nf) = (params.scaling_exponent(), n as f64);
        let scale = b * (b + 2.0) * (nf - 2.0 - b) * (nf - 4.0);
        prop_assert!((a0 - f).abs() <= 1e-12 * scale, "a0 {a0}, factored {f}");
    }

    #[test]
    fn neg_laplacian_of_a_power((n, alpha, p) in window_params(1e-3), frac in 0.01f64..0.99, t in -12.0f64..0.0) {
        let params = ProblemParams::new(n, alpha, p).unwrap();
        let (b, nf) = (params.scaling_exponent(), n as f64);
        let gamma = frac * (nf - 4.0);
        // u = r^{−γ} is w = e^{(B−γ)t}.
        let k = b - gamma;
        let w = (k * t).exp();
        let state = OdeState([w, k * w, k * k * w, k.powi(3) * w]);
        let got = neg_laplacian_radial(t, &state, &params);
        let want = gamma * (nf - 2.0 - gamma) * ((-gamma - 2.0) * t).exp();
        prop_assert!(((got - want) / want).abs() <= 1e-11, "got {got}, want {want}");
    }

    #[test]
    fn fixed_points_are_stationary((n, alpha, p) in window_params(1e-3)) {
        let model = Model::from_triple(n, alpha, p).unwrap();
        let ws = model.w_star().unwrap();
        for point in [0.0, ws] {
            let f = vector_field(&OdeState::constant(point), &model.coeffs, p).unwrap();
            prop_assert!(f.iter().all(|x| x.abs() <= 1e-12), "{f:?} at {point}");
        }
        if model.regime() == Regime::Subcritical {
            prop_assert!(neg_laplacian_radial(0.0, &OdeState::constant(ws), &model.params) > 0.0);
        }
    }

    #[test]
    fn energy_at_the_fixed_points((n, alpha, p) in window_params(1e-3)) {
        let model = Model::from_triple(n, alpha, p).unwrap();
        let (c, ws) = (model.coeffs, model.w_star().unwrap());
        prop_assert_eq!(energy(&OdeState::constant(0.0), &c, p, n).unwrap().value, 0.0);
        let want = sphere_measure(n) * c.a0.powf((p + 1.0) / (p - 1.0)) * (p - 1.0) / (2.0 * (p + 1.0));
        let got = energy(&OdeState::constant(ws), &c, p, n);
        if !want.is_finite() {
            prop_assert!(matches!(got, Err(hhlab_core::Error::Overflow(_))), "{got:?}");
            return Ok(());
        }
        let got = got.unwrap().value;
        // a0 enters with the power (p+1)/(p−1), which amplifies its rounding.
        let tol = 1e-13 * (p + 1.0) / (p - 1.0);
        prop_assert!(want > 0.0 && ((got - want) / want).abs() <= tol, "got {got}, want {want}");
    }

    #[test]
    fn energy_rate_sign_follows_the_regime(
        (n, alpha, p) in window_params(1e-3),
        w1 in -10.0f64..10.0,
        w2 in -10.0f64..10.0,
        w3 in -10.0f64..10.0,
    ) {
        let params = ProblemParams::new(n, alpha, p).unwrap();
        let model = Model::new(params).unwrap();
        let rate = energy_rate(&OdeState([1.0, w1, w2, w3]), &model.coeffs, n);
        match model.regime() {
            Regime::Subcritical | Regime::Critical => prop_assert!(rate <= 0.0),
            Regime::Supercritical => prop_assert!(rate >= 0.0),
            Regime::OutOfRange => {}
        }
    }
}

fn grid() -> RadialGrid {
    RadialGrid::new(2f64.powi(-16), 1024).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poisson_solve_is_linear(
        n in 5u32..=12,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        e in 0.0f64..2.0,
        c in 0.5f64..4.0,
    ) {
        // The origin tail is extrapolated from the leading power, so both sources share it.
        let g = grid();
        let f = RadialField::from_fn(&g, |r| r.powf(-e)).unwrap();
        let h = RadialField::from_fn(&g, |r| (2.0 + (c * r).cos()) * r.powf(-e)).unwrap();
        let comb = RadialField::from_fn(&g, |r| (a + b * (2.0 + (c * r).cos())) * r.powf(-e)).unwrap();
        let (sf, sh, sc) = (
            poisson_solve_radial(&f, n).unwrap(),
            poisson_solve_radial(&h, n).unwrap(),
            poisson_solve_radial(&comb, n).unwrap(),
        );
        for k in 0..g.len() {
            let lin = a * sf.values[k] + b * sh.values[k];
            let scale = 1.0 + (a * sf.values[k]).abs() + (b * sh.values[k]).abs();
            prop_assert!((sc.values[k] - lin).abs() <= 1e-11 * scale, "node {k}");
        }
    }

    #[test]
    fn nonnegative_sources_give_nonnegative_solutions(n in 5u32..=12, e in 0.0f64..1.9, c in 0.0f64..20.0) {
        let g = grid();
        let f = RadialField::from_fn(&g, |r| r.powf(-e) * (c * r).sin().powi(2)).unwrap();
        let v = poisson_solve_radial(&f, n).unwrap();
        prop_assert!(v.values.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn bilaplacian_inverts_powers_up_to_the_navier_correction(n in 5u32..=12, frac in 0.05f64..0.95) {
        let nf = n as f64;
        let gamma = frac * (nf - 4.0);
        let g = RadialGrid::default();
        let coef = gamma * (gamma + 2.0) * (gamma - nf + 2.0) * (gamma - nf + 4.0);
        let f = RadialField::from_fn(&g, |r| coef * r.powf(-gamma - 4.0)).unwrap();
        let v = bilaplacian_solve_radial(&f, n).unwrap();
        // v = r^{−γ} + a + b r² with v(1) = Δv(1) = 0.
        let bb = gamma * (nf - 2.0 - gamma) / (2.0 * nf);
        let aa = -1.0 - bb;
        for k in g.interior() {
            let r = g.nodes()[k];
            let want = r.powf(-gamma) + aa + bb * r * r;
            prop_assert!((v.values[k] - want).abs() <= 1e-8 * r.powf(-gamma), "r = {r}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integration_is_time_translation_equivariant(
        (n, alpha, p) in window_params(0.05),
        d in prop::array::uniform4(-1e-3f64..1e-3),
        s in -20.0f64..20.0,
    ) {
        let model = Model::from_triple(n, alpha, p).unwrap();
        let ws = model.w_star().unwrap();
        let start = OdeState([ws + d[0], d[1], d[2], d[3]]);
        let opts = IntegrateOptions::with_tol(1e-10);
        let a = integrate(&start, 0.0, -2.0, &model, &opts).unwrap();
        let b = integrate(&start, s, s - 2.0, &model, &opts).unwrap();
        // Both runs may stop early; compare where both exist.
        prop_assert_eq!(a.termination, b.termination);
        let lo = a.t_min().max(b.t_min() - s);
        for k in 0..=20 {
            let t = lo * k as f64 / 20.0;
            let (x, y) = (a.interpolate(t).unwrap(), b.interpolate((t + s).clamp(b.t_min(), b.t_max())).unwrap());
            for i in 0..4 {
                prop_assert!((x.0[i] - y.0[i]).abs() <= 1e-8 * (1.0 + x.0[i].abs()), "t = {t}, component {i}");
            }
        }
    }
}

#[test]
fn identical_configs_give_identical_tables() {
    for kind in [ExperimentKind::Atlas, ExperimentKind::Classification, ExperimentKind::EnergyAudit] {
        let mut config = ExperimentConfig::new(kind, vec![ParamPoint::new(6, 0.0, 4.0), ParamPoint::new(8, -1.0, 2.5)]);
        config.samples = 6;
        config.seed = 99;
        let a = run(&config).unwrap().to_csv();
        let b = run(&config).unwrap().to_csv();
        assert_eq!(a, b, "{kind:?}");
        config.seed = 100;
        if kind != ExperimentKind::Atlas {
            assert_ne!(a, run(&config).unwrap().to_csv(), "{kind:?} ignores the seed");
        }
    }
}

#[test]
fn regime_tags_agree_with_the_classifier() {
    let pts: Vec<ParamPoint> = [(6, 0.0, 3.5), (6, 0.0, 5.0), (7, -1.0, 3.5), (9, 2.0, 2.0), (5, -2.0, 2.5)]
        .into_iter()
        .map(|(n, a, p)| ParamPoint::new(n, a, p))
        .collect();
    let mut config = ExperimentConfig::new(ExperimentKind::EnergyAudit, pts.clone());
    config.samples = 1;
    for kind in [ExperimentKind::Atlas, ExperimentKind::EnergyAudit] {
        config.kind = kind;
        let table = run(&config).unwrap();
        for (i, pt) in pts.iter().enumerate() {
            let want = classify_regime(&ProblemParams::new(pt.n, pt.alpha, pt.p).unwrap()).unwrap().regime;
            let got = table.get(i, "regime").and_then(|c| c.as_text()).unwrap();
            assert_eq!(got, want.as_str(), "{kind:?} row {i}");
        }
    }
}

#[test]
fn classification_is_stable_from_tol_1e8_to_1e11() {
    let pt = ParamPoint::new(6, 0.0, 4.0);
    let model = pt.model().unwrap();
    let config = ExperimentConfig::new(ExperimentKind::Classification, vec![pt]);
    for row in 0..8 {
        let tags: Vec<LimitTag> = [1e-8, 1e-11]
            .iter()
            .map(|&tol| {
                let s = generate_sample(&model, &config, 0, row, tol).unwrap();
                let c = classify_limit(&s.trajectory, &model.coeffs, model.p(), config.margin, config.window).unwrap();
                let bound = s.trajectory.max_abs_component();
                assert!(bound.iter().all(|&x| x.is_finite() && x < 10.0), "row {row}: {bound:?}");
                c.tag
            })
            .collect();
        assert_eq!(tags[0], tags[1], "row {row}");
        assert!(matches!(tags[0], LimitTag::ConvergesToZero | LimitTag::ConvergesToFixedPoint));
    }
}
