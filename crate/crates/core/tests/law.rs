use std::sync::Arc;

use telegraph_core::law::*;
use telegraph_core::quadrature::{integrate, QuadOptions};
use telegraph_core::registry::Registry;
use telegraph_core::special::SeriesControl;
use telegraph_core::{Model, MotionParams, VelocitySign};

fn damped(p: f64, lambda: f64, mu: f64, c: f64, v: f64) -> Model {
    Model::parse(
        &format!("bernoulli:p={p}"),
        &format!("linexp:lambda={lambda},mu={mu}"),
        c,
        v,
    )
    .unwrap()
}

fn polya(b: f64, r: f64, a: f64, lambda: f64, mu: f64, c: f64, v: f64) -> Model {
    Model::parse(
        &format!("polya:b={b},r={r},A={a}"),
        &format!("gammaexp:lambda={lambda},mu={mu}"),
        c,
        v,
    )
    .unwrap()
}

fn closed(model: Model, t: f64) -> ProcessLaw {
    ProcessLaw::new(model, t, Registry::builtin().law("closed-form").unwrap()).unwrap()
}

fn opts() -> QuadOptions {
    QuadOptions::default()
        .with_abs_tol(1e-11)
        .with_rel_tol(1e-11)
        .with_endpoint_transform(true)
}

fn assert_normalized(law: &ProcessLaw) {
    for given in [None, Some(VelocitySign::Forward), Some(VelocitySign::Backward)] {
        let m = law.total_mass(given, &opts()).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{:?} given {given:?}: mass {m}", law);
    }
}

#[test]
fn damped_normalization_figure_parameter_sets() {
    // figures 3 and 4: lambda = c = v = 1, mu in {1, 2}
    for &mu in &[1.0, 2.0] {
        for &p in &[0.1, 0.2, 0.3, 0.4, 0.5] {
            assert_normalized(&closed(damped(p, 1.0, mu, 1.0, 1.0), 1.0));
        }
        for &p in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            assert_normalized(&closed(damped(p, 1.0, mu, 1.0, 1.0), 10.0));
        }
    }
    // figure 5 and a few asymmetric speeds
    for &p in &[0.1, 0.5] {
        for &mu in &[3.0, 4.0] {
            assert_normalized(&closed(damped(p, 1.0, mu, 1.0, 1.0), 10.0));
        }
    }
    assert_normalized(&closed(damped(0.3, 0.5, 2.0, 2.0, 0.5), 3.0));
    assert_normalized(&closed(damped(0.8, 3.0, 0.2, 0.7, 1.3), 0.4));
}

#[test]
fn polya_normalization_figure_parameter_sets() {
    // figure 6 (t = 1) and figure 8 (t = 10)
    for &t in &[1.0, 10.0] {
        for &b in &[1.0, 2.0] {
            for &r in &[1.0, 2.0, 3.0, 4.0] {
                assert_normalized(&closed(polya(b, r, 2.0, 1.0, 1.0, 1.0, 1.0), t));
            }
        }
    }
    // figure 7
    for &b in &[1.0, 2.0] {
        for &a in &[0.4, 0.6, 0.8, 1.0] {
            assert_normalized(&closed(polya(b, 1.0, a, 1.0, 1.0, 1.0, 1.0), 1.0));
        }
    }
    assert_normalized(&closed(polya(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0), 1.0));
    assert_normalized(&closed(polya(0.5, 1.5, 1.0, 2.0, 0.7, 1.5, 0.5), 2.0));
}

#[test]
fn damped_atoms_examples() {
    let a = atoms_damped(0.5, 1.0, 1.0, std::f64::consts::LN_2).unwrap();
    // e^{-ln 2} / (1/2 + e^{-ln 2}/2) = 2/3, weighted by p = 1/2
    assert!((a.plus - 1.0 / 3.0).abs() < 1e-15);
    assert!((a.plus_given_forward - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn polya_atoms_decrease() {
    let pp = PolyaParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let mut prev = 1.0;
    for i in 0..60 {
        let a = atoms_polya(&pp, i as f64).unwrap();
        assert!(a.plus <= prev);
        prev = a.plus;
    }
    // P{S_t = ct} ~ b/(b+r) Gamma(B)/Gamma(b/A+1) (lambda t)^{-r/A}; the 1/t
    // correction is still 2% at t = 50
    let a = atoms_polya(&pp, 50.0).unwrap();
    assert!((a.plus / (0.5 * 2.0 / 50.0) - 1.0).abs() < 0.05);
}

#[test]
fn atoms_agree_with_series() {
    let ctrl = SeriesControl::default();
    for (model, t) in [
        (damped(0.3, 1.0, 2.0, 1.0, 1.0), 1.0),
        (damped(0.7, 0.5, 1.5, 2.0, 1.0), 2.5),
        (polya(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0), 1.0),
        (polya(2.0, 3.0, 1.5, 0.5, 2.0, 1.0, 1.0), 3.0),
    ] {
        let cf = Registry::builtin().law("closed-form").unwrap().atoms(&model, t).unwrap();
        let se = atoms_general(&model, t, &ctrl).unwrap();
        assert!((cf.plus - se.plus).abs() < 1e-12, "{model}: {cf:?} vs {se:?}");
        assert!((cf.minus - se.minus).abs() < 1e-12, "{model}: {cf:?} vs {se:?}");
    }
}

fn grid21(model: &Model, t: f64) -> Vec<f64> {
    let (lo, hi) = model.motion.support(t);
    (1..=21).map(|i| lo + (hi - lo) * i as f64 / 22.0).collect()
}

#[test]
fn series_matches_closed_forms() {
    let ctrl = SeriesControl::new(1e-13, 10_000).unwrap();
    let models = [
        damped(0.3, 1.0, 1.0, 1.0, 1.0),
        damped(0.1, 1.0, 2.0, 1.0, 1.0),
        damped(0.6, 2.0, 0.5, 1.5, 0.5),
        polya(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
        polya(1.0, 3.0, 2.0, 1.0, 1.0, 1.0, 1.0),
        polya(2.0, 1.0, 0.6, 1.5, 0.7, 1.0, 2.0),
    ];
    let cf = Registry::builtin().law("closed-form").unwrap();
    for model in models {
        for x in grid21(&model, 1.0) {
            let a = cf.density(&model, x, 1.0).unwrap();
            let s = density_general_series(&model, x, 1.0, 200, &ctrl).unwrap();
            assert!(s.diagnostics.unwrap().converged);
            for (name, u, w) in [
                ("total", a.total, s.total),
                ("f|c", a.f_forward, s.f_forward),
                ("b|c", a.b_forward, s.b_forward),
                ("f|-v", a.f_backward, s.f_backward),
                ("b|-v", a.b_backward, s.b_backward),
            ] {
                assert!((u - w).abs() < 1e-6, "{model} x={x} {name}: closed {u} series {w}");
            }
        }
    }
}

#[test]
fn stationary_logistic_limit() {
    let motion = MotionParams::new(1.0, 1.0).unwrap();
    for &p in &[0.3, 0.5, 0.7] {
        let mut sup: f64 = 0.0;
        for i in 1..4000 {
            let x = -40.0 + 80.0 * i as f64 / 4000.0;
            let d = density_damped(p, 1.0, 1.0, &motion, x, 40.0).unwrap();
            let s = stationary_damped(p, 1.0, 1.0, &motion, x).unwrap();
            sup = sup.max((d.total - s).abs());
        }
        assert!(sup <= 1e-4, "p={p}: sup {sup}");
    }
    let (m, s) = telegraph_core::law::damped::stationary_params(0.5, 1.0, 1.0, &motion).unwrap();
    assert_eq!(m, 0.0);
    let q = QuadOptions::default().with_abs_tol(1e-13).with_rel_tol(1e-13);
    for &p in &[0.3, 0.5, 0.7] {
        let (m, _) = telegraph_core::law::damped::stationary_params(p, 1.0, 1.0, &motion).unwrap();
        let f = |x: f64| stationary_damped(p, 1.0, 1.0, &motion, x).unwrap();
        let mass = integrate(f, m - 80.0, m + 80.0, &q).unwrap().value;
        let var = integrate(|x| (x - m).powi(2) * f(x), m - 80.0, m + 80.0, &q).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-10);
        let want = std::f64::consts::PI.powi(2) * s * s / 3.0;
        assert!((var - want).abs() < 1e-6, "p={p}: {var} vs {want}");
    }
}

#[test]
fn no_stationary_law_without_balance() {
    let motion = MotionParams::new(1.0, 1.0).unwrap();
    assert!(stationary_damped(0.5, 1.0, 2.0, &motion, 0.0).is_err());
    // the density drifts away: on a fixed window it vanishes at large t
    let peak = (0..=100)
        .map(|i| density_damped(0.5, 1.0, 2.0, &motion, -5.0 + 0.1 * i as f64, 40.0).unwrap().total)
        .fold(0.0, f64::max);
    assert!(peak <= 1e-3, "{peak}");
}

fn endpoint_check(model: &Model, t: f64, (lo_lim, hi_lim): (f64, f64)) {
    let cf = Registry::builtin().law("closed-form").unwrap();
    let (lo, hi) = model.motion.support(t);
    let eps = 1e-9;
    let at_lo = cf.density(model, lo * (1.0 - eps), t).unwrap().total;
    let at_hi = cf.density(model, hi * (1.0 - eps), t).unwrap().total;
    assert!((at_lo / lo_lim - 1.0).abs() < 1e-6, "{model}: {at_lo} vs {lo_lim}");
    assert!((at_hi / hi_lim - 1.0).abs() < 1e-6, "{model}: {at_hi} vs {hi_lim}");
}

#[test]
fn endpoint_limits() {
    for &(p, lambda, mu, c, v, t) in &[
        (0.3, 1.0, 1.0, 1.0, 1.0, 1.0),
        (0.1, 1.0, 2.0, 1.0, 1.0, 1.0),
        (0.7, 2.0, 0.5, 1.5, 0.5, 2.0),
    ] {
        let motion = MotionParams::new(c, v).unwrap();
        let lim = endpoint_limits_damped(p, lambda, mu, &motion, t).unwrap();
        endpoint_check(&damped(p, lambda, mu, c, v), t, lim);
    }
    for &(b, r, a, t) in &[(1.0, 1.0, 1.0, 1.0), (2.0, 2.0, 2.0, 1.0), (2.0, 4.0, 2.0, 1.0), (3.0, 2.0, 1.0, 2.0)] {
        let motion = MotionParams::new(1.0, 1.0).unwrap();
        let pp = PolyaParams::new(b, r, a, 1.0, 1.0).unwrap();
        let lim = endpoint_limits_polya(&pp, &motion, t).unwrap();
        endpoint_check(&polya(b, r, a, 1.0, 1.0, 1.0, 1.0), t, lim);
    }
}

#[test]
fn series_evaluator_handles_constant_rate_family() {
    let model = Model::parse("bernoulli:p=0.4", "exp:lambda=1.5,mu=0.5", 1.0, 2.0).unwrap();
    let law = ProcessLaw::new(model, 1.5, Registry::builtin().law("series").unwrap()).unwrap();
    assert_normalized(&law);
    assert!(Registry::builtin()
        .law("closed-form")
        .unwrap()
        .density(&law.model, 0.0, 1.5)
        .is_err());
}

#[test]
fn registry_accepts_custom_evaluators() {
    #[derive(Debug)]
    struct Flat;
    impl LawEvaluator for Flat {
        fn name(&self) -> &'static str {
            "flat"
        }
        fn atoms(&self, _: &Model, _: f64) -> telegraph_core::Result<Atoms> {
            Ok(Atoms::from_conditional(0.5, 0.0, 0.0))
        }
        fn density(&self, model: &Model, x: f64, t: f64) -> telegraph_core::Result<DensityPoint> {
            let w = 1.0 / ((model.motion.c + model.motion.v) * t);
            Ok(DensityPoint::from_pieces(x, 0.5, (w, 0.0), (0.0, w)))
        }
    }
    let mut reg = Registry::builtin();
    reg.register_law(Arc::new(Flat));
    let law = ProcessLaw::new(damped(0.5, 1.0, 1.0, 1.0, 1.0), 2.0, reg.law("flat").unwrap()).unwrap();
    assert!((law.total_mass(None, &opts()).unwrap() - 1.0).abs() < 1e-12);
}
