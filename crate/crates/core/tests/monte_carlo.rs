use telegraph_core::intertimes::IntertimeModel;
use telegraph_core::law::ProcessLaw;
use telegraph_core::mean_velocity::{ClosedFormMeanVelocity, MeanVelocityMethod};
use telegraph_core::monte_carlo::*;
use telegraph_core::registry::Registry;
use telegraph_core::rng::path_rng;
use telegraph_core::validation::{check_empirical_vs_analytic, Check};
use telegraph_core::{Model, VelocitySign};

const MILLION: u64 = 1_000_000;

fn damped(p: f64) -> Model {
    Model::parse(&format!("bernoulli:p={p}"), "linexp:lambda=1,mu=1", 1.0, 1.0).unwrap()
}

fn polya_fig6() -> Model {
    Model::parse("polya:b=1,r=2,A=2", "gammaexp:lambda=1,mu=1", 1.0, 1.0).unwrap()
}

fn law(model: Model, t: f64) -> ProcessLaw {
    ProcessLaw::new(model, t, Registry::builtin().law("closed-form").unwrap()).unwrap()
}

fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[test]
fn damped_histogram_and_atoms_match_law() {
    let emp = estimate_law(&damped(0.3), 1.0, MILLION, 50, 2024).unwrap();
    assert_eq!(emp.total_count(), MILLION);
    let checks = check_empirical_vs_analytic(&emp, &law(damped(0.3), 1.0));
    assert!(all_pass(&checks), "{checks:#?}");
}

#[test]
fn polya_histogram_and_atoms_match_law() {
    let emp = estimate_law(&polya_fig6(), 1.0, MILLION, 50, 77).unwrap();
    let checks = check_empirical_vs_analytic(&emp, &law(polya_fig6(), 1.0));
    assert!(all_pass(&checks), "{checks:#?}");
}

#[test]
fn mismatched_trial_probability_is_detected() {
    let emp = estimate_law(&damped(0.3), 1.0, MILLION, 50, 2024).unwrap();
    let checks = check_empirical_vs_analytic(&emp, &law(damped(0.5), 1.0));
    assert!(!all_pass(&checks));
    // the atoms alone already reveal the mismatch
    assert!(!checks[0].passed && !checks[1].passed);
}

#[test]
fn small_runs_use_wider_bands() {
    let emp = estimate_law(&damped(0.3), 1.0, 1000, 50, 5).unwrap();
    let checks = check_empirical_vs_analytic(&emp, &law(damped(0.3), 1.0));
    assert!(all_pass(&checks), "{checks:#?}");
    assert!(checks[0].tolerance > 0.01);
}

#[test]
fn damped_atom_frequency() {
    let emp = estimate_law(&damped(0.3), 2.0, MILLION, 10, 99).unwrap();
    let a = law(damped(0.3), 2.0).atoms;
    for (freq, target) in [(emp.atom_plus_freq(), a.plus), (emp.atom_minus_freq(), a.minus)] {
        let se = binomial_se(target, MILLION);
        assert!((freq - target).abs() <= 3.0 * se, "{freq} vs {target} (se {se})");
    }
}

#[test]
fn mean_velocity_matches_closed_forms() {
    let closed = ClosedFormMeanVelocity::default();
    for (model, t) in [
        (damped(0.4), 1.0),
        (Model::parse("bernoulli:p=0.7", "linexp:lambda=2,mu=0.5", 1.5, 1.0).unwrap(), 0.8),
        (polya_fig6(), 1.0),
        (Model::parse("polya:b=1,r=1,A=1", "gammaexp:lambda=1,mu=1", 1.0, 1.0).unwrap(), 1.0),
    ] {
        for (i, s) in [VelocitySign::Forward, VelocitySign::Backward].into_iter().enumerate() {
            let a = closed.mean_velocity(&model, t, s).unwrap().value;
            let mc = estimate_mean_velocity(&model, t, MILLION, s, 300 + i as u64).unwrap();
            assert!(
                (mc.mean - a).abs() <= 3.0 * mc.std_err,
                "{model} {s}: analytic {a}, simulated {} +- {}",
                mc.mean,
                mc.std_err
            );
        }
    }
}

#[test]
fn iid_periods_give_linear_mean_position() {
    let model = Model::parse("bernoulli:p=0.3", "exp:lambda=1.5,mu=1.5", 1.0, 2.0).unwrap();
    let t = 2.0;
    let target = telegraph_core::mean_velocity::mean_position_iid_check(&model, t).unwrap();
    let mc = estimate_mean_position(&model, t, MILLION, 8).unwrap();
    assert!((mc.mean - target).abs() <= 3.0 * mc.std_err, "{} +- {} vs {target}", mc.mean, mc.std_err);
}

#[test]
fn partial_sums_of_linear_rate_periods() {
    // U^(3) is the maximum of three unit exponentials
    let it = Registry::builtin()
        .intertimes("linexp:lambda=1,mu=1", &telegraph_core::TrialScheme::bernoulli(0.5).unwrap())
        .unwrap();
    let mut hits = 0u64;
    for i in 0..MILLION {
        let mut rng = path_rng(12, i);
        let s: f64 = (1..=3).map(|k| it.sample(VelocitySign::Forward, k, &mut rng)).sum();
        hits += u64::from(s <= 1.0);
    }
    let want = (1.0 - (-1f64).exp()).powi(3);
    let freq = hits as f64 / MILLION as f64;
    assert!((freq - want).abs() <= 3.0 * binomial_se(want, MILLION), "{freq} vs {want}");
    assert!((it.partial_sum_cdf(VelocitySign::Forward, 3, 1.0).unwrap() - want).abs() < 1e-15);
}

#[test]
fn first_polya_period_has_gamma_mean() {
    let it = telegraph_core::intertimes::GammaThenExponential::new(1.0, 2.0, 2.0, 1.5, 0.5).unwrap();
    for (dir, shape, rate) in [(VelocitySign::Forward, 1.5, 1.5), (VelocitySign::Backward, 2.0, 0.5)] {
        let (mut s, mut s2) = (0.0, 0.0);
        for i in 0..MILLION {
            let x = it.sample(dir, 1, &mut path_rng(3, i));
            s += x;
            s2 += x * x;
        }
        let n = MILLION as f64;
        let mean = s / n;
        let se = ((s2 / n - mean * mean) / n).sqrt();
        let want = shape / rate;
        assert!((mean - want).abs() <= 3.0 * se, "{dir}: {mean} vs {want}");
    }
}

#[test]
fn paths_stay_in_support_and_atoms_are_exact() {
    let model = Model::parse("polya:b=0.5,r=0.5,A=1", "gammaexp:lambda=3,mu=2", 1.5, 0.5).unwrap();
    let t = 0.7;
    let (lo, hi) = model.motion.support(t);
    for i in 0..20_000 {
        let p = simulate_path(&model, t, &mut path_rng(1, i), None, false).unwrap();
        assert!(p.final_position >= lo && p.final_position <= hi);
        if p.at_plus_atom() {
            assert_eq!(p.final_position, hi);
        } else if p.at_minus_atom() {
            assert_eq!(p.final_position, lo);
        } else {
            assert!(p.final_position > lo && p.final_position < hi);
        }
    }
}
