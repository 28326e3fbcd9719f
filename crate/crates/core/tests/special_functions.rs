use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use telegraph_core::quadrature::{integrate, QuadOptions};
use telegraph_core::special::*;

const RM: RoundingMode = RoundingMode::ToEven;
const P: usize = 384;

/// Plain Maclaurin series of 1F1 in 384-bit arithmetic.
fn f11_oracle(a: f64, b: f64, z: f64) -> f64 {
    let mut cc = Consts::new().unwrap();
    let (a, b, z) = (BigFloat::from_f64(a, P), BigFloat::from_f64(b, P), BigFloat::from_f64(z, P));
    let one = BigFloat::from_u64(1, P);
    let mut term = one.clone();
    let mut sum = one.clone();
    for k in 0..2000u64 {
        let kk = BigFloat::from_u64(k, P);
        let num = a.add(&kk, P, RM).mul(&z, P, RM);
        let den = b.add(&kk, P, RM).mul(&kk.add(&one, P, RM), P, RM);
        term = term.mul(&num, P, RM).div(&den, P, RM);
        sum = sum.add(&term, P, RM);
        if term.is_zero() {
            break;
        }
    }
    sum.format(Radix::Dec, RM, &mut cc).unwrap().parse().unwrap()
}

fn ctrl() -> SeriesControl {
    SeriesControl::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn oracle_agrees_with_reference_values() {
    // 40-digit references
    assert!(rel(f11_oracle(1.0, 3.0, 2.0), 2.194_528_049_465_325_1) < 1e-15);
    assert!(rel(f11_oracle(0.5, 3.5, -20.0), 0.353_680_516_069_116_28) < 1e-15);
}

#[test]
fn kummer_matches_reference_values() {
    let cases = [
        (1.0, 3.0, 2.0, 2.194_528_049_465_325_1),
        (0.5, 3.5, -20.0, 0.353_680_516_069_116_28),
        (3.5, 0.5, 20.0, 2_905_007_468_382.020_9),
        (2.0, 1.0, -7.5, -0.003_595_048_405_960_918_3),
        (1.0, 2.5, 150.0, 1.008_490_001_060_069_5e62),
    ];
    for (a, b, z, want) in cases {
        let got = kummer_1f1(a, b, z, &ctrl()).unwrap();
        assert!(rel(got, want) < 1e-12, "1F1({a},{b};{z}) = {got}, want {want}");
    }
}

#[test]
fn kummer_relation_on_lattice() {
    let grid = [0.5, 1.0, 2.0, 3.5];
    for &a in &grid {
        for &b in &grid {
            for i in 0..=40 {
                let z = -20.0 + i as f64;
                let lhs = kummer_1f1(a, b, z, &ctrl()).unwrap();
                let rhs = z.exp() * kummer_1f1(b - a, b, -z, &ctrl()).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                    "a={a} b={b} z={z}: {lhs} vs {rhs}"
                );
                if z.abs() <= 20.0 {
                    let want = f11_oracle(a, b, z);
                    // near a zero of 1F1 only absolute accuracy on the scale e^{min(z,0)} is meaningful
                    let floor = 1e-14 * z.min(0.0).exp();
                    assert!(
                        (lhs - want).abs() <= 1e-12 * want.abs() + floor,
                        "a={a} b={b} z={z}: {lhs} vs oracle {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn kummer_at_zero_is_one() {
    for &a in &[-3.0, 0.5, 1.0, 7.25] {
        for &b in &[0.5, 1.0, 2.0, 11.0] {
            assert_eq!(kummer_1f1(a, b, 0.0, &ctrl()).unwrap(), 1.0);
        }
    }
}

#[test]
fn kummer_one_two_is_exprel() {
    for i in 0..=600 {
        let z = -30.0 + 0.1 * i as f64;
        let want = if z == 0.0 { 1.0 } else { z.exp_m1() / z };
        let got = kummer_1f1(1.0, 2.0, z, &ctrl()).unwrap();
        assert!(rel(got, want) < 1e-12, "z={z}: {got} vs {want}");
    }
}

#[test]
fn kummer_large_argument_asymptote() {
    for &(a, b) in &[(1.0, 2.0), (0.5, 3.5), (2.0, 1.0)] {
        let z = 200.0;
        let scaled = (ln_kummer_1f1(a, b, z, &ctrl()).unwrap() - z + (b - a) * z.ln()).exp();
        let want = (ln_gamma(b) - ln_gamma(a)).exp();
        assert!(rel(scaled, want) < 0.01, "a={a} b={b}: {scaled} vs {want}");
    }
}

#[test]
fn gamma_cdf_matches_statrs() {
    use statrs::distribution::{ContinuousCDF, Gamma};
    for &alpha in &[0.3, 1.0, 2.0, 3.5, 12.0, 60.0] {
        for &mu in &[0.5, 1.0, 4.0] {
            let d = Gamma::new(alpha, mu).unwrap();
            for i in 1..60 {
                let t = 0.05 * i as f64 * (alpha + 1.0) / mu;
                let got = gamma_cdf(alpha, mu, t).unwrap();
                let want = d.cdf(t);
                assert!((got - want).abs() < 1e-12, "alpha={alpha} mu={mu} t={t}: {got} vs {want}");
                let sf = gamma_sf(alpha, mu, t).unwrap();
                assert!((sf - d.sf(t)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn gamma_cdf_monotone_and_saturates() {
    for &(alpha, mu) in &[(0.5f64, 1.0f64), (2.0, 3.0), (7.5, 0.5)] {
        let top = 50.0 / mu * alpha.max(1.0);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let v = gamma_cdf(alpha, mu, top * i as f64 / 1000.0).unwrap();
            assert!(v >= prev && (0.0..=1.0).contains(&v), "alpha={alpha} mu={mu} i={i}: {v} after {prev}");
            prev = v;
        }
        assert!(1.0 - prev < 1e-9);
    }
}

fn g_oracle(alpha: f64, mu: f64, beta: f64, lambda: f64, t: f64) -> f64 {
    use statrs::distribution::{Continuous, ContinuousCDF, Gamma};
    let x = Gamma::new(alpha, mu).unwrap();
    let y = Gamma::new(beta, lambda).unwrap();
    let opts = QuadOptions::default()
        .with_abs_tol(1e-13)
        .with_rel_tol(1e-12)
        .with_endpoint_transform(true);
    integrate(|s| x.cdf(t - s) * y.pdf(s), 0.0, t, &opts).unwrap().value
}

#[test]
fn conv_gamma_examples() {
    assert_eq!(conv_gamma_cdf(1.0, 1.0, 1.0, 1.0, 0.0, &ctrl()).unwrap(), 0.0);
    let e = conv_gamma_cdf(1.0, 1.0, 1.0, 1.0, 1.0, &ctrl()).unwrap();
    assert!((e - (1.0 - 2.0 / std::f64::consts::E)).abs() < 1e-14);
    let g = conv_gamma_cdf(1.5, 2.0, 1.0, 1.0, 0.7, &ctrl()).unwrap();
    assert!((g - 0.162_907_316_331_097_25).abs() < 1e-12);
}

#[test]
fn conv_gamma_matches_quadrature_on_lattice() {
    let shapes = [0.5, 1.0, 2.5];
    let rates = [0.5, 1.0, 3.0];
    for &alpha in &shapes {
        for &beta in &shapes {
            for &mu in &rates {
                for &lambda in &rates {
                    for &t in &[0.1, 1.0, 5.0] {
                        let got = conv_gamma_cdf(alpha, mu, beta, lambda, t, &ctrl()).unwrap();
                        let want = g_oracle(alpha, mu, beta, lambda, t);
                        assert!(
                            (got - want).abs() < 1e-8,
                            "G({alpha},{mu},{beta},{lambda};{t}) = {got}, quadrature {want}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn conv_gamma_is_symmetric_and_monotone() {
    let mut prev = 0.0;
    for i in 0..200 {
        let t = 0.05 * i as f64;
        let a = conv_gamma_cdf(0.7, 3.0, 2.0, 0.4, t, &ctrl()).unwrap();
        let b = conv_gamma_cdf(2.0, 0.4, 0.7, 3.0, t, &ctrl()).unwrap();
        assert!((a - b).abs() < 1e-13);
        assert!(a >= prev - 1e-15);
        prev = a;
    }
}

fn h_oracle(alpha: f64, beta: f64, t: f64) -> f64 {
    // (t-y) 1F1(1,2; alpha (t-y)) e^{-alpha (t-y)} = (1 - e^{-alpha (t-y)})/alpha
    let kernel = |u: f64| if alpha == 0.0 { u } else { -(-alpha * u).exp_m1() / alpha };
    let opts = QuadOptions::default().with_abs_tol(1e-14).with_rel_tol(1e-13);
    integrate(|y| kernel(t - y) * (-beta * y).exp(), 0.0, t, &opts).unwrap().value
}

#[test]
fn kernel_h_examples() {
    assert_eq!(kernel_h(0.0, 0.0, 2.0), 2.0);
    // defining integral at alpha = 0, beta = 1, t = 1 is e^{-1}
    assert!((kernel_h(0.0, 1.0, 1.0) - (-1f64).exp()).abs() < 1e-15);
    assert!((kernel_h(1.0, 2.0, 0.5) - 0.077_409_060_873_087_737).abs() < 1e-14);
}

#[test]
fn kernel_h_matches_quadrature_on_lattice() {
    let grid = [-2.0, 0.0, 1.0, 3.0];
    for &alpha in &grid {
        for &beta in &grid {
            for &t in &[0.1, 1.0, 5.0] {
                let got = kernel_h(alpha, beta, t);
                let want = h_oracle(alpha, beta, t);
                assert!(
                    (got - want).abs() < 1e-8 * want.abs().max(1.0),
                    "H({alpha},{beta};{t}) = {got}, quadrature {want}"
                );
            }
        }
    }
}

#[test]
fn pochhammer_examples() {
    assert_eq!(pochhammer(2.5, 0).unwrap(), 1.0);
    assert_eq!(pochhammer(1.0, 4).unwrap(), 24.0);
    assert_eq!(pochhammer(2.5, 3).unwrap(), 39.375);
    assert!(matches!(pochhammer(10.0, 400), Err(telegraph_core::Error::OutOfRange { .. })));
}
