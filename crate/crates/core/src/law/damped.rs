//! Damped Bernoulli case: trials with success probability `p`, periods
//! `U_k ~ Exp(lambda k)` and `D_k ~ Exp(mu k)`. The density of `S_t` is a
//! truncated logistic with scale `s = (c+v)/(lambda+mu)`.

use crate::error::{domain, Error, Result};
use crate::law::{interior_tau, Atoms, DensityPoint};
use crate::model::MotionParams;

fn check(p: f64, lambda: f64, mu: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("damped law", format!("p = {p} must lie in (0, 1)")));
    }
    if !(lambda > 0.0 && mu > 0.0 && lambda.is_finite() && mu.is_finite()) {
        return Err(domain("damped law", format!("rates must be > 0, got {lambda}, {mu}")));
    }
    Ok(())
}

/// `P{S_t = ct | V_0 = c}` for the damped process.
fn stay_prob(p: f64, rate: f64, t: f64) -> f64 {
    let e = (-rate * t).exp();
    // 1 - p(1 - e) = (1 - p) + p e
    e / ((1.0 - p) + p * e)
}

pub fn atoms_damped(p: f64, lambda: f64, mu: f64, t: f64) -> Result<Atoms> {
    check(p, lambda, mu)?;
    if !(t >= 0.0) {
        return Err(domain("atoms_damped", format!("t = {t} must be >= 0")));
    }
    Ok(Atoms::from_conditional(
        p,
        stay_prob(p, lambda, t),
        stay_prob(1.0 - p, mu, t),
    ))
}

/// `(f(x,t|c), b(x,t|c))` at forward time `tau`, scaled so that no
/// exponential overflows.
fn pieces_given_forward(p: f64, lambda: f64, mu: f64, cv: f64, tau: f64, t: f64) -> (f64, f64) {
    let e1 = mu * t;
    let e2 = (lambda + mu) * tau;
    let l = e1.max(e2);
    let d = p * (e1 - l).exp() + (1.0 - p) * (e2 - l).exp();
    let d2 = d * d;
    let q = 1.0 - p;
    let f = q * p * mu * (e1 + e2 - 2.0 * l).exp() * (-(-lambda * tau).exp_m1()) / (cv * d2);
    let b = q
        * lambda
        * (p * (e2 + e1 - 2.0 * l).exp() + q * (e2 + mu * tau - 2.0 * l).exp())
        / (cv * d2);
    (f, b)
}

/// Logistic factor `sigma(u) sigma(-u)`.
fn logistic_kernel(u: f64) -> f64 {
    let e = (-u.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Density of `S_t` and its conditional pieces for the damped process.
pub fn density_damped(
    p: f64,
    lambda: f64,
    mu: f64,
    motion: &MotionParams,
    x: f64,
    t: f64,
) -> Result<DensityPoint> {
    check(p, lambda, mu)?;
    let MotionParams { c, v } = *motion;
    let tau = interior_tau(c, v, x, t)?;
    let cv = c + v;
    let fwd = pieces_given_forward(p, lambda, mu, cv, tau, t);
    // mirror image: forward and backward roles exchanged
    let (bm, fm) = pieces_given_forward(1.0 - p, mu, lambda, cv, t - tau, t);
    let mut point = DensityPoint::from_pieces(x, p, fwd, (fm, bm));
    let s = cv / (lambda + mu);
    let u = (p / (1.0 - p)).ln() + (mu - v / s) * t - x / s;
    point.total = logistic_kernel(u) / s;
    Ok(point)
}

/// Limits of the density at `x -> -vt` and `x -> ct`.
pub fn endpoint_limits_damped(
    p: f64,
    lambda: f64,
    mu: f64,
    motion: &MotionParams,
    t: f64,
) -> Result<(f64, f64)> {
    check(p, lambda, mu)?;
    let s = (motion.c + motion.v) / (lambda + mu);
    let odds = (p / (1.0 - p)).ln();
    Ok((
        logistic_kernel(odds + mu * t) / s,
        logistic_kernel(odds - lambda * t) / s,
    ))
}

/// Stationary logistic density, which exists only when `lambda v = mu c`.
pub fn stationary_damped(p: f64, lambda: f64, mu: f64, motion: &MotionParams, x: f64) -> Result<f64> {
    let (m, s) = stationary_params(p, lambda, mu, motion)?;
    Ok(logistic_kernel((x - m) / s) / s)
}

/// Location `m = s ln(p/(1-p))` and scale `s = v/mu` of the stationary law.
pub fn stationary_params(p: f64, lambda: f64, mu: f64, motion: &MotionParams) -> Result<(f64, f64)> {
    check(p, lambda, mu)?;
    let lv = lambda * motion.v;
    let mc = mu * motion.c;
    if (lv - mc).abs() > 1e-12 * lv.abs().max(mc.abs()) {
        return Err(Error::NoStationaryLaw {
            lambda_v: lv,
            mu_c: mc,
        });
    }
    let s = motion.v / mu;
    Ok((s * (p / (1.0 - p)).ln(), s))
}
