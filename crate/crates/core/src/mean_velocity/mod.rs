//! Conditional mean velocity `E[V_t | V_0]`.
//!
//! With `k` switches by time `t`, `N_{k-1} = j` and the running velocity
//! `Z_k`, the period running at `t` is forward period `n_f + 1` (or backward
//! period `n_b + 1`), so
//!
//! `E[V_t | V_0] = sum_k sum_j sum_z z P{N_{k-1}=j, Z_k=z | Z_0} P{T_k <= t < T_{k+1} | ...}`.
//!
//! The general method evaluates the window probabilities by quadrature of
//! the partial-sum laws; the closed forms reduce them to exponentials
//! (damped case) or to the Gamma-convolution function `G` (Pólya case).

pub mod damped;
pub mod polya;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::intertimes::{Family, IntertimeModel};
use crate::law::PolyaParams;
use crate::model::Model;
use crate::quadrature::{integrate, QuadOptions};
use crate::trials::{TrialScheme, VelocitySign};

pub use damped::mean_velocity_damped;
pub use polya::mean_velocity_polya;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanVelocity {
    pub value: f64,
    /// Number of switch shells summed.
    pub shells: u64,
    /// Absolute size of the last shell.
    pub last_shell: f64,
}

/// Shell truncation: stop after `run` consecutive shells whose absolute size
/// is below `tol * (c + v)`; fail after `cap` shells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellTruncation {
    pub tol: f64,
    pub run: usize,
    pub cap: u64,
}

impl Default for ShellTruncation {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            run: 3,
            cap: 300,
        }
    }
}

/// Running shell sum with the truncation rule applied.
pub(crate) struct ShellSum {
    rule: ShellTruncation,
    scale: f64,
    value: f64,
    small: usize,
    shells: u64,
    last: f64,
}

impl ShellSum {
    pub(crate) fn new(rule: ShellTruncation, scale: f64, start: f64) -> Self {
        Self {
            rule,
            scale,
            value: start,
            small: 0,
            shells: 0,
            last: 0.0,
        }
    }

    /// Adds one shell; returns `true` once the sum may stop.
    pub(crate) fn push(&mut self, value: f64, magnitude: f64) -> bool {
        self.value += value;
        self.shells += 1;
        self.last = magnitude;
        if magnitude < self.rule.tol * self.scale {
            self.small += 1;
        } else {
            self.small = 0;
        }
        self.small >= self.rule.run
    }

    pub(crate) fn finish(self, what: &'static str, done: bool) -> Result<MeanVelocity> {
        if !done {
            return Err(Error::Truncation {
                what,
                terms: self.shells as usize,
                bound: self.last,
            });
        }
        Ok(MeanVelocity {
            value: self.value,
            shells: self.shells,
            last_shell: self.last,
        })
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain("mean velocity", format!("t = {t} must be > 0")))
    }
}

/// Computes `E[V_t | V_0]` for a model.
pub trait MeanVelocityMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn mean_velocity(&self, model: &Model, t: f64, initial: VelocitySign) -> Result<MeanVelocity>;
}

/// Series with window probabilities from quadrature; works for every
/// intertime family.
#[derive(Debug, Clone, Copy, Default)]
pub struct GeneralMeanVelocity {
    pub truncation: ShellTruncation,
}

impl MeanVelocityMethod for GeneralMeanVelocity {
    fn name(&self) -> &'static str {
        "general"
    }

    fn mean_velocity(&self, model: &Model, t: f64, initial: VelocitySign) -> Result<MeanVelocity> {
        mean_velocity_general(model, t, initial, &self.truncation)
    }
}

/// Closed forms for the damped Bernoulli and Pólya cases.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedFormMeanVelocity {
    pub truncation: ShellTruncation,
}

impl MeanVelocityMethod for ClosedFormMeanVelocity {
    fn name(&self) -> &'static str {
        "closed-form"
    }

    fn mean_velocity(&self, model: &Model, t: f64, initial: VelocitySign) -> Result<MeanVelocity> {
        match (model.scheme, model.intertimes.family()) {
            (TrialScheme::Bernoulli { p }, Family::LinearRate { lambda, mu }) => {
                mean_velocity_damped(p, lambda, mu, &model.motion, t, initial, &self.truncation)
            }
            (TrialScheme::Polya { .. }, Family::GammaThenExp { b, r, a, lambda, mu }) => {
                let pp = PolyaParams::new(b, r, a, lambda, mu)?;
                mean_velocity_polya(&pp, &model.motion, t, initial, &self.truncation)
            }
            _ => Err(Error::Unsupported(format!(
                "no closed-form mean velocity for {} with {}; use the general method",
                model.scheme,
                model.intertimes.spec()
            ))),
        }
    }
}

fn window_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-11,
        max_intervals: 500,
        endpoint_transform: false,
    }
}

/// `P{A^(na) + B^(nb) <= t < A^(na+1) + B^(nb)}` where `A` is the direction
/// running at `t` and `B` the other one.
fn window(it: &dyn IntertimeModel, running: VelocitySign, na: u64, nb: u64, t: f64) -> Result<f64> {
    let other = running.flip();
    let gap = |s: f64| -> Result<f64> {
        Ok(it.partial_sum_cdf(running, na, s)? - it.partial_sum_cdf(running, na + 1, s)?)
    };
    if nb == 0 {
        return gap(t);
    }
    let err = std::cell::RefCell::new(None);
    let g = |d: f64| {
        let r = it
            .partial_sum_density(other, nb, d)
            .and_then(|fd| Ok(fd * gap(t - d)?));
        r.unwrap_or_else(|e| {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    };
    let r = integrate(g, 0.0, t, &window_opts());
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}

/// `E[V_t | V_0 = initial]` by the general series.
pub fn mean_velocity_general(
    model: &Model,
    t: f64,
    initial: VelocitySign,
    rule: &ShellTruncation,
) -> Result<MeanVelocity> {
    check_time(t)?;
    let it = model.intertimes.as_ref();
    let (c, v) = (model.motion.c, model.motion.v);
    let start = model.velocity(initial) * it.tail(initial, 1, t)?;
    let mut sum = ShellSum::new(*rule, c + v, start);
    let x1 = u64::from(initial.is_forward());
    let mut done = false;
    for k in 1..=rule.cap {
        let (mut shell, mut mag) = (0.0, 0.0);
        for j in 0..k {
            let n_f = x1 + j;
            if n_f > k {
                continue;
            }
            let n_b = k - n_f;
            let wf = model
                .scheme
                .joint_count_velocity(k, j, initial, VelocitySign::Forward)?;
            if wf > 0.0 {
                let q = window(it, VelocitySign::Forward, n_f, n_b, t)?;
                shell += c * wf * q;
                mag += c * wf * q.abs();
            }
            let wb = model
                .scheme
                .joint_count_velocity(k, j, initial, VelocitySign::Backward)?;
            if wb > 0.0 {
                let q = window(it, VelocitySign::Backward, n_b, n_f, t)?;
                shell -= v * wb * q;
                mag += v * wb * q.abs();
            }
        }
        if sum.push(shell, mag) {
            done = true;
            break;
        }
    }
    sum.finish("mean velocity series", done)
}

/// `E[S_t] = t E[Z_0]` when every period, forward or backward, has the same
/// exponential law independent of the trials.
pub fn mean_position_iid_check(model: &Model, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain("mean_position_iid_check", format!("t = {t} must be >= 0")));
    }
    match model.intertimes.family() {
        Family::ConstantRate { lambda, mu } if lambda == mu => {
            let p0 = model.scheme.initial_forward_prob();
            Ok(t * (model.motion.c * p0 - model.motion.v * (1.0 - p0)))
        }
        _ => Err(Error::Unsupported(format!(
            "E[S_t] = t E[Z_0] needs identically distributed periods (exp with lambda = mu), got {}",
            model.intertimes.spec()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_check_examples() {
        let m = Model::parse("bernoulli:p=0.5", "exp:lambda=2,mu=2", 1.0, 1.0).unwrap();
        assert_eq!(mean_position_iid_check(&m, 4.0).unwrap(), 0.0);
        let m = Model::parse("bernoulli:p=0.5", "exp:lambda=1,mu=1", 2.0, 1.0).unwrap();
        assert!((mean_position_iid_check(&m, 3.0).unwrap() - 1.5).abs() < 1e-15);
        let m = Model::parse("bernoulli:p=0.5", "exp:lambda=1,mu=2", 2.0, 1.0).unwrap();
        assert!(mean_position_iid_check(&m, 3.0).is_err());
        let m = Model::parse("bernoulli:p=0.5", "linexp:lambda=1,mu=1", 2.0, 1.0).unwrap();
        assert!(mean_position_iid_check(&m, 3.0).is_err());
    }

    #[test]
    fn small_time_limit() {
        let m = Model::parse("polya:b=1,r=2,A=1", "gammaexp:lambda=1,mu=1", 1.5, 1.0).unwrap();
        let g = mean_velocity_general(&m, 1e-6, VelocitySign::Forward, &ShellTruncation::default()).unwrap();
        assert!((g.value - 1.5).abs() < 1e-6);
        let g = mean_velocity_general(&m, 1e-6, VelocitySign::Backward, &ShellTruncation::default()).unwrap();
        assert!((g.value + 1.0).abs() < 1e-6);
    }

    #[test]
    fn window_without_other_periods() {
        let m = Model::parse("bernoulli:p=0.4", "linexp:lambda=1,mu=1", 1.0, 1.0).unwrap();
        let it = m.intertimes.as_ref();
        // P{U_1 <= t < U_1 + U_2} = F^(1) - F^(2)
        let q = window(it, VelocitySign::Forward, 1, 0, 1.0).unwrap();
        let e = 1.0 - (-1f64).exp();
        assert!((q - (e - e * e)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_time_and_unsupported_closed_form() {
        let m = Model::parse("bernoulli:p=0.4", "exp:lambda=1,mu=1", 1.0, 1.0).unwrap();
        assert!(mean_velocity_general(&m, 0.0, VelocitySign::Forward, &ShellTruncation::default()).is_err());
        let err = ClosedFormMeanVelocity::default()
            .mean_velocity(&m, 1.0, VelocitySign::Forward)
            .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
