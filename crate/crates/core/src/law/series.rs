//! General law of `S_t` as a series over the number of switches, usable
//! with any intertime family.
//!
//! With `k` switches by time `t` and `N_{k-1} = j`, the number of completed
//! forward periods is `n_f = X_1 + j` and of completed backward periods
//! `n_b = k - n_f`. If the running period is forward, the backward time
//! `t - tau_*` is exactly `D^(n_b)` and the forward time straddles
//! `U^(n_f) <= tau_* < U^(n_f+1)`; the backward case is symmetric.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::intertimes::{Direction, IntertimeModel};
use crate::law::{interior_tau, Atoms, DensityPoint};
use crate::model::Model;
use crate::quadrature::{integrate, QuadOptions};
use crate::special::SeriesControl;
use crate::trials::VelocitySign;

/// How the truncated series ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesDiagnostics {
    pub shells: u64,
    /// Contribution of the last evaluated shell.
    pub last_shell: f64,
    /// Whether the early-exit rule fired before `k_max`.
    pub converged: bool,
}

const SMALL_RUN: usize = 3;

fn inner_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        max_intervals: 500,
        endpoint_transform: false,
    }
}

/// `P{sum of the first n periods <= s < sum of the first n+1}` written as
/// the convolution `int_0^s f^(n)(u) P{period n+1 > s-u} du`.
fn straddle(it: &dyn IntertimeModel, dir: Direction, n: u64, s: f64) -> Result<f64> {
    if n == 0 {
        return it.tail(dir, 1, s);
    }
    let err = std::cell::RefCell::new(None);
    let g = |u: f64| {
        let r = it
            .partial_sum_density(dir, n, u)
            .and_then(|d| Ok(d * it.tail(dir, n + 1, s - u)?));
        r.unwrap_or_else(|e| {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    };
    let r = integrate(g, 0.0, s, &inner_opts());
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}

/// Lazily filled per-`n` cache for one `(direction, time)` pair.
struct Cache<'a> {
    it: &'a dyn IntertimeModel,
    dir: Direction,
    s: f64,
    density: Vec<Option<f64>>,
    straddle: Vec<Option<f64>>,
}

impl<'a> Cache<'a> {
    fn new(it: &'a dyn IntertimeModel, dir: Direction, s: f64) -> Self {
        Self {
            it,
            dir,
            s,
            density: Vec::new(),
            straddle: Vec::new(),
        }
    }

    fn density(&mut self, n: u64) -> Result<f64> {
        let i = n as usize;
        if self.density.len() <= i {
            self.density.resize(i + 1, None);
        }
        if let Some(v) = self.density[i] {
            return Ok(v);
        }
        let v = self.it.partial_sum_density(self.dir, n, self.s)?;
        self.density[i] = Some(v);
        Ok(v)
    }

    fn straddle(&mut self, n: u64) -> Result<f64> {
        let i = n as usize;
        if self.straddle.len() <= i {
            self.straddle.resize(i + 1, None);
        }
        if let Some(v) = self.straddle[i] {
            return Ok(v);
        }
        let v = straddle(self.it, self.dir, n, self.s)?;
        self.straddle[i] = Some(v);
        Ok(v)
    }
}

/// `(f(x,t|initial), b(x,t|initial))` summed shell by shell.
fn conditional_pieces(
    model: &Model,
    initial: VelocitySign,
    tau: f64,
    t: f64,
    k_max: u64,
    ctrl: &SeriesControl,
) -> Result<(f64, f64, SeriesDiagnostics)> {
    let it = model.intertimes.as_ref();
    let cv = model.motion.c + model.motion.v;
    let mut fwd = Cache::new(it, VelocitySign::Forward, tau);
    let mut bwd = Cache::new(it, VelocitySign::Backward, t - tau);
    let x1 = u64::from(initial.is_forward());
    let (mut f, mut b) = (0.0, 0.0);
    let mut run = 0usize;
    let mut last = 0.0;
    for k in 1..=k_max {
        let (mut sf, mut sb) = (0.0, 0.0);
        for j in 0..k {
            let n_f = x1 + j;
            if n_f > k {
                continue;
            }
            let n_b = k - n_f;
            if n_b >= 1 {
                let w = model
                    .scheme
                    .joint_count_velocity(k, j, initial, VelocitySign::Forward)?;
                if w > 0.0 {
                    sf += w * bwd.density(n_b)? * fwd.straddle(n_f)?;
                }
            }
            if n_f >= 1 {
                let w = model
                    .scheme
                    .joint_count_velocity(k, j, initial, VelocitySign::Backward)?;
                if w > 0.0 {
                    sb += w * fwd.density(n_f)? * bwd.straddle(n_b)?;
                }
            }
        }
        sf /= cv;
        sb /= cv;
        f += sf;
        b += sb;
        last = sf + sb;
        if last <= ctrl.rel_tol() * (f + b) {
            run += 1;
            if run >= SMALL_RUN {
                return Ok((
                    f,
                    b,
                    SeriesDiagnostics {
                        shells: k,
                        last_shell: last,
                        converged: true,
                    },
                ));
            }
        } else {
            run = 0;
        }
    }
    Ok((
        f,
        b,
        SeriesDiagnostics {
            shells: k_max,
            last_shell: last,
            converged: false,
        },
    ))
}

/// Density via the switch-count series. `k_max` bounds the number of
/// shells; if it is reached first the diagnostics say so.
pub fn density_general_series(
    model: &Model,
    x: f64,
    t: f64,
    k_max: u64,
    ctrl: &SeriesControl,
) -> Result<DensityPoint> {
    if k_max == 0 {
        return Err(crate::error::domain("density_general_series", "k_max must be >= 1"));
    }
    let tau = interior_tau(model.motion.c, model.motion.v, x, t)?;
    let (ff, bf, d1) = conditional_pieces(model, VelocitySign::Forward, tau, t, k_max, ctrl)?;
    let (fb, bb, d2) = conditional_pieces(model, VelocitySign::Backward, tau, t, k_max, ctrl)?;
    let p0 = model.scheme.initial_forward_prob();
    let mut point = DensityPoint::from_pieces(x, p0, (ff, bf), (fb, bb));
    point.diagnostics = Some(SeriesDiagnostics {
        shells: d1.shells.max(d2.shells),
        last_shell: d1.last_shell.max(d2.last_shell),
        converged: d1.converged && d2.converged,
    });
    Ok(point)
}

/// `P{S_t = yt | V_0 = y}` as a sum over `k` switches that all keep the
/// initial direction.
fn stay_series(model: &Model, sign: VelocitySign, t: f64, ctrl: &SeriesControl) -> Result<f64> {
    let it = model.intertimes.as_ref();
    let p_first = model.scheme.initial_prob(sign);
    let mut sum = 0.0;
    let mut run = 0usize;
    let mut prev_cdf = 1.0;
    for k in 0..ctrl.max_terms() as u64 {
        let next_cdf = it.partial_sum_cdf(sign, k + 1, t)?;
        let w = model.scheme.constant_direction_weight(k, sign) / p_first;
        let term = w * (prev_cdf - next_cdf);
        prev_cdf = next_cdf;
        sum += term;
        if term <= ctrl.rel_tol() * sum {
            run += 1;
            if run >= SMALL_RUN {
                return Ok(sum);
            }
        } else {
            run = 0;
        }
    }
    Err(Error::Truncation {
        what: "atom series",
        terms: ctrl.max_terms(),
        bound: f64::NAN,
    })
}

/// Atoms via the switch-count series.
pub fn atoms_general(model: &Model, t: f64, ctrl: &SeriesControl) -> Result<Atoms> {
    if !(t >= 0.0) {
        return Err(crate::error::domain("atoms_general", format!("t = {t} must be >= 0")));
    }
    Ok(Atoms::from_conditional(
        model.scheme.initial_forward_prob(),
        stay_series(model, VelocitySign::Forward, t, ctrl)?,
        stay_series(model, VelocitySign::Backward, t, ctrl)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straddle_equals_cdf_difference() {
        let m = Model::parse("polya:b=1,r=2,A=1", "gammaexp:lambda=1.5,mu=1", 1.0, 1.0).unwrap();
        let it = m.intertimes.as_ref();
        for n in 1..6 {
            for &s in &[0.2, 1.0, 3.0] {
                let q = straddle(it, VelocitySign::Forward, n, s).unwrap();
                let d = it.partial_sum_cdf(VelocitySign::Forward, n, s).unwrap()
                    - it.partial_sum_cdf(VelocitySign::Forward, n + 1, s).unwrap();
                assert!((q - d).abs() < 1e-12, "n={n} s={s}: {q} vs {d}");
            }
        }
    }

    #[test]
    fn first_forward_shell_vanishes() {
        // with one switch starting forward, ending forward is impossible
        let m = Model::parse("bernoulli:p=0.3", "linexp:lambda=1,mu=1", 1.0, 1.0).unwrap();
        let ctrl = SeriesControl::default();
        let (f, _, _) = conditional_pieces(&m, VelocitySign::Forward, 0.4, 1.0, 1, &ctrl).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn atoms_at_zero() {
        let m = Model::parse("polya:b=2,r=3,A=1", "gammaexp:lambda=1,mu=1", 1.0, 1.0).unwrap();
        let a = atoms_general(&m, 0.0, &SeriesControl::default()).unwrap();
        assert!((a.plus - 0.4).abs() < 1e-15);
        assert!((a.minus - 0.6).abs() < 1e-15);
    }

    #[test]
    fn truncation_is_flagged() {
        let m = Model::parse("bernoulli:p=0.3", "linexp:lambda=1,mu=1", 1.0, 1.0).unwrap();
        let d = density_general_series(&m, 0.0, 2.0, 3, &SeriesControl::default()).unwrap();
        let diag = d.diagnostics.unwrap();
        assert!(!diag.converged);
        assert_eq!(diag.shells, 3);
    }
}
