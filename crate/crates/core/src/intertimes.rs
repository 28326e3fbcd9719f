//! Duration families for forward periods `U_k` and backward periods `D_k`,
//! with the laws of the partial sums `U^(k) = U_1 + ... + U_k` (resp. `D^(k)`).

use std::fmt::Debug;

use rand_distr::{Distribution, Gamma};

use crate::error::{domain, Result};
use crate::rng::{open_unit, PathRng};
use crate::special::{gamma_cdf, gamma_pdf, gamma_sf};
use crate::trials::{TrialScheme, VelocitySign};

/// Which sequence of periods is meant.
pub type Direction = VelocitySign;

/// The parametric form behind a model, used by closed-form evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `U_k ~ Exp(lambda k)`, `D_k ~ Exp(mu k)`.
    LinearRate { lambda: f64, mu: f64 },
    /// `U_1 ~ Gamma(b/A + 1, lambda)`, `U_k ~ Exp(lambda)` for `k >= 2`;
    /// backward periods likewise with `r` and `mu`.
    GammaThenExp {
        b: f64,
        r: f64,
        a: f64,
        lambda: f64,
        mu: f64,
    },
    /// `U_k ~ Exp(lambda)`, `D_k ~ Exp(mu)`.
    ConstantRate { lambda: f64, mu: f64 },
}

/// Laws of the period durations of one direction family.
pub trait IntertimeModel: Send + Sync + Debug {
    /// Registry name, e.g. `linexp`.
    fn name(&self) -> &'static str;

    /// Round-trippable textual form, e.g. `linexp:lambda=1,mu=2`.
    fn spec(&self) -> String;

    fn family(&self) -> Family;

    /// `P{U_k > t}` (or `D_k`).
    fn tail(&self, dir: Direction, k: u64, t: f64) -> Result<f64>;

    /// Density of the single period `U_k` (or `D_k`).
    fn intertime_density(&self, dir: Direction, k: u64, t: f64) -> Result<f64>;

    /// Density of `U^(k)` (or `D^(k)`) at `t > 0`.
    fn partial_sum_density(&self, dir: Direction, k: u64, t: f64) -> Result<f64>;

    /// `P{U^(k) <= t}`; `k = 0` is the empty sum.
    fn partial_sum_cdf(&self, dir: Direction, k: u64, t: f64) -> Result<f64>;

    /// Inverse distribution function of `U_k` (or `D_k`).
    fn quantile(&self, dir: Direction, k: u64, u: f64) -> Result<f64>;

    fn sample(&self, dir: Direction, k: u64, rng: &mut PathRng) -> f64;
}

fn check_k(what: &'static str, k: u64) -> Result<()> {
    if k == 0 {
        Err(domain(what, "period index k must be >= 1"))
    } else {
        Ok(())
    }
}

fn check_rate(what: &'static str, name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(what, format!("{name} = {x} must be > 0")))
    }
}

fn check_time(what: &'static str, t: f64) -> Result<()> {
    if t >= 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(domain(what, format!("t = {t} must be >= 0")))
    }
}

fn check_u(what: &'static str, u: f64) -> Result<()> {
    if (0.0..1.0).contains(&u) {
        Ok(())
    } else {
        Err(domain(what, format!("u = {u} must lie in [0, 1)")))
    }
}

/// Exponential periods whose rate grows linearly with the period index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRateExponential {
    lambda: f64,
    mu: f64,
}

impl LinearRateExponential {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        check_rate("linexp", "lambda", lambda)?;
        check_rate("linexp", "mu", mu)?;
        Ok(Self { lambda, mu })
    }

    fn rate(&self, dir: Direction) -> f64 {
        if dir.is_forward() {
            self.lambda
        } else {
            self.mu
        }
    }
}

impl IntertimeModel for LinearRateExponential {
    fn name(&self) -> &'static str {
        "linexp"
    }

    fn spec(&self) -> String {
        format!("linexp:lambda={},mu={}", self.lambda, self.mu)
    }

    fn family(&self) -> Family {
        Family::LinearRate {
            lambda: self.lambda,
            mu: self.mu,
        }
    }

    fn tail(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_k("tail", k)?;
        check_time("tail", t)?;
        Ok((-self.rate(dir) * k as f64 * t).exp())
    }

    fn intertime_density(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_k("intertime_density", k)?;
        check_time("intertime_density", t)?;
        let rate = self.rate(dir) * k as f64;
        Ok(rate * (-rate * t).exp())
    }

    fn partial_sum_density(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_k("partial_sum_density", k)?;
        if !(t > 0.0) {
            return Err(domain("partial_sum_density", format!("t = {t} must be > 0")));
        }
        // U^(k) is distributed as the maximum of k unit-rate exponentials
        let l = self.rate(dir);
        let e = (-l * t).exp();
        let base = -(-l * t).exp_m1();
        Ok(k as f64 * base.powf(k as f64 - 1.0) * l * e)
    }

    fn partial_sum_cdf(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_time("partial_sum_cdf", t)?;
        if k == 0 {
            return Ok(1.0);
        }
        let base = -(-self.rate(dir) * t).exp_m1();
        Ok(base.powf(k as f64))
    }

    fn quantile(&self, dir: Direction, k: u64, u: f64) -> Result<f64> {
        check_k("quantile", k)?;
        check_u("quantile", u)?;
        Ok(-(-u).ln_1p() / (self.rate(dir) * k as f64))
    }

    fn sample(&self, dir: Direction, k: u64, rng: &mut PathRng) -> f64 {
        -open_unit(rng).ln() / (self.rate(dir) * k as f64)
    }
}

/// Gamma-distributed first periods followed by exponential periods; the
/// Gamma shapes come from the accompanying Pólya urn.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaThenExponential {
    b: f64,
    r: f64,
    a: f64,
    lambda: f64,
    mu: f64,
    first_forward: Gamma<f64>,
    first_backward: Gamma<f64>,
}

impl GammaThenExponential {
    pub fn new(b: f64, r: f64, a: f64, lambda: f64, mu: f64) -> Result<Self> {
        check_rate("gammaexp", "b", b)?;
        check_rate("gammaexp", "r", r)?;
        check_rate("gammaexp", "A", a)?;
        check_rate("gammaexp", "lambda", lambda)?;
        check_rate("gammaexp", "mu", mu)?;
        let first_forward = Gamma::new(b / a + 1.0, 1.0 / lambda)
            .map_err(|e| domain("gammaexp", e.to_string()))?;
        let first_backward = Gamma::new(r / a + 1.0, 1.0 / mu)
            .map_err(|e| domain("gammaexp", e.to_string()))?;
        Ok(Self {
            b,
            r,
            a,
            lambda,
            mu,
            first_forward,
            first_backward,
        })
    }

    /// Builds the family for a Pólya scheme; any other scheme is rejected.
    pub fn for_scheme(scheme: &TrialScheme, lambda: f64, mu: f64) -> Result<Self> {
        match *scheme {
            TrialScheme::Polya { b, r, a } => Self::new(b, r, a, lambda, mu),
            TrialScheme::Bernoulli { .. } => Err(domain(
                "gammaexp",
                "Gamma-then-exponential periods require the polya scheme",
            )),
        }
    }

    /// `(shape of U_1 minus one, rate)` for the direction.
    fn params(&self, dir: Direction) -> (f64, f64) {
        if dir.is_forward() {
            (self.b / self.a, self.lambda)
        } else {
            (self.r / self.a, self.mu)
        }
    }
}

impl IntertimeModel for GammaThenExponential {
    fn name(&self) -> &'static str {
        "gammaexp"
    }

    fn spec(&self) -> String {
        format!("gammaexp:lambda={},mu={}", self.lambda, self.mu)
    }

    fn family(&self) -> Family {
        Family::GammaThenExp {
            b: self.b,
            r: self.r,
            a: self.a,
            lambda: self.lambda,
            mu: self.mu,
        }
    }

    fn tail(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_k("tail", k)?;
        check_time("tail", t)?;
        let (s, rate) = self.params(dir);
        if k == 1 {
            gamma_sf(s + 1.0, rate, t)
        } else {
            Ok((-rate * t).exp())
        }
    }

    fn intertime_density(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_k("intertime_density", k)?;
        check_time("intertime_density", t)?;
        let (s, rate) = self.params(dir);
        if k == 1 {
            Ok(gamma_pdf(s + 1.0, rate, t))
        } else {
            Ok(rate * (-rate * t).exp())
        }
    }

    fn partial_sum_density(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_k("partial_sum_density", k)?;
        if !(t > 0.0) {
            return Err(domain("partial_sum_density", format!("t = {t} must be > 0")));
        }
        let (s, rate) = self.params(dir);
        Ok(gamma_pdf(s + k as f64, rate, t))
    }

    fn partial_sum_cdf(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_time("partial_sum_cdf", t)?;
        if k == 0 {
            return Ok(1.0);
        }
        let (s, rate) = self.params(dir);
        gamma_cdf(s + k as f64, rate, t)
    }

    fn quantile(&self, dir: Direction, k: u64, u: f64) -> Result<f64> {
        check_k("quantile", k)?;
        check_u("quantile", u)?;
        let (s, rate) = self.params(dir);
        if k >= 2 {
            return Ok(-(-u).ln_1p() / rate);
        }
        // bisection on the Gamma distribution function
        let mut lo = 0.0;
        let mut hi = (s + 1.0) / rate;
        while gamma_cdf(s + 1.0, rate, hi)? < u {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gamma_cdf(s + 1.0, rate, mid)? < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn sample(&self, dir: Direction, k: u64, rng: &mut PathRng) -> f64 {
        let (_, rate) = self.params(dir);
        match (k, dir) {
            (1, VelocitySign::Forward) => self.first_forward.sample(rng),
            (1, VelocitySign::Backward) => self.first_backward.sample(rng),
            _ => -open_unit(rng).ln() / rate,
        }
    }
}

/// Independent exponential periods with one rate per direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRateExponential {
    lambda: f64,
    mu: f64,
}

impl ConstantRateExponential {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        check_rate("exp", "lambda", lambda)?;
        check_rate("exp", "mu", mu)?;
        Ok(Self { lambda, mu })
    }

    fn rate(&self, dir: Direction) -> f64 {
        if dir.is_forward() {
            self.lambda
        } else {
            self.mu
        }
    }
}

impl IntertimeModel for ConstantRateExponential {
    fn name(&self) -> &'static str {
        "exp"
    }

    fn spec(&self) -> String {
        format!("exp:lambda={},mu={}", self.lambda, self.mu)
    }

    fn family(&self) -> Family {
        Family::ConstantRate {
            lambda: self.lambda,
            mu: self.mu,
        }
    }

    fn tail(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_k("tail", k)?;
        check_time("tail", t)?;
        Ok((-self.rate(dir) * t).exp())
    }

    fn intertime_density(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_k("intertime_density", k)?;
        check_time("intertime_density", t)?;
        let l = self.rate(dir);
        Ok(l * (-l * t).exp())
    }

    fn partial_sum_density(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_k("partial_sum_density", k)?;
        if !(t > 0.0) {
            return Err(domain("partial_sum_density", format!("t = {t} must be > 0")));
        }
        Ok(gamma_pdf(k as f64, self.rate(dir), t))
    }

    fn partial_sum_cdf(&self, dir: Direction, k: u64, t: f64) -> Result<f64> {
        check_time("partial_sum_cdf", t)?;
        if k == 0 {
            return Ok(1.0);
        }
        gamma_cdf(k as f64, self.rate(dir), t)
    }

    fn quantile(&self, dir: Direction, k: u64, u: f64) -> Result<f64> {
        check_k("quantile", k)?;
        check_u("quantile", u)?;
        Ok(-(-u).ln_1p() / self.rate(dir))
    }

    fn sample(&self, dir: Direction, _k: u64, rng: &mut PathRng) -> f64 {
        -open_unit(rng).ln() / self.rate(dir)
    }
}
