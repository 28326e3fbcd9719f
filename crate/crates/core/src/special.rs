//! Special functions: Pochhammer symbols, Kummer's confluent hypergeometric
//! function, the gamma distribution function and the two convolution kernels
//! `G` (distribution function of a sum of two independent gamma variables)
//! and `H` (an exponentially weighted `1F1(1,2;.)` convolution).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Truncation control for infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    rel_tol: f64,
    max_terms: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(domain("SeriesControl", format!("rel_tol must be > 0, got {rel_tol}")));
        }
        if max_terms == 0 {
            return Err(domain("SeriesControl", "max_terms must be >= 1"));
        }
        Ok(Self { rel_tol, max_terms })
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_terms: 10_000,
        }
    }
}

/// Natural logarithm of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Ascending factorial `(alpha)_j = alpha (alpha+1) ... (alpha+j-1)`.
pub fn pochhammer(alpha: f64, j: u32) -> Result<f64> {
    let mut acc = 1.0_f64;
    for i in 0..j {
        acc *= alpha + f64::from(i);
        if !acc.is_finite() {
            return Err(Error::OutOfRange {
                what: "pochhammer",
                detail: format!("({alpha})_{j} overflows f64"),
            });
        }
        if acc == 0.0 {
            break;
        }
    }
    Ok(acc)
}

/// `ln (alpha)_j` for `alpha > 0`.
///
/// Short products are summed term by term; long ones go through log-gamma.
pub fn ln_pochhammer(alpha: f64, j: u64) -> f64 {
    debug_assert!(alpha > 0.0);
    if j == 0 {
        return 0.0;
    }
    if j <= 64 {
        (0..j).map(|i| (alpha + i as f64).ln()).sum()
    } else {
        ln_gamma(alpha + j as f64) - ln_gamma(alpha)
    }
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if n <= 64 {
        (0..k)
            .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
            .sum()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// A value stored as `mantissa * exp(ln_scale)` so that large series sums do
/// not overflow.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    mantissa: f64,
    ln_scale: f64,
}

impl Scaled {
    fn value(self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        self.mantissa * self.ln_scale.exp()
    }

    fn ln_abs(self) -> f64 {
        self.mantissa.abs().ln() + self.ln_scale
    }
}

const RESCALE: f64 = 1e280;

/// Sums `sum_{k >= skip} (a)_k / (b)_k z^k / k!` directly.
fn hyp_series(a: f64, b: f64, z: f64, skip: usize, ctrl: &SeriesControl) -> Result<Scaled> {
    let ln_rescale = RESCALE.ln();
    let mut term = 1.0_f64;
    let mut sum = 0.0_f64;
    let mut ln_scale = 0.0_f64;
    let mut k = 0usize;
    loop {
        if k >= skip {
            sum += term;
        }
        let kf = k as f64;
        let ratio = (a + kf) / (b + kf) * z / (kf + 1.0);
        if k >= skip {
            if term == 0.0 && sum != 0.0 {
                break;
            }
            let r = ratio.abs();
            if r < 1.0 {
                let tail = term.abs() * r / (1.0 - r);
                if tail <= ctrl.rel_tol * sum.abs() || (sum == 0.0 && tail == 0.0) {
                    break;
                }
            }
        }
        term *= ratio;
        k += 1;
        if term.abs() > RESCALE {
            term /= RESCALE;
            sum /= RESCALE;
            ln_scale += ln_rescale;
        }
        if k > ctrl.max_terms {
            let bound = if sum != 0.0 {
                (term / sum).abs()
            } else {
                f64::INFINITY
            };
            return Err(Error::Truncation {
                what: "1F1 series",
                terms: k,
                bound,
            });
        }
    }
    Ok(Scaled {
        mantissa: sum,
        ln_scale,
    })
}

fn check_b(b: f64) -> Result<()> {
    if !b.is_finite() || (b <= 0.0 && b.fract() == 0.0) {
        return Err(domain(
            "kummer_1f1",
            format!("b = {b} must not be zero or a negative integer"),
        ));
    }
    Ok(())
}

/// Series for `1F1(a, b; z)` in scaled form; negative arguments use the
/// Kummer transformation `1F1(a,b;z) = e^z 1F1(b-a,b;-z)`.
fn kummer_scaled(a: f64, b: f64, z: f64, ctrl: &SeriesControl) -> Result<Scaled> {
    check_b(b)?;
    if !a.is_finite() || !z.is_finite() {
        return Err(domain("kummer_1f1", format!("non-finite argument a={a}, z={z}")));
    }
    if z == 0.0 {
        return Ok(Scaled {
            mantissa: 1.0,
            ln_scale: 0.0,
        });
    }
    if z > 0.0 || (a <= 0.0 && a.fract() == 0.0) {
        hyp_series(a, b, z, 0, ctrl)
    } else {
        let s = hyp_series(b - a, b, -z, 0, ctrl)?;
        Ok(Scaled {
            mantissa: s.mantissa,
            ln_scale: s.ln_scale + z,
        })
    }
}

/// Kummer's confluent hypergeometric function `1F1(a, b; z)` for real
/// arguments.
pub fn kummer_1f1(a: f64, b: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    let v = kummer_scaled(a, b, z, ctrl)?.value();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OutOfRange {
            what: "kummer_1f1",
            detail: format!("1F1({a},{b};{z}) overflows f64"),
        })
    }
}

/// `ln 1F1(a, b; z)` for `a > 0`, `b > 0`, `z >= 0`, where the series has
/// positive terms and the value may exceed the `f64` range.
pub fn ln_kummer_1f1(a: f64, b: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && z >= 0.0) {
        return Err(domain(
            "ln_kummer_1f1",
            format!("requires a > 0, b > 0, z >= 0 (got {a}, {b}, {z})"),
        ));
    }
    Ok(kummer_scaled(a, b, z, ctrl)?.ln_abs())
}

/// Tail `sum_{k >= skip} (a)_k/(b)_k z^k/k!` for `z >= 0`, summed directly
/// so that e.g. `1F1(1,b;z) - 1 - z/b` keeps full relative accuracy for small
/// `z`.
pub fn kummer_1f1_tail(a: f64, b: f64, z: f64, skip: usize, ctrl: &SeriesControl) -> Result<f64> {
    check_b(b)?;
    if z < 0.0 {
        return Err(domain("kummer_1f1_tail", format!("z = {z} must be >= 0")));
    }
    if z == 0.0 {
        return Ok(if skip == 0 { 1.0 } else { 0.0 });
    }
    let v = hyp_series(a, b, z, skip, ctrl)?.value();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OutOfRange {
            what: "kummer_1f1_tail",
            detail: format!("tail of 1F1({a},{b};{z}) overflows f64"),
        })
    }
}

/// `1F1(1, 2; z) = (e^z - 1)/z`, equal to 1 at the origin.
pub fn exprel(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

fn check_gamma_args(what: &'static str, alpha: f64, rate: f64, t: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(domain(what, format!("shape {alpha} must be > 0")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(domain(what, format!("rate {rate} must be > 0")));
    }
    if !(t >= 0.0) {
        return Err(domain(what, format!("t = {t} must be >= 0")));
    }
    Ok(())
}

/// Gamma(shape `alpha`, rate `mu`) density at `t`.
pub fn gamma_pdf(alpha: f64, mu: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    if t == 0.0 {
        return match alpha.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => mu,
            _ => 0.0,
        };
    }
    (alpha * mu.ln() + (alpha - 1.0) * t.ln() - mu * t - ln_gamma(alpha)).exp()
}

/// `P(X <= t)` for `X ~ Gamma(alpha, mu)`, through
/// `(mu t)^alpha e^{-mu t} 1F1(1, alpha+1; mu t) / Gamma(alpha+1)`.
pub fn gamma_cdf(alpha: f64, mu: f64, t: f64) -> Result<f64> {
    check_gamma_args("gamma_cdf", alpha, mu, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let x = mu * t;
    if x.is_infinite() {
        return Ok(1.0);
    }
    if x >= alpha + 1.0 {
        return Ok((1.0 - upper_gamma_cf(alpha, x)).clamp(0.0, 1.0));
    }
    match ln_kummer_1f1(1.0, alpha + 1.0, x, &SeriesControl::default()) {
        Ok(ln_f) => {
            let v = (alpha * x.ln() - x - ln_gamma(alpha + 1.0) + ln_f).exp();
            Ok(v.clamp(0.0, 1.0))
        }
        // far in the upper tail the series is too long; the continued
        // fraction for the complement is accurate there
        Err(Error::Truncation { .. }) => Ok((1.0 - upper_gamma_cf(alpha, x)).clamp(0.0, 1.0)),
        Err(e) => Err(e),
    }
}

/// `P(X > t)` for `X ~ Gamma(alpha, mu)`.
pub fn gamma_sf(alpha: f64, mu: f64, t: f64) -> Result<f64> {
    check_gamma_args("gamma_sf", alpha, mu, t)?;
    let x = mu * t;
    if x < alpha + 1.0 {
        Ok((1.0 - gamma_cdf(alpha, mu, t)?).clamp(0.0, 1.0))
    } else {
        Ok(upper_gamma_cf(alpha, x).clamp(0.0, 1.0))
    }
}

/// Regularized upper incomplete gamma `Q(alpha, x)` by the modified Lentz
/// continued fraction; accurate for `x >= alpha + 1`.
fn upper_gamma_cf(alpha: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - alpha;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - alpha);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (alpha * x.ln() - x - ln_gamma(alpha)).exp() * h
}

/// `G(alpha, mu, beta, lambda; t) = P(X + Y <= t)` for independent
/// `X ~ Gamma(alpha, mu)` and `Y ~ Gamma(beta, lambda)`:
///
/// `mu^alpha lambda^beta t^(alpha+beta) e^(-mu t) sum_h (mu t)^h / Gamma(alpha+beta+h+1)
///  1F1(beta, alpha+beta+h+1; (mu - lambda) t)`.
///
/// The roles of the two variables are exchanged when `mu < lambda` so the
/// hypergeometric argument is never negative.
pub fn conv_gamma_cdf(
    alpha: f64,
    mu: f64,
    beta: f64,
    lambda: f64,
    t: f64,
    ctrl: &SeriesControl,
) -> Result<f64> {
    check_gamma_args("conv_gamma_cdf", alpha, mu, t)?;
    check_gamma_args("conv_gamma_cdf", beta, lambda, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let (alpha, mu, beta, lambda) = if mu >= lambda {
        (alpha, mu, beta, lambda)
    } else {
        (beta, lambda, alpha, mu)
    };
    let mt = mu * t;
    let z = (mu - lambda) * t;
    let ln_prefix = alpha * mt.ln() + beta * (lambda * t).ln() - mt;
    let ln_mt = mt.ln();
    let mut sum = 0.0_f64;
    let mut small_run = 0usize;
    for h in 0..ctrl.max_terms {
        let hf = h as f64;
        let c = alpha + beta + hf + 1.0;
        let ln_f = ln_kummer_1f1(beta, c, z, ctrl)?;
        let term = (ln_prefix + hf * ln_mt - ln_gamma(c) + ln_f).exp();
        sum += term;
        if term <= ctrl.rel_tol * sum {
            small_run += 1;
            if small_run >= 3 {
                return Ok(sum.clamp(0.0, 1.0));
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::Truncation {
        what: "G series",
        terms: ctrl.max_terms,
        bound: f64::NAN,
    })
}

/// `H(alpha, beta; t) = int_0^t (t-y) 1F1(1,2; alpha (t-y)) e^{-alpha (t-y)} e^{-beta y} dy`.
///
/// Branches are chosen by exact comparison with zero, so callers must pass
/// structural zeros. For `alpha = 0` the integrand reduces to
/// `(t-y) e^{-beta y}`, which gives `(t/beta) [1 - 1F1(1,2;-beta t)]`.
pub fn kernel_h(alpha: f64, beta: f64, t: f64) -> f64 {
    if alpha != 0.0 {
        t / alpha * (exprel(-beta * t) - (-alpha * t).exp() * exprel((alpha - beta) * t))
    } else if beta != 0.0 {
        t / beta * (1.0 - exprel(-beta * t))
    } else {
        0.5 * t * t
    }
}
