//! Closed-form mean velocity for the damped Bernoulli process.
//!
//! Given `V_0 = c`, `N_{k-1} = j` and `m = k - 1 - j`, the window
//! probabilities expand into alternating binomial double sums
//!
//! `phi_kj = sum_l sum_h C(m,l) C(j,h) (-1)^(l+h) [A_lh - lambda (j+2) e^{-lambda(h+1)t} H(a, lambda(j+1-h); t)]`
//! `psi_kj = sum_l sum_h C(m,l) C(j,h) (-1)^(l+h) [A_lh - mu (m+1) e^{-lambda(h+1)t} H(a, mu(m+1) - lambda(h+1); t)]`
//!
//! with `a = mu l - lambda (h+1)` and `A_lh = t e^{-mu l t} 1F1(1,2; a t)`, and
//!
//! `E[V_t | c] = c e^{-lambda t} + sum_k sum_j lambda (j+1) C(k-1,j) p^j (1-p)^m (c p phi_kj - v (1-p) psi_kj)`.
//!
//! The inner sums cancel by about `2^k`, so they are evaluated in
//! multiprecision. Every exponential is a power of `e^{-lambda t}` or
//! `e^{-mu t}`, which keeps the number of big-float exponentials at two.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::error::{domain, Error, Result};
use crate::mean_velocity::{check_time, MeanVelocity, ShellSum, ShellTruncation};
use crate::model::MotionParams;
use crate::special::ln_binomial;
use crate::trials::VelocitySign;

const RM: RoundingMode = RoundingMode::ToEven;

fn precision_for(k: u64) -> usize {
    // the alternating sums lose about k bits
    let bits = 128 + k as usize;
    bits.div_ceil(64) * 64
}

/// Multiprecision state for one evaluation; tables grow with the shell
/// index and are rebuilt whenever the working precision increases.
struct Expansion {
    prec: usize,
    cc: Consts,
    lambda: BigFloat,
    mu: BigFloat,
    t: BigFloat,
    /// `e^{-lambda t i}` and `e^{-mu t i}`.
    el: Vec<BigFloat>,
    em: Vec<BigFloat>,
    /// Pascal rows.
    binom: Vec<Vec<BigFloat>>,
    /// `1/(mu l - lambda (h+1))`, indexed `[l][h]`; `None` where it vanishes.
    inv_a: Vec<Vec<Option<BigFloat>>>,
    /// `1/(lambda n)` and `1/(mu n)`; index 0 is unused.
    inv_lam: Vec<BigFloat>,
    inv_mu: Vec<BigFloat>,
    /// `sum_h C(j,h)(-1)^h Phi(l,h,j)`, indexed `[j][l]`.
    phi_inner: Vec<Vec<BigFloat>>,
    /// `sum_l C(m,l)(-1)^l Psi(l,h,m)`, indexed `[m][h]`.
    psi_inner: Vec<Vec<BigFloat>>,
    lambda_f: f64,
    mu_f: f64,
    t_f: f64,
}

impl Expansion {
    fn new(lambda: f64, mu: f64, t: f64) -> Result<Self> {
        let cc = Consts::new().map_err(|e| Error::Unsupported(format!("multiprecision constants: {e:?}")))?;
        let mut s = Self {
            prec: 0,
            cc,
            lambda: BigFloat::from_f64(lambda, 64),
            mu: BigFloat::from_f64(mu, 64),
            t: BigFloat::from_f64(t, 64),
            el: Vec::new(),
            em: Vec::new(),
            binom: Vec::new(),
            inv_a: Vec::new(),
            inv_lam: Vec::new(),
            inv_mu: Vec::new(),
            phi_inner: Vec::new(),
            psi_inner: Vec::new(),
            lambda_f: lambda,
            mu_f: mu,
            t_f: t,
        };
        s.set_precision(precision_for(1));
        Ok(s)
    }

    #[cfg(test)]
    fn bf(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.prec)
    }

    fn int(&self, i: u64) -> BigFloat {
        BigFloat::from_u64(i, self.prec)
    }

    fn set_precision(&mut self, prec: usize) {
        self.prec = prec;
        self.lambda = BigFloat::from_f64(self.lambda_f, prec);
        self.mu = BigFloat::from_f64(self.mu_f, prec);
        self.t = BigFloat::from_f64(self.t_f, prec);
        self.el.clear();
        self.em.clear();
        self.binom.clear();
        self.inv_a.clear();
        self.inv_lam.clear();
        self.inv_mu.clear();
        self.phi_inner.clear();
        self.psi_inner.clear();
    }

    fn ensure(&mut self, k: u64) {
        let need = precision_for(k);
        if need > self.prec {
            self.set_precision(need.max(2 * self.prec));
        }
        let p = self.prec;
        let n = k as usize + 2;
        if self.el.is_empty() {
            let xl = self.lambda.mul(&self.t, p, RM).neg().exp(p, RM, &mut self.cc);
            let xm = self.mu.mul(&self.t, p, RM).neg().exp(p, RM, &mut self.cc);
            self.el.push(BigFloat::from_u64(1, p));
            self.em.push(BigFloat::from_u64(1, p));
            self.el.push(xl);
            self.em.push(xm);
        }
        while self.el.len() <= n {
            let i = self.el.len();
            let next_l = self.el[i - 1].mul(&self.el[1], p, RM);
            let next_m = self.em[i - 1].mul(&self.em[1], p, RM);
            self.el.push(next_l);
            self.em.push(next_m);
        }
        while self.binom.len() <= n {
            let m = self.binom.len();
            let mut row = Vec::with_capacity(m + 1);
            row.push(BigFloat::from_u64(1, p));
            for l in 1..m {
                let prev = &self.binom[m - 1];
                row.push(prev[l - 1].add(&prev[l], p, RM));
            }
            if m > 0 {
                row.push(BigFloat::from_u64(1, p));
            }
            self.binom.push(row);
        }
        let one = BigFloat::from_u64(1, p);
        while self.inv_lam.len() <= n {
            let i = self.int(self.inv_lam.len() as u64);
            self.inv_lam.push(one.div(&self.lambda.mul(&i, p, RM), p, RM));
            self.inv_mu.push(one.div(&self.mu.mul(&i, p, RM), p, RM));
        }
        for l in 0..=n {
            if self.inv_a.len() <= l {
                self.inv_a.push(Vec::new());
            }
            while self.inv_a[l].len() <= n {
                let h = self.inv_a[l].len() as u64;
                let a = self.a_coef(l as u64, h);
                let inv = (!a.is_zero()).then(|| one.div(&a, p, RM));
                self.inv_a[l].push(inv);
            }
        }
    }

    fn inverse(&self, x: &BigFloat) -> Option<BigFloat> {
        (!x.is_zero()).then(|| BigFloat::from_u64(1, self.prec).div(x, self.prec, RM))
    }

    /// `mu l - lambda (h+1)`, exact for the given doubles.
    fn a_coef(&self, l: u64, h: u64) -> BigFloat {
        let p = self.prec;
        self.mu
            .mul(&self.int(l), p, RM)
            .sub(&self.lambda.mul(&self.int(h + 1), p, RM), p, RM)
    }

    /// `A_lh = (e^{-lambda(h+1)t} - e^{-mu l t}) / a`, or `t e^{-mu l t}` at `a = 0`.
    fn a_term(&self, l: u64, h: u64, inv_a: Option<&BigFloat>) -> BigFloat {
        let p = self.prec;
        let x = &self.el[h as usize + 1];
        let z = &self.em[l as usize];
        match inv_a {
            None => self.t.mul(z, p, RM),
            Some(ia) => x.sub(z, p, RM).mul(ia, p, RM),
        }
    }

    /// `e^{-lambda(h+1)t} H(a, beta; t)` given `x = e^{-lambda(h+1)t}`,
    /// `y = x e^{-beta t}`, `z = x e^{-a t}` and the reciprocals of `a`,
    /// `beta` and `a - beta` (`None` for zero).
    #[allow(clippy::too_many_arguments)]
    fn scaled_h(
        &self,
        inv_a: Option<&BigFloat>,
        inv_beta: Option<&BigFloat>,
        inv_amb: Option<&BigFloat>,
        x: &BigFloat,
        y: &BigFloat,
        z: &BigFloat,
    ) -> BigFloat {
        let p = self.prec;
        let t = &self.t;
        let Some(ia) = inv_a else {
            let Some(ib) = inv_beta else {
                return x.mul(t, p, RM).mul(t, p, RM).div(&self.int(2), p, RM);
            };
            // t/beta - (1 - e^{-beta t})/beta^2
            let first = x.mul(t, p, RM).mul(ib, p, RM);
            let second = x.sub(y, p, RM).mul(ib, p, RM).mul(ib, p, RM);
            return first.sub(&second, p, RM);
        };
        let first = match inv_beta {
            None => x.mul(t, p, RM),
            Some(ib) => x.sub(y, p, RM).mul(ib, p, RM),
        };
        let second = match inv_amb {
            None => t.mul(z, p, RM),
            Some(iab) => y.sub(z, p, RM).mul(iab, p, RM),
        };
        first.sub(&second, p, RM).mul(ia, p, RM)
    }

    fn signed(&self, v: BigFloat, odd: bool) -> BigFloat {
        if odd {
            v.neg()
        } else {
            v
        }
    }

    /// `sum_h C(j,h) (-1)^h Phi(l,h,j)`.
    fn phi_inner(&mut self, j: u64, l: u64) -> BigFloat {
        let (ju, lu) = (j as usize, l as usize);
        if self.phi_inner.len() <= ju {
            self.phi_inner.resize(ju + 1, Vec::new());
        }
        if let Some(v) = self.phi_inner[ju].get(lu) {
            return v.clone();
        }
        let p = self.prec;
        let rate = self.lambda.mul(&self.int(j + 2), p, RM);
        // a - beta = mu l - lambda (j+2)
        let inv_amb = self.inverse(&self.mu.mul(&self.int(l), p, RM).sub(&rate, p, RM));
        let mut acc = BigFloat::from_u64(0, p);
        for h in 0..=j {
            let inv_a = self.inv_a[lu][h as usize].as_ref();
            // beta = lambda (j+1-h) > 0
            let inv_beta = &self.inv_lam[(j + 1 - h) as usize];
            let x = &self.el[h as usize + 1];
            let y = &self.el[j as usize + 2];
            let z = &self.em[lu];
            let hh = self.scaled_h(inv_a, Some(inv_beta), inv_amb.as_ref(), x, y, z);
            let term = self.a_term(l, h, inv_a).sub(&rate.mul(&hh, p, RM), p, RM);
            let term = term.mul(&self.binom[ju][h as usize], p, RM);
            acc = acc.add(&self.signed(term, h % 2 == 1), p, RM);
        }
        // the inner vectors fill in order of l
        debug_assert_eq!(self.phi_inner[ju].len(), lu);
        self.phi_inner[ju].push(acc.clone());
        acc
    }

    /// `sum_l C(m,l) (-1)^l Psi(l,h,m)`.
    fn psi_inner(&mut self, m: u64, h: u64) -> BigFloat {
        let (mu_, hu) = (m as usize, h as usize);
        if self.psi_inner.len() <= mu_ {
            self.psi_inner.resize(mu_ + 1, Vec::new());
        }
        if let Some(v) = self.psi_inner[mu_].get(hu) {
            return v.clone();
        }
        let p = self.prec;
        let rate = self.mu.mul(&self.int(m + 1), p, RM);
        let inv_beta = self.inverse(&rate.sub(&self.lambda.mul(&self.int(h + 1), p, RM), p, RM));
        let mut acc = BigFloat::from_u64(0, p);
        for l in 0..=m {
            let inv_a = self.inv_a[l as usize][hu].as_ref();
            // a - beta = -mu (m+1-l)
            let inv_amb = self.inv_mu[(m + 1 - l) as usize].neg();
            let x = &self.el[hu + 1];
            let y = &self.em[mu_ + 1];
            let z = &self.em[l as usize];
            let hh = self.scaled_h(inv_a, inv_beta.as_ref(), Some(&inv_amb), x, y, z);
            let term = self.a_term(l, h, inv_a).sub(&rate.mul(&hh, p, RM), p, RM);
            let term = term.mul(&self.binom[mu_][l as usize], p, RM);
            acc = acc.add(&self.signed(term, l % 2 == 1), p, RM);
        }
        debug_assert_eq!(self.psi_inner[mu_].len(), hu);
        self.psi_inner[mu_].push(acc.clone());
        acc
    }

    fn phi(&mut self, k: u64, j: u64) -> BigFloat {
        let m = k - 1 - j;
        let p = self.prec;
        let mut acc = BigFloat::from_u64(0, p);
        for l in 0..=m {
            let v = self.phi_inner(j, l).mul(&self.binom[m as usize][l as usize], p, RM);
            acc = acc.add(&self.signed(v, l % 2 == 1), p, RM);
        }
        acc
    }

    fn psi(&mut self, k: u64, j: u64) -> BigFloat {
        let m = k - 1 - j;
        let p = self.prec;
        let mut acc = BigFloat::from_u64(0, p);
        for h in 0..=j {
            let v = self.psi_inner(m, h).mul(&self.binom[j as usize][h as usize], p, RM);
            acc = acc.add(&self.signed(v, h % 2 == 1), p, RM);
        }
        acc
    }

    /// Nearest double from the top mantissa word (the value is `0.m * 2^e`).
    fn to_f64(&self, x: &BigFloat) -> Result<f64> {
        if x.is_zero() {
            return Ok(0.0);
        }
        let (words, _, sign, exp, _) = x
            .as_raw_parts()
            .ok_or_else(|| Error::Unsupported("multiprecision value is not finite".into()))?;
        let top = *words.last().expect("normal numbers have a mantissa") as u64;
        let v = libm::ldexp(top as f64, exp - 64);
        Ok(if sign == Sign::Neg { -v } else { v })
    }
}

/// `E[V_t | V_0 = initial]` for the damped process. The backward case uses
/// the mirror image (directions, rates, speeds and `p` exchanged).
pub fn mean_velocity_damped(
    p: f64,
    lambda: f64,
    mu: f64,
    motion: &MotionParams,
    t: f64,
    initial: VelocitySign,
    rule: &ShellTruncation,
) -> Result<MeanVelocity> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("mean_velocity_damped", format!("p = {p} must lie in (0, 1)")));
    }
    if !(lambda > 0.0 && mu > 0.0) {
        return Err(domain("mean_velocity_damped", "rates must be > 0"));
    }
    check_time(t)?;
    if !initial.is_forward() {
        let r = mean_velocity_damped(1.0 - p, mu, lambda, &motion.mirrored(), t, VelocitySign::Forward, rule)?;
        return Ok(MeanVelocity {
            value: -r.value,
            ..r
        });
    }
    let (c, v) = (motion.c, motion.v);
    let mut ex = Expansion::new(lambda, mu, t)?;
    let mut sum = ShellSum::new(*rule, c + v, c * (-lambda * t).exp());
    let mut done = false;
    for k in 1..=rule.cap {
        ex.ensure(k);
        let (mut shell, mut mag) = (0.0, 0.0);
        for j in 0..k {
            let m = k - 1 - j;
            let pre = (lambda * (j + 1) as f64).ln()
                + ln_binomial(k - 1, j)
                + j as f64 * p.ln()
                + m as f64 * (1.0 - p).ln();
            let pre = pre.exp();
            let phi = ex.phi(k, j);
            let phi = ex.to_f64(&phi)?;
            let psi = ex.psi(k, j);
            let psi = ex.to_f64(&psi)?;
            let up = c * p * pre * phi;
            let down = v * (1.0 - p) * pre * psi;
            shell += up - down;
            mag += up.abs() + down.abs();
        }
        if sum.push(shell, mag) {
            done = true;
            break;
        }
    }
    sum.finish("damped mean velocity", done)
}
