//! Pólya case: urn trials with parameters `(b, r, A)`, first periods
//! `U_1 ~ Gamma(b/A + 1, lambda)`, `D_1 ~ Gamma(r/A + 1, mu)`, later periods
//! exponential with rates `lambda` and `mu`.

use crate::error::{domain, Result};
use crate::law::{interior_tau, Atoms, DensityPoint};
use crate::model::MotionParams;
use crate::special::{gamma_sf, kummer_1f1_tail, ln_gamma, ln_kummer_1f1, SeriesControl};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyaParams {
    pub b: f64,
    pub r: f64,
    pub a: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl PolyaParams {
    pub fn new(b: f64, r: f64, a: f64, lambda: f64, mu: f64) -> Result<Self> {
        for (name, x) in [("b", b), ("r", r), ("A", a), ("lambda", lambda), ("mu", mu)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(domain("polya law", format!("{name} = {x} must be > 0")));
            }
        }
        Ok(Self { b, r, a, lambda, mu })
    }

    pub fn mirrored(&self) -> Self {
        Self {
            b: self.r,
            r: self.b,
            a: self.a,
            lambda: self.mu,
            mu: self.lambda,
        }
    }

    /// `(b + A + r)/A`, the lower parameter of every `1F1` here.
    fn big_b(&self) -> f64 {
        (self.b + self.a + self.r) / self.a
    }

    fn p0(&self) -> f64 {
        self.b / (self.b + self.r)
    }
}

/// `ln(1F1(1, B; z) - 1)` for `z > 0`.
fn ln_f11_minus_one(big_b: f64, z: f64) -> Result<f64> {
    let ctrl = SeriesControl::default();
    if z < 30.0 {
        Ok(kummer_1f1_tail(1.0, big_b, z, 1, &ctrl)?.ln())
    } else {
        let ln_f = ln_kummer_1f1(1.0, big_b, z, &ctrl)?;
        Ok(ln_f + (-(-ln_f).exp()).ln_1p())
    }
}

/// `(1F1(1, B; w) - 1 - w/B) / w`, zero at `w = 0`.
fn reduced_tail(big_b: f64, w: f64) -> Result<f64> {
    if w == 0.0 {
        return Ok(0.0);
    }
    Ok(kummer_1f1_tail(1.0, big_b, w, 2, &SeriesControl::default())? / w)
}

/// `P{S_t = ct | V_0 = c}`.
fn stay_prob(pp: &PolyaParams, t: f64) -> Result<f64> {
    let shape = pp.b / pp.a;
    let sf = gamma_sf(shape + 1.0, pp.lambda, t)?;
    if t == 0.0 {
        return Ok(sf);
    }
    let z = pp.lambda * t;
    let ln_extra = shape * z.ln() - z - ln_gamma(shape + 1.0) + ln_f11_minus_one(pp.big_b(), z)?;
    Ok(sf + ln_extra.exp())
}

pub fn atoms_polya(pp: &PolyaParams, t: f64) -> Result<Atoms> {
    if !(t >= 0.0) {
        return Err(domain("atoms_polya", format!("t = {t} must be >= 0")));
    }
    Ok(Atoms::from_conditional(
        pp.p0(),
        stay_prob(pp, t)?,
        stay_prob(&pp.mirrored(), t)?,
    ))
}

/// `b`-part term of the density given `V_0 = c` in which no backward period
/// has been completed.
fn single_backward_term(pp: &PolyaParams, cv: f64, tau: f64, t: f64) -> Result<f64> {
    let shape = pp.b / pp.a;
    let y = pp.lambda * tau;
    let sf = gamma_sf(pp.r / pp.a + 1.0, pp.mu, t - tau)?;
    if sf == 0.0 {
        return Ok(0.0);
    }
    let ln = pp.r.ln() + pp.lambda.ln() + (shape - 1.0) * y.ln() - y - cv.ln() - pp.a.ln()
        - ln_gamma(shape + 1.0)
        + sf.ln()
        + ln_f11_minus_one(pp.big_b(), y)?;
    Ok(ln.exp())
}

/// `(f(x,t|c), b(x,t|c))` at forward time `tau`.
fn pieces_given_forward(pp: &PolyaParams, cv: f64, tau: f64, t: f64) -> Result<(f64, f64)> {
    let (sb, sr) = (pp.b / pp.a, pp.r / pp.a);
    let y = pp.lambda * tau;
    let w = pp.mu * (t - tau);
    let ln_xi = -y - w + (sb + 1.0) * y.ln() + sr * w.ln() - cv.ln() - ln_gamma(sb + 1.0) - ln_gamma(sr);
    let big_b = pp.big_b();
    let eta = reduced_tail(big_b, y + w)? - reduced_tail(big_b, y)?;
    let xi_eta = ln_xi.exp() * eta;
    let f = xi_eta / (t - tau);
    let b = single_backward_term(pp, cv, tau, t)? + xi_eta / tau;
    Ok((f, b))
}

/// Density of `S_t` and its conditional pieces for the Pólya process.
pub fn density_polya(pp: &PolyaParams, motion: &MotionParams, x: f64, t: f64) -> Result<DensityPoint> {
    let tau = interior_tau(motion.c, motion.v, x, t)?;
    let cv = motion.c + motion.v;
    let fwd = pieces_given_forward(pp, cv, tau, t)?;
    let (bm, fm) = pieces_given_forward(&pp.mirrored(), cv, t - tau, t)?;
    Ok(DensityPoint::from_pieces(x, pp.p0(), fwd, (fm, bm)))
}

/// Limits of the density at `x -> -vt` and `x -> ct`.
pub fn endpoint_limits_polya(pp: &PolyaParams, motion: &MotionParams, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(domain("endpoint_limits_polya", format!("t = {t} must be > 0")));
    }
    let cv = motion.c + motion.v;
    let limit = |q: &PolyaParams| -> Result<f64> {
        let shape = q.b / q.a;
        let z = q.lambda * t;
        let ln = q.b.ln() + q.r.ln() + q.lambda.ln() + (shape - 1.0) * z.ln() - z
            - (q.b + q.r).ln()
            - cv.ln()
            - q.a.ln()
            - ln_gamma(shape + 1.0)
            + ln_f11_minus_one(q.big_b(), z)?;
        Ok(ln.exp())
    };
    Ok((limit(&pp.mirrored())?, limit(pp)?))
}
