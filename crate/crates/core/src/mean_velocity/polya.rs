//! Closed-form mean velocity for the Pólya process. Partial sums of the
//! periods are Gamma distributed, so every window probability is a
//! difference of `G` values (the law of a sum of two Gamma variables).

use crate::error::Result;
use crate::law::PolyaParams;
use crate::mean_velocity::{check_time, MeanVelocity, ShellSum, ShellTruncation};
use crate::model::MotionParams;
use crate::special::{conv_gamma_cdf, gamma_cdf, gamma_sf, SeriesControl};
use crate::trials::{TrialScheme, VelocitySign};

/// `E[V_t | V_0 = initial]` for the Pólya process.
pub fn mean_velocity_polya(
    pp: &PolyaParams,
    motion: &MotionParams,
    t: f64,
    initial: VelocitySign,
    rule: &ShellTruncation,
) -> Result<MeanVelocity> {
    check_time(t)?;
    if !initial.is_forward() {
        let r = mean_velocity_polya(&pp.mirrored(), &motion.mirrored(), t, VelocitySign::Forward, rule)?;
        return Ok(MeanVelocity {
            value: -r.value,
            ..r
        });
    }
    let scheme = TrialScheme::polya(pp.b, pp.r, pp.a)?;
    let ctrl = SeriesControl::default();
    let (sb, sr) = (pp.b / pp.a, pp.r / pp.a);
    let (lam, mu) = (pp.lambda, pp.mu);
    let (c, v) = (motion.c, motion.v);
    let g = |alpha: f64, ra: f64, beta: f64, rb: f64| conv_gamma_cdf(alpha, ra, beta, rb, t, &ctrl);

    let mut sum = ShellSum::new(*rule, c + v, c * gamma_sf(sb + 1.0, lam, t)?);
    let mut done = false;
    for k in 1..=rule.cap {
        let (mut shell, mut mag) = (0.0, 0.0);
        for j in 0..k {
            let m = k - 1 - j;
            let (jf, mf) = (j as f64, m as f64);
            let wp = scheme.joint_count_velocity(k, j, VelocitySign::Forward, VelocitySign::Forward)?;
            let wm = scheme.joint_count_velocity(k, j, VelocitySign::Forward, VelocitySign::Backward)?;
            let (qp, qm) = if m == 0 {
                let u = gamma_cdf(sb + jf + 1.0, lam, t)?;
                (
                    u - gamma_cdf(sb + jf + 2.0, lam, t)?,
                    u - g(sb + jf + 1.0, lam, sr + 1.0, mu)?,
                )
            } else {
                (
                    g(sr + mf, mu, sb + jf + 1.0, lam)? - g(sr + mf, mu, sb + jf + 2.0, lam)?,
                    g(sb + jf + 1.0, lam, sr + mf, mu)? - g(sb + jf + 1.0, lam, sr + mf + 1.0, mu)?,
                )
            };
            shell += c * wp * qp - v * wm * qm;
            mag += c * wp * qp.abs() + v * wm * qm.abs();
        }
        if sum.push(shell, mag) {
            done = true;
            break;
        }
    }
    sum.finish("Pólya mean velocity", done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_time_limit() {
        let pp = PolyaParams::new(1.0, 2.0, 1.0, 1.0, 1.5).unwrap();
        let m = MotionParams::new(2.0, 1.0).unwrap();
        let r = mean_velocity_polya(&pp, &m, 1e-6, VelocitySign::Forward, &ShellTruncation::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-5);
        let r = mean_velocity_polya(&pp, &m, 1e-6, VelocitySign::Backward, &ShellTruncation::default()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-5);
    }

    #[test]
    fn bounded_by_speeds() {
        let pp = PolyaParams::new(2.0, 1.0, 0.5, 1.0, 2.0).unwrap();
        let m = MotionParams::new(1.0, 3.0).unwrap();
        for &t in &[0.5, 2.0, 5.0] {
            for s in [VelocitySign::Forward, VelocitySign::Backward] {
                let r = mean_velocity_polya(&pp, &m, t, s, &ShellTruncation::default()).unwrap();
                assert!(r.value <= 1.0 && r.value >= -3.0, "{t} {s}: {}", r.value);
            }
        }
    }
}
