//! Velocity-sign trials: Bernoulli and Pólya urn schemes and the laws of the
//! forward count `N_{k-1} = X_2 + ... + X_k`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::PathRng;
use crate::special::{ln_binomial, ln_pochhammer};
use rand::Rng;

/// Sign of a velocity: forward (`+c`) or backward (`-v`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VelocitySign {
    Forward,
    Backward,
}

impl VelocitySign {
    pub fn from_success(x: bool) -> Self {
        if x {
            Self::Forward
        } else {
            Self::Backward
        }
    }

    pub fn is_forward(self) -> bool {
        self == Self::Forward
    }

    pub fn flip(self) -> Self {
        match self {
            Self::Forward => Self::Backward,
            Self::Backward => Self::Forward,
        }
    }
}

impl fmt::Display for VelocitySign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Forward => "+c",
            Self::Backward => "-v",
        })
    }
}

/// The trial process `X_1, X_2, ...`; `X_n = 1` sets velocity `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme")]
pub enum TrialScheme {
    Bernoulli { p: f64 },
    /// Pólya urn with `b` forward balls, `r` backward balls and `a` balls of
    /// the drawn colour added after each draw.
    Polya { b: f64, r: f64, a: f64 },
}

impl TrialScheme {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain("bernoulli", format!("p = {p} must lie in (0, 1)")));
        }
        Ok(Self::Bernoulli { p })
    }

    pub fn polya(b: f64, r: f64, a: f64) -> Result<Self> {
        for (name, val) in [("b", b), ("r", r), ("A", a)] {
            if !(val > 0.0 && val.is_finite()) {
                return Err(domain("polya", format!("{name} = {val} must be > 0 (A = 0 is the Bernoulli scheme)")));
            }
        }
        Ok(Self::Polya { b, r, a })
    }

    /// `P{X_1 = 1}`.
    pub fn initial_forward_prob(&self) -> f64 {
        match *self {
            Self::Bernoulli { p } => p,
            Self::Polya { b, r, .. } => b / (b + r),
        }
    }

    pub fn initial_prob(&self, sign: VelocitySign) -> f64 {
        match sign {
            VelocitySign::Forward => self.initial_forward_prob(),
            VelocitySign::Backward => 1.0 - self.initial_forward_prob(),
        }
    }

    /// `P{X_n = 1 | X_1 = 1}` for `n >= 2`.
    pub fn pi_a(&self) -> f64 {
        match *self {
            Self::Bernoulli { p } => p,
            Self::Polya { b, r, a } => (b + a) / (b + a + r),
        }
    }

    /// The scheme seen with directions exchanged.
    pub fn mirrored(&self) -> Self {
        match *self {
            Self::Bernoulli { p } => Self::Bernoulli { p: 1.0 - p },
            Self::Polya { b, r, a } => Self::Polya { b: r, r: b, a },
        }
    }

    /// Urn parameters `(beta1, beta2)` of the draws after the first, in units
    /// of `A`, given the first outcome.
    fn polya_shapes(b: f64, r: f64, a: f64, initial: VelocitySign) -> (f64, f64) {
        match initial {
            VelocitySign::Forward => ((b + a) / a, r / a),
            VelocitySign::Backward => (b / a, (r + a) / a),
        }
    }

    /// `ln P{N_{k-1} = j | Z_0 = initial}`.
    fn ln_count_prob(&self, k: u64, j: u64, initial: VelocitySign) -> f64 {
        let n = k - 1;
        match *self {
            Self::Bernoulli { p } => {
                ln_binomial(n, j) + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()
            }
            Self::Polya { b, r, a } => {
                let (b1, b2) = Self::polya_shapes(b, r, a, initial);
                ln_binomial(n, j) + ln_pochhammer(b1, j) + ln_pochhammer(b2, n - j)
                    - ln_pochhammer(b1 + b2, n)
            }
        }
    }

    /// `P{X_{k+1} = 1 | Z_0 = initial, N_{k-1} = j}`.
    fn next_forward_given_count(&self, k: u64, j: u64, initial: VelocitySign) -> f64 {
        match *self {
            Self::Bernoulli { p } => p,
            Self::Polya { b, r, a } => {
                let (b1, b2) = Self::polya_shapes(b, r, a, initial);
                (b1 + j as f64) / (b1 + b2 + (k - 1) as f64)
            }
        }
    }

    /// Law of `N_{k-1}` given `Z_0`.
    pub fn count_dist(&self, k: u64, initial: VelocitySign) -> Result<CountDistribution> {
        if k == 0 {
            return Err(domain("count_dist", "k must be >= 1"));
        }
        let pmf = (0..k).map(|j| self.ln_count_prob(k, j, initial).exp()).collect();
        Ok(CountDistribution { k, initial, pmf })
    }

    /// `P{N_{k-1} = j, Z_k = zk | Z_0 = initial}`.
    pub fn joint_count_velocity(
        &self,
        k: u64,
        j: u64,
        initial: VelocitySign,
        zk: VelocitySign,
    ) -> Result<f64> {
        if k == 0 {
            return Err(domain("joint_count_velocity", "k must be >= 1"));
        }
        if j >= k {
            return Err(domain(
                "joint_count_velocity",
                format!("j = {j} must lie in 0..={}", k - 1),
            ));
        }
        let q = self.next_forward_given_count(k, j, initial);
        let pz = if zk.is_forward() { q } else { 1.0 - q };
        Ok(self.ln_count_prob(k, j, initial).exp() * pz)
    }

    /// `P{X_1 = ... = X_{k+1} = 1}` (or all zero for `Backward`): the weight of
    /// `k` switches that all keep the initial direction.
    pub fn constant_direction_weight(&self, k: u64, sign: VelocitySign) -> f64 {
        let n = (k + 1) as f64;
        match *self {
            Self::Bernoulli { p } => match sign {
                VelocitySign::Forward => p.powf(n),
                VelocitySign::Backward => (1.0 - p).powf(n),
            },
            Self::Polya { b, r, a } => {
                let own = if sign.is_forward() { b } else { r };
                (ln_pochhammer(own / a, k + 1) - ln_pochhammer((b + r) / a, k + 1)).exp()
            }
        }
    }
}

impl fmt::Display for TrialScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bernoulli { p } => write!(f, "bernoulli:p={p}"),
            Self::Polya { b, r, a } => write!(f, "polya:b={b},r={r},A={a}"),
        }
    }
}

/// Outcome history of the trials drawn so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialState {
    scheme: TrialScheme,
    n_trials: u64,
    n_successes: u64,
}

impl TrialState {
    pub fn new(scheme: TrialScheme) -> Self {
        Self {
            scheme,
            n_trials: 0,
            n_successes: 0,
        }
    }

    pub fn with_history(scheme: TrialScheme, n_trials: u64, n_successes: u64) -> Result<Self> {
        if n_successes > n_trials {
            return Err(domain(
                "TrialState",
                format!("{n_successes} successes exceed {n_trials} trials"),
            ));
        }
        Ok(Self {
            scheme,
            n_trials,
            n_successes,
        })
    }

    pub fn n_trials(&self) -> u64 {
        self.n_trials
    }

    pub fn n_successes(&self) -> u64 {
        self.n_successes
    }

    pub fn next_success_prob(&self) -> f64 {
        match self.scheme {
            TrialScheme::Bernoulli { p } => p,
            TrialScheme::Polya { b, r, a } => {
                (b + a * self.n_successes as f64) / (b + r + a * self.n_trials as f64)
            }
        }
    }

    /// Records an outcome without drawing it (used to condition on `X_1`).
    pub fn record(&mut self, success: bool) {
        self.n_trials += 1;
        if success {
            self.n_successes += 1;
        }
    }

    /// Draws the next outcome by inversion of the uniform `u`.
    pub fn sample_with_uniform(&mut self, u: f64) -> bool {
        let x = u < self.next_success_prob();
        self.record(x);
        x
    }

    pub fn sample(&mut self, rng: &mut PathRng) -> bool {
        let u: f64 = rng.random();
        self.sample_with_uniform(u)
    }
}

/// `P{N_{k-1} = j | Z_0 = initial}` for `j = 0..k-1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountDistribution {
    pub k: u64,
    pub initial: VelocitySign,
    pub pmf: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_validate() {
        assert!(TrialScheme::bernoulli(0.0).is_err());
        assert!(TrialScheme::bernoulli(1.0).is_err());
        assert!(TrialScheme::polya(1.0, 1.0, 0.0).is_err());
        assert!(TrialScheme::polya(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn next_success_prob_examples() {
        let s = TrialScheme::bernoulli(0.3).unwrap();
        let st = TrialState::with_history(s, 5, 2).unwrap();
        assert_eq!(st.next_success_prob(), 0.3);

        let s = TrialScheme::polya(1.0, 1.0, 1.0).unwrap();
        let st = TrialState::with_history(s, 1, 1).unwrap();
        assert!((st.next_success_prob() - 2.0 / 3.0).abs() < 1e-15);

        let s = TrialScheme::polya(2.0, 3.0, 2.0).unwrap();
        assert!((TrialState::new(s).next_success_prob() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn sampling_by_quantile() {
        let s = TrialScheme::polya(1.0, 3.0, 1.0).unwrap();
        let mut st = TrialState::new(s);
        assert!(st.sample_with_uniform(0.2));
        assert_eq!((st.n_trials(), st.n_successes()), (1, 1));
        // now 2/5
        assert!(!st.sample_with_uniform(0.45));
        assert_eq!((st.n_trials(), st.n_successes()), (2, 1));
    }

    #[test]
    fn count_dist_examples() {
        let s = TrialScheme::bernoulli(0.5).unwrap();
        let d = s.count_dist(3, VelocitySign::Forward).unwrap();
        for (x, y) in d.pmf.iter().zip([0.25, 0.5, 0.25]) {
            assert!((x - y).abs() < 1e-15);
        }
        let s = TrialScheme::polya(1.0, 1.0, 1.0).unwrap();
        let d = s.count_dist(2, VelocitySign::Forward).unwrap();
        assert!((d.pmf[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.pmf[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.count_dist(1, VelocitySign::Backward).unwrap().pmf, vec![1.0]);
        assert!(s.count_dist(0, VelocitySign::Forward).is_err());
    }

    #[test]
    fn joint_first_step() {
        let s = TrialScheme::bernoulli(0.37).unwrap();
        let v = s
            .joint_count_velocity(1, 0, VelocitySign::Forward, VelocitySign::Forward)
            .unwrap();
        assert!((v - 0.37).abs() < 1e-15);
        let s = TrialScheme::polya(2.0, 3.0, 1.5).unwrap();
        let v = s
            .joint_count_velocity(1, 0, VelocitySign::Forward, VelocitySign::Forward)
            .unwrap();
        assert!((v - 3.5 / 6.5).abs() < 1e-15);
        assert!(s
            .joint_count_velocity(3, 3, VelocitySign::Forward, VelocitySign::Forward)
            .is_err());
    }

    #[test]
    fn constant_direction_weight_matches_product() {
        let s = TrialScheme::polya(2.0, 3.0, 1.5).unwrap();
        // b/(b+r) * (b+A)/(b+r+A) * (b+2A)/(b+r+2A)
        let expected = 2.0 / 5.0 * 3.5 / 6.5 * 5.0 / 8.0;
        assert!((s.constant_direction_weight(2, VelocitySign::Forward) - expected).abs() < 1e-15);
        let expected = 3.0 / 5.0 * 4.5 / 6.5;
        assert!((s.constant_direction_weight(1, VelocitySign::Backward) - expected).abs() < 1e-15);
    }

    #[test]
    fn mirror_swaps_roles() {
        let s = TrialScheme::polya(2.0, 3.0, 1.5).unwrap();
        let m = s.mirrored();
        for k in 1..6 {
            for j in 0..k {
                let a = s
                    .joint_count_velocity(k, j, VelocitySign::Forward, VelocitySign::Backward)
                    .unwrap();
                let b = m
                    .joint_count_velocity(k, k - 1 - j, VelocitySign::Backward, VelocitySign::Forward)
                    .unwrap();
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
