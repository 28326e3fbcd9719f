//! Conformance checks between the analytic laws, the series, quadrature,
//! brute-force enumeration and simulation.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::Result;
use crate::law::ProcessLaw;
use crate::mean_velocity::MeanVelocityMethod;
use crate::model::Model;
use crate::monte_carlo::{binomial_se, estimate_mean_velocity, EmpiricalLaw};
use crate::quadrature::QuadOptions;
use crate::trials::{TrialScheme, VelocitySign};

/// Where a check's target value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Series,
    Quadrature,
    Enumeration,
    Simulation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub target: f64,
    pub estimate: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub provenance: Provenance,
    pub rationale: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes iff `|estimate - target| <= tolerance`.
    pub fn within(
        name: impl Into<String>,
        target: f64,
        estimate: f64,
        tolerance: f64,
        provenance: Provenance,
        rationale: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            target,
            estimate,
            tolerance,
            passed: (estimate - target).abs() <= tolerance,
            provenance,
            rationale: rationale.into(),
            detail: None,
        }
    }

    /// A check that could not be evaluated.
    pub fn errored(name: impl Into<String>, provenance: Provenance, err: &crate::Error) -> Self {
        Self {
            name: name.into(),
            target: f64::NAN,
            estimate: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
            provenance,
            rationale: "evaluation failed".into(),
            detail: Some(err.to_string()),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ValidationReport {
    pub config: String,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl ValidationReport {
    pub fn new(config: impl Into<String>) -> Self {
        Self {
            config: config.into(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, check: Check) {
        if check.passed {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

fn given_label(given: Option<VelocitySign>) -> String {
    match given {
        None => String::new(),
        Some(s) => format!(" | V0={s}"),
    }
}

/// Atoms plus the integral of the density equal 1.
pub fn check_normalization(law: &ProcessLaw, given: Option<VelocitySign>) -> Check {
    let name = format!("normalization{} [{}]", given_label(given), law.evaluator_name());
    let opts = QuadOptions::default().with_rel_tol(1e-10).with_abs_tol(1e-10);
    match law.total_mass(given, &opts) {
        Ok(m) => Check::within(
            name,
            1.0,
            m,
            1e-6,
            Provenance::Quadrature,
            "quadrature error is below 1e-9, so 1e-6 only flags a wrong law",
        ),
        Err(e) => Check::errored(name, Provenance::Quadrature, &e),
    }
}

/// Expected and observed counts, merged left to right until every
/// category expects at least `min_expected`.
fn merge_categories(cats: &[(f64, u64)], min_expected: f64) -> Vec<(f64, u64)> {
    let mut out: Vec<(f64, u64)> = Vec::new();
    let mut acc = (0.0, 0u64);
    for &(e, o) in cats {
        acc = (acc.0 + e, acc.1 + o);
        if acc.0 >= min_expected {
            out.push(acc);
            acc = (0.0, 0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0 {
        match out.last_mut() {
            Some(last) => *last = (last.0 + acc.0, last.1 + acc.1),
            None => out.push(acc),
        }
    }
    out
}

/// Atom z-tests, per-bin 3-sigma tests and a chi-square summary.
pub fn check_empirical_vs_analytic(emp: &EmpiricalLaw, law: &ProcessLaw) -> Vec<Check> {
    let n = emp.n_paths;
    let nf = n as f64;
    let mut checks = Vec::new();
    for (label, target, count) in [
        ("atom +ct", law.atoms.plus, emp.atom_plus),
        ("atom -vt", law.atoms.minus, emp.atom_minus),
    ] {
        let sigma = binomial_se(target, n);
        checks.push(Check::within(
            format!("{label} frequency"),
            target,
            count as f64 / nf,
            3.0 * sigma,
            Provenance::ClosedForm,
            "3 binomial standard errors of the analytic atom",
        ));
    }

    let opts = QuadOptions::default().with_rel_tol(1e-10).with_abs_tol(1e-12);
    let mut masses = Vec::with_capacity(emp.counts.len());
    for i in 0..emp.counts.len() {
        match law.density_mass(emp.edges[i], emp.edges[i + 1], None, &opts) {
            Ok(m) => masses.push(m),
            Err(e) => {
                checks.push(Check::errored("histogram bins", Provenance::Quadrature, &e));
                return checks;
            }
        }
    }
    let outside: Vec<usize> = (0..masses.len())
        .filter(|&i| {
            let sigma = binomial_se(masses[i], n);
            (emp.bin_freq(i) - masses[i]).abs() > 3.0 * sigma
        })
        .collect();
    let frac = outside.len() as f64 / masses.len() as f64;
    let mut c = Check::within(
        "bins beyond 3 sigma (fraction)",
        0.0,
        frac,
        0.05,
        Provenance::Quadrature,
        "each bin exceeds 3 sigma with probability 0.27%; a 5% budget keeps false alarms below 1e-3",
    );
    if !outside.is_empty() {
        c = c.with_detail(format!("bins {outside:?}"));
    }
    checks.push(c);

    let mut cats = vec![(law.atoms.minus * nf, emp.atom_minus)];
    cats.extend(masses.iter().zip(&emp.counts).map(|(&m, &o)| (m * nf, o)));
    cats.push((law.atoms.plus * nf, emp.atom_plus));
    let merged = merge_categories(&cats, 5.0);
    let stat: f64 = merged
        .iter()
        .filter(|(e, _)| *e > 0.0)
        .map(|&(e, o)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = merged.len().saturating_sub(1).max(1) as f64;
    let p = ChiSquared::new(dof).map(|d| d.sf(stat)).unwrap_or(f64::NAN);
    checks.push(Check {
        name: "chi-square p-value".into(),
        target: 1.0,
        estimate: p,
        tolerance: 0.001,
        passed: p >= 0.001,
        provenance: Provenance::Quadrature,
        rationale: "passes iff p >= 0.001; categories with fewer than 5 expected paths are merged".into(),
        detail: Some(format!("statistic {stat:.6} on {dof} degrees of freedom")),
    });
    checks
}

fn urn_prob(scheme: &TrialScheme, trials: u64, successes: u64) -> f64 {
    match *scheme {
        TrialScheme::Bernoulli { p } => p,
        TrialScheme::Polya { b, r, a } => (b + a * successes as f64) / (b + r + a * trials as f64),
    }
}

/// Brute-force joint law of `(N_{k-1}, Z_k)` given `Z_0`: walks all `2^k`
/// outcomes of `X_2, ..., X_{k+1}`. Indexed `[j][zk]` with `zk = 1` forward.
fn enumerate_joint(scheme: &TrialScheme, k: u64, initial: VelocitySign) -> Vec<[f64; 2]> {
    let mut out = vec![[0.0; 2]; k as usize];
    for bits in 0u64..(1 << k) {
        let mut prob = 1.0;
        let mut succ = u64::from(initial.is_forward());
        for i in 0..k {
            let q = urn_prob(scheme, i + 1, succ);
            if bits >> i & 1 == 1 {
                prob *= q;
                succ += 1;
            } else {
                prob *= 1.0 - q;
            }
        }
        let j = (bits & ((1 << (k - 1)) - 1)).count_ones() as usize;
        let zk = (bits >> (k - 1) & 1) as usize;
        out[j][zk] += prob;
    }
    out
}

/// Joint and marginal count laws against exhaustive enumeration for
/// `k = 1..=k_max`, both initial velocities.
pub fn check_enumeration(scheme: &TrialScheme, k_max: u64) -> Vec<Check> {
    let (mut joint_err, mut count_err, mut sum_err) = (0.0_f64, 0.0_f64, 0.0_f64);
    for initial in [VelocitySign::Forward, VelocitySign::Backward] {
        for k in 1..=k_max {
            let brute = enumerate_joint(scheme, k, initial);
            let dist = match scheme.count_dist(k, initial) {
                Ok(d) => d,
                Err(e) => return vec![Check::errored(format!("enumeration {scheme}"), Provenance::Enumeration, &e)],
            };
            let mut total = 0.0;
            for j in 0..k {
                for (zi, zk) in [(0, VelocitySign::Backward), (1, VelocitySign::Forward)] {
                    let w = match scheme.joint_count_velocity(k, j, initial, zk) {
                        Ok(w) => w,
                        Err(e) => {
                            return vec![Check::errored(format!("enumeration {scheme}"), Provenance::Enumeration, &e)]
                        }
                    };
                    joint_err = joint_err.max((w - brute[j as usize][zi]).abs());
                    total += w;
                }
                let marginal = brute[j as usize][0] + brute[j as usize][1];
                count_err = count_err.max((dist.pmf[j as usize] - marginal).abs());
            }
            sum_err = sum_err.max((total - 1.0).abs());
        }
    }
    let why = "exact arithmetic up to rounding of at most 2^10 products";
    vec![
        Check::within(
            format!("joint law of (N, Z_k) vs enumeration, k<={k_max} [{scheme}]"),
            0.0,
            joint_err,
            1e-12,
            Provenance::Enumeration,
            why,
        ),
        Check::within(
            format!("law of N vs enumeration, k<={k_max} [{scheme}]"),
            0.0,
            count_err,
            1e-12,
            Provenance::Enumeration,
            why,
        ),
        Check::within(
            format!("joint law sums to 1, k<={k_max} [{scheme}]"),
            0.0,
            sum_err,
            1e-12,
            Provenance::Enumeration,
            why,
        ),
    ]
}

/// Analytic `E[V_t | V_0]` against conditioned simulation.
pub fn check_mean_velocity(
    model: &Model,
    method: &dyn MeanVelocityMethod,
    t: f64,
    n_paths: u64,
    seed: u64,
) -> Vec<Check> {
    let mut out = Vec::new();
    for (i, initial) in [VelocitySign::Forward, VelocitySign::Backward].into_iter().enumerate() {
        let name = format!("mean velocity | V0={initial} at t={t} [{}]", method.name());
        let check = method.mean_velocity(model, t, initial).and_then(|a| {
            let mc = estimate_mean_velocity(model, t, n_paths, initial, seed.wrapping_add(i as u64))?;
            Ok(Check::within(
                name.clone(),
                a.value,
                mc.mean,
                3.0 * mc.std_err,
                Provenance::Simulation,
                "3 standard errors of the conditioned sample mean",
            ))
        });
        out.push(check.unwrap_or_else(|e| Check::errored(name, Provenance::Simulation, &e)));
    }
    out
}

/// A scheme that differs from `scheme` enough for every statistical check
/// to notice: Bernoulli `p` moves to 0.5 (or 0.3 from 0.5), the urn's
/// initial composition is reversed (or doubled when symmetric).
pub fn mismatched_scheme(scheme: &TrialScheme) -> Result<TrialScheme> {
    match *scheme {
        TrialScheme::Bernoulli { p } => {
            TrialScheme::bernoulli(if (p - 0.5).abs() < 0.1 { 0.3 } else { 0.5 })
        }
        TrialScheme::Polya { b, r, a } => {
            if b == r {
                TrialScheme::polya(2.0 * b, r, a)
            } else {
                TrialScheme::polya(r, b, a)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_small_urn() {
        // b=r=A=1 given X_1 = 1: P{X_2 = 1} = 2/3
        let s = TrialScheme::polya(1.0, 1.0, 1.0).unwrap();
        let e = enumerate_joint(&s, 1, VelocitySign::Forward);
        assert!((e[0][1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((e[0][0] - 1.0 / 3.0).abs() < 1e-15);
        // k=2: N_1 = X_2, so the marginal is [1/3, 2/3]
        let e = enumerate_joint(&s, 2, VelocitySign::Forward);
        assert!((e[0][0] + e[0][1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn enumeration_checks_pass() {
        for s in [TrialScheme::bernoulli(0.37).unwrap(), TrialScheme::polya(2.0, 3.0, 1.5).unwrap()] {
            for c in check_enumeration(&s, 8) {
                assert!(c.passed, "{c:?}");
            }
        }
    }

    #[test]
    fn merging_keeps_totals() {
        let cats = [(1.0, 2), (3.0, 1), (10.0, 12), (2.0, 0), (1.0, 3)];
        let m = merge_categories(&cats, 5.0);
        // the short tail is folded into the last full category
        assert_eq!(m, vec![(17.0, 18)]);
        let m = merge_categories(&[(6.0, 1), (2.0, 2), (5.0, 9)], 5.0);
        assert_eq!(m, vec![(6.0, 1), (7.0, 11)]);
    }

    #[test]
    fn report_counts() {
        let mut r = ValidationReport::new("x");
        r.push(Check::within("a", 1.0, 1.0, 0.0, Provenance::ClosedForm, ""));
        r.push(Check::within("b", 1.0, 2.0, 0.5, Provenance::ClosedForm, ""));
        assert_eq!((r.passed, r.failed), (1, 1));
        assert!(!r.all_passed());
        assert_eq!(r.checks[1].tolerance, 0.5);
    }
}
