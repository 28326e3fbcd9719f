//! Law of the position `S_t`: two atoms at `ct` and `-vt` plus a density on
//! `(-vt, ct)`.
//!
//! Conditional pieces follow the split by final velocity: `f(x,t|y)` is the
//! part of the density with `V_t = c`, `b(x,t|y)` the part with `V_t = -v`.

pub mod damped;
pub mod polya;
pub mod series;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::intertimes::Family;
use crate::model::Model;
use crate::quadrature::{integrate, QuadOptions};
use crate::special::SeriesControl;
use crate::trials::{TrialScheme, VelocitySign};

pub use damped::{atoms_damped, density_damped, endpoint_limits_damped, stationary_damped};
pub use polya::{atoms_polya, density_polya, endpoint_limits_polya, PolyaParams};
pub use series::{atoms_general, density_general_series, SeriesDiagnostics};

/// Point masses at `ct` and `-vt`, unconditional and given the initial
/// velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atoms {
    pub plus: f64,
    pub minus: f64,
    /// `P{S_t = ct | V_0 = c}`.
    pub plus_given_forward: f64,
    /// `P{S_t = -vt | V_0 = -v}`.
    pub minus_given_backward: f64,
}

impl Atoms {
    /// Builds the unconditional atoms from the conditional ones.
    pub fn from_conditional(p0: f64, plus_given_forward: f64, minus_given_backward: f64) -> Self {
        Self {
            plus: p0 * plus_given_forward,
            minus: (1.0 - p0) * minus_given_backward,
            plus_given_forward,
            minus_given_backward,
        }
    }

    pub fn given(&self, initial: VelocitySign) -> f64 {
        match initial {
            VelocitySign::Forward => self.plus_given_forward,
            VelocitySign::Backward => self.minus_given_backward,
        }
    }
}

/// Density of `S_t` at one point, with its conditional pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPoint {
    pub x: f64,
    pub total: f64,
    pub given_forward: f64,
    pub given_backward: f64,
    pub f_forward: f64,
    pub b_forward: f64,
    pub f_backward: f64,
    pub b_backward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<SeriesDiagnostics>,
}

impl DensityPoint {
    pub fn from_pieces(
        x: f64,
        p0: f64,
        (f_forward, b_forward): (f64, f64),
        (f_backward, b_backward): (f64, f64),
    ) -> Self {
        let given_forward = f_forward + b_forward;
        let given_backward = f_backward + b_backward;
        Self {
            x,
            total: p0 * given_forward + (1.0 - p0) * given_backward,
            given_forward,
            given_backward,
            f_forward,
            b_forward,
            f_backward,
            b_backward,
            diagnostics: None,
        }
    }

    pub fn given(&self, initial: VelocitySign) -> f64 {
        match initial {
            VelocitySign::Forward => self.given_forward,
            VelocitySign::Backward => self.given_backward,
        }
    }
}

/// Validates `t > 0` and `-vt < x < ct`, returning `tau_*`.
pub(crate) fn interior_tau(c: f64, v: f64, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain("density", format!("t = {t} must be > 0")));
    }
    if !(x > -v * t && x < c * t) {
        return Err(domain(
            "density",
            format!("x = {x} lies outside the open support ({}, {})", -v * t, c * t),
        ));
    }
    Ok((v * t + x) / (c + v))
}

/// Computes atoms and densities for a model.
pub trait LawEvaluator: Send + Sync {
    fn name(&self) -> &'static str;

    fn atoms(&self, model: &Model, t: f64) -> Result<Atoms>;

    fn density(&self, model: &Model, x: f64, t: f64) -> Result<DensityPoint>;
}

/// Closed forms: damped Bernoulli (linear-rate exponential periods) and Pólya
/// (Gamma-then-exponential periods).
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedFormLaw;

enum ClosedCase {
    Damped { p: f64, lambda: f64, mu: f64 },
    Polya(PolyaParams),
}

fn closed_case(model: &Model) -> Result<ClosedCase> {
    match (model.scheme, model.intertimes.family()) {
        (TrialScheme::Bernoulli { p }, Family::LinearRate { lambda, mu }) => {
            Ok(ClosedCase::Damped { p, lambda, mu })
        }
        (TrialScheme::Polya { .. }, Family::GammaThenExp { b, r, a, lambda, mu }) => {
            Ok(ClosedCase::Polya(PolyaParams::new(b, r, a, lambda, mu)?))
        }
        _ => Err(Error::Unsupported(format!(
            "no closed-form law for {} with {}; use the series evaluator",
            model.scheme,
            model.intertimes.spec()
        ))),
    }
}

impl LawEvaluator for ClosedFormLaw {
    fn name(&self) -> &'static str {
        "closed-form"
    }

    fn atoms(&self, model: &Model, t: f64) -> Result<Atoms> {
        match closed_case(model)? {
            ClosedCase::Damped { p, lambda, mu } => atoms_damped(p, lambda, mu, t),
            ClosedCase::Polya(pp) => atoms_polya(&pp, t),
        }
    }

    fn density(&self, model: &Model, x: f64, t: f64) -> Result<DensityPoint> {
        match closed_case(model)? {
            ClosedCase::Damped { p, lambda, mu } => density_damped(p, lambda, mu, &model.motion, x, t),
            ClosedCase::Polya(pp) => density_polya(&pp, &model.motion, x, t),
        }
    }
}

/// The general series over the number of switches, valid for every
/// intertime family.
#[derive(Debug, Clone, Copy)]
pub struct SeriesLaw {
    pub k_max: u64,
    pub ctrl: SeriesControl,
}

impl Default for SeriesLaw {
    fn default() -> Self {
        Self {
            k_max: 200,
            ctrl: SeriesControl::new(1e-12, 10_000).expect("valid control"),
        }
    }
}

impl LawEvaluator for SeriesLaw {
    fn name(&self) -> &'static str {
        "series"
    }

    fn atoms(&self, model: &Model, t: f64) -> Result<Atoms> {
        atoms_general(model, t, &self.ctrl)
    }

    fn density(&self, model: &Model, x: f64, t: f64) -> Result<DensityPoint> {
        density_general_series(model, x, t, self.k_max, &self.ctrl)
    }
}

/// A model's law at a fixed time, evaluated by one strategy.
#[derive(Clone)]
pub struct ProcessLaw {
    pub model: Model,
    pub t: f64,
    pub atoms: Atoms,
    evaluator: Arc<dyn LawEvaluator>,
}

impl std::fmt::Debug for ProcessLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProcessLaw")
            .field("model", &self.model.to_string())
            .field("t", &self.t)
            .field("atoms", &self.atoms)
            .field("evaluator", &self.evaluator.name())
            .finish()
    }
}

impl ProcessLaw {
    pub fn new(model: Model, t: f64, evaluator: Arc<dyn LawEvaluator>) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain("ProcessLaw", format!("t = {t} must be > 0")));
        }
        let atoms = evaluator.atoms(&model, t)?;
        Ok(Self {
            model,
            t,
            atoms,
            evaluator,
        })
    }

    pub fn evaluator_name(&self) -> &'static str {
        self.evaluator.name()
    }

    pub fn support(&self) -> (f64, f64) {
        self.model.motion.support(self.t)
    }

    pub fn density(&self, x: f64) -> Result<DensityPoint> {
        self.evaluator.density(&self.model, x, self.t)
    }

    /// Integral of the (conditional, if `given` is set) density over `[lo, hi]`.
    pub fn density_mass(&self, lo: f64, hi: f64, given: Option<VelocitySign>, opts: &QuadOptions) -> Result<f64> {
        let (a, b) = self.support();
        let lo = lo.max(a);
        let hi = hi.min(b);
        if hi <= lo {
            return Ok(0.0);
        }
        let first_err = std::cell::RefCell::new(None);
        let f = |x: f64| {
            // quadrature nodes are interior, but guard the closed ends anyway
            if x <= a || x >= b {
                return 0.0;
            }
            match self.density(x) {
                Ok(d) => match given {
                    None => d.total,
                    Some(s) => d.given(s),
                },
                Err(e) => {
                    first_err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let r = integrate(f, lo, hi, opts);
        if let Some(e) = first_err.into_inner() {
            return Err(e);
        }
        Ok(r?.value)
    }

    /// Atoms plus the integral of the density; 1 for a correct law.
    pub fn total_mass(&self, given: Option<VelocitySign>, opts: &QuadOptions) -> Result<f64> {
        let (a, b) = self.support();
        let atoms = match given {
            None => self.atoms.plus + self.atoms.minus,
            Some(s) => self.atoms.given(s),
        };
        Ok(atoms + self.density_mass(a, b, given, opts)?)
    }
}
