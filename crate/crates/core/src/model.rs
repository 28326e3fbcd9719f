//! Motion parameters, the assembled process model and the textual
//! specification language (`bernoulli:p=0.3`, `linexp:lambda=1,mu=2`, ...).

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::intertimes::IntertimeModel;
use crate::registry::Registry;
use crate::trials::TrialScheme;

/// Forward speed `c` and backward speed `v`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MotionParams {
    pub c: f64,
    pub v: f64,
}

impl MotionParams {
    pub fn new(c: f64, v: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && v > 0.0 && v.is_finite()) {
            return Err(domain("MotionParams", format!("speeds must be > 0, got c={c}, v={v}")));
        }
        Ok(Self { c, v })
    }

    /// Time spent moving forward by time `t` to sit at `x`: `(vt + x)/(c + v)`.
    pub fn tau_star(&self, x: f64, t: f64) -> f64 {
        (self.v * t + x) / (self.c + self.v)
    }

    /// Open support `(-vt, ct)` of the density.
    pub fn support(&self, t: f64) -> (f64, f64) {
        (-self.v * t, self.c * t)
    }

    pub fn mirrored(&self) -> Self {
        Self { c: self.v, v: self.c }
    }
}

/// A fully specified process: trial scheme, period durations and speeds.
#[derive(Debug, Clone)]
pub struct Model {
    pub scheme: TrialScheme,
    pub intertimes: Arc<dyn IntertimeModel>,
    pub motion: MotionParams,
}

impl Model {
    pub fn new(scheme: TrialScheme, intertimes: Arc<dyn IntertimeModel>, motion: MotionParams) -> Self {
        Self {
            scheme,
            intertimes,
            motion,
        }
    }

    /// Builds a model from textual specs using the built-in registry.
    pub fn parse(scheme: &str, intertimes: &str, c: f64, v: f64) -> Result<Self> {
        Registry::builtin().model(scheme, intertimes, c, v)
    }

    /// Speed of the given sign (`c` or `-v`).
    pub fn velocity(&self, sign: crate::VelocitySign) -> f64 {
        if sign.is_forward() {
            self.motion.c
        } else {
            -self.motion.v
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scheme={} intertimes={} c={} v={}",
            self.scheme,
            self.intertimes.spec(),
            self.motion.c,
            self.motion.v
        )
    }
}

/// A parsed `name:key=value,...` specification.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecArgs {
    pub name: String,
    pub args: Vec<(String, f64)>,
}

impl SpecArgs {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (text, ""),
        };
        if name.is_empty() {
            return Err(Error::Parse(format!("missing name in '{text}'")));
        }
        let mut args = Vec::new();
        for part in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}' in '{text}'")))?;
            let k = k.trim();
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("'{}' is not a number in '{text}'", v.trim())))?;
            if args.iter().any(|(existing, _)| existing == k) {
                return Err(Error::Parse(format!("duplicate key '{k}' in '{text}'")));
            }
            args.push((k.to_string(), value));
        }
        Ok(Self {
            name: name.to_ascii_lowercase(),
            args,
        })
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        self.args
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Parse(format!("'{}' needs parameter '{key}'", self.name)))
    }

    /// Rejects keys outside `allowed`.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.args {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Parse(format!(
                    "unknown parameter '{k}' for '{}' (expected {})",
                    self.name,
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

/// Parses `bernoulli:p=..` or `polya:b=..,r=..,A=..`.
pub fn parse_scheme(text: &str) -> Result<TrialScheme> {
    let spec = SpecArgs::parse(text)?;
    match spec.name.as_str() {
        "bernoulli" => {
            spec.expect_keys(&["p"])?;
            TrialScheme::bernoulli(spec.get("p")?)
        }
        "polya" => {
            spec.expect_keys(&["b", "r", "A"])?;
            TrialScheme::polya(spec.get("b")?, spec.get("r")?, spec.get("A")?)
        }
        other => Err(Error::Parse(format!(
            "unknown scheme '{other}' (expected bernoulli or polya)"
        ))),
    }
}
