//! Name-keyed registry of the interchangeable strategies: intertime families,
//! law evaluators and mean-velocity methods.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::intertimes::{
    ConstantRateExponential, GammaThenExponential, IntertimeModel, LinearRateExponential,
};
use crate::law::{ClosedFormLaw, LawEvaluator, SeriesLaw};
use crate::mean_velocity::{ClosedFormMeanVelocity, GeneralMeanVelocity, MeanVelocityMethod};
use crate::model::{parse_scheme, Model, MotionParams, SpecArgs};
use crate::trials::TrialScheme;

/// Builds an intertime family from its parsed parameters and the scheme it
/// accompanies.
pub type IntertimeCtor = fn(&SpecArgs, &TrialScheme) -> Result<Arc<dyn IntertimeModel>>;

fn linexp(spec: &SpecArgs, _: &TrialScheme) -> Result<Arc<dyn IntertimeModel>> {
    spec.expect_keys(&["lambda", "mu"])?;
    Ok(Arc::new(LinearRateExponential::new(spec.get("lambda")?, spec.get("mu")?)?))
}

fn gammaexp(spec: &SpecArgs, scheme: &TrialScheme) -> Result<Arc<dyn IntertimeModel>> {
    spec.expect_keys(&["lambda", "mu"])?;
    if !matches!(scheme, TrialScheme::Polya { .. }) {
        return Err(Error::Parse(
            "gammaexp takes its Gamma shapes from the urn and needs a polya scheme".into(),
        ));
    }
    Ok(Arc::new(GammaThenExponential::for_scheme(
        scheme,
        spec.get("lambda")?,
        spec.get("mu")?,
    )?))
}

fn constexp(spec: &SpecArgs, _: &TrialScheme) -> Result<Arc<dyn IntertimeModel>> {
    spec.expect_keys(&["lambda", "mu"])?;
    Ok(Arc::new(ConstantRateExponential::new(spec.get("lambda")?, spec.get("mu")?)?))
}

pub struct Registry {
    intertimes: BTreeMap<&'static str, IntertimeCtor>,
    laws: BTreeMap<&'static str, Arc<dyn LawEvaluator>>,
    mean_velocity: BTreeMap<&'static str, Arc<dyn MeanVelocityMethod>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            intertimes: BTreeMap::new(),
            laws: BTreeMap::new(),
            mean_velocity: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_intertimes("linexp", linexp);
        r.register_intertimes("gammaexp", gammaexp);
        r.register_intertimes("exp", constexp);
        r.register_law(Arc::new(ClosedFormLaw));
        r.register_law(Arc::new(SeriesLaw::default()));
        r.register_mean_velocity(Arc::new(GeneralMeanVelocity::default()));
        r.register_mean_velocity(Arc::new(ClosedFormMeanVelocity::default()));
        r
    }

    pub fn register_intertimes(&mut self, name: &'static str, ctor: IntertimeCtor) {
        self.intertimes.insert(name, ctor);
    }

    pub fn register_law(&mut self, law: Arc<dyn LawEvaluator>) {
        self.laws.insert(law.name(), law);
    }

    pub fn register_mean_velocity(&mut self, method: Arc<dyn MeanVelocityMethod>) {
        self.mean_velocity.insert(method.name(), method);
    }

    pub fn intertime_names(&self) -> Vec<&'static str> {
        self.intertimes.keys().copied().collect()
    }

    pub fn law_names(&self) -> Vec<&'static str> {
        self.laws.keys().copied().collect()
    }

    pub fn mean_velocity_names(&self) -> Vec<&'static str> {
        self.mean_velocity.keys().copied().collect()
    }

    pub fn intertimes(&self, text: &str, scheme: &TrialScheme) -> Result<Arc<dyn IntertimeModel>> {
        let spec = SpecArgs::parse(text)?;
        let ctor = self.intertimes.get(spec.name.as_str()).ok_or_else(|| {
            Error::Parse(format!(
                "unknown intertime family '{}' (known: {})",
                spec.name,
                self.intertime_names().join(", ")
            ))
        })?;
        ctor(&spec, scheme)
    }

    pub fn law(&self, name: &str) -> Result<Arc<dyn LawEvaluator>> {
        self.laws.get(name).cloned().ok_or_else(|| {
            Error::Parse(format!(
                "unknown law evaluator '{name}' (known: {})",
                self.law_names().join(", ")
            ))
        })
    }

    pub fn mean_velocity(&self, name: &str) -> Result<Arc<dyn MeanVelocityMethod>> {
        self.mean_velocity.get(name).cloned().ok_or_else(|| {
            Error::Parse(format!(
                "unknown mean-velocity method '{name}' (known: {})",
                self.mean_velocity_names().join(", ")
            ))
        })
    }

    pub fn model(&self, scheme: &str, intertimes: &str, c: f64, v: f64) -> Result<Model> {
        let scheme = parse_scheme(scheme)?;
        let intertimes = self.intertimes(intertimes, &scheme)?;
        Ok(Model::new(scheme, intertimes, MotionParams::new(c, v)?))
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}
