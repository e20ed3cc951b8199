//! Name-keyed registries for the pluggable pieces: unit-variance samplers,
//! epsilon estimators and latent-frame normalizers. The CLI and the pipeline
//! resolve user-facing names ("gaussian", "virtual", "ln-map", ...) through
//! these instead of hard-coding match arms at every call site.

use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::lnorm::{normalize_latent, LnConfig};
use crate::model::PldaModel;
use crate::shrink::{map_epsilon, virtual_sample_epsilon, EpsilonEstimate};

/// A minimal name -> implementation table. Registration order is the
/// presentation order in help output and error messages.
pub struct Registry<T: ?Sized> {
    what: &'static str,
    entries: Vec<(&'static str, Arc<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(what: &'static str) -> Self {
        Registry { what, entries: Vec::new() }
    }

    pub fn register(&mut self, name: &'static str, imp: Arc<T>) {
        debug_assert!(self.entries.iter().all(|(n, _)| *n != name), "duplicate strategy name");
        self.entries.push((name, imp));
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, imp)| Arc::clone(imp))
            .ok_or_else(|| Error::UnknownName {
                what: self.what,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }
}

/// Draws scalar samples with zero mean and unit variance.
pub trait Sampler: Send + Sync {
    fn name(&self) -> &'static str;
    fn draw(&self, rng: &mut dyn RngCore) -> f64;
}

pub struct GaussianSampler;

impl Sampler for GaussianSampler {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        rng.sample(StandardNormal)
    }
}

/// Laplace with scale `1/sqrt(2)` so the variance is 1: exponential magnitude
/// and a random sign.
pub struct LaplacianSampler;

impl Sampler for LaplacianSampler {
    fn name(&self) -> &'static str {
        "laplacian"
    }

    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.gen();
        let magnitude = -(1.0 - u).ln() * std::f64::consts::FRAC_1_SQRT_2;
        if rng.gen::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

/// Student-t scaled to unit variance; requires `nu > 2`.
pub struct StudentSampler {
    dist: StudentT<f64>,
    scale: f64,
}

impl StudentSampler {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 2.0) {
            return Err(Error::InvalidArgument(format!("student nu = {nu} must exceed 2 for finite variance")));
        }
        let dist = StudentT::new(nu)
            .map_err(|e| Error::InvalidArgument(format!("student t: {e}")))?;
        Ok(StudentSampler { dist, scale: ((nu - 2.0) / nu).sqrt() })
    }
}

impl Sampler for StudentSampler {
    fn name(&self) -> &'static str {
        "student"
    }

    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        self.dist.sample(rng) * self.scale
    }
}

/// The built-in samplers: "gaussian", "laplacian" and "student" (nu = 3, the
/// heavy-tailed default used by the synthetic generator).
pub fn samplers() -> Registry<dyn Sampler> {
    let mut reg: Registry<dyn Sampler> = Registry::new("sampler");
    reg.register("gaussian", Arc::new(GaussianSampler));
    reg.register("laplacian", Arc::new(LaplacianSampler));
    reg.register("student", Arc::new(StudentSampler::new(3.0).expect("nu = 3 is valid")));
    reg
}

/// Produces an epsilon estimate from a trained model and (optionally) the
/// training data.
pub trait EpsilonEstimator: Send + Sync {
    fn name(&self) -> &str;
    fn estimate(&self, model: &PldaModel, data: Option<&LabeledDataset>) -> Result<EpsilonEstimate>;
}

/// The model's own EM epsilon.
pub struct MlEstimator;

impl EpsilonEstimator for MlEstimator {
    fn name(&self) -> &str {
        "ml"
    }

    fn estimate(&self, model: &PldaModel, _data: Option<&LabeledDataset>) -> Result<EpsilonEstimate> {
        Ok(EpsilonEstimate::from_model(model))
    }
}

/// Scatter of latent class means minus the noise correction; needs data.
pub struct VirtualSampleEstimator;

impl EpsilonEstimator for VirtualSampleEstimator {
    fn name(&self) -> &str {
        "virtual"
    }

    fn estimate(&self, model: &PldaModel, data: Option<&LabeledDataset>) -> Result<EpsilonEstimate> {
        let data = data.ok_or_else(|| {
            Error::InvalidArgument("the virtual-sample estimator needs training data".into())
        })?;
        virtual_sample_epsilon(model, data)
    }
}

/// Wraps a base estimator with MAP shrinkage toward `eps0`.
pub struct MapEstimator {
    base: Arc<dyn EpsilonEstimator>,
    alpha: f64,
    eps0: DVector<f64>,
}

impl MapEstimator {
    pub fn new(base: Arc<dyn EpsilonEstimator>, alpha: f64, eps0: DVector<f64>) -> Self {
        MapEstimator { base, alpha, eps0 }
    }
}

impl EpsilonEstimator for MapEstimator {
    fn name(&self) -> &str {
        "map"
    }

    fn estimate(&self, model: &PldaModel, data: Option<&LabeledDataset>) -> Result<EpsilonEstimate> {
        let base = self.base.estimate(model, data)?;
        map_epsilon(&base, self.alpha, &self.eps0)
    }
}

/// The base estimators resolvable by name; MAP wraps one of these with
/// runtime parameters via [`MapEstimator::new`].
pub fn estimators() -> Registry<dyn EpsilonEstimator> {
    let mut reg: Registry<dyn EpsilonEstimator> = Registry::new("epsilon estimator");
    reg.register("ml", Arc::new(MlEstimator));
    reg.register("virtual", Arc::new(VirtualSampleEstimator));
    reg
}

/// Transforms latent vectors before scoring.
pub trait Normalizer: Send + Sync {
    fn name(&self) -> &str;
    fn apply(&self, latent: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Pass-through.
pub struct IdentityNorm;

impl Normalizer for IdentityNorm {
    fn name(&self) -> &str {
        "none"
    }

    fn apply(&self, latent: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(latent.clone())
    }
}

/// Ellipse length normalization with a fixed epsilon (ML or MAP).
pub struct EllipseNorm {
    name: &'static str,
    cfg: LnConfig,
}

impl EllipseNorm {
    pub fn new(name: &'static str, cfg: LnConfig) -> Self {
        EllipseNorm { name, cfg }
    }
}

impl Normalizer for EllipseNorm {
    fn name(&self) -> &str {
        self.name
    }

    fn apply(&self, latent: &DVector<f64>) -> Result<DVector<f64>> {
        normalize_latent(&self.cfg, latent)
    }
}
