//! Monte-Carlo study of how unreliable a sample variance is at small n.
//!
//! For each grid point n we draw `repetitions` batches of n scalar samples,
//! take the ML variance of each batch, and report the variance of those
//! variance estimates. Heavy-tailed samples inflate the curve relative to
//! the Gaussian closed form 2 sigma^4 (n-1)/n^2.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::strategy::{samplers, Sampler};
use crate::textio::{self, fmt_score};

/// One simulation request. `distribution` is looked up in the sampler
/// registry, so anything registered there is accepted.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub distribution: String,
    pub true_variance: f64,
    pub n_grid: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    /// When set, batch variances are taken about the known mean 0 instead of
    /// the batch sample mean.
    pub known_mean: bool,
}

impl SimSpec {
    fn validate(&self) -> Result<()> {
        if !(self.true_variance > 0.0) || !self.true_variance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "true variance must be positive and finite, got {}",
                self.true_variance
            )));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidArgument("empty n grid".into()));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidArgument(format!(
                "grid point n = {n} too small, variance needs n >= 2"
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be >= 1".into()));
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one batch, decorrelated across (distribution, n, repetition).
/// Batches own their RNG stream so the parallel schedule cannot change the
/// result.
fn batch_seed(root: u64, distribution: &str, n: usize, rep: usize) -> u64 {
    let mut h = splitmix(root);
    for &b in distribution.as_bytes() {
        h = splitmix(h ^ u64::from(b));
    }
    h = splitmix(h ^ n as u64);
    splitmix(h ^ rep as u64)
}

/// ML variance (1/n convention) of one freshly drawn batch.
fn batch_variance(sampler: &dyn Sampler, spec: &SimSpec, n: usize, rep: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(batch_seed(spec.seed, &spec.distribution, n, rep));
    let scale = spec.true_variance.sqrt();
    let xs: Vec<f64> = (0..n).map(|_| scale * sampler.draw(&mut rng)).collect();
    let nf = n as f64;
    let mean = if spec.known_mean { 0.0 } else { xs.iter().sum::<f64>() / nf };
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf
}

/// Variance of the ML variance estimator at every grid n.
///
/// The outer variance uses the same 1/R convention as the inner one, so a
/// single repetition yields 0 rather than NaN. Deterministic given the spec:
/// batch results are collected in repetition order before reduction.
pub fn variance_of_variance(spec: &SimSpec) -> Result<Vec<(usize, f64)>> {
    spec.validate()?;
    let sampler = samplers().get(&spec.distribution)?;
    let reps = spec.repetitions;

    let mut rows = Vec::with_capacity(spec.n_grid.len());
    for &n in &spec.n_grid {
        let vars: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|rep| batch_variance(sampler.as_ref(), spec, n, rep))
            .collect();
        let rf = reps as f64;
        let mean = vars.iter().sum::<f64>() / rf;
        let var = vars.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / rf;
        rows.push((n, var));
    }
    Ok(rows)
}

/// Plot-data table, one row per grid n.
pub fn write_sim_table(path: &Path, rows: &[(usize, f64)]) -> Result<()> {
    let mut out = String::from("n\tvar_of_var\n");
    for &(n, v) in rows {
        out.push_str(&format!("{n}\t{}\n", fmt_score(v)));
    }
    textio::write_file(path, &out)
}
