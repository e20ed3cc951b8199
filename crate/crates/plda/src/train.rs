//! Maximum-likelihood EM for the two-covariance model.
//!
//! The global mean is fixed at the data mean; EM alternates between the
//! posterior over each class mean (E-step) and closed-form updates of the
//! between/within covariances (M-step). Classes sharing a sample count share
//! one posterior covariance, so the per-iteration cost is O(K p^2) plus one
//! p^3 solve per distinct count. Every iteration the pair is canonicalized
//! and the total marginal log likelihood recorded; the trace is monotone
//! non-decreasing up to the eigenvalue floors.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::PldaModel;
use crate::stats::{accumulate_stats, MomentStats};
use crate::{EPSILON_FLOOR, WITHIN_EIGEN_FLOOR};

const LN_2PI: f64 = 1.8378770664093453;

/// Eigenvalue floor for the between-class covariance while it is an EM
/// workspace. Only invertibility matters here; it sits far below
/// `EPSILON_FLOOR` so that degenerate dimensions clamp exactly at the real
/// floor during canonicalization instead of hovering near it.
const BETWEEN_WORKSPACE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub max_iters: usize,
    /// Convergence threshold on the per-class mean log-likelihood
    /// improvement between iterations.
    pub tol: f64,
    pub epsilon_floor: f64,
    pub within_floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iters: 200,
            tol: 1e-7,
            epsilon_floor: EPSILON_FLOOR,
            within_floor: WITHIN_EIGEN_FLOOR,
        }
    }
}

/// Outcome of an EM fit. `loglik[t]` is the total marginal log likelihood of
/// the model after `t` updates (`loglik[0]` is the moment-initialized model).
#[derive(Debug)]
pub struct Training {
    pub model: PldaModel,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: Vec<f64>,
}

pub fn train_ml(data: &LabeledDataset, cfg: &TrainConfig) -> Result<Training> {
    let p = data.dim();
    let n_total = data.total_samples();
    if n_total < p {
        return Err(Error::InsufficientSamples { needed: p, got: n_total });
    }
    let stats = accumulate_stats(data);
    let cache = EmCache::new(data, &stats);

    // Moment initialization. Flooring keeps both matrices invertible even on
    // degenerate data (e.g. all class means equal); on healthy data it is a
    // no-op.
    let mut within = linalg::floor_eigenvalues(&stats.within_scatter, cfg.within_floor);
    let mut between = linalg::floor_eigenvalues(&stats.between_scatter, BETWEEN_WORKSPACE_FLOOR);
    if largest_eigenvalue(&stats.within_scatter) <= cfg.within_floor {
        return Err(Error::SingularWithin {
            max_eigen: largest_eigenvalue(&stats.within_scatter),
            floor: cfg.within_floor,
        });
    }

    let k = data.num_classes() as f64;
    let mut canon = linalg::canonicalize(&within, &between, cfg.within_floor, cfg.epsilon_floor)?;
    let mut trace = vec![cache.total_loglik(&canon)];
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iters {
        let (b_new, w_new) = em_step(&between, &within, &cache)?;
        between = linalg::floor_eigenvalues(&b_new, BETWEEN_WORKSPACE_FLOOR);
        within = linalg::floor_eigenvalues(&w_new, cfg.within_floor);
        canon = linalg::canonicalize(&within, &between, cfg.within_floor, cfg.epsilon_floor)?;
        let ll = cache.total_loglik(&canon);
        let prev = *trace.last().unwrap();
        trace.push(ll);
        iterations = it;
        if !ll.is_finite() {
            return Err(Error::InvalidArgument("EM log likelihood diverged".into()));
        }
        if (ll - prev) / k < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "EM did not converge in {} iterations (last improvement {:.3e} per class)",
            cfg.max_iters,
            (trace[trace.len() - 1] - trace[trace.len() - 2]) / k
        );
    }

    let model = PldaModel::new(
        stats.global_mean.clone(),
        canon.transform.clone(),
        canon.epsilon.clone(),
        data.class_counts(),
    )?;
    Ok(Training { model, converged, iterations, loglik: trace })
}

/// Per-class sufficient statistics, computed once.
struct EmCache {
    /// Centered per-class sums `s_k = sum_i (x_ki - mu0)`.
    sums: Vec<DVector<f64>>,
    counts: Vec<usize>,
    /// Global second moment about the mean, `sum (x - mu0)(x - mu0)'`.
    second_moment: DMatrix<f64>,
    n_total: f64,
}

impl EmCache {
    fn new(data: &LabeledDataset, stats: &MomentStats) -> Self {
        let p = data.dim();
        let mu0 = &stats.global_mean;
        let mut sums = Vec::with_capacity(data.num_classes());
        let mut counts = Vec::with_capacity(data.num_classes());
        let mut second = DMatrix::zeros(p, p);
        for class in data.classes() {
            let mut s = DVector::zeros(p);
            for v in &class.vectors {
                let c = v - mu0;
                second.ger(1.0, &c, &c, 1.0);
                s += c;
            }
            sums.push(s);
            counts.push(class.vectors.len());
        }
        linalg::symmetrize(&mut second);
        EmCache { sums, counts, second_moment: second, n_total: data.total_samples() as f64 }
    }

    /// Total marginal log likelihood of the canonicalized model over all
    /// training classes, from cached moments:
    /// `sum_k log p(class k) - N ln|det M|`.
    fn total_loglik(&self, canon: &linalg::Canonical) -> f64 {
        let a = &canon.inverse;
        let eps = &canon.epsilon;
        let p = eps.len() as f64;
        let asa = a * &self.second_moment * a.transpose();
        let mut ll = -0.5 * self.n_total * (p * LN_2PI + 2.0 * canon.log_abs_det) - 0.5 * asa.trace();
        for (s_k, &n_k) in self.sums.iter().zip(&self.counts) {
            let n = n_k as f64;
            let v = a * s_k; // = n_k * latent class mean
            for (j, &e) in eps.iter().enumerate() {
                let denom = 1.0 + n * e;
                ll += 0.5 * e * v[j] * v[j] / denom - 0.5 * denom.ln();
            }
        }
        ll
    }
}

fn em_step(
    between: &DMatrix<f64>,
    within: &DMatrix<f64>,
    cache: &EmCache,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let p = between.nrows();
    let k = cache.sums.len() as f64;

    let b_inv = spd_inverse(between, "between-class covariance")?;
    let w_inv = spd_inverse(within, "within-class covariance")?;

    // Posterior covariance per distinct class size.
    let mut posterior: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
    for &n in &cache.counts {
        posterior.entry(n).or_insert_with(|| {
            let lambda = &b_inv + w_inv.scale(n as f64);
            spd_inverse(&lambda, "posterior precision").expect("posterior precision is SPD by construction")
        });
    }

    let mut b_acc = DMatrix::zeros(p, p);
    let mut w_acc = cache.second_moment.clone();
    for (s_k, &n_k) in cache.sums.iter().zip(&cache.counts) {
        let phi = &posterior[&n_k];
        let m_k = phi * (&w_inv * s_k);
        b_acc += phi;
        b_acc.ger(1.0, &m_k, &m_k, 1.0);
        // within: S - sum (m s' + s m') + sum n (m m' + phi)
        w_acc.ger(-1.0, &m_k, s_k, 1.0);
        w_acc.ger(-1.0, s_k, &m_k, 1.0);
        w_acc.ger(n_k as f64, &m_k, &m_k, 1.0);
        w_acc += phi.scale(n_k as f64);
    }
    let mut b_new = b_acc.scale(1.0 / k);
    let mut w_new = w_acc.scale(1.0 / cache.n_total);
    linalg::symmetrize(&mut b_new);
    linalg::symmetrize(&mut w_new);
    Ok((b_new, w_new))
}

fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Cholesky::new(m.clone())
        .map(|c| c.inverse())
        .ok_or_else(|| Error::InvalidArgument(format!("{what} is not positive definite")))
}

fn largest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let (values, _) = linalg::sym_eigen_desc(m);
    values[0]
}
