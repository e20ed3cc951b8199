//! The trained two-covariance model and its closed-form marginal likelihood.
//!
//! A model is `x = mu0 + M x'` where the latent `x'` has within-class
//! covariance `I` and between-class covariance `diag(epsilon)`. For a set of
//! same-class samples the class mean integrates out per dimension:
//!
//! ```text
//! log p(x'_1..x'_n) = sum_j -1/2 [ n ln 2pi + ln(1 + n e_j)
//!                                  + sum_i x'_ij^2 - e_j (sum_i x'_ij)^2 / (1 + n e_j) ]
//! ```
//!
//! Densities in the observed frame additionally pick up the Jacobian
//! `-n ln|det M|`; it cancels in likelihood ratios but matters when comparing
//! likelihoods across EM iterations.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::textio;
use crate::{EPSILON_FLOOR, SINGULARITY_FLOOR};

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone)]
pub struct PldaModel {
    mu0: DVector<f64>,
    transform: DMatrix<f64>,
    inverse: DMatrix<f64>,
    log_abs_det: f64,
    epsilon: DVector<f64>,
    class_counts: Vec<usize>,
}

impl PldaModel {
    /// Builds a model from its stored fields, validating shapes, the epsilon
    /// floor and invertibility of the transform. The inverse and log
    /// determinant are derived here and never stored.
    pub fn new(
        mu0: DVector<f64>,
        transform: DMatrix<f64>,
        epsilon: DVector<f64>,
        class_counts: Vec<usize>,
    ) -> Result<Self> {
        let p = mu0.len();
        if transform.nrows() != p || transform.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, got: transform.nrows().max(transform.ncols()) });
        }
        if epsilon.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: epsilon.len() });
        }
        for (i, &e) in epsilon.iter().enumerate() {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::NonPositiveEpsilon { index: i, value: e });
            }
        }
        if class_counts.is_empty() || class_counts.contains(&0) {
            return Err(Error::InvalidArgument("class counts must be non-empty and positive".into()));
        }
        let (log_abs_det, min_sv) = linalg::det_and_condition(&transform);
        if !(min_sv > SINGULARITY_FLOOR) {
            return Err(Error::SingularTransform(min_sv));
        }
        let inverse = transform
            .clone()
            .try_inverse()
            .ok_or(Error::SingularTransform(min_sv))?;
        Ok(PldaModel { mu0, transform, inverse, log_abs_det, epsilon, class_counts })
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    /// Number of training classes behind the ML epsilon estimate.
    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    pub fn epsilon(&self) -> &DVector<f64> {
        &self.epsilon
    }

    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    /// Observed -> latent: `M^{-1}(x - mu0)`.
    pub fn to_latent(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(&self.inverse * (x - &self.mu0))
    }

    /// Latent -> observed: `mu0 + M x'`.
    pub fn from_latent(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        Ok(&self.mu0 + &self.transform * z)
    }

    /// Log marginal density of same-class observed samples, class mean
    /// integrated out. Includes the `-n ln|det M|` Jacobian so values are
    /// comparable across models on the same data.
    pub fn class_marginal_loglik(&self, samples: &[DVector<f64>]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let mut stats = SampleStats::zeros(self.dim());
        for x in samples {
            stats.push(&self.to_latent(x)?);
        }
        Ok(canonical_loglik(&self.epsilon, &stats) - samples.len() as f64 * self.log_abs_det)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let p = self.dim();
        let mut out = String::new();
        out.push_str("plda-model v1\n");
        let _ = writeln!(out, "dim {p}");
        let _ = writeln!(out, "classes {}", self.class_counts.len());
        out.push_str("class_counts");
        for n in &self.class_counts {
            let _ = write!(out, " {n}");
        }
        out.push('\n');
        push_vector(&mut out, "mu0", &self.mu0);
        for i in 0..p {
            push_vector(&mut out, "transform_row", &self.transform.row(i).transpose());
        }
        push_vector(&mut out, "epsilon", &self.epsilon);
        textio::write_file(path, &out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let lines = textio::read_data_lines(path)?;
        let mut it = lines.iter();
        let header = it.next().ok_or_else(|| Error::parse(path, 1, "empty model file"))?;
        if header.1 != "plda-model v1" {
            return Err(Error::parse(path, header.0, "not a plda model file"));
        }
        let mut dim = None;
        let mut classes = None;
        let mut class_counts = None;
        let mut mu0 = None;
        let mut rows: Vec<DVector<f64>> = Vec::new();
        let mut epsilon = None;
        for (lineno, line) in it {
            let mut toks = line.split_whitespace();
            let key = toks.next().unwrap();
            let rest: Vec<&str> = toks.collect();
            match key {
                "dim" => dim = Some(expect_one(path, *lineno, &rest).and_then(|t| textio::parse_usize(path, *lineno, t))?),
                "classes" => classes = Some(expect_one(path, *lineno, &rest).and_then(|t| textio::parse_usize(path, *lineno, t))?),
                "class_counts" => {
                    let mut counts = Vec::with_capacity(rest.len());
                    for t in &rest {
                        counts.push(textio::parse_usize(path, *lineno, t)?);
                    }
                    class_counts = Some(counts);
                }
                "mu0" => mu0 = Some(parse_vector(path, *lineno, &rest)?),
                "transform_row" => rows.push(parse_vector(path, *lineno, &rest)?),
                "epsilon" => epsilon = Some(parse_vector(path, *lineno, &rest)?),
                other => return Err(Error::parse(path, *lineno, format!("unknown model key '{other}'"))),
            }
        }
        let dim = dim.ok_or_else(|| Error::parse(path, 0, "missing 'dim'"))?;
        let classes = classes.ok_or_else(|| Error::parse(path, 0, "missing 'classes'"))?;
        let class_counts = class_counts.ok_or_else(|| Error::parse(path, 0, "missing 'class_counts'"))?;
        let mu0 = mu0.ok_or_else(|| Error::parse(path, 0, "missing 'mu0'"))?;
        let epsilon = epsilon.ok_or_else(|| Error::parse(path, 0, "missing 'epsilon'"))?;
        if class_counts.len() != classes {
            return Err(Error::parse(path, 0, "class_counts length disagrees with 'classes'"));
        }
        if rows.len() != dim {
            return Err(Error::parse(path, 0, format!("expected {dim} transform rows, found {}", rows.len())));
        }
        let mut transform = DMatrix::zeros(dim, dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::parse(path, 0, "transform row has wrong length"));
            }
            transform.row_mut(i).copy_from(&row.transpose());
        }
        for (what, v) in [("mu0", mu0.len()), ("epsilon", epsilon.len())] {
            if v != dim {
                return Err(Error::parse(path, 0, format!("{what} has wrong length")));
            }
        }
        if epsilon.iter().any(|&e| e < EPSILON_FLOOR) {
            return Err(Error::parse(path, 0, format!("epsilon below the floor {EPSILON_FLOOR:e}")));
        }
        PldaModel::new(mu0, transform, epsilon, class_counts)
    }
}

fn push_vector(out: &mut String, key: &str, v: &DVector<f64>) {
    out.push_str(key);
    for x in v.iter() {
        out.push(' ');
        out.push_str(&textio::fmt_full(*x));
    }
    out.push('\n');
}

fn parse_vector(path: &Path, lineno: usize, toks: &[&str]) -> Result<DVector<f64>> {
    let mut vals = Vec::with_capacity(toks.len());
    for t in toks {
        vals.push(textio::parse_f64(path, lineno, t)?);
    }
    Ok(DVector::from_vec(vals))
}

fn expect_one<'a>(path: &Path, lineno: usize, toks: &[&'a str]) -> Result<&'a str> {
    if toks.len() != 1 {
        return Err(Error::parse(path, lineno, "expected a single value"));
    }
    Ok(toks[0])
}

/// Per-dimension first and second moments of a set of latent vectors; all the
/// closed-form likelihood needs, and cheap to merge for joint scoring.
#[derive(Debug, Clone)]
pub(crate) struct SampleStats {
    pub n: usize,
    pub sum: DVector<f64>,
    pub sumsq: DVector<f64>,
}

impl SampleStats {
    pub fn zeros(p: usize) -> Self {
        SampleStats { n: 0, sum: DVector::zeros(p), sumsq: DVector::zeros(p) }
    }

    pub fn push(&mut self, z: &DVector<f64>) {
        self.n += 1;
        for (j, &v) in z.iter().enumerate() {
            self.sum[j] += v;
            self.sumsq[j] += v * v;
        }
    }

    pub fn merged(&self, other: &SampleStats) -> SampleStats {
        SampleStats { n: self.n + other.n, sum: &self.sum + &other.sum, sumsq: &self.sumsq + &other.sumsq }
    }
}

/// Log marginal density of latent same-class samples under between-class
/// variances `epsilon` (no Jacobian term).
pub(crate) fn canonical_loglik(epsilon: &DVector<f64>, stats: &SampleStats) -> f64 {
    let n = stats.n as f64;
    let mut ll = 0.0;
    for (j, &e) in epsilon.iter().enumerate() {
        let denom = 1.0 + n * e;
        ll -= 0.5
            * (n * LN_2PI + denom.ln() + stats.sumsq[j] - e * stats.sum[j] * stats.sum[j] / denom);
    }
    ll
}
