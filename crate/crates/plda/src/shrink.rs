//! Between-class variance estimation beyond plain EM: the virtual-sample
//! view and MAP shrinkage under a diagonal Inverse-Wishart prior.
//!
//! In the canonical frame, each latent class mean is one draw from
//! `N(0, diag(epsilon))` smeared by within-class noise, so at the ML optimum
//! (balanced case) the between-class variance is the scatter of those
//! "virtual samples" minus a `1/n` noise correction. With only K classes the
//! scatter is noisy, and shrinking it toward a prior guess `epsilon0` with
//! weight `alpha` pseudo-classes gives
//!
//! ```text
//! eps_map_j = (alpha * eps0_j + K * eps_j) / (alpha + K)
//! ```
//!
//! which is exactly the MAP point of the Inverse-Wishart posterior with
//! `phi = alpha * eps0` and `nu = alpha - p - 1`.

use std::fmt;
use std::path::Path;

use nalgebra::DVector;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::PldaModel;
use crate::textio;
use crate::EPSILON_FLOOR;

/// How an epsilon estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    MlEm,
    VirtualSample,
    Map,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::MlEm => "ML_EM",
            Provenance::VirtualSample => "VIRTUAL_SAMPLE",
            Provenance::Map => "MAP",
        })
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ML_EM" => Ok(Provenance::MlEm),
            "VIRTUAL_SAMPLE" => Ok(Provenance::VirtualSample),
            "MAP" => Ok(Provenance::Map),
            other => Err(format!("unknown provenance '{other}'")),
        }
    }
}

/// A per-dimension between-class variance estimate together with where it
/// came from. MAP estimates also record the prior they were shrunk toward.
#[derive(Debug, Clone)]
pub struct EpsilonEstimate {
    epsilon: DVector<f64>,
    provenance: Provenance,
    classes: usize,
    alpha: Option<f64>,
    epsilon0: Option<DVector<f64>>,
}

impl EpsilonEstimate {
    fn validated(self) -> Result<Self> {
        for (i, &e) in self.epsilon.iter().enumerate() {
            if e < 0.0 || !e.is_finite() {
                return Err(Error::NonPositiveEpsilon { index: i, value: e });
            }
        }
        Ok(self)
    }

    /// The ML estimate carried by a trained model.
    pub fn from_model(model: &PldaModel) -> Self {
        EpsilonEstimate {
            epsilon: model.epsilon().clone(),
            provenance: Provenance::MlEm,
            classes: model.num_classes(),
            alpha: None,
            epsilon0: None,
        }
    }

    pub fn epsilon(&self) -> &DVector<f64> {
        &self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.epsilon.len()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Number of classes the estimate was computed from.
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn epsilon0(&self) -> Option<&DVector<f64>> {
        self.epsilon0.as_ref()
    }

    /// Epsilon file: a header line
    /// `<provenance> <K> <alpha|-> <eps0: scalar|per-dim|->`, then one
    /// epsilon per line (a second column carries a non-uniform prior).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&self.provenance.to_string());
        out.push(' ');
        out.push_str(&self.classes.to_string());
        out.push(' ');
        match self.alpha {
            Some(a) => out.push_str(&textio::fmt_full(a)),
            None => out.push('-'),
        }
        out.push(' ');
        let per_dim_prior = match &self.epsilon0 {
            None => {
                out.push('-');
                false
            }
            Some(e0) if uniform(e0) => {
                out.push_str(&textio::fmt_full(e0[0]));
                false
            }
            Some(_) => {
                out.push_str("per-dim");
                true
            }
        };
        out.push('\n');
        for (j, &e) in self.epsilon.iter().enumerate() {
            out.push_str(&textio::fmt_full(e));
            if per_dim_prior {
                out.push(' ');
                out.push_str(&textio::fmt_full(self.epsilon0.as_ref().unwrap()[j]));
            }
            out.push('\n');
        }
        textio::write_file(path, &out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let lines = textio::read_data_lines(path)?;
        let Some((lineno, header)) = lines.first() else {
            return Err(Error::parse(path, 1, "empty epsilon file"));
        };
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::parse(path, *lineno, "header must be '<provenance> <classes> <alpha> <eps0>'"));
        }
        let provenance: Provenance = toks[0]
            .parse()
            .map_err(|e: String| Error::parse(path, *lineno, e))?;
        let classes = textio::parse_usize(path, *lineno, toks[1])?;
        let alpha = match toks[2] {
            "-" => None,
            t => Some(textio::parse_f64(path, *lineno, t)?),
        };
        enum PriorSpec {
            None,
            Uniform(f64),
            PerDim,
        }
        let prior = match toks[3] {
            "-" => PriorSpec::None,
            "per-dim" => PriorSpec::PerDim,
            t => PriorSpec::Uniform(textio::parse_f64(path, *lineno, t)?),
        };
        let mut eps = Vec::new();
        let mut eps0 = Vec::new();
        for (lineno, line) in &lines[1..] {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let expected = if matches!(prior, PriorSpec::PerDim) { 2 } else { 1 };
            if toks.len() != expected {
                return Err(Error::parse(path, *lineno, format!("expected {expected} column(s)")));
            }
            eps.push(textio::parse_f64(path, *lineno, toks[0])?);
            if expected == 2 {
                eps0.push(textio::parse_f64(path, *lineno, toks[1])?);
            }
        }
        if eps.is_empty() {
            return Err(Error::parse(path, *lineno, "no epsilon entries"));
        }
        let epsilon0 = match prior {
            PriorSpec::None => None,
            PriorSpec::Uniform(v) => Some(DVector::from_element(eps.len(), v)),
            PriorSpec::PerDim => Some(DVector::from_vec(eps0)),
        };
        EpsilonEstimate {
            epsilon: DVector::from_vec(eps),
            provenance,
            classes,
            alpha,
            epsilon0,
        }
        .validated()
    }
}

fn uniform(v: &DVector<f64>) -> bool {
    v.iter().all(|&x| x.to_bits() == v[0].to_bits())
}

/// Diagonal Inverse-Wishart prior over `diag(epsilon)`: scale `phi` (per
/// dimension) and `nu` degrees of freedom. The boundary `phi = 0`,
/// `nu = -(p + 1)` is the flat prior recovered at `alpha = 0`.
#[derive(Debug, Clone)]
pub struct WishartPrior {
    phi: DVector<f64>,
    nu: f64,
}

impl WishartPrior {
    pub fn new(phi: DVector<f64>, nu: f64) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::InvalidPrior("empty scale vector".into()));
        }
        for (i, &v) in phi.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidPrior(format!("phi[{i}] = {v} must be >= 0")));
            }
        }
        if !nu.is_finite() {
            return Err(Error::InvalidPrior(format!("nu = {nu} must be finite")));
        }
        let p = phi.len() as f64;
        if nu + p + 1.0 < 0.0 {
            return Err(Error::InvalidPrior(format!(
                "nu + p + 1 = {} must be non-negative",
                nu + p + 1.0
            )));
        }
        Ok(WishartPrior { phi, nu })
    }

    /// The prior equivalent to blending `alpha` pseudo-classes at `eps0`:
    /// `phi = alpha * eps0`, `nu = alpha - p - 1`.
    pub fn from_interpolation(alpha: f64, eps0: &DVector<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        check_eps0(eps0)?;
        let p = eps0.len() as f64;
        WishartPrior::new(eps0.map(|e| alpha * e), alpha - p - 1.0)
    }

    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &DVector<f64> {
        &self.phi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Mode of the prior density, `phi_j / (nu + p + 1)`; undefined on the
    /// flat boundary.
    pub fn mode(&self) -> Option<DVector<f64>> {
        let denom = self.nu + self.phi.len() as f64 + 1.0;
        (denom > 0.0).then(|| self.phi.map(|f| f / denom))
    }
}

/// Unnormalized log density of the diagonal Inverse-Wishart at `epsilon`:
/// `-(nu + p + 1)/2 * sum_j ln eps_j - 1/2 * sum_j phi_j / eps_j`.
pub fn inverse_wishart_logpdf_unnorm(prior: &WishartPrior, epsilon: &DVector<f64>) -> Result<f64> {
    if epsilon.len() != prior.dim() {
        return Err(Error::DimensionMismatch { expected: prior.dim(), got: epsilon.len() });
    }
    for (i, &e) in epsilon.iter().enumerate() {
        if !(e > 0.0) {
            return Err(Error::NonPositiveEpsilon { index: i, value: e });
        }
    }
    let p = prior.dim() as f64;
    let a = 0.5 * (prior.nu + p + 1.0);
    let mut ll = 0.0;
    for (j, &e) in epsilon.iter().enumerate() {
        ll -= a * e.ln() + 0.5 * prior.phi[j] / e;
    }
    Ok(ll)
}

/// Between-class variance from the scatter of latent class means ("virtual
/// samples"), with the within-class noise correction `mean_k 1/n_k` removed
/// and the result floored. Balanced data uses `1/n` exactly.
pub fn virtual_sample_epsilon(model: &PldaModel, data: &LabeledDataset) -> Result<EpsilonEstimate> {
    if data.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: data.dim() });
    }
    let k = data.num_classes();
    if data.min_class_size() < 5 {
        log::warn!(
            "virtual-sample estimate with min class size {} (< 5); the noise correction is rough",
            data.min_class_size()
        );
    }
    let p = model.dim();
    let mut scatter = DVector::<f64>::zeros(p);
    let mut correction = 0.0;
    let balanced = data
        .classes()
        .iter()
        .all(|c| c.vectors.len() == data.classes()[0].vectors.len());
    for class in data.classes() {
        let n = class.vectors.len();
        let mut mean = DVector::zeros(p);
        for v in &class.vectors {
            mean += v;
        }
        mean /= n as f64;
        let zm = model.to_latent(&mean)?;
        for j in 0..p {
            scatter[j] += zm[j] * zm[j];
        }
        correction += 1.0 / n as f64;
    }
    let correction = if balanced {
        1.0 / data.classes()[0].vectors.len() as f64
    } else {
        correction / k as f64
    };
    let epsilon = scatter.map(|s| (s / k as f64 - correction).max(EPSILON_FLOOR));
    EpsilonEstimate {
        epsilon,
        provenance: Provenance::VirtualSample,
        classes: k,
        alpha: None,
        epsilon0: None,
    }
    .validated()
}

/// MAP shrinkage of an epsilon estimate toward `eps0` with prior weight
/// `alpha` (in classes): `(alpha * eps0_j + K * eps_j) / (alpha + K)`.
/// `alpha = 0` returns the input estimate unchanged.
pub fn map_epsilon(estimate: &EpsilonEstimate, alpha: f64, eps0: &DVector<f64>) -> Result<EpsilonEstimate> {
    check_alpha(alpha)?;
    check_eps0(eps0)?;
    if eps0.len() != estimate.dim() {
        return Err(Error::DimensionMismatch { expected: estimate.dim(), got: eps0.len() });
    }
    let k = estimate.classes();
    if alpha + k as f64 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "alpha + K must be positive (alpha = {alpha}, K = {k})"
        )));
    }
    let epsilon = if alpha == 0.0 {
        estimate.epsilon.clone()
    } else {
        let kf = k as f64;
        let denom = alpha + kf;
        DVector::from_fn(estimate.dim(), |j, _| {
            (alpha * eps0[j] + kf * estimate.epsilon[j]) / denom
        })
    };
    EpsilonEstimate {
        epsilon,
        provenance: Provenance::Map,
        classes: k,
        alpha: Some(alpha),
        epsilon0: Some(eps0.clone()),
    }
    .validated()
}

/// MAP estimate straight from an Inverse-Wishart prior:
/// `(phi_j + K * eps_j) / (nu + K + p + 1)`. With `phi = alpha * eps0` and
/// `nu = alpha - p - 1` this reproduces [`map_epsilon`] bit for bit.
pub fn map_epsilon_wishart(estimate: &EpsilonEstimate, prior: &WishartPrior) -> Result<EpsilonEstimate> {
    if prior.dim() != estimate.dim() {
        return Err(Error::DimensionMismatch { expected: estimate.dim(), got: prior.dim() });
    }
    let k = estimate.classes();
    let kf = k as f64;
    let p = prior.dim() as f64;
    let weight = prior.nu + p + 1.0; // the implied alpha
    let denom = prior.nu + kf + p + 1.0;
    if denom <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "nu + K + p + 1 must be positive (got {denom})"
        )));
    }
    let flat = weight == 0.0 && prior.phi.iter().all(|&v| v == 0.0);
    let epsilon = if flat {
        estimate.epsilon.clone()
    } else {
        DVector::from_fn(estimate.dim(), |j, _| {
            (prior.phi[j] + kf * estimate.epsilon[j]) / denom
        })
    };
    let epsilon0 = (weight > 0.0).then(|| prior.phi.map(|f| f / weight));
    EpsilonEstimate {
        epsilon,
        provenance: Provenance::Map,
        classes: k,
        alpha: Some(weight),
        epsilon0,
    }
    .validated()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be a non-negative real")));
    }
    Ok(())
}

fn check_eps0(eps0: &DVector<f64>) -> Result<()> {
    for (i, &e) in eps0.iter().enumerate() {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::NonPositiveEpsilon { index: i, value: e });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn estimate(eps: &[f64], classes: usize) -> EpsilonEstimate {
        EpsilonEstimate {
            epsilon: DVector::from_vec(eps.to_vec()),
            provenance: Provenance::MlEm,
            classes,
            alpha: None,
            epsilon0: None,
        }
    }

    #[test]
    fn logpdf_hand_value() {
        // p = 1, phi = 2, nu = 0, eps = 1: -(0+1+1)/2 * ln 1 - 2/(2*1) = -1.
        let prior = WishartPrior::new(DVector::from_vec(vec![2.0]), 0.0).unwrap();
        let ll = inverse_wishart_logpdf_unnorm(&prior, &DVector::from_vec(vec![1.0])).unwrap();
        assert_eq!(ll, -1.0);
    }

    #[test]
    fn logpdf_mode_matches_grid_search() {
        let prior = WishartPrior::new(DVector::from_vec(vec![3.0]), 2.0).unwrap();
        let mode = prior.mode().unwrap()[0];
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut e = 0.01;
        while e < 5.0 {
            let ll = inverse_wishart_logpdf_unnorm(&prior, &DVector::from_vec(vec![e])).unwrap();
            if ll > best.0 {
                best = (ll, e);
            }
            e += 0.0005;
        }
        assert!((best.1 - mode).abs() < 1e-3, "grid {} vs mode {mode}", best.1);
    }

    #[test]
    fn logpdf_scaling_delta() {
        // f(c * eps) - f(eps) = -(nu+p+1)/2 * p * ln c - 1/2 sum phi_j (1/(c e_j) - 1/e_j)
        let prior = WishartPrior::new(DVector::from_vec(vec![1.5, 0.5, 2.0]), 1.0).unwrap();
        let eps = DVector::from_vec(vec![0.8, 1.7, 0.3]);
        let c = 1.9;
        let f0 = inverse_wishart_logpdf_unnorm(&prior, &eps).unwrap();
        let f1 = inverse_wishart_logpdf_unnorm(&prior, &eps.scale(c)).unwrap();
        let p = 3.0;
        let expected = -0.5 * (prior.nu() + p + 1.0) * p * c.ln()
            - 0.5 * (0..3).map(|j| prior.phi()[j] * (1.0 / (c * eps[j]) - 1.0 / eps[j])).sum::<f64>();
        assert!((f1 - f0 - expected).abs() < 1e-12);
    }

    #[test]
    fn map_alpha_zero_is_identity() {
        let est = estimate(&[0.3, 4.0, 1e-6], 17);
        let eps0 = DVector::from_element(3, 1.0);
        let out = map_epsilon(&est, 0.0, &eps0).unwrap();
        assert_eq!(out.epsilon(), est.epsilon());
        assert_eq!(out.provenance(), Provenance::Map);
        assert_eq!(out.alpha(), Some(0.0));
    }

    #[test]
    fn map_alpha_infinite_limit() {
        // alpha >> K pulls the estimate onto the prior.
        let est = estimate(&[2.0, 0.5], 6300);
        let eps0 = DVector::from_element(2, 1.0);
        let out = map_epsilon(&est, 1e9, &eps0).unwrap();
        for &e in out.epsilon().iter() {
            assert!((e - 1.0).abs() < 1e-5, "{e}");
        }
    }

    #[test]
    fn map_midpoint_at_alpha_equals_k() {
        let est = estimate(&[2.0], 10);
        let eps0 = DVector::from_element(1, 1.0);
        let out = map_epsilon(&est, 10.0, &eps0).unwrap();
        assert_eq!(out.epsilon()[0], 1.5);
    }

    #[test]
    fn map_betweenness_and_monotonicity() {
        let est = estimate(&[3.0, 0.2, 1.0], 40);
        let eps0 = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let mut last_dist: Option<Vec<f64>> = None;
        for &alpha in &[0.0, 2.5, 40.0, 333.0, 1e4] {
            let out = map_epsilon(&est, alpha, &eps0).unwrap();
            for j in 0..3 {
                let lo = est.epsilon()[j].min(eps0[j]) - 1e-12;
                let hi = est.epsilon()[j].max(eps0[j]) + 1e-12;
                assert!(out.epsilon()[j] >= lo && out.epsilon()[j] <= hi);
            }
            let dist: Vec<f64> = (0..3).map(|j| (out.epsilon()[j] - eps0[j]).abs()).collect();
            if let Some(prev) = &last_dist {
                for j in 0..3 {
                    assert!(dist[j] <= prev[j] + 1e-12, "alpha {alpha} dim {j}");
                }
            }
            last_dist = Some(dist);
        }
    }

    #[test]
    fn wishart_route_matches_interpolation_bitwise() {
        let est = estimate(&[0.37, 2.25, 1e-3, 5.5, 0.9], 120);
        let eps0 = DVector::from_vec(vec![1.0, 0.5, 2.0, 1.25, 0.75]);
        let alpha = 100.0;
        let a = map_epsilon(&est, alpha, &eps0).unwrap();
        let prior = WishartPrior::from_interpolation(alpha, &eps0).unwrap();
        let b = map_epsilon_wishart(&est, &prior).unwrap();
        for j in 0..5 {
            assert_eq!(a.epsilon()[j].to_bits(), b.epsilon()[j].to_bits(), "dim {j}");
        }
    }

    #[test]
    fn wishart_flat_prior_returns_ml() {
        let est = estimate(&[0.1, 7.0], 9);
        let prior = WishartPrior::new(DVector::zeros(2), -3.0).unwrap();
        let out = map_epsilon_wishart(&est, &prior).unwrap();
        assert_eq!(out.epsilon(), est.epsilon());
    }

    #[test]
    fn wishart_hand_value() {
        // p = 1, K = 1, eps = 3, phi = 1, nu = 1: (1 + 3) / (1 + 1 + 1 + 1) = 1.
        let est = estimate(&[3.0], 1);
        let prior = WishartPrior::new(DVector::from_vec(vec![1.0]), 1.0).unwrap();
        let out = map_epsilon_wishart(&est, &prior).unwrap();
        assert_eq!(out.epsilon()[0], 1.0);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let est = estimate(&[1.0], 5);
        let eps0 = DVector::from_element(1, 1.0);
        assert!(map_epsilon(&est, -1.0, &eps0).is_err());
        assert!(map_epsilon(&est, f64::NAN, &eps0).is_err());
        assert!(map_epsilon(&est, 1.0, &DVector::from_element(1, 0.0)).is_err());
        assert!(WishartPrior::new(DVector::from_vec(vec![-1.0]), 0.0).is_err());
        assert!(WishartPrior::new(DVector::from_vec(vec![1.0]), -3.5).is_err());
        let denom_err = map_epsilon_wishart(
            &estimate(&[1.0], 0),
            &WishartPrior::new(DVector::from_vec(vec![0.0]), -2.0).unwrap(),
        );
        assert!(denom_err.is_err());
    }

    #[test]
    fn virtual_sample_balanced_hand_case() {
        // Latent class means +-1 with no within noise in the means: the
        // scatter is 1, the correction 1/n with huge n is negligible.
        let n = 200_000;
        let model = PldaModel::new(
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![1.0]),
            vec![n, n],
        )
        .unwrap();
        let mut entries = Vec::new();
        for (label, center) in [("a", 1.0), ("b", -1.0)] {
            for i in 0..n {
                // Alternate +-d around the center so the class mean is exact.
                let d = if i % 2 == 0 { 0.5 } else { -0.5 };
                entries.push((label.to_string(), DVector::from_vec(vec![center + d])));
            }
        }
        let data = LabeledDataset::from_entries(entries).unwrap();
        let est = virtual_sample_epsilon(&model, &data).unwrap();
        assert!((est.epsilon()[0] - 1.0).abs() < 1e-3, "{}", est.epsilon()[0]);
        assert_eq!(est.provenance(), Provenance::VirtualSample);
        assert_eq!(est.classes(), 2);
    }

    #[test]
    fn virtual_sample_zero_means_floor() {
        let model = PldaModel::new(
            DVector::zeros(2),
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 1.0]),
            vec![10, 10],
        )
        .unwrap();
        let mut entries = Vec::new();
        for label in ["a", "b", "c"] {
            for i in 0..10 {
                let v = if i % 2 == 0 { 1.0 } else { -1.0 };
                entries.push((label.to_string(), DVector::from_vec(vec![v, -v])));
            }
        }
        let data = LabeledDataset::from_entries(entries).unwrap();
        let est = virtual_sample_epsilon(&model, &data).unwrap();
        for &e in est.epsilon().iter() {
            assert_eq!(e, EPSILON_FLOOR);
        }
    }

    #[test]
    fn epsilon_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for (name, est) in [
            ("ml.eps", estimate(&[0.25, 1.0 / 3.0], 12)),
            ("map.eps", {
                let base = estimate(&[0.25, 7.5], 12);
                map_epsilon(&base, 100.0, &DVector::from_element(2, 1.0)).unwrap()
            }),
            ("map2.eps", {
                let base = estimate(&[0.25, 7.5], 12);
                map_epsilon(&base, 3.5, &DVector::from_vec(vec![1.0, 2.0])).unwrap()
            }),
        ] {
            let path = dir.path().join(name);
            est.save(&path).unwrap();
            let back = EpsilonEstimate::load(&path).unwrap();
            assert_eq!(back.epsilon(), est.epsilon(), "{name}");
            assert_eq!(back.provenance(), est.provenance(), "{name}");
            assert_eq!(back.classes(), est.classes(), "{name}");
            assert_eq!(back.alpha(), est.alpha(), "{name}");
            assert_eq!(back.epsilon0(), est.epsilon0(), "{name}");
        }
    }
}
