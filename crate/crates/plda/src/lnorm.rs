//! Ellipse length normalization in the latent frame.
//!
//! A latent vector is rescaled onto the surface where the expected total
//! variance is spent: `sum_j (r x'_j)^2 / (eps_j + 1) = p`, so
//! `r = sqrt(p) / sqrt(sum_j x'_j^2 / (eps_j + 1))`. Feeding a MAP epsilon
//! instead of the ML one changes only the ellipse axes; the map is otherwise
//! identical. `epsilon = 0` everywhere degenerates to classic sqrt(p)-radius
//! L2 normalization.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::PldaModel;
use crate::shrink::EpsilonEstimate;

/// Axes of the normalization ellipse, `lambda_j = eps_j + 1`.
#[derive(Debug, Clone)]
pub struct LnConfig {
    lambda: DVector<f64>,
}

impl LnConfig {
    /// Builds the ellipse from an epsilon estimate (ML for plain LN, MAP for
    /// LN/MAP).
    pub fn new(estimate: &EpsilonEstimate) -> Self {
        LnConfig { lambda: estimate.epsilon().map(|e| e + 1.0) }
    }

    /// Ellipse for an explicit epsilon vector; entries must be >= 0.
    pub fn from_epsilon(epsilon: &DVector<f64>) -> Result<Self> {
        for (i, &e) in epsilon.iter().enumerate() {
            if e < 0.0 || !e.is_finite() {
                return Err(Error::NonPositiveEpsilon { index: i, value: e });
            }
        }
        Ok(LnConfig { lambda: epsilon.map(|e| e + 1.0) })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }
}

/// Scale factor that puts a latent vector on the ellipse surface.
pub fn scale_factor(cfg: &LnConfig, latent: &DVector<f64>) -> Result<f64> {
    if latent.len() != cfg.dim() {
        return Err(Error::DimensionMismatch { expected: cfg.dim(), got: latent.len() });
    }
    let p = cfg.dim() as f64;
    let mut s = 0.0;
    for (j, &x) in latent.iter().enumerate() {
        s += x * x / cfg.lambda[j];
    }
    if s == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((p / s).sqrt())
}

/// Applies the ellipse scale to a latent vector.
pub fn normalize_latent(cfg: &LnConfig, latent: &DVector<f64>) -> Result<DVector<f64>> {
    let r = scale_factor(cfg, latent)?;
    Ok(latent.scale(r))
}

/// Observed-frame convenience: maps through the model's latent transform,
/// normalizes there and returns the latent-frame result. Vectors equal to
/// `mu0` have a zero latent image and no defined scale.
pub fn length_normalize(model: &PldaModel, cfg: &LnConfig, x: &DVector<f64>) -> Result<DVector<f64>> {
    if cfg.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: cfg.dim() });
    }
    normalize_latent(cfg, &model.to_latent(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(eps: &[f64]) -> LnConfig {
        LnConfig::from_epsilon(&DVector::from_vec(eps.to_vec())).unwrap()
    }

    #[test]
    fn on_surface_vector_keeps_scale() {
        // x with sum x_j^2 / lambda_j = p already: r = 1.
        let c = cfg(&[1.0, 3.0]);
        // lambda = (2, 4); choose x = (sqrt(2), 2): 1 + 1 = 2 = p.
        let x = DVector::from_vec(vec![2f64.sqrt(), 2.0]);
        let r = scale_factor(&c, &x).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_epsilon_quarter_norm() {
        // eps = 0, |x|^2 = 4p: r = sqrt(p / 4p) = 1/2.
        let p = 6;
        let c = cfg(&vec![0.0; p]);
        let x = DVector::from_element(p, 2.0);
        let r = scale_factor(&c, &x).unwrap();
        assert_eq!(r, 0.5);
    }

    #[test]
    fn surface_residual_and_idempotence() {
        let c = cfg(&[0.0, 0.5, 2.0, 10.0]);
        let x = DVector::from_vec(vec![0.3, -1.8, 4.0, 0.01]);
        let y = normalize_latent(&c, &x).unwrap();
        let p = 4.0;
        let s: f64 = (0..4).map(|j| y[j] * y[j] / c.lambda()[j]).sum();
        assert!((s - p).abs() / p < 1e-9, "surface residual {}", (s - p).abs());
        let y2 = normalize_latent(&c, &y).unwrap();
        for j in 0..4 {
            assert!((y2[j] - y[j]).abs() <= 1e-9 * y[j].abs().max(1.0));
        }
    }

    #[test]
    fn projective_invariance() {
        let c = cfg(&[0.2, 1.5, 0.0]);
        let x = DVector::from_vec(vec![1.0, -0.5, 0.25]);
        let y = normalize_latent(&c, &x).unwrap();
        for scale in [1e-6, 0.5, 3.0, 1e9] {
            let ys = normalize_latent(&c, &x.scale(scale)).unwrap();
            for j in 0..3 {
                assert!((ys[j] - y[j]).abs() <= 1e-9 * y[j].abs().max(1e-12), "scale {scale}");
            }
        }
    }

    #[test]
    fn zero_vector_rejected() {
        let c = cfg(&[1.0, 1.0]);
        assert!(matches!(scale_factor(&c, &DVector::zeros(2)), Err(Error::ZeroVector)));
    }

    #[test]
    fn saturated_prior_doubles_lambda() {
        // alpha -> infinity with eps0 = 1 gives lambda_j = 2 for every j, so
        // the output is sqrt(p) * x / sqrt(|x|^2 / 2).
        let p = 3;
        let c = cfg(&[1.0, 1.0, 1.0]);
        let x = DVector::from_vec(vec![1.0, 2.0, -2.0]);
        let y = normalize_latent(&c, &x).unwrap();
        let expected_r = ((p as f64) / (x.norm_squared() / 2.0)).sqrt();
        for j in 0..p {
            assert!((y[j] - expected_r * x[j]).abs() < 1e-12);
        }
    }
}
