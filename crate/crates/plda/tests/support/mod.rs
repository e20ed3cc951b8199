//! Shared test oracles. Both are independent of the library's math: the
//! marginal likelihood comes from brute Simpson quadrature over the latent
//! class mean, the EER from exhaustive operating-point mixtures.

// Each test binary compiles this module on its own, so not every helper is
// used everywhere.
#![allow(dead_code)]

use plda::score::{ScoreSet, Trial, TrialLabel};

/// log N(x; mean, var)
pub fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}

/// Marginal log-likelihood of a 1-D class with shared latent mean:
/// `log int N(m; mu0, b) prod_i N(x_i; m, w) dm` by Simpson's rule.
///
/// The integrand is a Gaussian product, so the grid is centered on its exact
/// mode and spans +-12 posterior standard deviations; with 40k intervals the
/// quadrature error is far below the 1e-6 tolerances it oracles for.
pub fn quad_marginal_1d(mu0: f64, w: f64, b: f64, xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let prec = 1.0 / b + n / w;
    let mode = mu0 + xs.iter().map(|x| x - mu0).sum::<f64>() / w / prec;
    let sd = prec.sqrt().recip();
    let half = 12.0 * sd;
    let steps = 40_000;
    let h = 2.0 * half / steps as f64;
    let logf = |m: f64| {
        log_normal(m, mu0, b) + xs.iter().map(|&x| log_normal(x, m, w)).sum::<f64>()
    };
    let peak = logf(mode);
    let mut acc = 0.0;
    for i in 0..=steps {
        let m = mode - half + i as f64 * h;
        let wgt = if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += wgt * (logf(m) - peak).exp();
    }
    peak + (acc * h / 3.0).ln()
}

/// Same-class log likelihood ratio by quadrature: joint marginal minus the
/// separate marginals.
pub fn quad_llr_1d(mu0: f64, w: f64, b: f64, enroll: &[f64], test: &[f64]) -> f64 {
    let joint: Vec<f64> = enroll.iter().chain(test).copied().collect();
    quad_marginal_1d(mu0, w, b, &joint)
        - quad_marginal_1d(mu0, w, b, enroll)
        - quad_marginal_1d(mu0, w, b, test)
}

/// Exhaustive EER oracle. Every `accept iff score >= t` rule is an operating
/// point (FAR, FRR); randomized mixtures of two rules reach every point on a
/// connecting segment. The EER is the smallest common value of FAR = FRR
/// over all single points and all pair mixtures, which is exactly where the
/// ROC convex hull crosses the anti-diagonal.
pub fn brute_force_eer(scores: &[(f64, TrialLabel)]) -> f64 {
    let n_tar = scores.iter().filter(|(_, l)| *l == TrialLabel::Target).count() as f64;
    let n_non = scores.len() as f64 - n_tar;
    assert!(n_tar > 0.0 && n_non > 0.0, "oracle needs both labels");

    let mut thresholds: Vec<f64> = scores.iter().map(|(s, _)| *s).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();

    // (far, frr) per rule, plus the accept-nothing rule.
    let mut points: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&t| {
            let fa = scores
                .iter()
                .filter(|(s, l)| *l == TrialLabel::NonTarget && *s >= t)
                .count() as f64
                / n_non;
            let fr = scores
                .iter()
                .filter(|(s, l)| *l == TrialLabel::Target && *s < t)
                .count() as f64
                / n_tar;
            (fa, fr)
        })
        .collect();
    points.push((0.0, 1.0));

    let mut best = f64::INFINITY;
    for &(fa, fr) in &points {
        if fa == fr {
            best = best.min(fa);
        }
    }
    for (i, &(fa_a, fr_a)) in points.iter().enumerate() {
        let ga = fa_a - fr_a;
        for &(fa_b, fr_b) in &points[i + 1..] {
            let gb = fa_b - fr_b;
            if ga * gb < 0.0 {
                let lam = gb / (gb - ga);
                best = best.min(lam * fa_a + (1.0 - lam) * fa_b);
            }
        }
    }
    assert!(best.is_finite(), "accept-all and accept-none bracket a crossing");
    best
}

/// Wraps bare labeled scores in the ScoreSet shape `compute_eer` wants.
pub fn score_set(scores: &[(f64, TrialLabel)]) -> ScoreSet {
    let records = scores
        .iter()
        .enumerate()
        .map(|(i, &(s, label))| {
            let trial = Trial {
                enroll: format!("e{i}"),
                test: format!("t{i}"),
                label: Some(label),
            };
            (trial, s)
        })
        .collect();
    ScoreSet { records }
}
