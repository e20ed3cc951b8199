//! Equal error rate on the ROC convex hull.
//!
//! Sweeping a single threshold over the scores gives a staircase of
//! operating points; the achievable ROC is its convex hull (any point on a
//! hull edge is a mixture of the two endpoint thresholds). The EER is where
//! the hull crosses `false-accept = false-reject`, found by linear
//! interpolation along the crossing edge. This depends only on score ranks,
//! so any strictly increasing recalibration leaves it unchanged.

use crate::error::{Error, Result};
use crate::score::{ScoreSet, TrialLabel};

/// Evaluation summary. `config` is an echo of whatever produced the scores;
/// [`compute_eer`] leaves it empty and the pipeline fills it in.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub eer: f64,
    /// Score threshold at the equal-error operating point (interpolated).
    pub threshold: f64,
    pub n_target: usize,
    pub n_nontarget: usize,
    pub config: Vec<(String, String)>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("eer {}\n", self.eer));
        out.push_str(&format!("threshold {}\n", self.threshold));
        out.push_str(&format!("n_target {}\n", self.n_target));
        out.push_str(&format!("n_nontarget {}\n", self.n_nontarget));
        for (k, v) in &self.config {
            out.push_str(&format!("{k} {v}\n"));
        }
        out
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        crate::textio::write_file(path, &self.to_text())
    }
}

/// One point of the threshold staircase: accept iff `score >= threshold`.
#[derive(Debug, Clone, Copy)]
struct OperatingPoint {
    fa: f64,
    tp: f64, // true-positive rate = 1 - false-reject rate
    threshold: f64,
}

pub fn compute_eer(scores: &ScoreSet) -> Result<EvalReport> {
    let mut labeled: Vec<(f64, TrialLabel)> = Vec::with_capacity(scores.records.len());
    for (t, s) in &scores.records {
        if let Some(label) = t.label {
            labeled.push((*s, label));
        }
    }
    if labeled.is_empty() {
        return Err(Error::MissingTrials("labeled"));
    }
    let n_target = labeled.iter().filter(|(_, l)| *l == TrialLabel::Target).count();
    let n_nontarget = labeled.len() - n_target;
    if n_target == 0 {
        return Err(Error::MissingTrials("target"));
    }
    if n_nontarget == 0 {
        return Err(Error::MissingTrials("nontarget"));
    }

    let points = staircase(&mut labeled, n_target, n_nontarget);
    let hull = upper_hull(&points);
    let (eer, threshold) = hull_crossing(&hull);
    Ok(EvalReport { eer, threshold, n_target, n_nontarget, config: Vec::new() })
}

/// Operating points for `accept iff score >= t`, t from +inf down through
/// every distinct score. Points come out sorted by increasing false-accept
/// rate (and increasing true-positive rate within ties).
fn staircase(labeled: &mut [(f64, TrialLabel)], n_target: usize, n_nontarget: usize) -> Vec<OperatingPoint> {
    labeled.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut points = Vec::with_capacity(labeled.len() + 2);
    points.push(OperatingPoint { fa: 0.0, tp: 0.0, threshold: f64::INFINITY });
    let mut acc_t = 0usize;
    let mut acc_n = 0usize;
    let mut i = 0;
    while i < labeled.len() {
        let t = labeled[i].0;
        while i < labeled.len() && labeled[i].0 == t {
            match labeled[i].1 {
                TrialLabel::Target => acc_t += 1,
                TrialLabel::NonTarget => acc_n += 1,
            }
            i += 1;
        }
        points.push(OperatingPoint {
            fa: acc_n as f64 / n_nontarget as f64,
            tp: acc_t as f64 / n_target as f64,
            threshold: t,
        });
    }
    points
}

/// Upper convex hull in (false-accept, true-positive) space. Input is sorted
/// by fa then tp; collinear interior points are dropped.
fn upper_hull(points: &[OperatingPoint]) -> Vec<OperatingPoint> {
    let mut hull: Vec<OperatingPoint> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Keep b only if it turns strictly left of a -> p.
            let cross = (b.fa - a.fa) * (p.tp - a.tp) - (b.tp - a.tp) * (p.fa - a.fa);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Where the hull crosses `tp = 1 - fa`; returns (eer, threshold).
fn hull_crossing(hull: &[OperatingPoint]) -> (f64, f64) {
    // g = fa + tp - 1 is monotone non-decreasing along the hull, negative at
    // (0,0) and positive at (1,1).
    let g = |p: &OperatingPoint| p.fa + p.tp - 1.0;
    for w in hull.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (ga, gb) = (g(a), g(b));
        if ga <= 0.0 && gb >= 0.0 {
            if gb == ga {
                return (a.fa, a.threshold);
            }
            let s = -ga / (gb - ga);
            let fa = a.fa + s * (b.fa - a.fa);
            let fr = 1.0 - (a.tp + s * (b.tp - a.tp));
            let eer = 0.5 * (fa + fr);
            let threshold = match (a.threshold.is_finite(), b.threshold.is_finite()) {
                (true, true) => a.threshold + s * (b.threshold - a.threshold),
                (false, true) => b.threshold,
                (true, false) => a.threshold,
                (false, false) => 0.0,
            };
            return (eer, threshold);
        }
    }
    // Unreachable for non-empty score sets with both classes present.
    (0.5, 0.0)
}
