//! Development-set grid search over the prior weight alpha.
//!
//! Each candidate shrinks the model's ML epsilon toward `eps0`, rescoring the
//! development trials and tracking the EER. Selection happens on plain PLDA
//! scores (no length norm), mirroring how the weight is then reused by the
//! MAP-based variants. The grid must contain 0 so the no-prior baseline is
//! always a candidate; ties go to the smaller alpha.

use nalgebra::DVector;

use crate::data::VectorSet;
use crate::eer::compute_eer;
use crate::error::{Error, Result};
use crate::model::PldaModel;
use crate::score::{score_trialset, TrialSet};
use crate::shrink::{map_epsilon, EpsilonEstimate};

/// Default candidate weights, in classes.
pub const DEFAULT_ALPHA_GRID: [f64; 7] = [0.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 7000.0];

#[derive(Debug, Clone)]
pub struct AlphaCurve {
    /// `(alpha, dev EER)` in ascending alpha order.
    pub points: Vec<(f64, f64)>,
    pub best_alpha: f64,
    pub best_eer: f64,
}

pub fn sweep_alpha(
    model: &PldaModel,
    eps0: &DVector<f64>,
    grid: &[f64],
    trials: &TrialSet,
    enroll_vectors: &VectorSet,
    test_vectors: &VectorSet,
) -> Result<AlphaCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("alpha grid is empty".into()));
    }
    if !grid.contains(&0.0) {
        return Err(Error::InvalidArgument("alpha grid must contain 0".into()));
    }
    let mut grid: Vec<f64> = grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let ml = EpsilonEstimate::from_model(model);
    let mut points = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &alpha in &grid {
        let eps = map_epsilon(&ml, alpha, eps0)?;
        let scores = score_trialset(model, &eps, trials, enroll_vectors, test_vectors)?;
        let eer = compute_eer(&scores)?.eer;
        points.push((alpha, eer));
        // Strict improvement required: ascending order makes ties resolve
        // toward the smaller alpha.
        if best.is_none_or(|(_, e)| eer < e) {
            best = Some((alpha, eer));
        }
    }
    let (best_alpha, best_eer) = best.unwrap();
    Ok(AlphaCurve { points, best_alpha, best_eer })
}

/// TSV dump of a sweep curve: `alpha<TAB>eer` with a header line.
pub fn write_curve(path: &std::path::Path, curve: &AlphaCurve) -> Result<()> {
    let mut out = String::from("alpha\teer\n");
    for (a, e) in &curve.points {
        out.push_str(&format!("{a}\t{e}\n"));
    }
    crate::textio::write_file(path, &out)
}
