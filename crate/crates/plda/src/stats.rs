//! Moment accumulation over labeled data: global mean, per-class means and
//! counts, and the within/between scatter matrices that seed EM and LDA.

use nalgebra::{DMatrix, DVector};

use crate::data::LabeledDataset;
use crate::linalg;

#[derive(Debug, Clone)]
pub struct ClassMoment {
    pub label: String,
    pub count: usize,
    pub mean: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct MomentStats {
    pub global_mean: DVector<f64>,
    /// Per-class moments in dataset order.
    pub classes: Vec<ClassMoment>,
    /// Mean squared deviation of samples about their class means.
    pub within_scatter: DMatrix<f64>,
    /// Class-count-weighted scatter of class means about the global mean,
    /// normalized by the total sample count.
    pub between_scatter: DMatrix<f64>,
    pub total_count: usize,
}

pub fn accumulate_stats(data: &LabeledDataset) -> MomentStats {
    let p = data.dim();
    let n_total = data.total_samples();
    let mut global_mean = DVector::zeros(p);
    for class in data.classes() {
        for v in &class.vectors {
            global_mean += v;
        }
    }
    global_mean /= n_total as f64;

    let mut classes = Vec::with_capacity(data.num_classes());
    let mut within = DMatrix::zeros(p, p);
    let mut between = DMatrix::zeros(p, p);
    for class in data.classes() {
        let count = class.vectors.len();
        let mut mean = DVector::zeros(p);
        for v in &class.vectors {
            mean += v;
        }
        mean /= count as f64;
        for v in &class.vectors {
            let d = v - &mean;
            within.ger(1.0, &d, &d, 1.0);
        }
        let d = &mean - &global_mean;
        between.ger(count as f64, &d, &d, 1.0);
        classes.push(ClassMoment { label: class.label.clone(), count, mean });
    }
    within /= n_total as f64;
    between /= n_total as f64;
    linalg::symmetrize(&mut within);
    linalg::symmetrize(&mut between);

    MomentStats { global_mean, classes, within_scatter: within, between_scatter: between, total_count: n_total }
}
