//! Synthetic verification data drawn from a known two-covariance model.
//!
//! Everything is generated in the canonical frame: mu0 = 0, within-class
//! covariance I, class means with per-dimension variance `epsilon`. The
//! class-mean distribution comes from the sampler registry so its tails can
//! be made heavier than Gaussian; within-class noise stays Gaussian, which is
//! the model assumption.

use std::path::Path;

use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{VectorRecord, VectorSet};
use crate::error::{Error, Result};
use crate::score::{Trial, TrialLabel, TrialSet};
use crate::strategy::samplers;
use crate::textio::{self, fmt_full};

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub dim: usize,
    pub classes: usize,
    pub per_class: usize,
    /// Sampler name for the class-mean draw (within noise is always Gaussian).
    pub tail: String,
    /// True between-class variances, one per dimension.
    pub epsilon: DVector<f64>,
    pub seed: u64,
    /// Class ids are `<prefix><k>`. The prefix must keep them non-numeric or
    /// the vector-file label detection would misread the column.
    pub prefix: String,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dim must be >= 1".into()));
        }
        if self.classes < 2 {
            return Err(Error::TooFewClasses(self.classes));
        }
        if self.per_class == 0 {
            return Err(Error::InvalidArgument("per_class must be >= 1".into()));
        }
        if self.epsilon.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: self.epsilon.len() });
        }
        if let Some(j) = self.epsilon.iter().position(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::NonPositiveEpsilon { index: j, value: self.epsilon[j] });
        }
        if self.prefix.is_empty() || format!("{}0", self.prefix).parse::<f64>().is_ok() {
            return Err(Error::InvalidArgument(format!(
                "class prefix {:?} would produce numeric-looking ids",
                self.prefix
            )));
        }
        Ok(())
    }
}

/// Labeled vectors, `classes * per_class` records in class-major order.
/// Deterministic given the spec.
pub fn synth_dataset(spec: &SynthSpec) -> Result<VectorSet> {
    spec.validate()?;
    let tail = samplers().get(&spec.tail)?;
    let gauss = samplers().get("gaussian").expect("registry ships gaussian");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scale: Vec<f64> = spec.epsilon.iter().map(|e| e.sqrt()).collect();

    let mut records = Vec::with_capacity(spec.classes * spec.per_class);
    for k in 0..spec.classes {
        let class = format!("{}{k:04}", spec.prefix);
        let mean =
            DVector::from_fn(spec.dim, |j, _| scale[j] * tail.draw(&mut rng));
        for u in 0..spec.per_class {
            let x = DVector::from_fn(spec.dim, |j, _| mean[j] + gauss.draw(&mut rng));
            records.push(VectorRecord {
                utt: format!("{class}-{u:03}"),
                class: Some(class.clone()),
                vector: x,
            });
        }
    }
    VectorSet::from_records(records)
}

/// Heavy-tailed true variance profile: the square of a unit-variance
/// Student-t (nu = 3) draw, so E[eps_j] = 1 matches the all-ones prior while
/// individual dimensions range over orders of magnitude. Floored below.
pub fn heavy_tailed_epsilon(dim: usize, seed: u64, floor: f64) -> DVector<f64> {
    let student = samplers().get("student").expect("registry ships student");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(dim, |_, _| student.draw(&mut rng).powi(2).max(floor))
}

/// Trials plus the vector sets they refer to.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub trials: TrialSet,
    pub enroll: VectorSet,
    pub test: VectorSet,
}

/// Single-session protocol over a labeled set: the first utterance of each
/// class enrolls it (enrollment id = class id), every later utterance is
/// tested against all enrolled classes. Exhaustive, deterministic order:
/// test-major, classes in first-appearance order.
pub fn build_trials(set: &VectorSet) -> Result<TrialData> {
    if !set.is_labeled() {
        return Err(Error::InvalidArgument("trial protocol needs class labels".into()));
    }
    let mut class_order: Vec<&str> = Vec::new();
    let mut enroll_records = Vec::new();
    let mut test_records = Vec::new();
    for rec in set.records() {
        let class = rec.class.as_deref().expect("labeled set");
        if !class_order.contains(&class) {
            class_order.push(class);
            enroll_records.push(rec.clone());
        } else {
            test_records.push(rec.clone());
        }
    }

    let mut trials = Vec::with_capacity(test_records.len() * class_order.len());
    for rec in &test_records {
        let test_class = rec.class.as_deref().expect("labeled set");
        for &class in &class_order {
            let label =
                if class == test_class { TrialLabel::Target } else { TrialLabel::NonTarget };
            trials.push(Trial {
                enroll: class.to_string(),
                test: rec.utt.clone(),
                label: Some(label),
            });
        }
    }

    let mut trial_set = TrialSet::new(trials);
    for rec in &enroll_records {
        let class = rec.class.clone().expect("labeled set");
        trial_set.enrollments.insert(class, vec![rec.utt.clone()]);
    }
    Ok(TrialData {
        trials: trial_set,
        enroll: VectorSet::from_records(enroll_records)?,
        test: VectorSet::from_records(test_records)?,
    })
}

/// A train set plus dev and eval trial protocols, speaker-disjoint by
/// construction. One experiment unit for the harness.
#[derive(Debug, Clone)]
pub struct SynthEval {
    pub epsilon: DVector<f64>,
    pub train: VectorSet,
    pub dev: TrialData,
    pub eval: TrialData,
}

#[derive(Debug, Clone)]
pub struct EvalSpec {
    pub dim: usize,
    pub train_classes: usize,
    pub dev_classes: usize,
    pub eval_classes: usize,
    pub per_class: usize,
    pub tail: String,
    /// Fixed true variances; `None` draws a heavy-tailed profile per seed.
    pub epsilon: Option<DVector<f64>>,
    pub seed: u64,
}

impl SynthEval {
    /// Writes the standard experiment layout under `dir`:
    /// `train.txt`, `{dev,eval}-{trials,enroll,test,enroll-map}.txt`, and
    /// `epsilon-true.txt` (one variance per line, full precision).
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.train.write(&dir.join("train.txt"))?;
        for (name, td) in [("dev", &self.dev), ("eval", &self.eval)] {
            td.trials.write_trials(&dir.join(format!("{name}-trials.txt")))?;
            td.trials.write_enrollments(&dir.join(format!("{name}-enroll-map.txt")))?;
            td.enroll.write(&dir.join(format!("{name}-enroll.txt")))?;
            td.test.write(&dir.join(format!("{name}-test.txt")))?;
        }
        let mut out = String::from("# true between-class variances\n");
        for e in self.epsilon.iter() {
            out.push_str(&fmt_full(*e));
            out.push('\n');
        }
        textio::write_file(&dir.join("epsilon-true.txt"), &out)
    }
}

pub fn synth_eval(spec: &EvalSpec) -> Result<SynthEval> {
    let mut root = ChaCha8Rng::seed_from_u64(spec.seed);
    let eps_seed = root.next_u64();
    let split_seeds = [root.next_u64(), root.next_u64(), root.next_u64()];
    let epsilon = match &spec.epsilon {
        Some(e) => e.clone(),
        None => heavy_tailed_epsilon(spec.dim, eps_seed, 0.05),
    };

    let base = SynthSpec {
        dim: spec.dim,
        classes: 0,
        per_class: spec.per_class,
        tail: spec.tail.clone(),
        epsilon,
        seed: 0,
        prefix: String::new(),
    };
    let make = |classes: usize, prefix: &str, seed: u64| {
        synth_dataset(&SynthSpec {
            classes,
            prefix: prefix.into(),
            seed,
            ..base.clone()
        })
    };
    let train = make(spec.train_classes, "tr", split_seeds[0])?;
    let dev = build_trials(&make(spec.dev_classes, "dv", split_seeds[1])?)?;
    let eval = build_trials(&make(spec.eval_classes, "ev", split_seeds[2])?)?;
    Ok(SynthEval { epsilon: base.epsilon, train, dev, eval })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::accumulate_stats;

    fn spec(dim: usize, classes: usize, per_class: usize) -> SynthSpec {
        SynthSpec {
            dim,
            classes,
            per_class,
            tail: "gaussian".into(),
            epsilon: DVector::from_element(dim, 2.0),
            seed: 9,
            prefix: "c".into(),
        }
    }

    #[test]
    fn deterministic_and_labeled() {
        let a = synth_dataset(&spec(3, 5, 4)).unwrap();
        let b = synth_dataset(&spec(3, 5, 4)).unwrap();
        assert_eq!(a.len(), 20);
        assert!(a.is_labeled());
        for (ra, rb) in a.records().iter().zip(b.records()) {
            assert_eq!(ra.utt, rb.utt);
            assert_eq!(ra.class, rb.class);
            assert_eq!(ra.vector, rb.vector);
        }
    }

    #[test]
    fn moments_match_the_generating_model() {
        let mut s = spec(3, 1200, 4);
        s.epsilon = DVector::from_vec(vec![0.5, 2.0, 4.0]);
        let data = synth_dataset(&s).unwrap().to_labeled().unwrap();
        let stats = accumulate_stats(&data);
        // ML scatters with estimated class means: within shrinks by (n-1)/n
        // and between picks up the mean-estimation term 1/n.
        let n = 4.0;
        for j in 0..3 {
            let within = stats.within_scatter[(j, j)];
            let expect_w = (n - 1.0) / n;
            assert!((within - expect_w).abs() / expect_w < 0.1, "within[{j}] = {within}");
            let between = stats.between_scatter[(j, j)];
            let expect_b = s.epsilon[j] + 1.0 / n;
            assert!(
                (between - expect_b).abs() / expect_b < 0.1,
                "between[{j}] = {between}, expected near {expect_b}"
            );
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(synth_dataset(&spec(0, 5, 4)).is_err());
        assert!(synth_dataset(&spec(3, 1, 4)).is_err());
        assert!(synth_dataset(&spec(3, 5, 0)).is_err());
        let mut s = spec(3, 5, 4);
        s.epsilon[1] = 0.0;
        assert!(synth_dataset(&s).is_err());
        let mut s = spec(3, 5, 4);
        s.tail = "cauchy".into();
        assert!(synth_dataset(&s).is_err());
        // "1e0" parses as a float, so this prefix would corrupt the label
        // column.
        let mut s = spec(3, 5, 4);
        s.prefix = "1e".into();
        assert!(synth_dataset(&s).is_err());
    }

    #[test]
    fn heavy_profile_is_floored_and_spread() {
        let eps = heavy_tailed_epsilon(200, 3, 0.05);
        let again = heavy_tailed_epsilon(200, 3, 0.05);
        assert_eq!(eps, again);
        assert!(eps.iter().all(|&e| e >= 0.05));
        assert!(eps.max() / eps.min() > 10.0, "profile too flat: {} / {}", eps.max(), eps.min());
    }

    #[test]
    fn trial_protocol_counts_and_labels() {
        let data = synth_dataset(&spec(2, 3, 4)).unwrap();
        let td = build_trials(&data).unwrap();
        assert_eq!(td.enroll.len(), 3);
        assert_eq!(td.test.len(), 9);
        assert_eq!(td.trials.trials.len(), 27);
        let targets =
            td.trials.trials.iter().filter(|t| t.label == Some(TrialLabel::Target)).count();
        assert_eq!(targets, 9);
        for t in &td.trials.trials {
            let utts = &td.trials.enrollments[&t.enroll];
            assert_eq!(utts.len(), 1);
            assert!(td.enroll.get(&utts[0]).is_some());
            assert!(td.test.get(&t.test).is_some());
        }
    }

    #[test]
    fn trial_protocol_needs_labels() {
        let mut s = spec(2, 3, 2);
        s.epsilon = DVector::from_element(2, 1.0);
        let data = synth_dataset(&s).unwrap();
        let recs = data
            .records()
            .iter()
            .map(|r| VectorRecord { utt: r.utt.clone(), class: None, vector: r.vector.clone() })
            .collect();
        let unlabeled = VectorSet::from_records(recs).unwrap();
        assert!(build_trials(&unlabeled).is_err());
    }

    #[test]
    fn split_unit_is_disjoint_and_deterministic() {
        let es = EvalSpec {
            dim: 4,
            train_classes: 6,
            dev_classes: 3,
            eval_classes: 3,
            per_class: 3,
            tail: "student".into(),
            epsilon: None,
            seed: 17,
        };
        let a = synth_eval(&es).unwrap();
        let b = synth_eval(&es).unwrap();
        assert_eq!(a.epsilon, b.epsilon);
        assert_eq!(a.train.len(), 18);
        assert_eq!(a.dev.enroll.len(), 3);
        assert_eq!(a.eval.test.len(), 6);
        let first_dev = &a.dev.enroll.records()[0];
        assert_eq!(b.dev.enroll.records()[0].vector, first_dev.vector);
        // Disjoint id spaces across splits.
        assert!(a.train.records().iter().all(|r| r.utt.starts_with("tr")));
        assert!(a.dev.enroll.records().iter().all(|r| r.utt.starts_with("dv")));
        assert!(a.eval.enroll.records().iter().all(|r| r.utt.starts_with("ev")));
    }
}
