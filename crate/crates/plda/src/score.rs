//! Trial lists and log likelihood-ratio scoring.
//!
//! A trial compares an enrollment (one or more utterances of one identity)
//! against a test utterance:
//!
//! ```text
//! log LR = log p(enroll, test | same class) - log p(enroll) - log p(test)
//! ```
//!
//! All three terms share the closed-form class marginal, so a trial costs
//! O(p) once the per-id latent moments are cached. The Jacobian of the latent
//! transform cancels across the three terms, which is what lets an epsilon
//! estimate be substituted without touching the rest of the model.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::data::VectorSet;
use crate::error::{Error, Result};
use crate::model::{canonical_loglik, PldaModel, SampleStats};
use crate::shrink::EpsilonEstimate;
use crate::textio;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialLabel {
    Target,
    NonTarget,
}

impl std::str::FromStr for TrialLabel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "target" => Ok(TrialLabel::Target),
            "nontarget" => Ok(TrialLabel::NonTarget),
            other => Err(format!("unknown trial label '{other}' (expected target|nontarget)")),
        }
    }
}

impl std::fmt::Display for TrialLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrialLabel::Target => "target",
            TrialLabel::NonTarget => "nontarget",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Trial {
    pub enroll: String,
    pub test: String,
    pub label: Option<TrialLabel>,
}

/// A trial list plus an optional enrollment map. Without a map an enrollment
/// id is taken to be the utterance id itself (single-session enrollment).
#[derive(Debug, Clone, Default)]
pub struct TrialSet {
    pub trials: Vec<Trial>,
    pub enrollments: BTreeMap<String, Vec<String>>,
}

impl TrialSet {
    pub fn new(trials: Vec<Trial>) -> Self {
        TrialSet { trials, enrollments: BTreeMap::new() }
    }

    /// Trial file: `<enroll-id> <test-id> [target|nontarget]` per line.
    pub fn read_trials(path: &Path) -> Result<Self> {
        let lines = textio::read_data_lines(path)?;
        let mut trials = Vec::with_capacity(lines.len());
        for (lineno, line) in &lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 && toks.len() != 3 {
                return Err(Error::parse(path, *lineno, "expected '<enroll-id> <test-id> [label]'"));
            }
            let label = match toks.get(2) {
                Some(t) => Some(t.parse().map_err(|e: String| Error::parse(path, *lineno, e))?),
                None => None,
            };
            trials.push(Trial { enroll: toks[0].to_string(), test: toks[1].to_string(), label });
        }
        if trials.is_empty() {
            return Err(Error::parse(path, 1, "no trials in file"));
        }
        Ok(TrialSet::new(trials))
    }

    pub fn write_trials(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for t in &self.trials {
            out.push_str(&t.enroll);
            out.push(' ');
            out.push_str(&t.test);
            if let Some(label) = t.label {
                out.push(' ');
                out.push_str(&label.to_string());
            }
            out.push('\n');
        }
        textio::write_file(path, &out)
    }

    /// Enrollment map file: `<enroll-id> <utt-id> [<utt-id> ...]` per line.
    pub fn read_enrollments(&mut self, path: &Path) -> Result<()> {
        let lines = textio::read_data_lines(path)?;
        for (lineno, line) in &lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 2 {
                return Err(Error::parse(path, *lineno, "expected '<enroll-id> <utt-id> [...]'"));
            }
            let id = toks[0].to_string();
            if self
                .enrollments
                .insert(id.clone(), toks[1..].iter().map(|s| s.to_string()).collect())
                .is_some()
            {
                return Err(Error::parse(path, *lineno, format!("duplicate enrollment id '{id}'")));
            }
        }
        Ok(())
    }

    pub fn write_enrollments(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (id, utts) in &self.enrollments {
            out.push_str(id);
            for u in utts {
                out.push(' ');
                out.push_str(u);
            }
            out.push('\n');
        }
        textio::write_file(path, &out)
    }

}

/// Scored trials, in trial-list order.
#[derive(Debug, Clone)]
pub struct ScoreSet {
    pub records: Vec<(Trial, f64)>,
}

impl ScoreSet {
    /// Score file: `<enroll-id> <test-id> <score>` with 9 significant digits.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (t, s) in &self.records {
            out.push_str(&t.enroll);
            out.push(' ');
            out.push_str(&t.test);
            out.push(' ');
            out.push_str(&textio::fmt_score(*s));
            out.push('\n');
        }
        textio::write_file(path, &out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let lines = textio::read_data_lines(path)?;
        let mut records = Vec::with_capacity(lines.len());
        for (lineno, line) in &lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::parse(path, *lineno, "expected '<enroll-id> <test-id> <score>'"));
            }
            let score = textio::parse_f64(path, *lineno, toks[2])?;
            records.push((
                Trial { enroll: toks[0].to_string(), test: toks[1].to_string(), label: None },
                score,
            ));
        }
        if records.is_empty() {
            return Err(Error::parse(path, 1, "no scores in file"));
        }
        Ok(ScoreSet { records })
    }

    /// Copies labels over from a trial list, matching on (enroll, test).
    pub fn attach_labels(&mut self, trials: &TrialSet) -> Result<()> {
        let mut labels = HashMap::with_capacity(trials.trials.len());
        for t in &trials.trials {
            labels.insert((t.enroll.as_str(), t.test.as_str()), t.label);
        }
        for (t, _) in &mut self.records {
            match labels.get(&(t.enroll.as_str(), t.test.as_str())) {
                Some(l) => t.label = *l,
                None => {
                    return Err(Error::UnresolvedId { kind: "trial", id: format!("{} {}", t.enroll, t.test) })
                }
            }
        }
        Ok(())
    }
}

/// Scores one trial: joint marginal of enrollment and test minus the two
/// separate marginals, with `epsilon` substituted for the model's own.
pub fn score_trial(
    model: &PldaModel,
    epsilon: &EpsilonEstimate,
    enrollment: &[DVector<f64>],
    test: &DVector<f64>,
) -> Result<f64> {
    if epsilon.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: epsilon.dim() });
    }
    if enrollment.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut enroll_stats = SampleStats::zeros(model.dim());
    for x in enrollment {
        enroll_stats.push(&model.to_latent(x)?);
    }
    let mut test_stats = SampleStats::zeros(model.dim());
    test_stats.push(&model.to_latent(test)?);
    Ok(llr_from_stats(epsilon.epsilon(), &enroll_stats, &test_stats))
}

fn llr_from_stats(eps: &DVector<f64>, enroll: &SampleStats, test: &SampleStats) -> f64 {
    let joint = enroll.merged(test);
    canonical_loglik(eps, &joint) - canonical_loglik(eps, enroll) - canonical_loglik(eps, test)
}

/// Scores every trial in the set. Latent moments are computed once per
/// enrollment id and once per test utterance, then each trial is O(p).
pub fn score_trialset(
    model: &PldaModel,
    epsilon: &EpsilonEstimate,
    trials: &TrialSet,
    enroll_vectors: &VectorSet,
    test_vectors: &VectorSet,
) -> Result<ScoreSet> {
    if epsilon.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: epsilon.dim() });
    }
    let enroll_latent = LatentCache::build(model, enroll_vectors)?;
    let test_latent = LatentCache::build(model, test_vectors)?;
    score_cached(epsilon, trials, &enroll_latent, &test_latent)
}

/// Scores trials whose vectors are already in the latent frame (e.g. after
/// length normalization).
pub fn score_trialset_latent(
    epsilon: &EpsilonEstimate,
    trials: &TrialSet,
    enroll_latent: &HashMap<String, DVector<f64>>,
    test_latent: &HashMap<String, DVector<f64>>,
) -> Result<ScoreSet> {
    let enroll = LatentCache::from_latent(epsilon.dim(), enroll_latent)?;
    let test = LatentCache::from_latent(epsilon.dim(), test_latent)?;
    score_cached(epsilon, trials, &enroll, &test)
}

struct LatentCache {
    latent: HashMap<String, DVector<f64>>,
}

impl LatentCache {
    fn build(model: &PldaModel, vectors: &VectorSet) -> Result<Self> {
        let mut latent = HashMap::with_capacity(vectors.len());
        for rec in vectors.records() {
            latent.insert(rec.utt.clone(), model.to_latent(&rec.vector)?);
        }
        Ok(LatentCache { latent })
    }

    fn from_latent(dim: usize, map: &HashMap<String, DVector<f64>>) -> Result<Self> {
        for v in map.values() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
        }
        Ok(LatentCache { latent: map.clone() })
    }

    fn get(&self, kind: &'static str, id: &str) -> Result<&DVector<f64>> {
        self.latent
            .get(id)
            .ok_or_else(|| Error::UnresolvedId { kind, id: id.to_string() })
    }
}

fn score_cached(
    epsilon: &EpsilonEstimate,
    trials: &TrialSet,
    enroll: &LatentCache,
    test: &LatentCache,
) -> Result<ScoreSet> {
    if trials.trials.is_empty() {
        return Err(Error::InvalidArgument("empty trial list".into()));
    }
    let p = epsilon.dim();
    // Moments per enrollment id (possibly multi-utterance) and per test id.
    let mut enroll_stats: HashMap<&str, SampleStats> = HashMap::new();
    let mut test_stats: HashMap<&str, SampleStats> = HashMap::new();
    for t in &trials.trials {
        if !enroll_stats.contains_key(t.enroll.as_str()) {
            let mut stats = SampleStats::zeros(p);
            match trials.enrollments.get(&t.enroll) {
                Some(utts) => {
                    if utts.is_empty() {
                        return Err(Error::EmptySamples);
                    }
                    for u in utts {
                        stats.push(enroll.get("enrollment utterance", u)?);
                    }
                }
                None => stats.push(enroll.get("enrollment", &t.enroll)?),
            }
            enroll_stats.insert(t.enroll.as_str(), stats);
        }
        if !test_stats.contains_key(t.test.as_str()) {
            let mut stats = SampleStats::zeros(p);
            stats.push(test.get("test", &t.test)?);
            test_stats.insert(t.test.as_str(), stats);
        }
    }
    let eps = epsilon.epsilon();
    let records: Vec<(Trial, f64)> = trials
        .trials
        .par_iter()
        .map(|t| {
            let s = llr_from_stats(eps, &enroll_stats[t.enroll.as_str()], &test_stats[t.test.as_str()]);
            (t.clone(), s)
        })
        .collect();
    for (t, s) in &records {
        if !s.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite score for trial {} {}",
                t.enroll, t.test
            )));
        }
    }
    Ok(ScoreSet { records })
}
