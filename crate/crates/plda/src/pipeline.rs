//! End-to-end harness: train, shrink, normalize, score, report, driven by a
//! flat key = value config. Reruns with the same config are byte-identical.
//!
//! The six system variants cross MAP shrinkage applied to scoring with the
//! length-normalization flavor. Alpha is chosen on the dev trials (or pinned
//! by the config) and frozen before the eval trials are touched; eval labels
//! are only read by the final EER stage.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::data::VectorSet;
use crate::eer::{compute_eer, EvalReport};
use crate::error::{Error, Result, StageExt};
use crate::lda::{fit_lda, LdaProjection};
use crate::lnorm::{length_normalize, LnConfig};
use crate::model::PldaModel;
use crate::score::{score_trialset, score_trialset_latent, ScoreSet, TrialSet};
use crate::shrink::{map_epsilon, EpsilonEstimate};
use crate::sweep::{sweep_alpha, write_curve, DEFAULT_ALPHA_GRID};
use crate::textio;
use crate::train::{train_ml, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LnKind {
    Off,
    Ml,
    Map,
}

/// One row of the system matrix.
#[derive(Debug, Clone, Copy)]
pub struct Variant {
    pub name: &'static str,
    /// Score trials with the MAP epsilon instead of the EM one.
    pub score_map: bool,
    pub ln: LnKind,
}

impl Variant {
    pub fn needs_map(&self) -> bool {
        self.score_map || self.ln == LnKind::Map
    }

    pub fn needs_ln(&self) -> bool {
        self.ln != LnKind::Off
    }
}

pub const VARIANTS: [Variant; 6] = [
    Variant { name: "plda", score_map: false, ln: LnKind::Off },
    Variant { name: "plda-map", score_map: true, ln: LnKind::Off },
    Variant { name: "plda+ln", score_map: false, ln: LnKind::Ml },
    Variant { name: "plda-map+ln", score_map: true, ln: LnKind::Ml },
    Variant { name: "plda+ln-map", score_map: false, ln: LnKind::Map },
    Variant { name: "plda-map+ln-map", score_map: true, ln: LnKind::Map },
];

pub fn variant(name: &str) -> Result<Variant> {
    VARIANTS.iter().find(|v| v.name == name).copied().ok_or_else(|| Error::UnknownName {
        what: "variant",
        name: name.to_string(),
        known: VARIANTS.map(|v| v.name).join(", "),
    })
}

const CONFIG_KEYS: [&str; 17] = [
    "variant",
    "train",
    "dev-trials",
    "dev-enroll",
    "dev-test",
    "dev-enroll-map",
    "eval-trials",
    "eval-enroll",
    "eval-test",
    "eval-enroll-map",
    "out-dir",
    "lda-dim",
    "alpha",
    "alpha-grid",
    "eps0",
    "eps0-file",
    "retrain-after-ln",
];

/// Everything a run needs. Fields stay optional until [`run_pipeline`]
/// validates them, so a config file and CLI overrides can be merged first.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub variant: String,
    pub train: Option<PathBuf>,
    pub dev_trials: Option<PathBuf>,
    pub dev_enroll: Option<PathBuf>,
    pub dev_test: Option<PathBuf>,
    pub dev_enroll_map: Option<PathBuf>,
    pub eval_trials: Option<PathBuf>,
    pub eval_enroll: Option<PathBuf>,
    pub eval_test: Option<PathBuf>,
    pub eval_enroll_map: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub lda_dim: Option<usize>,
    /// Pinned prior weight; when absent a dev sweep picks it.
    pub alpha: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    /// Scalar prior center, broadcast over dimensions. Defaults to 1.
    pub eps0: Option<f64>,
    pub eps0_file: Option<PathBuf>,
    pub retrain_after_ln: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            variant: "plda".into(),
            train: None,
            dev_trials: None,
            dev_enroll: None,
            dev_test: None,
            dev_enroll_map: None,
            eval_trials: None,
            eval_enroll: None,
            eval_test: None,
            eval_enroll_map: None,
            out_dir: None,
            lda_dim: None,
            alpha: None,
            alpha_grid: None,
            eps0: None,
            eps0_file: None,
            retrain_after_ln: false,
        }
    }
}

impl PipelineConfig {
    /// Applies one key = value pair. Used for both config lines and CLI
    /// overrides; later writes win.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = || Some(PathBuf::from(value));
        match key {
            "variant" => self.variant = value.to_string(),
            "train" => self.train = path(),
            "dev-trials" => self.dev_trials = path(),
            "dev-enroll" => self.dev_enroll = path(),
            "dev-test" => self.dev_test = path(),
            "dev-enroll-map" => self.dev_enroll_map = path(),
            "eval-trials" => self.eval_trials = path(),
            "eval-enroll" => self.eval_enroll = path(),
            "eval-test" => self.eval_test = path(),
            "eval-enroll-map" => self.eval_enroll_map = path(),
            "out-dir" => self.out_dir = path(),
            "lda-dim" => self.lda_dim = Some(parse_num::<usize>(key, value)?),
            "alpha" => self.alpha = Some(parse_num::<f64>(key, value)?),
            "alpha-grid" => {
                let grid = value
                    .split(',')
                    .map(|tok| parse_num::<f64>(key, tok.trim()))
                    .collect::<Result<Vec<f64>>>()?;
                self.alpha_grid = Some(grid);
            }
            "eps0" => self.eps0 = Some(parse_num::<f64>(key, value)?),
            "eps0-file" => self.eps0_file = path(),
            "retrain-after-ln" => {
                self.retrain_after_ln = match value {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "retrain-after-ln must be true or false, got {value:?}"
                        )))
                    }
                }
            }
            _ => {
                return Err(Error::UnknownName {
                    what: "config key",
                    name: key.to_string(),
                    known: CONFIG_KEYS.join(", "),
                })
            }
        }
        Ok(())
    }

    /// Flat config file: `key = value` per line, `#` comments.
    pub fn read(path: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (lineno, line) in textio::read_data_lines(path)? {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, lineno, "expected 'key = value'"))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        }
        Ok(cfg)
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value {value:?} for {key}")))
}

fn need<'a, T>(opt: &'a Option<T>, key: &'static str) -> Result<&'a T> {
    opt.as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("config key {key} is required")))
}

struct TrialFiles {
    trials: TrialSet,
    enroll: VectorSet,
    test: VectorSet,
}

fn load_trial_files(
    trials: &Path,
    enroll: &Path,
    test: &Path,
    map: Option<&PathBuf>,
    lda: Option<&LdaProjection>,
) -> Result<TrialFiles> {
    let mut trial_set = TrialSet::read_trials(trials)?;
    if let Some(map) = map {
        trial_set.read_enrollments(map)?;
    }
    let mut enroll = VectorSet::read(enroll)?;
    let mut test = VectorSet::read(test)?;
    if let Some(proj) = lda {
        enroll = proj.apply_set(&enroll)?;
        test = proj.apply_set(&test)?;
    }
    Ok(TrialFiles { trials: trial_set, enroll, test })
}

fn ln_vector_map(
    model: &PldaModel,
    cfg: &LnConfig,
    set: &VectorSet,
) -> Result<HashMap<String, DVector<f64>>> {
    let mut out = HashMap::with_capacity(set.len());
    for rec in set.records() {
        out.insert(rec.utt.clone(), length_normalize(model, cfg, &rec.vector)?);
    }
    Ok(out)
}

/// Runs one variant end to end and writes every artifact under `out-dir`:
/// `model.txt`, `epsilon-score.txt`, `scores.txt`, `report.txt`, plus
/// `lda.txt`, `alpha-curve.tsv`, `epsilon-ln.txt`, `model-ln.txt` when the
/// config calls for them. Errors carry the stage that produced them.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<EvalReport> {
    let var = variant(&cfg.variant).stage("config")?;
    if cfg.eps0.is_some() && cfg.eps0_file.is_some() {
        return Err(Error::InvalidArgument("eps0 and eps0-file are mutually exclusive".into()))
            .stage("config");
    }
    let sweep_needed = var.needs_map() && cfg.alpha.is_none();
    if sweep_needed && cfg.dev_trials.is_none() {
        return Err(Error::InvalidArgument(format!(
            "variant {} selects alpha on dev trials: give dev-* keys or pin alpha",
            var.name
        )))
        .stage("config");
    }
    let out_dir = need(&cfg.out_dir, "out-dir").stage("config")?.clone();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e)).stage("config")?;

    let train_path = need(&cfg.train, "train").stage("config")?;
    let mut train_vs = VectorSet::read(train_path).stage("load-train")?;

    let lda = match cfg.lda_dim {
        Some(d) => {
            let proj = (|| {
                let proj = fit_lda(&train_vs.to_labeled()?, d)?;
                proj.save(&out_dir.join("lda.txt"))?;
                train_vs = proj.apply_set(&train_vs)?;
                Ok(proj)
            })()
            .stage("lda")?;
            Some(proj)
        }
        None => None,
    };

    let training = (|| train_ml(&train_vs.to_labeled()?, &TrainConfig::default()))()
        .stage("train")?;
    let model = training.model;
    model.save(&out_dir.join("model.txt")).stage("train")?;

    let eval = load_trial_files(
        need(&cfg.eval_trials, "eval-trials").stage("config")?,
        need(&cfg.eval_enroll, "eval-enroll").stage("config")?,
        need(&cfg.eval_test, "eval-test").stage("config")?,
        cfg.eval_enroll_map.as_ref(),
        lda.as_ref(),
    )
    .stage("load-eval")?;

    let eps_ml = EpsilonEstimate::from_model(&model);
    let eps0 = match &cfg.eps0_file {
        Some(path) => EpsilonEstimate::load(path).stage("shrink")?.epsilon().clone(),
        None => DVector::from_element(model.dim(), cfg.eps0.unwrap_or(1.0)),
    };

    let alpha = if !var.needs_map() {
        None
    } else if let Some(a) = cfg.alpha {
        Some(a)
    } else {
        let dev = load_trial_files(
            need(&cfg.dev_trials, "dev-trials").stage("config")?,
            need(&cfg.dev_enroll, "dev-enroll").stage("config")?,
            need(&cfg.dev_test, "dev-test").stage("config")?,
            cfg.dev_enroll_map.as_ref(),
            lda.as_ref(),
        )
        .stage("load-dev")?;
        let grid = cfg.alpha_grid.clone().unwrap_or_else(|| DEFAULT_ALPHA_GRID.to_vec());
        let curve = sweep_alpha(&model, &eps0, &grid, &dev.trials, &dev.enroll, &dev.test)
            .stage("sweep-alpha")?;
        write_curve(&out_dir.join("alpha-curve.tsv"), &curve).stage("sweep-alpha")?;
        Some(curve.best_alpha)
    };

    let eps_map = match alpha {
        Some(a) => Some(map_epsilon(&eps_ml, a, &eps0).stage("shrink")?),
        None => None,
    };
    let score_eps = if var.score_map { eps_map.clone().expect("map variant") } else { eps_ml.clone() };
    score_eps.save(&out_dir.join("epsilon-score.txt")).stage("shrink")?;

    let scores: ScoreSet = if !var.needs_ln() {
        score_trialset(&model, &score_eps, &eval.trials, &eval.enroll, &eval.test)
            .stage("score")?
    } else {
        let ln_eps = match var.ln {
            LnKind::Ml => eps_ml.clone(),
            LnKind::Map => eps_map.clone().expect("map variant"),
            LnKind::Off => unreachable!(),
        };
        ln_eps.save(&out_dir.join("epsilon-ln.txt")).stage("normalize")?;
        let ln_cfg = LnConfig::new(&ln_eps);

        if cfg.retrain_after_ln {
            // The experiment hook: treat normalized vectors as a fresh
            // observation space and refit everything in it.
            let ln_train = train_vs
                .map_vectors(|x| length_normalize(&model, &ln_cfg, x))
                .stage("normalize")?;
            let ln_enroll = eval
                .enroll
                .map_vectors(|x| length_normalize(&model, &ln_cfg, x))
                .stage("normalize")?;
            let ln_test = eval
                .test
                .map_vectors(|x| length_normalize(&model, &ln_cfg, x))
                .stage("normalize")?;

            let retrained = (|| train_ml(&ln_train.to_labeled()?, &TrainConfig::default()))()
                .stage("retrain")?;
            let model2 = retrained.model;
            model2.save(&out_dir.join("model-ln.txt")).stage("retrain")?;
            let eps2_ml = EpsilonEstimate::from_model(&model2);
            let eps2 = if var.score_map {
                // Alpha stays frozen from the pre-normalization dev sweep.
                map_epsilon(&eps2_ml, alpha.expect("map variant"), &eps0).stage("retrain")?
            } else {
                eps2_ml
            };
            score_trialset(&model2, &eps2, &eval.trials, &ln_enroll, &ln_test).stage("score")?
        } else {
            let enroll = ln_vector_map(&model, &ln_cfg, &eval.enroll).stage("normalize")?;
            let test = ln_vector_map(&model, &ln_cfg, &eval.test).stage("normalize")?;
            score_trialset_latent(&score_eps, &eval.trials, &enroll, &test).stage("score")?
        }
    };
    scores.write(&out_dir.join("scores.txt")).stage("score")?;

    let mut report = compute_eer(&scores).stage("eer")?;
    let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |v| v.to_string());
    report.config = vec![
        ("variant".into(), var.name.into()),
        ("lda_dim".into(), cfg.lda_dim.map_or("-".into(), |d| d.to_string())),
        ("alpha".into(), fmt_opt(alpha)),
        (
            "eps0".into(),
            match &cfg.eps0_file {
                Some(p) => p.display().to_string(),
                None => cfg.eps0.unwrap_or(1.0).to_string(),
            },
        ),
        ("retrain_after_ln".into(), cfg.retrain_after_ln.to_string()),
        ("score_epsilon".into(), score_eps.provenance().to_string()),
        (
            "ln_epsilon".into(),
            match var.ln {
                LnKind::Off => "-".into(),
                LnKind::Ml => "ML_EM".into(),
                LnKind::Map => "MAP".into(),
            },
        ),
    ];
    report.write(&out_dir.join("report.txt")).stage("report")?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_eval, EvalSpec};

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("run.cfg");
        std::fs::write(&path, body).unwrap();
        path
    }

    fn synth_files(dir: &Path, seed: u64) -> crate::synth::SynthEval {
        let unit = synth_eval(&EvalSpec {
            dim: 4,
            train_classes: 40,
            dev_classes: 12,
            eval_classes: 12,
            per_class: 5,
            tail: "gaussian".into(),
            epsilon: None,
            seed,
        })
        .unwrap();
        unit.write(dir).unwrap();
        unit
    }

    fn base_config(data: &Path, out: &Path, variant: &str) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        let pairs = [
            ("variant", variant.to_string()),
            ("train", data.join("train.txt").display().to_string()),
            ("dev-trials", data.join("dev-trials.txt").display().to_string()),
            ("dev-enroll", data.join("dev-enroll.txt").display().to_string()),
            ("dev-test", data.join("dev-test.txt").display().to_string()),
            ("dev-enroll-map", data.join("dev-enroll-map.txt").display().to_string()),
            ("eval-trials", data.join("eval-trials.txt").display().to_string()),
            ("eval-enroll", data.join("eval-enroll.txt").display().to_string()),
            ("eval-test", data.join("eval-test.txt").display().to_string()),
            ("eval-enroll-map", data.join("eval-enroll-map.txt").display().to_string()),
            ("out-dir", out.display().to_string()),
        ];
        for (k, v) in pairs {
            cfg.set(k, &v).unwrap();
        }
        cfg
    }

    #[test]
    fn config_file_round_trip_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            dir.path(),
            "# comment\nvariant = plda-map\nalpha-grid = 0, 100, 500\nlda-dim = 3\nretrain-after-ln = true\n",
        );
        let mut cfg = PipelineConfig::read(&path).unwrap();
        assert_eq!(cfg.variant, "plda-map");
        assert_eq!(cfg.alpha_grid.as_deref(), Some(&[0.0, 100.0, 500.0][..]));
        assert_eq!(cfg.lda_dim, Some(3));
        assert!(cfg.retrain_after_ln);
        // CLI-style override wins.
        cfg.set("lda-dim", "2").unwrap();
        assert_eq!(cfg.lda_dim, Some(2));
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let bad_key = write_config(dir.path(), "mystery = 3\n");
        let err = PipelineConfig::read(&bad_key).err().unwrap();
        assert!(err.to_string().contains("mystery"), "{err}");
        let no_eq = write_config(dir.path(), "variant plda\n");
        assert!(PipelineConfig::read(&no_eq).is_err());
        let mut cfg = PipelineConfig::default();
        assert!(cfg.set("retrain-after-ln", "yes").is_err());
        assert!(cfg.set("alpha", "much").is_err());
    }

    #[test]
    fn variant_table_lookup() {
        assert_eq!(VARIANTS.len(), 6);
        for v in VARIANTS {
            assert_eq!(variant(v.name).unwrap().name, v.name);
        }
        assert!(variant("plda-ultra").is_err());
    }

    #[test]
    fn baseline_run_writes_artifacts_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        synth_files(dir.path(), 31);
        let out = dir.path().join("out");
        let cfg = base_config(dir.path(), &out, "plda");
        let report = run_pipeline(&cfg).unwrap();
        assert!(report.eer >= 0.0 && report.eer <= 0.5);
        for f in ["model.txt", "epsilon-score.txt", "scores.txt", "report.txt"] {
            assert!(out.join(f).exists(), "missing {f}");
        }
        // No sweep for the baseline variant.
        assert!(!out.join("alpha-curve.tsv").exists());

        let bytes = std::fs::read(out.join("scores.txt")).unwrap();
        let report2 = run_pipeline(&cfg).unwrap();
        assert_eq!(report.eer, report2.eer);
        assert_eq!(bytes, std::fs::read(out.join("scores.txt")).unwrap());
    }

    #[test]
    fn map_variant_sweeps_on_dev_and_echoes_alpha() {
        let dir = tempfile::tempdir().unwrap();
        synth_files(dir.path(), 32);
        let out = dir.path().join("out");
        let mut cfg = base_config(dir.path(), &out, "plda-map");
        cfg.set("alpha-grid", "0,50,200").unwrap();
        let report = run_pipeline(&cfg).unwrap();
        assert!(out.join("alpha-curve.tsv").exists());
        let echo: std::collections::HashMap<_, _> = report.config.iter().cloned().collect();
        assert_eq!(echo["variant"], "plda-map");
        assert_ne!(echo["alpha"], "-");
        assert_eq!(echo["score_epsilon"], "MAP");
    }

    #[test]
    fn alpha_zero_map_matches_baseline_scores() {
        let dir = tempfile::tempdir().unwrap();
        synth_files(dir.path(), 33);
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        let cfg_a = base_config(dir.path(), &out_a, "plda");
        let mut cfg_b = base_config(dir.path(), &out_b, "plda-map");
        cfg_b.set("alpha", "0").unwrap();
        let ra = run_pipeline(&cfg_a).unwrap();
        let rb = run_pipeline(&cfg_b).unwrap();
        assert_eq!(ra.eer, rb.eer);
        assert_eq!(ra.threshold, rb.threshold);
        assert_eq!(
            std::fs::read(out_a.join("scores.txt")).unwrap(),
            std::fs::read(out_b.join("scores.txt")).unwrap()
        );
    }

    #[test]
    fn ln_variants_run_and_retrain_writes_second_model() {
        let dir = tempfile::tempdir().unwrap();
        synth_files(dir.path(), 34);
        let out = dir.path().join("out");
        let mut cfg = base_config(dir.path(), &out, "plda+ln");
        let report = run_pipeline(&cfg).unwrap();
        assert!(out.join("epsilon-ln.txt").exists());
        assert!(!out.join("model-ln.txt").exists());
        assert!(report.eer <= 0.5);

        cfg.set("retrain-after-ln", "true").unwrap();
        cfg.set("out-dir", &dir.path().join("out2").display().to_string()).unwrap();
        run_pipeline(&cfg).unwrap();
        assert!(dir.path().join("out2/model-ln.txt").exists());
    }

    #[test]
    fn missing_trial_id_errors_with_stage() {
        let dir = tempfile::tempdir().unwrap();
        synth_files(dir.path(), 35);
        // Append a trial whose test utterance does not exist.
        let trials = dir.path().join("eval-trials.txt");
        let mut body = std::fs::read_to_string(&trials).unwrap();
        body.push_str("ev0001 ghost-000 nontarget\n");
        std::fs::write(&trials, body).unwrap();

        let out = dir.path().join("out");
        let cfg = base_config(dir.path(), &out, "plda");
        let err = run_pipeline(&cfg).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("score"), "{msg}");
        let mut chain = String::new();
        let mut src: Option<&dyn std::error::Error> = std::error::Error::source(&err);
        while let Some(e) = src {
            chain.push_str(&e.to_string());
            src = e.source();
        }
        assert!(chain.contains("ghost-000"), "{chain}");
    }

    #[test]
    fn map_variant_without_dev_or_alpha_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.set("variant", "plda-map").unwrap();
        cfg.set("train", "x.txt").unwrap();
        cfg.set("out-dir", &dir.path().join("o").display().to_string()).unwrap();
        let err = run_pipeline(&cfg).err().unwrap();
        assert!(err.to_string().contains("config"), "{err}");
    }
}
