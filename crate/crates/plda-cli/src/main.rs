//! Command-line front end. One subcommand per pipeline stage plus the
//! end-to-end `pipeline` runner and the data generators.
//!
//! Exit codes: 0 success, 1 data or numeric error (single-line diagnostic on
//! stderr), 2 usage error.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use plda::data::VectorSet;
use plda::eer::compute_eer;
use plda::nalgebra::DVector;
use plda::lda::{fit_lda, LdaProjection};
use plda::lnorm::{length_normalize, LnConfig};
use plda::model::PldaModel;
use plda::pipeline::{run_pipeline, PipelineConfig};
use plda::score::{score_trialset, score_trialset_latent, ScoreSet, TrialSet};
use plda::shrink::{map_epsilon, EpsilonEstimate, Provenance};
use plda::sim::{variance_of_variance, write_sim_table, SimSpec};
use plda::sweep::{sweep_alpha, write_curve, DEFAULT_ALPHA_GRID};
use plda::synth::{synth_eval, EvalSpec};
use plda::train::{train_ml, TrainConfig};
use plda::{Error, Result};

#[derive(Parser)]
#[command(name = "plda", version, about = "Two-covariance PLDA verification toolkit")]
struct Cli {
    /// More log output (-v info, -vv debug); errors always go to stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the two-covariance model on a labeled vector file
    Train(TrainArgs),
    /// Fit a Fisher LDA projection on a labeled vector file
    LdaFit(LdaFitArgs),
    /// Apply a saved LDA projection to a vector file
    LdaApply(LdaApplyArgs),
    /// Shrink an epsilon estimate toward a prior center
    Shrink(ShrinkArgs),
    /// Score a trial list
    Score(ScoreArgs),
    /// Length-normalize vectors onto the model's concentration ellipse
    Lnorm(LnormArgs),
    /// Equal error rate of a score file against labeled trials
    Eer(EerArgs),
    /// Pick the prior weight alpha on development trials
    SweepAlpha(SweepAlphaArgs),
    /// Run a full train/shrink/normalize/score/report pipeline
    Pipeline(PipelineArgs),
    /// Variance-of-variance Monte Carlo table
    Simulate(SimulateArgs),
    /// Generate a synthetic train/dev/eval experiment
    Synth(SynthArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled vector file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    /// Also save the EM epsilon as an estimate file.
    #[arg(long)]
    eps_out: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Stop when the per-class log-likelihood gain falls below this.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(Args)]
struct LdaFitArgs {
    /// Labeled vector file.
    #[arg(long)]
    data: PathBuf,
    /// Output dimension; equal to the input dimension means pure rotation.
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LdaApplyArgs {
    #[arg(long)]
    lda: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShrinkArgs {
    /// Epsilon estimate file to shrink.
    #[arg(long)]
    eps: PathBuf,
    /// Prior weight in virtual samples; 0 leaves the estimate untouched.
    #[arg(long)]
    alpha: f64,
    /// Scalar prior center, broadcast over dimensions.
    #[arg(long, conflicts_with = "eps0_file")]
    eps0: Option<f64>,
    /// Per-dimension prior center from an epsilon file.
    #[arg(long)]
    eps0_file: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Needed unless --latent scoring with an explicit --eps.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    trials: PathBuf,
    /// Multi-session enrollment map file.
    #[arg(long)]
    enroll_map: Option<PathBuf>,
    #[arg(long)]
    enroll: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Score with this epsilon estimate instead of the model's own.
    #[arg(long)]
    eps: Option<PathBuf>,
    /// Inputs are already latent (e.g. lnorm output); skip the model
    /// transform.
    #[arg(long)]
    latent: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LnormArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Epsilon estimate for the ellipse; default is the model's own.
    #[arg(long)]
    eps: Option<PathBuf>,
    /// MAP-corrected normalization: requires --eps with MAP provenance.
    #[arg(long, requires = "eps")]
    map: bool,
    /// Classic unit-sphere normalization (lambda = 1 everywhere).
    #[arg(long, conflicts_with_all = ["map", "eps"])]
    plain_l2: bool,
}

#[derive(Args)]
struct EerArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Labeled trial file; provides the target/nontarget labels.
    #[arg(long)]
    trials: PathBuf,
    /// Also write the full report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SweepAlphaArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated alpha grid; must contain 0.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long, conflicts_with = "eps0_file")]
    eps0: Option<f64>,
    #[arg(long)]
    eps0_file: Option<PathBuf>,
    #[arg(long)]
    trials: PathBuf,
    #[arg(long)]
    enroll_map: Option<PathBuf>,
    #[arg(long)]
    enroll: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// TSV curve output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set alpha=500. Repeatable; wins over
    /// the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Sampler name: gaussian, laplacian or student.
    #[arg(long)]
    dist: String,
    /// Comma-separated sample counts.
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    true_variance: f64,
    /// Take batch variances about the known mean 0 instead of the sample
    /// mean.
    #[arg(long)]
    known_mean: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training classes.
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    per_class: usize,
    #[arg(long)]
    dim: usize,
    /// Class-mean tail: gauss or student.
    #[arg(long, default_value = "gauss", value_parser = ["gauss", "student"])]
    tail: String,
    #[arg(long, default_value_t = 12)]
    dev_classes: usize,
    #[arg(long, default_value_t = 12)]
    eval_classes: usize,
    /// Use this flat true epsilon instead of the heavy-tailed profile.
    #[arg(long)]
    flat_eps: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let default = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format_timestamp(None)
        .init();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {}", render(&e));
        std::process::exit(1);
    }
}

/// Flattens the error chain into one line.
fn render(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        src = s.source();
    }
    msg
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::LdaFit(a) => cmd_lda_fit(a),
        Command::LdaApply(a) => cmd_lda_apply(a),
        Command::Shrink(a) => cmd_shrink(a),
        Command::Score(a) => cmd_score(a),
        Command::Lnorm(a) => cmd_lnorm(a),
        Command::Eer(a) => cmd_eer(a),
        Command::SweepAlpha(a) => cmd_sweep_alpha(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let data = VectorSet::read(&a.data)?.to_labeled()?;
    let cfg = TrainConfig { max_iters: a.max_iters, tol: a.tol, ..TrainConfig::default() };
    let training = train_ml(&data, &cfg)?;
    log::info!(
        "EM finished after {} iterations (converged: {}), final loglik {}",
        training.iterations,
        training.converged,
        training.loglik.last().copied().unwrap_or(f64::NAN)
    );
    training.model.save(&a.model_out)?;
    if let Some(path) = &a.eps_out {
        EpsilonEstimate::from_model(&training.model).save(path)?;
    }
    Ok(())
}

fn cmd_lda_fit(a: LdaFitArgs) -> Result<()> {
    let data = VectorSet::read(&a.data)?.to_labeled()?;
    fit_lda(&data, a.dim)?.save(&a.out)
}

fn cmd_lda_apply(a: LdaApplyArgs) -> Result<()> {
    let proj = LdaProjection::load(&a.lda)?;
    let set = VectorSet::read(&a.input)?;
    proj.apply_set(&set)?.write(&a.out)
}

fn cmd_shrink(a: ShrinkArgs) -> Result<()> {
    let estimate = EpsilonEstimate::load(&a.eps)?;
    // Zero prior weight is the identity: pass the estimate through unchanged
    // (same provenance, same bytes) instead of relabeling it as MAP.
    if a.alpha == 0.0 {
        return estimate.save(&a.out);
    }
    let eps0 = match &a.eps0_file {
        Some(path) => EpsilonEstimate::load(path)?.epsilon().clone(),
        None => DVector::from_element(estimate.dim(), a.eps0.unwrap_or(1.0)),
    };
    map_epsilon(&estimate, a.alpha, &eps0)?.save(&a.out)
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let mut trials = TrialSet::read_trials(&a.trials)?;
    if let Some(map) = &a.enroll_map {
        trials.read_enrollments(map)?;
    }
    let enroll = VectorSet::read(&a.enroll)?;
    let test = VectorSet::read(&a.test)?;

    let scores: ScoreSet = if a.latent {
        let eps_path = a.eps.as_ref().ok_or_else(|| {
            Error::InvalidArgument("--latent scoring needs an explicit --eps".into())
        })?;
        let eps = EpsilonEstimate::load(eps_path)?;
        let to_map = |set: &VectorSet| -> HashMap<String, DVector<f64>> {
            set.records().iter().map(|r| (r.utt.clone(), r.vector.clone())).collect()
        };
        score_trialset_latent(&eps, &trials, &to_map(&enroll), &to_map(&test))?
    } else {
        let model_path = a
            .model
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--model is required".into()))?;
        let model = PldaModel::load(model_path)?;
        let eps = match &a.eps {
            Some(path) => EpsilonEstimate::load(path)?,
            None => EpsilonEstimate::from_model(&model),
        };
        score_trialset(&model, &eps, &trials, &enroll, &test)?
    };
    scores.write(&a.out)
}

fn cmd_lnorm(a: LnormArgs) -> Result<()> {
    let model = PldaModel::load(&a.model)?;
    let cfg = if a.plain_l2 {
        LnConfig::from_epsilon(&DVector::zeros(model.dim()))?
    } else {
        match &a.eps {
            Some(path) => {
                let est = EpsilonEstimate::load(path)?;
                if a.map && est.provenance() != Provenance::Map {
                    return Err(Error::InvalidArgument(format!(
                        "--map wants a MAP epsilon estimate, {} has provenance {}",
                        path.display(),
                        est.provenance()
                    )));
                }
                LnConfig::new(&est)
            }
            None => LnConfig::new(&EpsilonEstimate::from_model(&model)),
        }
    };
    let set = VectorSet::read(&a.input)?;
    set.map_vectors(|x| length_normalize(&model, &cfg, x))?.write(&a.out)
}

fn cmd_eer(a: EerArgs) -> Result<()> {
    let mut scores = ScoreSet::read(&a.scores)?;
    let trials = TrialSet::read_trials(&a.trials)?;
    scores.attach_labels(&trials)?;
    let report = compute_eer(&scores)?;
    println!("{}", report.eer);
    if let Some(path) = &a.report {
        report.write(path)?;
    }
    Ok(())
}

fn cmd_sweep_alpha(a: SweepAlphaArgs) -> Result<()> {
    let model = PldaModel::load(&a.model)?;
    let mut trials = TrialSet::read_trials(&a.trials)?;
    if let Some(map) = &a.enroll_map {
        trials.read_enrollments(map)?;
    }
    let enroll = VectorSet::read(&a.enroll)?;
    let test = VectorSet::read(&a.test)?;
    let eps0 = match &a.eps0_file {
        Some(path) => EpsilonEstimate::load(path)?.epsilon().clone(),
        None => DVector::from_element(model.dim(), a.eps0.unwrap_or(1.0)),
    };
    let grid = a.grid.clone().unwrap_or_else(|| DEFAULT_ALPHA_GRID.to_vec());
    let curve = sweep_alpha(&model, &eps0, &grid, &trials, &enroll, &test)?;
    write_curve(&a.out, &curve)?;
    println!("{}", curve.best_alpha);
    Ok(())
}

fn cmd_pipeline(a: PipelineArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => PipelineConfig::read(path)?,
        None => PipelineConfig::default(),
    };
    for pair in &a.set {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("--set wants KEY=VALUE, got {pair:?}"))
        })?;
        cfg.set(key.trim(), value.trim())?;
    }
    let report = run_pipeline(&cfg)?;
    print!("{}", report.to_text());
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let spec = SimSpec {
        distribution: a.dist.clone(),
        true_variance: a.true_variance,
        n_grid: a.n_grid.clone(),
        repetitions: a.reps,
        seed: a.seed,
        known_mean: a.known_mean,
    };
    let rows = variance_of_variance(&spec)?;
    write_sim_table(&a.out, &rows)
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let tail = match a.tail.as_str() {
        "gauss" => "gaussian",
        other => other,
    };
    let spec = EvalSpec {
        dim: a.dim,
        train_classes: a.classes,
        dev_classes: a.dev_classes,
        eval_classes: a.eval_classes,
        per_class: a.per_class,
        tail: tail.into(),
        epsilon: a.flat_eps.map(|e| DVector::from_element(a.dim, e)),
        seed: a.seed,
    };
    let unit = synth_eval(&spec)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    unit.write(&a.out_dir)
}
