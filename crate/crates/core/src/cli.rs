//! Command-line front end.
//!
//! ```text
//! eyegaze [--config FILE] <synth|fit|train|predict|eval|curves> [FLAGS]
//! ```
//!
//! A config file holds flat `key = value` lines whose keys are long flag
//! names without the dashes (`people = 20`, `solver = cg`). Boolean flags
//! take `true` or `false`. Flags given on the command line win over the
//! file, which wins over built-in defaults.
//!
//! Exit codes: 0 success, 1 runtime or data failure, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::dataset::{read_records, write_records, FitSummary, SampleRecord};
use crate::error::Error;
use crate::evalkit::{
    default_thresholds, eyelid_registration_error, iris_localization_curve, reports_to_csv, run_cross_population,
    run_personalized, ExperimentConfig, Method, SvrChoice,
};
use crate::eyeball::{fit, JacobianMode, Solver, SolverConfig};
use crate::features::{FeatureConfig, FeatureSet};
use crate::geometry::{angular_error_deg, GazeAngles, Point2};
use crate::svr::{default_grid, tune, GazeRegressor, Kernel, RegressorParams, SvrParams};
use crate::synth::{generate_dataset, DatasetSpec, GazeRange, NoiseSpec};

#[derive(Debug, Parser)]
#[command(name = "eyegaze", version, about = "Landmark-based gaze estimation toolkit")]
#[command(args_override_self = true)]
struct Cli {
    /// Flat key=value file supplying default flag values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic landmark dataset.
    Synth(SynthArgs),
    /// Fit the eyeball model to every record.
    Fit(FitArgs),
    /// Train a pitch/yaw SVR pair on landmark features.
    Train(TrainArgs),
    /// Append regressor gaze estimates to every record.
    Predict(PredictArgs),
    /// Run the per-person calibration sweep or a cross-population test.
    Eval(EvalArgs),
    /// Iris localization success curve of predicted against true landmarks.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    people: usize,
    #[arg(long, default_value_t = 100)]
    per_person: usize,
    /// Noise difficulty in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    difficulty: f64,
    /// Per-landmark jitter at difficulty 1, pixels.
    #[arg(long, default_value_t = 1.0)]
    jitter: f64,
    /// Global translation at difficulty 1, pixels.
    #[arg(long, default_value_t = 10.0)]
    translation: f64,
    /// Global rotation at difficulty 1, radians.
    #[arg(long, default_value_t = 0.1)]
    rotation: f64,
    /// Global relative scale change at difficulty 1.
    #[arg(long, default_value_t = 0.1)]
    scale: f64,
    /// Half-width of the pitch box, degrees.
    #[arg(long, default_value_t = 35.0)]
    pitch_range: f64,
    /// Half-width of the yaw box, degrees.
    #[arg(long, default_value_t = 35.0)]
    yaw_range: f64,
    #[arg(long, default_value_t = 0)]
    first_person_id: u64,
}

#[derive(Debug, Args, Clone)]
struct SolverArgs {
    /// lm or cg.
    #[arg(long, default_value = "lm")]
    solver: String,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol_grad: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol_step: f64,
    #[arg(long, default_value_t = 0.01)]
    delta_min: f64,
    #[arg(long, default_value_t = 1.2)]
    delta_max: f64,
}

#[derive(Debug, Args, Clone)]
struct FeatureArgs {
    /// pupil, pcec, iris, eyelid-iris or full.
    #[arg(long, default_value = "full")]
    features: String,
    #[arg(long)]
    rotation_normalize: bool,
}

#[derive(Debug, Args, Clone)]
struct SvrArgs {
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// rbf or linear.
    #[arg(long, default_value = "rbf")]
    kernel: String,
    #[arg(long, default_value_t = 1.0 / 36.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-3)]
    svr_tol: f64,
    /// Grid-search C, epsilon and the kernel by cross-validation.
    #[arg(long)]
    tune: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Train against the optical instead of the visual axis.
    #[arg(long)]
    optical: bool,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    svr: SvrArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Feature set the caller expects; must match the model.
    #[arg(long)]
    features: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// model-fit or svr-landmarks.
    #[arg(long, default_value = "model-fit")]
    method: String,
    /// Comma-separated calibration sizes.
    #[arg(long, default_value = "0,10,20,50,100")]
    k: String,
    /// Held-out population; switches to a cross-population run.
    #[arg(long)]
    test: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    svr: SvrArgs,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    /// Records holding predicted landmarks.
    #[arg(long)]
    pred: PathBuf,
    /// Records holding true landmarks, matched by id.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also report eyelid registration error normalized by this distance, pixels.
    #[arg(long)]
    interocular: Option<f64>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match splice_config(args) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a, stdout),
        Command::Fit(a) => cmd_fit(a, stdout, stderr),
        Command::Train(a) => cmd_train(a, stdout),
        Command::Predict(a) => cmd_predict(a, stdout, stderr),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::Curves(a) => cmd_curves(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

/// Expands `--config FILE` into flags placed right after the subcommand
/// name, ahead of the user's own flags so those override it.
fn splice_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(path) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            config = Some(OsString::from(path));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", Path::new(&path).display()))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", n + 1))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        match value {
            "true" => extra.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => extra.push(OsString::from(format!("--{key}={value}"))),
        }
    }
    // subcommand is the first positional after the program name
    let sub = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-'));
    match sub {
        Some(p) => {
            let at = p + 2;
            rest.splice(at..at, extra);
        }
        None => rest.extend(extra),
    }
    Ok(rest)
}

fn create_output(path: &Path) -> Outcome<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn open_input(path: &Path) -> Outcome<File> {
    File::open(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_err(e: std::io::Error) -> Failure {
    Failure::Runtime(format!("write failed: {e}"))
}

fn solver_config(a: &SolverArgs) -> Outcome<SolverConfig> {
    let solver: Solver = a.solver.parse().map_err(|e: Error| usage(e.to_string()))?;
    let cfg = SolverConfig {
        solver,
        max_iters: a.max_iters,
        tol_grad: a.tol_grad,
        tol_step: a.tol_step,
        delta_min: a.delta_min,
        delta_max: a.delta_max,
        jacobian: JacobianMode::Analytic,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    if cfg.max_iters == 0 {
        return Err(usage("--max-iters must be positive"));
    }
    Ok(cfg)
}

fn feature_config(a: &FeatureArgs) -> Outcome<FeatureConfig> {
    let set: FeatureSet = a.features.parse().map_err(|e: Error| usage(e.to_string()))?;
    Ok(FeatureConfig {
        set,
        rotation_normalize: a.rotation_normalize,
    })
}

fn svr_params(a: &SvrArgs) -> Outcome<SvrParams> {
    let kernel = match a.kernel.as_str() {
        "rbf" => Kernel::Rbf { gamma: a.gamma },
        "linear" => Kernel::Linear,
        other => return Err(usage(format!("unknown kernel '{other}' (expected rbf or linear)"))),
    };
    let p = SvrParams {
        c: a.c,
        epsilon: a.epsilon,
        kernel,
        tol: a.svr_tol,
        ..SvrParams::default()
    };
    p.validate().map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

fn svr_choice(a: &SvrArgs) -> Outcome<SvrChoice> {
    let base = svr_params(a)?;
    Ok(if a.tune {
        SvrChoice::Tune {
            grid: default_grid(),
            base,
        }
    } else {
        SvrChoice::Fixed(RegressorParams::shared(base))
    })
}

/// Reads a dataset, warning about every malformed line.
fn load(path: &Path, stderr: &mut dyn Write) -> Outcome<Vec<SampleRecord>> {
    let outcome = read_records(BufReader::new(open_input(path)?))?;
    for (line, e) in &outcome.skipped {
        let _ = writeln!(stderr, "warning: {}:{line}: skipped: {e}", path.display());
    }
    if outcome.records.is_empty() {
        return Err(Failure::Runtime(format!(
            "{}: no usable records ({} malformed)",
            path.display(),
            outcome.skipped.len()
        )));
    }
    if !outcome.skipped.is_empty() {
        let _ = writeln!(stderr, "warning: skipped {} malformed record(s)", outcome.skipped.len());
    }
    Ok(outcome.records)
}

fn mean_error_against(records: &[SampleRecord], est: impl Fn(&SampleRecord) -> Option<GazeAngles>, truth: impl Fn(&SampleRecord) -> Option<GazeAngles>) -> Option<(f64, usize)> {
    let errs: Vec<f64> = records
        .iter()
        .filter_map(|r| Some(angular_error_deg(est(r)?, truth(r)?)))
        .collect();
    (!errs.is_empty()).then(|| (errs.iter().sum::<f64>() / errs.len() as f64, errs.len()))
}

fn cmd_synth(a: SynthArgs, stdout: &mut dyn Write) -> Outcome<()> {
    if a.people == 0 || a.per_person == 0 {
        return Err(usage("--people and --per-person must be positive"));
    }
    let noise = NoiseSpec {
        difficulty: a.difficulty,
        jitter_px: a.jitter,
        translation_px: a.translation,
        rotation_rad: a.rotation,
        scale: a.scale,
        seed: a.seed,
    };
    noise.validate().map_err(|e| usage(e.to_string()))?;
    let spec = DatasetSpec {
        gaze_range: GazeRange {
            pitch: a.pitch_range.to_radians(),
            yaw: a.yaw_range.to_radians(),
        },
        first_person_id: a.first_person_id,
        ..DatasetSpec::new(a.people, a.per_person, noise, a.seed)
    };
    let out = create_output(&a.out)?;
    let records = generate_dataset(&spec).map_err(|e| usage(e.to_string()))?;
    write_records(out, &records)?;
    let _ = writeln!(stdout, "wrote {} records to {} (seed {})", records.len(), a.out.display(), a.seed);
    Ok(())
}

fn cmd_fit(a: FitArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome<()> {
    let cfg = solver_config(&a.solver)?;
    let records = load(&a.input, stderr)?;
    let out = create_output(&a.out)?;
    let results: Vec<_> = records
        .par_iter()
        .map(|r| r.landmarks.observation().and_then(|o| fit(&o, &cfg)))
        .collect();
    let mut fitted = Vec::with_capacity(records.len());
    for (r, res) in records.into_iter().zip(results) {
        match res {
            Ok(f) => fitted.push(SampleRecord {
                fit: Some(FitSummary::from(&f)),
                ..r
            }),
            Err(e) => {
                let _ = writeln!(stderr, "warning: record {}: skipped: {e}", r.id);
            }
        }
    }
    if fitted.is_empty() {
        return Err(Failure::Runtime("no record could be fitted".into()));
    }
    write_records(out, &fitted)?;
    let converged = fitted.iter().filter(|r| r.fit.as_ref().is_some_and(|f| f.converged)).count();
    let _ = write!(stdout, "fitted {} records ({converged} converged)", fitted.len());
    match mean_error_against(&fitted, |r| r.fit.as_ref().map(|f| f.gaze), |r| r.gaze_optical) {
        Some((e, _)) => writeln!(stdout, "; mean angular error vs optical truth: {e:.6} deg"),
        None => writeln!(stdout),
    }
    .map_err(write_err)?;
    Ok(())
}

fn cmd_train(a: TrainArgs, stdout: &mut dyn Write) -> Outcome<()> {
    let features = feature_config(&a.features)?;
    let choice = svr_choice(&a.svr)?;
    let records = load(&a.input, &mut std::io::sink())?;
    let mut out = create_output(&a.model)?;
    let targets = records
        .iter()
        .map(|r| {
            if a.optical { r.gaze_optical } else { r.gaze_visual }
                .ok_or_else(|| Failure::Runtime(format!("record {} has no gaze label", r.id)))
        })
        .collect::<Outcome<Vec<_>>>()?;
    let x = records
        .iter()
        .map(|r| crate::features::build_features_with(&r.landmarks, &features).map(|f| f.into_vec()))
        .collect::<crate::Result<Vec<_>>>()?;
    let params = match choice {
        SvrChoice::Fixed(p) => p,
        SvrChoice::Tune { grid, base } => {
            let pitch: Vec<f64> = targets.iter().map(|g| g.pitch()).collect();
            let yaw: Vec<f64> = targets.iter().map(|g| g.yaw()).collect();
            RegressorParams {
                pitch: tune(&x, &pitch, &grid, &base)?.apply(&base),
                yaw: tune(&x, &yaw, &grid, &base)?.apply(&base),
            }
        }
    };
    let model = GazeRegressor::train_on_features(&x, &targets, features, &params)?;
    out.write_all(model.to_text().as_bytes()).map_err(write_err)?;
    out.flush().map_err(write_err)?;
    let _ = writeln!(
        stdout,
        "trained on {} records with {} features; support vectors: pitch {}, yaw {}",
        records.len(),
        features.set,
        model.pitch.n_support(),
        model.yaw.n_support()
    );
    Ok(())
}

fn cmd_predict(a: PredictArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome<()> {
    let requested = a
        .features
        .as_deref()
        .map(|s| s.parse::<FeatureSet>().map_err(|e| usage(e.to_string())))
        .transpose()?;
    let text = std::fs::read_to_string(&a.model).map_err(|e| usage(format!("cannot read {}: {e}", a.model.display())))?;
    let model = GazeRegressor::from_text(&text)?;
    if let Some(set) = requested {
        if set != model.features.set {
            return Err(Failure::Runtime(format!(
                "model was trained on '{}' features but '{set}' was requested",
                model.features.set
            )));
        }
    }
    let records = load(&a.input, stderr)?;
    let out = create_output(&a.out)?;
    let preds = records
        .par_iter()
        .map(|r| model.predict(&r.landmarks))
        .collect::<crate::Result<Vec<_>>>()?;
    let records: Vec<SampleRecord> = records
        .into_iter()
        .zip(preds)
        .map(|(r, p)| SampleRecord { prediction: Some(p), ..r })
        .collect();
    write_records(out, &records)?;
    let _ = write!(stdout, "predicted {} records", records.len());
    match mean_error_against(&records, |r| r.prediction, |r| r.gaze_visual) {
        Some((e, _)) => writeln!(stdout, "; mean angular error vs visual truth: {e:.6} deg"),
        None => writeln!(stdout),
    }
    .map_err(write_err)?;
    Ok(())
}

fn parse_ks(s: &str) -> Outcome<Vec<usize>> {
    let ks = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| usage(format!("bad --k entry '{t}'"))))
        .collect::<Outcome<Vec<_>>>()?;
    if ks.is_empty() {
        return Err(usage("--k needs at least one value"));
    }
    Ok(ks)
}

fn cmd_eval(a: EvalArgs, stdout: &mut dyn Write) -> Outcome<()> {
    let method: Method = a.method.parse().map_err(|e: Error| usage(e.to_string()))?;
    let ks = parse_ks(&a.k)?;
    let cfg = ExperimentConfig {
        solver: solver_config(&a.solver)?,
        features: feature_config(&a.features)?,
        svr: svr_choice(&a.svr)?,
    };
    let records = load(&a.input, &mut std::io::sink())?;
    let test = a.test.as_deref().map(|p| load(p, &mut std::io::sink())).transpose()?;
    let mut out = create_output(&a.out)?;
    let reports = match &test {
        Some(t) => vec![run_cross_population(&records, t, method, &cfg)?],
        None => run_personalized(&records, method, &ks, &cfg)?,
    };
    out.write_all(reports_to_csv(&reports).as_bytes()).map_err(write_err)?;
    out.flush().map_err(write_err)?;
    for r in &reports {
        let _ = writeln!(
            stdout,
            "{} k={}: pooled mean error {:.4} deg over {} samples",
            r.method, r.k, r.pooled_mean_deg, r.n_eval
        );
    }
    Ok(())
}

/// Closed eye outline: inner corner, upper lid, outer corner, lower lid, inner corner.
fn eyelid_outline(lm: &crate::features::EyeLandmarks) -> Vec<Point2> {
    let mut pts = vec![lm.inner_corner];
    pts.extend_from_slice(&lm.eyelid[..4]);
    pts.push(lm.outer_corner);
    pts.extend_from_slice(&lm.eyelid[4..]);
    pts.push(lm.inner_corner);
    pts
}

fn cmd_curves(a: CurvesArgs, stdout: &mut dyn Write) -> Outcome<()> {
    if let Some(d) = a.interocular {
        if !(d > 0.0 && d.is_finite()) {
            return Err(usage("--interocular must be positive"));
        }
    }
    let pred = load(&a.pred, &mut std::io::sink())?;
    let truth = load(&a.truth, &mut std::io::sink())?;
    let mut out = create_output(&a.out)?;
    let by_id: std::collections::HashMap<u64, &SampleRecord> = truth.iter().map(|r| (r.id, r)).collect();
    let pairs: Vec<(&SampleRecord, &SampleRecord)> = pred
        .iter()
        .filter_map(|p| by_id.get(&p.id).map(|t| (p, *t)))
        .collect();
    if pairs.is_empty() {
        return Err(Failure::Runtime("no record ids in common".into()));
    }
    let p: Vec<Point2> = pairs.iter().map(|(p, _)| p.landmarks.iris_center).collect();
    let t: Vec<Point2> = pairs.iter().map(|(_, t)| t.landmarks.iris_center).collect();
    let w: Vec<f64> = pairs.iter().map(|(_, t)| t.landmarks.eye_width()).collect();
    let curve = iris_localization_curve(&p, &t, &w, &default_thresholds())?;
    out.write_all(curve.to_csv().as_bytes()).map_err(write_err)?;
    out.flush().map_err(write_err)?;
    let at = |x: f64| curve.points().iter().find(|q| (q.0 - x).abs() < 1e-12).map_or(0.0, |q| q.1);
    let _ = writeln!(
        stdout,
        "{} matched records; success at 0.05: {:.4}, at 0.10: {:.4}",
        pairs.len(),
        at(0.05),
        at(0.10)
    );
    if let Some(d) = a.interocular {
        let mut total = 0.0;
        for (pr, tr) in &pairs {
            total += eyelid_registration_error(&pr.landmarks.eyelid, &eyelid_outline(&tr.landmarks), d)?;
        }
        let _ = writeln!(stdout, "mean eyelid registration error: {:.6}", total / pairs.len() as f64);
    }
    Ok(())
}
