//! The `spa` command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage or
//! configuration errors. `--config FILE` reads `key=value` lines whose keys
//! are the long flag names of the subcommand; flags given on the command line
//! win. `SPA_THREADS` caps the worker pool.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{load_dataset, load_feature_vector, render_feature_vector, write_dataset};
use crate::error::{Result, SpaError};
use crate::evaluate::{
    balanced_accuracy, cross_validate, default_tolerance, match_features, recovery_sweep,
    sensitivity, specificity, CvConfig, Method, MethodSelector, SvmConfig, SweepConfig,
};
use crate::simulate::{
    generate_dataset, load_ground_truth, write_ground_truth, CorrelationKind, SimulationConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "spa",
    version,
    about = "Sparse feature selection for labeled spectra"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Write per-stage timings to standard error.
    #[arg(long, global = true)]
    pub progress: bool,

    /// Read further flags from a key=value file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset and its ground-truth sidecar.
    Simulate(SimulateArgs),
    /// Select features from a dataset.
    Select(SelectArgs),
    /// Repeated K-fold cross-validation of a selection method.
    Crossval(CrossvalArgs),
    /// Score a feature file against a ground-truth sidecar.
    Score(ScoreArgs),
    /// Support recovery over a range of sample sizes on simulated data.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CovArg {
    Ds1,
    Ds2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Spa,
    Lasso,
    L1svm,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Spa => Method::Spa,
            MethodArg::Lasso => Method::Lasso,
            MethodArg::L1svm => Method::L1Svm,
        }
    }
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be non-negative, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn odd_window(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 3 && v % 2 == 1 => Ok(v),
        Ok(v) => Err(format!("window must be odd and at least 3, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

/// `A..B` (inclusive) or a single value.
fn n_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if a == 0 || a > b {
        return Err(format!("invalid range {s:?}"));
    }
    Ok((a, b))
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    #[arg(long, default_value_t = 8192)]
    pub d: usize,
    #[arg(long, default_value_t = 200)]
    pub peaks: usize,
    /// Gaussian standard deviation of each peak, in channels.
    #[arg(long, default_value_t = 10.0, value_parser = positive_f64)]
    pub width: f64,
    #[arg(long, default_value_t = 5)]
    pub support: usize,
    #[arg(long, value_enum, default_value_t = CovArg::Ds1)]
    pub cov: CovArg,
    #[arg(long, default_value_t = 0.1, value_parser = non_negative_f64)]
    pub noise: f64,
}

impl SimArgs {
    fn config(&self, n: usize, seed: u64) -> SimulationConfig {
        SimulationConfig {
            d: self.d,
            num_peaks: self.peaks,
            peak_width: self.width,
            support_size: self.support,
            correlation: match self.cov {
                CovArg::Ds1 => CorrelationKind::Ds1,
                CovArg::Ds2 => CorrelationKind::Ds2,
            },
            noise_sigma: self.noise,
            n,
            seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = 350)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar; defaults to the output name with `.truth.csv`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Spa)]
    pub method: MethodArg,
    /// Fixed sparsity or penalty parameter.
    #[arg(long, value_parser = positive_f64, conflicts_with = "target_features")]
    pub lambda: Option<f64>,
    /// Tune lambda until exactly this many features are selected.
    #[arg(long)]
    pub target_features: Option<usize>,
    /// Hard-threshold level.
    #[arg(long, default_value_t = 1e-3, value_parser = non_negative_f64)]
    pub epsilon: f64,
    /// Smoothing standard deviation in channels [default: 2 for spa, off for baselines].
    #[arg(long, value_parser = positive_f64)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub no_smooth: bool,
    #[arg(long)]
    pub no_normalize: bool,
    /// Top-hat baseline removal; `--tophat` alone uses a 25-channel window.
    #[arg(
        long,
        value_parser = odd_window,
        num_args = 0..=1,
        require_equals = true,
        default_missing_value = "25"
    )]
    pub tophat: Option<usize>,
    /// First lambda probed when tuning.
    #[arg(long, value_parser = positive_f64)]
    pub initial_lambda: Option<f64>,
    /// Additive tuning step [default: a tenth of the initial lambda].
    #[arg(long, value_parser = positive_f64)]
    pub step: Option<f64>,
    /// Bisection stops when the bracket is narrower than this fraction of lambda.
    #[arg(long, default_value_t = 1e-4, value_parser = positive_f64)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub tune_max_iter: usize,
    /// Iteration cap of the baseline solvers.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Stopping tolerance of the baseline solvers.
    #[arg(long, value_parser = positive_f64)]
    pub tol: Option<f64>,
}

impl MethodArgs {
    fn selector(&self) -> MethodSelector {
        let method: Method = self.method.into();
        let mut sel = MethodSelector::new(method);
        if let Some(l) = self.lambda {
            sel.lambda = l;
        }
        sel.target_k = self.target_features;
        sel.epsilon = self.epsilon;
        if self.no_smooth {
            sel.preprocess.smoothing_sigma = None;
        } else if let Some(s) = self.sigma {
            sel.preprocess.smoothing_sigma = Some(s);
        }
        sel.preprocess.normalize = !self.no_normalize;
        sel.preprocess.tophat_window = self.tophat;
        sel.initial_lambda = self.initial_lambda;
        sel.step = self.step;
        sel.rel_param_tol = self.rel_tol;
        sel.tune_max_iter = self.tune_max_iter;
        sel.baseline_max_iter = self.max_iter;
        sel.baseline_tol = self.tol;
        sel
    }
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// Dataset CSV.
    pub input: PathBuf,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Feature CSV to write; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run log (key=value lines); standard error when absent.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(2..))]
    pub folds: u32,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub reps: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Soft-margin constant of the fold classifier.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub svm_c: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Feature CSV written by `select`.
    pub selected: PathBuf,
    /// Ground-truth sidecar written by `simulate`.
    pub truth: PathBuf,
    /// Matching tolerance in channels [default: ceil(peak width)].
    #[arg(long)]
    pub tolerance: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Sample sizes, `A..B` inclusive.
    #[arg(long, default_value = "50..350", value_parser = n_range)]
    pub n: (usize, usize),
    #[arg(long, default_value_t = 50)]
    pub n_step: usize,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub reps: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub tolerance: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Plain `key=value` parameters, as read from or written to a config file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    pub entries: BTreeMap<String, String>,
}

impl RunConfig {
    /// Lines are `key=value`; blank lines and `#` comments are skipped. Keys
    /// may be written with or without the leading `--`.
    pub fn parse(text: &str, source: &str) -> Result<RunConfig> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SpaError::parse(source, i + 1, "expected key=value"))?;
            let key = k.trim().trim_start_matches("--").replace('_', "-");
            if key.is_empty() {
                return Err(SpaError::parse(source, i + 1, "empty key"));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(SpaError::parse(
                    source,
                    i + 1,
                    format!("duplicate key {key:?}"),
                ));
            }
        }
        Ok(RunConfig { entries })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| SpaError::io(path, e))?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Command-line flags equivalent to the entries; `true`/`false` values
    /// become bare switches or nothing.
    pub fn to_flags(&self) -> Vec<OsString> {
        let mut out = Vec::new();
        for (k, v) in &self.entries {
            match v.as_str() {
                "true" => out.push(format!("--{k}").into()),
                "false" => {}
                _ => out.push(format!("--{k}={v}").into()),
            }
        }
        out
    }
}

/// Finds `--config PATH` or `--config=PATH` before a `--` separator.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Inserts config flags right after the subcommand name so that explicit
/// flags, which come later, override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let cfg = RunConfig::load(&path)?;
    let subcommands = ["simulate", "select", "crossval", "score", "sweep"];
    let pos = args
        .iter()
        .position(|a| subcommands.contains(&a.to_string_lossy().as_ref()))
        .unwrap_or(args.len().min(1));
    let mut out = args[..=pos.min(args.len() - 1)].to_vec();
    out.extend(cfg.to_flags());
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

struct Progress {
    on: bool,
    start: Instant,
}

impl Progress {
    fn mark(&mut self, stage: &str) {
        if self.on {
            eprintln!(
                "[progress] {stage}: {:.3} s",
                self.start.elapsed().as_secs_f64()
            );
        }
        self.start = Instant::now();
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| SpaError::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| SpaError::io("<stdout>", e))
        }
    }
}

fn truth_path_for(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name.strip_suffix(".csv").unwrap_or(&name);
    out.with_file_name(format!("{stem}.truth.csv"))
}

fn fmt_metric(v: Result<f64>) -> String {
    match v {
        Ok(v) => format!("{v}"),
        Err(e) => {
            eprintln!("warning: {e}");
            "NA".into()
        }
    }
}

fn cmd_simulate(a: &SimulateArgs, progress: &mut Progress) -> Result<()> {
    let (ds, truth) = generate_dataset(&a.sim.config(a.n, a.seed))?;
    progress.mark("simulate");
    write_dataset(&ds, &a.out)?;
    let truth_path = a.truth.clone().unwrap_or_else(|| truth_path_for(&a.out));
    write_ground_truth(&truth, ds.channels(), &truth_path)?;
    progress.mark("write");
    Ok(())
}

fn cmd_select(a: &SelectArgs, progress: &mut Progress) -> Result<()> {
    let ds = load_dataset(&a.input)?;
    progress.mark("load");
    let sel = a.method.selector();
    let result = sel.run(&ds)?;
    progress.mark("select");
    if let Some(reason) = result.tune_failure {
        return Err(SpaError::Stage {
            stage: "tune",
            source: Box::new(SpaError::Parameter(reason)),
        });
    }
    emit(
        &a.out,
        &render_feature_vector(&result.weights, ds.channels())?,
    )?;
    let log = format!(
        "method={}\nlambda={}\nfeatures={}\nobjective={}\nconverged={}\n",
        sel.method.name(),
        result.lambda_used,
        result.weights.nnz(),
        result.objective,
        result.converged
    );
    match &a.log {
        Some(p) => fs::write(p, log).map_err(|e| SpaError::io(p, e))?,
        None => eprint!("{log}"),
    }
    Ok(())
}

fn cmd_crossval(a: &CrossvalArgs, progress: &mut Progress) -> Result<()> {
    let ds = load_dataset(&a.input)?;
    progress.mark("load");
    let sel = a.method.selector();
    let cfg = CvConfig {
        folds: a.folds as usize,
        repetitions: a.reps as usize,
        seed: a.seed,
        svm: SvmConfig {
            c: a.svm_c,
            ..SvmConfig::default()
        },
    };
    let report = cross_validate(&ds, &sel, &cfg)?;
    progress.mark("crossval");
    for s in &report.skipped {
        eprintln!(
            "warning: repetition {} fold {} skipped: {}",
            s.repetition, s.fold, s.reason
        );
    }
    let mut text = String::from("method,repetition,fold,accuracy,n_features\n");
    for r in &report.per_fold {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            report.method, r.repetition, r.fold, r.accuracy, r.n_features
        );
    }
    let _ = writeln!(
        text,
        "{},mean,mean,{},{}",
        report.method, report.mean_accuracy, report.mean_sparsity
    );
    emit(&a.out, &text)
}

fn cmd_score(a: &ScoreArgs, progress: &mut Progress) -> Result<()> {
    let saved = load_feature_vector(&a.selected)?;
    let truth = load_ground_truth(&a.truth)?;
    if saved.vector.d() != truth.omega0.d() {
        return Err(SpaError::param(format!(
            "feature file has d={} but the ground truth has d={}",
            saved.vector.d(),
            truth.omega0.d()
        )));
    }
    let tol = a
        .tolerance
        .unwrap_or_else(|| default_tolerance(truth.peak_width));
    let c = match_features(saved.vector.support(), &truth, tol);
    progress.mark("score");
    let text = format!(
        "tp,fp,tn,fn,sensitivity,specificity,balanced_accuracy\n{},{},{},{},{},{},{}\n",
        c.tp,
        c.fp,
        c.tn,
        c.fn_,
        fmt_metric(sensitivity(&c)),
        fmt_metric(specificity(&c)),
        fmt_metric(balanced_accuracy(&c)),
    );
    emit(&a.out, &text)
}

fn cmd_sweep(a: &SweepArgs, progress: &mut Progress) -> Result<()> {
    if a.n_step == 0 {
        return Err(SpaError::param("--n-step must be positive"));
    }
    let (lo, hi) = a.n;
    let ns: Vec<usize> = (lo..=hi).step_by(a.n_step).collect();
    let mut selector = a.method.selector();
    if selector.target_k.is_none() && a.method.lambda.is_none() {
        selector.target_k = Some(a.sim.support);
    }
    let cfg = SweepConfig {
        base: a.sim.config(lo, a.seed),
        ns,
        repetitions: a.reps as usize,
        seed: a.seed,
        selector,
        tolerance: a
            .tolerance
            .unwrap_or_else(|| default_tolerance(a.sim.width)),
    };
    let rows = recovery_sweep(&cfg)?;
    progress.mark("sweep");
    let mut text = String::from(
        "n,repetition,seed,method,lambda,n_features,tp,fp,tn,fn,sensitivity,specificity,balanced_accuracy,tune_failed\n",
    );
    for r in &rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.repetition,
            r.seed,
            cfg.selector.method.name(),
            r.lambda,
            r.n_features,
            r.counts.tp,
            r.counts.fp,
            r.counts.tn,
            r.counts.fn_,
            r.sensitivity,
            r.specificity,
            r.balanced_accuracy,
            r.tune_failed
        );
    }
    emit(&a.out, &text)
}

fn init_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var("SPA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("SPA_THREADS must be a positive integer, got {v:?}"))?;
    // A pool that already exists (e.g. in tests) is left alone.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn report(e: &SpaError) {
    match e.stage() {
        Some(stage) => eprintln!("error: stage {stage}: {}", e.root()),
        None => eprintln!("error: {e}"),
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: config: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut progress = Progress {
        on: cli.progress,
        start: Instant::now(),
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &mut progress),
        Command::Select(a) => cmd_select(a, &mut progress),
        Command::Crossval(a) => cmd_crossval(a, &mut progress),
        Command::Score(a) => cmd_score(a, &mut progress),
        Command::Sweep(a) => cmd_sweep(a, &mut progress),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            report(&e);
            match e.root() {
                SpaError::Parameter(_) if e.stage().is_none() => 2,
                _ => 1,
            }
        }
    }
}
