//! Scoring selected features against a ground truth, a linear SVM for fold
//! prediction, and repeated K-fold cross-validation.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::baselines::{tune_baseline, Baseline, BaselineConfig};
use crate::dataset::{FeatureVector, Label, LabeledDataset};
use crate::error::{Result, SpaError, StageExt};
use crate::preprocess::PreprocessConfig;
use crate::selector::{
    prepare, preprocess_dataset, standardize_stage, tune_sparsity, Probe, SelectorConfig,
    TuneConfig, TuneOutcome,
};
use crate::simulate::{generate_dataset, sample_rng, GroundTruth, SimulationConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }
}

/// Default matching tolerance for a peak width: `ceil(width)` channels.
pub fn default_tolerance(peak_width: f64) -> usize {
    peak_width.ceil().max(0.0) as usize
}

/// Matches selected indices to true peak centers. Candidate pairs within
/// `tolerance` channels are taken nearest-first (ties by peak, then index);
/// each index and each peak is used at most once. Unmatched selections are
/// false positives, counted against the condition-negative peaks.
pub fn match_features(
    selected: &[usize],
    truth: &GroundTruth,
    tolerance: usize,
) -> ConfusionCounts {
    let centers = &truth.true_peak_centers;
    let negatives = truth.num_peaks().saturating_sub(centers.len());
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (p, &c) in centers.iter().enumerate() {
        for (s, &idx) in selected.iter().enumerate() {
            let dist = idx.abs_diff(c);
            if dist <= tolerance {
                pairs.push((dist, p, s));
            }
        }
    }
    pairs.sort_unstable();
    let mut peak_used = vec![false; centers.len()];
    let mut sel_used = vec![false; selected.len()];
    let mut tp = 0;
    for (_, p, s) in pairs {
        if !peak_used[p] && !sel_used[s] {
            peak_used[p] = true;
            sel_used[s] = true;
            tp += 1;
        }
    }
    let unmatched = selected.len() - tp;
    let fp = unmatched.min(negatives);
    ConfusionCounts {
        tp,
        fp,
        tn: negatives - fp,
        fn_: centers.len() - tp,
    }
}

pub fn sensitivity(c: &ConfusionCounts) -> Result<f64> {
    if c.positives() == 0 {
        return Err(SpaError::UndefinedMetric("sensitivity"));
    }
    Ok(c.tp as f64 / c.positives() as f64)
}

pub fn specificity(c: &ConfusionCounts) -> Result<f64> {
    if c.negatives() == 0 {
        return Err(SpaError::UndefinedMetric("specificity"));
    }
    Ok(c.tn as f64 / c.negatives() as f64)
}

pub fn balanced_accuracy(c: &ConfusionCounts) -> Result<f64> {
    Ok((sensitivity(c)? + specificity(c)?) / 2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tol: 1e-6,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        Label::from_value(self.decision(x))
    }

    /// `(1/2)||w||^2 + C sum_i hinge(y_i (<w, x_i> + b))`.
    pub fn objective(&self, x: &Array2<f64>, y: &[Label], c: f64) -> f64 {
        let hinge: f64 = x
            .rows()
            .into_iter()
            .zip(y)
            .map(|(row, l)| {
                (1.0 - l.sign() * self.decision(row.as_slice().expect("contiguous"))).max(0.0)
            })
            .sum();
        0.5 * self.w.iter().map(|v| v * v).sum::<f64>() + c * hinge
    }
}

/// Soft-margin linear SVM solved in the dual by sequential minimal
/// optimization with second-order working-set selection. Stops when the
/// maximal KKT violation falls below `tol`.
pub fn train_linear_classifier(
    x: &Array2<f64>,
    y: &[Label],
    cfg: &SvmConfig,
) -> Result<LinearModel> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(SpaError::param("label count does not match sample count"));
    }
    if !(cfg.c > 0.0) || !(cfg.tol > 0.0) {
        return Err(SpaError::param("SVM C and tolerance must be positive"));
    }
    if !y.contains(&Label::Positive) || !y.contains(&Label::Negative) {
        return Err(SpaError::FoldDegenerate(
            "training data has a single class".into(),
        ));
    }
    let ys: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let gram = x.dot(&x.t());
    let c = cfg.c;
    let mut alpha = vec![0.0; n];
    // Gradient of (1/2) a^T Q a - e^T a with Q_ij = y_i y_j K_ij.
    let mut grad = vec![-1.0; n];
    let upper = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let lower = |a: f64, yt: f64| (yt < 0.0 && a < c) || (yt > 0.0 && a > 0.0);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        for t in 0..n {
            if upper(alpha[t], ys[t]) {
                let v = -ys[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if lower(alpha[t], ys[t]) {
                let v = -ys[t] * grad[t];
                gmin = gmin.min(v);
                if i != usize::MAX && v < gmax {
                    let b = gmax - v;
                    let mut a = gram[(i, i)] + gram[(t, t)] - 2.0 * gram[(i, t)];
                    if a <= 0.0 {
                        a = 1e-12;
                    }
                    let score = -(b * b) / a;
                    if score < best {
                        best = score;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (yi, yj) = (ys[i], ys[j]);
        let mut quad = gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)];
        if quad <= 0.0 {
            quad = 1e-12;
        }
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += ys[t] * (yi * gram[(t, i)] * di + yj * gram[(t, j)] * dj);
        }
    }

    // Bias from free vectors, else the midpoint of the feasible interval.
    let (mut sum, mut count) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += yg;
            count += 1;
        } else if (alpha[t] >= c && ys[t] < 0.0) || (alpha[t] <= 0.0 && ys[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if count > 0 {
        sum / count as f64
    } else {
        0.5 * (ub + lb)
    };
    let mut w = vec![0.0; d];
    for t in 0..n {
        if alpha[t] != 0.0 {
            for (wk, v) in w.iter_mut().zip(x.row(t)) {
                *wk += alpha[t] * ys[t] * v;
            }
        }
    }
    Ok(LinearModel {
        w,
        b: -rho,
        iterations,
        converged,
    })
}

/// Something that learns a feature vector from a training set.
pub trait FeatureSelector: Sync {
    fn name(&self) -> String;
    fn select(&self, train: &LabeledDataset) -> Result<FeatureVector>;
}

/// Always returns the same support; an oracle when given `supp(w0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedSupport {
    pub support: Vec<usize>,
}

impl FeatureSelector for FixedSupport {
    fn name(&self) -> String {
        "fixed".into()
    }

    fn select(&self, train: &LabeledDataset) -> Result<FeatureVector> {
        let mut w = vec![0.0; train.d()];
        for &k in &self.support {
            *w.get_mut(k)
                .ok_or_else(|| SpaError::param(format!("support index {k} out of range")))? = 1.0;
        }
        Ok(FeatureVector::new(w))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Spa,
    Lasso,
    L1Svm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spa => "spa",
            Method::Lasso => "lasso",
            Method::L1Svm => "l1svm",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "spa" => Some(Method::Spa),
            "lasso" => Some(Method::Lasso),
            "l1svm" => Some(Method::L1Svm),
            _ => None,
        }
    }

    fn baseline(self) -> Option<Baseline> {
        match self {
            Method::Spa => None,
            Method::Lasso => Some(Baseline::Lasso),
            Method::L1Svm => Some(Baseline::L1Svm),
        }
    }
}

/// A full selection recipe: preprocessing, method, and either a fixed lambda
/// or a target feature count.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSelector {
    pub method: Method,
    pub preprocess: PreprocessConfig,
    pub lambda: f64,
    pub epsilon: f64,
    pub solver_tol: f64,
    /// When set, lambda is tuned to this many features.
    pub target_k: Option<usize>,
    /// Tuning start; baselines default to the smallest all-zero penalty.
    pub initial_lambda: Option<f64>,
    pub step: Option<f64>,
    pub rel_param_tol: f64,
    pub tune_max_iter: usize,
    pub baseline_max_iter: Option<usize>,
    pub baseline_tol: Option<f64>,
}

impl MethodSelector {
    /// Defaults for `method`; baselines skip smoothing.
    pub fn new(method: Method) -> MethodSelector {
        let spa = SelectorConfig::default();
        let tune = TuneConfig::new(1);
        let mut preprocess = PreprocessConfig::default();
        if method != Method::Spa {
            preprocess.smoothing_sigma = None;
        }
        MethodSelector {
            method,
            preprocess,
            lambda: spa.lambda,
            epsilon: spa.epsilon,
            solver_tol: spa.solver_tol,
            target_k: None,
            initial_lambda: None,
            step: tune.step,
            rel_param_tol: tune.rel_param_tol,
            tune_max_iter: tune.max_iter,
            baseline_max_iter: None,
            baseline_tol: None,
        }
    }

    fn tune_config(&self, k: usize, default_initial: f64) -> TuneConfig {
        TuneConfig {
            target_k: k,
            initial_lambda: self.initial_lambda.unwrap_or(default_initial),
            step: self.step,
            rel_param_tol: self.rel_param_tol,
            max_iter: self.tune_max_iter,
        }
    }

    fn baseline_config(&self, b: Baseline, lambda: f64) -> BaselineConfig {
        let mut cfg = b.default_config(lambda);
        if let Some(m) = self.baseline_max_iter {
            cfg.max_iter = m;
        }
        if let Some(t) = self.baseline_tol {
            cfg.tol = t;
        }
        cfg
    }

    pub fn run(&self, ds: &LabeledDataset) -> Result<Selection> {
        match self.method.baseline() {
            None => self.run_spa(ds),
            Some(b) => self.run_baseline(b, ds),
        }
    }

    fn run_spa(&self, ds: &LabeledDataset) -> Result<Selection> {
        let prepared = prepare(ds, &self.preprocess)?;
        let base = SelectorConfig {
            lambda: self.lambda,
            epsilon: self.epsilon,
            solver_tol: self.solver_tol,
        };
        let to_selection = |r: crate::selector::SpaResult, failure: Option<String>| Selection {
            weights: r.omega_sparse,
            raw: r.omega_raw,
            lambda_used: r.lambda_used,
            objective: r.objective_value,
            converged: true,
            tune_failure: failure,
        };
        match self.target_k {
            None => Ok(to_selection(prepared.select(&base)?, None)),
            Some(k) => {
                let outcome =
                    tune_sparsity(&prepared, &base, &self.tune_config(k, 1.0)).stage("tune")?;
                let (probe, failure) = resolve(outcome, k)?;
                Ok(to_selection(probe.value, failure))
            }
        }
    }

    fn run_baseline(&self, b: Baseline, ds: &LabeledDataset) -> Result<Selection> {
        let pre = preprocess_dataset(ds, &self.preprocess)?;
        let (std_ds, _) = standardize_stage(&pre)?;
        let to_selection = |f: crate::baselines::BaselineFit, failure: Option<String>| Selection {
            weights: f.omega_thresholded,
            raw: f.omega_raw,
            lambda_used: f.lambda_used,
            objective: f.objective,
            converged: f.converged,
            tune_failure: failure,
        };
        match self.target_k {
            None => {
                let fit = b
                    .fit(&std_ds, &self.baseline_config(b, self.lambda), self.epsilon)
                    .stage(b.name())?;
                Ok(to_selection(fit, None))
            }
            Some(k) => {
                let lmax = b.lambda_max(&std_ds);
                if !(lmax > 0.0) {
                    return Err(SpaError::DegenerateObjective).stage(b.name());
                }
                let tune = self.tune_config(k, lmax);
                let outcome = tune_baseline(
                    b,
                    &std_ds,
                    &self.baseline_config(b, tune.initial_lambda),
                    self.epsilon,
                    &tune,
                )
                .stage("tune")?;
                let (probe, failure) = resolve(outcome, k)?;
                Ok(to_selection(probe.value, failure))
            }
        }
    }
}

/// Picks the found probe, or on failure the bracket end whose count is
/// closest to the target (the lower end on ties) together with the reason.
fn resolve<T>(outcome: TuneOutcome<T>, k: usize) -> Result<(Probe<T>, Option<String>)> {
    match outcome {
        TuneOutcome::Found(p) => Ok((p, None)),
        TuneOutcome::Failed(f) => {
            let reason = format!(
                "{} (target {k}; below: {}; above: {})",
                f.reason,
                describe(f.below.as_ref()),
                describe(f.above.as_ref())
            );
            let pick = match (f.below, f.above) {
                (Some(b), Some(a)) => {
                    if a.count.abs_diff(k) < b.count.abs_diff(k) {
                        a
                    } else {
                        b
                    }
                }
                (Some(p), None) | (None, Some(p)) => p,
                (None, None) => return Err(SpaError::param(reason)),
            };
            Ok((pick, Some(reason)))
        }
    }
}

fn describe<T>(p: Option<&Probe<T>>) -> String {
    match p {
        Some(p) => format!("lambda={} gives {}", p.lambda, p.count),
        None => "none".into(),
    }
}

/// Outcome of one selection run.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Final vector: sparsified for the 1-bit method, thresholded for baselines.
    pub weights: FeatureVector,
    pub raw: FeatureVector,
    pub lambda_used: f64,
    pub objective: f64,
    pub converged: bool,
    /// Set when tuning missed the target; `weights` is then the closest probe.
    pub tune_failure: Option<String>,
}

impl FeatureSelector for MethodSelector {
    fn name(&self) -> String {
        self.method.name().into()
    }

    fn select(&self, train: &LabeledDataset) -> Result<FeatureVector> {
        Ok(self.run(train)?.weights)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub svm: SvmConfig,
}

impl CvConfig {
    pub fn new(folds: usize, repetitions: usize, seed: u64) -> CvConfig {
        CvConfig {
            folds,
            repetitions,
            seed,
            svm: SvmConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub repetition: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub n_features: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkippedFold {
    pub repetition: usize,
    pub fold: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub method: String,
    pub per_fold: Vec<FoldResult>,
    pub skipped: Vec<SkippedFold>,
    pub mean_accuracy: f64,
    pub mean_sparsity: f64,
    pub repetitions: usize,
}

/// Random partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn make_folds(n: usize, k: usize, seed: u64, repetition: usize) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut sample_rng(seed, repetition as u64));
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = idx[start..start + len].to_vec();
        fold.sort_unstable();
        out.push(fold);
        start += len;
    }
    out
}

/// Columns `support` of the given rows, standardized with the statistics of
/// `fit_rows` (constant columns become zero).
fn projected(
    ds: &LabeledDataset,
    rows: &[usize],
    support: &[usize],
    fit_rows: &[usize],
) -> Array2<f64> {
    let data = ds.data();
    let m = fit_rows.len() as f64;
    let stats: Vec<(f64, f64)> = support
        .iter()
        .map(|&j| {
            let mean = fit_rows.iter().map(|&i| data[(i, j)]).sum::<f64>() / m;
            let var = fit_rows
                .iter()
                .map(|&i| (data[(i, j)] - mean).powi(2))
                .sum::<f64>()
                / m;
            (mean, var.sqrt())
        })
        .collect();
    Array2::from_shape_fn((rows.len(), support.len()), |(r, c)| {
        let (mean, sd) = stats[c];
        if sd > 0.0 {
            (data[(rows[r], support[c])] - mean) / sd
        } else {
            0.0
        }
    })
}

enum FoldOutcome {
    Done(FoldResult),
    Skipped(SkippedFold),
}

fn run_fold(
    ds: &LabeledDataset,
    selector: &dyn FeatureSelector,
    cfg: &CvConfig,
    repetition: usize,
    fold: usize,
    test: &[usize],
) -> Result<FoldOutcome> {
    let mut in_test = vec![false; ds.n()];
    for &i in test {
        in_test[i] = true;
    }
    let train: Vec<usize> = (0..ds.n()).filter(|&i| !in_test[i]).collect();
    let train_ds = ds.subset(&train);
    if train_ds.count_label(Label::Positive) == 0 || train_ds.count_label(Label::Negative) == 0 {
        return Ok(FoldOutcome::Skipped(SkippedFold {
            repetition,
            fold,
            reason: "training folds contain a single class".into(),
        }));
    }
    let omega = selector.select(&train_ds)?;
    let support = omega.support().to_vec();
    let x_train = projected(ds, &train, &support, &train);
    let y_train: Vec<Label> = train.iter().map(|&i| ds.labels()[i]).collect();
    let model = train_linear_classifier(&x_train, &y_train, &cfg.svm)?;
    let x_test = projected(ds, test, &support, &train);
    let correct = test
        .iter()
        .zip(x_test.rows())
        .filter(|(&i, row)| model.predict(row.as_slice().expect("contiguous")) == ds.labels()[i])
        .count();
    Ok(FoldOutcome::Done(FoldResult {
        repetition,
        fold,
        accuracy: correct as f64 / test.len() as f64,
        n_features: support.len(),
    }))
}

/// Repeated K-fold cross-validation: learn features on K-1 folds, project
/// onto their support, train the linear SVM and score the held-out fold.
/// Folds and repetitions run in parallel; results come back in
/// (repetition, fold) order.
pub fn cross_validate(
    ds: &LabeledDataset,
    selector: &dyn FeatureSelector,
    cfg: &CvConfig,
) -> Result<CvReport> {
    if cfg.folds < 2 {
        return Err(SpaError::param(format!(
            "need at least 2 folds, got {}",
            cfg.folds
        )));
    }
    if ds.n() < 2 * cfg.folds {
        return Err(SpaError::param(format!(
            "{} samples are too few for {} folds",
            ds.n(),
            cfg.folds
        )));
    }
    if cfg.repetitions == 0 {
        return Err(SpaError::param("need at least one repetition"));
    }
    ds.check_complete().stage("validate")?;
    let jobs: Vec<(usize, usize, Vec<usize>)> = (0..cfg.repetitions)
        .flat_map(|r| {
            make_folds(ds.n(), cfg.folds, cfg.seed, r)
                .into_iter()
                .enumerate()
                .map(move |(f, test)| (r, f, test))
        })
        .collect();
    let outcomes: Vec<Result<FoldOutcome>> = jobs
        .par_iter()
        .map(|(r, f, test)| run_fold(ds, selector, cfg, *r, *f, test))
        .collect();

    let mut per_fold = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o? {
            FoldOutcome::Done(r) => per_fold.push(r),
            FoldOutcome::Skipped(s) => skipped.push(s),
        }
    }
    if per_fold.is_empty() {
        return Err(SpaError::FoldDegenerate("every fold was skipped".into()));
    }
    let k = per_fold.len() as f64;
    let mean_accuracy = per_fold.iter().map(|r| r.accuracy).sum::<f64>() / k;
    let mean_sparsity = per_fold.iter().map(|r| r.n_features as f64).sum::<f64>() / k;
    Ok(CvReport {
        method: selector.name(),
        per_fold,
        skipped,
        mean_accuracy,
        mean_sparsity,
        repetitions: cfg.repetitions,
    })
}

/// Support-recovery experiment: for every `n` and repetition, simulate a
/// dataset, select features and score them against the ground truth.
/// Repetition `r` uses simulation seed `seed + r` for every `n`, so the
/// datasets for growing `n` are nested.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub base: SimulationConfig,
    pub ns: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub selector: MethodSelector,
    pub tolerance: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub repetition: usize,
    pub seed: u64,
    pub lambda: f64,
    pub n_features: usize,
    pub counts: ConfusionCounts,
    pub sensitivity: f64,
    /// NaN when undefined (no condition-negative peaks).
    pub specificity: f64,
    pub balanced_accuracy: f64,
    pub tune_failed: bool,
}

pub fn recovery_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.ns.is_empty() || cfg.repetitions == 0 {
        return Err(SpaError::param(
            "sweep needs at least one n and one repetition",
        ));
    }
    let jobs: Vec<(usize, usize)> = cfg
        .ns
        .iter()
        .flat_map(|&n| (0..cfg.repetitions).map(move |r| (n, r)))
        .collect();
    jobs.par_iter()
        .map(|&(n, r)| {
            let seed = cfg.seed.wrapping_add(r as u64);
            let sim = SimulationConfig {
                n,
                seed,
                ..cfg.base.clone()
            };
            let (ds, truth) = generate_dataset(&sim).stage("simulate")?;
            let sel = cfg.selector.run(&ds)?;
            let counts = match_features(sel.weights.support(), &truth, cfg.tolerance);
            let sensitivity = sensitivity(&counts).stage("score")?;
            let specificity = specificity(&counts).unwrap_or(f64::NAN);
            Ok(SweepRow {
                n,
                repetition: r,
                seed,
                lambda: sel.lambda_used,
                n_features: sel.weights.nnz(),
                counts,
                sensitivity,
                specificity,
                balanced_accuracy: (sensitivity + specificity) / 2.0,
                tune_failed: sel.tune_failure.is_some(),
            })
        })
        .collect()
}

/// Mean sensitivity per `n`, in increasing `n`.
pub fn mean_sensitivity_by_n(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.sensitivity)
                .collect();
            (n, vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}
