//! Sparse feature selection by 1-bit compressed sensing.
//!
//! The selection program maximizes `sum_i y_i <x_i, w>` over the intersection
//! of the l1 ball of radius `sqrt(lambda)` and the unit l2 ball. Its objective
//! is linear, `<c, w>` with `c = sum_i y_i x_i`, and the maximizer is a
//! normalized soft-thresholding of `c`; the threshold is found by bisection on
//! the l1/l2 ratio, which is non-increasing in the threshold.

use std::ops::Range;

use crate::dataset::{FeatureVector, Label, LabeledDataset, Spectrum, StandardizationStats, Step};
use crate::error::{Result, SpaError, StageExt};
use crate::preprocess::{self, PreprocessConfig};

/// `sign(0) = +1`.
pub fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn soft_threshold(c: &[f64], t: f64) -> Vec<f64> {
    c.iter()
        .map(|&v| sign(v) * (v.abs() - t).max(0.0))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectorConfig {
    /// Sparsity parameter; the l1 radius is `sqrt(lambda)`.
    pub lambda: f64,
    /// Hard threshold on `|w_k|`.
    pub epsilon: f64,
    /// Bisection tolerance on the l1/l2 ratio.
    pub solver_tol: f64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            lambda: 1.0,
            epsilon: 1e-3,
            solver_tol: 1e-10,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("epsilon", self.epsilon),
            ("solver_tol", self.solver_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SpaError::param(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// The three stages of the selected vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaResult {
    /// Maximizer of the 1-bit program.
    pub omega_raw: FeatureVector,
    /// After hard thresholding.
    pub omega_thresholded: FeatureVector,
    /// One entry per connected component of the thresholded support.
    pub omega_sparse: FeatureVector,
    pub objective_value: f64,
    pub lambda_used: f64,
}

/// `c[j] = sum_i y_i x_ij` on a standardized dataset. Constant features are 0.
pub fn correlation_vector(ds: &LabeledDataset) -> Result<Vec<f64>> {
    if !ds.provenance().contains(Step::Standardized) {
        return Err(SpaError::PipelineOrder(
            "correlation vector requires standardized data".into(),
        ));
    }
    let mut c = vec![0.0; ds.d()];
    for (row, label) in ds.data().rows().into_iter().zip(ds.labels()) {
        let y = label.sign();
        for (cj, x) in c.iter_mut().zip(row) {
            *cj += y * x;
        }
    }
    if let Some(mask) = ds.constant_mask() {
        for (cj, &constant) in c.iter_mut().zip(mask) {
            if constant {
                *cj = 0.0;
            }
        }
    }
    Ok(c)
}

/// Solution of the 1-bit program for one value of lambda.
#[derive(Clone, Debug, PartialEq)]
pub struct OneBitSolution {
    pub omega: FeatureVector,
    pub objective: f64,
    /// Soft threshold applied to `c`; `None` when the l2 constraint is slack
    /// and the maximizer is an l1-ball vertex (or face) on the largest `|c_j|`.
    pub threshold: Option<f64>,
}

/// The 1-bit program for a fixed correlation vector. Sorting `|c|` once makes
/// repeated solves for different lambda cheap.
#[derive(Clone, Debug)]
pub struct OneBitProblem {
    c: Vec<f64>,
    sorted_abs: Vec<f64>,
    l1: f64,
    l2: f64,
    ties: usize,
}

impl OneBitProblem {
    pub fn new(c: Vec<f64>) -> Result<OneBitProblem> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(SpaError::param("correlation vector has non-finite entries"));
        }
        let mut sorted_abs: Vec<f64> = c.iter().map(|v| v.abs()).collect();
        sorted_abs.sort_unstable_by(|a, b| b.total_cmp(a));
        let max_abs = sorted_abs.first().copied().unwrap_or(0.0);
        if max_abs == 0.0 {
            return Err(SpaError::DegenerateObjective);
        }
        let ties = sorted_abs.iter().take_while(|&&a| a == max_abs).count();
        let l1 = c.iter().map(|v| v.abs()).sum();
        let l2 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(OneBitProblem {
            c,
            sorted_abs,
            l1,
            l2,
            ties,
        })
    }

    pub fn correlation(&self) -> &[f64] {
        &self.c
    }

    pub fn max_abs(&self) -> f64 {
        self.sorted_abs[0]
    }

    /// `||S(c,t)||_1 / ||S(c,t)||_2`, continued by its limit `sqrt(ties)` at
    /// `t >= max|c_j|`.
    pub fn ratio_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.l1 / self.l2;
        }
        let (mut s1, mut s2) = (0.0, 0.0);
        for &a in self.sorted_abs.iter().take_while(|&&a| a > t) {
            s1 += a - t;
            s2 += (a - t) * (a - t);
        }
        if s2 == 0.0 {
            (self.ties as f64).sqrt()
        } else {
            s1 / s2.sqrt()
        }
    }

    pub fn solve(&self, lambda: f64, tol: f64) -> Result<OneBitSolution> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(SpaError::param(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(tol > 0.0) {
            return Err(SpaError::param(format!(
                "solver tolerance must be positive, got {tol}"
            )));
        }
        let radius = lambda.sqrt();
        let max_abs = self.max_abs();
        let tie_norm = (self.ties as f64).sqrt();

        if self.l1 / self.l2 <= radius {
            let w = self.c.iter().map(|v| v / self.l2).collect();
            return Ok(self.finish(w, Some(0.0)));
        }
        if radius <= tie_norm + tol {
            // l2 ball is slack (or nearly so): spread the l1 budget evenly over
            // the largest entries, capped so the l2 norm stays at most 1.
            let per = (radius / self.ties as f64).min(1.0 / tie_norm);
            let w = self
                .c
                .iter()
                .map(|&v| {
                    if v.abs() == max_abs {
                        sign(v) * per
                    } else {
                        0.0
                    }
                })
                .collect();
            return Ok(self.finish(w, None));
        }

        // ratio(lo) > radius >= ratio(hi); keep hi on the feasible side.
        let (mut lo, mut hi) = (0.0, max_abs);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let r = self.ratio_at(mid);
            if r > radius {
                lo = mid;
            } else {
                hi = mid;
                if radius - r <= tol {
                    break;
                }
            }
        }
        debug_assert!(hi < max_abs, "bisection must leave the degenerate end");
        let shrunk = soft_threshold(&self.c, hi);
        let norm = shrunk.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut w: Vec<f64> = shrunk.into_iter().map(|v| v / norm).collect();
        // Rounding in the final normalization can leave ||w||_1 a few ulps above
        // the radius.
        let l1: f64 = w.iter().map(|v| v.abs()).sum();
        if l1 > radius {
            let scale = radius / l1;
            w.iter_mut().for_each(|v| *v *= scale);
        }
        Ok(self.finish(w, Some(hi)))
    }

    fn finish(&self, w: Vec<f64>, threshold: Option<f64>) -> OneBitSolution {
        let objective = self.c.iter().zip(&w).map(|(c, w)| c * w).sum();
        OneBitSolution {
            omega: FeatureVector::new(w),
            objective,
            threshold,
        }
    }
}

fn check_two_classes(ds: &LabeledDataset) -> Result<()> {
    if ds.count_label(Label::Positive) == 0 || ds.count_label(Label::Negative) == 0 {
        return Err(SpaError::DegenerateObjective);
    }
    Ok(())
}

/// Solves the 1-bit program on a standardized dataset.
pub fn onebit_select(ds: &LabeledDataset, lambda: f64, tol: f64) -> Result<(FeatureVector, f64)> {
    if !(lambda > 0.0) {
        return Err(SpaError::param(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let c = correlation_vector(ds)?;
    check_two_classes(ds)?;
    let sol = OneBitProblem::new(c)?.solve(lambda, tol)?;
    Ok((sol.omega, sol.objective))
}

/// Keeps `w_k` iff `|w_k| > epsilon`.
pub fn hard_threshold(omega: &FeatureVector, epsilon: f64) -> FeatureVector {
    FeatureVector::new(
        omega
            .weights()
            .iter()
            .map(|&w| if w.abs() > epsilon { w } else { 0.0 })
            .collect(),
    )
}

/// Maximal runs of consecutive indices in a sorted support.
pub fn connected_components(support: &[usize]) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    for &k in support {
        match out.last_mut() {
            Some(run) if run.end == k => run.end = k + 1,
            _ => out.push(k..k + 1),
        }
    }
    out
}

/// Reduces every connected component of the support to its largest-magnitude
/// entry. Ties go to the lowest index.
pub fn sparsify_components(omega: &FeatureVector) -> FeatureVector {
    let w = omega.weights();
    let mut out = vec![0.0; w.len()];
    for run in connected_components(omega.support()) {
        let mut best = run.start;
        for k in run {
            if w[k].abs() > w[best].abs() {
                best = k;
            }
        }
        out[best] = w[best];
    }
    FeatureVector::new(out)
}

/// Zeroes every intensity outside `support`.
pub fn project_support(x: &Spectrum, support: &[usize]) -> Result<Spectrum> {
    let d = x.len();
    if let Some(&k) = support.iter().find(|&&k| k >= d) {
        return Err(SpaError::param(format!(
            "support index {k} out of range for d={d}"
        )));
    }
    let mut out = vec![0.0; d];
    for &k in support {
        out[k] = x.intensities()[k];
    }
    Ok(x.with_intensities(out))
}

/// A dataset taken through preprocessing, with its 1-bit program ready to
/// solve for any lambda.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: LabeledDataset,
    pub stats: StandardizationStats,
    pub problem: OneBitProblem,
}

/// Runs baseline removal, normalization, smoothing and standardization as
/// configured, then builds the correlation vector. Errors carry the stage name.
pub fn prepare(ds: &LabeledDataset, pre: &PreprocessConfig) -> Result<Prepared> {
    let dataset = preprocess_dataset(ds, pre)?;
    let (dataset, stats) = standardize_stage(&dataset)?;
    let c = correlation_vector(&dataset).stage("correlation")?;
    check_two_classes(&dataset).stage("onebit_select")?;
    let problem = OneBitProblem::new(c).stage("onebit_select")?;
    Ok(Prepared {
        dataset,
        stats,
        problem,
    })
}

/// Preprocessing up to (not including) standardization.
pub(crate) fn preprocess_dataset(
    ds: &LabeledDataset,
    pre: &PreprocessConfig,
) -> Result<LabeledDataset> {
    ds.check_complete().stage("validate")?;
    let mut cur = ds.clone();
    if let Some(window) = pre.tophat_window {
        cur = preprocess::remove_baseline(&cur, window).stage("baseline")?;
    }
    if pre.normalize {
        cur = preprocess::normalize_tic(&cur).stage("normalize")?;
    }
    if let Some(sigma) = pre.smoothing_sigma {
        cur = preprocess::smooth_gaussian(&cur, sigma).stage("smooth")?;
    }
    Ok(cur)
}

pub(crate) fn standardize_stage(
    ds: &LabeledDataset,
) -> Result<(LabeledDataset, StandardizationStats)> {
    preprocess::standardize(ds).stage("standardize")
}

impl Prepared {
    /// Wraps an already standardized dataset.
    pub fn from_standardized(
        dataset: LabeledDataset,
        stats: StandardizationStats,
    ) -> Result<Prepared> {
        let c = correlation_vector(&dataset)?;
        check_two_classes(&dataset)?;
        let problem = OneBitProblem::new(c)?;
        Ok(Prepared {
            dataset,
            stats,
            problem,
        })
    }

    /// Selection, hard thresholding and component sparsification.
    pub fn select(&self, cfg: &SelectorConfig) -> Result<SpaResult> {
        cfg.validate()?;
        let sol = self
            .problem
            .solve(cfg.lambda, cfg.solver_tol)
            .stage("onebit_select")?;
        let omega_thresholded = hard_threshold(&sol.omega, cfg.epsilon);
        let omega_sparse = sparsify_components(&omega_thresholded);
        Ok(SpaResult {
            omega_raw: sol.omega,
            omega_thresholded,
            omega_sparse,
            objective_value: sol.objective,
            lambda_used: cfg.lambda,
        })
    }
}

/// The full pipeline on a raw dataset.
pub fn run_spa(
    ds: &LabeledDataset,
    cfg: &SelectorConfig,
    pre: &PreprocessConfig,
) -> Result<SpaResult> {
    cfg.validate()?;
    prepare(ds, pre)?.select(cfg)
}

/// How a method's non-zero count responds to a growing parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// More features as the parameter grows (1-bit selection).
    Increasing,
    /// Fewer features as the parameter grows (penalized baselines).
    Decreasing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneConfig {
    pub target_k: usize,
    pub initial_lambda: f64,
    /// Additive step while searching for the target; defaults to 10% of the
    /// initial lambda.
    pub step: Option<f64>,
    /// Bisection stops once the bracket is narrower than `rel_param_tol * lambda`.
    pub rel_param_tol: f64,
    /// Cap on the total number of probes.
    pub max_iter: usize,
}

impl TuneConfig {
    pub fn new(target_k: usize) -> TuneConfig {
        TuneConfig {
            target_k,
            initial_lambda: 1.0,
            step: None,
            rel_param_tol: 1e-4,
            max_iter: 100_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.target_k == 0 {
            return Err(SpaError::param("target feature count must be at least 1"));
        }
        if !(self.initial_lambda > 0.0) || !(self.rel_param_tol > 0.0) {
            return Err(SpaError::param(
                "initial lambda and tolerance must be positive",
            ));
        }
        if let Some(step) = self.step {
            if !(step > 0.0) {
                return Err(SpaError::param(format!(
                    "tuning step must be positive, got {step}"
                )));
            }
        }
        Ok(())
    }
}

/// One evaluated parameter value.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe<T> {
    pub lambda: f64,
    pub count: usize,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneFailure<T> {
    /// Closest probe that had not yet reached the target count.
    pub below: Option<Probe<T>>,
    /// Closest probe that reached or passed it.
    pub above: Option<Probe<T>>,
    pub probes: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TuneOutcome<T> {
    Found(Probe<T>),
    Failed(TuneFailure<T>),
}

impl<T> TuneOutcome<T> {
    pub fn found(&self) -> Option<&Probe<T>> {
        match self {
            TuneOutcome::Found(p) => Some(p),
            TuneOutcome::Failed(_) => None,
        }
    }
}

/// Finds the smallest parameter whose probe yields exactly `target_k`
/// features: step up from a value short of the target until it is reached or
/// passed, then bisect between the last two values.
pub fn tune_parameter<T, F>(
    cfg: &TuneConfig,
    direction: Direction,
    mut probe: F,
) -> Result<TuneOutcome<T>>
where
    T: Clone,
    F: FnMut(f64) -> Result<(usize, T)>,
{
    cfg.validate()?;
    let target = cfg.target_k;
    let reached = |count: usize| match direction {
        Direction::Increasing => count >= target,
        Direction::Decreasing => count <= target,
    };
    let mut probes = 0usize;
    let mut eval = |lambda: f64, probes: &mut usize| -> Result<Probe<T>> {
        *probes += 1;
        let (count, value) = probe(lambda)?;
        Ok(Probe {
            lambda,
            count,
            value,
        })
    };
    let fail = |below, above, probes, reason: &str| {
        Ok(TuneOutcome::Failed(TuneFailure {
            below,
            above,
            probes,
            reason: reason.to_string(),
        }))
    };

    // Start short of the target.
    let mut lo = eval(cfg.initial_lambda, &mut probes)?;
    while reached(lo.count) {
        if lo.lambda < 1e-12 || probes >= cfg.max_iter {
            return if lo.count == target {
                Ok(TuneOutcome::Found(lo))
            } else {
                fail(
                    None,
                    Some(lo),
                    probes,
                    "could not find a parameter below the target",
                )
            };
        }
        lo = eval(lo.lambda / 2.0, &mut probes)?;
    }

    let step = cfg.step.unwrap_or(0.1 * cfg.initial_lambda);
    let mut hi = loop {
        if probes >= cfg.max_iter {
            return fail(
                Some(lo),
                None,
                probes,
                "iteration limit reached while stepping",
            );
        }
        let next = eval(lo.lambda + step, &mut probes)?;
        if reached(next.count) {
            break next;
        }
        lo = next;
    };

    let mut best = (hi.count == target).then(|| hi.clone());
    while hi.lambda - lo.lambda > cfg.rel_param_tol * hi.lambda {
        if probes >= cfg.max_iter {
            break;
        }
        let mid = eval(0.5 * (lo.lambda + hi.lambda), &mut probes)?;
        if reached(mid.count) {
            if mid.count == target {
                best = Some(mid.clone());
            }
            hi = mid;
        } else {
            lo = mid;
        }
    }
    match best {
        Some(p) => Ok(TuneOutcome::Found(p)),
        None => fail(
            Some(lo),
            Some(hi),
            probes,
            "no parameter yields exactly the target count",
        ),
    }
}

/// Tunes lambda so that the sparsified vector has exactly `tune.target_k`
/// non-zeros. `base` supplies epsilon and the solver tolerance.
pub fn tune_sparsity(
    prepared: &Prepared,
    base: &SelectorConfig,
    tune: &TuneConfig,
) -> Result<TuneOutcome<SpaResult>> {
    tune_parameter(tune, Direction::Increasing, |lambda| {
        let cfg = SelectorConfig {
            lambda,
            ..base.clone()
        };
        let res = prepared.select(&cfg)?;
        Ok((res.omega_sparse.nnz(), res))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;

    fn fv(w: &[f64]) -> FeatureVector {
        FeatureVector::new(w.to_vec())
    }

    fn standardized(rows: &[Vec<f64>], labels: Vec<Label>) -> LabeledDataset {
        let ds = LabeledDataset::from_rows(rows, labels).unwrap();
        preprocess::standardize(&ds).unwrap().0
    }

    #[test]
    fn correlation_direct_sum() {
        // Build a "standardized" dataset by hand via from_rows + derive.
        let ds = LabeledDataset::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        let ds = ds.derive(ds.data().clone(), Step::Standardized);
        assert_eq!(correlation_vector(&ds).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn correlation_requires_standardized() {
        let ds = LabeledDataset::from_rows(&[vec![1.0]], vec![Label::Positive]).unwrap();
        assert!(matches!(
            correlation_vector(&ds),
            Err(SpaError::PipelineOrder(_))
        ));
    }

    #[test]
    fn single_class_centered_is_zero() {
        let ds = standardized(
            &[vec![1.0, 4.0], vec![2.0, 0.0], vec![6.0, 1.0]],
            vec![Label::Positive; 3],
        );
        let c = correlation_vector(&ds).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
        assert!(matches!(
            onebit_select(&ds, 1.0, 1e-10),
            Err(SpaError::DegenerateObjective)
        ));
    }

    #[test]
    fn single_direction() {
        let p = OneBitProblem::new(vec![2.0, 0.0, 0.0]).unwrap();
        let sol = p.solve(4.0, 1e-10).unwrap();
        assert_eq!(sol.omega.weights(), &[1.0, 0.0, 0.0]);
        assert_eq!(sol.objective, 2.0);
    }

    #[test]
    fn wide_radius_gives_normalized_c() {
        let c = vec![0.5, -1.5, 2.0, 0.25];
        let p = OneBitProblem::new(c.clone()).unwrap();
        let sol = p.solve(4.0, 1e-10).unwrap();
        let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (w, v) in sol.omega.weights().iter().zip(&c) {
            assert!((w - v / n).abs() < 1e-15);
        }
    }

    #[test]
    fn small_radius_is_vertex() {
        let p = OneBitProblem::new(vec![1.0, -3.0, 2.0]).unwrap();
        let sol = p.solve(0.25, 1e-10).unwrap();
        assert_eq!(sol.omega.weights(), &[0.0, -0.5, 0.0]);
        assert_eq!(sol.threshold, None);
        assert!((sol.objective - 1.5).abs() < 1e-15);
    }

    #[test]
    fn tied_maxima_split_budget() {
        let p = OneBitProblem::new(vec![2.0, -2.0, 1.0]).unwrap();
        let sol = p.solve(1.0, 1e-10).unwrap();
        assert_eq!(sol.omega.weights(), &[0.5, -0.5, 0.0]);
        assert!(sol.omega.l2_norm() <= 1.0);
    }

    #[test]
    fn zero_c_is_degenerate() {
        assert!(matches!(
            OneBitProblem::new(vec![0.0; 4]),
            Err(SpaError::DegenerateObjective)
        ));
    }

    #[test]
    fn non_positive_lambda_rejected() {
        let p = OneBitProblem::new(vec![1.0, 2.0]).unwrap();
        assert!(p.solve(0.0, 1e-10).is_err());
        assert!(p.solve(-1.0, 1e-10).is_err());
    }

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(
            hard_threshold(&fv(&[0.5, 1e-4, -0.2]), 1e-3).weights(),
            &[0.5, 0.0, -0.2]
        );
        assert_eq!(hard_threshold(&fv(&[0.5, -0.2]), 0.6).nnz(), 0);
        assert_eq!(
            hard_threshold(&fv(&[1e-3, 0.5]), 1e-3).weights(),
            &[0.0, 0.5]
        );
    }

    #[test]
    fn sparsify_example() {
        let out = sparsify_components(&fv(&[0.0, 0.5, 0.9, 0.4, 0.0, 0.0, -0.3, 0.0]));
        assert_eq!(out.weights(), &[0.0, 0.0, 0.9, 0.0, 0.0, 0.0, -0.3, 0.0]);
        assert_eq!(connected_components(&[1, 2, 3, 6]), vec![1..4, 6..7]);
    }

    #[test]
    fn sparsify_isolated_unchanged() {
        let w = fv(&[0.1, 0.0, -0.2, 0.0, 0.3]);
        assert_eq!(sparsify_components(&w), w);
    }

    #[test]
    fn sparsify_tie_keeps_lowest() {
        let out = sparsify_components(&fv(&[0.0, -0.7, 0.7, 0.2]));
        assert_eq!(out.weights(), &[0.0, -0.7, 0.0, 0.0]);
    }

    #[test]
    fn projection_examples() {
        let x = Spectrum::from_intensities(vec![5.0, 6.0, 7.0]).unwrap();
        assert_eq!(project_support(&x, &[0, 1, 2]).unwrap(), x);
        assert_eq!(project_support(&x, &[]).unwrap().intensities(), &[0.0; 3]);
        assert_eq!(
            project_support(&x, &[2]).unwrap().intensities(),
            &[0.0, 0.0, 7.0]
        );
        assert!(project_support(&x, &[3]).is_err());
    }

    #[test]
    fn run_spa_minimal() {
        let ds = LabeledDataset::from_rows(
            &[vec![1.0, 2.0, 0.5, 3.0], vec![2.0, 1.0, 3.0, 0.5]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        let res = run_spa(
            &ds,
            &SelectorConfig::default(),
            &PreprocessConfig::default(),
        )
        .unwrap();
        assert!(res.omega_sparse.l2_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn run_spa_names_failing_stage() {
        let ds = LabeledDataset::from_rows(
            &[vec![1.0, 2.0], vec![2.0, 1.0]],
            vec![Label::Positive, Label::Positive],
        )
        .unwrap();
        let err = run_spa(
            &ds,
            &SelectorConfig::default(),
            &PreprocessConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err.stage(), Some("onebit_select"));
        assert!(matches!(err.root(), SpaError::DegenerateObjective));
    }

    #[test]
    fn tuning_saturates_immediately() {
        // Isolated features: every non-zero of the raw maximizer is its own component.
        let c = vec![5.0, 0.0, 4.0, 0.0, 3.0];
        let problem = OneBitProblem::new(c).unwrap();
        let mut tune = TuneConfig::new(3);
        tune.initial_lambda = 1e6;
        let outcome = tune_parameter(&tune, Direction::Increasing, |lambda| {
            let sol = problem.solve(lambda, 1e-10)?;
            let w = sparsify_components(&hard_threshold(&sol.omega, 1e-3));
            Ok((w.nnz(), ()))
        })
        .unwrap();
        let p = outcome.found().expect("target reachable");
        assert_eq!(p.count, 3);
    }

    #[test]
    fn tuning_reports_bracket_on_jump() {
        // Counts jump 1 -> 3 at lambda = 2.
        let outcome = tune_parameter(&TuneConfig::new(2), Direction::Increasing, |lambda| {
            Ok((if lambda < 2.0 { 1 } else { 3 }, ()))
        })
        .unwrap();
        match outcome {
            TuneOutcome::Failed(f) => {
                let (below, above) = (f.below.unwrap(), f.above.unwrap());
                assert_eq!((below.count, above.count), (1, 3));
                assert!(below.lambda < 2.0 && above.lambda >= 2.0);
                assert!(above.lambda - below.lambda <= 1e-4 * above.lambda);
            }
            TuneOutcome::Found(_) => panic!("no lambda has count 2"),
        }
    }

    #[test]
    fn tuning_decreasing_direction() {
        // count = floor(10 / lambda): exactly 4 for lambda in (2, 2.5].
        let mut cfg = TuneConfig::new(4);
        cfg.initial_lambda = 0.5;
        let outcome = tune_parameter(&cfg, Direction::Decreasing, |lambda| {
            Ok(((10.0 / lambda).floor() as usize, ()))
        })
        .unwrap();
        let p = outcome.found().unwrap();
        assert_eq!(p.count, 4);
        assert!(
            p.lambda > 2.0 && p.lambda < 2.0 * (1.0 + 2e-4),
            "{}",
            p.lambda
        );
    }

    #[test]
    fn tuning_iteration_limit_is_a_report() {
        let mut cfg = TuneConfig::new(5);
        cfg.max_iter = 10;
        let outcome = tune_parameter(&cfg, Direction::Increasing, |_| Ok((0, ()))).unwrap();
        assert!(matches!(
            outcome,
            TuneOutcome::Failed(TuneFailure { above: None, .. })
        ));
    }
}
