//! Lasso and l1-SVM feature selectors for comparison with the 1-bit program.
//!
//! Both work on standardized data without an intercept and apply the same
//! hard threshold as the 1-bit selector. Their penalty `lambda` acts in the
//! opposite direction: larger values give fewer features.

use ndarray::{Array2, ArrayView2};

use crate::dataset::{FeatureVector, LabeledDataset, Step};
use crate::error::{Result, SpaError};
use crate::selector::{
    hard_threshold, soft_threshold, tune_parameter, Direction, TuneConfig, TuneOutcome,
};

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl BaselineConfig {
    pub fn lasso(lambda: f64) -> BaselineConfig {
        BaselineConfig {
            lambda,
            max_iter: 10_000,
            tol: 1e-8,
        }
    }

    pub fn l1_svm(lambda: f64) -> BaselineConfig {
        BaselineConfig {
            lambda,
            max_iter: 100_000,
            tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(SpaError::param(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(SpaError::param(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(SpaError::param("max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineFit {
    pub omega_raw: FeatureVector,
    pub omega_thresholded: FeatureVector,
    pub objective: f64,
    pub iterations: usize,
    /// False when `max_iter` ran out before the stopping rule fired; the
    /// vectors then hold the last (Lasso) or best (l1-SVM) iterate.
    pub converged: bool,
    pub lambda_used: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    Lasso,
    L1Svm,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Lasso => "lasso",
            Baseline::L1Svm => "l1svm",
        }
    }

    pub fn default_config(self, lambda: f64) -> BaselineConfig {
        match self {
            Baseline::Lasso => BaselineConfig::lasso(lambda),
            Baseline::L1Svm => BaselineConfig::l1_svm(lambda),
        }
    }

    /// Solves on a standardized dataset and applies the hard threshold.
    pub fn fit(
        self,
        ds: &LabeledDataset,
        cfg: &BaselineConfig,
        epsilon: f64,
    ) -> Result<BaselineFit> {
        match self {
            Baseline::Lasso => lasso(ds, cfg, epsilon),
            Baseline::L1Svm => l1_svm(ds, cfg, epsilon),
        }
    }

    /// Smallest penalty at which the solution is exactly zero.
    pub fn lambda_max(self, ds: &LabeledDataset) -> f64 {
        let c = correlation(ds.data().view(), &ds.label_signs());
        let m = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        match self {
            Baseline::Lasso => m / ds.n() as f64,
            Baseline::L1Svm => m,
        }
    }
}

fn correlation(x: ArrayView2<f64>, y: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; x.ncols()];
    for (row, &yi) in x.rows().into_iter().zip(y) {
        for (cj, v) in c.iter_mut().zip(row) {
            *cj += yi * v;
        }
    }
    c
}

fn require_standardized(ds: &LabeledDataset) -> Result<()> {
    if !ds.provenance().contains(Step::Standardized) {
        return Err(SpaError::PipelineOrder(
            "baseline selectors require a standardized dataset".into(),
        ));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn columns(x: ArrayView2<f64>) -> Array2<f64> {
    x.t().as_standard_layout().into_owned()
}

pub fn lasso_objective(x: ArrayView2<f64>, y: &[f64], omega: &[f64], lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let loss: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let r = yi - row.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>();
            r * r
        })
        .sum();
    loss / (2.0 * n) + lambda * omega.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent on `(1/2n)||y - X w||^2 + lambda ||w||_1`,
/// stopping when a full sweep moves no coordinate by `tol` or more.
pub fn lasso_cd(
    x: ArrayView2<f64>,
    y: &[f64],
    cfg: &BaselineConfig,
) -> Result<(Vec<f64>, usize, bool)> {
    cfg.validate()?;
    let (n, d) = x.dim();
    if y.len() != n || n == 0 {
        return Err(SpaError::param("label count does not match sample count"));
    }
    let cols = columns(x);
    let nf = n as f64;
    let scale: Vec<f64> = cols.rows().into_iter().map(|c| c.dot(&c) / nf).collect();
    let mut residual = y.to_vec();
    let mut omega = vec![0.0; d];
    for sweep in 1..=cfg.max_iter {
        let mut max_change = 0.0f64;
        for (j, col) in cols.rows().into_iter().enumerate() {
            if scale[j] == 0.0 {
                continue;
            }
            let col = col.as_slice().expect("standard layout");
            let rho = dot(col, &residual) / nf + scale[j] * omega[j];
            let next = soft_threshold(&[rho], cfg.lambda)[0] / scale[j];
            let delta = next - omega[j];
            if delta != 0.0 {
                for (r, v) in residual.iter_mut().zip(col) {
                    *r -= delta * v;
                }
                omega[j] = next;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < cfg.tol {
            return Ok((omega, sweep, true));
        }
    }
    Ok((omega, cfg.max_iter, false))
}

pub fn lasso(ds: &LabeledDataset, cfg: &BaselineConfig, epsilon: f64) -> Result<BaselineFit> {
    require_standardized(ds)?;
    let y = ds.label_signs();
    let (omega, iterations, converged) = lasso_cd(ds.data().view(), &y, cfg)?;
    let objective = lasso_objective(ds.data().view(), &y, &omega, cfg.lambda);
    let omega_raw = FeatureVector::new(omega);
    Ok(BaselineFit {
        omega_thresholded: hard_threshold(&omega_raw, epsilon),
        omega_raw,
        objective,
        iterations,
        converged,
        lambda_used: cfg.lambda,
    })
}

pub fn l1_svm_objective(x: ArrayView2<f64>, y: &[f64], omega: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let m = yi * row.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>();
            (1.0 - m).max(0.0)
        })
        .sum();
    hinge + lambda * omega.iter().map(|v| v.abs()).sum::<f64>()
}

/// Largest singular value by power iteration, capped by the Frobenius norm.
fn spectral_norm(k: &Array2<f64>) -> f64 {
    let fro = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    if fro == 0.0 {
        return 0.0;
    }
    let mut v = ndarray::Array1::from_elem(k.ncols(), 1.0 / (k.ncols() as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..200 {
        let w = k.t().dot(&k.dot(&v));
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            break;
        }
        est = norm.sqrt();
        v = w / norm;
    }
    (1.1 * est).min(fro).max(1e-300)
}

/// Minimizes `sum_i max(0, 1 - y_i <w, x_i>) + lambda ||w||_1` with the
/// primal-dual hybrid gradient method. Stops once the duality gap between the
/// best primal and best feasible dual value falls to `tol * max(1, primal)`,
/// returning the best primal iterate. One unit of `max_iter` is one
/// primal-dual step.
pub fn l1_svm_pdhg(
    x: ArrayView2<f64>,
    y: &[f64],
    cfg: &BaselineConfig,
) -> Result<(Vec<f64>, usize, bool)> {
    cfg.validate()?;
    let (n, d) = x.dim();
    if y.len() != n || n == 0 {
        return Err(SpaError::param("label count does not match sample count"));
    }
    // K = diag(y) X
    let mut k = x.to_owned();
    for (mut row, &yi) in k.rows_mut().into_iter().zip(y) {
        row *= yi;
    }
    let kt = columns(k.view());
    let lambda = cfg.lambda;
    let norm = spectral_norm(&k);
    if norm == 0.0 {
        return Ok((vec![0.0; d], 0, true));
    }
    let step = 0.95 / norm;
    let (tau, sigma) = (step, step);

    let primal = |w: &[f64], margins: &[f64]| -> f64 {
        margins.iter().map(|m| (1.0 - m).max(0.0)).sum::<f64>()
            + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
    };
    let margins_of = |w: &[f64]| -> Vec<f64> {
        k.rows()
            .into_iter()
            .map(|r| dot(r.as_slice().expect("standard layout"), w))
            .collect()
    };
    // Dual: maximize sum v subject to 0 <= v <= 1, ||K^T v||_inf <= lambda.
    let dual = |v: &[f64], ktv: &[f64]| -> f64 {
        let sup = ktv.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let s = if sup > lambda { lambda / sup } else { 1.0 };
        s * v.iter().sum::<f64>()
    };

    let mut w = vec![0.0; d];
    let mut w_bar = w.clone();
    let mut v = vec![0.0; n];
    let mut ktv = vec![0.0; d];
    let mut best_w = w.clone();
    let mut best_primal = n as f64;
    let mut best_dual = 0.0f64;
    let check_every = 10;

    for it in 1..=cfg.max_iter {
        // v = clip(v + sigma (1 - K w_bar), 0, 1), the dual of the hinge.
        let kw = margins_of(&w_bar);
        for (vi, m) in v.iter_mut().zip(&kw) {
            *vi = (*vi + sigma * (1.0 - m)).clamp(0.0, 1.0);
        }
        for (j, col) in kt.rows().into_iter().enumerate() {
            ktv[j] = dot(col.as_slice().expect("standard layout"), &v);
        }
        let prev = w.clone();
        for j in 0..d {
            let z = w[j] + tau * ktv[j];
            w[j] = z.signum() * (z.abs() - tau * lambda).max(0.0);
        }
        for j in 0..d {
            w_bar[j] = 2.0 * w[j] - prev[j];
        }

        if it % check_every == 0 || it == cfg.max_iter {
            let p = primal(&w, &margins_of(&w));
            if p < best_primal {
                best_primal = p;
                best_w.copy_from_slice(&w);
            }
            best_dual = best_dual.max(dual(&v, &ktv));
            if best_primal - best_dual <= cfg.tol * best_primal.max(1.0) {
                return Ok((best_w, it, true));
            }
        }
    }
    Ok((best_w, cfg.max_iter, false))
}

pub fn l1_svm(ds: &LabeledDataset, cfg: &BaselineConfig, epsilon: f64) -> Result<BaselineFit> {
    require_standardized(ds)?;
    if ds.count_label(crate::dataset::Label::Positive) == 0
        || ds.count_label(crate::dataset::Label::Negative) == 0
    {
        return Err(SpaError::DegenerateInput(
            "l1-SVM needs both classes".into(),
        ));
    }
    let y = ds.label_signs();
    let (omega, iterations, converged) = l1_svm_pdhg(ds.data().view(), &y, cfg)?;
    let objective = l1_svm_objective(ds.data().view(), &y, &omega, cfg.lambda);
    let omega_raw = FeatureVector::new(omega);
    Ok(BaselineFit {
        omega_thresholded: hard_threshold(&omega_raw, epsilon),
        omega_raw,
        objective,
        iterations,
        converged,
        lambda_used: cfg.lambda,
    })
}

/// Tunes the penalty so that the thresholded vector has exactly
/// `tune.target_k` non-zeros. Counts fall as lambda grows.
pub fn tune_baseline(
    method: Baseline,
    ds: &LabeledDataset,
    base: &BaselineConfig,
    epsilon: f64,
    tune: &TuneConfig,
) -> Result<TuneOutcome<BaselineFit>> {
    tune_parameter(tune, Direction::Decreasing, |lambda| {
        let cfg = BaselineConfig {
            lambda,
            ..base.clone()
        };
        let fit = method.fit(ds, &cfg, epsilon)?;
        Ok((fit.omega_thresholded.nnz(), fit))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn lasso_orthonormal_design() {
        // Columns orthogonal with ||x_j||^2 = n, so the solution is the
        // soft-thresholded least-squares coefficient.
        let x = array![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        let y = [1.0, 1.0, -1.0, 1.0];
        let (w, _, converged) = lasso_cd(x.view(), &y, &BaselineConfig::lasso(0.1)).unwrap();
        assert!(converged);
        // x_1^T y / n = 0.5, x_2^T y / n = -0.5
        assert!((w[0] - 0.4).abs() < 1e-12);
        assert!((w[1] + 0.4).abs() < 1e-12);
    }

    #[test]
    fn lasso_zero_above_lambda_max() {
        let x = array![[1.0, 0.5], [-1.0, 0.5], [0.3, -1.0]];
        let y = [1.0, -1.0, 1.0];
        let c = correlation(x.view(), &y);
        let lmax = c.iter().fold(0.0f64, |a, v| a.max(v.abs())) / 3.0;
        let (w, _, _) = lasso_cd(x.view(), &y, &BaselineConfig::lasso(lmax * 1.001)).unwrap();
        assert!(w.iter().all(|v| *v == 0.0));
        let (w, _, _) = lasso_cd(x.view(), &y, &BaselineConfig::lasso(lmax * 0.99)).unwrap();
        assert!(w.iter().any(|v| *v != 0.0));
    }

    #[test]
    fn l1_svm_large_lambda_is_zero() {
        let x = array![[1.0, 0.2], [-1.0, 0.1], [2.0, -0.3]];
        let y = [1.0, -1.0, 1.0];
        let (w, _, converged) = l1_svm_pdhg(x.view(), &y, &BaselineConfig::l1_svm(100.0)).unwrap();
        assert!(converged);
        assert!(w.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn l1_svm_one_dimensional_sign() {
        let x = array![[2.0], [1.0], [-1.0], [-3.0]];
        let y = [-1.0, -1.0, 1.0, 1.0];
        let (w, _, converged) = l1_svm_pdhg(x.view(), &y, &BaselineConfig::l1_svm(0.1)).unwrap();
        assert!(converged);
        assert!(w[0] < 0.0);
        // Optimum: margin 1 at |x| = 1 gives w = -1, objective 0.1.
        let obj = l1_svm_objective(x.view(), &y, &w, 0.1);
        assert!((obj - 0.1).abs() < 1e-5, "{obj}");
    }

    #[test]
    fn unstandardized_rejected() {
        let ds = LabeledDataset::from_rows(
            &[vec![1.0], vec![2.0]],
            vec![
                crate::dataset::Label::Positive,
                crate::dataset::Label::Negative,
            ],
        )
        .unwrap();
        assert!(matches!(
            lasso(&ds, &BaselineConfig::lasso(0.1), 1e-3),
            Err(SpaError::PipelineOrder(_))
        ));
    }
}
