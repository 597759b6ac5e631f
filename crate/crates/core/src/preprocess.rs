//! Spectrum preprocessing: baseline removal, total-ion-count normalization,
//! Gaussian smoothing and per-feature standardization.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::dataset::{LabeledDataset, Spectrum, StandardizationStats, Step};
use crate::error::{Result, SpaError};

/// Sampled Gaussian density `G_sigma(k)` for integer offsets `-radius..=radius`.
///
/// The samples are the raw density values; the kernel is not rescaled to unit sum.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    samples: Vec<f64>,
}

impl GaussianKernel {
    /// Truncates at `radius = ceil(4 sigma)`.
    pub fn new(sigma: f64) -> Result<GaussianKernel> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(SpaError::param(format!(
                "smoothing sigma must be positive, got {sigma}"
            )));
        }
        let radius = ((4.0 * sigma).ceil() as usize).max(1);
        let norm = 1.0 / (2.0 * PI * sigma * sigma).sqrt();
        let samples = (0..=2 * radius)
            .map(|i| {
                let t = i as f64 - radius as f64;
                norm * (-(t * t) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        Ok(GaussianKernel {
            sigma,
            radius,
            samples,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `G_sigma(offset)`, zero beyond the truncation radius.
    pub fn at(&self, offset: isize) -> f64 {
        if offset.unsigned_abs() > self.radius {
            0.0
        } else {
            self.samples[(offset + self.radius as isize) as usize]
        }
    }
}

/// Zero-padded linear convolution of length-`d` signals with a fixed kernel,
/// evaluated through a power-of-two FFT.
pub struct FftSmoother {
    d: usize,
    radius: usize,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_spectrum: Vec<Complex<f64>>,
}

impl FftSmoother {
    pub fn new(kernel: &GaussianKernel, d: usize) -> FftSmoother {
        let radius = kernel.radius();
        let len = (d + 2 * radius).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);

        let mut kernel_spectrum = vec![Complex::new(0.0, 0.0); len];
        for (slot, &g) in kernel_spectrum.iter_mut().zip(kernel.samples()) {
            slot.re = g;
        }
        forward.process(&mut kernel_spectrum);
        FftSmoother {
            d,
            radius,
            len,
            forward,
            inverse,
            kernel_spectrum,
        }
    }

    /// `out[k] = sum_l x[l] * G(k - l)` for `k` in `0..d`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.d, "signal length does not match smoother");
        let mut buf = vec![Complex::new(0.0, 0.0); self.len];
        for (slot, &v) in buf.iter_mut().zip(x) {
            slot.re = v;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf[self.radius..self.radius + self.d]
            .iter()
            .map(|c| c.re * scale)
            .collect()
    }
}

/// Scales every spectrum to unit l1 norm (total ion count).
pub fn normalize_tic(ds: &LabeledDataset) -> Result<LabeledDataset> {
    let mut data = ds.data().clone();
    for (i, mut row) in data.axis_iter_mut(Axis(0)).enumerate() {
        let tic: f64 = row.iter().map(|v| v.abs()).sum();
        if !(tic > 0.0) || !tic.is_finite() {
            return Err(SpaError::DegenerateInput(format!(
                "spectrum {i} has total ion count {tic}; cannot normalize"
            )));
        }
        row.mapv_inplace(|v| v / tic);
    }
    Ok(ds.derive(data, Step::Normalized))
}

pub fn smooth_spectrum(x: &Spectrum, sigma: f64) -> Result<Spectrum> {
    let kernel = GaussianKernel::new(sigma)?;
    let smoother = FftSmoother::new(&kernel, x.len());
    Ok(x.with_intensities(smoother.apply(x.intensities())))
}

/// Convolves every spectrum with the sampled Gaussian density, zero padding at
/// both ends.
pub fn smooth_gaussian(ds: &LabeledDataset, sigma: f64) -> Result<LabeledDataset> {
    let kernel = GaussianKernel::new(sigma)?;
    let smoother = FftSmoother::new(&kernel, ds.d());
    let rows: Vec<Vec<f64>> = ds
        .data()
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| {
            let x: Vec<f64> = row.iter().copied().collect();
            smoother.apply(&x)
        })
        .collect();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let data = Array2::from_shape_vec((ds.n(), ds.d()), flat).expect("shape preserved");
    Ok(ds.derive(data, Step::Smoothed))
}

/// Centers each feature and divides non-constant features by their population
/// standard deviation. Constant features become all-zero and are flagged.
pub fn standardize(ds: &LabeledDataset) -> Result<(LabeledDataset, StandardizationStats)> {
    let n = ds.n();
    if n < 2 {
        return Err(SpaError::param(format!(
            "standardization needs n >= 2 spectra, got {n}"
        )));
    }
    let d = ds.d();
    let x = ds.data();
    let mut mean = vec![0.0; d];
    let mut std = vec![0.0; d];
    let mut constant_mask = vec![false; d];
    let mut data = x.clone();

    for (j, mut col) in data.axis_iter_mut(Axis(1)).enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            mean[j] = first;
            constant_mask[j] = true;
            col.fill(0.0);
            continue;
        }
        let m = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        let s = var.sqrt();
        mean[j] = m;
        std[j] = s;
        col.mapv_inplace(|v| (v - m) / s);
    }

    let mut out = ds.derive(data, Step::Standardized);
    out.set_constant_mask(constant_mask.clone());
    Ok((
        out,
        StandardizationStats {
            mean,
            std,
            constant_mask,
        },
    ))
}

fn check_window(window: usize) -> Result<()> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(SpaError::param(format!(
            "TopHat window must be odd and at least 3, got {window}"
        )));
    }
    Ok(())
}

/// Sliding extremum over `[i - half, i + half]` clamped to the signal, via a
/// monotone deque. `keep_front(a, b)` is true when `a` should stay ahead of `b`.
fn sliding_extremum(x: &[f64], half: usize, keep_front: impl Fn(f64, f64) -> bool) -> Vec<f64> {
    let d = x.len();
    let mut out = Vec::with_capacity(d);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..d {
        let hi = (i + half).min(d - 1);
        while next <= hi {
            while deque.back().is_some_and(|&b| !keep_front(x[b], x[next])) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(half);
        while deque.front().is_some_and(|&f| f < lo) {
            deque.pop_front();
        }
        out.push(x[*deque.front().expect("window is never empty")]);
    }
    out
}

pub fn erosion(x: &[f64], window: usize) -> Vec<f64> {
    sliding_extremum(x, window / 2, |a, b| a < b)
}

pub fn dilation(x: &[f64], window: usize) -> Vec<f64> {
    sliding_extremum(x, window / 2, |a, b| a > b)
}

/// Morphological opening with a flat structuring element of width `window`.
pub fn opening(x: &[f64], window: usize) -> Result<Vec<f64>> {
    check_window(window)?;
    Ok(dilation(&erosion(x, window), window))
}

/// TopHat baseline removal: `x - opening(x)`. Never negative.
pub fn tophat_baseline(x: &Spectrum, window: usize) -> Result<Spectrum> {
    let open = opening(x.intensities(), window)?;
    let out = x
        .intensities()
        .iter()
        .zip(&open)
        .map(|(v, o)| v - o)
        .collect();
    Ok(x.with_intensities(out))
}

pub fn remove_baseline(ds: &LabeledDataset, window: usize) -> Result<LabeledDataset> {
    check_window(window)?;
    let mut data = ds.data().clone();
    for mut row in data.axis_iter_mut(Axis(0)) {
        let x: Vec<f64> = row.iter().copied().collect();
        let open = dilation(&erosion(&x, window), window);
        for ((r, v), o) in row.iter_mut().zip(&x).zip(&open) {
            *r = v - o;
        }
    }
    Ok(ds.derive(data, Step::BaselineRemoved))
}

/// Preprocessing parameters shared by every selection method.
#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessConfig {
    /// TopHat window; `None` skips baseline removal.
    pub tophat_window: Option<usize>,
    pub normalize: bool,
    /// Gaussian smoothing width in channels; `None` skips smoothing.
    pub smoothing_sigma: Option<f64>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            tophat_window: None,
            normalize: true,
            smoothing_sigma: Some(2.0),
        }
    }
}
