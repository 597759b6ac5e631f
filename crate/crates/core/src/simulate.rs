//! Synthetic labeled spectra with a known sparse ground truth.
//!
//! Each spectrum is a sum of `M` Gaussian peaks at fixed, equidistant
//! positions with jointly Gaussian amplitudes `s ~ N(0, Sigma)`, plus white
//! noise. Labels are `sign(<x, w0>)` where `w0` is +1 at the centers of the
//! condition-positive peaks and 0 elsewhere.
//!
//! Every sample draws from its own ChaCha stream keyed by `(seed, index)`, so
//! generation is reproducible regardless of how samples are scheduled.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dataset::{default_channels, FeatureVector, Label, LabeledDataset};
use crate::error::{Result, SpaError};

/// A Gaussian peak of unit height, stored over its truncated extent.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub center: usize,
    pub start: usize,
    pub values: Vec<f64>,
}

impl Atom {
    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        out[self.start..self.start + self.values.len()].copy_from_slice(&self.values);
        out
    }

    fn add_scaled(&self, scale: f64, x: &mut [f64]) {
        for (xi, v) in x[self.start..].iter_mut().zip(&self.values) {
            *xi += scale * v;
        }
    }
}

/// Center of peak `m` out of `count` spread over `len` slots.
fn equidistant(m: usize, count: usize, len: usize) -> usize {
    (((m as f64 + 0.5) * len as f64) / count as f64).floor() as usize
}

/// `M` unit-height Gaussian bumps of standard deviation `peak_width`, centered
/// at `floor((m + 1/2) d / M)` and truncated at four widths.
pub fn make_peak_dictionary(d: usize, num_peaks: usize, peak_width: f64) -> Result<Vec<Atom>> {
    if num_peaks == 0 || d == 0 {
        return Err(SpaError::param("dimension and peak count must be positive"));
    }
    if (d as f64) / (num_peaks as f64) < 1.0 {
        return Err(SpaError::param(format!(
            "{num_peaks} peaks do not fit in {d} channels (spacing below one channel)"
        )));
    }
    if !(peak_width > 0.0) {
        return Err(SpaError::param(format!(
            "peak width must be positive, got {peak_width}"
        )));
    }
    let reach = (4.0 * peak_width).floor() as usize;
    Ok((0..num_peaks)
        .map(|m| {
            let center = equidistant(m, num_peaks, d);
            let start = center.saturating_sub(reach);
            let end = (center + reach).min(d - 1);
            let values = (start..=end)
                .map(|k| {
                    let t = k as f64 - center as f64;
                    (-(t * t) / (2.0 * peak_width * peak_width)).exp()
                })
                .collect();
            Atom {
                center,
                start,
                values,
            }
        })
        .collect())
}

/// Peak indices of the condition-positive peaks: `support_size` peaks spread
/// evenly over the `M` peaks.
pub fn condition_positive_peaks(num_peaks: usize, support_size: usize) -> Vec<usize> {
    (0..support_size)
        .map(|k| equidistant(k, support_size, num_peaks))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum CorrelationKind {
    /// Independent unit-variance amplitudes.
    Ds1,
    /// Three correlated pairs of negative peaks plus one positive peak
    /// correlated with a negative peak, all at 0.8.
    Ds2,
    Custom(DMatrix<f64>),
}

impl CorrelationKind {
    pub fn name(&self) -> &'static str {
        match self {
            CorrelationKind::Ds1 => "ds1",
            CorrelationKind::Ds2 => "ds2",
            CorrelationKind::Custom(_) => "custom",
        }
    }
}

const DS2_CORRELATION: f64 = 0.8;

/// Amplitude covariance together with its lower Cholesky factor.
#[derive(Clone, Debug)]
pub struct PeakCovariance {
    pub sigma: DMatrix<f64>,
    /// Off-diagonal pairs `(a, b)`, `a < b`, that were set to a non-zero value.
    pub correlated_pairs: Vec<(usize, usize)>,
    factor: Option<DMatrix<f64>>,
}

impl PeakCovariance {
    pub fn from_matrix(sigma: DMatrix<f64>) -> Result<PeakCovariance> {
        let m = sigma.nrows();
        if sigma.ncols() != m || m == 0 {
            return Err(SpaError::param(
                "covariance must be a non-empty square matrix",
            ));
        }
        let mut pairs = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                if sigma[(a, b)] != sigma[(b, a)] {
                    return Err(SpaError::param(format!(
                        "covariance is not symmetric at ({a}, {b})"
                    )));
                }
                if sigma[(a, b)] != 0.0 {
                    pairs.push((a, b));
                }
            }
        }
        let identity = pairs.is_empty() && (0..m).all(|i| sigma[(i, i)] == 1.0);
        let factor = if identity {
            None
        } else {
            let chol = sigma
                .clone()
                .cholesky()
                .ok_or_else(|| SpaError::param("covariance is not positive definite"))?;
            Some(chol.l())
        };
        Ok(PeakCovariance {
            sigma,
            correlated_pairs: pairs,
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// One amplitude vector `L z` with `z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        match &self.factor {
            None => z,
            Some(l) => (0..self.dim())
                .map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum())
                .collect(),
        }
    }
}

/// Builds the amplitude covariance. For DS2 the correlated negative peaks are
/// the lowest-index peaks outside `positive_peaks`.
pub fn build_correlation(
    kind: &CorrelationKind,
    num_peaks: usize,
    positive_peaks: &[usize],
) -> Result<PeakCovariance> {
    match kind {
        CorrelationKind::Ds1 => {
            PeakCovariance::from_matrix(DMatrix::identity(num_peaks, num_peaks))
        }
        CorrelationKind::Ds2 => {
            let &first_positive = positive_peaks
                .first()
                .ok_or_else(|| SpaError::param("DS2 needs at least one condition-positive peak"))?;
            let negatives: Vec<usize> = (0..num_peaks)
                .filter(|m| !positive_peaks.contains(m))
                .take(7)
                .collect();
            if negatives.len() < 7 {
                return Err(SpaError::param(
                    "DS2 needs at least 7 condition-negative peaks",
                ));
            }
            let mut sigma = DMatrix::identity(num_peaks, num_peaks);
            let mut link = |a: usize, b: usize| {
                sigma[(a, b)] = DS2_CORRELATION;
                sigma[(b, a)] = DS2_CORRELATION;
            };
            for pair in negatives[..6].chunks(2) {
                link(pair[0], pair[1]);
            }
            link(first_positive, negatives[6]);
            PeakCovariance::from_matrix(sigma)
        }
        CorrelationKind::Custom(sigma) => {
            if sigma.nrows() != num_peaks {
                return Err(SpaError::param(format!(
                    "custom covariance is {}x{}, expected {num_peaks}x{num_peaks}",
                    sigma.nrows(),
                    sigma.ncols()
                )));
            }
            PeakCovariance::from_matrix(sigma.clone())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub d: usize,
    pub num_peaks: usize,
    /// Gaussian standard deviation of each peak, in channels.
    pub peak_width: f64,
    pub support_size: usize,
    pub correlation: CorrelationKind,
    pub noise_sigma: f64,
    pub n: usize,
    pub seed: u64,
}

impl SimulationConfig {
    /// 8192 channels, 200 peaks of width 10, 5 condition-positive peaks,
    /// independent amplitudes, noise 0.1.
    pub fn ds1(n: usize, seed: u64) -> SimulationConfig {
        SimulationConfig {
            d: 8192,
            num_peaks: 200,
            peak_width: 10.0,
            support_size: 5,
            correlation: CorrelationKind::Ds1,
            noise_sigma: 0.1,
            n,
            seed,
        }
    }

    pub fn ds2(n: usize, seed: u64) -> SimulationConfig {
        SimulationConfig {
            correlation: CorrelationKind::Ds2,
            ..SimulationConfig::ds1(n, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SpaError::param("sample count must be positive"));
        }
        if self.support_size == 0 || self.support_size > self.num_peaks {
            return Err(SpaError::param(format!(
                "support size {} must be in 1..={}",
                self.support_size, self.num_peaks
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(SpaError::param("noise sigma must be non-negative"));
        }
        Ok(())
    }
}

/// What the generator knows that the selector must recover.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub omega0: FeatureVector,
    /// Centers of the condition-positive peaks; equals `supp(omega0)`.
    pub true_peak_centers: Vec<usize>,
    pub peak_width: f64,
    /// Centers of all `M` peaks.
    pub all_peak_centers: Vec<usize>,
    /// Peak indices (into `all_peak_centers`) that are condition-positive.
    pub positive_peaks: Vec<usize>,
    /// Correlated peak pairs, as peak indices.
    pub correlated_pairs: Vec<(usize, usize)>,
}

impl GroundTruth {
    pub fn num_peaks(&self) -> usize {
        self.all_peak_centers.len()
    }

    pub fn support_size(&self) -> usize {
        self.true_peak_centers.len()
    }
}

/// Per-sample random stream keyed by `(seed, index)`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn generate_dataset(cfg: &SimulationConfig) -> Result<(LabeledDataset, GroundTruth)> {
    cfg.validate()?;
    let atoms = make_peak_dictionary(cfg.d, cfg.num_peaks, cfg.peak_width)?;
    let positive_peaks = condition_positive_peaks(cfg.num_peaks, cfg.support_size);
    let cov = build_correlation(&cfg.correlation, cfg.num_peaks, &positive_peaks)?;
    let centers: Vec<usize> = positive_peaks.iter().map(|&m| atoms[m].center).collect();
    let mut omega0 = vec![0.0; cfg.d];
    for &c in &centers {
        omega0[c] = 1.0;
    }

    let rows: Vec<(Vec<f64>, Label)> = (0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i as u64);
            let amplitudes = cov.sample(&mut rng);
            let mut x = vec![0.0; cfg.d];
            for (atom, s) in atoms.iter().zip(&amplitudes) {
                atom.add_scaled(*s, &mut x);
            }
            if cfg.noise_sigma > 0.0 {
                for v in x.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += cfg.noise_sigma * z;
                }
            }
            let score: f64 = centers.iter().map(|&c| omega0[c] * x[c]).sum();
            (x, Label::from_value(score))
        })
        .collect();

    let mut flat = Vec::with_capacity(cfg.n * cfg.d);
    let mut labels = Vec::with_capacity(cfg.n);
    for (x, y) in rows {
        flat.extend_from_slice(&x);
        labels.push(y);
    }
    let data = Array2::from_shape_vec((cfg.n, cfg.d), flat).expect("n x d samples");
    let ds = LabeledDataset::new(default_channels(cfg.d), data, labels)?;
    let truth = GroundTruth {
        omega0: FeatureVector::new(omega0),
        true_peak_centers: centers,
        peak_width: cfg.peak_width,
        all_peak_centers: atoms.iter().map(|a| a.center).collect(),
        positive_peaks,
        correlated_pairs: cov.correlated_pairs.clone(),
    };
    Ok((ds, truth))
}

/// Signal-to-noise ratio as RMS peak amplitude over noise standard deviation,
/// `sqrt(signal_power) / noise_sigma`. With unit-variance amplitudes this gives
/// 10 at `noise_sigma = 0.1` and 3.33 at 0.3.
pub fn snr(signal_power: f64, noise_sigma: f64) -> f64 {
    if signal_power <= 0.0 {
        return 0.0;
    }
    if noise_sigma <= 0.0 {
        return f64::INFINITY;
    }
    signal_power.sqrt() / noise_sigma
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Robust white-noise level of one spectrum: the median absolute deviation of
/// its second differences, rescaled to a Gaussian standard deviation. Smooth
/// peaks contribute little to second differences, so no flat region is needed.
pub fn estimate_noise_sigma(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return f64::NAN;
    }
    let mut diffs: Vec<f64> = x.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let med = median(&mut diffs);
    let mut dev: Vec<f64> = diffs.iter().map(|v| (v - med).abs()).collect();
    // MAD -> sigma for a Gaussian, and Var(second difference) = 6 sigma^2.
    median(&mut dev) / 0.674_489_750_196_081_7 / 6f64.sqrt()
}

/// SNR estimated from data: signal power is the mean squared intensity at
/// `peak_centers` minus the estimated noise variance; noise is the median of
/// per-spectrum [`estimate_noise_sigma`] values.
pub fn empirical_snr(ds: &LabeledDataset, peak_centers: &[usize]) -> f64 {
    let mut sigmas: Vec<f64> = ds
        .data()
        .rows()
        .into_iter()
        .map(|r| estimate_noise_sigma(&r.to_vec()))
        .collect();
    let sigma = median(&mut sigmas);
    let mut power = 0.0;
    for row in ds.data().rows() {
        for &c in peak_centers {
            power += row[c] * row[c];
        }
    }
    power /= (ds.n() * peak_centers.len()) as f64;
    snr(power - sigma * sigma, sigma)
}

const TRUTH_MAGIC: &str = "spa-ground-truth";
const TRUTH_VERSION: &str = "v1";

pub fn render_ground_truth(truth: &GroundTruth, channels: &[f64]) -> String {
    let mut out = format!(
        "# {TRUTH_MAGIC} {TRUTH_VERSION} d={} width={}\n",
        truth.omega0.d(),
        truth.peak_width
    );
    for (a, b) in &truth.correlated_pairs {
        let _ = writeln!(out, "# correlated {a} {b}");
    }
    out.push_str("peak,center,channel,positive\n");
    for (m, &c) in truth.all_peak_centers.iter().enumerate() {
        let positive = u8::from(truth.positive_peaks.contains(&m));
        let _ = writeln!(out, "{m},{c},{},{positive}", channels[c]);
    }
    out
}

pub fn write_ground_truth(
    truth: &GroundTruth,
    channels: &[f64],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_ground_truth(truth, channels)).map_err(|e| SpaError::io(path, e))
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SpaError::io(path, e))?;
    parse_ground_truth(&text, &path.display().to_string())
}

pub fn parse_ground_truth(text: &str, source: &str) -> Result<GroundTruth> {
    let mut d = None;
    let mut width = None;
    let mut pairs = Vec::new();
    let mut centers = Vec::new();
    let mut positive_peaks = Vec::new();
    let mut seen_magic = false;
    let mut seen_columns = false;

    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let words: Vec<&str> = comment.split_whitespace().collect();
            match words.as_slice() {
                [TRUTH_MAGIC, version, rest @ ..] => {
                    if *version != TRUTH_VERSION {
                        return Err(SpaError::Version {
                            path: source.to_string(),
                            found: version.to_string(),
                            expected: TRUTH_VERSION.to_string(),
                        });
                    }
                    for kv in rest {
                        if let Some(v) = kv.strip_prefix("d=") {
                            d = v.parse::<usize>().ok();
                        } else if let Some(v) = kv.strip_prefix("width=") {
                            width = v.parse::<f64>().ok();
                        }
                    }
                    seen_magic = true;
                }
                ["correlated", a, b] => {
                    let a = a
                        .parse()
                        .map_err(|_| SpaError::parse(source, row, "bad pair"))?;
                    let b = b
                        .parse()
                        .map_err(|_| SpaError::parse(source, row, "bad pair"))?;
                    pairs.push((a, b));
                }
                _ => {}
            }
            continue;
        }
        if !seen_magic {
            return Err(SpaError::parse(
                source,
                row,
                "missing ground-truth header comment",
            ));
        }
        if !seen_columns {
            if line != "peak,center,channel,positive" {
                return Err(SpaError::parse(source, row, "expected column header"));
            }
            seen_columns = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(SpaError::parse(source, row, "expected 4 fields"));
        }
        let peak: usize = fields[0]
            .parse()
            .map_err(|_| SpaError::parse(source, row, "bad peak"))?;
        let center: usize = fields[1]
            .parse()
            .map_err(|_| SpaError::parse(source, row, "bad center"))?;
        if peak != centers.len() {
            return Err(SpaError::parse(
                source,
                row,
                "peaks must be listed in order",
            ));
        }
        centers.push(center);
        match fields[3] {
            "1" => positive_peaks.push(peak),
            "0" => {}
            _ => return Err(SpaError::parse(source, row, "positive flag must be 0 or 1")),
        }
    }
    let (Some(d), Some(width)) = (d, width) else {
        return Err(SpaError::parse(source, 1, "header lacks d= or width="));
    };
    let mut omega0 = vec![0.0; d];
    let true_centers: Vec<usize> = positive_peaks.iter().map(|&m| centers[m]).collect();
    for &c in &true_centers {
        if c >= d {
            return Err(SpaError::parse(
                source,
                0,
                format!("center {c} out of range"),
            ));
        }
        omega0[c] = 1.0;
    }
    Ok(GroundTruth {
        omega0: FeatureVector::new(omega0),
        true_peak_centers: true_centers,
        peak_width: width,
        all_peak_centers: centers,
        positive_peaks,
        correlated_pairs: pairs,
    })
}

/// Spiked-style fixture: non-negative spectra with a decaying baseline and
/// background peaks common to both classes; the case class additionally
/// carries `spike_centers` peaks of height `spike_amplitude` (times a
/// per-spectrum log-normal factor).
#[derive(Clone, Debug, PartialEq)]
pub struct SpikedConfig {
    pub d: usize,
    pub n_control: usize,
    pub n_case: usize,
    pub num_background: usize,
    pub num_spikes: usize,
    pub peak_width: f64,
    pub spike_amplitude: f64,
    pub noise_level: f64,
    pub seed: u64,
}

impl SpikedConfig {
    /// 64 spectra (32 control, 32 case) of 2048 channels with six spikes.
    pub fn fixture(spike_amplitude: f64, seed: u64) -> SpikedConfig {
        SpikedConfig {
            d: 2048,
            n_control: 32,
            n_case: 32,
            num_background: 40,
            num_spikes: 6,
            peak_width: 3.0,
            spike_amplitude,
            noise_level: 1.0,
            seed,
        }
    }
}

/// Spike amplitudes, in units of the noise level, from undetectable to strong.
pub const SPIKE_LADDER: [f64; 5] = [0.0, 2.0, 5.0, 10.0, 25.0];

/// Returns the dataset (control = -1, case = +1) and a ground truth whose
/// positive peaks are the spikes and whose negative peaks are the background.
pub fn generate_spiked(cfg: &SpikedConfig) -> Result<(LabeledDataset, GroundTruth)> {
    let total = cfg.num_background + cfg.num_spikes;
    let atoms = make_peak_dictionary(cfg.d, total, cfg.peak_width)?;
    // Spikes sit between background peaks: every k-th atom.
    let stride = total / cfg.num_spikes.max(1);
    let spike_peaks: Vec<usize> = (0..cfg.num_spikes)
        .map(|k| k * stride + stride / 2)
        .collect();
    let background_height: Vec<f64> = {
        let mut rng = sample_rng(cfg.seed, u64::MAX);
        (0..total)
            .map(|_| 5.0 + 45.0 * rng.random::<f64>())
            .collect()
    };
    let n = cfg.n_control + cfg.n_case;

    let rows: Vec<(Vec<f64>, Label)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let case = i >= cfg.n_control;
            let mut rng = sample_rng(cfg.seed, i as u64);
            let mut x: Vec<f64> = (0..cfg.d)
                .map(|j| 30.0 * (-(j as f64) / (cfg.d as f64 / 4.0)).exp())
                .collect();
            for (m, atom) in atoms.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                let height = if spike_peaks.contains(&m) {
                    if case {
                        cfg.spike_amplitude * cfg.noise_level * (0.25 * z).exp()
                    } else {
                        0.0
                    }
                } else {
                    background_height[m] * (0.3 * z).exp()
                };
                atom.add_scaled(height, &mut x);
            }
            for v in x.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = (*v + cfg.noise_level * z).max(0.0);
            }
            (
                x,
                if case {
                    Label::Positive
                } else {
                    Label::Negative
                },
            )
        })
        .collect();

    let mut flat = Vec::with_capacity(n * cfg.d);
    let mut labels = Vec::with_capacity(n);
    for (x, y) in rows {
        flat.extend_from_slice(&x);
        labels.push(y);
    }
    let data = Array2::from_shape_vec((n, cfg.d), flat).expect("n x d samples");
    let ds = LabeledDataset::new(default_channels(cfg.d), data, labels)?;
    let centers: Vec<usize> = spike_peaks.iter().map(|&m| atoms[m].center).collect();
    let mut omega0 = vec![0.0; cfg.d];
    for &c in &centers {
        omega0[c] = 1.0;
    }
    Ok((
        ds,
        GroundTruth {
            omega0: FeatureVector::new(omega0),
            true_peak_centers: centers,
            peak_width: cfg.peak_width,
            all_peak_centers: atoms.iter().map(|a| a.center).collect(),
            positive_peaks: spike_peaks,
            correlated_pairs: Vec::new(),
        },
    ))
}
