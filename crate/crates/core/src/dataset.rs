//! Spectra, labeled datasets and sparse feature vectors, plus their CSV forms.
//!
//! Every algorithm in the crate works on channel *indices*; the channel
//! coordinates (m/z values) travel along only as reporting metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Result, SpaError};

/// Class label of one spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    /// `sign(0) = +1`.
    pub fn from_value(v: f64) -> Label {
        if v >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    fn parse(token: &str) -> Option<Label> {
        match token.trim() {
            "+1" | "1" | "+1.0" | "1.0" => Some(Label::Positive),
            "-1" | "\u{2212}1" | "-1.0" | "\u{2212}1.0" => Some(Label::Negative),
            _ => None,
        }
    }

    fn as_token(self) -> &'static str {
        match self {
            Label::Positive => "+1",
            Label::Negative => "-1",
        }
    }
}

/// A preprocessing step that has been applied to a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Normalized = 1,
    Smoothed = 2,
    Standardized = 4,
    BaselineRemoved = 8,
}

/// Monotone set of applied preprocessing steps. Flags can be added, never removed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Provenance(u8);

impl Provenance {
    pub fn contains(self, step: Step) -> bool {
        self.0 & step as u8 != 0
    }

    pub fn with(self, step: Step) -> Provenance {
        Provenance(self.0 | step as u8)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// One intensity vector on its channel axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    channels: Vec<f64>,
    intensities: Vec<f64>,
}

impl Spectrum {
    pub fn new(channels: Vec<f64>, intensities: Vec<f64>) -> Result<Spectrum> {
        check_axis(&channels)?;
        if channels.len() != intensities.len() {
            return Err(SpaError::param(format!(
                "spectrum has {} channels but {} intensities",
                channels.len(),
                intensities.len()
            )));
        }
        Ok(Spectrum {
            channels,
            intensities,
        })
    }

    /// Spectrum on the default axis `1..=d`.
    pub fn from_intensities(intensities: Vec<f64>) -> Result<Spectrum> {
        Spectrum::new(default_channels(intensities.len()), intensities)
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn channels(&self) -> &[f64] {
        &self.channels
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub(crate) fn with_intensities(&self, intensities: Vec<f64>) -> Spectrum {
        debug_assert_eq!(intensities.len(), self.channels.len());
        Spectrum {
            channels: self.channels.clone(),
            intensities,
        }
    }
}

/// Accepts `x` iff every intensity is finite. Missing values (empty CSV cells,
/// `NaN`) and infinities are reported by channel index; nothing is imputed.
pub fn validate_for_prediction(x: &Spectrum) -> Result<()> {
    let indices = non_finite_indices(x.intensities().iter().copied());
    if indices.is_empty() {
        Ok(())
    } else {
        Err(SpaError::MissingData { indices })
    }
}

fn non_finite_indices(values: impl Iterator<Item = f64>) -> Vec<usize> {
    values
        .enumerate()
        .filter(|(_, v)| !v.is_finite())
        .map(|(j, _)| j)
        .collect()
}

pub fn default_channels(d: usize) -> Vec<f64> {
    (1..=d).map(|c| c as f64).collect()
}

fn check_axis(channels: &[f64]) -> Result<()> {
    if channels.is_empty() {
        return Err(SpaError::param("channel axis must have at least one entry"));
    }
    if let Some(k) = channels.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(SpaError::param(format!(
            "channel axis not strictly increasing at index {}",
            k + 1
        )));
    }
    Ok(())
}

/// `n` spectra on one shared channel axis, with ±1 labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    channels: Vec<f64>,
    data: Array2<f64>,
    labels: Vec<Label>,
    provenance: Provenance,
    constant_mask: Option<Vec<bool>>,
}

impl LabeledDataset {
    /// `data` is `n x d`, one spectrum per row.
    pub fn new(channels: Vec<f64>, data: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        check_axis(&channels)?;
        if data.ncols() != channels.len() {
            return Err(SpaError::param(format!(
                "data has {} columns but the channel axis has {} entries",
                data.ncols(),
                channels.len()
            )));
        }
        if data.nrows() != labels.len() {
            return Err(SpaError::param(format!(
                "{} spectra but {} labels",
                data.nrows(),
                labels.len()
            )));
        }
        Ok(LabeledDataset {
            channels,
            data,
            labels,
            provenance: Provenance::default(),
            constant_mask: None,
        })
    }

    /// Builds a dataset on the default axis `1..=d` from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(SpaError::param(format!(
                "row {i} has {} entries, expected {d}",
                rows[i].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| SpaError::param(e.to_string()))?;
        LabeledDataset::new(default_channels(d), data, labels)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    pub fn channels(&self) -> &[f64] {
        &self.channels
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label_signs(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.sign()).collect()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Zero-variance features flagged by standardization, if it has run.
    pub fn constant_mask(&self) -> Option<&[bool]> {
        self.constant_mask.as_deref()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn spectrum(&self, i: usize) -> Spectrum {
        Spectrum {
            channels: self.channels.clone(),
            intensities: self.data.row(i).to_vec(),
        }
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Rows at `indices`, in that order. Provenance carries over.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            channels: self.channels.clone(),
            data: self.data.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance,
            constant_mask: self.constant_mask.clone(),
        }
    }

    /// Errors with the channel indices of every non-finite entry.
    pub fn check_complete(&self) -> Result<()> {
        let mut cols: Vec<usize> = self
            .data
            .indexed_iter()
            .filter(|(_, v)| !v.is_finite())
            .map(|((_, j), _)| j)
            .collect();
        cols.sort_unstable();
        cols.dedup();
        if cols.is_empty() {
            Ok(())
        } else {
            Err(SpaError::MissingData { indices: cols })
        }
    }

    /// Same axis and labels, new intensities, one more provenance flag.
    pub(crate) fn derive(&self, data: Array2<f64>, step: Step) -> LabeledDataset {
        debug_assert_eq!(data.dim(), self.data.dim());
        LabeledDataset {
            channels: self.channels.clone(),
            data,
            labels: self.labels.clone(),
            provenance: self.provenance.with(step),
            constant_mask: self.constant_mask.clone(),
        }
    }

    pub(crate) fn set_constant_mask(&mut self, mask: Vec<bool>) {
        self.constant_mask = Some(mask);
    }
}

/// A d-dimensional weight vector together with its sorted support.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    weights: Vec<f64>,
    support: Vec<usize>,
}

impl FeatureVector {
    pub fn new(weights: Vec<f64>) -> FeatureVector {
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(k, _)| k)
            .collect();
        FeatureVector { weights, support }
    }

    pub fn zeros(d: usize) -> FeatureVector {
        FeatureVector {
            weights: vec![0.0; d],
            support: Vec::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// Per-feature moments recorded by standardization.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub constant_mask: Vec<bool>,
}

fn parse_value(token: &str) -> std::result::Result<f64, ()> {
    let t = token.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    t.parse::<f64>().map_err(|_| ())
}

/// Reads a dataset CSV: an optional `mz,<c_1>,...,<c_d>` header line, then one
/// `<label>,<v_1>,...,<v_d>` line per spectrum. Empty cells and `NaN` load as
/// missing (`NaN`) values; [`LabeledDataset::check_complete`] reports them.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SpaError::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

pub fn parse_dataset(text: &str, source: &str) -> Result<LabeledDataset> {
    let mut channels: Option<Vec<f64>> = None;
    let mut d: Option<usize> = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let first = fields.next().unwrap_or("").trim();
        if first.eq_ignore_ascii_case("mz") {
            if channels.is_some() || !labels.is_empty() {
                return Err(SpaError::parse(
                    source,
                    row,
                    "header must be the first line",
                ));
            }
            let axis = fields
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| SpaError::parse(source, row, format!("bad channel value: {e}")))?;
            check_axis(&axis).map_err(|e| SpaError::parse(source, row, e.to_string()))?;
            d = Some(axis.len());
            channels = Some(axis);
            continue;
        }
        let label = Label::parse(first).ok_or_else(|| {
            SpaError::parse(source, row, format!("label {first:?} is not one of +1/-1"))
        })?;
        let start = values.len();
        for (k, field) in fields.enumerate() {
            let v = parse_value(field).map_err(|_| {
                SpaError::parse(
                    source,
                    row,
                    format!("bad value {:?} in column {}", field, k + 1),
                )
            })?;
            values.push(v);
        }
        let len = values.len() - start;
        match d {
            None => d = Some(len),
            Some(expected) if expected != len => {
                return Err(SpaError::parse(
                    source,
                    row,
                    format!("expected {expected} values, found {len}"),
                ))
            }
            Some(_) => {}
        }
        labels.push(label);
    }

    let d = match d {
        Some(d) if d > 0 => d,
        _ => return Err(SpaError::parse(source, 0, "no intensity columns")),
    };
    if labels.is_empty() {
        return Err(SpaError::parse(source, 0, "no spectra"));
    }
    let data = Array2::from_shape_vec((labels.len(), d), values)
        .map_err(|e| SpaError::parse(source, 0, e.to_string()))?;
    let channels = channels.unwrap_or_else(|| default_channels(d));
    LabeledDataset::new(channels, data, labels)
}

pub fn render_dataset(ds: &LabeledDataset) -> String {
    let mut out = String::with_capacity(ds.n() * ds.d() * 12);
    out.push_str("mz");
    for c in ds.channels() {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (row, label) in ds.data().rows().into_iter().zip(ds.labels()) {
        out.push_str(label.as_token());
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_dataset(ds)).map_err(|e| SpaError::io(path, e))
}

const FEATURE_MAGIC: &str = "spa-feature-vector";
const FEATURE_VERSION: &str = "v1";

/// A feature vector read back from disk, with the channel of each support entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedFeatures {
    pub vector: FeatureVector,
    pub channels: Vec<f64>,
}

pub fn render_feature_vector(omega: &FeatureVector, channels: &[f64]) -> Result<String> {
    if omega.d() != channels.len() {
        return Err(SpaError::param(format!(
            "feature vector has d={} but {} channels were given",
            omega.d(),
            channels.len()
        )));
    }
    let mut out = format!(
        "# {FEATURE_MAGIC} {FEATURE_VERSION} d={}\nindex,channel,weight\n",
        omega.d()
    );
    for &k in omega.support() {
        let _ = writeln!(out, "{k},{},{}", channels[k], omega.weights()[k]);
    }
    Ok(out)
}

pub fn save_feature_vector(
    omega: &FeatureVector,
    channels: &[f64],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = render_feature_vector(omega, channels)?;
    fs::write(path, text).map_err(|e| SpaError::io(path, e))
}

pub fn load_feature_vector(path: impl AsRef<Path>) -> Result<SavedFeatures> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SpaError::io(path, e))?;
    parse_feature_vector(&text, &path.display().to_string())
}

pub fn parse_feature_vector(text: &str, source: &str) -> Result<SavedFeatures> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let (row, magic) = lines
        .next()
        .ok_or_else(|| SpaError::parse(source, 1, "empty feature file"))?;
    let header: Vec<&str> = magic.trim_start_matches('#').split_whitespace().collect();
    if !magic.starts_with('#') || header.len() != 3 || header[0] != FEATURE_MAGIC {
        return Err(SpaError::parse(
            source,
            row,
            "missing feature-vector header comment",
        ));
    }
    if header[1] != FEATURE_VERSION {
        return Err(SpaError::Version {
            path: source.to_string(),
            found: header[1].to_string(),
            expected: FEATURE_VERSION.to_string(),
        });
    }
    let d: usize = header[2]
        .strip_prefix("d=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| SpaError::parse(source, row, "header lacks d=<dimension>"))?;

    match lines.next() {
        Some((_, "index,channel,weight")) => {}
        Some((row, _)) => return Err(SpaError::parse(source, row, "expected column header")),
        None => {
            return Err(SpaError::parse(
                source,
                row + 1,
                "truncated: missing column header",
            ))
        }
    }

    let mut weights = vec![0.0; d];
    let mut channels = Vec::new();
    let mut last: Option<usize> = None;
    for (row, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(SpaError::parse(
                source,
                row,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let index: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| SpaError::parse(source, row, "bad index"))?;
        let channel: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| SpaError::parse(source, row, "bad channel"))?;
        let weight: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| SpaError::parse(source, row, "bad weight"))?;
        if index >= d {
            return Err(SpaError::parse(
                source,
                row,
                format!("index {index} out of range for d={d}"),
            ));
        }
        if last.is_some_and(|l| index <= l) {
            return Err(SpaError::parse(
                source,
                row,
                "indices must be strictly increasing",
            ));
        }
        if weight == 0.0 || !weight.is_finite() {
            return Err(SpaError::parse(
                source,
                row,
                "support weights must be finite and non-zero",
            ));
        }
        last = Some(index);
        weights[index] = weight;
        channels.push(channel);
    }
    Ok(SavedFeatures {
        vector: FeatureVector::new(weights),
        channels,
    })
}
