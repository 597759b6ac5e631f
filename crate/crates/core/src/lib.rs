//! Sparse feature selection for labeled spectra.
//!
//! The pipeline preprocesses a labeled set of spectra (optional top-hat
//! baseline removal, TIC normalization, Gaussian smoothing, standardization),
//! solves the 1-bit compressed sensing program
//!
//! ```text
//! maximize <c, w>  subject to  ||w||_1 <= sqrt(lambda),  ||w||_2 <= 1
//! ```
//!
//! with `c = sum_i y_i x_i`, and post-processes the solution into one
//! representative channel per contiguous peak.
//!
//! ```
//! use spa_core::simulate::{generate_dataset, SimulationConfig};
//! use spa_core::selector::{run_spa, SelectorConfig};
//! use spa_core::preprocess::PreprocessConfig;
//!
//! let mut sim = SimulationConfig::ds1(60, 7);
//! sim.d = 1024;
//! sim.num_peaks = 25;
//! let (ds, _truth) = generate_dataset(&sim).unwrap();
//! let cfg = SelectorConfig { lambda: 4.0, ..SelectorConfig::default() };
//! let result = run_spa(&ds, &cfg, &PreprocessConfig::default()).unwrap();
//! assert!(result.omega_sparse.nnz() >= 1);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod preprocess;
pub mod selector;
pub mod simulate;

pub use dataset::{FeatureVector, Label, LabeledDataset, Spectrum};
pub use error::{Result, SpaError};
pub use preprocess::PreprocessConfig;
pub use selector::{run_spa, SelectorConfig, SpaResult};
