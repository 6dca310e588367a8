//! Counting the distinct colors of an RGB image.
//!
//! Three estimator families are provided:
//!
//! * [`cch`]: peaks of trimmed per-channel histograms after PCA outlier
//!   removal, combined into joint color cells. Deterministic and fast.
//! * [`gmm`]: exhaustive Gaussian mixture sweeps scored by AIC, BIC,
//!   average log-likelihood, or Jensen-Shannon distance between half-split fits.
//! * [`kmeans`]: the K-Means objective curve with knee selection.
//!
//! [`synthgen`] produces labeled synthetic images and [`harness`] runs sweeps,
//! benchmarks and plots.

pub mod cch;
pub mod curve;
pub mod error;
pub mod format;
pub mod gmm;
pub mod harness;
pub mod kmeans;
mod points;
pub mod samples;
pub mod synthgen;

pub use curve::{Method, ScoreCurve};
pub use error::{Error, Result};
pub use harness::{count, select_count, sweep, CountEstimate, CountOptions, Diagnostics};
pub use samples::{decode_image, load_manifest, BenchmarkManifest, ManifestEntry, PixelSamples};
