//! Sweeps over K, selection rules, benchmarking and output writers.

mod bench;
mod select;
mod svg;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cch::{self, CchConfig, TripletHistogram};
use crate::curve::{Method, ScoreCurve};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::gmm::{self, FitConfig};
use crate::kmeans;
use crate::samples::PixelSamples;

pub use bench::{run_benchmark, BenchReport, BenchRow, MethodSummary};
pub use select::{knee, select_count};
pub use svg::{emit_curve_svg, render_curve_svg};

pub const DEFAULT_K_MAX: usize = 25;
pub const DEFAULT_JS_SAMPLES: usize = 100_000;

/// Method-specific payload of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostics {
    None,
    Cch(Box<TripletHistogram>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountEstimate {
    pub method: Method,
    pub estimate: usize,
    /// Criterion value at the selected K; for `cch`, the share of kept
    /// pixels covered by counted color cells.
    pub selected_score: f64,
    pub runtime_seconds: f64,
    pub curve: Option<ScoreCurve>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountOptions {
    pub k_max: usize,
    pub seed: u64,
    /// Draws per model for the JS criterion.
    pub js_samples: usize,
    /// EM settings; `seed` is replaced per K during sweeps.
    pub fit: FitConfig,
    pub cch: CchConfig,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_K_MAX,
            seed: 0,
            js_samples: DEFAULT_JS_SAMPLES,
            fit: FitConfig::default(),
            cch: CchConfig::default(),
        }
    }
}

impl CountOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Estimates the color count with `method`, timing the whole call.
pub fn count(samples: &PixelSamples, method: Method, options: &CountOptions) -> Result<CountEstimate> {
    let start = Instant::now();
    let mut estimate = match method {
        Method::Cch => {
            options.cch.validate()?;
            cch::count_colors_cch(samples, &options.cch)
        }
        _ => select_count(&sweep(samples, method, options)?),
    };
    estimate.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(estimate)
}

/// Exhaustive K = 1..=k_max sweep for a curve-scored method.
pub fn sweep(samples: &PixelSamples, method: Method, options: &CountOptions) -> Result<ScoreCurve> {
    if options.k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    match method {
        Method::Cch => Err(Error::InvalidArgument("cch does not sweep over K".into())),
        Method::Kmeans => kmeans::sweep_kmeans(samples.rows(), options.k_max, options.seed),
        _ => sweep_gmm(samples.rows(), options.k_max, method, options.seed, options),
    }
}

/// Value recorded for a K whose fit failed.
fn failed_score(method: Method) -> f64 {
    if method.is_minimized() {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// GMM sweep. Fit K uses seed `seed + K`. For `gmm-js` the samples are split
/// once into halves by a seeded permutation, both halves are fit at every K,
/// and the two mixtures are compared with `options.js_samples` draws each.
pub fn sweep_gmm(
    samples: &[[f64; 3]],
    k_max: usize,
    method: Method,
    seed: u64,
    options: &CountOptions,
) -> Result<ScoreCurve> {
    if !method.is_gmm() {
        return Err(Error::InvalidArgument(format!("{method} is not a mixture criterion")));
    }
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let halves = (method == Method::GmmJs).then(|| split_halves(samples, seed));
    let scores: Vec<f64> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let k_seed = seed.wrapping_add(k as u64);
            let config = FitConfig {
                seed: k_seed,
                ..options.fit
            };
            let score = match &halves {
                None => gmm::fit(samples, k, &config).and_then(|model| match method {
                    Method::GmmAic => gmm::aic(&model, samples),
                    Method::GmmBic => gmm::bic(&model, samples),
                    _ => gmm::avg_log_likelihood(&model, samples),
                }),
                Some((a, b)) => gmm::fit(a, k, &config).and_then(|ma| {
                    let config_b = FitConfig {
                        seed: k_seed ^ 0xB5AD_4ECE_DA1C_E2A9,
                        ..config
                    };
                    let mb = gmm::fit(b, k, &config_b)?;
                    gmm::js_distance(&ma, &mb, options.js_samples, k_seed)
                }),
            };
            match score {
                Ok(s) if !s.is_nan() => s,
                _ => failed_score(method),
            }
        })
        .collect();
    ScoreCurve::new(method, scores.into_iter().enumerate().map(|(i, s)| (i + 1, s)).collect())
}

fn split_halves(samples: &[[f64; 3]], seed: u64) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    order.shuffle(&mut rng);
    let mid = samples.len() / 2;
    let a = order[..mid].iter().map(|&i| samples[i]).collect();
    let b = order[mid..].iter().map(|&i| samples[i]).collect();
    (a, b)
}

/// Curve CSV with header `method,k,score`.
pub fn curve_to_csv(curve: &ScoreCurve) -> String {
    let mut out = String::from("method,k,score\n");
    for &(k, s) in curve.points() {
        out.push_str(&format!("{},{},{}\n", curve.method(), k, sig9(s)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::GmmModel;

    fn constant(n: usize) -> PixelSamples {
        PixelSamples::new(n, 1, vec![[0.4, 0.6, 0.2]; n]).unwrap()
    }

    fn small_options(k_max: usize) -> CountOptions {
        CountOptions {
            k_max,
            js_samples: 2000,
            ..CountOptions::default()
        }
    }

    #[test]
    fn constant_image_counts_one() {
        let s = constant(64);
        assert_eq!(count(&s, Method::Cch, &small_options(5)).unwrap().estimate, 1);
        assert_eq!(count(&s, Method::Kmeans, &small_options(5)).unwrap().estimate, 1);
    }

    #[test]
    fn single_point_curves_select_one() {
        let s = constant(16);
        for m in [Method::GmmAic, Method::GmmBic, Method::GmmAvgLl, Method::GmmJs, Method::Kmeans] {
            let curve = sweep(&s, m, &small_options(1)).unwrap();
            assert_eq!(curve.k_max(), 1);
            assert_eq!(select_count(&curve).estimate, 1, "{m}");
        }
    }

    #[test]
    fn curve_has_every_k() {
        let s = constant(40);
        let curve = sweep(&s, Method::GmmAic, &small_options(6)).unwrap();
        let ks: Vec<usize> = curve.points().iter().map(|p| p.0).collect();
        assert_eq!(ks, (1..=6).collect::<Vec<_>>());
    }

    #[test]
    fn bic_finds_three_separated_components() {
        let iso = |s: f64| [[s * s, 0.0, 0.0], [0.0, s * s, 0.0], [0.0, 0.0, s * s]];
        let truth = GmmModel::from_parts(
            vec![0.3, 0.3, 0.4],
            vec![[0.2, 0.2, 0.2], [0.8, 0.2, 0.5], [0.4, 0.8, 0.7]],
            vec![iso(0.02), iso(0.02), iso(0.02)],
        )
        .unwrap();
        let rows = gmm::sample(&truth, 3000, 5).unwrap();
        let curve = sweep_gmm(&rows, 8, Method::GmmBic, 0, &small_options(8)).unwrap();
        assert_eq!(select_count(&curve).estimate, 3);
    }

    #[test]
    fn cch_does_not_sweep_and_failed_fits_score_infinity() {
        let s = constant(8);
        assert!(sweep(&s, Method::Cch, &small_options(3)).is_err());
        // Twelve samples cannot hold fits beyond K=12; K=13.. fail.
        let s = constant(12);
        let curve = sweep(&s, Method::GmmAic, &small_options(14)).unwrap();
        assert_eq!(curve.score_at(13), Some(f64::INFINITY));
        let avg = sweep(&s, Method::GmmAvgLl, &small_options(14)).unwrap();
        assert_eq!(avg.score_at(14), Some(f64::NEG_INFINITY));
        let est = select_count(&curve);
        assert!((1..=14).contains(&est.estimate));
    }

    #[test]
    fn curve_csv_format() {
        let c = ScoreCurve::new(Method::GmmAic, vec![(1, 500.0), (2, 1.0 / 3.0), (3, f64::INFINITY)]).unwrap();
        assert_eq!(curve_to_csv(&c), "method,k,score\ngmm-aic,1,500\ngmm-aic,2,0.333333333\ngmm-aic,3,inf\n");
    }

    #[test]
    fn halves_partition_the_samples() {
        let rows: Vec<[f64; 3]> = (0..11).map(|i| [i as f64 / 11.0, 0.0, 0.0]).collect();
        let (a, b) = split_halves(&rows, 3);
        assert_eq!((a.len(), b.len()), (5, 6));
        let mut all: Vec<f64> = a.iter().chain(&b).map(|r| r[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, rows.iter().map(|r| r[0]).collect::<Vec<_>>());
        assert_eq!(split_halves(&rows, 3), (a, b));
    }
}
