//! Full-covariance Gaussian mixtures over RGB samples.
//!
//! EM runs on deduplicated colors weighted by multiplicity, which gives the
//! same likelihood surface as running on every pixel. The covariance lower
//! bound is enforced by clipping eigenvalues of each M-step scatter matrix at
//! `covariance_floor`; that is the exact constrained maximizer, so EM keeps its
//! monotone log-likelihood.

use std::f64::consts::{LN_2, PI};

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::kmeans_pp;
use crate::points::{KahanSum, WeightedPoints};

pub type Cov3 = [[f64; 3]; 3];

const DIM: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop when the log-likelihood changes by at most this fraction.
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    pub covariance_floor: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-4,
            restarts: 3,
            seed: 0,
            covariance_floor: 1e-6,
        }
    }
}

impl FitConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations and restarts must be positive".into(),
            ));
        }
        if !(self.tolerance > 0.0 && self.covariance_floor > 0.0) {
            return Err(Error::InvalidArgument(
                "tolerance and covariance_floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<[f64; 3]>,
    pub covariances: Vec<Cov3>,
    pub converged: bool,
    /// Total log-likelihood of the training samples.
    pub final_log_likelihood: f64,
}

/// Log-likelihood after every E-step, one sequence per restart. Failed
/// restarts have an empty sequence.
#[derive(Debug, Clone, Default)]
pub struct FitTrace {
    pub restarts: Vec<Vec<f64>>,
}

/// Free parameters of a full-covariance mixture in three dimensions.
pub fn free_parameters(k: usize) -> usize {
    10 * k - 1
}

pub fn aic_from(total_log_likelihood: f64, k: usize) -> f64 {
    2.0 * free_parameters(k) as f64 - 2.0 * total_log_likelihood
}

pub fn bic_from(total_log_likelihood: f64, k: usize, n: usize) -> f64 {
    free_parameters(k) as f64 * (n as f64).ln() - 2.0 * total_log_likelihood
}

/// Fits a `k`-component mixture, keeping the best of `config.restarts` EM runs.
pub fn fit(samples: &[[f64; 3]], k: usize, config: &FitConfig) -> Result<GmmModel> {
    fit_with_trace(samples, k, config).map(|(m, _)| m)
}

pub fn fit_with_trace(samples: &[[f64; 3]], k: usize, config: &FitConfig) -> Result<(GmmModel, FitTrace)> {
    config.validate()?;
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if samples.len() < k {
        return Err(Error::TooFewSamples { k, n: samples.len() });
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite sample".into()));
    }
    let points = WeightedPoints::from_rows(samples);
    let mut trace = FitTrace::default();
    let mut best: Option<GmmModel> = None;
    let mut last_err = None;
    for r in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(r as u64);
        let mut lls = Vec::new();
        match em_run(&points, k, config, &mut rng, &mut lls) {
            Ok(model) => {
                if best
                    .as_ref()
                    .is_none_or(|b| model.final_log_likelihood > b.final_log_likelihood)
                {
                    best = Some(model);
                }
                trace.restarts.push(lls);
            }
            Err(e) => {
                trace.restarts.push(Vec::new());
                last_err = Some(e);
            }
        }
    }
    match best {
        Some(m) => Ok((m, trace)),
        None => Err(last_err.unwrap_or_else(|| Error::FitFailed("no restart succeeded".into()))),
    }
}

fn em_run(
    points: &WeightedPoints,
    k: usize,
    config: &FitConfig,
    rng: &mut ChaCha8Rng,
    lls: &mut Vec<f64>,
) -> Result<GmmModel> {
    let floor = config.covariance_floor;
    let mut means = kmeans_pp(points, k, rng);
    let mut weights = vec![1.0 / k as f64; k];
    let all = vec![1.0; points.len()];
    let pooled = clip_eigenvalues(scatter(points, &all, &weighted_mean(points, &all, points.total), points.total), floor);
    let mut covs = vec![pooled; k];

    let n = points.len();
    let mut resp = vec![0.0; n * k];
    let mut log_terms = vec![0.0; k];
    let mut prev = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iteration = 0;

    loop {
        // E-step
        let comps = compile(&weights, &means, &covs)?;
        let mut ll = KahanSum::default();
        for (i, p) in points.points.iter().enumerate() {
            for (t, c) in log_terms.iter_mut().zip(&comps) {
                *t = c.log_weight + c.log_pdf(p);
            }
            let lse = log_sum_exp(&log_terms);
            if !lse.is_finite() {
                return Err(Error::FitFailed(format!("non-finite log-likelihood with k={k}")));
            }
            ll.add(points.weights[i] * lse);
            let row = &mut resp[i * k..(i + 1) * k];
            for (r, t) in row.iter_mut().zip(&log_terms) {
                *r = (t - lse).exp();
            }
        }
        let ll = ll.value();
        lls.push(ll);
        if iteration > 0 && (ll - prev).abs() <= config.tolerance * ll.abs() {
            converged = true;
            break;
        }
        if iteration == config.max_iterations {
            break;
        }
        prev = ll;
        iteration += 1;

        // M-step
        let mut mass = vec![0.0; k];
        for i in 0..n {
            for j in 0..k {
                mass[j] += points.weights[i] * resp[i * k + j];
            }
        }
        let total: f64 = mass.iter().sum();
        let mut col = vec![0.0; n];
        for j in 0..k {
            if mass[j] <= f64::MIN_POSITIVE {
                // Dead component: zero weight, parameters left in place.
                weights[j] = 0.0;
                continue;
            }
            for i in 0..n {
                col[i] = resp[i * k + j];
            }
            means[j] = weighted_mean(points, &col, mass[j]);
            covs[j] = clip_eigenvalues(scatter(points, &col, &means[j], mass[j]), floor);
            weights[j] = mass[j] / total;
        }
        let wsum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= wsum;
        }
    }

    Ok(GmmModel {
        k,
        weights,
        means,
        covariances: covs,
        converged,
        final_log_likelihood: *lls.last().unwrap(),
    })
}

fn weighted_mean(points: &WeightedPoints, resp: &[f64], mass: f64) -> [f64; 3] {
    let mut acc = [KahanSum::default(); 3];
    for (i, p) in points.points.iter().enumerate() {
        let w = points.weights[i] * resp[i];
        for c in 0..3 {
            acc[c].add(w * p[c]);
        }
    }
    acc.map(|a| a.value() / mass)
}

fn scatter(points: &WeightedPoints, resp: &[f64], mean: &[f64; 3], mass: f64) -> Cov3 {
    let mut s = [[0.0; 3]; 3];
    for (i, p) in points.points.iter().enumerate() {
        let w = points.weights[i] * resp[i];
        if w == 0.0 {
            continue;
        }
        let d = [p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]];
        for a in 0..3 {
            for b in a..3 {
                s[a][b] += w * d[a] * d[b];
            }
        }
    }
    for a in 0..3 {
        for b in a..3 {
            s[a][b] /= mass;
            s[b][a] = s[a][b];
        }
    }
    s
}

/// Raises every eigenvalue below `floor` to `floor`. Matrices already above
/// the floor are returned untouched.
pub(crate) fn clip_eigenvalues(s: Cov3, floor: f64) -> Cov3 {
    let m = Matrix3::from_fn(|r, c| s[r][c]);
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().all(|&l| l >= floor) && cholesky(&s).is_some() {
        return s;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let v = eig.eigenvectors;
    let out = v * Matrix3::from_diagonal(&clipped) * v.transpose();
    let mut r = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            r[a][b] = 0.5 * (out[(a, b)] + out[(b, a)]);
        }
    }
    r
}

/// Minimum eigenvalue of a symmetric 3×3 matrix.
pub fn min_eigenvalue(s: &Cov3) -> f64 {
    let m = Matrix3::from_fn(|r, c| s[r][c]);
    SymmetricEigen::new(m).eigenvalues.min()
}

fn cholesky(a: &Cov3) -> Option<Cov3> {
    let l00 = a[0][0].sqrt();
    if !(l00 > 0.0) {
        return None;
    }
    let l10 = a[1][0] / l00;
    let l20 = a[2][0] / l00;
    let l11 = (a[1][1] - l10 * l10).sqrt();
    if !(l11 > 0.0) {
        return None;
    }
    let l21 = (a[2][1] - l20 * l10) / l11;
    let l22 = (a[2][2] - l20 * l20 - l21 * l21).sqrt();
    if !(l22 > 0.0) {
        return None;
    }
    Some([[l00, 0.0, 0.0], [l10, l11, 0.0], [l20, l21, l22]])
}

/// One Gaussian prepared for density evaluation.
#[derive(Debug, Clone)]
struct Compiled {
    log_weight: f64,
    mean: [f64; 3],
    chol: Cov3,
    log_norm: f64,
}

impl Compiled {
    #[inline]
    fn log_pdf(&self, x: &[f64; 3]) -> f64 {
        let l = &self.chol;
        let d0 = x[0] - self.mean[0];
        let d1 = x[1] - self.mean[1];
        let d2 = x[2] - self.mean[2];
        let y0 = d0 / l[0][0];
        let y1 = (d1 - l[1][0] * y0) / l[1][1];
        let y2 = (d2 - l[2][0] * y0 - l[2][1] * y1) / l[2][2];
        self.log_norm - 0.5 * (y0 * y0 + y1 * y1 + y2 * y2)
    }
}

fn compile(weights: &[f64], means: &[[f64; 3]], covs: &[Cov3]) -> Result<Vec<Compiled>> {
    weights
        .iter()
        .zip(means)
        .zip(covs)
        .map(|((&w, &mean), cov)| {
            let chol = cholesky(cov)
                .ok_or_else(|| Error::FitFailed("covariance is not positive definite".into()))?;
            let log_det_half = chol[0][0].ln() + chol[1][1].ln() + chol[2][2].ln();
            Ok(Compiled {
                log_weight: w.ln(),
                mean,
                chol,
                log_norm: -0.5 * DIM * (2.0 * PI).ln() - log_det_half,
            })
        })
        .collect()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Mixture density prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct MixtureDensity {
    comps: Vec<Compiled>,
}

impl MixtureDensity {
    pub fn log_density(&self, x: &[f64; 3]) -> f64 {
        let mut terms = [0.0; 64];
        if self.comps.len() <= terms.len() {
            for (t, c) in terms.iter_mut().zip(&self.comps) {
                *t = c.log_weight + c.log_pdf(x);
            }
            log_sum_exp(&terms[..self.comps.len()])
        } else {
            let v: Vec<f64> = self.comps.iter().map(|c| c.log_weight + c.log_pdf(x)).collect();
            log_sum_exp(&v)
        }
    }
}

impl GmmModel {
    /// Checks the mixture invariants: weights on the simplex, covariances
    /// symmetric positive definite.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0
            || self.weights.len() != self.k
            || self.means.len() != self.k
            || self.covariances.len() != self.k
        {
            return Err(Error::InvalidArgument("mixture component arrays disagree with k".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("mixture weights must be non-negative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {sum}")));
        }
        if self.means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mean".into()));
        }
        for c in &self.covariances {
            for a in 0..3 {
                for b in 0..3 {
                    if (c[a][b] - c[b][a]).abs() > 1e-12 * (1.0 + c[a][b].abs()) {
                        return Err(Error::InvalidArgument("covariance is not symmetric".into()));
                    }
                }
            }
            cholesky(c).ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?;
        }
        Ok(())
    }

    /// Builds a model from explicit parameters.
    pub fn from_parts(weights: Vec<f64>, means: Vec<[f64; 3]>, covariances: Vec<Cov3>) -> Result<Self> {
        let model = Self {
            k: weights.len(),
            weights,
            means,
            covariances,
            converged: true,
            final_log_likelihood: f64::NAN,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn density(&self) -> Result<MixtureDensity> {
        Ok(MixtureDensity {
            comps: compile(&self.weights, &self.means, &self.covariances)?,
        })
    }

    pub fn mixture_mean(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (w, mu) in self.weights.iter().zip(&self.means) {
            for c in 0..3 {
                m[c] += w * mu[c];
            }
        }
        m
    }
}

/// Total log-likelihood Σ_j log p(x_j).
pub fn total_log_likelihood(model: &GmmModel, samples: &[[f64; 3]]) -> Result<f64> {
    let density = model.density()?;
    let points = WeightedPoints::from_rows(samples);
    let mut acc = KahanSum::default();
    for (p, w) in points.points.iter().zip(&points.weights) {
        let l = density.log_density(p);
        if !l.is_finite() {
            return Err(Error::NonFiniteDensity);
        }
        acc.add(w * l);
    }
    Ok(acc.value())
}

/// Per-sample average log-likelihood.
pub fn avg_log_likelihood(model: &GmmModel, samples: &[[f64; 3]]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidSamples("no samples".into()));
    }
    Ok(total_log_likelihood(model, samples)? / samples.len() as f64)
}

pub fn aic(model: &GmmModel, samples: &[[f64; 3]]) -> Result<f64> {
    Ok(aic_from(total_log_likelihood(model, samples)?, model.k))
}

pub fn bic(model: &GmmModel, samples: &[[f64; 3]]) -> Result<f64> {
    Ok(bic_from(total_log_likelihood(model, samples)?, model.k, samples.len()))
}

/// Draws `count` points: a component by weight, then its Gaussian. Values are
/// not clipped to the unit cube.
pub fn sample(model: &GmmModel, count: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    let chols: Vec<Cov3> = model
        .covariances
        .iter()
        .map(|c| cholesky(c).ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into())))
        .collect::<Result<_>>()?;
    let mut cumulative = Vec::with_capacity(model.k);
    let mut acc = 0.0;
    for w in &model.weights {
        acc += w;
        cumulative.push(acc);
    }
    let last_live = model.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let u: f64 = rng.random::<f64>() * acc;
        let j = cumulative.iter().position(|&c| u < c).unwrap_or(last_live);
        let z: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let l = &chols[j];
        let mu = &model.means[j];
        out.push([
            mu[0] + l[0][0] * z[0],
            mu[1] + l[1][0] * z[0] + l[1][1] * z[1],
            mu[2] + l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2],
        ]);
    }
    Ok(out)
}

/// Monte-Carlo Jensen-Shannon divergence (natural log) from draws of each
/// model: ½·mean_a[log(p_a/m)] + ½·mean_b[log(p_b/m)] with m = ½(p_a + p_b).
pub fn js_divergence_from_draws(
    model_a: &GmmModel,
    model_b: &GmmModel,
    draws_a: &[[f64; 3]],
    draws_b: &[[f64; 3]],
) -> Result<f64> {
    if draws_a.is_empty() || draws_b.is_empty() {
        return Err(Error::InvalidArgument("JS estimate needs draws from both models".into()));
    }
    let da = model_a.density()?;
    let db = model_b.density()?;
    let side = |draws: &[[f64; 3]], own: &MixtureDensity, other: &MixtureDensity| -> Result<f64> {
        let mut acc = KahanSum::default();
        for x in draws {
            let lo = own.log_density(x);
            let lt = other.log_density(x);
            if lo.is_nan() || lt.is_nan() || lo == f64::INFINITY || lt == f64::INFINITY {
                return Err(Error::NonFiniteDensity);
            }
            // log(p_own / m) = log 2 − log(1 + p_other/p_own)
            let term = LN_2 - softplus(lt - lo);
            if !term.is_finite() {
                return Err(Error::NonFiniteDensity);
            }
            acc.add(term);
        }
        Ok(acc.value() / draws.len() as f64)
    };
    let ea = side(draws_a, &da, &db)?;
    let eb = side(draws_b, &db, &da)?;
    Ok(0.5 * ea + 0.5 * eb)
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Seeds for the two draw sets of a JS estimate.
pub fn js_draw_seeds(seed: u64) -> (u64, u64) {
    (seed, seed ^ 0x9E37_79B9_7F4A_7C15)
}

/// Jensen-Shannon distance √JS between two mixtures, estimated from
/// `samples_per_side` draws of each. Range `[0, √ln 2]`.
pub fn js_distance(model_a: &GmmModel, model_b: &GmmModel, samples_per_side: usize, seed: u64) -> Result<f64> {
    if samples_per_side == 0 {
        return Err(Error::InvalidArgument("samples_per_side must be at least 1".into()));
    }
    let (sa, sb) = js_draw_seeds(seed);
    let xa = sample(model_a, samples_per_side, sa)?;
    let xb = sample(model_b, samples_per_side, sb)?;
    let js = js_divergence_from_draws(model_a, model_b, &xa, &xb)?;
    Ok(js.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(s2: f64) -> Cov3 {
        [[s2, 0.0, 0.0], [0.0, s2, 0.0], [0.0, 0.0, s2]]
    }

    fn two_component() -> GmmModel {
        GmmModel::from_parts(
            vec![0.4, 0.6],
            vec![[0.1, 0.1, 0.1], [0.9, 0.9, 0.9]],
            vec![iso(0.02 * 0.02), iso(0.02 * 0.02)],
        )
        .unwrap()
    }

    #[test]
    fn degenerate_single_point() {
        let data = vec![[0.5, 0.5, 0.5]; 40];
        let cfg = FitConfig::default();
        let m = fit(&data, 1, &cfg).unwrap();
        assert_eq!(m.weights, vec![1.0]);
        assert_eq!(m.means[0], [0.5, 0.5, 0.5]);
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { cfg.covariance_floor } else { 0.0 };
                assert!((m.covariances[0][a][b] - want).abs() < 1e-18);
            }
        }
    }

    #[test]
    fn recovers_two_component_mixture() {
        let truth = two_component();
        let data = sample(&truth, 10_000, 42).unwrap();
        let m = fit(&data, 2, &FitConfig::with_seed(1)).unwrap();
        let mut order: Vec<usize> = (0..2).collect();
        order.sort_by(|&a, &b| m.means[a][0].total_cmp(&m.means[b][0]));
        for (t, &j) in order.iter().enumerate() {
            for c in 0..3 {
                assert!((m.means[j][c] - truth.means[t][c]).abs() < 0.01);
            }
            assert!((m.weights[j] - truth.weights[t]).abs() < 0.05);
        }
    }

    #[test]
    fn k_above_n_errors() {
        let data = vec![[0.1, 0.2, 0.3]; 5];
        assert!(matches!(fit(&data, 6, &FitConfig::default()), Err(Error::TooFewSamples { k: 6, n: 5 })));
    }

    #[test]
    fn log_likelihood_at_mean_of_unit_gaussian() {
        let m = GmmModel::from_parts(vec![1.0], vec![[0.0; 3]], vec![iso(1.0)]).unwrap();
        let ll = avg_log_likelihood(&m, &[[0.0; 3]]).unwrap();
        assert!((ll - (-1.5 * (2.0 * PI).ln())).abs() < 1e-12);
        assert!((ll + 2.756815599614018).abs() < 1e-12);
        let twice = avg_log_likelihood(&m, &[[0.0; 3], [0.0; 3]]).unwrap();
        assert_eq!(ll, twice);
    }

    #[test]
    fn information_criteria_arithmetic() {
        assert_eq!(aic_from(-1000.0, 1), 2018.0);
        assert_eq!(aic_from(-1000.0, 2), 2038.0);
        assert_eq!(aic_from(-1000.0, 3) - aic_from(-1000.0, 2), 20.0);
        assert!((bic_from(-1000.0, 2, 100) - (19.0 * 100f64.ln() + 2000.0)).abs() < 1e-9);
        assert!((bic_from(-1000.0, 2, 100) - 2087.4983).abs() < 1e-4);
        assert_eq!(bic_from(-1000.0, 4, 1), 2000.0);
    }

    #[test]
    fn bic_minus_aic_identity() {
        let m = two_component();
        let data = sample(&m, 500, 3).unwrap();
        let p = free_parameters(2) as f64;
        let diff = bic(&m, &data).unwrap() - aic(&m, &data).unwrap();
        assert!((diff - p * ((500f64).ln() - 2.0)).abs() < 1e-8);
    }

    #[test]
    fn sampling_concentrates_and_is_deterministic() {
        let m = GmmModel::from_parts(vec![1.0], vec![[0.3, 0.4, 0.5]], vec![iso(1e-6)]).unwrap();
        let xs = sample(&m, 3, 5).unwrap();
        for x in &xs {
            for c in 0..3 {
                assert!((x[c] - m.means[0][c]).abs() < 10.0 * 1e-3);
            }
        }
        assert_eq!(xs, sample(&m, 3, 5).unwrap());
        assert_ne!(xs, sample(&m, 3, 6).unwrap());
    }

    #[test]
    fn empirical_mean_matches_mixture_mean() {
        let m = two_component();
        let n = 100_000;
        let xs = sample(&m, n, 8).unwrap();
        let want = m.mixture_mean();
        for c in 0..3 {
            let mean: f64 = xs.iter().map(|x| x[c]).sum::<f64>() / n as f64;
            let var: f64 = xs.iter().map(|x| (x[c] - want[c]).powi(2)).sum::<f64>() / n as f64;
            assert!((mean - want[c]).abs() <= 3.0 * (var / n as f64).sqrt(), "channel {c}");
        }
    }

    #[test]
    fn js_of_identical_models_is_zero() {
        let m = two_component();
        let d = js_distance(&m, &m, 10_000, 1).unwrap();
        assert!(d <= 0.02, "{d}");
    }

    #[test]
    fn js_saturates_for_disjoint_supports() {
        let a = GmmModel::from_parts(vec![1.0], vec![[0.0; 3]], vec![iso(1.0)]).unwrap();
        let b = GmmModel::from_parts(vec![1.0], vec![[100.0, 0.0, 0.0]], vec![iso(1.0)]).unwrap();
        let d = js_distance(&a, &b, 10_000, 2).unwrap();
        assert!((d - LN_2.sqrt()).abs() < 0.02, "{d}");
    }

    #[test]
    fn js_estimate_is_symmetric_with_swapped_draws() {
        let a = two_component();
        let b = GmmModel::from_parts(vec![1.0], vec![[0.5; 3]], vec![iso(0.05)]).unwrap();
        let xa = sample(&a, 2000, 1).unwrap();
        let xb = sample(&b, 2000, 2).unwrap();
        let ab = js_divergence_from_draws(&a, &b, &xa, &xb).unwrap();
        let ba = js_divergence_from_draws(&b, &a, &xb, &xa).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn clipping_enforces_floor_and_keeps_large_matrices() {
        let s = [[1e-9, 0.0, 0.0], [0.0, 2e-9, 0.0], [0.0, 0.0, 0.5]];
        let c = clip_eigenvalues(s, 1e-6);
        assert!(min_eigenvalue(&c) >= 1e-6 * (1.0 - 1e-9));
        let big = iso(0.01);
        assert_eq!(clip_eigenvalues(big, 1e-6), big);
    }

    #[test]
    fn fit_invariants_and_monotone_trace() {
        let truth = GmmModel::from_parts(
            vec![0.3, 0.3, 0.4],
            vec![[0.2, 0.2, 0.8], [0.8, 0.3, 0.2], [0.5, 0.8, 0.5]],
            vec![iso(0.003), iso(0.002), iso(0.004)],
        )
        .unwrap();
        let data = sample(&truth, 3000, 77).unwrap();
        for k in [1, 2, 3, 5] {
            let cfg = FitConfig::with_seed(k as u64);
            let (m, trace) = fit_with_trace(&data, k, &cfg).unwrap();
            assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(m.weights.iter().all(|&w| w >= 0.0));
            for c in &m.covariances {
                assert!(min_eigenvalue(c) >= cfg.covariance_floor * (1.0 - 1e-9));
            }
            for run in &trace.restarts {
                for w in run.windows(2) {
                    assert!(w[1] >= w[0] - 1e-9, "k={k}: {} -> {}", w[0], w[1]);
                }
            }
            let again = fit(&data, k, &cfg).unwrap();
            assert_eq!(m, again);
        }
    }

    #[test]
    fn avg_log_likelihood_ignores_row_order() {
        let m = two_component();
        let data = sample(&m, 1000, 4).unwrap();
        let mut shuffled = data.clone();
        shuffled.reverse();
        shuffled.swap(3, 700);
        assert_eq!(avg_log_likelihood(&m, &data).unwrap(), avg_log_likelihood(&m, &shuffled).unwrap());
    }
}
