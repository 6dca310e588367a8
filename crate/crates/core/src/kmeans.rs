//! Lloyd's K-Means with k-means++ seeding and warm-started sweeps over K.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{Method, ScoreCurve};
use crate::error::{Error, Result};
use crate::points::{sq_dist, WeightedPoints};

pub const MAX_LLOYD_ITERATIONS: usize = 300;
/// Restarts per K in a sweep, one of which is the warm start.
pub const SWEEP_RESTARTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<[f64; 3]>,
    /// Total within-cluster sum of squared distances.
    pub inertia: f64,
    pub iterations_run: usize,
}

/// Best-of-`restarts` K-Means fit.
pub fn fit_kmeans(samples: &[[f64; 3]], k: usize, seed: u64, restarts: usize) -> Result<KMeansModel> {
    check_k(k, samples.len())?;
    let points = WeightedPoints::from_rows(samples);
    Ok(fit_points(&points, k, seed, restarts.max(1), None))
}

/// CC-KM score: the negated K-Means objective.
pub fn kmeans_score(model: &KMeansModel) -> f64 {
    -model.inertia
}

/// Fits K = 1..=k_max and returns the −inertia curve.
pub fn sweep_kmeans(samples: &[[f64; 3]], k_max: usize, seed: u64) -> Result<ScoreCurve> {
    let models = sweep_kmeans_models(samples, k_max, seed)?;
    ScoreCurve::new(
        Method::Kmeans,
        models
            .iter()
            .map(|m| (m.k, kmeans_score(m)))
            .collect(),
    )
}

/// Sweep returning the fitted models. K values above the sample count are
/// skipped, so the sweep covers `1..=min(k_max, n)`.
pub fn sweep_kmeans_models(samples: &[[f64; 3]], k_max: usize, seed: u64) -> Result<Vec<KMeansModel>> {
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::TooFewSamples { k: 1, n: 0 });
    }
    let points = WeightedPoints::from_rows(samples);
    let mut models: Vec<KMeansModel> = Vec::with_capacity(k_max);
    for k in 1..=k_max.min(samples.len()) {
        let warm = models.last().map(|prev| {
            let mut init = prev.centroids.clone();
            init.push(points.points[farthest_point(&points, &init)]);
            init
        });
        let model = fit_points(&points, k, seed.wrapping_add(k as u64), SWEEP_RESTARTS, warm);
        models.push(model);
    }
    Ok(models)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooFewSamples { k, n });
    }
    Ok(())
}

/// Restart 0 uses `warm` when given; the rest are k-means++ seeded. Ties in
/// inertia keep the earliest restart.
fn fit_points(
    points: &WeightedPoints,
    k: usize,
    seed: u64,
    restarts: usize,
    warm: Option<Vec<[f64; 3]>>,
) -> KMeansModel {
    let mut best: Option<KMeansModel> = None;
    let mut warm = warm;
    for r in 0..restarts {
        let init = match warm.take() {
            Some(init) => init,
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                kmeans_pp(points, k, &mut rng)
            }
        };
        let model = lloyd(points, init);
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    best.expect("at least one restart")
}

/// Weighted k-means++ seeding. When every remaining point already coincides
/// with a center, further centers are drawn by weight alone.
pub(crate) fn kmeans_pp(points: &WeightedPoints, k: usize, rng: &mut impl Rng) -> Vec<[f64; 3]> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    let first = weighted_pick(&points.weights, points.total, rng);
    centers.push(points.points[first]);
    let mut d2: Vec<f64> = points
        .points
        .iter()
        .map(|p| sq_dist(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let scores: Vec<f64> = (0..n).map(|i| d2[i] * points.weights[i]).collect();
        let total: f64 = scores.iter().sum();
        let idx = if total > 0.0 {
            weighted_pick(&scores, total, rng)
        } else {
            weighted_pick(&points.weights, points.total, rng)
        };
        let c = points.points[idx];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(&points.points) {
            *d = d.min(sq_dist(p, &c));
        }
    }
    centers
}

fn weighted_pick(weights: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    // Rounding can leave target just above the accumulated sum.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

fn nearest(p: &[f64; 3], centroids: &[[f64; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &WeightedPoints, centroids: &[[f64; 3]], labels: &mut [usize], dists: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for (i, p) in points.points.iter().enumerate() {
        let (j, d) = nearest(p, centroids);
        labels[i] = j;
        dists[i] = d;
        inertia += points.weights[i] * d;
    }
    inertia
}

fn farthest_point(points: &WeightedPoints, centroids: &[[f64; 3]]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in points.points.iter().enumerate() {
        let d = nearest(p, centroids).1;
        if d > best.1 {
            best = (i, d);
        }
    }
    best.0
}

fn lloyd(points: &WeightedPoints, mut centroids: Vec<[f64; 3]>) -> KMeansModel {
    let n = points.len();
    let k = centroids.len();
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut next_labels = vec![0usize; n];
    let mut inertia = assign(points, &centroids, &mut labels, &mut dists);
    let mut iterations = 0;
    // Mean updates can round a zero-cost state into a tiny positive one.
    let mut best = (inertia, centroids.clone());

    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;

        let mut sums = vec![[0.0f64; 3]; k];
        let mut mass = vec![0.0f64; k];
        for (i, p) in points.points.iter().enumerate() {
            let w = points.weights[i];
            let s = &mut sums[labels[i]];
            s[0] += w * p[0];
            s[1] += w * p[1];
            s[2] += w * p[2];
            mass[labels[i]] += w;
        }
        let mut reseeded = false;
        for j in 0..k {
            if mass[j] > 0.0 {
                centroids[j] = sums[j].map(|s| s / mass[j]);
            } else {
                // Empty cluster: move to the point worst served by its centroid.
                let (far, d) = dists
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
                if d > 0.0 {
                    centroids[j] = points.points[far];
                    dists[far] = 0.0;
                    reseeded = true;
                }
            }
        }

        let new_inertia = assign(points, &centroids, &mut next_labels, &mut dists);
        let unchanged = next_labels == labels;
        std::mem::swap(&mut labels, &mut next_labels);
        inertia = new_inertia;
        if inertia < best.0 {
            best = (inertia, centroids.clone());
        }
        if unchanged && !reseeded {
            break;
        }
    }

    let (inertia, centroids) = best;
    KMeansModel {
        k,
        centroids,
        inertia: inertia.max(0.0),
        iterations_run: iterations,
    }
}
