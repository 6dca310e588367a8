use crate::curve::{Method, ScoreCurve};
use crate::harness::{CountEstimate, Diagnostics};

/// Picks K from a sweep curve.
///
/// AIC, BIC and JS distance take the argmin. Average log-likelihood and
/// K-Means inertia have no interior optimum, so both use the knee of the
/// min-max normalized curve: the point farthest from the chord joining the
/// first and last points. Ties go to the smallest K.
pub fn select_count(curve: &ScoreCurve) -> CountEstimate {
    let estimate = match curve.method() {
        Method::GmmAic | Method::GmmBic | Method::GmmJs => argmin(curve.points()),
        Method::GmmAvgLl => knee(curve.points()),
        Method::Kmeans => {
            let inertia: Vec<(usize, f64)> = curve.points().iter().map(|&(k, s)| (k, -s)).collect();
            knee(&inertia)
        }
        // Curves are never built for cch; fall back to the first point.
        Method::Cch => 1,
    };
    CountEstimate {
        method: curve.method(),
        estimate,
        selected_score: curve.score_at(estimate).unwrap_or(f64::NAN),
        runtime_seconds: 0.0,
        curve: Some(curve.clone()),
        diagnostics: Diagnostics::None,
    }
}

fn argmin(points: &[(usize, f64)]) -> usize {
    let mut best = points[0];
    for &p in &points[1..] {
        if p.1 < best.1 {
            best = p;
        }
    }
    best.0
}

/// Knee by maximum distance to the chord, over the finite points. Returns
/// the first K when fewer than three finite points exist or the curve is
/// flat.
pub fn knee(points: &[(usize, f64)]) -> usize {
    let finite: Vec<(usize, f64)> = points.iter().copied().filter(|p| p.1.is_finite()).collect();
    let Some(&first) = finite.first() else {
        return points.first().map_or(1, |p| p.0);
    };
    let last = *finite.last().unwrap();
    let (lo, hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if finite.len() < 3 || !(hi > lo) {
        return first.0;
    }
    let span = (last.0 - first.0) as f64;
    let norm = |p: &(usize, f64)| ((p.0 - first.0) as f64 / span, (p.1 - lo) / (hi - lo));
    let (x1, y1) = norm(&first);
    let (x2, y2) = norm(&last);
    let (dx, dy) = (x2 - x1, y2 - y1);
    let mut best = (first.0, f64::NEG_INFINITY);
    for p in &finite {
        let (x, y) = norm(p);
        let d = (dx * (y1 - y) - (x1 - x) * dy).abs();
        if d > best.1 {
            best = (p.0, d);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(method: Method, scores: &[f64]) -> ScoreCurve {
        ScoreCurve::new(method, scores.iter().enumerate().map(|(i, &s)| (i + 1, s)).collect()).unwrap()
    }

    #[test]
    fn argmin_criteria() {
        let c = curve(Method::GmmAic, &[500.0, 300.0, 340.0]);
        let e = select_count(&c);
        assert_eq!(e.estimate, 2);
        assert_eq!(e.selected_score, 300.0);
        assert_eq!(select_count(&curve(Method::GmmBic, &[7.0; 5])).estimate, 1);
        assert_eq!(select_count(&curve(Method::GmmJs, &[0.3, 0.1, 0.1, 0.2])).estimate, 2);
    }

    #[test]
    fn flat_curves_pick_one() {
        assert_eq!(select_count(&curve(Method::Kmeans, &[0.0; 6])).estimate, 1);
        assert_eq!(select_count(&curve(Method::GmmAvgLl, &[2.0; 6])).estimate, 1);
    }

    #[test]
    fn inertia_knee() {
        // −inertia scores of a curve with its elbow at K=4.
        let inertia = [100.0, 60.0, 30.0, 2.0, 1.5, 1.2, 1.0, 0.9];
        let scores: Vec<f64> = inertia.iter().map(|v| -v).collect();
        assert_eq!(select_count(&curve(Method::Kmeans, &scores)).estimate, 4);
    }

    #[test]
    fn avg_ll_knee() {
        let ll = [-5.0, -2.0, 1.0, 3.9, 4.0, 4.05, 4.1, 4.12];
        assert_eq!(select_count(&curve(Method::GmmAvgLl, &ll)).estimate, 4);
    }

    #[test]
    fn knee_ignores_failed_points() {
        let pts = [(1, 10.0), (2, 2.0), (3, 1.0), (4, f64::INFINITY), (5, 0.5)];
        assert_eq!(knee(&pts), 2);
        assert_eq!(knee(&[(1, f64::INFINITY)]), 1);
    }
}
