use colorcount::gmm::{self, FitConfig, GmmModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const WEIGHTS: [f64; 2] = [0.35, 0.65];
const MEANS: [[f64; 3]; 2] = [[0.1, 0.1, 0.1], [0.9, 0.9, 0.9]];

fn diagonal(var: [f64; 3]) -> [[f64; 3]; 3] {
    [[var[0], 0.0, 0.0], [0.0, var[1], 0.0], [0.0, 0.0, var[2]]]
}

/// Draws from the two-component axis-aligned mixture with its own sampler.
fn draw(n: usize, sd: [[f64; 3]; 2], seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let j = usize::from(rng.random::<f64>() >= WEIGHTS[0]);
            [0, 1, 2].map(|c| MEANS[j][c] + sd[j][c] * unit.sample(&mut rng))
        })
        .collect()
}

fn log_density(x: &[f64; 3], sd: [[f64; 3]; 2]) -> f64 {
    let comp = |j: usize| {
        WEIGHTS[j].ln()
            + (0..3)
                .map(|c| {
                    let z = (x[c] - MEANS[j][c]) / sd[j][c];
                    -0.5 * z * z - sd[j][c].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
                })
                .sum::<f64>()
    };
    let (a, b) = (comp(0), comp(1));
    let top = a.max(b);
    top + ((a - top).exp() + (b - top).exp()).ln()
}

#[test]
fn average_log_likelihood_matches_monte_carlo() {
    let sd = [[0.05, 0.08, 0.06], [0.1, 0.07, 0.09]];
    let model = GmmModel::from_parts(
        WEIGHTS.to_vec(),
        MEANS.to_vec(),
        sd.iter().map(|s| diagonal(s.map(|v| v * v))).collect(),
    )
    .unwrap();
    let own = gmm::sample(&model, 100_000, 17).unwrap();
    let value = gmm::avg_log_likelihood(&model, &own).unwrap();

    let oracle_draw = draw(100_000, sd, 4242);
    let oracle = oracle_draw.iter().map(|x| log_density(x, sd)).sum::<f64>() / oracle_draw.len() as f64;
    assert!((value - oracle).abs() < 0.02, "{value} vs oracle {oracle}");
}

#[test]
fn em_recovers_two_separated_components() {
    let sd = [[0.02; 3]; 2];
    let data = draw(10_000, sd, 99);
    let model = gmm::fit(&data, 2, &FitConfig::with_seed(3)).unwrap();
    let mut order: Vec<usize> = (0..2).collect();
    order.sort_by(|&a, &b| model.means[a][0].total_cmp(&model.means[b][0]));
    for (truth, &j) in order.iter().enumerate() {
        for c in 0..3 {
            assert!((model.means[j][c] - MEANS[truth][c]).abs() < 0.01, "{:?}", model.means);
        }
        assert!((model.weights[j] - WEIGHTS[truth]).abs() < 0.05, "{:?}", model.weights);
    }
    assert!((model.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn sample_mean_is_within_three_standard_errors() {
    let sd = [[0.05, 0.08, 0.06], [0.1, 0.07, 0.09]];
    let model = GmmModel::from_parts(
        WEIGHTS.to_vec(),
        MEANS.to_vec(),
        sd.iter().map(|s| diagonal(s.map(|v| v * v))).collect(),
    )
    .unwrap();
    let n = 100_000;
    let xs = gmm::sample(&model, n, 5).unwrap();
    for c in 0..3 {
        let mean = (0..2).map(|j| WEIGHTS[j] * MEANS[j][c]).sum::<f64>();
        let second = (0..2)
            .map(|j| WEIGHTS[j] * (sd[j][c] * sd[j][c] + MEANS[j][c] * MEANS[j][c]))
            .sum::<f64>();
        let se = ((second - mean * mean) / n as f64).sqrt();
        let got = xs.iter().map(|x| x[c]).sum::<f64>() / n as f64;
        assert!((got - mean).abs() <= 3.0 * se, "channel {c}: {got} vs {mean} (se {se})");
    }
}
