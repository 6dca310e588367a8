//! Deduplicated, count-weighted point sets.
//!
//! Clustering objectives over repeated observations are identical when each
//! distinct point carries its multiplicity as a weight, and quantized images
//! rarely have more than a few thousand distinct colors.

/// Distinct rows in lexicographic order with their multiplicities.
#[derive(Debug, Clone)]
pub(crate) struct WeightedPoints {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub total: f64,
}

impl WeightedPoints {
    pub fn from_rows(rows: &[[f64; 3]]) -> Self {
        let mut sorted: Vec<[f64; 3]> = rows.to_vec();
        sorted.sort_by(|a, b| {
            a[0].total_cmp(&b[0])
                .then(a[1].total_cmp(&b[1]))
                .then(a[2].total_cmp(&b[2]))
        });
        let mut points: Vec<[f64; 3]> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for row in sorted {
            match points.last() {
                Some(last) if last.map(f64::to_bits) == row.map(f64::to_bits) => {
                    *weights.last_mut().unwrap() += 1.0;
                }
                _ => {
                    points.push(row);
                    weights.push(1.0);
                }
            }
        }
        Self {
            points,
            weights,
            total: rows.len() as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicates_and_orders() {
        let w = WeightedPoints::from_rows(&[[0.5, 0.0, 0.0], [0.1, 0.2, 0.3], [0.5, 0.0, 0.0]]);
        assert_eq!(w.points, vec![[0.1, 0.2, 0.3], [0.5, 0.0, 0.0]]);
        assert_eq!(w.weights, vec![1.0, 2.0]);
        assert_eq!(w.total, 3.0);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut k = KahanSum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            k.add(x);
        }
        assert_eq!(k.value(), 2.0);
    }
}
