//! Cumulative-histogram color counting.
//!
//! The pipeline is deterministic and uses no random numbers:
//!
//! 1. [`pca_filter`] drops pixels lying more than `outlier_sigma` standard
//!    deviations out along any principal axis of the color cloud.
//! 2. [`build_triplet`] bins each channel at 8 bits, trims each channel to
//!    the range of bins holding at least `floor_fraction` of the pixels, and
//!    smooths the trimmed run with a centered moving average.
//! 3. [`detect_peaks`] finds prominent local maxima per channel, then labels
//!    every pixel with the triplet of the peak whose basin holds it in each
//!    channel, basins meeting at the histogram valleys. Small triplets
//!    sitting inside the spread of a larger one are folded into it. Each
//!    remaining triplet holding at least `cell_fraction` of the pixels counts
//!    as one color.
//!
//! Two flat colors whose values in some channel are separated by an empty
//! stretch of bins and more than `min_peak_distance` always land in
//! different triplets.

use std::time::Instant;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::curve::Method;
use crate::format::sig9;
use crate::harness::{CountEstimate, Diagnostics};
use crate::samples::{to_byte, PixelSamples};

pub const CHANNELS: [&str; 3] = ["r", "g", "b"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CchConfig {
    pub outlier_sigma: f64,
    /// Trim threshold as a fraction of kept pixels.
    pub floor_fraction: f64,
    /// Minimum peak prominence as a fraction of kept pixels.
    pub prominence_fraction: f64,
    pub min_peak_distance: usize,
    /// Odd moving-average width in bins.
    pub smoothing_window: usize,
    /// Minimum share of kept pixels for a peak triplet to count as a color.
    pub cell_fraction: f64,
    /// A cell whose mean lies within this many spreads of a larger cell's
    /// mean in every channel is folded into it.
    pub merge_spreads: f64,
}

impl Default for CchConfig {
    fn default() -> Self {
        Self {
            outlier_sigma: 4.0,
            floor_fraction: 1e-4,
            prominence_fraction: 0.005,
            min_peak_distance: 10,
            smoothing_window: 5,
            cell_fraction: 0.005,
            merge_spreads: 3.0,
        }
    }
}

impl CchConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            self.outlier_sigma,
            self.floor_fraction,
            self.prominence_fraction,
            self.cell_fraction,
            self.merge_spreads,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if !positive || self.min_peak_distance == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(crate::Error::InvalidArgument(format!(
                "invalid histogram configuration {self:?}"
            )));
        }
        Ok(())
    }
}

/// A joint color cell: one peak per channel and the pixels labeled with it.
/// `mean` and `spread` (standard deviation) are in 8-bit levels over the
/// cell's own pixels; `count` also includes the cells folded into it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorCell {
    pub peaks: [usize; 3],
    pub count: u64,
    pub mean: [f64; 3],
    pub spread: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletHistogram {
    #[serde(with = "bins_serde")]
    pub bins: [[u64; 256]; 3],
    /// Inclusive `(lo, hi)` bin range kept per channel.
    pub trim: [(usize, usize); 3],
    /// Moving average over `trim[c].0..=trim[c].1`.
    pub smoothed: [Vec<f64>; 3],
    /// Absolute bin indices, ascending.
    pub peaks: [Vec<usize>; 3],
    pub n_kept: u64,
    pub n_removed: u64,
    /// Occupied peak triplets after folding, most populated first.
    pub cells: Vec<ColorCell>,
}

mod bins_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(bins: &[[u64; 256]; 3], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<&[u64]> = bins.iter().map(|b| b.as_slice()).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[[u64; 256]; 3], D::Error> {
        let v: Vec<Vec<u64>> = Vec::deserialize(d)?;
        let mut out = [[0u64; 256]; 3];
        if v.len() != 3 || v.iter().any(|c| c.len() != 256) {
            return Err(serde::de::Error::custom("expected 3 channels of 256 bins"));
        }
        for (o, c) in out.iter_mut().zip(v) {
            o.copy_from_slice(&c);
        }
        Ok(out)
    }
}

impl TripletHistogram {
    /// Cells meeting the `cell_fraction` threshold.
    pub fn counted_cells(&self, config: &CchConfig) -> impl Iterator<Item = &ColorCell> {
        let min = config.cell_fraction * self.n_kept as f64;
        self.cells.iter().filter(move |c| c.count as f64 >= min)
    }

    /// Smoothed value at an absolute bin, if the bin is inside the trim range.
    pub fn smoothed_at(&self, channel: usize, bin: usize) -> Option<f64> {
        let (lo, hi) = self.trim[channel];
        (lo..=hi).contains(&bin).then(|| self.smoothed[channel][bin - lo])
    }

    /// Diagnostic CSV with header `channel,bin,raw_count,smoothed,is_peak`.
    /// Bins outside the trim range have an empty `smoothed` field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,bin,raw_count,smoothed,is_peak\n");
        for c in 0..3 {
            for bin in 0..256 {
                let smoothed = self.smoothed_at(c, bin).map(sig9).unwrap_or_default();
                let is_peak = u8::from(self.peaks[c].binary_search(&bin).is_ok());
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    CHANNELS[c], bin, self.bins[c][bin], smoothed, is_peak
                ));
            }
        }
        out
    }
}

/// Removes pixels whose standardized principal-axis score exceeds
/// `outlier_sigma` in magnitude on any axis with positive variance. Inputs
/// with fewer than four rows or no variance pass through unchanged.
///
/// Moments are taken over the 8-bit levels with integer sums, so the result
/// does not depend on row order.
pub fn pca_filter(samples: &[[f64; 3]], outlier_sigma: f64) -> (Vec<[f64; 3]>, usize) {
    if samples.len() < 4 {
        return (samples.to_vec(), 0);
    }
    let mut sum = [0u64; 3];
    let mut cross = [[0u64; 3]; 3];
    for row in samples {
        let b = row.map(|v| u64::from(to_byte(v)));
        for i in 0..3 {
            sum[i] += b[i];
            for j in i..3 {
                cross[i][j] += b[i] * b[j];
            }
        }
    }
    let n = samples.len() as f64;
    let mean = Vector3::from(sum.map(|s| s as f64 / n));
    let mut cov = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            // n·Σxy − Σx·Σy is exact in i128 before the single division.
            let centered = samples.len() as i128 * cross[i][j] as i128 - sum[i] as i128 * sum[j] as i128;
            let v = centered as f64 / (n * n);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let largest = eig.eigenvalues.max();
    if !(largest > 0.0) {
        return (samples.to_vec(), 0);
    }
    let axes: Vec<(Vector3<f64>, f64)> = (0..3)
        .filter(|&i| eig.eigenvalues[i] > largest * 1e-10)
        .map(|i| (eig.eigenvectors.column(i).into_owned(), eig.eigenvalues[i].sqrt()))
        .collect();

    let kept: Vec<[f64; 3]> = samples
        .iter()
        .copied()
        .filter(|row| {
            let d = Vector3::from(row.map(|v| f64::from(to_byte(v)))) - mean;
            axes.iter().all(|(v, sd)| (d.dot(v) / sd).abs() <= outlier_sigma)
        })
        .collect();
    let removed = samples.len() - kept.len();
    (kept, removed)
}

/// Per-channel 8-bit histograms, trim ranges and smoothed runs.
pub fn build_triplet(filtered: &[[f64; 3]], config: &CchConfig) -> TripletHistogram {
    let mut bins = [[0u64; 256]; 3];
    for row in filtered {
        for c in 0..3 {
            bins[c][to_byte(row[c]) as usize] += 1;
        }
    }
    let n_kept = filtered.len() as u64;
    let floor = config.floor_fraction * n_kept as f64;
    let mut trim = [(0usize, 0usize); 3];
    let mut smoothed: [Vec<f64>; 3] = Default::default();
    for c in 0..3 {
        let heavy = |b: &usize| bins[c][*b] > 0 && bins[c][*b] as f64 >= floor;
        trim[c] = match ((0..256).find(heavy), (0..256).rev().find(heavy)) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => {
                let top = argmax_first(&bins[c]);
                (top, top)
            }
        };
        smoothed[c] = moving_average(&bins[c][trim[c].0..=trim[c].1], config.smoothing_window);
    }
    TripletHistogram {
        bins,
        trim,
        smoothed,
        peaks: Default::default(),
        n_kept,
        n_removed: 0,
        cells: Vec::new(),
    }
}

fn argmax_first(v: &[u64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Centered moving average; the window shrinks at the ends of the run.
pub fn moving_average(values: &[u64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let sum: u64 = values[lo..=hi].iter().sum();
            sum as f64 / (hi - lo + 1) as f64
        })
        .collect()
}

/// Topographic prominence of index `i`, with the run treated as surrounded by
/// zeros.
pub fn prominence(values: &[f64], i: usize) -> f64 {
    let h = values[i];
    let mut left_min = h;
    let mut j = i;
    let mut left_higher = false;
    while j > 0 {
        j -= 1;
        if values[j] > h {
            left_higher = true;
            break;
        }
        left_min = left_min.min(values[j]);
    }
    if !left_higher {
        left_min = left_min.min(0.0);
    }
    let mut right_min = h;
    let mut right_higher = false;
    for &v in &values[i + 1..] {
        if v > h {
            right_higher = true;
            break;
        }
        right_min = right_min.min(v);
    }
    if !right_higher {
        right_min = right_min.min(0.0);
    }
    h - left_min.max(right_min)
}

/// Peaks of one smoothed run: indices that are ≥ their neighbors, have at
/// least `min_prominence`, and survive greedy suppression of lower peaks
/// within `min_distance`. Returned ascending.
pub fn find_peaks(values: &[f64], min_prominence: f64, min_distance: usize) -> Vec<usize> {
    let n = values.len();
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let left_ok = i == 0 || values[i] >= values[i - 1];
            let right_ok = i + 1 == n || values[i] >= values[i + 1];
            left_ok && right_ok && prominence(values, i) >= min_prominence
        })
        .collect();
    candidates.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in candidates {
        if kept.iter().all(|&k| k.abs_diff(i) >= min_distance) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Populates peaks and joint color cells.
pub fn detect_peaks(mut hist: TripletHistogram, config: &CchConfig, filtered: &[[f64; 3]]) -> TripletHistogram {
    let min_prominence = config.prominence_fraction * hist.n_kept as f64;
    let mut label = [[0usize; 256]; 3];
    for c in 0..3 {
        let lo = hist.trim[c].0;
        let mut peaks: Vec<usize> = find_peaks(&hist.smoothed[c], min_prominence, config.min_peak_distance)
            .into_iter()
            .map(|i| i + lo)
            .collect();
        if peaks.is_empty() {
            // Flat channel: its single most populated bin stands in.
            let top = argmax_first_f(&hist.smoothed[c]) + lo;
            peaks.push(top);
        }
        label[c] = basin_labels(&peaks, &hist.smoothed[c], lo);
        hist.peaks[c] = peaks;
    }
    // Per peak-index triplet: count, then byte sums and squares per channel.
    // Peaks are at least `min_peak_distance` apart, so the table stays small.
    let dims = [0, 1, 2].map(|c| hist.peaks[c].len());
    let mut acc = vec![(0u64, [0u64; 3], [0u64; 3]); dims[0] * dims[1] * dims[2]];
    for row in filtered {
        let bytes = row.map(|v| to_byte(v) as usize);
        let l = [0, 1, 2].map(|c| label[c][bytes[c]]);
        let e = &mut acc[(l[0] * dims[1] + l[1]) * dims[2] + l[2]];
        e.0 += 1;
        for c in 0..3 {
            e.1[c] += bytes[c] as u64;
            e.2[c] += (bytes[c] * bytes[c]) as u64;
        }
    }
    let mut cells: Vec<ColorCell> = acc
        .into_iter()
        .enumerate()
        .filter(|(_, e)| e.0 > 0)
        .map(|(i, (count, sum, sq))| {
            let l = [i / (dims[1] * dims[2]), i / dims[2] % dims[1], i % dims[2]];
            let peaks = [0, 1, 2].map(|c| hist.peaks[c][l[c]]);
            let n = count as f64;
            let mean = [0, 1, 2].map(|c| sum[c] as f64 / n);
            let spread = [0, 1, 2].map(|c| (sq[c] as f64 / n - mean[c] * mean[c]).max(0.0).sqrt());
            ColorCell { peaks, count, mean, spread }
        })
        .collect();
    cells.sort_by(|a, b| b.count.cmp(&a.count).then(a.peaks.cmp(&b.peaks)));
    let cells = fold_cells(cells, config.merge_spreads);
    hist.cells = cells;
    hist
}

/// Folds each cell, largest first, into the earlier kept cell it sits closest
/// to when it is within `spreads` of it in every channel. Spreads below one
/// level count as one level.
fn fold_cells(cells: Vec<ColorCell>, spreads: f64) -> Vec<ColorCell> {
    let mut kept: Vec<ColorCell> = Vec::new();
    for cell in cells {
        let target = kept
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let d = (0..3)
                    .map(|c| (cell.mean[c] - k.mean[c]).abs() / k.spread[c].max(1.0))
                    .fold(0.0, f64::max);
                (i, d)
            })
            .filter(|&(_, d)| d <= spreads)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match target {
            Some((i, _)) => kept[i].count += cell.count,
            None => kept.push(cell),
        }
    }
    kept.sort_by(|a, b| b.count.cmp(&a.count).then(a.peaks.cmp(&b.peaks)));
    kept
}

fn argmax_first_f(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Index into `peaks` for every bin. Neighbouring peaks split the bins
/// between them at the lowest point of the smoothed histogram, the middle of
/// the lowest run when it is flat.
fn basin_labels(peaks: &[usize], smoothed: &[f64], lo: usize) -> [usize; 256] {
    let mut label = [0usize; 256];
    let mut start = 0;
    for (i, pair) in peaks.windows(2).enumerate() {
        let run = &smoothed[pair[0] - lo..=pair[1] - lo];
        let min = run.iter().copied().fold(f64::INFINITY, f64::min);
        let first = run.iter().position(|&v| v == min).unwrap_or(0);
        let last = run.iter().rposition(|&v| v == min).unwrap_or(0);
        let split = pair[0] + (first + last) / 2;
        label[start..=split].fill(i);
        start = split + 1;
    }
    label[start..].fill(peaks.len() - 1);
    label
}

/// Full pipeline returning the populated histogram.
pub fn analyze(samples: &[[f64; 3]], config: &CchConfig) -> TripletHistogram {
    let (filtered, removed) = pca_filter(samples, config.outlier_sigma);
    let hist = build_triplet(&filtered, config);
    let mut hist = detect_peaks(hist, config, &filtered);
    hist.n_removed = removed as u64;
    hist
}

/// Estimated color count: the number of populated peak triplets.
pub fn count_colors_cch(samples: &PixelSamples, config: &CchConfig) -> CountEstimate {
    let start = Instant::now();
    let hist = analyze(samples.rows(), config);
    let counted: Vec<&ColorCell> = hist.counted_cells(config).collect();
    let estimate = counted.len().max(1);
    let covered: u64 = counted.iter().map(|c| c.count).sum();
    let selected_score = if hist.n_kept > 0 {
        covered as f64 / hist.n_kept as f64
    } else {
        0.0
    };
    CountEstimate {
        method: Method::Cch,
        estimate,
        selected_score,
        runtime_seconds: start.elapsed().as_secs_f64(),
        curve: None,
        diagnostics: Diagnostics::Cch(Box::new(hist)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> CchConfig {
        CchConfig::default()
    }

    fn gray(v: u8) -> f64 {
        f64::from(v) / 255.0
    }

    #[test]
    fn pca_passes_constant_image_through() {
        let data = vec![[0.3, 0.3, 0.3]; 100];
        let (kept, removed) = pca_filter(&data, 3.0);
        assert_eq!(removed, 0);
        assert_eq!(kept, data);
    }

    #[test]
    fn pca_removes_isolated_minority() {
        let mut data = vec![[0.2, 0.2, 0.2]; 10_000];
        // A few levels of spread so the dominant cloud has variance on every axis.
        for (i, row) in data.iter_mut().enumerate() {
            let j = i as f64;
            row[0] += 0.02 * (j * 0.7).sin();
            row[1] += 0.02 * (j * 1.3).cos();
            row[2] += 0.02 * (j * 2.9).sin();
        }
        data.extend(vec![[0.9, 0.1, 0.4]; 5]);
        let (kept, removed) = pca_filter(&data, 3.0);
        assert!(removed >= 5);
        assert!(!kept.contains(&[0.9, 0.1, 0.4]));
        let (_, second) = pca_filter(&kept, 3.0);
        assert!(second <= removed);
    }

    #[test]
    fn pca_removes_minority_of_exact_points() {
        let mut data = vec![[0.2, 0.2, 0.2]; 10_000];
        data.extend(vec![[0.9, 0.1, 0.4]; 5]);
        let (kept, removed) = pca_filter(&data, 3.0);
        assert_eq!(removed, 5);
        assert_eq!(kept.len(), 10_000);
    }

    #[test]
    fn constant_image_triplet() {
        let v = gray(128);
        let data = vec![[v, v, v]; 64];
        let h = build_triplet(&data, &cfg());
        for c in 0..3 {
            assert_eq!(h.bins[c][128], 64);
            assert_eq!(h.bins[c].iter().sum::<u64>(), 64);
            assert_eq!(h.trim[c], (128, 128));
        }
        let h = detect_peaks(h, &cfg(), &data);
        assert_eq!(h.peaks, [vec![128], vec![128], vec![128]]);
        let s = PixelSamples::new(8, 8, data).unwrap();
        assert_eq!(count_colors_cch(&s, &cfg()).estimate, 1);
    }

    #[test]
    fn black_and_white_triplet() {
        let mut data = vec![[0.0; 3]; 50];
        data.extend(vec![[1.0; 3]; 50]);
        let h = build_triplet(&data, &cfg());
        for c in 0..3 {
            assert_eq!(h.bins[c][0], 50);
            assert_eq!(h.bins[c][255], 50);
            assert_eq!(h.trim[c], (0, 255));
            assert_eq!(h.bins[c].iter().sum::<u64>(), h.n_kept);
        }
        let h = detect_peaks(h, &cfg(), &data);
        assert_eq!(h.peaks[0], vec![0, 255]);
        assert_eq!(h.cells.len(), 2);
    }

    #[test]
    fn hand_checked_peaks() {
        assert_eq!(find_peaks(&[0.0, 5.0, 1.0, 7.0, 2.0], 1.0, 1), vec![1, 3]);
        // Suppression keeps the higher of two close peaks.
        assert_eq!(find_peaks(&[0.0, 5.0, 1.0, 7.0, 2.0], 1.0, 3), vec![3]);
        // Equal heights: lower index wins.
        assert_eq!(find_peaks(&[0.0, 4.0, 1.0, 4.0, 0.0], 1.0, 3), vec![1]);
        assert_eq!(find_peaks(&[3.0], 1.0, 10), vec![0]);
    }

    #[test]
    fn prominence_values() {
        let v = [0.0, 5.0, 1.0, 7.0, 2.0];
        assert_eq!(prominence(&v, 1), 4.0);
        assert_eq!(prominence(&v, 3), 7.0);
    }

    #[test]
    fn boundary_peak_at_255() {
        let mut data = vec![[1.0, 0.5, 0.5]; 900];
        data.extend((0..100).map(|i| [gray(200 + (i % 40) as u8), 0.5, 0.5]));
        let h = analyze(&data, &cfg());
        assert!(h.peaks[0].contains(&255), "{:?}", h.peaks[0]);
    }

    #[test]
    fn window_shrinks_at_edges() {
        assert_eq!(moving_average(&[10, 0, 0, 0, 0], 5), vec![10.0 / 3.0, 2.5, 2.0, 0.0, 0.0]);
        assert_eq!(moving_average(&[6], 5), vec![6.0]);
    }

    #[test]
    fn histogram_csv_shape() {
        let data = vec![[0.0, 0.5, 1.0]; 10];
        let h = analyze(&data, &cfg());
        let csv = h.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "channel,bin,raw_count,smoothed,is_peak");
        assert_eq!(lines.len(), 1 + 3 * 256);
        assert_eq!(lines[1], "r,0,10,10,1");
        assert_eq!(lines[2], "r,1,0,,0");
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(CchConfig { smoothing_window: 4, ..cfg() }.validate().is_err());
        assert!(CchConfig { min_peak_distance: 0, ..cfg() }.validate().is_err());
        assert!(cfg().validate().is_ok());
    }
}
