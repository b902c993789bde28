//! Frequency-domain sufficient statistic and smoothed PSD estimates.
//!
//! The normalized DFT is `d(f_m) = n^{-1/2} Σ_t x(t) e^{-j2π m t / n}` for
//! `t = 0..n-1`. Smoothing averages `K = 2 m_t + 1` consecutive periodogram
//! terms `d dᴴ` around each of `M` grid frequencies; the windows tile the
//! index range `1..=M·K` and never touch `m = 0` or `m = n/2`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetrize, CMatrix, HermitianMatrix};

/// Smallest sample count accepted by the estimation pipeline: room for one
/// window of width 3 strictly inside `(0, n/2)`.
pub const MIN_ESTIMATION_SAMPLES: usize = 2 * (2 + 1);

/// `n × p` real observations; row `t` is `x(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput("time series must be non-empty".into()));
        }
        if values.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {n}×{p} series, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                idx / p,
                idx % p
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::InvalidInput(format!(
                "row {bad} has {} columns, expected {p}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.p..(t + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(j).step_by(self.p).copied()
    }

    /// Checks the shape requirements of the estimation pipeline.
    pub fn validate_for_estimation(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 components, got {}",
                self.p
            )));
        }
        if self.n < MIN_ESTIMATION_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_ESTIMATION_SAMPLES} samples, got {}",
                self.n
            )));
        }
        Ok(())
    }

    /// Drops the last sample when `n` is odd.
    pub fn truncated_to_even(&self) -> TimeSeries {
        if self.n.is_multiple_of(2) {
            return self.clone();
        }
        let n = self.n - 1;
        Self {
            n,
            p: self.p,
            values: self.values[..n * self.p].to_vec(),
        }
    }

    /// Subtracts the per-component sample mean.
    pub fn centered(&self) -> TimeSeries {
        let means: Vec<f64> = (0..self.p)
            .map(|j| self.column(j).sum::<f64>() / self.n as f64)
            .collect();
        let values = self
            .values
            .chunks(self.p)
            .flat_map(|row| row.iter().zip(&means).map(|(x, m)| x - m))
            .collect();
        Self {
            n: self.n,
            p: self.p,
            values,
        }
    }
}

/// DFT frames `d(f_m)` for `m = 0..n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DftFrames {
    n: usize,
    p: usize,
    frames: Vec<Vec<Complex64>>,
}

impl DftFrames {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn frame(&self, m: usize) -> &[Complex64] {
        &self.frames[m]
    }

    pub fn frames(&self) -> &[Vec<Complex64>] {
        &self.frames
    }
}

/// Normalized DFT of every component, computed with an FFT.
pub fn dft(x: &TimeSeries) -> DftFrames {
    let (n, p) = (x.n(), x.p());
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let norm = 1.0 / (n as f64).sqrt();
    let mut frames = vec![vec![Complex64::new(0.0, 0.0); p]; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..p {
        for (b, v) in buf.iter_mut().zip(x.column(j)) {
            *b = Complex64::new(v, 0.0);
        }
        fft.process(&mut buf);
        for (frame, b) in frames.iter_mut().zip(&buf) {
            frame[j] = b * norm;
        }
    }
    DftFrames { n, p, frames }
}

/// Normalized DFT by direct `O(n²p)` summation; the reference for [`dft`].
pub fn dft_direct(x: &TimeSeries) -> DftFrames {
    let (n, p) = (x.n(), x.p());
    let norm = 1.0 / (n as f64).sqrt();
    let frames = (0..n)
        .map(|m| {
            let mut acc = vec![Complex64::new(0.0, 0.0); p];
            for t in 0..n {
                // Reduce m·t mod n first so the angle stays small and exact.
                let angle = -2.0 * std::f64::consts::PI * ((m * t) % n) as f64 / n as f64;
                let w = Complex64::from_polar(1.0, angle);
                for (a, &v) in acc.iter_mut().zip(x.row(t)) {
                    *a += w * v;
                }
            }
            acc.into_iter().map(|z| z * norm).collect()
        })
        .collect();
    DftFrames { n, p, frames }
}

/// `M` smoothing windows of odd width `K` tiling DFT indices `1..=M·K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    n: usize,
    window: usize,
    count: usize,
}

impl FrequencyGrid {
    /// Sample count the grid was built for.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Window width `K`.
    pub fn window(&self) -> usize {
        self.window
    }

    /// Half-width `m_t = (K - 1)/2`.
    pub fn half_width(&self) -> usize {
        (self.window - 1) / 2
    }

    /// Number of grid frequencies `M`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// DFT index at the center of window `k` (0-based `k`).
    pub fn center(&self, k: usize) -> usize {
        k * self.window + self.half_width() + 1
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.center(k) as f64 / self.n as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.frequency(k)).collect()
    }

    /// DFT indices covered by window `k`.
    pub fn window_indices(&self, k: usize) -> std::ops::RangeInclusive<usize> {
        let c = self.center(k);
        (c - self.half_width())..=(c + self.half_width())
    }

    /// Grid without the `K ≥ 3` requirement; used to exercise single-term windows.
    #[cfg(test)]
    pub(crate) fn unchecked(n: usize, window: usize, count: usize) -> Self {
        Self { n, window, count }
    }
}

/// Builds the grid for even `n` and odd `K`, with `M = ⌊(n/2 − 1)/K⌋`.
pub fn make_grid(n: usize, window: usize) -> Result<FrequencyGrid> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "sample count {n} must be even"
        )));
    }
    if window.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "window K = {window} must be odd"
        )));
    }
    if window < 3 {
        return Err(Error::InvalidConfig(format!(
            "window K = {window} must be at least 3"
        )));
    }
    let usable = (n / 2).saturating_sub(1);
    let count = usable / window;
    if count == 0 {
        return Err(Error::InvalidConfig(format!(
            "window K = {window} exceeds n/2 - 1 = {usable}"
        )));
    }
    Ok(FrequencyGrid { n, window, count })
}

/// Largest odd `K` whose grid has exactly `count` frequencies.
pub fn window_for_count(n: usize, count: usize) -> Result<usize> {
    if count == 0 {
        return Err(Error::InvalidConfig("M must be positive".into()));
    }
    let usable = (n / 2).saturating_sub(1);
    let mut k = usable / count;
    if k.is_multiple_of(2) {
        k = k.saturating_sub(1);
    }
    if k < 3 || usable / k != count {
        return Err(Error::InvalidConfig(format!(
            "no odd window K ≥ 3 gives M = {count} at n = {n}"
        )));
    }
    Ok(k)
}

/// Smoothed PSD estimates `Ŝ_k`, one per grid frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedPsdSet {
    pub grid: FrequencyGrid,
    pub psd: Vec<HermitianMatrix>,
}

impl SmoothedPsdSet {
    /// Wraps externally supplied matrices, e.g. a sample covariance as a
    /// single-frequency problem.
    pub fn from_matrices(grid: FrequencyGrid, psd: Vec<HermitianMatrix>) -> Result<Self> {
        if psd.len() != grid.count() {
            return Err(Error::InvalidInput(format!(
                "{} matrices for a grid of {} frequencies",
                psd.len(),
                grid.count()
            )));
        }
        let p = psd.first().map_or(0, HermitianMatrix::dim);
        if p == 0 || psd.iter().any(|s| s.dim() != p) {
            return Err(Error::InvalidInput(
                "PSD matrices must share a positive dimension".into(),
            ));
        }
        Ok(Self { grid, psd })
    }

    /// A set with the given matrices and a nominal grid of window `K` (not
    /// tied to any DFT). `M` is the number of matrices.
    pub fn from_parts(window: usize, psd: Vec<HermitianMatrix>) -> Result<Self> {
        let count = psd.len();
        let grid = FrequencyGrid {
            n: 2 * (count * window + 1),
            window,
            count,
        };
        Self::from_matrices(grid, psd)
    }

    pub fn p(&self) -> usize {
        self.psd[0].dim()
    }

    pub fn m(&self) -> usize {
        self.psd.len()
    }

    pub fn window(&self) -> usize {
        self.grid.window()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            psd: self.psd.iter().map(|s| s.scale(c)).collect(),
        }
    }
}

/// `Ŝ_k = (1/K) Σ_ℓ d(f̃_{k,ℓ}) dᴴ(f̃_{k,ℓ})` over each window.
pub fn smoothed_psd(d: &DftFrames, grid: &FrequencyGrid) -> Result<SmoothedPsdSet> {
    if grid.n() != d.n() {
        return Err(Error::InvalidConfig(format!(
            "grid built for n = {} applied to n = {}",
            grid.n(),
            d.n()
        )));
    }
    let p = d.p();
    let psd = (0..grid.count())
        .into_par_iter()
        .map(|k| {
            let mut acc = CMatrix::zeros(p);
            for m in grid.window_indices(k) {
                let v = d.frame(m);
                for i in 0..p {
                    for j in 0..p {
                        acc[(i, j)] += v[i] * v[j].conj();
                    }
                }
            }
            symmetrize(&acc.scale(1.0 / grid.window() as f64))
        })
        .collect();
    Ok(SmoothedPsdSet { grid: *grid, psd })
}

/// Full front end: drop a trailing sample for odd `n`, remove the mean, take
/// the DFT and smooth with window `K`.
pub fn estimate_psd(x: &TimeSeries, window: usize) -> Result<SmoothedPsdSet> {
    x.validate_for_estimation()?;
    let x = x.truncated_to_even().centered();
    let grid = make_grid(x.n(), window)?;
    smoothed_psd(&dft(&x), &grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn series(n: usize, p: usize, seed: u64) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * p)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        TimeSeries::new(n, p, v).unwrap()
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn dft_zero_series() {
        let x = TimeSeries::new(8, 3, vec![0.0; 24]).unwrap();
        assert!(dft(&x).frames().iter().flatten().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn dft_constant_and_impulse() {
        let x = TimeSeries::new(4, 1, vec![1.0; 4]).unwrap();
        let d = dft(&x);
        assert!(close(d.frame(0)[0], Complex64::new(2.0, 0.0)));
        for m in 1..4 {
            assert!(close(d.frame(m)[0], Complex64::new(0.0, 0.0)));
        }
        let x = TimeSeries::new(4, 1, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let d = dft(&x);
        for m in 0..4 {
            assert!(close(d.frame(m)[0], Complex64::new(0.5, 0.0)));
        }
    }

    #[test]
    fn fft_matches_direct_sum() {
        let x = series(96, 3, 4);
        let a = dft(&x);
        let b = dft_direct(&x);
        for m in 0..96 {
            for j in 0..3 {
                assert!((a.frame(m)[j] - b.frame(m)[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_matches_reported_configurations() {
        let g = make_grid(128, 31).unwrap();
        assert_eq!(g.count(), 2);
        assert_eq!((g.center(0), g.center(1)), (16, 47));
        assert!((g.frequency(0) - 0.125).abs() < 1e-15);
        assert!((g.frequency(1) - 47.0 / 128.0).abs() < 1e-15);
        assert_eq!(make_grid(128, 15).unwrap().count(), 4);
        assert_eq!(make_grid(1024, 255).unwrap().count(), 2);

        // Every (n, K, M) tuple of the published benchmark.
        let ns = [128, 256, 512, 1024, 2048];
        let table = [
            (2, [31, 63, 127, 255, 511]),
            (4, [15, 31, 63, 127, 255]),
            (6, [9, 21, 41, 85, 169]),
        ];
        for (m, ks) in table {
            for (&n, &k) in ns.iter().zip(&ks) {
                if (n, m) == (128, 6) {
                    // 63 / 9 = 7, and no odd K gives exactly six windows.
                    assert_eq!(make_grid(n, k).unwrap().count(), 7);
                    assert!(window_for_count(n, m).is_err());
                    continue;
                }
                assert_eq!(make_grid(n, k).unwrap().count(), m, "n={n} K={k}");
                assert_eq!(window_for_count(n, m).unwrap(), k, "n={n} M={m}");
            }
        }
    }

    #[test]
    fn grid_windows_tile_without_overlap() {
        let g = make_grid(200, 7).unwrap();
        let all: Vec<usize> = (0..g.count()).flat_map(|k| g.window_indices(k)).collect();
        assert_eq!(all, (1..=g.count() * 7).collect::<Vec<_>>());
        assert!(g.count() * 7 < 200 / 2);
    }

    #[test]
    fn grid_rejects_bad_windows() {
        assert!(matches!(make_grid(128, 30), Err(Error::InvalidConfig(_))));
        assert!(matches!(make_grid(128, 65), Err(Error::InvalidConfig(_))));
        assert!(matches!(make_grid(128, 1), Err(Error::InvalidConfig(_))));
        assert!(window_for_count(16, 4).is_err());
    }

    #[test]
    fn single_term_window_is_periodogram() {
        let x = series(32, 3, 2);
        let d = dft(&x);
        let g = FrequencyGrid::unchecked(32, 1, 15);
        let s = smoothed_psd(&d, &g).unwrap();
        for k in 0..15 {
            let v = d.frame(k + 1);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((s.psd[k].get(i, j) - v[i] * v[j].conj()).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn zero_series_gives_zero_psd() {
        let x = TimeSeries::new(64, 2, vec![0.0; 128]).unwrap();
        let s = smoothed_psd(&dft(&x), &make_grid(64, 5).unwrap()).unwrap();
        assert!(s.psd.iter().all(|m| m.frobenius_norm() == 0.0));
    }

    #[test]
    fn energy_bookkeeping() {
        let x = series(256, 4, 8);
        let d = dft(&x);
        let g = make_grid(256, 9).unwrap();
        let s = smoothed_psd(&d, &g).unwrap();
        let lhs: f64 = s.psd.iter().map(|m| 9.0 * m.as_matrix().trace().re).sum();
        let rhs: f64 = (1..=g.count() * 9)
            .map(|m| d.frame(m).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        assert!((lhs - rhs).abs() < 1e-10 * rhs);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let x = series(64, 2, 1);
        let g = make_grid(128, 5).unwrap();
        assert!(smoothed_psd(&dft(&x), &g).is_err());
    }

    #[test]
    fn pipeline_handles_odd_length_and_mean() {
        let mut x = series(129, 2, 3);
        let shifted: Vec<f64> = x.values().iter().map(|v| v + 10.0).collect();
        x = TimeSeries::new(129, 2, shifted).unwrap();
        let s = estimate_psd(&x, 15).unwrap();
        assert_eq!(s.grid.n(), 128);
        assert_eq!(s.m(), 4);
        let centered = x.truncated_to_even().centered();
        for j in 0..2 {
            assert!(centered.column(j).sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn time_series_validation() {
        assert!(TimeSeries::new(2, 2, vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(TimeSeries::new(2, 2, vec![1.0; 3]).is_err());
        assert!(TimeSeries::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        let short = TimeSeries::new(4, 2, vec![0.0; 8]).unwrap();
        assert!(short.validate_for_estimation().is_err());
        let narrow = TimeSeries::new(10, 1, vec![0.0; 10]).unwrap();
        assert!(narrow.validate_for_estimation().is_err());
    }
}
