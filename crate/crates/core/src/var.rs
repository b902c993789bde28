//! Clustered VAR benchmark: model generation, simulation, exact PSD,
//! ground-truth edges and F1 scoring.
//!
//! Nodes are split into contiguous communities that evolve independently,
//! so the true PSD and its inverse are block diagonal.

use std::collections::HashSet;

use nalgebra::{DMatrix, Schur};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::select::Edge;
use crate::spectral::TimeSeries;
use crate::Complex64;

pub const GENERATOR: &str = "ChaCha8Rng";
pub const BURN_IN: usize = 100;
pub const ORDER: usize = 3;
pub const MAX_SPECTRAL_RADIUS: f64 = 0.95;
pub const MAX_REJECTIONS: usize = 500;
pub const COEFFICIENT_BOUND: f64 = 0.8;
pub const SUPPORT_FRACTION: f64 = 0.1;
pub const EDGE_THRESHOLD: f64 = 1e-6;
/// Frequencies `0, 0.01, …, 0.5` on which ground truth is evaluated.
pub const TRUTH_GRID_POINTS: usize = 51;
const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    /// Global node indices, contiguous and ascending.
    pub nodes: Vec<usize>,
    /// `lags[i]` is `A_{i+1}`, row-major `s × s`.
    pub lags: Vec<Vec<f64>>,
}

impl Community {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    fn lag(&self, i: usize, r: usize, c: usize) -> f64 {
        self.lags[i][r * self.size() + c]
    }

    /// `A(f) = I − Σ_i A_i e^{−j2πfi}`.
    pub fn transfer(&self, f: f64) -> CMatrix {
        let s = self.size();
        let mut a = CMatrix::identity(s);
        for (i, lag) in self.lags.iter().enumerate() {
            let z = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * (i + 1) as f64);
            for (idx, &v) in lag.iter().enumerate() {
                a.as_mut_slice()[idx] -= z * v;
            }
        }
        a
    }
}

/// VAR model with identity innovation covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub p: usize,
    pub order: usize,
    pub communities: Vec<Community>,
    pub seed: Option<u64>,
    pub generator: Option<String>,
}

impl VarModel {
    /// Builds a model from per-community lag matrices; nodes are assigned
    /// contiguously in the order given.
    pub fn from_blocks(blocks: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput(
                "model needs at least one community".into(),
            ));
        }
        let order = blocks[0].len();
        let mut communities = Vec::with_capacity(blocks.len());
        let mut next = 0;
        for lags in blocks {
            if lags.len() != order || order == 0 {
                return Err(Error::InvalidInput(
                    "every community needs the same positive order".into(),
                ));
            }
            let len = lags[0].len();
            let s = (len as f64).sqrt().round() as usize;
            if s == 0 || s * s != len || lags.iter().any(|l| l.len() != len) {
                return Err(Error::InvalidInput(
                    "lag matrices must be square and equally sized".into(),
                ));
            }
            communities.push(Community {
                nodes: (next..next + s).collect(),
                lags,
            });
            next += s;
        }
        Ok(Self {
            p: next,
            order,
            communities,
            seed: None,
            generator: None,
        })
    }

    /// Spectral radius of every community's companion matrix.
    pub fn spectral_radii(&self) -> Vec<f64> {
        self.communities.iter().map(companion_radius).collect()
    }
}

/// Spectral radius of the `sL × sL` companion matrix, or infinity if the
/// Schur iteration does not settle (such a draw is then rejected).
pub fn companion_radius(c: &Community) -> f64 {
    let s = c.size();
    let order = c.lags.len();
    let dim = s * order;
    let mut comp = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..order {
        for r in 0..s {
            for col in 0..s {
                comp[(r, i * s + col)] = c.lag(i, r, col);
            }
        }
    }
    for r in s..dim {
        comp[(r, r - s)] = 1.0;
    }
    match Schur::try_new(comp, f64::EPSILON, SCHUR_MAX_ITER) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        None => f64::INFINITY,
    }
}

/// Draws a clustered VAR(3) model: per community and lag, `round(0.1 s²)`
/// uniformly placed entries, each uniform on `[−0.8, 0.8]`, redrawn until
/// the companion spectral radius is at most 0.95.
pub fn generate_model(
    seed: u64,
    num_communities: usize,
    community_size: usize,
) -> Result<VarModel> {
    if num_communities == 0 || community_size == 0 {
        return Err(Error::InvalidConfig(
            "community count and size must be positive".into(),
        ));
    }
    let s = community_size;
    let nnz = (SUPPORT_FRACTION * (s * s) as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(num_communities);
    for q in 0..num_communities {
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS {
            let lags: Vec<Vec<f64>> = (0..ORDER)
                .map(|_| {
                    let mut a = vec![0.0; s * s];
                    for idx in sample(&mut rng, s * s, nnz) {
                        a[idx] = rng.random_range(-COEFFICIENT_BOUND..=COEFFICIENT_BOUND);
                    }
                    a
                })
                .collect();
            let candidate = Community {
                nodes: (0..s).collect(),
                lags,
            };
            if companion_radius(&candidate) <= MAX_SPECTRAL_RADIUS {
                accepted = Some(candidate.lags);
                break;
            }
        }
        match accepted {
            Some(lags) => blocks.push(lags),
            None => {
                return Err(Error::Degenerate(format!(
                    "community {q}: {MAX_REJECTIONS} consecutive draws exceeded the stability bound"
                )))
            }
        }
    }
    let mut model = VarModel::from_blocks(blocks)?;
    model.seed = Some(seed);
    model.generator = Some(GENERATOR.into());
    Ok(model)
}

/// Simulates `n` retained samples after a burn-in of [`BURN_IN`], starting
/// from a zero state. Community `q` draws from stream `q` of the seeded
/// generator, so blocks are independent and order-free.
pub fn simulate(model: &VarModel, n: usize, seed: u64) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let total = n + BURN_IN;
    let blocks: Vec<Vec<f64>> = model
        .communities
        .par_iter()
        .enumerate()
        .map(|(q, c)| {
            let s = c.size();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(q as u64);
            let mut x = vec![0.0; total * s];
            for t in 0..total {
                for r in 0..s {
                    let mut v: f64 = rng.sample(StandardNormal);
                    for (i, lag) in c.lags.iter().enumerate() {
                        if t > i {
                            let past = &x[(t - i - 1) * s..(t - i) * s];
                            let row = &lag[r * s..(r + 1) * s];
                            v += row.iter().zip(past).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                    x[t * s + r] = v;
                }
            }
            x.drain(..BURN_IN * s);
            x
        })
        .collect();
    let mut values = vec![0.0; n * model.p];
    for (c, block) in model.communities.iter().zip(&blocks) {
        let s = c.size();
        for t in 0..n {
            for (r, &node) in c.nodes.iter().enumerate() {
                values[t * model.p + node] = block[t * s + r];
            }
        }
    }
    TimeSeries::new(n, model.p, values)
}

fn block_assemble(model: &VarModel, blocks: Vec<CMatrix>) -> HermitianMatrix {
    let mut out = CMatrix::zeros(model.p);
    for (c, b) in model.communities.iter().zip(blocks) {
        for (r, &i) in c.nodes.iter().enumerate() {
            for (col, &j) in c.nodes.iter().enumerate() {
                out[(i, j)] = b[(r, col)];
            }
        }
    }
    crate::linalg::symmetrize(&out)
}

/// `S(f) = A(f)⁻¹ A(f)⁻ᴴ`, block by block.
pub fn true_psd(model: &VarModel, f: f64) -> Result<HermitianMatrix> {
    let blocks = model
        .communities
        .iter()
        .map(|c| {
            let inv = c.transfer(f).inverse().map_err(|_| {
                Error::Degenerate(format!("A(f) is singular at f = {f}; model is not stable"))
            })?;
            Ok(inv.matmul(&inv.adjoint()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(block_assemble(model, blocks))
}

/// `S(f)⁻¹ = A(f)ᴴ A(f)`, computed without inversion.
pub fn true_inverse_psd(model: &VarModel, f: f64) -> HermitianMatrix {
    let blocks = model
        .communities
        .iter()
        .map(|c| {
            let a = c.transfer(f);
            a.adjoint().matmul(&a)
        })
        .collect();
    block_assemble(model, blocks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub p: usize,
    pub edges: Vec<Edge>,
    pub frequencies: Vec<f64>,
    pub psd: Vec<HermitianMatrix>,
    pub inverse_psd: Vec<HermitianMatrix>,
}

impl GroundTruth {
    pub fn density(&self) -> f64 {
        self.edges.len() as f64 / (self.p * (self.p - 1) / 2) as f64
    }
}

/// `{i, j}` is an edge iff `Σ_f |[S⁻¹(f)]_ij| > 1e-6` over `f = 0, 0.01, …, 0.5`.
pub fn true_edges(model: &VarModel) -> Result<GroundTruth> {
    let frequencies: Vec<f64> = (0..TRUTH_GRID_POINTS).map(|i| i as f64 / 100.0).collect();
    let psd = frequencies
        .iter()
        .map(|&f| true_psd(model, f))
        .collect::<Result<Vec<_>>>()?;
    let inverse_psd: Vec<HermitianMatrix> = frequencies
        .iter()
        .map(|&f| true_inverse_psd(model, f))
        .collect();
    let mut edges = Vec::new();
    for i in 0..model.p {
        for j in (i + 1)..model.p {
            let mass: f64 = inverse_psd.iter().map(|m| m.get(i, j).norm()).sum();
            if mass > EDGE_THRESHOLD {
                edges.push((i, j));
            }
        }
    }
    Ok(GroundTruth {
        p: model.p,
        edges,
        frequencies,
        psd,
        inverse_psd,
    })
}

fn normalize(e: &Edge) -> Edge {
    (e.0.min(e.1), e.0.max(e.1))
}

/// F1 score of an estimated edge set; both empty scores 1.
pub fn f1(estimated: &[Edge], truth: &[Edge]) -> f64 {
    let est: HashSet<Edge> = estimated.iter().map(normalize).collect();
    let tru: HashSet<Edge> = truth.iter().map(normalize).collect();
    if est.is_empty() && tru.is_empty() {
        return 1.0;
    }
    let hits = est.intersection(&tru).count() as f64;
    if hits == 0.0 {
        return 0.0;
    }
    let precision = hits / est.len() as f64;
    let recall = hits / tru.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::estimate_psd;

    fn ar1(a: f64) -> VarModel {
        VarModel::from_blocks(vec![vec![vec![a]]]).unwrap()
    }

    #[test]
    fn generation_is_deterministic_and_stable() {
        let a = generate_model(7, 3, 8).unwrap();
        let b = generate_model(7, 3, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_model(8, 3, 8).unwrap());
        assert!(a.spectral_radii().iter().all(|&r| r <= MAX_SPECTRAL_RADIUS));
        for c in &a.communities {
            assert_eq!(c.lags.len(), 3);
            for lag in &c.lags {
                assert_eq!(lag.iter().filter(|&&v| v != 0.0).count(), 6);
                assert!(lag.iter().all(|v| v.abs() <= COEFFICIENT_BOUND));
            }
        }
        assert_eq!(a.generator.as_deref(), Some("ChaCha8Rng"));
    }

    #[test]
    fn paper_shape_has_128_nodes() {
        let m = generate_model(1, 16, 8).unwrap();
        assert_eq!(m.p, 128);
        assert_eq!(m.communities[15].nodes, (120..128).collect::<Vec<_>>());
    }

    #[test]
    fn companion_radius_of_nilpotent_and_scalar_ar() {
        let zero = VarModel::from_blocks(vec![vec![vec![0.0; 4]; 3]]).unwrap();
        assert!(zero.spectral_radii()[0] < 1e-6);
        assert!(generate_model(0, 2, 2).is_ok());
        let m = ar1(0.5);
        assert!((m.spectral_radii()[0] - 0.5).abs() < 1e-12);
        // x_t = 1.5 x_{t−1} − 0.56 x_{t−2} has roots 0.8 and 0.7.
        let m = VarModel::from_blocks(vec![vec![vec![1.5], vec![-0.56]]]).unwrap();
        assert!((m.spectral_radii()[0] - 0.8).abs() < 1e-10);
    }

    #[test]
    fn scalar_ar1_psd() {
        let m = ar1(0.5);
        assert!((true_psd(&m, 0.0).unwrap().get(0, 0).re - 4.0).abs() < 1e-12);
        for f in [0.0, 0.1, 0.37, 0.5] {
            let z = Complex64::from_polar(0.5, -2.0 * std::f64::consts::PI * f);
            let want = 1.0 / (Complex64::new(1.0, 0.0) - z).norm_sqr();
            assert!((true_psd(&m, f).unwrap().get(0, 0).re - want).abs() < 1e-12);
            assert!((true_inverse_psd(&m, f).get(0, 0).re * want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn white_noise_model() {
        let m = VarModel::from_blocks(vec![vec![vec![0.0; 9]; 3]; 2]).unwrap();
        for f in [0.0, 0.25, 0.5] {
            assert_eq!(true_psd(&m, f).unwrap(), HermitianMatrix::identity(6));
        }
        assert!(true_edges(&m).unwrap().edges.is_empty());
        let x = simulate(&m, 20000, 3).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let c: f64 =
                    (0..x.n()).map(|t| x.row(t)[i] * x.row(t)[j]).sum::<f64>() / x.n() as f64;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c - want).abs() < 0.05, "({i},{j}) {c}");
            }
        }
    }

    #[test]
    fn psd_is_block_diagonal_and_inverse_matches() {
        let m = generate_model(11, 3, 5).unwrap();
        for f in [0.0, 0.13, 0.5] {
            let s = true_psd(&m, f).unwrap();
            let sinv = true_inverse_psd(&m, f);
            for i in 0..m.p {
                for j in 0..m.p {
                    if i / 5 != j / 5 {
                        assert_eq!(s.get(i, j), Complex64::new(0.0, 0.0));
                    }
                }
            }
            let prod = s.as_matrix().matmul(sinv.as_matrix());
            assert!(prod.sub(&CMatrix::identity(m.p)).frobenius_norm() < 1e-9);
        }
        let truth = true_edges(&m).unwrap();
        assert!(truth.edges.iter().all(|&(i, j)| i / 5 == j / 5));
        assert_eq!(truth.frequencies.len(), 51);
    }

    #[test]
    fn simulation_is_deterministic_and_drops_burn_in() {
        let m = generate_model(2, 2, 8).unwrap();
        let a = simulate(&m, 1024, 5).unwrap();
        assert_eq!((a.n(), a.p()), (1024, 16));
        assert_eq!(a, simulate(&m, 1024, 5).unwrap());
        assert_ne!(a, simulate(&m, 1024, 6).unwrap());
        // A shorter run is a prefix of a longer one.
        let b = simulate(&m, 1000, 5).unwrap();
        assert_eq!(a.values()[..1000 * 16], b.values()[..]);
    }

    #[test]
    fn ar1_lag_one_autocovariance() {
        let x = simulate(&ar1(0.5), 100_000, 9).unwrap();
        let v: Vec<f64> = x.column(0).collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let lag1 = v
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / n;
        assert!((var - 4.0 / 3.0).abs() < 0.05 * 4.0 / 3.0, "var {var}");
        assert!((lag1 - 0.5 * var).abs() < 0.05 * 0.5 * var, "lag1 {lag1}");
    }

    #[test]
    fn long_run_smoothed_psd_matches_truth() {
        let m = generate_model(4, 2, 8).unwrap();
        let x = simulate(&m, 1 << 16, 21).unwrap();
        let s = estimate_psd(&x, 1023).unwrap();
        for (k, est) in s.psd.iter().enumerate() {
            let truth = true_psd(&m, s.grid.frequency(k)).unwrap();
            for c in &m.communities {
                let (lo, hi) = (c.nodes[0], c.nodes[c.size() - 1] + 1);
                let (mut num, mut den) = (0.0, 0.0);
                for i in lo..hi {
                    for j in lo..hi {
                        num += (est.get(i, j) - truth.get(i, j)).norm_sqr();
                        den += truth.get(i, j).norm_sqr();
                    }
                }
                let rel = (num / den).sqrt();
                assert!(rel < 0.15, "k={k} rel={rel}");
            }
        }
    }

    #[test]
    fn f1_examples() {
        let truth = vec![(0, 1), (1, 2), (2, 3), (0, 3)];
        assert_eq!(f1(&truth, &truth), 1.0);
        assert_eq!(f1(&[], &truth), 0.0);
        assert_eq!(f1(&[], &[]), 1.0);
        assert!((f1(&[(0, 1), (2, 1)], &truth) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1(&[(4, 5)], &truth), 0.0);
    }

    #[test]
    fn f1_swaps_precision_and_recall() {
        let a = vec![(0, 1)];
        let b = vec![(0, 1), (0, 2), (0, 3)];
        assert!((f1(&a, &b) - 0.5).abs() < 1e-15);
        assert_eq!(f1(&a, &b), f1(&b, &a));
    }
}
