//! Monte-Carlo benchmark: simulate clustered VAR data, estimate graphs with
//! the proposed method and the i.i.d. baseline, and score them against the
//! true edge set.
//!
//! Run `r` draws its model from seed `seed + r` and its data from
//! `seed + r + SIMULATION_SEED_OFFSET`; the same model is reused across `n`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::SolverConfig;
use crate::baseline::{self, sample_covariance};
use crate::error::{Error, Result};
use crate::select::{alpha_sweep, argmin_by, tune_run, Edge, GridPoint, TuneConfig};
use crate::spectral::{estimate_psd, window_for_count};
use crate::var::{f1, generate_model, simulate, true_edges};

pub const SIMULATION_SEED_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Iid,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Proposed => "proposed",
            Method::Iid => "iid",
        })
    }
}

/// How the penalty parameters of a method are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tuning {
    /// Grid search maximizing F1 against the truth.
    Oracle,
    Bic,
}

impl std::fmt::Display for Tuning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Tuning::Oracle => "oracle",
            Tuning::Bic => "bic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub communities: usize,
    pub community_size: usize,
    pub n_list: Vec<usize>,
    /// Number of frequencies `M`; `K` is the largest odd window giving it.
    pub m: usize,
    pub runs: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub tunings: Vec<Tuning>,
    pub tune: TuneConfig,
    /// Grid size for the baseline's `λ` search.
    pub iid_points: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            communities: 4,
            community_size: 8,
            n_list: vec![512, 1024],
            m: 4,
            runs: 10,
            seed: 1,
            methods: vec![Method::Proposed, Method::Iid],
            tunings: vec![Tuning::Oracle, Tuning::Bic],
            tune: TuneConfig::default(),
            iid_points: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: Method,
    pub tuning: Tuning,
    pub n: usize,
    pub run: usize,
    pub f1: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub edges: usize,
    pub true_edges: usize,
    /// Wall-clock seconds for the method's full estimate-and-tune pipeline.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: Method,
    pub tuning: Tuning,
    pub n: usize,
    pub runs: usize,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub seconds_mean: f64,
}

/// Index of the best F1; ties go to larger `λ`, then smaller `α`.
fn oracle_pick(points: &[GridPoint], truth: &[Edge]) -> usize {
    argmin_by(points, |g| -f1(&g.edges, truth))
}

fn result(
    method: Method,
    tuning: Tuning,
    n: usize,
    run: usize,
    g: &GridPoint,
    truth: &[Edge],
    seconds: f64,
) -> RunResult {
    RunResult {
        method,
        tuning,
        n,
        run,
        f1: f1(&g.edges, truth),
        lambda: g.lambda,
        alpha: g.alpha,
        edges: g.edges.len(),
        true_edges: truth.len(),
        seconds,
    }
}

/// One replicate at one sample size, for every configured method and tuning.
pub fn replicate(cfg: &BenchConfig, n: usize, run: usize) -> Result<Vec<RunResult>> {
    let model = generate_model(cfg.seed + run as u64, cfg.communities, cfg.community_size)?;
    let truth = true_edges(&model)?.edges;
    let x = simulate(&model, n, cfg.seed + run as u64 + SIMULATION_SEED_OFFSET)?;
    let mut out = Vec::new();

    if cfg.methods.contains(&Method::Proposed) {
        let start = Instant::now();
        let window = window_for_count(n, cfg.m)?;
        let s = estimate_psd(&x, window)?;
        let tuned = tune_run(&s, &cfg.tune)?;
        let base_seconds = start.elapsed().as_secs_f64();
        if cfg.tunings.contains(&Tuning::Bic) {
            out.push(result(
                Method::Proposed,
                Tuning::Bic,
                n,
                run,
                tuned.selection.chosen(),
                &truth,
                base_seconds,
            ));
        }
        if cfg.tunings.contains(&Tuning::Oracle) {
            let start = Instant::now();
            let lambda_points: Vec<GridPoint> =
                tuned.lambda_fits.iter().map(|f| f.point.clone()).collect();
            let best = oracle_pick(&lambda_points, &truth);
            let sweep = alpha_sweep(
                &s,
                &cfg.tune.solver,
                lambda_points[best].lambda,
                &cfg.tune.alpha_grid,
                Some(&tuned.lambda_fits[best].state),
            )?;
            let mut rows = vec![lambda_points[best].clone()];
            rows.extend(sweep.into_iter().map(|f| f.point));
            let pick = &rows[oracle_pick(&rows, &truth)];
            let seconds = base_seconds + start.elapsed().as_secs_f64();
            out.push(result(
                Method::Proposed,
                Tuning::Oracle,
                n,
                run,
                pick,
                &truth,
                seconds,
            ));
        }
    }

    if cfg.methods.contains(&Method::Iid) {
        let start = Instant::now();
        let c = sample_covariance(&x)?;
        let lambdas = baseline::lambda_grid(&c, cfg.iid_points)?;
        let table = baseline::path(&c, &SolverConfig { ..cfg.tune.solver }, &lambdas)?;
        let seconds = start.elapsed().as_secs_f64();
        if cfg.tunings.contains(&Tuning::Bic) {
            let g = &table[argmin_by(&table, |g| g.bic)];
            out.push(result(Method::Iid, Tuning::Bic, n, run, g, &truth, seconds));
        }
        if cfg.tunings.contains(&Tuning::Oracle) {
            let g = &table[oracle_pick(&table, &truth)];
            out.push(result(
                Method::Iid,
                Tuning::Oracle,
                n,
                run,
                g,
                &truth,
                seconds,
            ));
        }
    }
    Ok(out)
}

/// All replicates, run in parallel over `(n, run)`, in deterministic order.
pub fn run_all(cfg: &BenchConfig) -> Result<Vec<RunResult>> {
    if cfg.runs == 0 || cfg.n_list.is_empty() || cfg.methods.is_empty() || cfg.tunings.is_empty() {
        return Err(Error::InvalidConfig(
            "benchmark needs runs, sizes, methods and tunings".into(),
        ));
    }
    let jobs: Vec<(usize, usize)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.runs).map(move |r| (n, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(n, r)| replicate(cfg, n, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(results.into_iter().flatten().collect())
}

/// Mean and sample standard deviation of F1 and mean time per
/// `(method, tuning, n)`, in order of first appearance.
pub fn summarize(results: &[RunResult]) -> Vec<Summary> {
    let mut keys: Vec<(Method, Tuning, usize)> = Vec::new();
    for r in results {
        let key = (r.method, r.tuning, r.n);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, tuning, n)| {
            let rows: Vec<&RunResult> = results
                .iter()
                .filter(|r| (r.method, r.tuning, r.n) == (method, tuning, n))
                .collect();
            let count = rows.len() as f64;
            let mean = rows.iter().map(|r| r.f1).sum::<f64>() / count;
            let var = if rows.len() > 1 {
                rows.iter().map(|r| (r.f1 - mean).powi(2)).sum::<f64>() / (count - 1.0)
            } else {
                0.0
            };
            Summary {
                method,
                tuning,
                n,
                runs: rows.len(),
                f1_mean: mean,
                f1_std: var.sqrt(),
                seconds_mean: rows.iter().map(|r| r.seconds).sum::<f64>() / count,
            }
        })
        .collect()
}
