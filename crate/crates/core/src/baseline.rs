//! I.i.d. baseline: lasso-penalized precision estimation from the sample
//! covariance, solved by the same ADMM at `M = 1`, `α = 1`.

use serde::{Deserialize, Serialize};

use crate::admm::{solve, PrecisionState, SolverConfig, SolverReport};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::select::{argmin_by, bic, log_space, select_edges, Edge, GridPoint};
use crate::spectral::{SmoothedPsdSet, TimeSeries};

/// Mean-centered `(1/n) Σ_t x(t) x(t)ᵀ`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub p: usize,
    pub n: usize,
    pub c: Vec<f64>,
}

impl CovarianceEstimate {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.p + j]
    }

    pub fn to_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix::from_real_symmetric(self.p, &self.c)
    }

    /// The covariance as a one-frequency problem with nominal window `K = n`,
    /// so BIC uses `2n` as its sample count.
    pub fn as_psd_set(&self) -> Result<SmoothedPsdSet> {
        SmoothedPsdSet::from_parts(self.n, vec![self.to_hermitian()])
    }

    /// `max_{i≠j} |C_ij|`: the smallest `λ` with an empty lasso graph.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.p {
            for j in 0..self.p {
                if i != j {
                    m = m.max(self.get(i, j).abs());
                }
            }
        }
        m
    }
}

pub fn sample_covariance(x: &TimeSeries) -> Result<CovarianceEstimate> {
    if x.n() < 2 {
        return Err(Error::InvalidInput("sample covariance needs n ≥ 2".into()));
    }
    let x = x.centered();
    let (n, p) = (x.n(), x.p());
    let mut c = vec![0.0; p * p];
    for t in 0..n {
        let row = x.row(t);
        for i in 0..p {
            for j in i..p {
                c[i * p + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            c[i * p + j] /= n as f64;
            c[j * p + i] = c[i * p + j];
        }
    }
    Ok(CovarianceEstimate { p, n, c })
}

#[derive(Debug, Clone)]
pub struct GlassoFit {
    /// Real part of `Φ`, row-major.
    pub omega: Vec<f64>,
    pub edges: Vec<Edge>,
    pub state: PrecisionState,
    pub report: SolverReport,
}

/// `argmin −ln|Ω| + tr(CΩ) + λ Σ_{i≠j} |Ω_ij|` with default solver settings.
pub fn glasso(c: &CovarianceEstimate, lambda: f64) -> Result<GlassoFit> {
    glasso_with(c, &SolverConfig::new(lambda, 1.0))
}

/// As [`glasso`] with explicit solver settings; `alpha` is forced to 1.
pub fn glasso_with(c: &CovarianceEstimate, cfg: &SolverConfig) -> Result<GlassoFit> {
    let cfg = SolverConfig { alpha: 1.0, ..*cfg };
    let s = c.as_psd_set()?;
    let (state, report) = solve(&s, &cfg)?;
    let omega = state.phi[0]
        .as_matrix()
        .as_slice()
        .iter()
        .map(|z| z.re)
        .collect();
    let edges = select_edges(&state.w).edges;
    Ok(GlassoFit {
        omega,
        edges,
        state,
        report,
    })
}

/// `points` log-spaced values in `[λ_max/50, λ_max]`, ascending.
pub fn lambda_grid(c: &CovarianceEstimate, points: usize) -> Result<Vec<f64>> {
    let top = c.max_off_diagonal();
    if !(top > 0.0) {
        return Err(Error::Degenerate(
            "covariance has no off-diagonal mass".into(),
        ));
    }
    Ok(log_space(top / 50.0, top, points))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidTuning {
    pub lambda: f64,
    pub table: Vec<GridPoint>,
}

/// Solves every grid point; grid points are independent and run in parallel.
pub fn path(
    c: &CovarianceEstimate,
    solver: &SolverConfig,
    lambdas: &[f64],
) -> Result<Vec<GridPoint>> {
    use rayon::prelude::*;
    let s = c.as_psd_set()?;
    lambdas
        .par_iter()
        .map(|&lambda| {
            let fit = glasso_with(c, &SolverConfig { lambda, ..*solver })?;
            Ok(GridPoint {
                lambda,
                alpha: 1.0,
                bic: bic(&fit.state.phi, &fit.state.w, &s)?,
                edges: fit.edges,
                converged: fit.report.converged,
                iterations: fit.report.iterations,
            })
        })
        .collect()
}

/// BIC-selected `λ` over [`lambda_grid`].
pub fn tune_bic(c: &CovarianceEstimate, solver: &SolverConfig, points: usize) -> Result<IidTuning> {
    let table = path(c, solver, &lambda_grid(c, points)?)?;
    let lambda = table[argmin_by(&table, |g| g.bic)].lambda;
    Ok(IidTuning { lambda, table })
}
