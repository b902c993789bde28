//! Edge selection, BIC and the λ/α search.
//!
//! Edges are read off the split variable `W`, whose thresholded entries are
//! exact zeros: `{i, j}` is an edge iff the cross-frequency group
//! `([W_1]_ij, …, [W_M]_ij)` is nonzero. The likelihood part of BIC uses
//! `Φ`, which is always positive definite.

use serde::{Deserialize, Serialize};

use crate::admm::{
    neg_log_likelihood, solve, solve_from, PrecisionState, SolverConfig, SolverReport,
};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::spectral::SmoothedPsdSet;

/// Unordered node pair stored as `(i, j)` with `i < j`.
pub type Edge = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEstimate {
    pub p: usize,
    /// Edges in lexicographic order.
    pub edges: Vec<Edge>,
    /// `√(Σ_k |[W_k]_ij|²)` for each entry of `edges`.
    pub weights: Vec<f64>,
    /// Symmetric `p × p` matrix of group norms with zero diagonal.
    pub weighted_adjacency: Vec<Vec<f64>>,
}

impl GraphEstimate {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Fraction of the `p(p−1)/2` node pairs that are edges.
    pub fn density(&self) -> f64 {
        let pairs = self.p * (self.p - 1) / 2;
        self.edges.len() as f64 / pairs as f64
    }
}

/// Edge set and group-norm weights of `W`.
pub fn select_edges(w: &[HermitianMatrix]) -> GraphEstimate {
    let p = w[0].dim();
    let mut adjacency = vec![vec![0.0; p]; p];
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            let weight = w
                .iter()
                .map(|wk| wk.get(i, j).norm_sqr())
                .sum::<f64>()
                .sqrt();
            adjacency[i][j] = weight;
            adjacency[j][i] = weight;
            if weight > 0.0 {
                edges.push((i, j));
                weights.push(weight);
            }
        }
    }
    GraphEstimate {
        p,
        edges,
        weights,
        weighted_adjacency: adjacency,
    }
}

/// Number of nonzero entries over all `W_k`, diagonal included.
pub fn count_nonzero(w: &[HermitianMatrix]) -> usize {
    w.iter()
        .map(|wk| {
            wk.as_matrix()
                .as_slice()
                .iter()
                .filter(|z| z.norm() != 0.0)
                .count()
        })
        .sum()
}

/// `2K Σ_k [−ln|Φ_k| + tr(Ŝ_k Φ_k)] + ln(2KM) · nnz(W)`.
pub fn bic(phi: &[HermitianMatrix], w: &[HermitianMatrix], s: &SmoothedPsdSet) -> Result<f64> {
    let k = s.window() as f64;
    let m = s.m() as f64;
    Ok(2.0 * k * neg_log_likelihood(phi, s)? + (2.0 * k * m).ln() * count_nonzero(w) as f64)
}

/// One solved point of a tuning sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub bic: f64,
    pub edges: Vec<Edge>,
    pub converged: bool,
    pub iterations: usize,
}

/// A solved point together with the solver state, for warm starts and
/// downstream scoring.
#[derive(Debug, Clone)]
pub struct Fit {
    pub point: GridPoint,
    pub state: PrecisionState,
    pub report: SolverReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    /// Solver settings; `lambda` and `alpha` are overwritten during the search.
    pub solver: SolverConfig,
    /// `α` used while bracketing `λ_sm` and sweeping `λ`.
    pub alpha0: f64,
    pub lambda_points: usize,
    pub alpha_grid: Vec<f64>,
    /// Relative width at which the `λ_sm` bisection stops.
    pub bisect_rel: f64,
    /// Cap on doublings (or halvings) while bracketing `λ_sm`.
    pub max_bracket_steps: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            alpha0: 0.1,
            lambda_points: 10,
            alpha_grid: (0..=6).map(|i| 0.05 * i as f64).collect(),
            bisect_rel: 0.02,
            max_bracket_steps: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningSelection {
    pub lambda_sm: f64,
    /// True when every probed `λ` gave an empty graph, so `λ_sm` is the
    /// lowest probe rather than a bracketed transition.
    pub lambda_sm_at_floor: bool,
    pub lambda_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    /// `λ` sweep at `alpha0` followed by the `α` sweep at the chosen `λ`.
    pub bic_table: Vec<GridPoint>,
}

impl TuningSelection {
    /// The table row of the selected point.
    pub fn chosen(&self) -> &GridPoint {
        self.bic_table
            .iter()
            .find(|g| g.lambda == self.lambda && g.alpha == self.alpha)
            .expect("selected point is always in the table")
    }
}

/// Solves one `(λ, α)` point, optionally warm-started.
pub fn fit_point(
    s: &SmoothedPsdSet,
    base: &SolverConfig,
    lambda: f64,
    alpha: f64,
    warm: Option<&PrecisionState>,
) -> Result<Fit> {
    let cfg = SolverConfig {
        lambda,
        alpha,
        ..*base
    };
    let (state, report) = match warm {
        Some(st) => solve_from(s, &cfg, st.clone())?,
        None => solve(s, &cfg)?,
    };
    let graph = select_edges(&state.w);
    let point = GridPoint {
        lambda,
        alpha,
        bic: bic(&state.phi, &state.w, s)?,
        edges: graph.edges,
        converged: report.converged,
        iterations: report.iterations,
    };
    Ok(Fit {
        point,
        state,
        report,
    })
}

fn scale_seed(s: &SmoothedPsdSet) -> Result<f64> {
    let p = s.p();
    let mut off = 0.0_f64;
    let mut diag = 0.0_f64;
    for sk in &s.psd {
        for i in 0..p {
            diag = diag.max(sk.get(i, i).re);
            for j in 0..p {
                if i != j {
                    off = off.max(sk.get(i, j).norm());
                }
            }
        }
    }
    if off > 0.0 && off.is_finite() {
        Ok(off)
    } else if diag > 0.0 && diag.is_finite() {
        Ok(1e-3 * diag)
    } else {
        Err(Error::Degenerate("PSD estimates carry no energy".into()))
    }
}

/// Smallest `λ` at `alpha0` giving an empty graph, found by doubling from
/// `max_{k,i≠j} |[Ŝ_k]_ij|` and then bisecting. Returns `(λ_sm, at_floor)`.
pub fn find_lambda_sm(s: &SmoothedPsdSet, cfg: &TuneConfig) -> Result<(f64, bool)> {
    let empty_at = |lambda: f64| -> Result<bool> {
        Ok(fit_point(s, &cfg.solver, lambda, cfg.alpha0, None)?
            .point
            .edges
            .is_empty())
    };
    let seed = scale_seed(s)?;
    let (mut lo, mut hi);
    if empty_at(seed)? {
        hi = seed;
        lo = seed / 2.0;
        let mut steps = 0;
        while empty_at(lo)? {
            steps += 1;
            hi = lo;
            if steps >= cfg.max_bracket_steps {
                return Ok((hi, true));
            }
            lo /= 2.0;
        }
    } else {
        lo = seed;
        hi = 2.0 * seed;
        let mut steps = 1;
        while !empty_at(hi)? {
            if steps >= cfg.max_bracket_steps {
                return Err(Error::Degenerate(format!(
                    "no empty graph after {steps} doublings of lambda (reached {hi:e})"
                )));
            }
            lo = hi;
            hi *= 2.0;
            steps += 1;
        }
    }
    while hi - lo > cfg.bisect_rel * hi {
        let mid = 0.5 * (lo + hi);
        if empty_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, false))
}

/// `points` log-spaced values from `λ_u/10` to `λ_u = λ_sm/2`, ascending.
pub fn lambda_grid(lambda_sm: f64, points: usize) -> Vec<f64> {
    let upper = lambda_sm / 2.0;
    let lower = upper / 10.0;
    log_space(lower, upper, points)
}

pub fn log_space(lower: f64, upper: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![upper];
    }
    let (a, b) = (lower.ln(), upper.ln());
    (0..points)
        .map(|i| {
            if i + 1 == points {
                upper
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Solves a `λ` path at fixed `α`, from the largest `λ` down with warm starts.
/// Fits are returned in the order of `lambdas`.
pub fn lambda_path(
    s: &SmoothedPsdSet,
    base: &SolverConfig,
    lambdas: &[f64],
    alpha: f64,
) -> Result<Vec<Fit>> {
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut fits: Vec<Option<Fit>> = vec![None; lambdas.len()];
    let mut warm: Option<PrecisionState> = None;
    for idx in order {
        let fit = fit_point(s, base, lambdas[idx], alpha, warm.as_ref())?;
        warm = Some(fit.state.clone());
        fits[idx] = Some(fit);
    }
    Ok(fits
        .into_iter()
        .map(|f| f.expect("every index solved"))
        .collect())
}

/// Solves every `α` at fixed `λ`, warm-started from `warm`.
pub fn alpha_sweep(
    s: &SmoothedPsdSet,
    base: &SolverConfig,
    lambda: f64,
    alphas: &[f64],
    warm: Option<&PrecisionState>,
) -> Result<Vec<Fit>> {
    alphas
        .iter()
        .map(|&alpha| fit_point(s, base, lambda, alpha, warm))
        .collect()
}

/// Index of the minimizing score; ties go to larger `λ`, then smaller `α`.
pub fn argmin_by(points: &[GridPoint], score: impl Fn(&GridPoint) -> f64) -> usize {
    let mut best = 0;
    for (i, g) in points.iter().enumerate().skip(1) {
        let (a, b) = (score(g), score(&points[best]));
        let better = a < b
            || (a == b
                && (g.lambda > points[best].lambda
                    || (g.lambda == points[best].lambda && g.alpha < points[best].alpha)));
        if better {
            best = i;
        }
    }
    best
}

/// All fits produced by [`tune`], for callers that score points themselves.
#[derive(Debug, Clone)]
pub struct TuningRun {
    pub selection: TuningSelection,
    pub lambda_fits: Vec<Fit>,
    pub alpha_fits: Vec<Fit>,
}

/// BIC tuning: bracket `λ_sm`, sweep `λ` over `[λ_sm/20, λ_sm/2]` at
/// `alpha0`, then sweep `α` at the BIC-best `λ`.
pub fn tune(s: &SmoothedPsdSet, cfg: &TuneConfig) -> Result<TuningSelection> {
    Ok(tune_run(s, cfg)?.selection)
}

pub fn tune_run(s: &SmoothedPsdSet, cfg: &TuneConfig) -> Result<TuningRun> {
    if cfg.lambda_points == 0 || cfg.alpha_grid.is_empty() {
        return Err(Error::InvalidConfig(
            "tuning grids must be non-empty".into(),
        ));
    }
    let (lambda_sm, at_floor) = find_lambda_sm(s, cfg)?;
    let lambdas = lambda_grid(lambda_sm, cfg.lambda_points);
    let lambda_fits = lambda_path(s, &cfg.solver, &lambdas, cfg.alpha0)?;
    let lambda_points: Vec<GridPoint> = lambda_fits.iter().map(|f| f.point.clone()).collect();
    let best_lambda = argmin_by(&lambda_points, |g| g.bic);
    let lambda = lambda_points[best_lambda].lambda;

    let alpha_fits = alpha_sweep(
        s,
        &cfg.solver,
        lambda,
        &cfg.alpha_grid,
        Some(&lambda_fits[best_lambda].state),
    )?;
    let mut table = lambda_points;
    table.extend(alpha_fits.iter().map(|f| f.point.clone()));
    // Rows at the chosen λ include the λ-stage fit at alpha0, so the α
    // stage never makes BIC worse.
    let best = argmin_by(&table, |g| {
        if g.lambda == lambda {
            g.bic
        } else {
            f64::INFINITY
        }
    });
    let alpha = table[best].alpha;

    Ok(TuningRun {
        selection: TuningSelection {
            lambda_sm,
            lambda_sm_at_floor: at_floor,
            lambda_grid: lambdas,
            alpha_grid: cfg.alpha_grid.clone(),
            lambda,
            alpha,
            bic_table: table,
        },
        lambda_fits,
        alpha_fits,
    })
}
