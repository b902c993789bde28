//! ADMM for the sparse-group lasso penalized frequency-domain likelihood.
//!
//! Minimizes over Hermitian `Φ_1, …, Φ_M ≻ 0`
//!
//! ```text
//! Σ_k [ −ln|Φ_k| + tr(Ŝ_k Φ_k) ]
//!   + αλ Σ_k Σ_{i≠j} |[Φ_k]_ij| + (1−α)λ Σ_{i≠j} ‖([Φ_1]_ij, …, [Φ_M]_ij)‖
//! ```
//!
//! through the split `W_k = Φ_k` in scaled form. One iteration is
//!
//! 1. `Φ_k ← argmin` of the smooth part, solved in closed form from an
//!    eigendecomposition of `Ŝ_k − ρ(W_k − U_k)`;
//! 2. `W ← prox` of the penalty at `Φ + U`, one sparse-group shrinkage per
//!    off-diagonal position;
//! 3. `U_k ← U_k + Φ_k − W_k`.
//!
//! Stopping uses the primal residual `‖Φ − W‖` and dual residual
//! `ρ‖W − W_prev‖` against mixed absolute/relative tolerances, and `ρ` is
//! doubled or halved whenever the residuals drift apart by more than `μ`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, logdet_hpd, CMatrix, HermitianMatrix};
use crate::prox::sparse_group_prox_into;
use crate::spectral::SmoothedPsdSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Overall penalty weight `λ ≥ 0`.
    pub lambda: f64,
    /// Lasso share `α ∈ [0, 1]`; `1 − α` goes to the group penalty.
    pub alpha: f64,
    /// Initial ADMM penalty `ρ⁽⁰⁾`.
    pub rho0: f64,
    /// Residual balance factor for adapting `ρ`.
    pub mu: f64,
    pub tau_abs: f64,
    pub tau_rel: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            alpha: 0.1,
            rho0: 2.0,
            mu: 10.0,
            tau_abs: 1e-4,
            tau_rel: 1e-4,
            max_iter: 1000,
        }
    }
}

impl SolverConfig {
    pub fn new(lambda: f64, alpha: f64) -> Self {
        Self {
            lambda,
            alpha,
            ..Self::default()
        }
    }

    pub fn with_tolerances(mut self, tau_abs: f64, tau_rel: f64) -> Self {
        self.tau_abs = tau_abs;
        self.tau_rel = tau_rel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return bad("rho0 must be positive");
        }
        if !(self.mu > 1.0) {
            return bad("mu must exceed 1");
        }
        if !(self.tau_abs > 0.0 && self.tau_rel > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        Ok(())
    }
}

/// The ADMM iterate: primal `Φ`, split copy `W`, scaled duals `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionState {
    pub phi: Vec<HermitianMatrix>,
    pub w: Vec<HermitianMatrix>,
    pub u: Vec<HermitianMatrix>,
    pub rho: f64,
    pub iter: usize,
}

impl PrecisionState {
    /// `Φ_k = I`, `W_k = U_k = 0`.
    pub fn initial(p: usize, m: usize, rho: f64) -> Self {
        Self {
            phi: vec![HermitianMatrix::identity(p); m],
            w: vec![HermitianMatrix::zeros(p); m],
            u: vec![HermitianMatrix::zeros(p); m],
            rho,
            iter: 0,
        }
    }

    pub fn p(&self) -> usize {
        self.phi[0].dim()
    }

    pub fn m(&self) -> usize {
        self.phi.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub tau_pri: f64,
    pub tau_dual: f64,
    /// Penalized objective evaluated at the final `Φ`.
    pub objective: f64,
    pub final_rho: f64,
}

/// Closed-form minimizer of `−ln|Φ| + tr(ŜΦ) + (ρ/2)‖Φ − A‖²` with `A = W − U`.
///
/// With `Ŝ − ρA = V D Vᴴ`, the result is `V D̃ Vᴴ` where
/// `D̃_ℓ = (−D_ℓ + √(D_ℓ² + 4ρ)) / (2ρ) > 0`.
pub fn update_phi(
    s: &HermitianMatrix,
    w: &HermitianMatrix,
    u: &HermitianMatrix,
    rho: f64,
) -> Result<HermitianMatrix> {
    let a = w.sub(u);
    let target = s.sub(&a.scale(rho));
    let eig = eigh(&target)?;
    Ok(eig.spectral_map(|d| {
        let root = (d * d + 4.0 * rho).sqrt();
        // Two algebraically equal forms; pick the one without cancellation.
        if d > 0.0 {
            2.0 / (d + root)
        } else {
            (root - d) / (2.0 * rho)
        }
    }))
}

/// Penalty prox at `A_k = Φ_k + U_k`: diagonal copied, each off-diagonal
/// group shrunk with `λ1 = αλ/ρ`, `λ2 = (1−α)λ/ρ`.
///
/// Only the upper triangle is computed; the lower triangle is its exact
/// conjugate.
pub fn update_w(
    phi: &[HermitianMatrix],
    u: &[HermitianMatrix],
    lambda: f64,
    alpha: f64,
    rho: f64,
) -> Vec<HermitianMatrix> {
    let m = phi.len();
    let p = phi[0].dim();
    let lambda1 = alpha * lambda / rho;
    let lambda2 = (1.0 - alpha) * lambda / rho;
    let a: Vec<HermitianMatrix> = phi.iter().zip(u).map(|(f, d)| f.add(d)).collect();
    let mut out: Vec<CMatrix> = vec![CMatrix::zeros(p); m];
    for (o, ak) in out.iter_mut().zip(&a) {
        for i in 0..p {
            o[(i, i)] = ak.get(i, i);
        }
    }
    let mut group = vec![Complex64::new(0.0, 0.0); m];
    let mut shrunk = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..p {
        for j in (i + 1)..p {
            for (g, ak) in group.iter_mut().zip(&a) {
                *g = ak.get(i, j);
            }
            sparse_group_prox_into(&group, lambda1, lambda2, &mut shrunk);
            for (o, &z) in out.iter_mut().zip(&shrunk) {
                o[(i, j)] = z;
                o[(j, i)] = z.conj();
            }
        }
    }
    out.into_iter().map(HermitianMatrix::from_exact).collect()
}

/// `U_k + (Φ_k − W_k)`.
pub fn update_u(
    u: &[HermitianMatrix],
    phi: &[HermitianMatrix],
    w: &[HermitianMatrix],
) -> Vec<HermitianMatrix> {
    u.iter()
        .zip(phi)
        .zip(w)
        .map(|((uk, fk), wk)| uk.add(&fk.sub(wk)))
        .collect()
}

fn stacked_norm<'a>(blocks: impl Iterator<Item = &'a HermitianMatrix>) -> f64 {
    blocks
        .map(HermitianMatrix::frobenius_norm_sqr)
        .sum::<f64>()
        .sqrt()
}

fn stacked_diff_norm(a: &[HermitianMatrix], b: &[HermitianMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.sub(y).frobenius_norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Primal residual `‖[Φ_k − W_k]‖_F` and dual residual `ρ‖[W_k − W_k^prev]‖_F`.
pub fn residuals(state: &PrecisionState, prev_w: &[HermitianMatrix]) -> (f64, f64) {
    let primal = stacked_diff_norm(&state.phi, &state.w);
    let dual = state.rho * stacked_diff_norm(&state.w, prev_w);
    (primal, dual)
}

/// `(τ_pri, τ_dual)` from absolute and relative tolerances.
pub fn tolerances(state: &PrecisionState, tau_abs: f64, tau_rel: f64) -> (f64, f64) {
    let base = state.p() as f64 * (state.m() as f64).sqrt() * tau_abs;
    let e1 = stacked_norm(state.phi.iter());
    let e2 = stacked_norm(state.w.iter());
    let e3 = stacked_norm(state.u.iter());
    (base + tau_rel * e1.max(e2), base + tau_rel * e3 / state.rho)
}

/// Residual balancing: double `ρ` when the primal residual dominates by more
/// than `μ`, halve it when the dual residual does.
pub fn adapt_rho(rho: f64, primal: f64, dual: f64, mu: f64) -> f64 {
    if primal > mu * dual {
        2.0 * rho
    } else if dual > mu * primal {
        rho / 2.0
    } else {
        rho
    }
}

/// Applies a new `ρ`, rescaling the scaled duals so `ρU` is unchanged.
pub fn set_rho(state: &mut PrecisionState, new_rho: f64) {
    if new_rho == state.rho {
        return;
    }
    let factor = state.rho / new_rho;
    for u in &mut state.u {
        *u = u.scale(factor);
    }
    state.rho = new_rho;
}

/// Sparse-group penalty of a set of matrices (diagonals are not penalized).
pub fn penalty(mats: &[HermitianMatrix], lambda: f64, alpha: f64) -> f64 {
    let p = mats[0].dim();
    let mut lasso = 0.0;
    let mut group = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let mut sq = 0.0;
            for mk in mats {
                let z = mk.get(i, j);
                lasso += z.norm();
                sq += z.norm_sqr();
            }
            group += sq.sqrt();
        }
    }
    alpha * lambda * lasso + (1.0 - alpha) * lambda * group
}

/// Negative log-likelihood part `Σ_k [−ln|Φ_k| + tr(Ŝ_k Φ_k)]`.
pub fn neg_log_likelihood(mats: &[HermitianMatrix], s: &SmoothedPsdSet) -> Result<f64> {
    let mut total = 0.0;
    for (mk, sk) in mats.iter().zip(&s.psd) {
        total += -logdet_hpd(mk)? + sk.trace_product(mk);
    }
    Ok(total)
}

/// Full penalized objective.
pub fn objective(
    mats: &[HermitianMatrix],
    s: &SmoothedPsdSet,
    lambda: f64,
    alpha: f64,
) -> Result<f64> {
    Ok(neg_log_likelihood(mats, s)? + penalty(mats, lambda, alpha))
}

/// Runs ADMM from the standard cold start.
pub fn solve(s: &SmoothedPsdSet, cfg: &SolverConfig) -> Result<(PrecisionState, SolverReport)> {
    solve_from(s, cfg, PrecisionState::initial(s.p(), s.m(), cfg.rho0))
}

/// Runs ADMM from a given state (warm start). The state's `ρ` is kept.
pub fn solve_from(
    s: &SmoothedPsdSet,
    cfg: &SolverConfig,
    mut state: PrecisionState,
) -> Result<(PrecisionState, SolverReport)> {
    cfg.validate()?;
    if state.m() != s.m() || state.p() != s.p() {
        return Err(Error::InvalidConfig(format!(
            "state shape ({}×{}, M = {}) does not match data ({}×{}, M = {})",
            state.p(),
            state.p(),
            state.m(),
            s.p(),
            s.p(),
            s.m()
        )));
    }
    state.iter = 0;
    let mut report = SolverReport {
        converged: false,
        iterations: 0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        tau_pri: 0.0,
        tau_dual: 0.0,
        objective: f64::NAN,
        final_rho: state.rho,
    };
    for iter in 1..=cfg.max_iter {
        let rho = state.rho;
        state.phi = s
            .psd
            .par_iter()
            .zip(&state.w)
            .zip(&state.u)
            .map(|((sk, wk), uk)| update_phi(sk, wk, uk, rho))
            .collect::<Result<Vec<_>>>()?;
        let w_next = update_w(&state.phi, &state.u, cfg.lambda, cfg.alpha, rho);
        let prev_w = std::mem::replace(&mut state.w, w_next);
        state.u = update_u(&state.u, &state.phi, &state.w);
        state.iter = iter;

        let (primal, dual) = residuals(&state, &prev_w);
        let (tau_pri, tau_dual) = tolerances(&state, cfg.tau_abs, cfg.tau_rel);
        report.iterations = iter;
        report.primal_residual = primal;
        report.dual_residual = dual;
        report.tau_pri = tau_pri;
        report.tau_dual = tau_dual;
        if primal <= tau_pri && dual <= tau_dual {
            report.converged = true;
            break;
        }
        if !(primal.is_finite() && dual.is_finite()) {
            return Err(Error::Degenerate(format!(
                "ADMM residuals became non-finite at iteration {iter}"
            )));
        }
        set_rho(&mut state, adapt_rho(rho, primal, dual, cfg.mu));
    }
    report.final_rho = state.rho;
    report.objective = objective(&state.phi, s, cfg.lambda, cfg.alpha)?;
    Ok((state, report))
}
