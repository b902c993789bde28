//! Complex sparse-group soft thresholding.
//!
//! For a group `a ∈ ℂ^q` the minimizer of
//! `½‖a − θ‖² + λ1 Σ|θ_i| + λ2 ‖θ‖` is
//! `θ_i = (1 − λ2/‖S(a, λ1)‖)₊ · S(a_i, λ1)` with `S(b, β) = (1 − β/|b|)₊ b`.
//! Thresholded entries come out as exact zeros.

use num_complex::Complex64;

/// One cross-frequency group `([A_1]_ij, …, [A_M]_ij)`.
pub type GroupVector = Vec<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Complex soft thresholding: shrinks the magnitude by `beta`, keeps the phase.
#[inline]
pub fn soft_threshold(b: Complex64, beta: f64) -> Complex64 {
    let m = b.norm();
    if m <= beta || m == 0.0 {
        ZERO
    } else {
        b * (1.0 - beta / m)
    }
}

/// Sparse-group prox written into `out` (same length as `a`).
pub fn sparse_group_prox_into(a: &[Complex64], lambda1: f64, lambda2: f64, out: &mut [Complex64]) {
    debug_assert_eq!(a.len(), out.len());
    let mut norm_sqr = 0.0;
    for (o, &x) in out.iter_mut().zip(a) {
        *o = soft_threshold(x, lambda1);
        norm_sqr += o.norm_sqr();
    }
    let norm = norm_sqr.sqrt();
    if norm <= lambda2 || norm == 0.0 {
        out.fill(ZERO);
        return;
    }
    let factor = 1.0 - lambda2 / norm;
    for o in out.iter_mut() {
        *o *= factor;
    }
}

pub fn sparse_group_prox(a: &[Complex64], lambda1: f64, lambda2: f64) -> GroupVector {
    let mut out = vec![ZERO; a.len()];
    sparse_group_prox_into(a, lambda1, lambda2, &mut out);
    out
}
