//! Dense complex matrices and Hermitian primitives.
//!
//! Everything here is small and dense: the matrices of interest are `p × p`
//! with `p` up to a few hundred. The Hermitian eigensolver is a cyclic complex
//! Jacobi method, which is slow for large `p` but simple, deterministic and
//! accurate to working precision.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Off-diagonal Frobenius tolerance for Jacobi, relative to `‖A‖_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Maximum number of full Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Square dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries. Panics if the length is not a square.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(
            data.len(),
            dim * dim,
            "row-major data must hold dim² entries"
        );
        Self { dim, data }
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Self {
        assert_eq!(
            data.len(),
            dim * dim,
            "row-major data must hold dim² entries"
        );
        Self {
            dim,
            data: data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    fn zip_with(&self, rhs: &CMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest deviation from Hermitian symmetry, `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMatrix> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        let scale = self
            .data
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r1, &r2| a[(r1, col)].norm().total_cmp(&a[(r2, col)].norm()))
                .unwrap_or(col);
            if a[(pivot_row, col)].norm() <= scale * 1e-14 {
                return Err(Error::Singular { index: col });
            }
            if pivot_row != col {
                for j in 0..n {
                    a.data.swap(pivot_row * n + j, col * n + j);
                    inv.data.swap(pivot_row * n + j, col * n + j);
                }
            }
            let piv = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= piv;
                inv[(col, j)] *= piv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// A complex matrix that is exactly Hermitian: `a_ij == conj(a_ji)` bit for bit
/// and the diagonal is real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CMatrix", try_from = "CMatrix")]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Accepts `m` if it is Hermitian to within `1e-12` (relative to its largest
    /// entry, floor 1) and stores the exactly symmetrized version.
    pub fn new(m: CMatrix) -> Result<Self> {
        let scale = m
            .as_slice()
            .iter()
            .map(|z| z.norm())
            .fold(1.0_f64, f64::max);
        let defect = m.hermitian_defect();
        if !(defect <= 1e-12 * scale) {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(symmetrize(&m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = CMatrix::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        Self(m)
    }

    /// Real symmetric input; only the upper triangle is read.
    pub fn from_real_symmetric(dim: usize, data: &[f64]) -> Self {
        let m = CMatrix::from_real(dim, data);
        let mut out = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                out[(i, j)] = m[(i, j)];
                out[(j, i)] = m[(i, j)];
            }
        }
        Self(out)
    }

    /// Wraps a matrix the caller has built with exact conjugate pairing.
    pub(crate) fn from_exact(m: CMatrix) -> Self {
        debug_assert_eq!(m.hermitian_defect(), 0.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn add(&self, rhs: &HermitianMatrix) -> HermitianMatrix {
        Self(self.0.add(&rhs.0))
    }

    pub fn sub(&self, rhs: &HermitianMatrix) -> HermitianMatrix {
        Self(self.0.sub(&rhs.0))
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        Self(self.0.scale(s))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.0.frobenius_norm_sqr()
    }

    /// `tr(self · rhs)`; real when both factors are Hermitian.
    pub fn trace_product(&self, rhs: &HermitianMatrix) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.0[(i, j)] * rhs.0[(j, i)]).re;
            }
        }
        acc
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.0[(i, j)] == ZERO))
    }
}

impl From<HermitianMatrix> for CMatrix {
    fn from(h: HermitianMatrix) -> Self {
        h.0
    }
}

impl TryFrom<CMatrix> for HermitianMatrix {
    type Error = Error;

    fn try_from(m: CMatrix) -> Result<Self> {
        HermitianMatrix::new(m)
    }
}

/// `(A + Aᴴ)/2` with an exactly real diagonal and exact conjugate pairing.
pub fn symmetrize(a: &CMatrix) -> HermitianMatrix {
    let n = a.dim();
    let mut out = CMatrix::zeros(n);
    for i in 0..n {
        out[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out[(i, j)] = z;
            out[(j, i)] = z.conj();
        }
    }
    HermitianMatrix(out)
}

/// Eigendecomposition `H = V diag(d) Vᴴ`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Real eigenvalues in non-increasing order.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub eigenvectors: CMatrix,
}

impl EigenPair {
    /// `V diag(f(d)) Vᴴ`, symmetrized.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let v = &self.eigenvectors;
        let n = v.dim();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&d| f(d)).collect();
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for (l, &m) in mapped.iter().enumerate() {
                    acc += v[(i, l)] * v[(j, l)].conj() * m;
                }
                out[(i, j)] = acc;
            }
        }
        for i in 0..n {
            out[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                out[(j, i)] = out[(i, j)].conj();
            }
        }
        HermitianMatrix(out)
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.spectral_map(|d| d)
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of `a_pq` and then applies the real
/// symmetric Jacobi rotation, so the accumulated transform is unitary.
/// Eigenvalues are sorted non-increasing, and each eigenvector column is scaled
/// so its largest-magnitude component is real and positive.
pub fn eigh(h: &HermitianMatrix) -> Result<EigenPair> {
    let n = h.dim();
    let mut a = h.as_matrix().clone();
    let mut v = CMatrix::identity(n);
    let tol = JACOBI_TOLERANCE * a.frobenius_norm();

    let mut converged = off_diagonal_norm(&a) <= tol;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off_diagonal_norm(&a) <= tol;
    }
    if !converged {
        return Err(Error::EigenNoConvergence {
            sweeps,
            residual: off_diagonal_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let mut lead = 0;
        let mut lead_abs = -1.0;
        for r in 0..n {
            let m = v[(r, src)].norm();
            if m > lead_abs {
                lead_abs = m;
                lead = r;
            }
        }
        let phase = v[(lead, src)].conj() / lead_abs;
        for r in 0..n {
            vectors[(r, col)] = v[(r, src)] * phase;
        }
        vectors[(lead, col)] = Complex64::new(lead_abs, 0.0);
    }
    Ok(EigenPair {
        eigenvalues,
        eigenvectors: vectors,
    })
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let g = a[(p, q)];
    let g_abs = g.norm();
    if g_abs == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g_abs);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let unphase = (g / g_abs).conj();

    // J = diag(1, e^{-iφ}) · [[c, s], [-s, c]] restricted to the (p, q) plane.
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = unphase * (-s);
    let jqq = unphase * c;

    let n = a.dim();
    for k in 0..n {
        let x = a[(k, p)];
        let y = a[(k, q)];
        a[(k, p)] = x * jpp + y * jqp;
        a[(k, q)] = x * jpq + y * jqq;
    }
    for k in 0..n {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = jpp.conj() * x + jqp.conj() * y;
        a[(q, k)] = jpq.conj() * x + jqq.conj() * y;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    for k in 0..n {
        let x = v[(k, p)];
        let y = v[(k, q)];
        v[(k, p)] = x * jpp + y * jqp;
        v[(k, q)] = x * jpq + y * jqq;
    }
}

/// Lower-triangular Cholesky factor `L` with `H = L Lᴴ`.
pub fn cholesky(h: &HermitianMatrix) -> Result<CMatrix> {
    let n = h.dim();
    let a = h.as_matrix();
    let mut l = CMatrix::zeros(n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// `ln det H` for Hermitian positive definite `H`, via Cholesky.
pub fn logdet_hpd(h: &HermitianMatrix) -> Result<f64> {
    let l = cholesky(h)?;
    Ok((0..h.dim()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// `H⁻¹` for Hermitian positive definite `H`, via Cholesky.
pub fn inverse_hpd(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let n = h.dim();
    let l = cholesky(h)?;
    // Solve L Y = I column by column, then H⁻¹ = Yᴴ Y.
    let mut y = CMatrix::zeros(n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { ONE } else { ZERO };
            for k in col..i {
                s -= l[(i, k)] * y[(k, col)];
            }
            y[(i, col)] = s / l[(i, i)].re;
        }
    }
    Ok(symmetrize(&y.adjoint().matmul(&y)))
}
