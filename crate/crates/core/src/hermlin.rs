//! Dense complex Hermitian linear algebra.
//!
//! Everything here works on small row-major matrices (k ≤ ~64). The
//! eigensolver is a cyclic complex Jacobi iteration, which is slow for big
//! inputs but very accurate for the block sizes produced by lifting problems.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::LinalgError;

pub const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

const JACOBI_MAX_SWEEPS: usize = 60;
const JACOBI_REL_TOL: f64 = 1e-13;

/// Default θ-grid for [`numerical_radius`].
pub const RADIUS_GRID: usize = 720;
/// Default golden-section tolerance for [`numerical_radius`].
pub const RADIUS_REFINE_TOL: f64 = 1e-9;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C1;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major data. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn scalar(z: Complex64) -> Self {
        Self::from_vec(1, 1, vec![z])
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Real part of the Hilbert–Schmidt inner product tr(self† other).
    pub fn inner_re(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.data[i * self.cols + l];
                if a == C0 {
                    continue;
                }
                let row = &rhs.data[l * rhs.cols..(l + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        let mut out = Self::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == C0 {
                    continue;
                }
                for p in 0..rhs.rows {
                    for q in 0..rhs.cols {
                        out[(i * rhs.rows + p, j * rhs.cols + q)] = a * rhs[(p, q)];
                    }
                }
            }
        }
        out
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Adds `b` into the block at (r0, c0).
    pub fn add_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] += b[(i, j)];
            }
        }
    }

    /// ‖self − self†‖ measured entrywise (max abs).
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| (a - b).norm() <= tol)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-1.0)
    }
}

/// Hermitian matrix. Construction symmetrises, so `M = M†` holds exactly.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ComplexMatrix", try_from = "ComplexMatrix")]
pub struct HermitianMatrix(ComplexMatrix);

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian{:?}", self.0)
    }
}

impl From<HermitianMatrix> for ComplexMatrix {
    fn from(h: HermitianMatrix) -> Self {
        h.0
    }
}

impl TryFrom<ComplexMatrix> for HermitianMatrix {
    type Error = LinalgError;
    fn try_from(m: ComplexMatrix) -> Result<Self, LinalgError> {
        HermitianMatrix::new(m)
    }
}

impl HermitianMatrix {
    /// Symmetrises `(M + M†)/2`. Fails only for non-square or non-finite input.
    pub fn new(m: ComplexMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() || m.rows == 0 {
            return Err(LinalgError::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        if !m.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self::symmetrised(m))
    }

    /// Symmetrises without validation; the caller guarantees a square finite matrix.
    pub fn symmetrised_from(m: ComplexMatrix) -> Self {
        Self::symmetrised(m)
    }

    /// Symmetrises without validation; for internally generated data.
    pub(crate) fn symmetrised(mut m: ComplexMatrix) -> Self {
        let n = m.rows;
        for i in 0..n {
            let d = m[(i, i)].re;
            m[(i, i)] = Complex64::new(d, 0.0);
            for j in (i + 1)..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        Self(ComplexMatrix::diag_real(d))
    }

    pub fn real_scalar(x: f64) -> Self {
        Self(ComplexMatrix::scalar(Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    /// `self + s·I`.
    pub fn shift(&self, s: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.rows {
            m[(i, i)].re += s;
        }
        Self(m)
    }

    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }

    /// `B† self B`, Hermitian again.
    pub fn congruence(&self, b: &ComplexMatrix) -> Self {
        Self::symmetrised(b.adjoint().matmul(&self.0).matmul(b))
    }
}

/// Orthonormal (trace inner product) real basis of the `k×k` Hermitian matrices:
/// `E_ii`, then `(E_ij + E_ji)/√2` and `i(E_ij − E_ji)/√2` for `i < j`.
pub fn hermitian_basis(k: usize) -> Vec<HermitianMatrix> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        let mut m = ComplexMatrix::zeros(k, k);
        m[(i, i)] = C1;
        out.push(HermitianMatrix(m));
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let mut m = ComplexMatrix::zeros(k, k);
            m[(i, j)] = Complex64::new(r, 0.0);
            m[(j, i)] = Complex64::new(r, 0.0);
            out.push(HermitianMatrix(m));
            let mut m = ComplexMatrix::zeros(k, k);
            m[(i, j)] = Complex64::new(0.0, r);
            m[(j, i)] = Complex64::new(0.0, -r);
            out.push(HermitianMatrix(m));
        }
    }
    out
}

/// Coordinates of `h` in [`hermitian_basis`].
pub fn hermitian_coords(h: &HermitianMatrix) -> Vec<f64> {
    let k = h.dim();
    let m = h.as_matrix();
    let s = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        out.push(m[(i, i)].re);
    }
    for i in 0..k {
        for j in (i + 1)..k {
            out.push(s * m[(i, j)].re);
            out.push(s * m[(i, j)].im);
        }
    }
    out
}

/// Inverse of [`hermitian_coords`].
pub fn hermitian_from_coords(k: usize, c: &[f64]) -> HermitianMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = ComplexMatrix::zeros(k, k);
    let mut t = 0;
    for i in 0..k {
        m[(i, i)] = Complex64::new(c[t], 0.0);
        t += 1;
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let z = Complex64::new(r * c[t], r * c[t + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            t += 2;
        }
    }
    HermitianMatrix(m)
}

/// Eigendecomposition `M = V diag(λ) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// Rebuilds `Σ f(λ_i) v_i v_i†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = C0;
                for (l, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        acc += v[(i, l)] * v[(j, l)].conj() * w;
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
        HermitianMatrix::symmetrised(out)
    }

    pub fn column(&self, l: usize) -> Vec<Complex64> {
        (0..self.vectors.rows()).map(|i| self.vectors[(i, l)]).collect()
    }
}

/// Cyclic complex Jacobi eigensolver.
pub fn eigh(m: &HermitianMatrix) -> Result<Eigh, LinalgError> {
    let n = m.dim();
    let mut a = m.0.clone();
    let mut v = ComplexMatrix::identity(n);
    let total = a.frobenius_norm();
    if !total.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let target = JACOBI_REL_TOL * total;

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut converged = n <= 1 || total == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
            });
        }
        let off = off_norm(&a);
        if off <= target {
            converged = true;
            continue;
        }
        // Threshold: skip tiny pivots in early sweeps.
        let threshold = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 || mag < threshold {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Negligible relative to both diagonal entries after a few sweeps.
                if sweep > 3 && mag < 1e-18 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = C0;
                    a[(q, p)] = C0;
                    continue;
                }
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = [[c, s·e^{iφ}], [-s, c·e^{iφ}]]-style unitary on (p, q):
                // columns p, q of G.
                let g_pp = Complex64::new(c, 0.0);
                let g_qp = -phase.conj() * s;
                let g_pq = Complex64::new(s, 0.0);
                let g_qq = phase.conj() * c;
                // A ← A G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                // A ← G† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = C0;
                a[(q, p)] = C0;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                // V ← V G
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
        sweep += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(Eigh { values, vectors })
}

pub fn eigvalsh(m: &HermitianMatrix) -> Result<Vec<f64>, LinalgError> {
    Ok(eigh(m)?.values)
}

pub fn min_eig(m: &HermitianMatrix) -> Result<f64, LinalgError> {
    Ok(eigh(m)?.values[0])
}

pub fn max_eig(m: &HermitianMatrix) -> Result<f64, LinalgError> {
    Ok(*eigh(m)?.values.last().expect("dim ≥ 1"))
}

/// Nearest PSD matrix in Frobenius norm.
pub fn psd_project(m: &HermitianMatrix) -> Result<HermitianMatrix, LinalgError> {
    Ok(eigh(m)?.reconstruct_with(|l| l.max(0.0)))
}

/// Largest singular value.
pub fn op_norm(a: &ComplexMatrix) -> Result<f64, LinalgError> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    let gram = HermitianMatrix::symmetrised(a.adjoint().matmul(a));
    Ok(max_eig(&gram)?.max(0.0).sqrt())
}

/// `M^{-1/2}`; requires `minEig(M) > floor`.
pub fn inv_sqrt(m: &HermitianMatrix, floor: f64) -> Result<HermitianMatrix, LinalgError> {
    let e = eigh(m)?;
    let lo = e.values[0];
    if lo <= floor {
        return Err(LinalgError::NotStronglyPositive { min_eig: lo, floor });
    }
    Ok(e.reconstruct_with(|l| 1.0 / l.sqrt()))
}

/// `λ_max((e^{iθ}A + e^{-iθ}A†)/2)`.
pub fn real_part_max_eig(a: &ComplexMatrix, theta: f64) -> Result<f64, LinalgError> {
    let z = Complex64::from_polar(1.0, theta);
    let rot = a.scale_c(z);
    let re = HermitianMatrix::symmetrised(rot);
    max_eig(&re)
}

/// Numerical radius `max_θ λ_max(Re(e^{iθ}A))`, grid sweep then golden-section.
pub fn numerical_radius(a: &ComplexMatrix, grid: usize, refine_tol: f64) -> Result<f64, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() == 0 || a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let grid = grid.max(3);
    let step = std::f64::consts::TAU / grid as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..grid {
        let th = i as f64 * step;
        let val = real_part_max_eig(a, th)?;
        if val > best.0 {
            best = (val, th);
        }
    }
    // Golden-section on the bracket around the best grid point.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = real_part_max_eig(a, x1)?;
    let mut f2 = real_part_max_eig(a, x2)?;
    let mut value = best.0.max(f1).max(f2);
    while hi - lo > refine_tol {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = real_part_max_eig(a, x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = real_part_max_eig(a, x2)?;
        }
        value = value.max(f1).max(f2);
    }
    Ok(value)
}

/// [`numerical_radius`] with the default grid and tolerance.
pub fn numerical_radius_default(a: &ComplexMatrix) -> Result<f64, LinalgError> {
    numerical_radius(a, RADIUS_GRID, RADIUS_REFINE_TOL)
}
