//! Catalog of the finite-dimensional operator systems: bases, tensor elements
//! with matrix coefficients, kernel subspaces and level-1 positivity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermlin::{min_eig, ComplexMatrix, HermitianMatrix, C0, C1};
use crate::sdpfeas::{solve_max_margin, AffinePsdProblem, SolveOptions};

/// Uniform strictness threshold for level-1 classification.
pub const LEVEL1_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    /// `span{1, h_1..h_n}`
    NC,
    /// `span{1, u_i, u_i*}`
    Sn,
    /// `span{E_ij : |i−j| ≤ 1}` in `M_{n+1}`
    Tridiag,
    /// `span{E_1j, E_j1, E_jj}` in `M_{n+1}`
    Arrow,
    /// Words in `n` universal unitaries with `u_0 = 1`; coordinate `(i, j)` holds `u_i* u_j`.
    Wn,
    /// `C^{2n}`
    Cube2n,
    /// `C²`
    CoproductC2,
    /// All of `M_{n+1}`.
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemId {
    pub kind: SystemKind,
    pub n: usize,
}

impl SystemId {
    pub fn new(kind: SystemKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidElement("system parameter n must be positive".into()));
        }
        Ok(Self { kind, n })
    }

    pub fn nc(n: usize) -> Self {
        Self { kind: SystemKind::NC, n }
    }
    pub fn sn(n: usize) -> Self {
        Self { kind: SystemKind::Sn, n }
    }
    pub fn tridiag(n: usize) -> Self {
        Self { kind: SystemKind::Tridiag, n }
    }
    pub fn arrow(n: usize) -> Self {
        Self { kind: SystemKind::Arrow, n }
    }
    pub fn wn(n: usize) -> Self {
        Self { kind: SystemKind::Wn, n }
    }
    pub fn cube(n: usize) -> Self {
        Self { kind: SystemKind::Cube2n, n }
    }
    pub fn c2() -> Self {
        Self {
            kind: SystemKind::CoproductC2,
            n: 1,
        }
    }
    pub fn matrix(n: usize) -> Self {
        Self {
            kind: SystemKind::Matrix,
            n,
        }
    }

    /// True for the systems realised inside `M_{n+1}` with coordinates over all `E_ij`.
    pub fn is_matrix_system(&self) -> bool {
        matches!(self.kind, SystemKind::Tridiag | SystemKind::Arrow | SystemKind::Matrix)
    }

    /// Number of coordinates used for elements of this system.
    ///
    /// Matrix systems use all `(n+1)²` entries of the ambient matrix algebra,
    /// with zeros required off the support.
    pub fn coord_len(&self) -> usize {
        let n = self.n;
        match self.kind {
            SystemKind::NC => n + 1,
            SystemKind::Sn => 2 * n + 1,
            SystemKind::Tridiag | SystemKind::Arrow | SystemKind::Matrix => (n + 1) * (n + 1),
            SystemKind::Wn => n * (n + 1) + 1,
            SystemKind::Cube2n => 2 * n,
            SystemKind::CoproductC2 => 2,
        }
    }

    /// Dimension of the system itself.
    pub fn dim(&self) -> usize {
        (0..self.coord_len()).filter(|&i| self.in_support(i)).count()
    }

    pub fn in_support(&self, idx: usize) -> bool {
        if idx >= self.coord_len() {
            return false;
        }
        let m = self.n + 1;
        let (i, j) = (idx / m, idx % m);
        match self.kind {
            SystemKind::Tridiag => i.abs_diff(j) <= 1,
            SystemKind::Arrow => i == 0 || j == 0 || i == j,
            _ => true,
        }
    }

    /// Coordinate of `E_ij` (0-based) in a matrix system.
    pub fn mat(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    /// Coordinate of `u_i` (`1 ≤ i ≤ n`) in `S_n`.
    pub fn u(&self, i: usize) -> usize {
        i
    }

    /// Coordinate of `u_i*` in `S_n`.
    pub fn u_star(&self, i: usize) -> usize {
        self.n + i
    }

    /// Coordinate of `u_i* u_j` in `W_n`; the diagonal words all collapse to the unit.
    pub fn w(&self, i: usize, j: usize) -> usize {
        if i == j {
            return 0;
        }
        // skip the diagonal
        1 + i * self.n + if j > i { j - 1 } else { j }
    }

    /// Coordinate holding the adjoint of coordinate `idx`.
    pub fn adjoint_index(&self, idx: usize) -> usize {
        let n = self.n;
        match self.kind {
            SystemKind::NC | SystemKind::Cube2n | SystemKind::CoproductC2 => idx,
            SystemKind::Sn => {
                if idx == 0 {
                    0
                } else if idx <= n {
                    idx + n
                } else {
                    idx - n
                }
            }
            SystemKind::Tridiag | SystemKind::Arrow | SystemKind::Matrix => {
                let m = n + 1;
                (idx % m) * m + idx / m
            }
            SystemKind::Wn => {
                if idx == 0 {
                    return 0;
                }
                let (i, j) = self.w_pair(idx);
                self.w(j, i)
            }
        }
    }

    /// Inverse of [`SystemId::w`] for non-unit coordinates.
    pub fn w_pair(&self, idx: usize) -> (usize, usize) {
        let r = idx - 1;
        let i = r / self.n;
        let jj = r % self.n;
        let j = if jj >= i { jj + 1 } else { jj };
        (i, j)
    }

    pub fn label(&self, idx: usize) -> String {
        let n = self.n;
        match self.kind {
            SystemKind::NC => {
                if idx == 0 {
                    "1".into()
                } else {
                    format!("h{idx}")
                }
            }
            SystemKind::Sn => {
                if idx == 0 {
                    "1".into()
                } else if idx <= n {
                    format!("u{idx}")
                } else {
                    format!("u{}*", idx - n)
                }
            }
            SystemKind::Tridiag | SystemKind::Arrow | SystemKind::Matrix => {
                let (i, j) = (idx / (n + 1) + 1, idx % (n + 1) + 1);
                if n + 1 > 9 {
                    format!("E{i},{j}")
                } else {
                    format!("E{i}{j}")
                }
            }
            SystemKind::Wn => {
                if idx == 0 {
                    "1".into()
                } else {
                    let (i, j) = self.w_pair(idx);
                    format!("u{i}*u{j}")
                }
            }
            SystemKind::Cube2n | SystemKind::CoproductC2 => format!("e{}", idx + 1),
        }
    }
}

/// Element of `S ⊗ M_k`: one `k×k` coefficient per coordinate of `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorElement {
    pub system: SystemId,
    pub k: usize,
    pub coeffs: Vec<ComplexMatrix>,
}

impl TensorElement {
    pub fn zeros(system: SystemId, k: usize) -> Self {
        Self {
            system,
            k,
            coeffs: vec![ComplexMatrix::zeros(k, k); system.coord_len()],
        }
    }

    pub fn new(system: SystemId, k: usize, coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        let x = Self { system, k, coeffs };
        x.validate()?;
        Ok(x)
    }

    /// `1⊗A_0 + Σ h_i⊗A_i`.
    pub fn nc(a0: &HermitianMatrix, a: &[HermitianMatrix]) -> Result<Self> {
        let k = a0.dim();
        let mut coeffs = vec![a0.as_matrix().clone()];
        coeffs.extend(a.iter().map(|m| m.as_matrix().clone()));
        Self::new(SystemId::new(SystemKind::NC, a.len())?, k, coeffs)
    }

    /// Level-1 NC element `a0·1 + Σ a_i h_i`.
    pub fn nc_scalar(a0: f64, a: &[f64]) -> Result<Self> {
        let a: Vec<HermitianMatrix> = a.iter().map(|&x| HermitianMatrix::real_scalar(x)).collect();
        Self::nc(&HermitianMatrix::real_scalar(a0), &a)
    }

    /// Hermitian `S_n` element `1⊗A_0 + Σ (u_i⊗A_i + u_i*⊗A_i†)`.
    pub fn sn_hermitian(a0: &HermitianMatrix, a: &[ComplexMatrix]) -> Result<Self> {
        let n = a.len();
        let sys = SystemId::new(SystemKind::Sn, n)?;
        let k = a0.dim();
        let mut x = Self::zeros(sys, k);
        x.coeffs[0] = a0.as_matrix().clone();
        for (i, m) in a.iter().enumerate() {
            x.coeffs[sys.u(i + 1)] = m.clone();
            x.coeffs[sys.u_star(i + 1)] = m.adjoint();
        }
        x.validate()?;
        Ok(x)
    }

    /// Element of `C^{2n} ⊗ M_k` from its `2n` blocks.
    pub fn cube(blocks: &[HermitianMatrix]) -> Result<Self> {
        if !blocks.len().is_multiple_of(2) || blocks.is_empty() {
            return Err(Error::InvalidElement(format!(
                "C^(2n) needs an even, positive number of blocks, got {}",
                blocks.len()
            )));
        }
        let k = blocks[0].dim();
        Self::new(
            SystemId::new(SystemKind::Cube2n, blocks.len() / 2)?,
            k,
            blocks.iter().map(|b| b.as_matrix().clone()).collect(),
        )
    }

    /// Level-1 element of a system from real coordinates.
    pub fn from_real(system: SystemId, v: &[f64]) -> Result<Self> {
        Self::new(system, 1, v.iter().map(|&x| ComplexMatrix::scalar(Complex64::new(x, 0.0))).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidElement("k must be positive".into()));
        }
        if self.coeffs.len() != self.system.coord_len() {
            return Err(Error::InvalidElement(format!(
                "expected {} coefficients, got {}",
                self.system.coord_len(),
                self.coeffs.len()
            )));
        }
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.rows() != self.k || c.cols() != self.k {
                return Err(Error::InvalidElement(format!(
                    "coefficient {} is {}×{}, expected {}×{}",
                    self.system.label(i),
                    c.rows(),
                    c.cols(),
                    self.k,
                    self.k
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidElement(format!("coefficient {} is not finite", self.system.label(i))));
            }
            if !self.system.in_support(i) && c.max_abs() != 0.0 {
                return Err(Error::InvalidElement(format!(
                    "coefficient {} lies outside the system",
                    self.system.label(i)
                )));
            }
        }
        Ok(())
    }

    /// Largest deviation from self-adjointness `x = x*`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = self.system.adjoint_index(i);
            let d = (c - &self.coeffs[j].adjoint()).max_abs();
            worst = worst.max(d);
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Replaces every coefficient pair by its self-adjoint average.
    pub fn symmetrise(&mut self) {
        let old = self.coeffs.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            let j = self.system.adjoint_index(i);
            *c = (&old[i] + &old[j].adjoint()).scale(0.5);
        }
    }

    pub fn coeff(&self, idx: usize) -> &ComplexMatrix {
        &self.coeffs[idx]
    }

    /// Coefficient as a Hermitian matrix (NC, cube and C² systems).
    pub fn herm(&self, idx: usize) -> HermitianMatrix {
        HermitianMatrix::symmetrised_from(self.coeffs[idx].clone())
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut x = self.clone();
        for c in &mut x.coeffs {
            *c = c.scale(s);
        }
        x
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut x = self.clone();
        for (c, d) in x.coeffs.iter_mut().zip(&other.coeffs) {
            *c = &*c + d;
        }
        Ok(x)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.system != other.system || self.k != other.k {
            return Err(Error::SystemMismatch {
                expected: format!("{:?} with k={}", self.system, self.k),
                actual: format!("{:?} with k={}", other.system, other.k),
            });
        }
        Ok(())
    }

    /// The unit `1⊗I_k`.
    pub fn unit(system: SystemId, k: usize) -> Result<Self> {
        let mut x = Self::zeros(system, k);
        let id = ComplexMatrix::identity(k);
        match system.kind {
            SystemKind::NC | SystemKind::Sn | SystemKind::Wn => x.coeffs[0] = id,
            SystemKind::Cube2n | SystemKind::CoproductC2 => {
                for c in &mut x.coeffs {
                    *c = id.clone();
                }
            }
            SystemKind::Tridiag | SystemKind::Arrow | SystemKind::Matrix => {
                for i in 0..=system.n {
                    x.coeffs[system.mat(i, i)] = id.clone();
                }
            }
        }
        Ok(x)
    }

    /// `(A_0, [A_1..A_n])` of an NC element.
    pub fn nc_parts(&self) -> Result<(HermitianMatrix, Vec<HermitianMatrix>)> {
        if self.system.kind != SystemKind::NC {
            return Err(Error::SystemMismatch {
                expected: "NC".into(),
                actual: format!("{:?}", self.system.kind),
            });
        }
        Ok((self.herm(0), (1..=self.system.n).map(|i| self.herm(i)).collect()))
    }

    /// For matrix systems: the block matrix `Σ E_ij ⊗ X_ij` of size `(n+1)k`.
    pub fn to_block_matrix(&self) -> Result<ComplexMatrix> {
        if !self.system.is_matrix_system() {
            return Err(Error::Unsupported(format!("{:?} is not a matrix system", self.system.kind)));
        }
        let m = self.system.n + 1;
        let k = self.k;
        let mut out = ComplexMatrix::zeros(m * k, m * k);
        for i in 0..m {
            for j in 0..m {
                out.set_block(i * k, j * k, &self.coeffs[self.system.mat(i, j)]);
            }
        }
        Ok(out)
    }

    /// Inverse of [`TensorElement::to_block_matrix`]; entries off the support must vanish.
    pub fn from_block_matrix(system: SystemId, k: usize, big: &ComplexMatrix) -> Result<Self> {
        let m = system.n + 1;
        if !system.is_matrix_system() || big.rows() != m * k || big.cols() != m * k {
            return Err(Error::InvalidElement("block matrix does not match the system".into()));
        }
        let mut x = Self::zeros(system, k);
        for i in 0..m {
            for j in 0..m {
                x.coeffs[system.mat(i, j)] = big.block(i * k, j * k, k, k);
            }
        }
        x.validate()?;
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelName {
    Jn,
    Qn,
    Kn1,
    Ln1,
    D0,
    Sn0,
}

impl std::str::FromStr for KernelName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Jn" | "J" => Self::Jn,
            "Qn" | "Q" => Self::Qn,
            "Kn1" | "K" => Self::Kn1,
            "Ln1" | "L" => Self::Ln1,
            "D0" => Self::D0,
            "Sn0" => Self::Sn0,
            other => return Err(Error::Unsupported(format!("unknown kernel {other}"))),
        })
    }
}

/// A subspace given by an explicit integer basis over the ambient coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSubspace {
    pub ambient: SystemId,
    pub basis: Vec<Vec<i64>>,
}

impl KernelSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Rank of the basis, computed exactly by fraction-free elimination.
    pub fn rank(&self) -> usize {
        integer_rank(&self.basis)
    }

    /// Basis vector `i` as a level-1 element of the ambient system.
    pub fn element(&self, i: usize) -> TensorElement {
        TensorElement::from_real(self.ambient, &self.basis[i].iter().map(|&x| x as f64).collect::<Vec<_>>())
            .expect("kernel vectors match the ambient system")
    }
}

fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let (a, b) = (m[rank][c], m[r][c]);
                for x in 0..cols {
                    m[r][x] = m[r][x] * a - m[rank][x] * b;
                }
                let g = m[r].iter().fold(0i128, |g, &v| gcd(g, v.abs()));
                if g > 1 {
                    for v in &mut m[r] {
                        *v /= g;
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Explicit integer basis of one of the named kernels.
pub fn kernel_basis(name: KernelName, n: usize) -> Result<KernelSubspace> {
    if n == 0 {
        return Err(Error::InvalidElement("kernel parameter n must be positive".into()));
    }
    let m = n + 1;
    Ok(match name {
        KernelName::Jn => {
            let ambient = SystemId::cube(n);
            let basis = (1..n)
                .map(|i| {
                    let mut v = vec![0; 2 * n];
                    v[0] = 1;
                    v[1] = 1;
                    v[2 * i] = -1;
                    v[2 * i + 1] = -1;
                    v
                })
                .collect();
            KernelSubspace { ambient, basis }
        }
        KernelName::Qn => {
            // (e,−e,0,…), (e,e,−e,0,…), … with e = (1,1)
            let ambient = SystemId::cube(n);
            let basis = (1..n)
                .map(|j| {
                    let mut v = vec![0; 2 * n];
                    for s in 0..j {
                        v[2 * s] = 1;
                        v[2 * s + 1] = 1;
                    }
                    v[2 * j] = -1;
                    v[2 * j + 1] = -1;
                    v
                })
                .collect();
            KernelSubspace { ambient, basis }
        }
        KernelName::Kn1 => {
            let ambient = SystemId::tridiag(n);
            let mut basis = trace_zero_diagonals(ambient);
            for i in 0..n {
                let mut v = vec![0; m * m];
                v[ambient.mat(i, i + 1)] = 1;
                v[ambient.mat(i + 1, i)] = -1;
                basis.push(v);
            }
            KernelSubspace { ambient, basis }
        }
        KernelName::Ln1 => {
            let ambient = SystemId::arrow(n);
            let mut basis = trace_zero_diagonals(ambient);
            for j in 1..m {
                let mut v = vec![0; m * m];
                v[ambient.mat(0, j)] = 1;
                v[ambient.mat(j, 0)] = -1;
                basis.push(v);
            }
            KernelSubspace { ambient, basis }
        }
        KernelName::D0 => {
            let ambient = SystemId::matrix(n);
            KernelSubspace {
                ambient,
                basis: trace_zero_diagonals(ambient),
            }
        }
        KernelName::Sn0 => {
            let ambient = SystemId::sn(n);
            let basis = (1..=n)
                .map(|i| {
                    let mut v = vec![0; 2 * n + 1];
                    v[ambient.u(i)] = 1;
                    v[ambient.u_star(i)] = -1;
                    v
                })
                .collect();
            KernelSubspace { ambient, basis }
        }
    })
}

/// `E_ii − E_{i+1,i+1}` for `i < n`, over the coordinates of a matrix system.
pub fn trace_zero_diagonals(ambient: SystemId) -> Vec<Vec<i64>> {
    let m = ambient.n + 1;
    (0..ambient.n)
        .map(|i| {
            let mut v = vec![0; m * m];
            v[ambient.mat(i, i)] = 1;
            v[ambient.mat(i + 1, i + 1)] = -1;
            v
        })
        .collect()
}

/// Outcome of [`is_null_subspace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullVerdict {
    pub null: bool,
    /// Margin of the best positive definite functional vanishing on the subspace.
    pub margin: f64,
    /// A nonzero positive element of the subspace (ambient coordinates, largest entry 1)
    /// when `null` is false and one could be extracted.
    pub witness: Option<Vec<Complex64>>,
}

/// Decides whether `span(J)` meets the positive cone of the ambient system only in 0.
///
/// By the Gordan alternative this holds exactly when some positive definite
/// functional vanishes on the self-adjoint part of the span, which is a small
/// margin-maximisation problem for the engine.
pub fn is_null_subspace(j: &KernelSubspace) -> Result<NullVerdict> {
    let (size, diagonal) = match j.ambient.kind {
        SystemKind::Cube2n => (2 * j.ambient.n, true),
        SystemKind::Tridiag | SystemKind::Arrow | SystemKind::Matrix => (j.ambient.n + 1, false),
        other => {
            return Err(Error::Unsupported(format!(
                "no computable level-1 cone for {other:?}"
            )))
        }
    };
    let to_matrix = |v: &[f64], im: &[f64]| -> ComplexMatrix {
        if diagonal {
            ComplexMatrix::from_fn(size, size, |a, b| {
                if a == b {
                    Complex64::new(v[a], im[a])
                } else {
                    C0
                }
            })
        } else {
            ComplexMatrix::from_fn(size, size, |a, b| Complex64::new(v[a * size + b], im[a * size + b]))
        }
    };

    // Real coordinates of Hermitian matrices in the ambient space.
    let herm_basis = hermitian_basis(size, diagonal);
    let hd = herm_basis.len();
    let coords = |m: &ComplexMatrix| -> Vec<f64> { herm_basis.iter().map(|b| b.inner_re(m)).collect() };

    // Self-adjoint part of the complex span: real combinations Σ c_j B_j with
    // Σ c_j B_j = (Σ c_j B_j)†.
    let zeros = vec![0.0; size * size];
    let gens: Vec<ComplexMatrix> = j
        .basis
        .iter()
        .map(|v| {
            let re: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            to_matrix(&re, &zeros[..re.len()])
        })
        .collect();
    let self_adjoint = self_adjoint_part(&gens);
    let jh: Vec<Vec<f64>> = self_adjoint.iter().map(&coords).collect();

    // Affine family {Y Hermitian : Y ⊥ J_h, tr Y = 1}.
    let id_coords = coords(&ComplexMatrix::identity(size));
    let mut cons = DMatrix::<f64>::zeros(jh.len() + 1, hd);
    for (r, row) in jh.iter().chain(std::iter::once(&id_coords)).enumerate() {
        for (c, &x) in row.iter().enumerate() {
            cons[(r, c)] = x;
        }
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(jh.len() + 1);
    rhs[jh.len()] = 1.0;
    let svd = cons.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let y0 = svd
        .solve(&rhs, 1e-10 * smax.max(1e-300))
        .map_err(|e| Error::MalformedProblem(e.to_string()))?;
    if (&cons * &y0 - &rhs).norm() > 1e-8 {
        // The identity lies in the span, which is then trivially not null.
        let w = herm_combination(&herm_basis, &id_coords);
        return Ok(NullVerdict {
            null: false,
            margin: f64::NEG_INFINITY,
            witness: Some(normalise_witness(&w, size, diagonal)),
        });
    }
    let free = null_space_rows(&cons, 1e-10);

    let mut p = AffinePsdProblem::new(free.len());
    let y0m = herm_combination(&herm_basis, y0.as_slice());
    p.push_block(y0m.clone());
    for (l, f) in free.iter().enumerate() {
        p.add_coeff(0, l, &herm_combination(&herm_basis, f));
    }
    let res = solve_max_margin(&p, &SolveOptions::default())?;
    if res.is_feasible() {
        return Ok(NullVerdict {
            null: true,
            margin: res.margin,
            witness: None,
        });
    }
    // Dual direction W ∈ J_h + R·I with ⟨W, Y0⟩ ≤ 0: W − ⟨W,Y0⟩·I is a positive element of J_h.
    let witness = res.witness.as_ref().and_then(|w| {
        let w = &w[0];
        let alpha = w.as_matrix().inner_re(y0m.as_matrix());
        let x = w.shift(-alpha);
        let lam = min_eig(&x).ok()?;
        (lam > -1e-8 && x.as_matrix().max_abs() > 1e-9).then(|| normalise_witness(&x, size, diagonal))
    });
    Ok(NullVerdict {
        null: false,
        margin: res.margin,
        witness,
    })
}

fn hermitian_basis(size: usize, diagonal: bool) -> Vec<ComplexMatrix> {
    let mut out = Vec::new();
    for i in 0..size {
        let mut m = ComplexMatrix::zeros(size, size);
        m[(i, i)] = C1;
        out.push(m);
    }
    if diagonal {
        return out;
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..size {
        for j in (i + 1)..size {
            let mut m = ComplexMatrix::zeros(size, size);
            m[(i, j)] = Complex64::new(r, 0.0);
            m[(j, i)] = Complex64::new(r, 0.0);
            out.push(m);
            let mut m = ComplexMatrix::zeros(size, size);
            m[(i, j)] = Complex64::new(0.0, r);
            m[(j, i)] = Complex64::new(0.0, -r);
            out.push(m);
        }
    }
    out
}

fn herm_combination(basis: &[ComplexMatrix], c: &[f64]) -> HermitianMatrix {
    let s = basis[0].rows();
    let mut m = ComplexMatrix::zeros(s, s);
    for (b, &x) in basis.iter().zip(c) {
        if x != 0.0 {
            m = &m + &b.scale(x);
        }
    }
    HermitianMatrix::symmetrised_from(m)
}

/// Real basis of `{X ∈ span_C(gens) : X = X†}`.
fn self_adjoint_part(gens: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    if gens.is_empty() {
        return Vec::new();
    }
    // X = Σ (α_j + iβ_j) B_j; X − X† = 0 is real-linear in (α, β).
    let s = gens[0].rows();
    let g = gens.len();
    let mut a = DMatrix::<f64>::zeros(2 * s * s, 2 * g);
    for (j, b) in gens.iter().enumerate() {
        let anti = b - &b.adjoint();
        let ib = b.scale_c(Complex64::new(0.0, 1.0));
        let anti_i = &ib - &ib.adjoint();
        for (t, (z, w)) in anti.data().iter().zip(anti_i.data()).enumerate() {
            a[(2 * t, j)] = z.re;
            a[(2 * t + 1, j)] = z.im;
            a[(2 * t, g + j)] = w.re;
            a[(2 * t + 1, g + j)] = w.im;
        }
    }
    let sols = null_space_rows(&a, 1e-10);
    let mut out: Vec<ComplexMatrix> = Vec::new();
    let mut span: Vec<Vec<f64>> = Vec::new();
    for c in sols {
        let mut m = ComplexMatrix::zeros(s, s);
        for (j, b) in gens.iter().enumerate() {
            m = &m + &b.scale_c(Complex64::new(c[j], c[g + j]));
        }
        // Different (α, β) can give the same matrix when gens are dependent.
        let v: Vec<f64> = m.data().iter().flat_map(|z| [z.re, z.im]).collect();
        span.push(v);
        out.push(m);
    }
    let rows = span.len();
    if rows == 0 {
        return out;
    }
    let mat = DMatrix::from_fn(rows, span[0].len(), |r, c| span[r][c]);
    let svd = mat.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax.max(1e-300))
        .map(|i| {
            let row = vt.row(i);
            ComplexMatrix::from_fn(s, s, |a, b| Complex64::new(row[2 * (a * s + b)], row[2 * (a * s + b) + 1]))
        })
        .collect()
}

/// Orthonormal basis of the null space of `a`, as vectors.
fn null_space_rows(a: &DMatrix<f64>, rel_tol: f64) -> Vec<Vec<f64>> {
    let cols = a.ncols();
    if a.nrows() == 0 {
        return (0..cols)
            .map(|i| (0..cols).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
    }
    // Pad to at least square so that the SVD returns a full right basis.
    let rows = a.nrows().max(cols);
    let mut padded = DMatrix::<f64>::zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    (0..cols)
        .filter(|&i| svd.singular_values[i] <= rel_tol * smax.max(1e-300) || smax == 0.0)
        .map(|i| vt.row(i).iter().copied().collect())
        .collect()
}

fn normalise_witness(x: &HermitianMatrix, size: usize, diagonal: bool) -> Vec<Complex64> {
    let m = x.as_matrix();
    let scale = m.max_abs();
    let mut out = Vec::new();
    if diagonal {
        for i in 0..size {
            out.push(m[(i, i)] / scale);
        }
    } else {
        out.extend(m.data().iter().map(|z| z / scale));
    }
    for z in &mut out {
        if z.re.abs() < 1e-12 {
            z.re = 0.0;
        }
        if z.im.abs() < 1e-12 {
            z.im = 0.0;
        }
    }
    out
}

/// Level-1 classification of `a0·1 + Σ a_i h_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Level1 {
    StronglyPositive { margin: f64 },
    Boundary { margin: f64 },
    /// Sign tuple `H_i = ±1` at which the value `a0 + Σ a_i H_i` is negative.
    NotPositive { witness: Vec<f64>, value: f64 },
}

pub fn level1_positivity_nc(a0: f64, a: &[f64]) -> Level1 {
    let margin = a0 - a.iter().map(|x| x.abs()).sum::<f64>();
    if margin > LEVEL1_TOL {
        Level1::StronglyPositive { margin }
    } else if margin >= -LEVEL1_TOL {
        Level1::Boundary { margin }
    } else {
        let witness = a.iter().map(|&x| if x >= 0.0 { -1.0 } else { 1.0 }).collect();
        Level1::NotPositive { witness, value: margin }
    }
}

/// Whether the graphs underlying `T_{n+1}` (a path) and `R_{n+1}` (a star)
/// differ in their degree multisets.
pub fn graph_distinguish_tr(n: usize) -> bool {
    let v = n + 1;
    let mut path: Vec<usize> = (0..v).map(|i| usize::from(i > 0) + usize::from(i + 1 < v)).collect();
    let mut star: Vec<usize> = (0..v).map(|i| if i == 0 { n } else { 1 }).collect();
    path.sort_unstable();
    star.sort_unstable();
    path != star
}

/// Pairs a functional `a` on `C^{2n}` (constant pair sums) with a level-1 cube element.
pub fn dual_pairing_check(n: usize, a: &[f64], x: &TensorElement) -> Result<f64> {
    if a.len() != 2 * n {
        return Err(Error::ConstraintViolation(format!(
            "functional has {} entries, expected {}",
            a.len(),
            2 * n
        )));
    }
    if x.system != SystemId::cube(n) || x.k != 1 {
        return Err(Error::SystemMismatch {
            expected: format!("level-1 element of C^{}", 2 * n),
            actual: format!("{:?} with k={}", x.system, x.k),
        });
    }
    let s0 = a[0] + a[1];
    for i in 1..n {
        let s = a[2 * i] + a[2 * i + 1];
        if (s - s0).abs() > 1e-12 {
            return Err(Error::ConstraintViolation(format!(
                "pair sums differ: a1+a2 = {s0}, a{}+a{} = {s}",
                2 * i + 1,
                2 * i + 2
            )));
        }
    }
    Ok(a.iter().zip(&x.coeffs).map(|(&ai, c)| ai * c[(0, 0)].re).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_coordinates_roundtrip() {
        let s = SystemId::wn(3);
        let mut seen = vec![false; s.coord_len()];
        for i in 0..=3 {
            for j in 0..=3 {
                if i != j {
                    let c = s.w(i, j);
                    assert_eq!(s.w_pair(c), (i, j));
                    assert!(!seen[c]);
                    seen[c] = true;
                    assert_eq!(s.adjoint_index(c), s.w(j, i));
                }
            }
        }
        assert_eq!(seen.iter().filter(|&&b| !b).count(), 1);
    }

    #[test]
    fn system_dimensions() {
        assert_eq!(SystemId::tridiag(3).dim(), 10);
        assert_eq!(SystemId::arrow(3).dim(), 10);
        assert_eq!(SystemId::nc(4).dim(), 5);
        assert_eq!(SystemId::sn(2).dim(), 5);
        assert_eq!(SystemId::wn(2).dim(), 7);
    }

    #[test]
    fn integer_rank_detects_dependence() {
        assert_eq!(integer_rank(&[vec![1, 1, 0], vec![2, 2, 0]]), 1);
        assert_eq!(integer_rank(&[vec![1, 1, -1, -1], vec![1, 1, 1, 1]]), 2);
    }

    #[test]
    fn level1_examples() {
        assert!(matches!(level1_positivity_nc(1.0, &[0.5, 0.5]), Level1::Boundary { .. }));
        assert_eq!(
            level1_positivity_nc(2.0, &[0.5, 0.5]),
            Level1::StronglyPositive { margin: 1.0 }
        );
        match level1_positivity_nc(1.0, &[0.6, 0.6]) {
            Level1::NotPositive { witness, value } => {
                assert_eq!(witness, vec![-1.0, -1.0]);
                assert!((value + 0.2).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
