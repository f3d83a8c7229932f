//! Explicit quotient maps onto `NC(n)` and `S_n`, their kernels, and the affine
//! lifting problems they induce.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermlin::{hermitian_basis, min_eig, ComplexMatrix, HermitianMatrix};
use crate::opsys::{kernel_basis, trace_zero_diagonals, KernelName, KernelSubspace, SystemId, SystemKind, TensorElement};
use crate::riesz::{scheme_point_to_x, scheme_problem, SubalgebraSpec};
use crate::sdpfeas::AffinePsdProblem;

/// Largest deviation from self-adjointness accepted for a lifting target.
pub const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapName {
    /// `T_{n+1} → S_n`
    Phi,
    /// `S_n → NC(n)`
    Psi,
    /// `ψ∘φ : T_{n+1} → NC(n)`
    Rho,
    /// `R_{n+1} → S_n`
    Gamma,
    /// `ψ∘γ : R_{n+1} → NC(n)`
    PsiGamma,
    /// `C^{2n} → NC(n)` with kernel `J_n`
    Theta,
    /// `C^{2n} → NC(n)` with kernel `Q_n`
    ThetaQ,
    /// `M_{n+1} → W_n`
    Beta,
    /// `C² → C^{2n}`, onto slot pair `m` (1-based), representatives modulo `J_n`.
    CoproductIota(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientMapId {
    pub name: MapName,
    pub n: usize,
}

/// A linear map with rational entries `entries / denom`, row-major over
/// codomain × domain coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerMap {
    pub denom: i64,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<i64>,
}

impl IntegerMap {
    fn zeros(denom: i64, rows: usize, cols: usize) -> Self {
        Self {
            denom,
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    fn set(&mut self, r: usize, c: usize, v: i64) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.entries[r * self.cols + c]
    }

    /// Numerator of the image of an integer vector; exact.
    pub fn apply_numerator(&self, v: &[i64]) -> Vec<i64> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    /// `self ∘ inner`
    fn compose(&self, inner: &Self) -> Self {
        let mut out = Self::zeros(self.denom * inner.denom, self.rows, inner.cols);
        for r in 0..self.rows {
            for c in 0..inner.cols {
                let v = (0..self.cols).map(|t| self.get(r, t) * inner.get(t, c)).sum();
                out.set(r, c, v);
            }
        }
        out
    }
}

impl QuotientMapId {
    pub fn new(name: MapName, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidElement("map parameter n must be positive".into()));
        }
        if let MapName::CoproductIota(m) = name {
            if m == 0 || m > n {
                return Err(Error::IndexOutOfRange { index: m, max: n });
            }
        }
        Ok(Self { name, n })
    }

    pub fn domain(&self) -> SystemId {
        let n = self.n;
        match self.name {
            MapName::Phi | MapName::Rho => SystemId::tridiag(n),
            MapName::Psi => SystemId::sn(n),
            MapName::Gamma | MapName::PsiGamma => SystemId::arrow(n),
            MapName::Theta | MapName::ThetaQ => SystemId::cube(n),
            MapName::Beta => SystemId::matrix(n),
            MapName::CoproductIota(_) => SystemId::c2(),
        }
    }

    pub fn codomain(&self) -> SystemId {
        let n = self.n;
        match self.name {
            MapName::Phi | MapName::Gamma => SystemId::sn(n),
            MapName::Psi | MapName::Rho | MapName::PsiGamma | MapName::Theta | MapName::ThetaQ => SystemId::nc(n),
            MapName::Beta => SystemId::wn(n),
            MapName::CoproductIota(_) => SystemId::cube(n),
        }
    }

    /// The map as an integer matrix over a common denominator.
    pub fn integer_form(&self) -> IntegerMap {
        let n = self.n;
        let dom = self.domain();
        let cod = self.codomain();
        let (rows, cols) = (cod.coord_len(), dom.coord_len());
        let np1 = (n + 1) as i64;
        match self.name {
            MapName::Phi => {
                let mut m = IntegerMap::zeros(np1, rows, cols);
                for i in 0..=n {
                    m.set(0, dom.mat(i, i), 1);
                }
                for i in 0..n {
                    m.set(cod.u(i + 1), dom.mat(i, i + 1), 1);
                    m.set(cod.u_star(i + 1), dom.mat(i + 1, i), 1);
                }
                m
            }
            MapName::Psi => {
                let mut m = IntegerMap::zeros(1, rows, cols);
                m.set(0, 0, 1);
                for i in 1..=n {
                    m.set(i, dom.u(i), 1);
                    m.set(i, dom.u_star(i), 1);
                }
                m
            }
            MapName::Rho => {
                let psi = Self { name: MapName::Psi, n }.integer_form();
                psi.compose(&Self { name: MapName::Phi, n }.integer_form())
            }
            MapName::Gamma => {
                let mut m = IntegerMap::zeros(np1, rows, cols);
                for j in 0..=n {
                    m.set(0, dom.mat(j, j), 1);
                }
                for j in 1..=n {
                    m.set(cod.u_star(j), dom.mat(0, j), 1);
                    m.set(cod.u(j), dom.mat(j, 0), 1);
                }
                m
            }
            MapName::PsiGamma => {
                let psi = Self { name: MapName::Psi, n }.integer_form();
                psi.compose(&Self { name: MapName::Gamma, n }.integer_form())
            }
            MapName::Theta => {
                // e_{2k−1} ↦ (1 + h_k)/(2n), e_{2k} ↦ (1 − h_k)/(2n)
                let mut m = IntegerMap::zeros(2 * n as i64, rows, cols);
                for k in 1..=n {
                    m.set(0, 2 * k - 2, 1);
                    m.set(0, 2 * k - 1, 1);
                    m.set(k, 2 * k - 2, 1);
                    m.set(k, 2 * k - 1, -1);
                }
                m
            }
            MapName::ThetaQ => {
                // pair k carries weight c_k = w_k / 2^{n−1}, w_1 = 1, w_k = 2^{k−2};
                // the kernel is then exactly Q_n and the map is unital
                let mut m = IntegerMap::zeros(1i64 << n, rows, cols);
                for k in 1..=n {
                    let w = if k == 1 { 1 } else { 1i64 << (k - 2) };
                    m.set(0, 2 * k - 2, w);
                    m.set(0, 2 * k - 1, w);
                    m.set(k, 2 * k - 2, w);
                    m.set(k, 2 * k - 1, -w);
                }
                m
            }
            MapName::Beta => {
                let mut m = IntegerMap::zeros(np1, rows, cols);
                for i in 0..=n {
                    for j in 0..=n {
                        m.set(cod.w(i, j), dom.mat(i, j), 1);
                    }
                }
                m
            }
            MapName::CoproductIota(slot) => {
                let mut m = IntegerMap::zeros(1, rows, cols);
                m.set(2 * slot - 2, 0, n as i64);
                m.set(2 * slot - 1, 1, n as i64);
                m
            }
        }
    }
}

/// Applies the map blockwise to the `M_k` coefficients.
pub fn apply_map(id: QuotientMapId, x: &TensorElement) -> Result<TensorElement> {
    if x.system != id.domain() {
        return Err(Error::SystemMismatch {
            expected: format!("{:?}", id.domain()),
            actual: format!("{:?}", x.system),
        });
    }
    x.validate()?;
    let f = id.integer_form();
    let mut out = TensorElement::zeros(id.codomain(), x.k);
    let denom = f.denom as f64;
    for r in 0..f.rows {
        let mut acc = ComplexMatrix::zeros(x.k, x.k);
        for c in 0..f.cols {
            let e = f.get(r, c);
            if e != 0 {
                acc = &acc + &x.coeffs[c].scale(e as f64);
            }
        }
        for z in acc.data_mut() {
            *z /= denom;
        }
        out.coeffs[r] = acc;
    }
    Ok(out)
}

/// Kernel of a map, as an explicit integer basis.
pub fn kernel_of(id: QuotientMapId) -> Result<KernelSubspace> {
    let n = id.n;
    Ok(match id.name {
        MapName::Phi => KernelSubspace {
            ambient: SystemId::tridiag(n),
            basis: trace_zero_diagonals(SystemId::tridiag(n)),
        },
        MapName::Gamma => KernelSubspace {
            ambient: SystemId::arrow(n),
            basis: trace_zero_diagonals(SystemId::arrow(n)),
        },
        MapName::Psi => kernel_basis(KernelName::Sn0, n)?,
        MapName::Rho => kernel_basis(KernelName::Kn1, n)?,
        MapName::PsiGamma => kernel_basis(KernelName::Ln1, n)?,
        MapName::Theta => kernel_basis(KernelName::Jn, n)?,
        MapName::ThetaQ => kernel_basis(KernelName::Qn, n)?,
        MapName::Beta => kernel_basis(KernelName::D0, n)?,
        MapName::CoproductIota(_) => {
            return Err(Error::Unsupported("the coproduct inclusions are injective".into()))
        }
    })
}

/// Representative `n·s` in slot pair `m` of `C^{2n}`.
pub fn coproduct_embed(m: usize, n: usize, s: &TensorElement) -> Result<TensorElement> {
    apply_map(QuotientMapId::new(MapName::CoproductIota(m), n)?, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Route {
    Tridiag,
    Arrow,
    Diagonal,
    Qn,
}

impl Route {
    pub const ALL: [Route; 4] = [Route::Tridiag, Route::Arrow, Route::Diagonal, Route::Qn];

    pub fn map(&self, n: usize) -> QuotientMapId {
        let name = match self {
            Route::Tridiag => MapName::Rho,
            Route::Arrow => MapName::PsiGamma,
            Route::Diagonal => MapName::Theta,
            Route::Qn => MapName::ThetaQ,
        };
        QuotientMapId { name, n }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Tridiag => "tridiag",
            Route::Arrow => "arrow",
            Route::Diagonal => "diagonal",
            Route::Qn => "qn",
        }
    }
}

impl std::str::FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "tridiag" => Route::Tridiag,
            "arrow" => Route::Arrow,
            "diagonal" => Route::Diagonal,
            "qn" => Route::Qn,
            other => return Err(Error::Unsupported(format!("unknown route {other}"))),
        })
    }
}

/// An affine family of liftings of an `NC(n)` element through one quotient map.
///
/// The problem's margin times `problem.unit_scale` is the margin of the
/// corresponding lift, which equals the strong-positivity margin it certifies
/// for the target.
#[derive(Debug, Clone)]
pub struct Lifting {
    pub route: Route,
    pub map: QuotientMapId,
    pub target: TensorElement,
    pub problem: AffinePsdProblem,
}

impl Lifting {
    /// The lifted element encoded by an engine point; `map(lift) = target`.
    pub fn lift(&self, v: &[f64]) -> Result<TensorElement> {
        let n = self.map.n;
        let k = self.target.k;
        match self.route {
            Route::Tridiag | Route::Arrow => {
                let big = self.problem.blocks[0].evaluate(v).scale((n + 1) as f64);
                TensorElement::from_block_matrix(self.map.domain(), k, big.as_matrix())
            }
            Route::Qn => TensorElement::cube(&self.problem.evaluate(v)),
            Route::Diagonal => {
                // engine order: s1−Σx, s2−Σx, x_i−b_i…, x_i…
                let blocks = self.problem.evaluate(v);
                let m = n - 1;
                let mut ys = vec![blocks[0].clone(), blocks[1].clone()];
                for i in 0..m {
                    ys.push(blocks[2 + i].clone());
                    ys.push(blocks[2 + m + i].clone());
                }
                TensorElement::cube(&ys)
            }
        }
    }
}

/// Smallest eigenvalue of a lift: of the block matrix for matrix systems, of
/// the blocks for `C^{2n}`.
pub fn lift_margin(y: &TensorElement) -> Result<f64> {
    if y.system.is_matrix_system() {
        return Ok(min_eig(&HermitianMatrix::new(y.to_block_matrix()?)?)?);
    }
    match y.system.kind {
        SystemKind::Cube2n | SystemKind::CoproductC2 => {
            let mut worst = f64::INFINITY;
            for c in &y.coeffs {
                worst = worst.min(min_eig(&HermitianMatrix::new(c.clone())?)?);
            }
            Ok(worst)
        }
        other => Err(Error::Unsupported(format!("no lift margin for {other:?}"))),
    }
}

fn check_target(target: &TensorElement) -> Result<(HermitianMatrix, Vec<HermitianMatrix>)> {
    target.validate()?;
    let parts = target.nc_parts()?;
    let defect = target.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::InvalidElement(format!(
            "target is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(parts)
}

/// Affine family of liftings of `target` along `route`.
pub fn lift_parameterisation(route: Route, target: &TensorElement) -> Result<Lifting> {
    let (a0, a) = check_target(target)?;
    let n = a.len();
    let k = a0.dim();
    let problem = match route {
        Route::Tridiag | Route::Arrow => matrix_lifting(route, &a0, &a),
        Route::Diagonal => {
            let (s1, s2, b) = diagonal_scheme_data(&a0, &a);
            scheme_problem(&s1, &s2, &b, &SubalgebraSpec::full(k))
        }
        Route::Qn => qn_problem(&a0, &a),
    };
    Ok(Lifting {
        route,
        map: route.map(n),
        target: target.clone(),
        problem,
    })
}

/// The lifting problem through `C^{2n}/Q_n`.
pub fn qn_route(target: &TensorElement) -> Result<Lifting> {
    lift_parameterisation(Route::Qn, target)
}

/// Scheme data `(s1, s2, b)` of the diagonal route:
/// `s1 = n(A0 + A1 − Σ_{i≥2} A_i)`, `s2 = n(A0 − A1 − Σ_{i≥2} A_i)`, `b_i = −2n A_{i+1}`.
pub fn diagonal_scheme_data(
    a0: &HermitianMatrix,
    a: &[HermitianMatrix],
) -> (HermitianMatrix, HermitianMatrix, Vec<HermitianMatrix>) {
    let n = a.len();
    let nf = n as f64;
    let k = a0.dim();
    let rest = a[1..].iter().fold(HermitianMatrix::zeros(k), |acc, x| acc.add(x));
    let base = a0.sub(&rest);
    let s1 = base.add(&a[0]).scale(nf);
    let s2 = base.sub(&a[0]).scale(nf);
    let b = a[1..].iter().map(|x| x.scale(-2.0 * nf)).collect();
    (s1, s2, b)
}

fn matrix_lifting(route: Route, a0: &HermitianMatrix, a: &[HermitianMatrix]) -> AffinePsdProblem {
    let n = a.len();
    let k = a0.dim();
    let size = (n + 1) * k;
    let basis = hermitian_basis(k);
    let d = basis.len();
    let partner = |i: usize| -> (usize, usize) {
        // block position of X_{i+1}
        match route {
            Route::Tridiag => (i, i + 1),
            _ => (0, i + 1),
        }
    };

    let mut c = ComplexMatrix::zeros(size, size);
    c.set_block(n * k, n * k, a0.as_matrix());
    for (i, ai) in a.iter().enumerate() {
        let (r, s) = partner(i);
        let half = ai.as_matrix().scale(0.5);
        c.set_block(r * k, s * k, &half);
        c.set_block(s * k, r * k, &half);
    }
    let mut p = AffinePsdProblem::new(2 * n * d);
    p.unit_scale = (n + 1) as f64;
    let blk = p.push_block(HermitianMatrix::symmetrised_from(c));

    // B_1..B_n free, B_{n+1} = A0 − Σ B_i
    for i in 0..n {
        for (l, e) in basis.iter().enumerate() {
            let mut f = ComplexMatrix::zeros(size, size);
            f.set_block(i * k, i * k, e.as_matrix());
            f.set_block(n * k, n * k, &e.as_matrix().scale(-1.0));
            p.add_coeff(blk, i * d + l, &HermitianMatrix::symmetrised_from(f));
        }
    }
    // X_i = A_i/2 + iH_i
    let iu = Complex64::new(0.0, 1.0);
    for i in 0..n {
        let (r, s) = partner(i);
        for (l, e) in basis.iter().enumerate() {
            let ie = e.as_matrix().scale_c(iu);
            let mut f = ComplexMatrix::zeros(size, size);
            f.set_block(r * k, s * k, &ie);
            f.set_block(s * k, r * k, &ie.adjoint());
            p.add_coeff(blk, n * d + i * d + l, &HermitianMatrix::symmetrised_from(f));
        }
    }
    p
}

fn qn_problem(a0: &HermitianMatrix, a: &[HermitianMatrix]) -> AffinePsdProblem {
    let n = a.len();
    let k = a0.dim();
    let basis = hermitian_basis(k);
    let d = basis.len();
    let q = kernel_basis(KernelName::Qn, n).expect("n ≥ 1");
    let scale = (1u64 << (n - 1)) as f64;
    let mut p = AffinePsdProblem::new((n - 1) * d);
    for (i, ai) in a.iter().enumerate() {
        // representative A0 ± A_k / c_k
        let w = if i == 0 { 1.0 } else { (1u64 << (i - 1)) as f64 };
        let inv_c = scale / w;
        p.push_block(a0.add(&ai.scale(inv_c)));
        p.push_block(a0.sub(&ai.scale(inv_c)));
    }
    for (j, qj) in q.basis.iter().enumerate() {
        for (t, &coef) in qj.iter().enumerate() {
            if coef == 0 {
                continue;
            }
            for (l, e) in basis.iter().enumerate() {
                p.add_coeff(t, j * d + l, &e.scale(coef as f64));
            }
        }
    }
    p
}

/// Riesz variables `x_i` of a diagonal-route point.
pub fn diagonal_route_x(lifting: &Lifting, v: &[f64]) -> Vec<HermitianMatrix> {
    let k = lifting.target.k;
    scheme_point_to_x(&SubalgebraSpec::full(k), lifting.map.n - 1, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_examples() {
        let id = QuotientMapId::new(MapName::Rho, 2).unwrap();
        let t = SystemId::tridiag(2);
        let mut v = vec![0.0; 9];
        v[t.mat(0, 0)] = 1.0;
        let y = apply_map(id, &TensorElement::from_real(t, &v).unwrap()).unwrap();
        assert!((y.coeffs[0][(0, 0)].re - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(y.coeffs[1][(0, 0)].re, 0.0);

        let mut v = vec![0.0; 9];
        v[t.mat(0, 1)] = 1.0;
        let y = apply_map(id, &TensorElement::from_real(t, &v).unwrap()).unwrap();
        assert!((y.coeffs[1][(0, 0)].re - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(y.coeffs[0][(0, 0)].re, 0.0);
    }

    #[test]
    fn theta_examples() {
        let id = QuotientMapId::new(MapName::Theta, 3).unwrap();
        let mut v = vec![0.0; 6];
        v[0] = 1.0;
        let y = apply_map(id, &TensorElement::from_real(SystemId::cube(3), &v).unwrap()).unwrap();
        let c: Vec<f64> = y.coeffs.iter().map(|m| m[(0, 0)].re).collect();
        assert!((c[0] - 1.0 / 6.0).abs() < 1e-15 && (c[1] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(&c[2..], &[0.0, 0.0]);

        let y = apply_map(id, &TensorElement::from_real(SystemId::cube(3), &[1.0; 6]).unwrap()).unwrap();
        let c: Vec<f64> = y.coeffs.iter().map(|m| m[(0, 0)].re).collect();
        assert_eq!(c, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn wrong_domain_rejected() {
        let id = QuotientMapId::new(MapName::Theta, 2).unwrap();
        let x = TensorElement::nc_scalar(1.0, &[0.0, 0.0]).unwrap();
        assert!(matches!(apply_map(id, &x), Err(Error::SystemMismatch { .. })));
    }
}
