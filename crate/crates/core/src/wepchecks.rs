//! Two-unitary decompositions of `S_2 ⊗ M_k` elements and the numerical
//! radius as a linear matrix inequality.
//!
//! `w(M) ≤ t` iff `[[tI+Z, M], [M†, tI−Z]] ⪰ 0` for some Hermitian `Z`; the
//! best margin of that block over `Z` is exactly `t − w(M)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LinalgError, Result};
use crate::hermlin::{hermitian_basis, hermitian_from_coords, op_norm, ComplexMatrix, HermitianMatrix};
use crate::mincone::s2_min_search;
use crate::opsys::TensorElement;
use crate::sdpfeas::{solve_max_margin, AffinePsdProblem, FeasResult, SolveOptions};

/// Decision margin used by [`th_st_agreement`].
pub const AGREEMENT_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Decomposition {
    Found {
        b: HermitianMatrix,
        c: HermitianMatrix,
        z1: HermitianMatrix,
        z2: HermitianMatrix,
        margin: f64,
    },
    NotFound(FeasResult),
}

impl Decomposition {
    pub fn is_found(&self) -> bool {
        matches!(self, Decomposition::Found { .. })
    }
}

fn check_square(m: &ComplexMatrix, k: usize) -> Result<()> {
    if !m.is_square() || m.rows() != k {
        return Err(Error::Linalg(LinalgError::DimensionMismatch {
            expected: k,
            actual: m.rows(),
        }));
    }
    Ok(())
}

/// `[[p, q], [q†, r]]`
fn two_by_two(p: &ComplexMatrix, q: &ComplexMatrix, r: &ComplexMatrix) -> HermitianMatrix {
    let k = p.rows();
    let mut m = ComplexMatrix::zeros(2 * k, 2 * k);
    m.set_block(0, 0, p);
    m.set_block(0, k, q);
    m.set_block(k, 0, &q.adjoint());
    m.set_block(k, k, r);
    HermitianMatrix::symmetrised_from(m)
}

/// The engine problem for `B + C = 2A_0` and
/// `[[B±Z_1, 2A_1], [2A_1†, B∓Z_1]]`, `[[C±Z_2, 2A_2], [2A_2†, C∓Z_2]]` positive.
/// Variables: `B − A_0`, `Z_1`, `Z_2` in Hermitian coordinates.
pub fn th_st_problem(a0: &HermitianMatrix, a1: &ComplexMatrix, a2: &ComplexMatrix) -> AffinePsdProblem {
    let k = a0.dim();
    let d = k * k;
    let basis = hermitian_basis(k);
    let zero = ComplexMatrix::zeros(k, k);
    let mut p = AffinePsdProblem::new(3 * d);
    let b1 = p.push_block(two_by_two(a0.as_matrix(), &a1.scale(2.0), a0.as_matrix()));
    let b2 = p.push_block(two_by_two(a0.as_matrix(), &a2.scale(2.0), a0.as_matrix()));
    for (l, e) in basis.iter().enumerate() {
        let e = e.as_matrix();
        let plus = two_by_two(e, &zero, e);
        let split = two_by_two(e, &zero, &e.scale(-1.0));
        p.add_coeff(b1, l, &plus);
        p.add_coeff(b2, l, &plus.scale(-1.0));
        p.add_coeff(b1, d + l, &split);
        p.add_coeff(b2, 2 * d + l, &split);
    }
    p
}

/// Searches `B, C ≻ 0` with `(B+C)/2 = A_0`, `w(B^{-1/2}A_1B^{-1/2}) < 1/2`
/// and `w(C^{-1/2}A_2C^{-1/2}) < 1/2`. Found iff the best block margin
/// exceeds `strict_tol·(1 + ‖A_0‖)`.
pub fn th_st_decompose(
    a0: &HermitianMatrix,
    a1: &ComplexMatrix,
    a2: &ComplexMatrix,
    opts: &SolveOptions,
) -> Result<Decomposition> {
    let k = a0.dim();
    check_square(a1, k)?;
    check_square(a2, k)?;
    let p = th_st_problem(a0, a1, a2);
    let r = solve_max_margin(&p, opts)?;
    let delta = opts.strict_tol * (1.0 + op_norm(a0.as_matrix())?);
    if r.margin <= delta {
        return Ok(Decomposition::NotFound(r));
    }
    let d = k * k;
    let v = &r.point;
    let shift = hermitian_from_coords(k, &v[..d]);
    Ok(Decomposition::Found {
        b: a0.add(&shift),
        c: a0.sub(&shift),
        z1: hermitian_from_coords(k, &v[d..2 * d]),
        z2: hermitian_from_coords(k, &v[2 * d..]),
        margin: r.margin,
    })
}

/// The Z-dilation problem for `w(M) < bound`.
pub fn w_radius_problem(m: &ComplexMatrix, bound: f64) -> Result<AffinePsdProblem> {
    if !m.is_square() {
        return Err(Error::Linalg(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        }));
    }
    let k = m.rows();
    let id = ComplexMatrix::identity(k).scale(bound);
    let zero = ComplexMatrix::zeros(k, k);
    let mut p = AffinePsdProblem::new(k * k);
    let b = p.push_block(two_by_two(&id, m, &id));
    for (l, e) in hermitian_basis(k).iter().enumerate() {
        p.add_coeff(b, l, &two_by_two(e.as_matrix(), &zero, &e.as_matrix().scale(-1.0)));
    }
    Ok(p)
}

/// Engine result for the dilation at `bound`; its margin is `bound − w(M)`
/// at optimality.
pub fn w_radius_solve(m: &ComplexMatrix, bound: f64, opts: &SolveOptions) -> Result<FeasResult> {
    solve_max_margin(&w_radius_problem(m, bound)?, opts)
}

/// True iff the dilation has a certified positive margin, i.e. `w(M) < bound`.
pub fn w_radius_lmi(m: &ComplexMatrix, bound: f64, opts: &SolveOptions) -> Result<bool> {
    Ok(w_radius_solve(m, bound, opts)?.margin > 0.0)
}

/// Locates `w(M)` by bisection on the sign of the dilation margin.
///
/// Every solve at `t` certifies `w ≤ t − margin`, and `w ≥ t − upper` when
/// the dual bound is certified, so the bracket is updated from both rather
/// than from the sign alone. Returns the midpoint once narrower than `tol`.
pub fn w_radius_bisect(m: &ComplexMatrix, tol: f64, opts: &SolveOptions) -> Result<f64> {
    let norm = op_norm(m)?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    let opts = SolveOptions {
        gap_tol: opts.gap_tol.min(0.1 * tol / (1.0 + norm)),
        ..*opts
    };
    let (mut lo, mut hi) = (0.5 * norm, norm);
    for _ in 0..100 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let r = w_radius_solve(m, mid, &opts)?;
        let width = hi - lo;
        hi = hi.min(mid - r.margin);
        if r.upper_certified {
            lo = lo.max(mid - r.upper_bound);
        } else if r.margin <= 0.0 {
            lo = lo.max(mid.min(hi));
        }
        if lo > hi {
            // crossed within rounding
            let c = 0.5 * (lo + hi);
            lo = c;
            hi = c;
        }
        if hi - lo >= width {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementRow {
    pub trial: usize,
    pub k: usize,
    /// Best eigenvalue found by the unitary search (`< −1e-7` is a violation).
    pub min_value: f64,
    pub violation: bool,
    /// Certified decomposition margin and its upper bound.
    pub decomposition_margin: f64,
    pub decomposition_upper: f64,
    pub found: bool,
    pub contradiction: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementReport {
    pub rows: Vec<AgreementRow>,
    pub agreements: usize,
    pub contradictions: usize,
    /// Rows whose two decision margins both exceed [`AGREEMENT_MARGIN`].
    pub decisive: usize,
}

fn gaussian(rng: &mut ChaCha8Rng, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(k, k, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Compares the unitary search on `I⊗I + Σ (A_i⊗u_i + A_i†⊗u_i*)` against
/// the decomposition with `A_0 = I`.
///
/// Positivity of that element is equivalent to `I = B' + C'` with
/// `B' + zA_1 + z̄A_1† ⪰ 0` on the circle, i.e. to the decomposition of
/// `(I, 2A_1, 2A_2)` in the normalisation of [`th_st_decompose`].
pub fn th_st_agreement(k: usize, trials: usize, seed: u64, opts: &SolveOptions) -> Result<AgreementReport> {
    let mut rows = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let g1 = gaussian(&mut rng, k);
        let g2 = gaussian(&mut rng, k);
        let total = op_norm(&g1)? + op_norm(&g2)?;
        let s: f64 = rng.random_range(0.15..0.85) / total;
        let (a1, a2) = (g1.scale(s), g2.scale(s));
        let x = TensorElement::sn_hermitian(&HermitianMatrix::identity(k), &[a1.clone(), a2.clone()])?;
        let search = s2_min_search(&x, k.max(2) + 2, 8, seed.wrapping_add(t as u64))?;
        let id = HermitianMatrix::identity(k);
        let p = th_st_problem(&id, &a1.scale(2.0), &a2.scale(2.0));
        let r = solve_max_margin(&p, opts)?;
        let found = r.margin > opts.strict_tol * 2.0;
        let violation = search.is_violation();
        let min_value = search.value();
        let contradiction = (violation && min_value < -AGREEMENT_MARGIN && r.margin > AGREEMENT_MARGIN)
            || (!violation && min_value > AGREEMENT_MARGIN && r.upper_certified && r.upper_bound < -AGREEMENT_MARGIN);
        rows.push(AgreementRow {
            trial: t,
            k,
            min_value,
            violation,
            decomposition_margin: r.margin,
            decomposition_upper: r.upper_bound,
            found,
            contradiction,
        });
    }
    let decisive = rows
        .iter()
        .filter(|r| r.min_value.abs() > AGREEMENT_MARGIN && r.decomposition_margin.abs() > AGREEMENT_MARGIN)
        .count();
    let agreements = rows.iter().filter(|r| r.found != r.violation).count();
    let contradictions = rows.iter().filter(|r| r.contradiction).count();
    Ok(AgreementReport {
        rows,
        agreements,
        contradictions,
        decisive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> ComplexMatrix {
        ComplexMatrix::scalar(Complex64::new(x, 0.0))
    }

    #[test]
    fn scalar_decompositions() {
        let opts = SolveOptions::default();
        let one = HermitianMatrix::identity(1);
        let d = th_st_decompose(&one, &s(0.2), &s(0.2), &opts).unwrap();
        let Decomposition::Found { b, c, margin, .. } = d else { panic!() };
        assert!((b.as_matrix()[(0, 0)].re + c.as_matrix()[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!((margin - 0.6).abs() < 1e-6, "{margin}");
        assert!(!th_st_decompose(&one, &s(0.6), &s(0.6), &opts).unwrap().is_found());
        let d = th_st_decompose(&one, &s(0.0), &s(0.0), &opts).unwrap();
        let Decomposition::Found { b, z1, .. } = d else { panic!() };
        assert!((b.as_matrix()[(0, 0)].re - 1.0).abs() < 1e-6);
        assert!(z1.as_matrix()[(0, 0)].norm() < 1e-6);
    }

    #[test]
    fn nilpotent_radius() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let opts = SolveOptions::default();
        assert!(w_radius_lmi(&m, 0.51, &opts).unwrap());
        assert!(!w_radius_lmi(&m, 0.49, &opts).unwrap());
        let w = w_radius_bisect(&m, 1e-10, &opts).unwrap();
        assert!((w - 0.5).abs() < 1e-9, "{w}");
    }
}
