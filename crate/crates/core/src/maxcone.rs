//! Membership in the max tensor cone of `NC(n) ⊗ M_k`, decided by lifting
//! through one of the quotient maps onto `NC(n)`.
//!
//! Margins reported here are in `NC(n)` units: the margin of the lifted
//! element, so the unit of `NC(n) ⊗ M_k` has margin 1 on every route.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hermlin::{min_eig, op_norm, ComplexMatrix, HermitianMatrix};
use crate::opsys::{SystemId, TensorElement};
use crate::quotientmaps::{apply_map, lift_parameterisation, MapName, QuotientMapId, Route};
use crate::sdpfeas::{solve_max_margin, FeasResult, FeasStatus, SolveOptions};

/// Smallest eigenvalue targeted by [`random_max_positive`].
pub const RANDOM_LIFT_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxOutcome {
    pub route: Route,
    pub status: FeasStatus,
    /// Certified margin of the best lift found, in `NC(n)` units.
    pub margin: f64,
    /// Upper bound on the strong-positivity margin, in `NC(n)` units.
    pub upper_bound: f64,
    /// The lift at `margin`; a certificate when `status` is `Feasible`.
    pub lift: TensorElement,
    pub engine: FeasResult,
    /// Factor from engine units to `NC(n)` units.
    pub unit_scale: f64,
}

/// Decides strong max-positivity of `x` along one route.
pub fn max_membership(x: &TensorElement, route: Route, opts: &SolveOptions) -> Result<MaxOutcome> {
    let lifting = lift_parameterisation(route, x)?;
    let engine = solve_max_margin(&lifting.problem, opts)?;
    let s = lifting.problem.unit_scale;
    let lift = lifting.lift(&engine.point)?;
    Ok(MaxOutcome {
        route,
        status: engine.status,
        margin: engine.margin * s,
        upper_bound: engine.upper_bound * s,
        lift,
        engine,
        unit_scale: s,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteReport {
    pub outcomes: Vec<MaxOutcome>,
    /// Some route is Feasible beyond the threshold while another is
    /// Infeasible beyond it.
    pub disagreement: bool,
    pub defects: Vec<String>,
}

impl RouteReport {
    pub fn all_feasible(&self) -> bool {
        self.outcomes.iter().all(|o| o.status == FeasStatus::Feasible)
    }

    pub fn any_feasible(&self) -> bool {
        self.outcomes.iter().any(|o| o.status == FeasStatus::Feasible)
    }

    pub fn outcome(&self, route: Route) -> Option<&MaxOutcome> {
        self.outcomes.iter().find(|o| o.route == route)
    }
}

/// Runs all four routes and flags contradictions beyond `10·strict_tol`.
pub fn cross_validate_routes(x: &TensorElement, opts: &SolveOptions) -> Result<RouteReport> {
    let outcomes = Route::ALL
        .iter()
        .map(|&r| max_membership(x, r, opts))
        .collect::<Result<Vec<_>>>()?;
    let thr = 10.0 * opts.strict_tol;
    let mut defects = Vec::new();
    for a in &outcomes {
        if !(a.status == FeasStatus::Feasible && a.margin > thr) {
            continue;
        }
        for b in &outcomes {
            if b.status == FeasStatus::Infeasible && b.upper_bound < -thr {
                defects.push(format!(
                    "{} feasible at {:.3e} but {} infeasible below {:.3e}",
                    a.route.as_str(),
                    a.margin,
                    b.route.as_str(),
                    b.upper_bound
                ));
            }
        }
    }
    Ok(RouteReport {
        disagreement: !defects.is_empty(),
        outcomes,
        defects,
    })
}

/// A strongly max-positive element of `NC(n) ⊗ M_k` with a known lifting.
#[derive(Debug, Clone)]
pub struct RandomPositive {
    pub element: TensorElement,
    /// Block-tridiagonal preimage under `ρ ⊗ id` with `λ_min ≥ 0.1`.
    pub lift: TensorElement,
}

/// Pushes a random positive definite block-tridiagonal matrix forward
/// through `ρ ⊗ id`.
pub fn random_max_positive(n: usize, k: usize, seed: u64) -> Result<RandomPositive> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = (n + 1) * k;
    let mut m = ComplexMatrix::zeros(size, size);
    for bi in 0..=n {
        for bj in bi..=(bi + 1).min(n) {
            for r in 0..k {
                for c in 0..k {
                    let (i, j) = (bi * k + r, bj * k + c);
                    if i > j {
                        continue;
                    }
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = if i == j { 0.0 } else { rng.sample(StandardNormal) };
                    let z = Complex64::new(re, im);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
        }
    }
    let h = HermitianMatrix::new(m)?;
    let shift = (RANDOM_LIFT_FLOOR - min_eig(&h)?).max(0.0);
    let h = h.shift(shift);
    let lift = TensorElement::from_block_matrix(SystemId::tridiag(n), k, h.as_matrix())?;
    let mut element = apply_map(QuotientMapId::new(MapName::Rho, n)?, &lift)?;
    element.symmetrise();
    Ok(RandomPositive { element, lift })
}

fn gaussian_hermitian(rng: &mut ChaCha8Rng, k: usize) -> HermitianMatrix {
    let mut m = ComplexMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if i == j { 0.0 } else { rng.sample(StandardNormal) };
            m[(i, j)] = Complex64::new(re, im);
            m[(j, i)] = Complex64::new(re, -im);
        }
    }
    HermitianMatrix::symmetrised_from(m)
}

/// Random Hermitian `NC(n) ⊗ M_k` element with margin spread around zero:
/// `A_0 = I + 0.25·G_0/‖G_0‖`, and `Σ‖A_i‖ = t` with `t` uniform on `[0.4, 1.6]`.
pub fn random_nc_element(n: usize, k: usize, seed: u64) -> Result<TensorElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g0 = gaussian_hermitian(&mut rng, k);
    let a0 = g0.scale(0.25 / op_norm(g0.as_matrix())?.max(1e-12)).shift(1.0);
    let gs: Vec<HermitianMatrix> = (0..n).map(|_| gaussian_hermitian(&mut rng, k)).collect();
    let total: f64 = gs.iter().map(|g| op_norm(g.as_matrix())).sum::<std::result::Result<f64, _>>()?;
    let t: f64 = rng.random_range(0.4..1.6);
    let a: Vec<HermitianMatrix> = gs.iter().map(|g| g.scale(t / total.max(1e-12))).collect();
    TensorElement::nc(&a0, &a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_has_margin_one_everywhere() {
        let x = TensorElement::unit(SystemId::nc(3), 1).unwrap();
        let rep = cross_validate_routes(&x, &SolveOptions::default()).unwrap();
        assert!(!rep.disagreement);
        for o in &rep.outcomes {
            assert_eq!(o.status, FeasStatus::Feasible);
            assert!((o.margin - 1.0).abs() < 1e-6, "{:?} {}", o.route, o.margin);
        }
    }

    #[test]
    fn pushforward_of_identity_is_unit() {
        let lift = TensorElement::from_block_matrix(SystemId::tridiag(2), 2, &ComplexMatrix::identity(6)).unwrap();
        let x = apply_map(QuotientMapId::new(MapName::Rho, 2).unwrap(), &lift).unwrap();
        let unit = TensorElement::unit(SystemId::nc(2), 2).unwrap();
        for (a, b) in x.coeffs.iter().zip(&unit.coeffs) {
            assert!(a.approx_eq(b, 1e-15));
        }
    }
}
