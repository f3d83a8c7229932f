//! Offline replay of result certificates.
//!
//! Every number is recomputed from the recorded inputs with dense
//! eigenvalue computations; no optimisation is rerun. Problems behind dual
//! certificates are rebuilt from the recorded data.

use ncube_core::hermlin::{
    inv_sqrt, min_eig, numerical_radius_default, op_norm, ComplexMatrix, HermitianMatrix,
};
use ncube_core::opsys::{SystemKind, TensorElement};
use ncube_core::quotientmaps::{apply_map, lift_parameterisation, Route};
use ncube_core::riesz::{interpolation_problem, scheme_problem};
use ncube_core::sdpfeas::AffinePsdProblem;
use ncube_core::wepchecks::th_st_problem;

use crate::commands::parse_algebra;
use crate::error::{CliError, Result};
use crate::json::{fmt_f64, hermitian_from_json, square_from_json, DataFile, ElementFile, MatrixJson};
use crate::result::{Certificate, ResultFile, Status};

/// Relative agreement required between recorded and recomputed values.
pub const REPLAY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Replay {
    pub lines: Vec<String>,
    pub confirmed: bool,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REPLAY_TOL * (1.0 + a.abs().max(b.abs()))
}

fn smallest(m: ComplexMatrix) -> Result<f64> {
    Ok(min_eig(&HermitianMatrix::symmetrised_from(m))?)
}

/// `[[p, q], [q†, r]]`
fn two_by_two(p: &ComplexMatrix, q: &ComplexMatrix, r: &ComplexMatrix) -> ComplexMatrix {
    let k = p.rows();
    let mut m = ComplexMatrix::zeros(2 * k, 2 * k);
    m.set_block(0, 0, p);
    m.set_block(0, k, q);
    m.set_block(k, 0, &q.adjoint());
    m.set_block(k, k, r);
    m
}

/// Least eigenvalue of `A_0⊗I + Σ A_i⊗R_i` for `NC(n)`, or
/// `A_0⊗I + Σ (A_{u_i}⊗U_i + A_{u_i*}⊗U_i†)` for `S_n`.
pub fn pencil_value(x: &TensorElement, reps: &[ComplexMatrix]) -> Result<f64> {
    let n = x.system.n;
    if reps.len() != n {
        return Err(CliError::Invalid(format!("expected {n} representation matrices, got {}", reps.len())));
    }
    let d = reps[0].rows();
    let mut m = x.coeffs[0].kron(&ComplexMatrix::identity(d));
    for (i, r) in reps.iter().enumerate() {
        match x.system.kind {
            SystemKind::NC => m = &m + &x.coeffs[i + 1].kron(r),
            SystemKind::Sn => {
                m = &m + &x.coeffs[x.system.u(i + 1)].kron(r);
                m = &m + &x.coeffs[x.system.u_star(i + 1)].kron(&r.adjoint());
            }
            other => return Err(CliError::Invalid(format!("no pencil for {other:?}"))),
        }
    }
    smallest(m)
}

struct Ctx<'a> {
    result: &'a ResultFile,
    lines: Vec<String>,
    ok: bool,
}

impl Ctx<'_> {
    fn report(&mut self, ok: bool, text: String) {
        self.lines.push(format!("{} {text}", if ok { "ok  " } else { "FAIL" }));
        self.ok &= ok;
    }

    fn element(&self) -> Result<TensorElement> {
        self.result
            .element
            .as_ref()
            .ok_or_else(|| CliError::Invalid("result has no element".into()))?
            .to_element()
    }

    fn data(&self) -> Result<&DataFile> {
        self.result.data.as_ref().ok_or_else(|| CliError::Invalid("result has no data".into()))
    }

    fn algebra(&self, k: usize) -> Result<Option<ncube_core::riesz::SubalgebraSpec>> {
        self.result.algebra.as_deref().map(|a| parse_algebra(a, k)).transpose()
    }
}

fn hermitian_all(list: &[MatrixJson], name: &str) -> Result<Vec<HermitianMatrix>> {
    DataFile::hermitian_list(list, name)
}

/// Rebuilds the engine problem a dual certificate refers to, with its unit scale.
fn dual_problem(ctx: &Ctx, problem: &str) -> Result<(AffinePsdProblem, f64)> {
    if let Ok(route) = problem.parse::<Route>() {
        let p = lift_parameterisation(route, &ctx.element()?)?.problem;
        let s = p.unit_scale;
        return Ok((p, s));
    }
    let data = ctx.data()?;
    let k = data.common_size()?;
    let p = match problem {
        "th-st" => {
            let a0 = hermitian_from_json(data.a0.as_ref().ok_or_else(|| CliError::Invalid("missing a0".into()))?, "a0")?;
            let [a1, a2] = data.a.as_slice() else {
                return Err(CliError::Invalid("expected a = [a1, a2]".into()));
            };
            th_st_problem(&a0, &square_from_json(a1, "a[0]")?, &square_from_json(a2, "a[1]")?)
        }
        "riesz" => {
            let a = hermitian_all(&data.a, "a")?;
            if a.len() != 2 {
                return Err(CliError::Invalid("expected a = [a1, a2]".into()));
            }
            let alg = ctx.algebra(k)?.ok_or_else(|| CliError::Invalid("missing algebra".into()))?;
            scheme_problem(&a[0], &a[1], &hermitian_all(&data.b, "b")?, &alg)
        }
        "tr-interpolate" => {
            let alg = ctx.algebra(k)?.ok_or_else(|| CliError::Invalid("missing algebra".into()))?;
            interpolation_problem(&hermitian_all(&data.a, "a")?, &hermitian_all(&data.b, "b")?, &alg)
        }
        other => return Err(CliError::Invalid(format!("unknown dual problem {other:?}"))),
    };
    Ok((p, 1.0))
}

/// Replays a dual certificate; returns the bound it proves.
fn replay_dual(ctx: &mut Ctx, problem: &str, upper: f64, blocks: &[MatrixJson]) -> Result<f64> {
    let (p, scale) = dual_problem(ctx, problem)?;
    if blocks.len() != p.blocks.len() {
        return Err(CliError::Invalid(format!(
            "dual certificate has {} blocks, problem has {}",
            blocks.len(),
            p.blocks.len()
        )));
    }
    let w = hermitian_all(blocks, "dual block")?;
    let mut trace = 0.0;
    let mut worst_eig: f64 = 0.0;
    let mut value = 0.0;
    for (wb, b) in w.iter().zip(&p.blocks) {
        if wb.dim() != b.size() {
            return Err(CliError::Invalid("dual block size mismatch".into()));
        }
        trace += wb.trace_re();
        worst_eig = worst_eig.min(min_eig(wb)?);
        value += wb.as_matrix().inner_re(b.constant.as_matrix());
    }
    let mut residual: f64 = 0.0;
    for v in 0..p.free_dim {
        let (mut s, mut size) = (0.0, 0.0);
        for (wb, b) in w.iter().zip(&p.blocks) {
            if let Some(f) = &b.coeffs[v] {
                s += wb.as_matrix().inner_re(f.as_matrix());
                size += wb.as_matrix().frobenius_norm() * f.as_matrix().frobenius_norm();
            }
        }
        residual = residual.max(s.abs() / (1.0 + size));
    }
    let bound = if trace > 0.0 { value / trace * scale } else { f64::INFINITY };
    let psd = worst_eig >= -REPLAY_TOL * trace.max(1.0);
    let annihilates = residual <= 1e-8;
    let ok = psd && annihilates && close(bound, upper);
    ctx.report(
        ok,
        format!(
            "dual {problem}: bound {} (recorded {}), least eigenvalue {}, linear residual {}",
            fmt_f64(bound),
            fmt_f64(upper),
            fmt_f64(worst_eig),
            fmt_f64(residual)
        ),
    );
    Ok(if ok { bound } else { f64::INFINITY })
}

fn replay_lift(ctx: &mut Ctx, route: &str, margin: f64, lift: &ElementFile) -> Result<f64> {
    let route: Route = route.parse()?;
    let target = ctx.element()?;
    let y = lift.to_element()?;
    let least = if y.system.is_matrix_system() {
        smallest(y.to_block_matrix()?)?
    } else {
        let mut worst = f64::INFINITY;
        for c in &y.coeffs {
            worst = worst.min(smallest(c.clone())?);
        }
        worst
    };
    let image = apply_map(route.map(target.system.n), &y)?;
    let size = target.coeffs.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    let mismatch = image
        .coeffs
        .iter()
        .zip(&target.coeffs)
        .map(|(a, b)| (a - b).max_abs())
        .fold(0.0, f64::max);
    let ok = close(least, margin) && mismatch <= REPLAY_TOL * (1.0 + size);
    ctx.report(
        ok,
        format!(
            "lift {}: least eigenvalue {} (recorded {}), image mismatch {}",
            route.as_str(),
            fmt_f64(least),
            fmt_f64(margin),
            fmt_f64(mismatch)
        ),
    );
    Ok(if ok { least } else { f64::NEG_INFINITY })
}

fn replay_representation(ctx: &mut Ctx, reps: &str, d: usize, value: f64, mats: &[MatrixJson]) -> Result<f64> {
    let x = ctx.element()?;
    let mats: Vec<ComplexMatrix> = mats
        .iter()
        .map(|m| square_from_json(m, "representation"))
        .collect::<Result<_>>()?;
    if mats.iter().any(|m| m.rows() != d) {
        return Err(CliError::Invalid(format!("representation matrices must be {d}x{d}")));
    }
    let mut defect: f64 = 0.0;
    for m in &mats {
        match reps {
            "contractions" => {
                defect = defect.max(m.hermitian_defect()).max(op_norm(m)? - 1.0);
            }
            "unitaries" => {
                defect = defect.max((&m.adjoint().matmul(m) - &ComplexMatrix::identity(d)).max_abs());
            }
            other => return Err(CliError::Invalid(format!("unknown representation kind {other:?}"))),
        }
    }
    let least = pencil_value(&x, &mats)?;
    let ok = defect <= REPLAY_TOL && close(least, value);
    ctx.report(
        ok,
        format!(
            "{reps} (d = {d}): least eigenvalue {} (recorded {}), defect {}",
            fmt_f64(least),
            fmt_f64(value),
            fmt_f64(defect)
        ),
    );
    Ok(if ok { least } else { f64::NAN })
}

fn replay_decomposition(ctx: &mut Ctx, margin: f64, parts: [&MatrixJson; 4]) -> Result<f64> {
    let data = ctx.data()?;
    let a0 = hermitian_from_json(data.a0.as_ref().ok_or_else(|| CliError::Invalid("missing a0".into()))?, "a0")?;
    let [a1, a2] = data.a.as_slice() else {
        return Err(CliError::Invalid("expected a = [a1, a2]".into()));
    };
    let (a1, a2) = (square_from_json(a1, "a[0]")?, square_from_json(a2, "a[1]")?);
    let [b, c, z1, z2] = parts.map(|m| hermitian_from_json(m, "decomposition"));
    let (b, c, z1, z2) = (b?, c?, z1?, z2?);
    let positive = min_eig(&b)?.min(min_eig(&c)?);
    let split = (b.add(&c).scale(0.5).as_matrix() - a0.as_matrix()).frobenius_norm();
    let mut least = f64::INFINITY;
    let mut radius: f64 = 0.0;
    for (p, z, a) in [(&b, &z1, &a1), (&c, &z2, &a2)] {
        let (p, z) = (p.as_matrix(), z.as_matrix());
        least = least.min(smallest(two_by_two(&(p + z), &a.scale(2.0), &(p - z)))?);
        if positive > 0.0 {
            let r = inv_sqrt(&HermitianMatrix::symmetrised_from(p.clone()), 0.0)?.into_matrix();
            radius = radius.max(numerical_radius_default(&r.matmul(a).matmul(&r))?);
        }
    }
    let ok = positive > 0.0 && split <= 1e-8 && radius < 0.5 && least >= margin - REPLAY_TOL * (1.0 + margin.abs());
    ctx.report(
        ok,
        format!(
            "decomposition: block margin {} (recorded {}), min(λ(B), λ(C)) {}, split error {}, radius {}",
            fmt_f64(least),
            fmt_f64(margin),
            fmt_f64(positive),
            fmt_f64(split),
            fmt_f64(radius)
        ),
    );
    Ok(if ok { least } else { f64::NEG_INFINITY })
}

/// Least eigenvalue over `tops − y` and `y − bottoms`.
fn separation(tops: &[HermitianMatrix], y: &HermitianMatrix, bottoms: &[HermitianMatrix]) -> Result<f64> {
    let mut least = f64::INFINITY;
    for t in tops {
        least = least.min(min_eig(&t.sub(y))?);
    }
    for b in bottoms {
        least = least.min(min_eig(&y.sub(b))?);
    }
    Ok(least)
}

fn residual_in(ctx: &Ctx, k: usize, xs: &[HermitianMatrix]) -> Result<f64> {
    Ok(match ctx.algebra(k)? {
        Some(alg) => xs
            .iter()
            .map(|x| alg.residual(x) / (1.0 + x.as_matrix().frobenius_norm()))
            .fold(0.0, f64::max),
        None => 0.0,
    })
}

fn replay_scheme(ctx: &mut Ctx, delta: f64, x: &[MatrixJson]) -> Result<f64> {
    let data = ctx.data()?;
    let k = data.common_size()?;
    let a = hermitian_all(&data.a, "a")?;
    let b = hermitian_all(&data.b, "b")?;
    let x = hermitian_all(x, "x")?;
    if a.len() != 2 || x.len() != b.len() {
        return Err(CliError::Invalid("scheme shape does not match the data".into()));
    }
    let sum = x.iter().fold(HermitianMatrix::zeros(k), |s, xi| s.add(xi));
    let mut least = separation(&a, &sum, &[])?;
    for (xi, bi) in x.iter().zip(&b) {
        least = least.min(separation(&[], xi, &[bi.clone(), HermitianMatrix::zeros(k)])?);
    }
    let residual = residual_in(ctx, k, &x)?;
    let ok = least >= delta - REPLAY_TOL * (1.0 + delta.abs()) && residual <= REPLAY_TOL;
    ctx.report(
        ok,
        format!(
            "scheme: least eigenvalue {} (recorded {}), subalgebra residual {}",
            fmt_f64(least),
            fmt_f64(delta),
            fmt_f64(residual)
        ),
    );
    Ok(if ok { least } else { f64::NEG_INFINITY })
}

fn replay_interpolant(ctx: &mut Ctx, margin: f64, y: &MatrixJson) -> Result<f64> {
    let data = ctx.data()?;
    let k = data.common_size()?;
    let a = hermitian_all(&data.a, "a")?;
    let b = hermitian_all(&data.b, "b")?;
    let y = hermitian_from_json(y, "y")?;
    let least = separation(&a, &y, &b)?;
    let residual = residual_in(ctx, k, std::slice::from_ref(&y))?;
    let ok = least >= margin - REPLAY_TOL * (1.0 + margin.abs()) && residual <= REPLAY_TOL;
    ctx.report(
        ok,
        format!(
            "interpolant: least eigenvalue {} (recorded {}), subalgebra residual {}",
            fmt_f64(least),
            fmt_f64(margin),
            fmt_f64(residual)
        ),
    );
    Ok(if ok { least } else { f64::NEG_INFINITY })
}

/// Replays every certificate and checks that together they support the
/// recorded status.
pub fn verify(result: &ResultFile) -> Result<Replay> {
    let mut ctx = Ctx {
        result,
        lines: Vec::new(),
        ok: true,
    };
    // best proven lower bound, best proven upper bound, replayed search value
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut search: Option<f64> = None;
    for cert in &result.certificates {
        match cert {
            Certificate::Lift { route, margin, lift } => lower = lower.max(replay_lift(&mut ctx, route, *margin, lift)?),
            Certificate::Dual {
                problem,
                upper_bound,
                blocks,
            } => upper = upper.min(replay_dual(&mut ctx, problem, *upper_bound, blocks)?),
            Certificate::Representation { reps, d, value, mats } => {
                search = Some(replay_representation(&mut ctx, reps, *d, *value, mats)?)
            }
            Certificate::Decomposition { margin, b, c, z1, z2 } => {
                lower = lower.max(replay_decomposition(&mut ctx, *margin, [b, c, z1, z2])?)
            }
            Certificate::Scheme { delta, x } => lower = lower.max(replay_scheme(&mut ctx, *delta, x)?),
            Certificate::Interpolant { margin, y } => lower = lower.max(replay_interpolant(&mut ctx, *margin, y)?),
        }
    }
    let supported = match result.status {
        Status::Feasible | Status::Found => lower > 0.0,
        Status::Infeasible | Status::NotFound => upper < 0.0,
        Status::Violation => search.is_some_and(|v| v < result.tolerances.violation_tol),
        Status::NoViolationFound => search.is_some_and(|v| v >= result.tolerances.violation_tol),
        Status::Undecided => !result.certificates.is_empty(),
        Status::Contradiction => false,
    };
    ctx.report(supported, format!("status {} supported by the certificates", result.status.as_str()));
    let confirmed = ctx.ok;
    Ok(Replay {
        lines: ctx.lines,
        confirmed,
    })
}
