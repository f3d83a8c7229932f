//! One function per subcommand; each returns the [`ResultFile`] it reports.

use ncube_core::hermlin::HermitianMatrix;
use ncube_core::maxcone::max_membership;
use ncube_core::mincone::{min_violation_search, s2_min_search, MinOutcome, RepKind, VIOLATION_TOL};
use ncube_core::opsys::{is_null_subspace, kernel_basis, KernelName, SystemId, SystemKind};
use ncube_core::quotientmaps::{MapName, QuotientMapId, Route};
use ncube_core::riesz::{solve_scheme, tr_interpolate, InterpolationOutcome, SchemeOutcome, SubalgebraSpec};
use ncube_core::sdpfeas::{FeasResult, FeasStatus, SolveOptions};
use ncube_core::wepchecks::{th_st_decompose, Decomposition};

use crate::error::{CliError, Result};
use crate::json::{matrix_to_json, square_from_json, DataFile, ElementFile};
use crate::result::{Certificate, ResultFile, Status, Tolerances};

pub fn tolerances(opts: &SolveOptions) -> Tolerances {
    Tolerances {
        strict_tol: opts.strict_tol,
        gap_tol: opts.gap_tol,
        violation_tol: VIOLATION_TOL,
    }
}

/// Dual certificate for an engine result, when it carries a certified one.
fn dual_certificate(problem: &str, r: &FeasResult, scale: f64) -> Option<Certificate> {
    let w = r.witness.as_ref().filter(|_| r.upper_certified)?;
    Some(Certificate::Dual {
        problem: problem.into(),
        upper_bound: r.upper_bound * scale,
        blocks: w.iter().map(|b| matrix_to_json(b.as_matrix())).collect(),
    })
}

fn not_found_status(r: &FeasResult) -> Status {
    match r.status {
        FeasStatus::Infeasible => Status::NotFound,
        _ => Status::Undecided,
    }
}

fn engine_bounds(out: &mut ResultFile, r: &FeasResult) {
    out.margin = Some(r.margin);
    out.upper_bound = r.upper_certified.then_some(r.upper_bound);
}

/// Max-cone membership of an `NC(n)` element along the given routes.
///
/// With several routes the result is Feasible if any route produces a
/// positive lift, Infeasible if any route certifies infeasibility, and a
/// Contradiction if both happen.
pub fn check_max(el: &ElementFile, routes: &[Route], opts: &SolveOptions, command: Vec<String>) -> Result<ResultFile> {
    let x = el.to_element()?;
    if x.system.kind != SystemKind::NC {
        return Err(CliError::Invalid(format!("check-max takes an NC element, got {}", el.system)));
    }
    let mut certificates = Vec::new();
    let (mut feasible, mut infeasible) = (false, false);
    let mut margin = f64::NEG_INFINITY;
    let mut upper: Option<f64> = None;
    for &route in routes {
        let o = max_membership(&x, route, opts)?;
        feasible |= o.status == FeasStatus::Feasible;
        infeasible |= o.status == FeasStatus::Infeasible;
        margin = margin.max(o.margin);
        certificates.push(Certificate::Lift {
            route: route.as_str().into(),
            margin: o.margin,
            lift: ElementFile::from_element(&o.lift)?,
        });
        if let Some(d) = dual_certificate(route.as_str(), &o.engine, o.unit_scale) {
            upper = Some(upper.map_or(o.upper_bound, |u| u.min(o.upper_bound)));
            certificates.push(d);
        }
    }
    let status = match (feasible, infeasible) {
        (true, true) => Status::Contradiction,
        (true, false) => Status::Feasible,
        (false, true) => Status::Infeasible,
        (false, false) => Status::Undecided,
    };
    let mut out = ResultFile::new(command, status, opts.seed, tolerances(opts));
    out.margin = Some(margin);
    out.upper_bound = upper;
    out.element = Some(ElementFile::from_element(&x)?);
    out.certificates = certificates;
    Ok(out)
}

/// Adversarial min-cone search: contractions for `NC(n)`, unitaries for `S_n`.
pub fn check_min(
    el: &ElementFile,
    d_max: usize,
    restarts: usize,
    seed: u64,
    opts: &SolveOptions,
    command: Vec<String>,
) -> Result<ResultFile> {
    let x = el.to_element()?;
    if d_max == 0 {
        return Err(CliError::Invalid("--dmax must be at least 1".into()));
    }
    let outcome = match x.system.kind {
        SystemKind::NC => min_violation_search(&x, d_max, restarts, seed)?,
        SystemKind::Sn => s2_min_search(&x, d_max, restarts, seed)?,
        _ => return Err(CliError::Invalid(format!("check-min takes an NC or S2 element, got {}", el.system))),
    };
    let status = match outcome {
        MinOutcome::Violation { .. } => Status::Violation,
        MinOutcome::NoViolationFound { .. } => Status::NoViolationFound,
    };
    let rep = outcome.rep();
    let mut out = ResultFile::new(command, status, seed, tolerances(opts));
    out.margin = Some(outcome.value());
    out.element = Some(ElementFile::from_element(&x)?);
    out.certificates.push(Certificate::Representation {
        reps: match rep.kind {
            RepKind::Contractions => "contractions",
            RepKind::Unitaries => "unitaries",
        }
        .into(),
        d: rep.d,
        value: outcome.value(),
        mats: rep.mats.iter().map(matrix_to_json).collect(),
    });
    Ok(out)
}

/// `full`, `diagonal` or `blocks:s1,s2,…`.
pub fn parse_algebra(spec: &str, k: usize) -> Result<SubalgebraSpec> {
    let alg = match spec {
        "full" => SubalgebraSpec::full(k),
        "diagonal" => SubalgebraSpec::diagonal(k),
        other => {
            let sizes = other
                .strip_prefix("blocks:")
                .ok_or_else(|| CliError::Invalid(format!("unknown algebra {other:?}; expected full, diagonal or blocks:s1,s2,…")))?
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| CliError::Invalid(format!("bad block size {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            SubalgebraSpec::block_diagonal(&sizes)?
        }
    };
    if alg.k != k {
        return Err(CliError::Invalid(format!("algebra acts on size {}, data has size {k}", alg.k)));
    }
    Ok(alg)
}

pub fn riesz_solve(data: &DataFile, algebra: &str, opts: &SolveOptions, command: Vec<String>) -> Result<ResultFile> {
    let k = data.common_size()?;
    if data.a0.is_some() || data.a.len() != 2 {
        return Err(CliError::Invalid("riesz-solve needs a = [a1, a2], b = [b1, …] and no a0".into()));
    }
    let a = DataFile::hermitian_list(&data.a, "a")?;
    let b = DataFile::hermitian_list(&data.b, "b")?;
    let alg = parse_algebra(algebra, k)?;
    let outcome = solve_scheme(&a[0], &a[1], &b, &alg, opts)?;
    let mut out = ResultFile::new(command, Status::Found, opts.seed, tolerances(opts));
    match outcome {
        SchemeOutcome::Found(s) => {
            out.margin = Some(s.delta);
            out.certificates.push(Certificate::Scheme {
                delta: s.delta,
                x: s.x.iter().map(|x| matrix_to_json(x.as_matrix())).collect(),
            });
        }
        SchemeOutcome::NotFound(r) => {
            out.status = not_found_status(&r);
            engine_bounds(&mut out, &r);
            out.certificates.extend(dual_certificate("riesz", &r, 1.0));
        }
    }
    out.data = Some(data.clone());
    out.algebra = Some(algebra.into());
    Ok(out)
}

pub fn tr_interpolate_cmd(data: &DataFile, algebra: &str, opts: &SolveOptions, command: Vec<String>) -> Result<ResultFile> {
    let k = data.common_size()?;
    if data.a0.is_some() || data.a.is_empty() {
        return Err(CliError::Invalid("tr-interpolate needs a = [a1, …], b = [b1, …] and no a0".into()));
    }
    let a = DataFile::hermitian_list(&data.a, "a")?;
    let b = DataFile::hermitian_list(&data.b, "b")?;
    let alg = parse_algebra(algebra, k)?;
    let mut out = ResultFile::new(command, Status::Found, opts.seed, tolerances(opts));
    match tr_interpolate(&a, &b, &alg, opts)? {
        InterpolationOutcome::Found { y, margin } => {
            out.margin = Some(margin);
            out.certificates.push(Certificate::Interpolant {
                margin,
                y: matrix_to_json(y.as_matrix()),
            });
        }
        InterpolationOutcome::NotFound(r) => {
            out.status = not_found_status(&r);
            engine_bounds(&mut out, &r);
            out.certificates.extend(dual_certificate("tr-interpolate", &r, 1.0));
        }
    }
    out.data = Some(data.clone());
    out.algebra = Some(algebra.into());
    Ok(out)
}

pub fn th_st(data: &DataFile, opts: &SolveOptions, command: Vec<String>) -> Result<ResultFile> {
    data.common_size()?;
    let (Some(a0), [a1, a2]) = (&data.a0, data.a.as_slice()) else {
        return Err(CliError::Invalid("th-st needs a0 and a = [a1, a2]".into()));
    };
    let a0 = crate::json::hermitian_from_json(a0, "a0")?;
    let a1 = square_from_json(a1, "a[0]")?;
    let a2 = square_from_json(a2, "a[1]")?;
    let mut out = ResultFile::new(command, Status::Found, opts.seed, tolerances(opts));
    match th_st_decompose(&a0, &a1, &a2, opts)? {
        Decomposition::Found { b, c, z1, z2, margin } => {
            out.margin = Some(margin);
            let j = |h: &HermitianMatrix| matrix_to_json(h.as_matrix());
            out.certificates.push(Certificate::Decomposition {
                margin,
                b: j(&b),
                c: j(&c),
                z1: j(&z1),
                z2: j(&z2),
            });
        }
        Decomposition::NotFound(r) => {
            out.status = not_found_status(&r);
            engine_bounds(&mut out, &r);
            out.certificates.extend(dual_certificate("th-st", &r, 1.0));
        }
    }
    out.data = Some(data.clone());
    Ok(out)
}

fn ambient_name(s: SystemId) -> String {
    let n = s.n;
    match s.kind {
        SystemKind::Cube2n => format!("C^{}", 2 * n),
        SystemKind::Tridiag => format!("T_{}", n + 1),
        SystemKind::Arrow => format!("R_{}", n + 1),
        SystemKind::Matrix => format!("M_{}", n + 1),
        other => format!("{other:?}({n})"),
    }
}

fn format_vector(s: SystemId, v: &[i64]) -> String {
    let mut out = String::new();
    for (i, &c) in v.iter().enumerate().filter(|(_, &c)| c != 0) {
        let sign = if c < 0 { "-" } else { "+" };
        if out.is_empty() {
            if c < 0 {
                out.push('-');
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        if c.abs() != 1 {
            out.push_str(&format!("{}·", c.abs()));
        }
        out.push_str(&s.label(i));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Text listing of the kernels for `n`, and whether every one is
/// annihilated exactly and null.
pub fn kernels(n: usize) -> Result<(String, bool)> {
    if n == 0 {
        return Err(CliError::Invalid("--n must be positive".into()));
    }
    let table = [
        (format!("J_{n}"), KernelName::Jn, MapName::Theta),
        (format!("Q_{n}"), KernelName::Qn, MapName::ThetaQ),
        (format!("K_{}", n + 1), KernelName::Kn1, MapName::Rho),
        (format!("L_{}", n + 1), KernelName::Ln1, MapName::PsiGamma),
        (format!("D0_{}", n + 1), KernelName::D0, MapName::Beta),
    ];
    let mut text = String::new();
    let mut all_good = true;
    for (label, name, map) in table {
        let j = kernel_basis(name, n)?;
        let int = QuotientMapId::new(map, n)?.integer_form();
        let annihilated = j.basis.iter().all(|v| int.apply_numerator(v).iter().all(|&x| x == 0));
        let verdict = is_null_subspace(&j)?;
        all_good &= annihilated && verdict.null;
        text.push_str(&format!(
            "{label} in {}: dim {}, rank {}\n",
            ambient_name(j.ambient),
            j.dim(),
            j.rank()
        ));
        for v in &j.basis {
            text.push_str(&format!("  {}\n", format_vector(j.ambient, v)));
        }
        text.push_str(&format!("  annihilated by {map:?}: {annihilated}\n"));
        text.push_str(&format!("  null: {} (margin {})\n", verdict.null, crate::json::fmt_f64(verdict.margin)));
    }
    Ok((text, all_good))
}
