//! Acceptance criteria, one pass/fail line each. Exits non-zero if any fails.
//!
//! Reference values come from oracles written here: integer map formulas,
//! sign enumeration, brute-force graph isomorphism, nalgebra eigenvalues.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use ncube_cli::sweep::{self, Suite, SweepConfig};
use ncube_core::hermlin::{ComplexMatrix, HermitianMatrix};
use ncube_core::maxcone::{max_membership, random_nc_element};
use ncube_core::mincone::{min_violation_search, MinOutcome};
use ncube_core::opsys::{graph_distinguish_tr, is_null_subspace, kernel_basis, KernelName, SystemId, TensorElement};
use ncube_core::quotientmaps::{MapName, QuotientMapId, Route};
use ncube_core::riesz::{random_scheme_data, solve_scheme, SchemeOutcome, SubalgebraSpec};
use ncube_core::sdpfeas::{FeasStatus, SolveOptions};
use ncube_core::wepchecks::{th_st_agreement, th_st_decompose, w_radius_bisect};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn to_na(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn na_min_eig(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn na_max_eig(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// `λ_min(A_0⊗I + Σ A_i⊗R_i)` computed with nalgebra.
fn pencil_oracle(x: &TensorElement, reps: &[ComplexMatrix]) -> f64 {
    let d = reps[0].rows();
    let mut m = kron(&to_na(&x.coeffs[0]), &DMatrix::identity(d, d));
    for (i, r) in reps.iter().enumerate() {
        m += kron(&to_na(&x.coeffs[i + 1]), &to_na(r));
    }
    na_min_eig(&m)
}

/// Minimum of `a0 + Σ ±a_i` over sign tuples.
fn sign_oracle(a0: f64, a: &[f64]) -> f64 {
    (0..1u32 << a.len())
        .map(|mask| {
            a0 + a
                .iter()
                .enumerate()
                .map(|(i, &x)| if mask >> i & 1 == 1 { x } else { -x })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Image coefficients of a kernel vector, from the defining formulas of each
/// map (unit first, then the generators or words), times the common denominator.
fn map_oracle(name: KernelName, n: usize, v: &[i64]) -> Vec<i64> {
    let m = n + 1;
    let e = |i: usize, j: usize| v[i * m + j];
    match name {
        // θ: e_{2k−1} ↦ (1+h_k)/2n, e_{2k} ↦ (1−h_k)/2n
        KernelName::Jn => {
            let mut out = vec![v.iter().sum()];
            out.extend((0..n).map(|k| v[2 * k] - v[2 * k + 1]));
            out
        }
        // ρ: E_ii ↦ 1/(n+1), E_{i,i+1}, E_{i+1,i} ↦ h_{i+1}/(n+1)
        KernelName::Kn1 => {
            let mut out = vec![(0..m).map(|i| e(i, i)).sum()];
            out.extend((0..n).map(|i| e(i, i + 1) + e(i + 1, i)));
            out
        }
        // ψ∘γ: E_ii ↦ 1/(n+1), E_{0,j}, E_{j,0} ↦ h_j/(n+1)
        KernelName::Ln1 => {
            let mut out = vec![(0..m).map(|i| e(i, i)).sum()];
            out.extend((1..m).map(|j| e(0, j) + e(j, 0)));
            out
        }
        // β: E_ij ↦ u_i* u_j/(n+1); distinct words for i ≠ j, the unit for i = j
        KernelName::D0 => {
            let mut out = vec![(0..m).map(|i| e(i, i)).sum()];
            out.extend((0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| e(i, j)));
            out
        }
        other => unreachable!("{other:?}"),
    }
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let table = [
        (KernelName::Kn1, MapName::Rho),
        (KernelName::Ln1, MapName::PsiGamma),
        (KernelName::Jn, MapName::Theta),
        (KernelName::D0, MapName::Beta),
    ];
    let mut vectors = 0;
    for n in 1..=5 {
        for (kernel, map) in table {
            let j = kernel_basis(kernel, n).unwrap();
            let f = QuotientMapId::new(map, n).unwrap().integer_form();
            for v in &j.basis {
                vectors += 1;
                if f.apply_numerator(v).iter().any(|&c| c != 0) || map_oracle(kernel, n, v).iter().any(|&c| c != 0) {
                    return verdict(false, format!("{kernel:?} n={n}: {v:?} not annihilated"));
                }
            }
            if !j.basis.is_empty() && !is_null_subspace(&j).unwrap().null {
                return verdict(false, format!("{kernel:?} n={n} not null"));
            }
        }
    }
    let t = start.elapsed();
    verdict(
        t < Duration::from_secs(1),
        format!("{vectors} basis vectors annihilated, all kernels null, {:.2}s", t.as_secs_f64()),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let cfg = SweepConfig::new(50, 2024);
    let r = sweep::run(Suite::Nc2, &cfg).unwrap();
    let t = start.elapsed();
    let rate = r.agreements as f64 / r.rows.len() as f64;
    verdict(
        r.rows.len() == 50 && rate >= 0.96 && r.contradictions == 0 && t < Duration::from_secs(300),
        format!(
            "{}/{} agree, {} contradictions, {} skipped near the boundary, {:.1}s",
            r.agreements,
            r.rows.len(),
            r.contradictions,
            r.skipped,
            t.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let cfg = SweepConfig::new(1200, 77);
    let r = sweep::run(Suite::Agreement, &cfg).unwrap();
    let t = start.elapsed();
    let mut per_shape = std::collections::BTreeMap::new();
    for row in &r.rows {
        *per_shape.entry((row[2].clone(), row[3].clone())).or_insert(0) += 1;
    }
    let balanced = per_shape.len() == 6 && per_shape.values().all(|&c| c == 200);
    verdict(
        balanced && r.contradictions == 0 && t < Duration::from_secs(600),
        format!(
            "{} instances over {} shapes, {} contradictions beyond 10·strictTol, {:.1}s",
            r.rows.len(),
            per_shape.len(),
            r.contradictions,
            t.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Verdict {
    let opts = SolveOptions::default();
    let (mut instances, mut violations, mut bad_replays) = (0, 0, 0);
    let mut cand = 0u64;
    while instances < 100 && cand < 5000 {
        let seed = 9000 + cand;
        let k = 1 + (cand % 3) as usize;
        cand += 1;
        let x = random_nc_element(3, k, seed).unwrap();
        let o = max_membership(&x, Route::Tridiag, &opts).unwrap();
        if !(o.status == FeasStatus::Infeasible && o.upper_bound < -1e-3) {
            continue;
        }
        instances += 1;
        if let MinOutcome::Violation { rep, eigenvalue } = min_violation_search(&x, 6, 32, seed).unwrap() {
            violations += 1;
            let contractive = rep.mats.iter().all(|r| {
                let a = to_na(r);
                (&a - a.adjoint()).norm() <= 1e-9 && na_max_eig(&a) <= 1.0 + 1e-9 && na_min_eig(&a) >= -1.0 - 1e-9
            });
            let v = pencil_oracle(&x, &rep.mats);
            if !(contractive && v < 0.0 && (v - eigenvalue).abs() <= 1e-9) {
                bad_replays += 1;
            }
        }
    }
    let rate = violations as f64 / instances.max(1) as f64;
    verdict(
        instances == 100 && rate >= 0.95 && bad_replays == 0,
        format!("{violations}/{instances} violations, {bad_replays} failed re-verification"),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let steps: Vec<f64> = (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect();
    let (mut strict, mut mismatches) = (0, 0);
    let mut first = None;
    for n in 1..=3usize {
        for code in 0..steps.len().pow(n as u32) {
            let mut c = code;
            let a: Vec<f64> = (0..n)
                .map(|_| {
                    let v = steps[c % steps.len()];
                    c /= steps.len();
                    v
                })
                .collect();
            for i in 0..=12 {
                let a0 = 0.25 * i as f64;
                let oracle = sign_oracle(a0, &a);
                if oracle.abs() < 1e-12 {
                    continue;
                }
                strict += 1;
                let mut v = vec![a0];
                v.extend(&a);
                let x = TensorElement::from_real(SystemId::nc(n), &v).unwrap();
                let expected = if oracle > 0.0 { FeasStatus::Feasible } else { FeasStatus::Infeasible };
                for route in Route::ALL {
                    let got = max_membership(&x, route, &opts).unwrap().status;
                    if got != expected {
                        mismatches += 1;
                        first.get_or_insert(format!("{route:?} at ({a0}, {a:?}): {got:?}"));
                    }
                }
            }
        }
    }
    let t = start.elapsed();
    verdict(
        mismatches == 0 && t < Duration::from_secs(120),
        format!(
            "{strict} strict grid points × 4 routes, {mismatches} mismatches{}, {:.1}s",
            first.map(|f| format!(" (first: {f})")).unwrap_or_default(),
            t.as_secs_f64()
        ),
    )
}

/// Whether the diagonal-algebra scheme satisfies every strict inequality,
/// checked entrywise.
fn diagonal_scheme_valid(a1: &HermitianMatrix, a2: &HermitianMatrix, b: &[HermitianMatrix], x: &[HermitianMatrix]) -> bool {
    let k = a1.dim();
    let d = |h: &HermitianMatrix, j: usize| h.as_matrix()[(j, j)].re;
    let off_diagonal = x
        .iter()
        .all(|xi| (0..k).all(|i| (0..k).all(|j| i == j || xi.as_matrix()[(i, j)].norm() <= 1e-12)));
    off_diagonal
        && (0..k).all(|j| {
            let sum: f64 = x.iter().map(|xi| d(xi, j)).sum();
            sum < d(a1, j).min(d(a2, j)) && x.iter().zip(b).all(|(xi, bi)| d(xi, j) > d(bi, j).max(0.0))
        })
}

fn criterion_6() -> Verdict {
    let opts = SolveOptions::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for m in 1..=2usize {
        let (mut required, mut succeeded) = (0, 0);
        for i in 0..100u64 {
            let k = 1 + (i % 4) as usize;
            let dalg = SubalgebraSpec::diagonal(k);
            let (a1, a2, b) = random_scheme_data(&dalg, m, 31_000 + i);
            let full = solve_scheme(&a1, &a2, &b, &SubalgebraSpec::full(k), &opts).unwrap();
            if !matches!(&full, SchemeOutcome::Found(s) if s.delta > 1e-3) {
                continue;
            }
            required += 1;
            if let SchemeOutcome::Found(s) = solve_scheme(&a1, &a2, &b, &dalg, &opts).unwrap() {
                if diagonal_scheme_valid(&a1, &a2, &b, &s.x) {
                    succeeded += 1;
                }
            }
        }
        pass &= required > 0 && succeeded == required;
        parts.push(format!("m={m}: {succeeded}/{required}"));
    }
    verdict(pass, format!("diagonal-algebra schemes found and checked, {}", parts.join(", ")))
}

/// `max_θ λ_max(Re(e^{iθ} M))` by a 2000-point sweep and golden-section refinement.
fn radius_oracle(m: &ComplexMatrix) -> f64 {
    let a = to_na(m);
    let f = |t: f64| na_max_eig(&(&a * Complex64::from_polar(1.0, t)));
    let grid = 2000;
    let h = std::f64::consts::TAU / grid as f64;
    let best = (0..grid).max_by(|&i, &j| f(i as f64 * h).total_cmp(&f(j as f64 * h))).unwrap();
    let (mut lo, mut hi) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-12 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    f(0.5 * (lo + hi)).max(f(best as f64 * h))
}

fn criterion_7() -> Verdict {
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let k = 1 + i % 6;
        let m = ComplexMatrix::from_fn(k, k, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let w = w_radius_bisect(&m, 1e-9, &opts).unwrap();
        worst = worst.max((w - radius_oracle(&m)).abs());
    }
    let nil = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(if (i, j) == (0, 1) { 1.0 } else { 0.0 }, 0.0));
    let w = w_radius_bisect(&nil, 1e-10, &opts).unwrap();
    verdict(
        worst <= 1e-6 && (w - 0.5).abs() <= 1e-9,
        format!("worst deviation {worst:.2e} on 50 matrices, w(nilpotent) = {w:.12}"),
    )
}

fn criterion_8() -> Verdict {
    let opts = SolveOptions::default();
    let one = HermitianMatrix::identity(1);
    let s = |x: f64| ComplexMatrix::scalar(Complex64::new(x, 0.0));
    let (mut strict, mut mismatches) = (0, 0);
    for i in 0..=40 {
        for j in 0..=40 {
            let (a1, a2) = (-1.0 + 0.05 * i as f64, -1.0 + 0.05 * j as f64);
            // b, c > 2|a_i| with b + c = 2 exists iff |a1| + |a2| < 1
            let closed = 1.0 - a1.abs() - a2.abs();
            if closed.abs() < 1e-9 {
                continue;
            }
            strict += 1;
            if th_st_decompose(&one, &s(a1), &s(a2), &opts).unwrap().is_found() != (closed > 0.0) {
                mismatches += 1;
            }
        }
    }
    let report = th_st_agreement(2, 100, 555, &opts).unwrap();
    verdict(
        mismatches == 0 && report.contradictions == 0,
        format!(
            "{mismatches} mismatches on {strict} strict scalar points; {} contradictions in 100 random 2×2 instances ({} decisive)",
            report.contradictions, report.decisive
        ),
    )
}

/// Brute-force isomorphism test of the path and the star on `n + 1` vertices.
fn path_star_isomorphic(n: usize) -> bool {
    let v = n + 1;
    let path = |a: usize, b: usize| a.abs_diff(b) == 1;
    let star = |a: usize, b: usize| a != b && (a == 0 || b == 0);
    let mut perm: Vec<usize> = (0..v).collect();
    loop {
        if (0..v).all(|a| (0..v).all(|b| path(a, b) == star(perm[a], perm[b]))) {
            return true;
        }
        // next lexicographic permutation
        let Some(i) = (0..v.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            return false;
        };
        let j = (i + 1..v).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
}

fn criterion_9() -> Verdict {
    let mut results = Vec::new();
    let mut pass = true;
    for n in 1..=6 {
        let got = graph_distinguish_tr(n);
        pass &= got == !path_star_isomorphic(n) && got == (n >= 3);
        results.push(format!("n={n}:{got}"));
    }
    verdict(pass, results.join(" "))
}

fn run_bin(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_ncube")).args(args).output().unwrap();
    out.stdout
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let el = r#"{"format":1,"system":"NC","n":2,"k":1,"coeffs":[{"name":"1","matrix":[[[1,0]]]},{"name":"h1","matrix":[[[0.5,0]]]},{"name":"h2","matrix":[[[0.6,0]]]}]}"#;
    std::fs::write(p("el.json"), el).unwrap();
    let mut identical = 0;
    let mut differing = Vec::new();
    // same arguments twice, including the output path that the result echoes
    let mut compare = |label: &str, file: String, args: Vec<String>| {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let mut runs = Vec::new();
        for _ in 0..2 {
            let _ = std::fs::remove_file(&file);
            run_bin(&args);
            runs.push(std::fs::read(&file).unwrap_or_default());
        }
        if !runs[0].is_empty() && runs[0] == runs[1] {
            identical += 1;
        } else {
            differing.push(label.to_owned());
        }
    };
    for suite in ["agreement", "nc2", "wep", "riesz", "thst"] {
        let f = p(&format!("{suite}.csv"));
        let args = ["sweep", "--suite", suite, "--trials", "3", "--seed", "11", "--csv", &f].map(String::from);
        compare(suite, f.clone(), args.to_vec());
    }
    let el_path = p("el.json");
    for cmd in ["check-max", "check-min"] {
        let f = p(&format!("{cmd}.json"));
        let args = [cmd, "--in", &el_path, "--seed", "3", "--out", &f].map(String::from);
        compare(cmd, f.clone(), args.to_vec());
    }
    verdict(
        differing.is_empty(),
        format!("{identical} output pairs byte-identical{}", if differing.is_empty() { String::new() } else { format!(", differing: {differing:?}") }),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("kernel exactness", criterion_1),
        ("NC(2) min = max", criterion_2),
        ("route agreement", criterion_3),
        ("matrix algebras have WEP", criterion_4),
        ("level-1 closed form", criterion_5),
        ("1- and 2-Riesz decomposition", criterion_6),
        ("numerical radius", criterion_7),
        ("two-block decomposition", criterion_8),
        ("graph check", criterion_9),
        ("determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        let selected = filter.iter().any(|w| match w.parse::<usize>() {
            Ok(num) => num == i + 1,
            Err(_) => name.contains(w.as_str()),
        });
        if !filter.is_empty() && !selected {
            continue;
        }
        let v = f();
        failed += usize::from(!v.pass);
        println!("{id} [{name}]: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
