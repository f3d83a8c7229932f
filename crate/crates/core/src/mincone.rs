//! Adversarial search for representations violating min-positivity.
//!
//! For `NC(n)` the search runs over tuples of Hermitian contractions
//! `H_1..H_n ∈ M_d`, minimising `λ_min(A_0⊗I_d + Σ A_i⊗H_i)`; for `S_2` over
//! unitary pairs, minimising `λ_min(A_0⊗I + Σ (A_i⊗U_i + A_i†⊗U_i†))`.
//! Gradients come from the bottom eigenspace; steps are projected
//! (eigenvalue clipping) or retracted (`U ← U·exp(−i s G)`).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermlin::{eigh, op_norm, ComplexMatrix, HermitianMatrix};
use crate::opsys::{SystemKind, TensorElement};

/// Values below this are reported as violations.
pub const VIOLATION_TOL: f64 = -1e-7;
/// Eigenvalues within this of the minimum share the gradient.
pub const CLUSTER_TOL: f64 = 1e-8;
pub const STEPS_PER_RESTART: usize = 40;
/// Step budget for the final descent from the best tuple found.
pub const POLISH_STEPS: usize = 400;
const INITIAL_STEP: f64 = 0.5;
const MAX_STEP: f64 = 64.0;
const MAX_HALVINGS: usize = 30;
/// Sufficient-decrease constant: a step `s` moving the tuple by `Δ` must
/// lower the value by `ARMIJO·‖Δ‖²/s`.
const ARMIJO: f64 = 0.4;
/// Number of best seeds polished at `d = 1`.
const POLISHED_SEEDS: usize = 4;
const GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
/// Phase grid for the `d = 1` unitary seeds.
const PHASE_GRID: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepKind {
    /// Hermitian contractions
    Contractions,
    Unitaries,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepTuple {
    pub kind: RepKind,
    pub d: usize,
    pub mats: Vec<ComplexMatrix>,
}

impl RepTuple {
    /// Largest deviation from being a contraction tuple or a unitary tuple.
    pub fn defect(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for m in &self.mats {
            match self.kind {
                RepKind::Contractions => {
                    worst = worst.max(m.hermitian_defect());
                    worst = worst.max(op_norm(m)? - 1.0);
                }
                RepKind::Unitaries => {
                    let p = m.adjoint().matmul(m);
                    let id = ComplexMatrix::identity(self.d);
                    worst = worst.max((&p - &id).max_abs());
                }
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum MinOutcome {
    NoViolationFound { best_margin: f64, best: RepTuple },
    Violation { rep: RepTuple, eigenvalue: f64 },
}

impl MinOutcome {
    /// Smallest value seen.
    pub fn value(&self) -> f64 {
        match self {
            MinOutcome::NoViolationFound { best_margin, .. } => *best_margin,
            MinOutcome::Violation { eigenvalue, .. } => *eigenvalue,
        }
    }

    pub fn rep(&self) -> &RepTuple {
        match self {
            MinOutcome::NoViolationFound { best, .. } => best,
            MinOutcome::Violation { rep, .. } => rep,
        }
    }

    pub fn is_violation(&self) -> bool {
        matches!(self, MinOutcome::Violation { .. })
    }
}

/// `λ_min(A_0⊗I_d + Σ A_i⊗R_i + Σ B_i⊗R_i†)`; the general form behind both
/// searches (`B_i` empty for `NC(n)`).
struct Pencil {
    k: usize,
    a0: ComplexMatrix,
    a: Vec<ComplexMatrix>,
    /// Coefficients of `R_i†`; empty when the `R_i` are Hermitian.
    b: Vec<ComplexMatrix>,
}

struct Evaluation {
    value: f64,
    /// `V†A_iV`-type contractions of the bottom eigenspace, one per variable,
    /// averaged over the cluster. `P_i[a, a'] = Σ conj(v[b·d+a]) A_i[b, b'] v[b'·d+a']`.
    p: Vec<ComplexMatrix>,
}

impl Pencil {
    fn matrix(&self, reps: &[ComplexMatrix], d: usize) -> HermitianMatrix {
        let id = ComplexMatrix::identity(d);
        let mut m = self.a0.kron(&id);
        for (i, r) in reps.iter().enumerate() {
            m = &m + &self.a[i].kron(r);
            if !self.b.is_empty() {
                m = &m + &self.b[i].kron(&r.adjoint());
            }
        }
        HermitianMatrix::symmetrised_from(m)
    }

    fn value(&self, reps: &[ComplexMatrix], d: usize) -> Result<f64> {
        Ok(eigh(&self.matrix(reps, d))?.values[0])
    }

    fn evaluate(&self, reps: &[ComplexMatrix], d: usize) -> Result<Evaluation> {
        let e = eigh(&self.matrix(reps, d))?;
        let value = e.values[0];
        let cluster: Vec<usize> = (0..e.values.len())
            .take_while(|&l| e.values[l] - value <= CLUSTER_TOL)
            .collect();
        let w = 1.0 / cluster.len() as f64;
        let mut p = vec![ComplexMatrix::zeros(d, d); self.a.len()];
        for &l in &cluster {
            let v = e.column(l);
            for (i, a) in self.a.iter().enumerate() {
                for x in 0..d {
                    for y in 0..d {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for r in 0..self.k {
                            let vr = v[r * d + x].conj();
                            if vr == Complex64::new(0.0, 0.0) {
                                continue;
                            }
                            for c in 0..self.k {
                                acc += vr * a[(r, c)] * v[c * d + y];
                            }
                        }
                        p[i][(x, y)] += acc * w;
                    }
                }
            }
        }
        Ok(Evaluation { value, p })
    }
}

fn nc_pencil(x: &TensorElement) -> Result<Pencil> {
    if x.system.kind != SystemKind::NC {
        return Err(Error::SystemMismatch {
            expected: "NC(n)".into(),
            actual: format!("{:?}", x.system),
        });
    }
    let (a0, a) = x.nc_parts()?;
    Ok(Pencil {
        k: x.k,
        a0: a0.into_matrix(),
        a: a.into_iter().map(HermitianMatrix::into_matrix).collect(),
        b: Vec::new(),
    })
}

fn sn_pencil(x: &TensorElement) -> Result<Pencil> {
    if x.system.kind != SystemKind::Sn {
        return Err(Error::SystemMismatch {
            expected: "S_n".into(),
            actual: format!("{:?}", x.system),
        });
    }
    x.validate()?;
    let n = x.system.n;
    Ok(Pencil {
        k: x.k,
        a0: x.coeffs[0].clone(),
        a: (1..=n).map(|i| x.coeffs[x.system.u(i)].clone()).collect(),
        b: (1..=n).map(|i| x.coeffs[x.system.u_star(i)].clone()).collect(),
    })
}

/// Clips the spectrum of a Hermitian matrix to `[−1, 1]`.
fn clip_contraction(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eigh(&HermitianMatrix::symmetrised_from(m.clone()))?;
    Ok(e.reconstruct_with(|l| l.clamp(-1.0, 1.0)).into_matrix())
}

/// `exp(−i s G)` for Hermitian `G`.
fn unitary_exp(g: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let e = eigh(&HermitianMatrix::symmetrised_from(g.clone()))?;
    let d = g.rows();
    let v = &e.vectors;
    Ok(ComplexMatrix::from_fn(d, d, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, &lam) in e.values.iter().enumerate() {
            acc += v[(i, l)] * Complex64::from_polar(1.0, -s * lam) * v[(j, l)].conj();
        }
        acc
    }))
}

fn transpose(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.cols(), m.rows(), |i, j| m[(j, i)])
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-ish unitary: Gram–Schmidt on the columns of a Ginibre matrix.
fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let mut g = gaussian_matrix(rng, d);
    for j in 0..d {
        for p in 0..j {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..d {
                dot += g[(i, p)].conj() * g[(i, j)];
            }
            for i in 0..d {
                let gp = g[(i, p)];
                g[(i, j)] -= dot * gp;
            }
        }
        let norm = (0..d).map(|i| g[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..d {
            g[(i, j)] /= norm;
        }
    }
    g
}

/// Random symmetry `U diag(±1) U†`: an extreme point of the contractions.
fn random_symmetry(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let u = random_unitary(rng, d);
    let signs: Vec<f64> = (0..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    u.matmul(&ComplexMatrix::diag_real(&signs)).matmul(&u.adjoint())
}

/// One gradient step for either search, backtracking by halving from
/// `start`; returns the new tuple and the accepted step, or `None` when no
/// step decreases the value.
fn step(
    pencil: &Pencil,
    kind: RepKind,
    reps: &[ComplexMatrix],
    d: usize,
    ev: &Evaluation,
    start: f64,
) -> Result<Option<(Vec<ComplexMatrix>, f64)>> {
    // Hermitian gradient per variable
    let grads: Vec<ComplexMatrix> = match kind {
        RepKind::Contractions => ev.p.iter().map(transpose).collect(),
        RepKind::Unitaries => {
            let i = Complex64::new(0.0, 1.0);
            ev.p.iter()
                .zip(reps)
                .map(|(p, u)| {
                    let pt_u = transpose(p).matmul(u);
                    (&pt_u - &pt_u.adjoint()).scale_c(i)
                })
                .collect()
        }
    };
    if grads.iter().all(|g| g.max_abs() < 1e-14) {
        return Ok(None);
    }
    let mut s = start;
    for _ in 0..MAX_HALVINGS {
        let cand: Vec<ComplexMatrix> = match kind {
            RepKind::Contractions => reps
                .iter()
                .zip(&grads)
                .map(|(h, g)| clip_contraction(&(h - &g.scale(s))))
                .collect::<Result<_>>()?,
            RepKind::Unitaries => reps
                .iter()
                .zip(&grads)
                .map(|(u, g)| Ok(u.matmul(&unitary_exp(g, s)?)))
                .collect::<Result<_>>()?,
        };
        let moved: f64 = cand
            .iter()
            .zip(reps)
            .map(|(c, r)| (c - r).frobenius_norm().powi(2))
            .sum();
        let v = pencil.value(&cand, d)?;
        if v < ev.value - 1e-15 && v <= ev.value - ARMIJO * moved / s {
            return Ok(Some((cand, s)));
        }
        s *= 0.5;
    }
    Ok(None)
}

/// Gradient descent; the first trial step is 0.5, later ones start from
/// twice the last accepted step.
fn descend(
    pencil: &Pencil,
    kind: RepKind,
    mut reps: Vec<ComplexMatrix>,
    d: usize,
    steps: usize,
) -> Result<(Vec<ComplexMatrix>, f64)> {
    let mut ev = pencil.evaluate(&reps, d)?;
    let mut start = INITIAL_STEP;
    for _ in 0..steps {
        match step(pencil, kind, &reps, d, &ev, start)? {
            Some((next, s)) => {
                reps = next;
                let before = ev.value;
                ev = pencil.evaluate(&reps, d)?;
                start = (2.0 * s).min(MAX_STEP);
                if before - ev.value <= 1e-15 * (1.0 + ev.value.abs()) {
                    break;
                }
            }
            None => break,
        }
    }
    Ok((reps, ev.value))
}

struct Best {
    value: f64,
    rep: RepTuple,
    /// Lowest `d = 1` seeds, ascending by value.
    seeds: Vec<(f64, Vec<ComplexMatrix>)>,
}

impl Best {
    fn offer(&mut self, kind: RepKind, d: usize, mats: Vec<ComplexMatrix>, value: f64) {
        if value < self.value {
            self.value = value;
            self.rep = RepTuple { kind, d, mats };
        }
    }

    fn offer_seed(&mut self, kind: RepKind, mats: Vec<ComplexMatrix>, value: f64) {
        let at = self.seeds.partition_point(|(v, _)| *v <= value);
        if at < POLISHED_SEEDS {
            self.seeds.insert(at, (value, mats.clone()));
            self.seeds.truncate(POLISHED_SEEDS);
        }
        self.offer(kind, 1, mats, value);
    }
}

/// Per-restart generator, independent of `d_max` and of the restart count.
fn restart_rng(seed: u64, restart: usize, d: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
    rng.set_stream(d as u64);
    rng
}

fn scalar_tuple(vals: &[f64]) -> Vec<ComplexMatrix> {
    vals.iter().map(|&v| ComplexMatrix::scalar(Complex64::new(v, 0.0))).collect()
}

fn seed_contractions(pencil: &Pencil, best: &mut Best) -> Result<()> {
    let n = pencil.a.len();
    // sign tuples
    for mask in 0..(1usize << n) {
        let vals: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let reps = scalar_tuple(&vals);
        let v = pencil.value(&reps, 1)?;
        best.offer_seed(RepKind::Contractions, reps, v);
    }
    // commuting diagonal contractions decompose into scalar tuples
    if n <= 3 {
        let mut idx = vec![0usize; n];
        loop {
            let vals: Vec<f64> = idx.iter().map(|&g| GRID[g]).collect();
            let reps = scalar_tuple(&vals);
            let v = pencil.value(&reps, 1)?;
            best.offer_seed(RepKind::Contractions, reps, v);
            let mut p = 0;
            while p < n {
                idx[p] += 1;
                if idx[p] < GRID.len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
            if p == n {
                break;
            }
        }
    }
    Ok(())
}

fn seed_unitaries(pencil: &Pencil, best: &mut Best) -> Result<()> {
    let n = pencil.a.len();
    let total = PHASE_GRID.pow(n.min(3) as u32);
    for code in 0..total {
        let mut c = code;
        let mats: Vec<ComplexMatrix> = (0..n)
            .map(|_| {
                let t = c % PHASE_GRID;
                c /= PHASE_GRID;
                let phase = 2.0 * std::f64::consts::PI * t as f64 / PHASE_GRID as f64;
                ComplexMatrix::scalar(Complex64::from_polar(1.0, phase))
            })
            .collect();
        let v = pencil.value(&mats, 1)?;
        best.offer_seed(RepKind::Unitaries, mats, v);
    }
    Ok(())
}

fn search(
    pencil: &Pencil,
    kind: RepKind,
    d_max: usize,
    restarts: usize,
    seed: u64,
    stop_at_violation: bool,
) -> Result<Best> {
    let n = pencil.a.len();
    let mut best = Best {
        value: f64::INFINITY,
        rep: RepTuple {
            kind,
            d: 1,
            mats: Vec::new(),
        },
        seeds: Vec::new(),
    };
    match kind {
        RepKind::Contractions => seed_contractions(pencil, &mut best)?,
        RepKind::Unitaries => seed_unitaries(pencil, &mut best)?,
    }
    if n > 0 {
        for (_, mats) in std::mem::take(&mut best.seeds) {
            let (reps, v) = descend(pencil, kind, mats, 1, POLISH_STEPS)?;
            best.offer(kind, 1, reps, v);
        }
    }
    if n == 0 || (stop_at_violation && best.value < VIOLATION_TOL) {
        return Ok(best);
    }
    for d in 1..=d_max {
        for r in 0..restarts {
            let mut rng = restart_rng(seed, r, d);
            let start: Vec<ComplexMatrix> = (0..n)
                .map(|_| match kind {
                    RepKind::Contractions => random_symmetry(&mut rng, d),
                    RepKind::Unitaries => random_unitary(&mut rng, d),
                })
                .collect();
            let (reps, v) = descend(pencil, kind, start, d, STEPS_PER_RESTART)?;
            best.offer(kind, d, reps, v);
            if stop_at_violation && best.value < VIOLATION_TOL {
                return Ok(best);
            }
        }
    }
    let d = best.rep.d;
    let (reps, v) = descend(pencil, kind, best.rep.mats.clone(), d, POLISH_STEPS)?;
    best.offer(kind, d, reps, v);
    Ok(best)
}

fn outcome(best: Best) -> MinOutcome {
    if best.value < VIOLATION_TOL {
        MinOutcome::Violation {
            rep: best.rep,
            eigenvalue: best.value,
        }
    } else {
        MinOutcome::NoViolationFound {
            best_margin: best.value,
            best: best.rep,
        }
    }
}

/// Searches Hermitian contraction tuples of size `1..=d_max` for a negative
/// eigenvalue of `A_0⊗I + Σ A_i⊗H_i`.
pub fn min_violation_search(x: &TensorElement, d_max: usize, restarts: usize, seed: u64) -> Result<MinOutcome> {
    if x.hermitian_defect() > 1e-8 {
        return Err(Error::InvalidElement("element is not Hermitian".into()));
    }
    let pencil = nc_pencil(x)?;
    Ok(outcome(search(&pencil, RepKind::Contractions, d_max, restarts, seed, true)?))
}

/// As [`min_violation_search`] for an `S_n` element, over unitary tuples.
pub fn s2_min_search(x: &TensorElement, d_max: usize, restarts: usize, seed: u64) -> Result<MinOutcome> {
    if x.hermitian_defect() > 1e-8 {
        return Err(Error::InvalidElement("element is not Hermitian".into()));
    }
    let pencil = sn_pencil(x)?;
    Ok(outcome(search(&pencil, RepKind::Unitaries, d_max, restarts, seed, true)?))
}

/// Lower bound on `w(A_1, A_2) = ½ sup λ_max(−(A_1⊗U_1 + A_1†⊗U_1† + A_2⊗U_2 + A_2†⊗U_2†))`
/// over unitary pairs found by the search.
pub fn joint_numerical_radius_lb(
    a1: &ComplexMatrix,
    a2: &ComplexMatrix,
    d_max: usize,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    let k = a1.rows();
    if !a1.is_square() || !a2.is_square() || a2.rows() != k {
        return Err(Error::Linalg(crate::error::LinalgError::DimensionMismatch {
            expected: k,
            actual: a2.rows(),
        }));
    }
    let pencil = Pencil {
        k,
        a0: ComplexMatrix::zeros(k, k),
        a: vec![a1.clone(), a2.clone()],
        b: vec![a1.adjoint(), a2.adjoint()],
    };
    let best = search(&pencil, RepKind::Unitaries, d_max, restarts, seed, false)?;
    Ok((-best.value / 2.0).max(0.0))
}

/// Recomputes `λ_min` of the pencil of `x` at `rep` from scratch.
pub fn evaluate_rep(x: &TensorElement, rep: &RepTuple) -> Result<f64> {
    let pencil = match rep.kind {
        RepKind::Contractions => nc_pencil(x)?,
        RepKind::Unitaries => sn_pencil(x)?,
    };
    if rep.mats.len() != pencil.a.len() {
        return Err(Error::SystemMismatch {
            expected: format!("{} matrices", pencil.a.len()),
            actual: format!("{}", rep.mats.len()),
        });
    }
    pencil.value(&rep.mats, rep.d)
}
