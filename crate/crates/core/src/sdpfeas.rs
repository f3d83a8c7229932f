//! Affine-PSD feasibility engine.
//!
//! Given an affine family `v ↦ (B_1(v), …, B_m(v))` of Hermitian blocks, the
//! engine approximately maximises the margin `ε` such that every block
//! satisfies `B_j(v) ⪰ εI`. Two algorithms are available: a log-det barrier
//! method on `(v, ε)` (the default), and bisection on `ε` where each level is
//! tested with alternating projections between the affine set (closed-form
//! least squares) and the product of shifted PSD cones (eigenvalue clipping).
//!
//! Both ends of the reported bracket are certified where possible: the lower
//! end is the exact margin of an affine point that was actually visited, and
//! the upper end comes from a PSD direction (`P_K(x) − x` or the barrier dual
//! `S_j^{-1}`) projected onto the annihilator of the affine maps.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, LinalgError, Result};
use crate::hermlin::{eigh, min_eig, op_norm, ComplexMatrix, Eigh, HermitianMatrix};

/// Default strictness threshold on the normalised margin.
pub const DEFAULT_STRICT_TOL: f64 = 1e-6;
/// Default total iteration budget (projection rounds across all bisection steps).
pub const DEFAULT_MAX_ITER: usize = 20_000;
/// Bisection steps on ε.
pub const BISECTION_STEPS: usize = 40;

const STALL_DISTANCE: f64 = 1e-7;
const STALL_WINDOW: usize = 500;
const RANK_TOL: f64 = 1e-10;
const CERT_EVERY: usize = 4;

/// One PSD block `C + Σ v_l F_l`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineBlock {
    pub constant: HermitianMatrix,
    /// One coefficient per free variable, `None` where the variable does not
    /// touch this block.
    pub coeffs: Vec<Option<HermitianMatrix>>,
}

impl AffineBlock {
    pub fn size(&self) -> usize {
        self.constant.dim()
    }

    pub fn evaluate(&self, v: &[f64]) -> HermitianMatrix {
        let mut m = self.constant.as_matrix().clone();
        for (c, &x) in self.coeffs.iter().zip(v) {
            if let (Some(f), true) = (c, x != 0.0) {
                for (d, s) in m.data_mut().iter_mut().zip(f.as_matrix().data()) {
                    *d += s * x;
                }
            }
        }
        HermitianMatrix::symmetrised(m)
    }
}

/// An affine family of candidate liftings plus the blocks required PSD.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffinePsdProblem {
    pub free_dim: usize,
    pub blocks: Vec<AffineBlock>,
    /// Converts a block margin into the margin of the element being lifted.
    pub unit_scale: f64,
}

impl AffinePsdProblem {
    pub fn new(free_dim: usize) -> Self {
        Self {
            free_dim,
            blocks: Vec::new(),
            unit_scale: 1.0,
        }
    }

    /// Adds a block with constant `c` and no dependence on the free vector yet.
    pub fn push_block(&mut self, constant: HermitianMatrix) -> usize {
        self.blocks.push(AffineBlock {
            constant,
            coeffs: vec![None; self.free_dim],
        });
        self.blocks.len() - 1
    }

    /// Adds `f` to the coefficient of variable `var` in block `block`.
    pub fn add_coeff(&mut self, block: usize, var: usize, f: &HermitianMatrix) {
        let slot = &mut self.blocks[block].coeffs[var];
        *slot = Some(match slot.take() {
            Some(g) => g.add(f),
            None => f.clone(),
        });
    }

    /// Appends `extra` new free variables (zero coefficients everywhere).
    pub fn add_vars(&mut self, extra: usize) -> usize {
        let first = self.free_dim;
        self.free_dim += extra;
        for b in &mut self.blocks {
            b.coeffs.resize(self.free_dim, None);
        }
        first
    }

    pub fn validate(&self) -> Result<()> {
        for (j, b) in self.blocks.iter().enumerate() {
            if b.coeffs.len() != self.free_dim {
                return Err(Error::MalformedProblem(format!(
                    "block {j} has {} coefficients, expected {}",
                    b.coeffs.len(),
                    self.free_dim
                )));
            }
            for f in b.coeffs.iter().flatten() {
                if f.dim() != b.size() {
                    return Err(Error::MalformedProblem(format!(
                        "block {j}: coefficient of size {} in a block of size {}",
                        f.dim(),
                        b.size()
                    )));
                }
                if !f.as_matrix().is_finite() {
                    return Err(Error::MalformedProblem(format!("block {j}: non-finite coefficient")));
                }
            }
            if !b.constant.as_matrix().is_finite() {
                return Err(Error::MalformedProblem(format!("block {j}: non-finite constant")));
            }
        }
        if !(self.unit_scale > 0.0 && self.unit_scale.is_finite()) {
            return Err(Error::MalformedProblem("unit_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn evaluate(&self, v: &[f64]) -> Vec<HermitianMatrix> {
        self.blocks.iter().map(|b| b.evaluate(v)).collect()
    }

    /// Multiplies every constant and coefficient by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut p = self.clone();
        for b in &mut p.blocks {
            b.constant = b.constant.scale(s);
            for f in b.coeffs.iter_mut().flatten() {
                *f = f.scale(s);
            }
        }
        p
    }

}

/// Smallest eigenvalue over all blocks at `v`; `+∞` for an empty block list.
pub fn check_point(p: &AffinePsdProblem, v: &[f64]) -> Result<f64> {
    if v.len() != p.free_dim {
        return Err(LinalgError::DimensionMismatch {
            expected: p.free_dim,
            actual: v.len(),
        }
        .into());
    }
    let mut worst = f64::INFINITY;
    for b in &p.blocks {
        worst = worst.min(min_eig(&b.evaluate(v))?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasStatus {
    Feasible,
    Infeasible,
    Undecided,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub strict_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Stop once the bracket is narrower than this (normalised units).
    pub gap_tol: f64,
    pub algorithm: Algorithm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Algorithm {
    /// Log-det barrier path following on `(v, ε)`.
    #[default]
    InteriorPoint,
    /// Bisection on `ε` over alternating projections.
    AlternatingProjections,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            strict_tol: DEFAULT_STRICT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            gap_tol: 1e-8,
            algorithm: Algorithm::default(),
        }
    }
}

/// Engine output. Margins are in block units (not normalised).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasResult {
    pub status: FeasStatus,
    /// Best certified margin: the exact `checkPoint` value at `point`.
    pub margin: f64,
    /// Upper bound on the optimal margin.
    pub upper_bound: f64,
    /// True when `upper_bound` comes from a dual certificate rather than the
    /// stall heuristic or the initial bracket.
    pub upper_certified: bool,
    pub point: Vec<f64>,
    /// Dual witness (one PSD matrix per block, unit trace in total) backing
    /// `upper_bound`, when one was found.
    pub witness: Option<Vec<HermitianMatrix>>,
    pub iterations: usize,
    /// Bisection steps or barrier updates, depending on the algorithm.
    pub outer_steps: usize,
    /// Normalisation factor applied internally.
    pub normalisation: f64,
}

impl FeasResult {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasStatus::Feasible
    }
}

/// Vectorised form of the problem: Hermitian blocks flattened isometrically.
struct Geometry {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    /// Constant term (normalised).
    c: DVector<f64>,
    /// Orthonormal basis of the range of the linear part.
    q: DMatrix<f64>,
    /// Maps a point of the affine set (minus `c`) back to a free vector.
    pinv: DMatrix<f64>,
    /// vec(I)
    unit: DVector<f64>,
    /// Projection of vec(I) onto the annihilator, when strictly positive.
    interior_dual: Option<(DVector<f64>, f64)>,
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn herm_to_vec(m: &ComplexMatrix, out: &mut [f64]) {
    let s = m.rows();
    let mut k = 0;
    for i in 0..s {
        out[k] = m[(i, i)].re;
        k += 1;
    }
    for i in 0..s {
        for j in (i + 1)..s {
            let z = m[(i, j)];
            out[k] = SQRT2 * z.re;
            out[k + 1] = SQRT2 * z.im;
            k += 2;
        }
    }
}

fn vec_to_herm(x: &[f64], s: usize) -> HermitianMatrix {
    let mut m = ComplexMatrix::zeros(s, s);
    let mut k = 0;
    for i in 0..s {
        m[(i, i)] = Complex64::new(x[k], 0.0);
        k += 1;
    }
    for i in 0..s {
        for j in (i + 1)..s {
            let z = Complex64::new(x[k], x[k + 1]) / SQRT2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    HermitianMatrix::symmetrised(m)
}

impl Geometry {
    fn build(p: &AffinePsdProblem, norm: f64) -> Result<Self> {
        let sizes: Vec<usize> = p.blocks.iter().map(|b| b.size()).collect();
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0;
        for &s in &sizes {
            offsets.push(total);
            total += s * s;
        }
        let mut c = DVector::zeros(total);
        let mut lin = DMatrix::zeros(total, p.free_dim);
        let mut buf = vec![0.0; total];
        for (j, b) in p.blocks.iter().enumerate() {
            let (o, s) = (offsets[j], sizes[j]);
            herm_to_vec(b.constant.as_matrix(), &mut buf[..s * s]);
            for t in 0..s * s {
                c[o + t] = buf[t] / norm;
            }
            for (l, f) in b.coeffs.iter().enumerate() {
                if let Some(f) = f {
                    herm_to_vec(f.as_matrix(), &mut buf[..s * s]);
                    for t in 0..s * s {
                        lin[(o + t, l)] = buf[t] / norm;
                    }
                }
            }
        }
        let mut unit = DVector::zeros(total);
        for (j, &s) in sizes.iter().enumerate() {
            for i in 0..s {
                unit[offsets[j] + i] = 1.0;
            }
        }

        let (q, pinv) = if p.free_dim == 0 || total == 0 {
            (DMatrix::zeros(total, 0), DMatrix::zeros(p.free_dim, total))
        } else {
            let svd = lin.clone().svd(true, true);
            let u = svd.u.as_ref().expect("svd u");
            let vt = svd.v_t.as_ref().expect("svd v_t");
            let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
            let keep: Vec<usize> = (0..svd.singular_values.len())
                .filter(|&i| svd.singular_values[i] > RANK_TOL * smax.max(1e-300))
                .collect();
            let r = keep.len();
            let mut q = DMatrix::zeros(total, r);
            let mut pinv = DMatrix::zeros(p.free_dim, total);
            for (col, &i) in keep.iter().enumerate() {
                q.set_column(col, &u.column(i));
                let sv = svd.singular_values[i];
                // pinv += v_i u_iᵀ / σ_i
                let vi = vt.row(i).transpose();
                pinv += (&vi * u.column(i).transpose()) / sv;
            }
            (q, pinv)
        };

        let mut geo = Self {
            sizes,
            offsets,
            c,
            q,
            pinv,
            unit,
            interior_dual: None,
        };
        let z = geo.annihilate(&geo.unit.clone());
        let zeta = geo.min_eig_vec(&z)?;
        if zeta > 1e-9 {
            geo.interior_dual = Some((z, zeta));
        }
        Ok(geo)
    }

    /// Component of `w` orthogonal to the range of the linear part.
    fn annihilate(&self, w: &DVector<f64>) -> DVector<f64> {
        if self.q.ncols() == 0 {
            return w.clone();
        }
        let coef = self.q.tr_mul(w);
        w - &self.q * coef
    }

    fn project_affine(&self, y: &DVector<f64>) -> DVector<f64> {
        let d = y - &self.c;
        if self.q.ncols() == 0 {
            return self.c.clone();
        }
        let coef = self.q.tr_mul(&d);
        &self.c + &self.q * coef
    }

    fn free_vector(&self, x: &DVector<f64>) -> Vec<f64> {
        let d = x - &self.c;
        (&self.pinv * d).iter().copied().collect()
    }

    fn blocks_of(&self, x: &DVector<f64>) -> Vec<HermitianMatrix> {
        self.sizes
            .iter()
            .zip(&self.offsets)
            .map(|(&s, &o)| vec_to_herm(&x.as_slice()[o..o + s * s], s))
            .collect()
    }

    fn min_eig_vec(&self, x: &DVector<f64>) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for b in self.blocks_of(x) {
            worst = worst.min(min_eig(&b)?);
        }
        Ok(worst)
    }

    /// Upper bound on the normalised optimal margin from a PSD direction `w`.
    fn certificate_bound(&self, w: &DVector<f64>) -> Result<Option<(f64, DVector<f64>)>> {
        let mut wp = self.annihilate(w);
        let lam = self.min_eig_vec(&wp)?;
        if lam < 0.0 {
            match &self.interior_dual {
                Some((z, zeta)) => wp += z * (-lam / zeta),
                None => return Ok(None),
            }
        }
        let tr = wp.dot(&self.unit);
        if !(tr > 1e-300) {
            return Ok(None);
        }
        let bound = wp.dot(&self.c) / tr;
        Ok(Some((bound, wp / tr)))
    }
}

struct Iterate {
    x: DVector<f64>,
    eigs: Vec<Eigh>,
    margin: f64,
}

impl Iterate {
    fn new(geo: &Geometry, x: DVector<f64>) -> Result<Self> {
        let mut eigs = Vec::with_capacity(geo.sizes.len());
        let mut margin = f64::INFINITY;
        for b in geo.blocks_of(&x) {
            let e = eigh(&b)?;
            margin = margin.min(e.values[0]);
            eigs.push(e);
        }
        Ok(Self { x, eigs, margin })
    }

    /// Projection onto the product of cones `{B ⪰ level·I}` and the gap `P_K(x) − x`.
    fn clip(&self, geo: &Geometry, level: f64) -> (DVector<f64>, DVector<f64>) {
        let mut y = self.x.clone();
        let mut gap = DVector::zeros(self.x.len());
        for (j, e) in self.eigs.iter().enumerate() {
            if e.values[0] >= level {
                continue;
            }
            let s = geo.sizes[j];
            let o = geo.offsets[j];
            let g = e.reconstruct_with(|l| if l < level { level - l } else { 0.0 });
            let mut buf = vec![0.0; s * s];
            herm_to_vec(g.as_matrix(), &mut buf);
            for t in 0..s * s {
                gap[o + t] = buf[t];
                y[o + t] += buf[t];
            }
        }
        (y, gap)
    }
}

/// What a solver run produced, in normalised units.
struct Outcome {
    best_x: DVector<f64>,
    hi: f64,
    witness: Option<DVector<f64>>,
    upper_certified: bool,
    iterations: usize,
    outer_steps: usize,
}

/// Approximately maximises the common margin of all blocks.
pub fn solve_max_margin(p: &AffinePsdProblem, opts: &SolveOptions) -> Result<FeasResult> {
    p.validate()?;
    let norm = 1.0
        + p.blocks
            .iter()
            .map(|b| op_norm(b.constant.as_matrix()))
            .collect::<std::result::Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);

    if p.blocks.is_empty() {
        return Ok(FeasResult {
            status: FeasStatus::Feasible,
            margin: f64::INFINITY,
            upper_bound: f64::INFINITY,
            upper_certified: false,
            point: vec![0.0; p.free_dim],
            witness: None,
            iterations: 0,
            outer_steps: 0,
            normalisation: norm,
        });
    }

    let geo = Geometry::build(p, norm)?;
    let total = geo.c.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start = DVector::from_iterator(
        total,
        (0..total).map(|_| 0.1 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)),
    );
    let start = geo.project_affine(&start);

    let out = match opts.algorithm {
        Algorithm::InteriorPoint => interior_point(&geo, start, opts)?,
        Algorithm::AlternatingProjections => alternating(&geo, start, opts)?,
    };

    let point = geo.free_vector(&out.best_x);
    // Re-verify on the original (un-normalised) data.
    let margin = check_point(p, &point)?;
    let lo_n = margin / norm;
    let status = if lo_n > opts.strict_tol {
        FeasStatus::Feasible
    } else if out.hi < -opts.strict_tol {
        FeasStatus::Infeasible
    } else {
        FeasStatus::Undecided
    };
    Ok(FeasResult {
        status,
        margin,
        upper_bound: out.hi * norm,
        upper_certified: out.upper_certified,
        point,
        witness: out.witness.map(|w| geo.blocks_of(&w)),
        iterations: out.iterations,
        outer_steps: out.outer_steps,
        normalisation: norm,
    })
}

fn initial_upper(geo: &Geometry, lo: f64) -> Result<(f64, Option<DVector<f64>>, bool)> {
    Ok(match &geo.interior_dual {
        Some((z, _)) => {
            let (b, w) = geo
                .certificate_bound(z)?
                .expect("interior dual has positive trace");
            (b, Some(w), true)
        }
        None => (1.0_f64.max(lo + 1.0), None, false),
    })
}

fn alternating(geo: &Geometry, start: DVector<f64>, opts: &SolveOptions) -> Result<Outcome> {
    let mut it = Iterate::new(geo, start)?;
    let mut lo = it.margin;
    let mut best_x = it.x.clone();
    let (mut hi, mut witness, mut upper_certified) = initial_upper(geo, lo)?;

    let mut iterations = 0;
    let mut steps = 0;

    'bisect: while steps < BISECTION_STEPS && hi - lo > opts.gap_tol {
        if lo > hi {
            break;
        }
        steps += 1;
        let eps = 0.5 * (lo + hi);
        // Aim above ε so that iterates can land strictly inside the cone.
        let mut aim = eps + 0.5 * (hi - eps);
        let mut since_adjust = 0;
        let mut dist_hist: Vec<f64> = Vec::new();
        loop {
            if iterations >= opts.max_iter {
                break 'bisect;
            }
            iterations += 1;
            since_adjust += 1;

            if it.margin > lo {
                lo = it.margin;
                best_x = it.x.clone();
            }
            if lo >= eps {
                continue 'bisect;
            }

            let (y, gap) = it.clip(geo, aim);
            let dist = gap.norm();
            if iterations % CERT_EVERY == 0 || since_adjust == 1 {
                if let Some((b, w)) = geo.certificate_bound(&gap)? {
                    if b < hi {
                        hi = b;
                        witness = Some(w);
                        upper_certified = true;
                    }
                }
                if hi < eps {
                    continue 'bisect;
                }
            }

            if geo.interior_dual.is_none() {
                dist_hist.push(dist);
                let n = dist_hist.len();
                if n >= STALL_WINDOW
                    && dist_hist[n - STALL_WINDOW..].iter().all(|&d| d > STALL_DISTANCE)
                    && dist > 0.99 * dist_hist[n - STALL_WINDOW / 2]
                {
                    // Stalled at a positive distance: treat ε as rejected.
                    hi = eps;
                    upper_certified = false;
                    continue 'bisect;
                }
            }

            // No decision for a while: pull the aim back toward ε.
            if since_adjust >= 60 {
                aim = eps + 0.5 * (aim - eps);
                since_adjust = 0;
            }

            it = Iterate::new(geo, geo.project_affine(&y))?;
        }
    }
    Ok(Outcome {
        best_x,
        hi,
        witness,
        upper_certified,
        iterations,
        outer_steps: steps,
    })
}

const BARRIER_GROWTH: f64 = 8.0;
const CENTERING_TOL: f64 = 1e-9;
const MAX_BARRIER_STEPS: usize = 60;
const MAX_CENTERING_STEPS: usize = 50;

/// Log-det barrier for `max t` subject to `B_j(c + Qz) − tI ≻ 0` and `t < cap`.
struct Barrier<'a> {
    geo: &'a Geometry,
    /// Coefficient matrices of the reduced coordinates, per block.
    gmats: Vec<Vec<DMatrix<Complex64>>>,
    cap: f64,
}

struct Factored {
    chols: Vec<nalgebra::Cholesky<Complex64, nalgebra::Dyn>>,
    logdet: f64,
}

impl<'a> Barrier<'a> {
    fn new(geo: &'a Geometry, cap: f64) -> Self {
        let r = geo.q.ncols();
        let gmats = geo
            .sizes
            .iter()
            .zip(&geo.offsets)
            .map(|(&s, &o)| {
                (0..r)
                    .map(|l| {
                        let col: Vec<f64> = (0..s * s).map(|t| geo.q[(o + t, l)]).collect();
                        to_dense(&vec_to_herm(&col, s))
                    })
                    .collect()
            })
            .collect();
        Self { geo, gmats, cap }
    }

    fn point(&self, z: &DVector<f64>) -> DVector<f64> {
        if z.is_empty() {
            self.geo.c.clone()
        } else {
            &self.geo.c + &self.geo.q * z
        }
    }

    fn factor(&self, z: &DVector<f64>, t: f64) -> Option<Factored> {
        if !(t < self.cap) {
            return None;
        }
        let x = self.point(z);
        let mut chols = Vec::with_capacity(self.geo.sizes.len());
        let mut logdet = (self.cap - t).ln();
        for b in self.geo.blocks_of(&x) {
            let mut m = to_dense(&b);
            for i in 0..m.nrows() {
                m[(i, i)] -= Complex64::new(t, 0.0);
            }
            let ch = m.cholesky()?;
            let l = ch.l_dirty();
            for i in 0..l.nrows() {
                logdet += 2.0 * l[(i, i)].re.ln();
            }
            chols.push(ch);
        }
        Some(Factored { chols, logdet })
    }

    fn objective(&self, tau: f64, t: f64, f: &Factored) -> f64 {
        -tau * t - f.logdet
    }

    /// Gradient and Hessian in the coordinates `(z, t)`.
    fn derivatives(&self, tau: f64, t: f64, f: &Factored) -> (DVector<f64>, DMatrix<f64>) {
        let r = self.geo.q.ncols();
        let nv = r + 1;
        let mut g = DVector::zeros(nv);
        let mut h = DMatrix::zeros(nv, nv);
        for (j, ch) in f.chols.iter().enumerate() {
            let s = self.geo.sizes[j];
            let l = ch.l();
            let mut pm = DMatrix::<f64>::zeros(2 * s * s, nv);
            let mut fill = |col: usize, gm: &DMatrix<Complex64>, g: &mut DVector<f64>| {
                let a = l.solve_lower_triangular(gm).expect("nonsingular factor");
                let p = l.solve_lower_triangular(&a.adjoint()).expect("nonsingular factor");
                let mut tr = 0.0;
                for i in 0..s {
                    tr += p[(i, i)].re;
                }
                g[col] -= tr;
                for (k, v) in p.iter().enumerate() {
                    pm[(2 * k, col)] = v.re;
                    pm[(2 * k + 1, col)] = v.im;
                }
            };
            for (col, gm) in self.gmats[j].iter().enumerate() {
                fill(col, gm, &mut g);
            }
            let neg_id = DMatrix::<Complex64>::from_diagonal_element(s, s, Complex64::new(-1.0, 0.0));
            fill(r, &neg_id, &mut g);
            h += pm.tr_mul(&pm);
        }
        let slack = self.cap - t;
        g[r] += -tau + 1.0 / slack;
        h[(r, r)] += 1.0 / (slack * slack);
        (g, h)
    }

    /// Dual direction `S^{-1} − S^{-1} ΔS S^{-1}` built from a Newton step `step`.
    /// It annihilates the linear part exactly, and is PSD close to the central path.
    fn dual(&self, f: &Factored, step: &DVector<f64>) -> DVector<f64> {
        let r = self.geo.q.ncols();
        let mut w = DVector::zeros(self.geo.c.len());
        for (j, ch) in f.chols.iter().enumerate() {
            let s = self.geo.sizes[j];
            let o = self.geo.offsets[j];
            let mut ds = DMatrix::<Complex64>::from_diagonal_element(s, s, Complex64::new(-step[r], 0.0));
            for (gm, &d) in self.gmats[j].iter().zip(step.iter()) {
                ds += gm * Complex64::new(d, 0.0);
            }
            let inv = ch.inverse();
            let wj = &inv - &inv * ds * &inv;
            let m = ComplexMatrix::from_fn(s, s, |a, b| wj[(a, b)]);
            herm_to_vec(&m, &mut w.as_mut_slice()[o..o + s * s]);
        }
        w
    }
}

fn to_dense(h: &HermitianMatrix) -> DMatrix<Complex64> {
    let m = h.as_matrix();
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn interior_point(geo: &Geometry, start: DVector<f64>, opts: &SolveOptions) -> Result<Outcome> {
    let start_margin = geo.min_eig_vec(&start)?;
    let (mut hi, mut witness, mut upper_certified) = initial_upper(geo, start_margin)?;
    let bounded = geo.interior_dual.is_some();
    let cap = if bounded { hi + 1.0 } else { hi.max(1.0) * 4.0 };
    let bar = Barrier::new(geo, cap);

    let mut z = if geo.q.ncols() == 0 {
        DVector::zeros(0)
    } else {
        geo.q.tr_mul(&(&start - &geo.c))
    };
    let mut t = start_margin - 1.0;
    let mut fac = bar
        .factor(&z, t)
        .ok_or_else(|| Error::MalformedProblem("barrier start is not interior".into()))?;

    let mut lo = start_margin;
    let mut best_x = start;
    let mut iterations = 0;
    let mut outer = 0;
    let mut tau = 1.0;
    let nv = z.len() + 1;
    let m: f64 = geo.sizes.iter().sum::<usize>() as f64 + 1.0;

    while outer < MAX_BARRIER_STEPS && iterations < opts.max_iter {
        outer += 1;
        // Centering by damped Newton.
        for _ in 0..MAX_CENTERING_STEPS {
            if iterations >= opts.max_iter {
                break;
            }
            iterations += 1;
            let (g, h) = bar.derivatives(tau, t, &fac);
            let step = newton_step(h, &g);
            let decrement = -g.dot(&step);
            if !(decrement > CENTERING_TOL) {
                break;
            }
            let f0 = bar.objective(tau, t, &fac);
            let mut alpha = 1.0;
            let mut moved = false;
            let mut gain = 0.0;
            while alpha > 1e-14 {
                let zn = &z + step.rows(0, nv - 1) * alpha;
                let tn = t + step[nv - 1] * alpha;
                if let Some(fn_) = bar.factor(&zn, tn) {
                    let f1 = bar.objective(tau, tn, &fn_);
                    if f1 <= f0 - 0.25 * alpha * decrement {
                        gain = f0 - f1;
                        z = zn;
                        t = tn;
                        fac = fn_;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            // Rounding noise dominates once the objective stops moving.
            if !moved || gain <= 1e-13 * f0.abs().max(1.0) {
                break;
            }
        }

        let x = bar.point(&z);
        let exact = geo.min_eig_vec(&x)?;
        if exact > lo {
            lo = exact;
            best_x = x;
        }
        let (g, h) = bar.derivatives(tau, t, &fac);
        let step = newton_step(h, &g);
        if let Some((b, w)) = geo.certificate_bound(&bar.dual(&fac, &step))? {
            if b < hi {
                hi = b;
                witness = Some(w);
                upper_certified = true;
            }
        }
        if hi - lo <= opts.gap_tol || (!bounded && t > 0.5 * cap) || tau * opts.gap_tol > 1e3 * m {
            break;
        }
        tau *= BARRIER_GROWTH;
    }

    if hi < lo {
        hi = lo;
    }
    Ok(Outcome {
        best_x,
        hi,
        witness,
        upper_certified,
        iterations,
        outer_steps: outer,
    })
}

fn newton_step(mut h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 0.0;
    loop {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += reg;
        }
        if let Some(ch) = hr.cholesky() {
            return -ch.solve(g);
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        if reg > scale {
            for i in 0..n {
                h[(i, i)] += scale;
            }
        }
    }
}
