//! Weakly interacting time evolution operators.
//!
//! Free evolutions, the exponentials of quadratic Hamiltonians, form a
//! compact subgroup of the even unitary group on Fock space. A general even
//! unitary is interacting. This module measures how far an interacting
//! evolution sits from the free subgroup in the bi-invariant Frobenius
//! metric and, away from the cut locus of the subgroup, splits it as
//! `U = U0 exp(-iX)` with `U0` the closest free operator and `X` a Hermitian
//! direction orthogonal to every free direction. Sliding `t` in
//! `U0 exp(-itX)` retracts the operator onto the free subgroup without
//! leaving the even unitaries.
//!
//! Closest free operators are found by multistart gradient descent on the
//! squared geodesic distance. The search reports one representative per
//! foot point: parameter matrices that exponentiate to the same free
//! operator count as a single minimizer, so the 2π ambiguity of the
//! exponential map never shows up as fake competing minima.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{
    annihilation, creation, is_even, parity, quadratic_hamiltonian, wedge_power, FockOperator,
    FockSpace,
};
use crate::mat::{
    ceye, czero, fro_dist, hermitian_eig, random_hermitian, unitary_eig, CMat, HermitianMatrix,
    C_ONE,
};
use crate::symmetry::{SymmetryKind, SymmetrySpec};

/// Largest mode count the dense nearest-free search accepts.
pub const MAX_WEAK_MODES: usize = 4;

/// Two minimizers whose geodesic distances differ by less than this leave
/// the closest free operator ambiguous.
pub const DISTANCE_GAP_TOL: f64 = 1.0e-6;

/// Minimizer parameters closer than this in Frobenius norm count as one
/// reported minimum.
pub const PARAMETER_SEP_TOL: f64 = 1.0e-3;

/// Free operators closer than this in Frobenius norm count as one foot
/// point.
pub const FOOT_TOL: f64 = 1.0e-6;

/// Free component allowed in the extracted interaction direction before the
/// decomposition is flagged ambiguous.
pub const FREE_RESIDUAL_TOL: f64 = 1.0e-8;

/// Reconstruction gate `U = U0 exp(-iX)` for a weak decomposition.
pub const RECONSTRUCTION_TOL: f64 = 1.0e-8;

/// Default gradient norm below which a descent restart counts as converged.
pub const DEFAULT_GRAD_TOL: f64 = 1.0e-9;

/// Default number of descent restarts.
pub const DEFAULT_RESTARTS: usize = 32;

/// Sample count along the retraction path, shared by the cut locus probe
/// and the involution compatibility check.
const PATH_SAMPLES: usize = 32;

const MAX_DESCENT_ITERS: usize = 2000;
const PROBE_ITERS: usize = 400;

/// A restart whose line search stalls still counts as converged below this
/// gradient norm.
const STALL_GRAD_TOL: f64 = 1.0e-6;

/// Gradient norm the polish phase drives toward.
const POLISH_FLOOR: f64 = 1.0e-12;
const POLISH_ITERS: usize = 10;

/// Residual norm below which an orthonormalization candidate is linearly
/// dependent and gets dropped.
const RANK_TOL: f64 = 1.0e-8;

fn weak_space(modes: usize) -> Result<FockSpace> {
    if modes == 0 || modes > MAX_WEAK_MODES {
        return Err(Error::Dimension(format!(
            "weak decomposition supports 1..={MAX_WEAK_MODES} modes, got {modes}"
        )));
    }
    FockSpace::new(modes)
}

/// Even Hermitian Fock operator, the generator of an interacting evolution.
#[derive(Clone, Debug)]
pub struct InteractingHamiltonian {
    op: FockOperator,
}

impl InteractingHamiltonian {
    /// Validates hermiticity and evenness. The operator may otherwise couple
    /// arbitrarily many particles.
    pub fn new(op: FockOperator) -> Result<Self> {
        let residual = fro_dist(op.matrix(), &op.matrix().adjoint());
        let tol = crate::mat::HERMITIAN_TOL * op.dim() as f64 * op.matrix().norm().max(1.0);
        if residual > tol {
            return Err(Error::Structure {
                context: "interacting Hamiltonian hermiticity",
                residual,
                tol,
            });
        }
        if !is_even(&op) {
            return Err(Error::Parity(
                "interacting Hamiltonian does not commute with fermion parity".into(),
            ));
        }
        Ok(Self { op })
    }

    pub fn op(&self) -> &FockOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn modes(&self) -> usize {
        self.op.modes()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Evolution operator `exp(-iH)`, carrying this generator as provenance.
    pub fn evolve(&self) -> Result<InteractingOp> {
        let u = exp_minus_i_herm(self.op.matrix(), 1.0)?;
        let space = FockSpace::new(self.op.modes())?;
        let mut out = InteractingOp::new(FockOperator::new(&space, u)?)?;
        out.provenance = Some(self.clone());
        Ok(out)
    }
}

/// Unitary, parity-even evolution operator on Fock space.
#[derive(Clone, Debug)]
pub struct InteractingOp {
    op: FockOperator,
    provenance: Option<InteractingHamiltonian>,
}

impl InteractingOp {
    pub fn new(op: FockOperator) -> Result<Self> {
        let n = op.dim();
        let residual = fro_dist(&(op.matrix().adjoint() * op.matrix()), &ceye(n));
        let tol = crate::mat::UNITARY_TOL * n as f64;
        if residual > tol {
            return Err(Error::Structure {
                context: "interacting evolution unitarity",
                residual,
                tol,
            });
        }
        if !is_even(&op) {
            return Err(Error::Parity(
                "interacting evolution does not commute with fermion parity".into(),
            ));
        }
        Ok(Self {
            op,
            provenance: None,
        })
    }

    pub fn op(&self) -> &FockOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn modes(&self) -> usize {
        self.op.modes()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Generating Hamiltonian, when the operator was built from one.
    pub fn provenance(&self) -> Option<&InteractingHamiltonian> {
        self.provenance.as_ref()
    }
}

/// Spectral `exp(-itH)` for Hermitian `h`.
fn exp_minus_i_herm(h: &CMat, t: f64) -> Result<CMat> {
    let (q, lam) = hermitian_eig(h)?;
    let d = DVector::from_iterator(
        lam.len(),
        lam.iter().map(|&x| Complex64::from_polar(1.0, -t * x)),
    );
    Ok(&q * CMat::from_diagonal(&d) * q.adjoint())
}

fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Real part of the Hilbert-Schmidt pairing tr(a† b).
fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Orthonormal Hermitian basis of the n-by-n single-particle matrices.
fn hermitian_unit_basis(n: usize) -> Vec<CMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        let mut m = czero(n, n);
        m[(k, k)] = C_ONE;
        out.push(m);
    }
    for k in 0..n {
        for l in k + 1..n {
            let mut sym = czero(n, n);
            sym[(k, l)] = Complex64::new(s, 0.0);
            sym[(l, k)] = Complex64::new(s, 0.0);
            out.push(sym);
            let mut asym = czero(n, n);
            asym[(k, l)] = Complex64::new(0.0, s);
            asym[(l, k)] = Complex64::new(0.0, -s);
            out.push(asym);
        }
    }
    out
}

/// Orthonormal Hermitian basis of the parity-commuting Fock operators.
/// Basis states pair only within a parity sector, so the count is twice the
/// squared sector dimension.
fn even_hermitian_mats(space: &FockSpace) -> Vec<CMat> {
    let d = space.dim();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let par: Vec<usize> = space.basis().iter().map(|b| b.len() % 2).collect();
    let mut out = Vec::new();
    for i in 0..d {
        let mut m = czero(d, d);
        m[(i, i)] = C_ONE;
        out.push(m);
    }
    for i in 0..d {
        for j in i + 1..d {
            if par[i] != par[j] {
                continue;
            }
            let mut sym = czero(d, d);
            sym[(i, j)] = Complex64::new(s, 0.0);
            sym[(j, i)] = Complex64::new(s, 0.0);
            out.push(sym);
            let mut asym = czero(d, d);
            asym[(i, j)] = Complex64::new(0.0, s);
            asym[(j, i)] = Complex64::new(0.0, -s);
            out.push(asym);
        }
    }
    out
}

/// Modified Gram-Schmidt under the real Hilbert-Schmidt pairing, with a
/// second pass for stability. Candidates that project to nearly nothing are
/// dropped.
fn orthonormalize(cands: Vec<CMat>, against: &[CMat]) -> Vec<CMat> {
    let mut kept: Vec<CMat> = Vec::new();
    for mut v in cands {
        for _ in 0..2 {
            for b in against {
                let c = re_inner(b, &v);
                v -= b * Complex64::new(c, 0.0);
            }
            for b in &kept {
                let c = re_inner(b, &v);
                v -= b * Complex64::new(c, 0.0);
            }
        }
        let nrm = v.norm();
        if nrm > RANK_TOL {
            kept.push(v / Complex64::new(nrm, 0.0));
        }
    }
    kept
}

/// Fock space together with an orthonormal basis of the lifted free
/// directions and its single-particle shadow, the chart the descent runs
/// in.
struct FreeFrame {
    space: FockSpace,
    basis: Vec<CMat>,
    sp_basis: Vec<CMat>,
    single_idx: Vec<usize>,
}

impl FreeFrame {
    fn build(modes: usize) -> Result<Self> {
        let space = weak_space(modes)?;
        let raw: Vec<CMat> = hermitian_unit_basis(modes)
            .into_iter()
            .map(|h| {
                Ok(quadratic_hamiltonian(&space, &HermitianMatrix::new_unchecked(h))?.into_matrix())
            })
            .collect::<Result<_>>()?;
        let basis = orthonormalize(raw, &[]);
        if basis.len() != modes * modes {
            return Err(Error::Internal(format!(
                "free basis has rank {}, expected {}",
                basis.len(),
                modes * modes
            )));
        }
        let single_idx = (1..=modes)
            .map(|j| space.state_index(&[j]))
            .collect::<Result<Vec<_>>>()?;
        let mut frame = Self {
            space,
            basis,
            sp_basis: Vec::new(),
            single_idx,
        };
        // Quadratic lifts act on the one-particle sector as their own
        // single-particle matrix, so reading the block inverts the lift.
        frame.sp_basis = frame.basis.iter().map(|f| frame.single_particle(f)).collect();
        Ok(frame)
    }

    fn params(&self) -> usize {
        self.basis.len()
    }

    fn assemble(&self, theta: &[f64]) -> CMat {
        let d = self.space.dim();
        let mut a = czero(d, d);
        for (t, f) in theta.iter().zip(&self.basis) {
            if *t != 0.0 {
                a += f * Complex64::new(*t, 0.0);
            }
        }
        a
    }

    /// Single-particle direction with the same frame coefficients.
    fn assemble_sp(&self, theta: &[f64]) -> CMat {
        let n = self.space.modes();
        let mut a = czero(n, n);
        for (t, f) in theta.iter().zip(&self.sp_basis) {
            if *t != 0.0 {
                a += f * Complex64::new(*t, 0.0);
            }
        }
        a
    }

    fn project(&self, a: &CMat) -> Vec<f64> {
        self.basis.iter().map(|f| re_inner(f, a)).collect()
    }

    /// Single-particle matrix of a lifted free direction, read off the
    /// one-particle block.
    fn single_particle(&self, a: &CMat) -> CMat {
        let n = self.space.modes();
        CMat::from_fn(n, n, |i, j| a[(self.single_idx[i], self.single_idx[j])])
    }

    #[cfg(test)]
    fn lift(&self, h: &CMat) -> Result<CMat> {
        Ok(
            quadratic_hamiltonian(&self.space, &HermitianMatrix::new_unchecked(hermitize(h)))?
                .into_matrix(),
        )
    }

    /// Free evolution operator of a single-particle unitary.
    fn wedge(&self, w: &CMat) -> Result<CMat> {
        Ok(wedge_power(&self.space, w)?.into_matrix())
    }
}

/// Orthonormal real basis of the lifted free directions.
///
/// Entries are even Hermitian Fock operators spanning the image of the
/// quadratic lift `H -> sum_ij H_ij a_i† a_j`, orthonormal under
/// `Re tr(A† B)`. The span has real dimension `modes²`.
pub fn free_subspace_basis(modes: usize) -> Result<Vec<FockOperator>> {
    let frame = FreeFrame::build(modes)?;
    frame
        .basis
        .iter()
        .map(|m| FockOperator::new(&frame.space, m.clone()))
        .collect()
}

/// Orthonormal real basis of the interaction directions: even Hermitian
/// Fock operators orthogonal to every lifted free direction.
pub fn ortho_complement_basis(modes: usize) -> Result<Vec<FockOperator>> {
    let frame = FreeFrame::build(modes)?;
    let total = even_hermitian_mats(&frame.space);
    let expected = total.len() - frame.params();
    let kept = orthonormalize(total, &frame.basis);
    if kept.len() != expected {
        return Err(Error::Internal(format!(
            "interaction complement has rank {}, expected {expected}",
            kept.len()
        )));
    }
    kept.into_iter()
        .map(|m| FockOperator::new(&frame.space, m))
        .collect()
}

/// Squared geodesic distance from the free operator of `w` to `u`,
/// evaluated through the eigenphases of `(⋀w)† u` so the value stays
/// continuous across the branch cut of the logarithm.
fn eval_f(u: &CMat, frame: &FreeFrame, w: &CMat) -> Result<f64> {
    let g = frame.wedge(w)?.adjoint() * u;
    let (_, phases) = unitary_eig(&g)?;
    Ok(phases.iter().map(|p| p * p).sum())
}

/// Objective value, gradient, and the free operator `⋀w`.
///
/// The state moves on the free subgroup itself, so the chart is always
/// centered at the current point: perturbing along `w exp(-is D_k)` changes
/// the k-th eigenphase sum at rate `2⟨F_k, Φ⟩` with `Φ` the Hermitian phase
/// matrix of `(⋀w)† u`, with no derivative-of-exp dressing at all.
fn eval_fg(u: &CMat, frame: &FreeFrame, w: &CMat) -> Result<(f64, Vec<f64>, CMat)> {
    let v = frame.wedge(w)?;
    let g = v.adjoint() * u;
    let (vecs, phases) = unitary_eig(&g)?;
    let f: f64 = phases.iter().map(|p| p * p).sum();
    let d = g.nrows();
    let pdiag = DVector::from_iterator(d, phases.iter().map(|&p| Complex64::new(p, 0.0)));
    let phi = &vecs * CMat::from_diagonal(&pdiag) * vecs.adjoint();
    let grad: Vec<f64> = frame.basis.iter().map(|fk| 2.0 * re_inner(fk, &phi)).collect();
    Ok((f, grad, v))
}

/// Unitary polar factor, the closest unitary when the matrix has full rank.
fn polar_unitary(m: &CMat) -> Option<CMat> {
    let svd = m.clone().svd(true, true);
    if svd.singular_values.iter().any(|s| *s <= RANK_TOL) {
        return None;
    }
    Some(svd.u? * svd.v_t?)
}

/// One converged descent restart.
struct Candidate {
    w: CMat,
    h: CMat,
    foot: CMat,
    distance: f64,
}

/// Canonical single-particle generator of `w`: `i log w` with eigenphases
/// in (-π, π].
fn principal_generator(w: &CMat) -> Result<CMat> {
    let (vecs, phases) = unitary_eig(w)?;
    let d = w.nrows();
    let neg = DVector::from_iterator(d, phases.iter().map(|&p| Complex64::new(-p, 0.0)));
    Ok(hermitize(&(&vecs * CMat::from_diagonal(&neg) * vecs.adjoint())))
}

fn finish(frame: &FreeFrame, w: CMat, f: f64) -> Option<Candidate> {
    // Thousands of multiplicative updates leave ~1e-12 of unitarity drift;
    // snap back before reporting.
    let w = polar_unitary(&w)?;
    let h = principal_generator(&w).ok()?;
    let foot = frame.wedge(&w).ok()?;
    Some(Candidate {
        w,
        h,
        foot,
        distance: f.max(0.0).sqrt(),
    })
}

/// Descent step in the chart centered at `w`: the chart direction is
/// `s -> w exp(-is D)`, so stepping against the gradient multiplies by
/// `exp(+i alpha D_grad)`.
fn step_w(frame: &FreeFrame, w: &CMat, grad: &[f64], alpha: f64) -> Result<CMat> {
    let d = frame.assemble_sp(grad);
    Ok(w * exp_minus_i_herm(&d, -alpha)?)
}

/// Final sharpening of a converged restart. The objective flattens to its
/// evaluation noise floor near a critical point, so steps are accepted by
/// gradient decrease instead; the gradient stays accurate well past the
/// point where objective comparisons drown.
fn polish(u: &CMat, frame: &FreeFrame, mut w: CMat, mut f: f64, mut grad: Vec<f64>) -> Option<Candidate> {
    let mut gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    for _ in 0..POLISH_ITERS {
        if gnorm <= POLISH_FLOOR {
            break;
        }
        let mut alpha = 0.5f64;
        let mut improved = false;
        for _ in 0..12 {
            if let Ok(trial) = step_w(frame, &w, &grad, alpha) {
                if let Ok((f2, g2, _)) = eval_fg(u, frame, &trial) {
                    let gn2 = g2.iter().map(|g| g * g).sum::<f64>().sqrt();
                    if gn2 < gnorm {
                        w = trial;
                        f = f2;
                        grad = g2;
                        gnorm = gn2;
                        improved = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    finish(frame, w, f)
}

/// Gradient descent with backtracking line search, moving on the free
/// subgroup itself through multiplicative updates. Returns None when the
/// restart neither reaches the gradient tolerance nor stalls close enough
/// to a critical point.
fn descend(
    u: &CMat,
    frame: &FreeFrame,
    start: &CMat,
    max_iters: usize,
    grad_tol: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Candidate> {
    let mut w = start.clone();
    // A start the eigensolver rejects gets nudged instead of dropped.
    let mut state = None;
    for _ in 0..4 {
        match eval_fg(u, frame, &w) {
            Ok(s) => {
                state = Some(s);
                break;
            }
            Err(_) => {
                let bump = random_hermitian(frame.space.modes(), rng);
                w *= exp_minus_i_herm(bump.as_mat(), 0.01).ok()?;
            }
        }
    }
    let (mut f, mut grad, _) = state?;
    let mut step = 0.5f64;
    let mut gnorm = 0.0;
    for _ in 0..max_iters {
        gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= grad_tol {
            return polish(u, frame, w, f, grad);
        }
        let mut alpha = step;
        let mut accepted = false;
        for _ in 0..60 {
            if let Ok(trial) = step_w(frame, &w, &grad, alpha) {
                if let Ok(ft) = eval_f(u, frame, &trial) {
                    if ft <= f - 1.0e-4 * alpha * gnorm * gnorm {
                        if let Ok((f2, g2, _)) = eval_fg(u, frame, &trial) {
                            w = trial;
                            f = f2;
                            grad = g2;
                            accepted = true;
                        }
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Objective decrements drown in evaluation noise near a
            // critical point; a stall close enough still converges through
            // the polish.
            return if gnorm <= STALL_GRAD_TOL {
                polish(u, frame, w, f, grad)
            } else {
                None
            };
        }
        // The squared-phase objective has curvature 2 along the free
        // directions at a foot, so 0.5 is the Newton step; letting the
        // carried step grow past it invites a slow ping-pong across the
        // minimum that still passes the Armijo test.
        step = (2.0 * alpha).min(0.5);
    }
    if gnorm <= STALL_GRAD_TOL {
        polish(u, frame, w, f, grad)
    } else {
        None
    }
}

fn lex_cmp(a: &CMat, b: &CMat) -> Ordering {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let (x, y) = (a[(i, j)], b[(i, j)]);
            match x.re.total_cmp(&y.re) {
                Ordering::Equal => {}
                o => return o,
            }
            match x.im.total_cmp(&y.im) {
                Ordering::Equal => {}
                o => return o,
            }
        }
    }
    Ordering::Equal
}

/// Sorts by distance with lexicographic tie break and keeps one
/// representative per minimizer: candidates merge when either their
/// parameters or their foot points nearly coincide.
fn cluster(mut cands: Vec<Candidate>) -> Vec<Candidate> {
    cands.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| lex_cmp(&a.h, &b.h))
    });
    let mut reps: Vec<Candidate> = Vec::new();
    'next: for c in cands {
        for r in &reps {
            if fro_dist(&c.h, &r.h) <= PARAMETER_SEP_TOL || fro_dist(&c.w, &r.w) <= FOOT_TOL {
                continue 'next;
            }
        }
        reps.push(c);
    }
    reps
}

/// Options for the multistart nearest-free search.
#[derive(Clone, Copy, Debug)]
pub struct NearestFreeOpts {
    /// Number of descent starts. The first two are the zero Hamiltonian and
    /// the free projection of the principal logarithm; the rest are random.
    pub restarts: usize,
    /// Seed for the random starts.
    pub seed: u64,
    /// Gradient norm below which a restart counts as converged.
    pub tol: f64,
}

impl Default for NearestFreeOpts {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            tol: DEFAULT_GRAD_TOL,
        }
    }
}

fn nearest_free_candidates(
    u: &CMat,
    frame: &FreeFrame,
    opts: &NearestFreeOpts,
) -> Result<Vec<Candidate>> {
    if opts.restarts == 0 {
        return Err(Error::Convention(
            "nearest-free search needs at least one restart".into(),
        ));
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(Error::Convention(format!(
            "gradient tolerance must be positive and finite, got {}",
            opts.tol
        )));
    }
    let n = frame.space.modes();
    let mut starts: Vec<CMat> = Vec::with_capacity(opts.restarts);
    starts.push(ceye(n));
    if opts.restarts > 1 {
        if let Ok((vecs, phases)) = unitary_eig(u) {
            let neg = DVector::from_iterator(
                phases.len(),
                phases.iter().map(|&p| Complex64::new(-p, 0.0)),
            );
            let x0 = &vecs * CMat::from_diagonal(&neg) * vecs.adjoint();
            let d0 = frame.assemble_sp(&frame.project(&x0));
            starts.push(exp_minus_i_herm(&d0, 1.0)?);
        }
    }
    if opts.restarts > 2 {
        // Free operators act on the one-particle states as their own
        // single-particle block, so the polar factor of that block of `u`
        // starts the descent near the foot whenever the interaction is
        // small.
        let block = frame.single_particle(u);
        if let Some(w0) = polar_unitary(&block) {
            starts.push(w0);
        }
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.restarts {
        let h = random_hermitian(n, &mut seeder);
        starts.push(exp_minus_i_herm(h.as_mat(), 1.0)?);
    }
    let found: Vec<Option<Candidate>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let salt = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ salt);
            descend(u, frame, s, MAX_DESCENT_ITERS, opts.tol, &mut rng)
        })
        .collect();
    let cands: Vec<Candidate> = found.into_iter().flatten().collect();
    if cands.is_empty() {
        return Err(Error::Convergence(
            "no nearest-free descent restart converged".into(),
        ));
    }
    Ok(cluster(cands))
}

/// Closest free operators to `u`, sorted by distance with lexicographic
/// tie break.
///
/// Each entry pairs the single-particle Hamiltonian of a free evolution
/// with its geodesic distance to `u`. Parameters that exponentiate to the
/// same free operator are reported once, and only minimizers tied with the
/// best one survive the reduction: a unique closest operator comes back
/// alone, a cut locus point comes back with every equally close foot the
/// search found.
pub fn nearest_free(
    u: &InteractingOp,
    opts: &NearestFreeOpts,
) -> Result<Vec<(HermitianMatrix, f64)>> {
    let frame = FreeFrame::build(u.modes())?;
    let cands = nearest_free_candidates(u.matrix(), &frame, opts)?;
    let best = cands[0].distance;
    Ok(cands
        .into_iter()
        .take_while(|c| c.distance - best <= DISTANCE_GAP_TOL)
        .map(|c| (HermitianMatrix::new_unchecked(c.h), c.distance))
        .collect())
}

/// Outcome of a weak decomposition attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeakStatus {
    /// Unique closest free operator, and the minimizing geodesic to it
    /// stays unique along the retraction path.
    Weak,
    /// Competing closest free operators, or the path to the best one loses
    /// uniqueness at an interior point.
    CutLocus,
    /// The extracted direction kept a free component past tolerance.
    Ambiguous,
}

impl fmt::Display for WeakStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeakStatus::Weak => "weak",
            WeakStatus::CutLocus => "cut_locus",
            WeakStatus::Ambiguous => "ambiguous",
        })
    }
}

/// Splitting `U = U0 exp(-iX)` of an interacting evolution into its closest
/// free operator and an orthogonal interaction direction.
#[derive(Clone, Debug)]
pub struct WeakDecomposition {
    u0: FockOperator,
    free_h: HermitianMatrix,
    x: FockOperator,
    distance: f64,
    status: WeakStatus,
}

impl WeakDecomposition {
    /// Closest free evolution operator found.
    pub fn u0(&self) -> &FockOperator {
        &self.u0
    }

    /// Single-particle Hamiltonian generating `u0`.
    pub fn free_hamiltonian(&self) -> &HermitianMatrix {
        &self.free_h
    }

    /// Hermitian interaction direction, orthogonal to the free directions.
    pub fn x(&self) -> &FockOperator {
        &self.x
    }

    /// Geodesic distance from the input to `u0`.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn status(&self) -> WeakStatus {
        self.status
    }
}

/// Splits `u` as `U0 exp(-iX)` with `U0` the nearest free evolution, using
/// default search options.
///
/// The status records how trustworthy the splitting is: `weak` needs a
/// unique closest free operator and a retraction path that keeps it unique,
/// `cut_locus` marks competing feet, and `ambiguous` marks an extracted
/// direction that failed to be orthogonal to the free directions.
pub fn weak_decompose(u: &InteractingOp) -> Result<WeakDecomposition> {
    weak_decompose_with(u, &NearestFreeOpts::default())
}

/// `weak_decompose` with explicit search options.
pub fn weak_decompose_with(
    u: &InteractingOp,
    opts: &NearestFreeOpts,
) -> Result<WeakDecomposition> {
    let frame = FreeFrame::build(u.modes())?;
    let cands = nearest_free_candidates(u.matrix(), &frame, opts)?;
    let best = &cands[0];
    let mut status = WeakStatus::Weak;
    if cands.len() > 1 && cands[1].distance - best.distance <= DISTANCE_GAP_TOL {
        status = WeakStatus::CutLocus;
    }
    // X = i log(U0† U), with whatever free component the finite search left
    // behind projected out.
    let g = best.foot.adjoint() * u.matrix();
    let (w, phases) = unitary_eig(&g)?;
    let neg = DVector::from_iterator(phases.len(), phases.iter().map(|&p| Complex64::new(-p, 0.0)));
    let x_raw = hermitize(&(&w * CMat::from_diagonal(&neg) * w.adjoint()));
    let coeffs = frame.project(&x_raw);
    let free_norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let x = &x_raw - frame.assemble(&coeffs);
    if status == WeakStatus::Weak && free_norm > FREE_RESIDUAL_TOL {
        status = WeakStatus::Ambiguous;
    }
    if status == WeakStatus::Weak && !probe_path(&frame, best, &x, opts)? {
        status = WeakStatus::CutLocus;
    }
    if status == WeakStatus::Weak {
        let recon = &best.foot * exp_minus_i_herm(&x, 1.0)?;
        let residual = fro_dist(&recon, u.matrix());
        let tol = RECONSTRUCTION_TOL * (u.dim() as f64).sqrt();
        if residual > tol {
            return Err(Error::Internal(format!(
                "weak decomposition failed its reconstruction gate: residual {residual:.3e} over {tol:.3e}"
            )));
        }
    }
    Ok(WeakDecomposition {
        u0: FockOperator::new(&frame.space, best.foot.clone())?,
        free_h: HermitianMatrix::new_unchecked(best.h.clone()),
        x: FockOperator::new(&frame.space, x)?,
        distance: best.distance,
        status,
    })
}

/// Samples the retraction path and reruns a small nearest-free search at
/// each point, looking for evidence that the minimizing geodesic loses
/// uniqueness strictly inside the path. Evidence means either a second foot
/// within the distance gap or some foot strictly closer than the retraction
/// predicts.
fn probe_path(
    frame: &FreeFrame,
    best: &Candidate,
    x: &CMat,
    opts: &NearestFreeOpts,
) -> Result<bool> {
    let xnorm = x.norm();
    if xnorm <= 1.0e-9 {
        // Numerically free input: nothing to retract along.
        return Ok(true);
    }
    let (wx, lx) = hermitian_eig(x)?;
    let mut warm = best.w.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5DEE_CE66_D10B_5EF1);
    for k in 0..=PATH_SAMPLES {
        let t = k as f64 / PATH_SAMPLES as f64;
        let phase = DVector::from_iterator(
            lx.len(),
            lx.iter().map(|&e| Complex64::from_polar(1.0, -t * e)),
        );
        let ut = &best.foot * (&wx * CMat::from_diagonal(&phase) * wx.adjoint());
        // The foot of the whole path is the same free operator, so the warm
        // start is already critical wherever the path stays weak.
        let mut starts: Vec<CMat> = vec![warm.clone()];
        if let Ok((wu, pu)) = unitary_eig(&ut) {
            let neg =
                DVector::from_iterator(pu.len(), pu.iter().map(|&p| Complex64::new(-p, 0.0)));
            let x0 = &wu * CMat::from_diagonal(&neg) * wu.adjoint();
            let d0 = frame.assemble_sp(&frame.project(&x0));
            if let Ok(w0) = exp_minus_i_herm(&d0, 1.0) {
                starts.push(w0);
            }
        }
        if let Some(w0) = polar_unitary(&frame.single_particle(&ut)) {
            starts.push(w0);
        }
        let h = random_hermitian(frame.space.modes(), &mut rng);
        starts.push(exp_minus_i_herm(h.as_mat(), 1.0)?);
        let found: Vec<Candidate> = starts
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let salt = ((k * 8 + i) as u64)
                    .wrapping_mul(0xD1B5_4A32_D192_ED03)
                    .wrapping_add(3);
                let mut r = ChaCha8Rng::seed_from_u64(opts.seed ^ salt);
                descend(&ut, frame, s, PROBE_ITERS, opts.tol, &mut r)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        if found.is_empty() {
            continue;
        }
        let reps = cluster(found);
        let head = &reps[0];
        if fro_dist(&head.w, &best.w) <= FOOT_TOL {
            warm = head.w.clone();
        }
        if k == 0 || k == PATH_SAMPLES {
            // Endpoints are settled by the full search; only interior
            // failures mark the cut locus.
            continue;
        }
        let expected = t * xnorm;
        if head.distance < expected - DISTANCE_GAP_TOL {
            return Ok(false);
        }
        if reps.len() > 1 && reps[1].distance - head.distance <= DISTANCE_GAP_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Point `U0 exp(-itX)` on the retraction path of a weak decomposition.
pub fn retract_h(d: &WeakDecomposition, t: f64) -> Result<InteractingOp> {
    if d.status != WeakStatus::Weak {
        return Err(Error::Convention(format!(
            "retraction requires a weak decomposition, status is {}",
            d.status
        )));
    }
    if !t.is_finite() || !(0.0..=1.0).contains(&t) {
        return Err(Error::Convention(format!(
            "retraction time must lie in [0, 1], got {t}"
        )));
    }
    let e = exp_minus_i_herm(d.x.matrix(), t)?;
    let space = FockSpace::new(d.u0.modes())?;
    InteractingOp::new(FockOperator::new(&space, d.u0.matrix() * e)?)
}

/// `a2 a1 + a1† a2†`: Hermitian, even, swaps the vacuum with the doubly
/// occupied state at unit amplitude and kills the single-particle states.
/// The operator ordering makes the swap block real and positive.
fn pair_swap(space: &FockSpace) -> Result<FockOperator> {
    let a1 = annihilation(space, 1)?;
    let a2 = annihilation(space, 2)?;
    let lower = &a2 * &a1;
    let raised = lower.adjoint();
    Ok(&lower + &raised)
}

/// Two-mode reference path `t -> P exp(-i 2π t B)` where `P` is fermion
/// parity and `B` is the vacuum pair swap.
///
/// The path starts and ends at the free operator `P` and passes through
/// `-1` at `t = 1/2`, which sits on the cut locus of the free subgroup.
pub fn example_path(t: f64) -> Result<InteractingOp> {
    if !t.is_finite() || !(0.0..=1.0).contains(&t) {
        return Err(Error::Convention(format!(
            "path parameter must lie in [0, 1], got {t}"
        )));
    }
    let space = FockSpace::new(2)?;
    let b = pair_swap(&space)?;
    // B² projects onto the swap plane, so the exponential closes in three
    // terms.
    let b2 = b.matrix() * b.matrix();
    let phi = 2.0 * std::f64::consts::PI * t;
    let rot = ceye(4)
        + b2 * Complex64::new(phi.cos() - 1.0, 0.0)
        + b.matrix() * Complex64::new(0.0, -phi.sin());
    InteractingOp::new(FockOperator::new(&space, parity(&space).matrix() * rot)?)
}

/// How a lifted symmetry acts on a compatible evolution operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvolutionAction {
    /// The symmetry fixes the operator.
    Fix,
    /// The symmetry sends the operator to its adjoint.
    Inv,
}

/// Fock-space lift of a single-particle symmetry, acting on evolution
/// operators by possibly antilinear conjugation.
#[derive(Clone, Debug)]
pub struct LiftedInvolution {
    conjugator: FockOperator,
    antilinear: bool,
    action: InvolutionAction,
}

impl LiftedInvolution {
    pub fn new(
        conjugator: FockOperator,
        antilinear: bool,
        action: InvolutionAction,
    ) -> Result<Self> {
        let n = conjugator.dim();
        let residual = fro_dist(&(conjugator.matrix().adjoint() * conjugator.matrix()), &ceye(n));
        let tol = crate::mat::UNITARY_TOL * n as f64;
        if residual > tol {
            return Err(Error::Structure {
                context: "involution conjugator unitarity",
                residual,
                tol,
            });
        }
        Ok(Self {
            conjugator,
            antilinear,
            action,
        })
    }

    /// Multiplicative lift of a single-particle symmetry.
    ///
    /// Unitary and chiral symmetries lift to conjugation by the wedge power
    /// of their block; antiunitary ones compose the wedge power with
    /// entrywise conjugation. Charge conjugation additionally threads the
    /// Majorana string so that symmetric free evolutions are fixed exactly,
    /// with no stray phase.
    pub fn from_symmetry(space: &FockSpace, spec: &SymmetrySpec) -> Result<Self> {
        if spec.dim() != space.modes() {
            return Err(Error::Dimension(format!(
                "symmetry block is {0}x{0}, expected {1} modes",
                spec.dim(),
                space.modes()
            )));
        }
        let (conjugator, antilinear, action) = match spec.kind() {
            SymmetryKind::Regular => (
                wedge_power(space, spec.block())?,
                false,
                InvolutionAction::Fix,
            ),
            SymmetryKind::TimeReversal => (
                wedge_power(space, spec.block())?,
                true,
                InvolutionAction::Inv,
            ),
            SymmetryKind::Chiral => (
                wedge_power(space, spec.block())?,
                false,
                InvolutionAction::Inv,
            ),
            SymmetryKind::ChargeConjugation => {
                let w = wedge_power(space, &(-spec.block()))?;
                let m = majorana_string(space)?;
                (&w * &m, true, InvolutionAction::Fix)
            }
        };
        Self::new(conjugator, antilinear, action)
    }

    pub fn conjugator(&self) -> &FockOperator {
        &self.conjugator
    }

    pub fn antilinear(&self) -> bool {
        self.antilinear
    }

    pub fn action(&self) -> InvolutionAction {
        self.action
    }

    /// Image of an evolution operator under the lifted symmetry.
    pub fn apply(&self, u: &CMat) -> CMat {
        let arg = if self.antilinear {
            u.map(|z| z.conj())
        } else {
            u.clone()
        };
        self.conjugator.matrix() * arg * self.conjugator.matrix().adjoint()
    }
}

/// Product of the self-adjoint field operators `a_j + a_j†` over all modes.
fn majorana_string(space: &FockSpace) -> Result<FockOperator> {
    let mut m = FockOperator::identity(space);
    for j in 1..=space.modes() {
        let c = creation(space, j)?;
        let a = annihilation(space, j)?;
        let field = &c + &a;
        m = &m * &field;
    }
    Ok(m)
}

/// Largest deviation of the retraction path from compatibility with `tau`.
///
/// Samples `U0 exp(-itX)` on a uniform grid and measures how far each point
/// is from satisfying `tau(U) = U` (`Fix`) or `tau(U) = U†` (`Inv`). A
/// broken symmetry shows up as a large residual, not an error.
pub fn involution_compatibility_check(
    tau: &LiftedInvolution,
    d: &WeakDecomposition,
) -> Result<f64> {
    if d.status() != WeakStatus::Weak {
        return Err(Error::Convention(format!(
            "compatibility check requires a weak decomposition, status is {}",
            d.status
        )));
    }
    if tau.conjugator.dim() != d.u0.dim() {
        return Err(Error::Dimension(format!(
            "conjugator is {0}x{0}, expected {1}",
            tau.conjugator.dim(),
            d.u0.dim()
        )));
    }
    let (wx, lx) = hermitian_eig(d.x.matrix())?;
    let mut worst: f64 = 0.0;
    for k in 0..=PATH_SAMPLES {
        let t = k as f64 / PATH_SAMPLES as f64;
        let phase = DVector::from_iterator(
            lx.len(),
            lx.iter().map(|&e| Complex64::from_polar(1.0, -t * e)),
        );
        let ut = d.u0.matrix() * (&wx * CMat::from_diagonal(&phase) * wx.adjoint());
        let mapped = tau.apply(&ut);
        let target = match tau.action {
            InvolutionAction::Fix => ut.clone(),
            InvolutionAction::Inv => ut.adjoint(),
        };
        worst = worst.max(fro_dist(&mapped, &target));
    }
    Ok(worst)
}
