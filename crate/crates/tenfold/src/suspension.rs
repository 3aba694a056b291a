//! Finite truncations of the complex and real K-theory spectra.
//!
//! A spectrum level is a symmetry class at an explicit matrix size. Its
//! suspension map sends a time evolution of that class, together with a
//! circle parameter, to a time evolution of the next level's class: either
//! the group commutator of exp(-i/2 iota(H)) against a fixed geodesic of
//! unitaries, or the exponential of the included Hamiltonian conjugated
//! along the geodesic. Seven of the ten levels close with a further bracket
//! against the target class's own symmetry. Stabilization grows the
//! truncation without leaving a class, so evolutions at different sizes can
//! be compared.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::cartan::{cii_half_interleaving, class_membership, time_evolution, TimeEvolutionOp};
use crate::equivariant::{is_equivariant, FreeHamiltonian, EQUIVARIANCE_TOL};
use crate::mat::{czero, expm, fro_dist, j_mat, CMat, HermitianMatrix, UnitaryMatrix, C_I, C_ONE};
use crate::symmetry::{canonical_symmetries, CazClass, CazLabel, SymmetryKind};
use crate::{Error, Result};

/// Gate on the target-class membership residual of suspension outputs.
/// Failing it means a bug, not a bad input.
pub const LANDING_TOL: f64 = 1.0e-8;

/// Gate on the distance between the abstract suspension route and the
/// explicit closed forms.
pub const CLOSED_FORM_TOL: f64 = 1.0e-9;

/// Gate on the endpoint law: suspensions at theta = 0 and theta = 1 give
/// the identity.
pub const BASEPOINT_TOL: f64 = 1.0e-10;

/// Which K-theory spectrum a level belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spectrum {
    KU,
    KO,
}

impl Spectrum {
    /// Period of the level index: 2 for KU, 8 for KO.
    pub fn period(self) -> usize {
        match self {
            Spectrum::KU => 2,
            Spectrum::KO => 8,
        }
    }

    /// The symmetry class whose time evolutions realize a level.
    pub fn level_label(self, level: usize) -> CazLabel {
        match (self, level % self.period()) {
            (Spectrum::KU, 0) => CazLabel::AIII,
            (Spectrum::KU, _) => CazLabel::A,
            (Spectrum::KO, 0) => CazLabel::BDI,
            (Spectrum::KO, 1) => CazLabel::AI,
            (Spectrum::KO, 2) => CazLabel::CI,
            (Spectrum::KO, 3) => CazLabel::C,
            (Spectrum::KO, 4) => CazLabel::CII,
            (Spectrum::KO, 5) => CazLabel::AII,
            (Spectrum::KO, 6) => CazLabel::DIII,
            (Spectrum::KO, _) => CazLabel::D,
        }
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spectrum::KU => "KU",
            Spectrum::KO => "KO",
        })
    }
}

// How a level's suspension is assembled from the included Hamiltonian W and
// the geodesic s(theta).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SigmaShape {
    // Ad of the group commutator [exp(-i/2 W), s(theta)] alone.
    Commutator,
    // The commutator, then the bracket with the target's time reversal:
    // v T v^t T^dagger.
    CommutatorThenTimeReversal,
    // exp(-i s W s^dagger), then the bracket with the target's chiral
    // symmetry: v S v^dagger S^dagger.
    ConjugationThenChiral,
}

/// One level of a spectrum at an explicit finite truncation.
///
/// The profile (N, m) is the source class's dimension data; every
/// class-legal profile admits the level's geodesic, balanced or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrumLevel {
    spectrum: Spectrum,
    level: usize,
    cls: CazClass,
}

impl SpectrumLevel {
    /// The level index reduces mod the spectrum period.
    pub fn new(spectrum: Spectrum, level: usize, n: usize, m: Option<usize>) -> Result<Self> {
        let level = level % spectrum.period();
        let cls = CazClass::new(spectrum.level_label(level), n, m)?;
        Ok(Self {
            spectrum,
            level,
            cls,
        })
    }

    pub fn spectrum(&self) -> Spectrum {
        self.spectrum
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Source class of the level's suspension map.
    pub fn class(&self) -> &CazClass {
        &self.cls
    }

    pub fn n(&self) -> usize {
        self.cls.n()
    }

    pub fn m(&self) -> Option<usize> {
        self.cls.m()
    }

    /// The level this one suspends into: index + 1, size doubled at the
    /// levels whose inclusion embeds H into a 2N-dimensional space.
    pub fn target(&self) -> Result<SpectrumLevel> {
        let next = (self.level + 1) % (self.spectrum.period());
        let n = self.cls.n();
        let label = self.spectrum.level_label(next);
        let (tn, tm) = if self.doubles() {
            (2 * n, label.has_block_size().then_some(n))
        } else {
            (n, None)
        };
        SpectrumLevel::new(self.spectrum, next, tn, tm)
    }

    // Levels whose inclusion doubles the matrix size.
    fn doubles(&self) -> bool {
        matches!(
            (self.spectrum, self.level),
            (Spectrum::KU, 1) | (Spectrum::KO, 1 | 3 | 5 | 7)
        )
    }

    fn shape(&self) -> SigmaShape {
        match (self.spectrum, self.level) {
            (Spectrum::KU, 0) | (Spectrum::KO, 2 | 6) => SigmaShape::Commutator,
            (Spectrum::KO, 0 | 1 | 4 | 5) => SigmaShape::CommutatorThenTimeReversal,
            _ => SigmaShape::ConjugationThenChiral,
        }
    }
}

impl fmt::Display for SpectrumLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{} at {}", self.spectrum, self.level, self.cls)
    }
}

/// The structural geodesic of a level: a path of unitaries with s(0) = 1.
/// For the commutator-type levels the path stays inside the target class's
/// evolution space.
pub fn geodesic_s(level: &SpectrumLevel, theta: f64) -> Result<UnitaryMatrix> {
    if !theta.is_finite() {
        return Err(Error::Convention(
            "geodesic parameter theta must be finite".into(),
        ));
    }
    let n = level.n();
    let z = Complex64::from_polar(1.0, -PI * theta);
    let (c, s) = ((PI * theta).cos(), (PI * theta).sin());
    let mat = match (level.spectrum, level.level) {
        // Opposite phases on the two chiral blocks.
        (Spectrum::KU, 0) | (Spectrum::KO, 0) => {
            let m = level.m().expect("chiral source carries m");
            phase_split(&[(m, z), (n - m, z.conj())])
        }
        (Spectrum::KO, 2) => phase_split(&[(n / 2, z), (n / 2, z.conj())]),
        // Opposite phases on the quaternionic sub-halves of each chiral
        // block, written in the interleaved basis that the level-4
        // inclusion maps into: first the two unconjugated half-collections,
        // then the two conjugated ones.
        (Spectrum::KO, 4) => phase_split(&[(n / 2, z), (n / 2, z.conj())]),
        // exp(-i pi theta P) for the rank-N projector P mixing the two
        // halves: diagonal blocks (1+z)/2, off-diagonal blocks (1-z)/2.
        (Spectrum::KU, 1) | (Spectrum::KO, 3 | 7) => half_mix(n, z),
        // exp(-i pi theta F_2N) with F the half swap; F^2 = 1.
        (Spectrum::KO, 1) => {
            let mut out = czero(2 * n, 2 * n);
            for i in 0..n {
                out[(i, i)] = c.into();
                out[(n + i, n + i)] = c.into();
                out[(i, n + i)] = -C_I * s;
                out[(n + i, i)] = -C_I * s;
            }
            out
        }
        // cos 1 - i sin P for P = [[0, J_N], [-J_N, 0]]; P^2 = 1.
        (Spectrum::KO, 5) => {
            let j = j_mat(n)?;
            let mut out = czero(2 * n, 2 * n);
            for i in 0..2 * n {
                out[(i, i)] = c.into();
            }
            for i in 0..n {
                for k in 0..n {
                    let p = j[(i, k)];
                    out[(i, n + k)] = -C_I * s * p;
                    out[(n + i, k)] = C_I * s * p;
                }
            }
            out
        }
        // exp(pi theta J_N): a real rotation by pi theta in every
        // (j, N/2 + j) plane.
        (Spectrum::KO, 6) => {
            let h = n / 2;
            let mut out = czero(n, n);
            for i in 0..h {
                out[(i, i)] = c.into();
                out[(h + i, h + i)] = c.into();
                out[(i, h + i)] = s.into();
                out[(h + i, i)] = (-s).into();
            }
            out
        }
        _ => unreachable!("level indices are reduced mod the spectrum period"),
    };
    UnitaryMatrix::new(mat)
}

fn phase_split(blocks: &[(usize, Complex64)]) -> CMat {
    let n: usize = blocks.iter().map(|(k, _)| k).sum();
    let mut out = czero(n, n);
    let mut r = 0;
    for &(k, z) in blocks {
        for i in 0..k {
            out[(r + i, r + i)] = z;
        }
        r += k;
    }
    out
}

fn half_mix(n: usize, z: Complex64) -> CMat {
    let a = (C_ONE + z) * 0.5;
    let b = (C_ONE - z) * 0.5;
    let mut out = czero(2 * n, 2 * n);
    for i in 0..n {
        out[(i, i)] = a;
        out[(n + i, n + i)] = a;
        out[(i, n + i)] = b;
        out[(n + i, i)] = b;
    }
    out
}

/// Embed an equivariant Hamiltonian the way the level's suspension needs:
/// the identity on the size-preserving phase levels, a block embedding on
/// the doubling levels, and a basis rearrangement on KO 4 and KO 6.
pub fn inclusion_iota(level: &SpectrumLevel, h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let cls = level.class();
    let n = cls.n();
    let report = is_equivariant(h, cls, EQUIVARIANCE_TOL * n as f64)?;
    if !report.ok {
        return Err(Error::NotEquivariant {
            context: "suspension source Hamiltonian",
            residual: report.max_residual,
        });
    }
    let hm = h.as_mat();
    let out = match (level.spectrum, level.level) {
        (Spectrum::KU, 0) | (Spectrum::KO, 0 | 2) => hm.clone(),
        (Spectrum::KU, 1) | (Spectrum::KO, 3 | 7) => corner_embed(hm, 2 * n),
        // diag(H, -H); commutes with the CI target's charge conjugation
        // because H is real.
        (Spectrum::KO, 1) => {
            let mut out = corner_embed(hm, 2 * n);
            for i in 0..n {
                for j in 0..n {
                    out[(n + i, n + j)] = -hm[(i, j)];
                }
            }
            out
        }
        // Interleave the quaternionic sub-halves of the two chiral blocks.
        // Only the off-diagonal chiral form is defined here; equivariance
        // has already forced it, so reading just the off-diagonal block
        // discards nothing beyond the admission tolerance.
        (Spectrum::KO, 4) => {
            let m = cls.m().expect("CII carries m");
            let mut off = czero(n, n);
            for i in 0..m {
                for j in m..n {
                    off[(i, j)] = hm[(i, j)];
                    off[(j, i)] = hm[(i, j)].conj();
                }
            }
            let v = cii_half_interleaving(n, m);
            &v * off * v.adjoint()
        }
        // diag(H, -J H J^dagger); commutes with the DIII target's charge
        // conjugation because H is a J-quaternionic matrix.
        (Spectrum::KO, 5) => {
            let j = j_mat(n)?;
            let d = -(&j * hm * j.adjoint());
            let mut out = corner_embed(hm, 2 * n);
            for i in 0..n {
                for k in 0..n {
                    out[(n + i, n + k)] = d[(i, k)];
                }
            }
            out
        }
        // Split the antisymmetric off-diagonal block b into real and
        // imaginary parts: [[i Im b, -i Re b], [-i Re b, -i Im b]]. The
        // explicit antisymmetrization keeps the image exactly Hermitian
        // for inputs that pass equivariance only within tolerance.
        (Spectrum::KO, 6) => {
            let h2 = n / 2;
            let mut out = czero(n, n);
            for i in 0..h2 {
                for k in 0..h2 {
                    let b = (hm[(i, h2 + k)] - hm[(k, h2 + i)]) * 0.5;
                    out[(i, k)] = C_I * b.im;
                    out[(i, h2 + k)] = -C_I * b.re;
                    out[(h2 + i, k)] = -C_I * b.re;
                    out[(h2 + i, h2 + k)] = -C_I * b.im;
                }
            }
            out
        }
        _ => unreachable!("level indices are reduced mod the spectrum period"),
    };
    HermitianMatrix::new(out)
}

fn corner_embed(h: &CMat, big: usize) -> CMat {
    let n = h.nrows();
    let mut out = czero(big, big);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = h[(i, j)];
        }
    }
    out
}

/// A suspension evaluation point: a level, an equivariant Hamiltonian of
/// the level's class presented together with its time evolution, and the
/// circle parameter.
#[derive(Debug, Clone)]
pub struct SuspensionInput {
    level: SpectrumLevel,
    h: FreeHamiltonian,
    op: TimeEvolutionOp,
    theta: f64,
}

impl SuspensionInput {
    /// theta lives on the circle presented as [0, 1] with the endpoints
    /// identified.
    pub fn new(level: SpectrumLevel, h: FreeHamiltonian, theta: f64) -> Result<Self> {
        if h.class() != level.class() {
            return Err(Error::Convention(format!(
                "input Hamiltonian lies in {} but the level's source is {}",
                h.class(),
                level.class()
            )));
        }
        if !theta.is_finite() || !(0.0..=1.0).contains(&theta) {
            return Err(Error::Convention(format!(
                "circle parameter theta = {theta} outside [0, 1]"
            )));
        }
        let op = time_evolution(&h)?;
        Ok(Self {
            level,
            h,
            op,
            theta,
        })
    }

    pub fn level(&self) -> &SpectrumLevel {
        &self.level
    }

    pub fn hamiltonian(&self) -> &FreeHamiltonian {
        &self.h
    }

    pub fn op(&self) -> &TimeEvolutionOp {
        &self.op
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Apply the level's structural suspension map at the input's theta.
///
/// The output is certified to land in the target level's class; a landing
/// failure is reported as an internal error because no valid input can
/// produce one.
pub fn suspend(input: &SuspensionInput) -> Result<TimeEvolutionOp> {
    let out = suspension_matrix(input.level(), input.hamiltonian().hamiltonian(), input.theta)?;
    let target = input.level().target()?;
    let u = UnitaryMatrix::new(out)
        .map_err(|e| Error::Internal(format!("suspension output is not unitary: {e}")))?;
    let report = class_membership(&u, target.class(), LANDING_TOL)?;
    if !report.ok {
        return Err(Error::Internal(format!(
            "suspension output missed class {}: residual {:.3e}",
            target.class(),
            report.residual
        )));
    }
    TimeEvolutionOp::new(u, *target.class())
        .map_err(|e| Error::Internal(format!("suspension landing rejected: {e}")))
}

// The abstract route: the group commutator u s u^dagger s^dagger of
// u = exp(-i/2 iota(H)) with the geodesic, or exp(-i s iota(H) s^dagger),
// then the outer bracket where the level carries one.
fn suspension_matrix(level: &SpectrumLevel, h: &HermitianMatrix, theta: f64) -> Result<CMat> {
    let w = inclusion_iota(level, h)?;
    let s = geodesic_s(level, theta)?;
    let v = match level.shape() {
        SigmaShape::Commutator | SigmaShape::CommutatorThenTimeReversal => {
            let u = expm(&(w.as_mat() * Complex64::new(0.0, -0.5)))?;
            let ud = u.adjoint();
            &u * s.as_mat() * ud * s.as_mat().adjoint()
        }
        SigmaShape::ConjugationThenChiral => {
            let sw = s.as_mat() * w.as_mat() * s.as_mat().adjoint();
            expm(&(sw * -C_I))?
        }
    };
    outer_apply(level, v)
}

// The bracket of the suspension value against the target class's own
// symmetry: v T v^t T^dagger for an (antilinear) time reversal, and
// v S v^dagger S^dagger for a chiral symmetry.
fn outer_apply(level: &SpectrumLevel, v: CMat) -> Result<CMat> {
    let target = level.target()?;
    Ok(match level.shape() {
        SigmaShape::Commutator => v,
        SigmaShape::CommutatorThenTimeReversal => {
            let t = outer_block(target.class(), SymmetryKind::TimeReversal)?;
            &v * &t * v.transpose() * t.adjoint()
        }
        SigmaShape::ConjugationThenChiral => {
            let s = outer_block(target.class(), SymmetryKind::Chiral)?;
            &v * &s * v.adjoint() * s.adjoint()
        }
    })
}

fn outer_block(target: &CazClass, kind: SymmetryKind) -> Result<CMat> {
    canonical_symmetries(target)?
        .into_iter()
        .find(|s| s.kind() == kind)
        .map(|s| s.block().clone())
        .ok_or_else(|| {
            Error::Internal(format!(
                "target class {target} carries no {kind:?} symmetry for the outer bracket"
            ))
        })
}

/// Frobenius distance between the abstract suspension route and the
/// explicit closed form of the same level.
///
/// The closed forms are built directly from the blocks of H and
/// trigonometric functions of theta, so the two routes share no matrix
/// algebra beyond the exponential.
pub fn verify_suspension_identity(
    level: &SpectrumLevel,
    h: &HermitianMatrix,
    theta: f64,
) -> Result<f64> {
    let abstract_route = suspension_matrix(level, h, theta)?;
    let closed = closed_form_matrix(level, h, theta)?;
    Ok(fro_dist(&abstract_route, &closed))
}

// Explicit closed forms, one per level. Phase levels multiply the
// off-diagonal blocks of H by e^{-+ i 2 pi theta}; the doubling levels have
// displayed trigonometric block matrices.
fn closed_form_matrix(level: &SpectrumLevel, h: &HermitianMatrix, theta: f64) -> Result<CMat> {
    let cls = level.class();
    let n = cls.n();
    let hm = h.as_mat();
    let z2 = Complex64::from_polar(1.0, -2.0 * PI * theta);
    let c2 = (2.0 * PI * theta).cos();
    let s2 = (2.0 * PI * theta).sin();
    let v = match (level.spectrum, level.level) {
        // exp(-i/2 H) exp(i/2 H_theta), H_theta the phase-twisted H.
        (Spectrum::KU, 0) | (Spectrum::KO, 0) => {
            let m = cls.m().expect("chiral source carries m");
            phase_twist_product(hm, m, z2)?
        }
        (Spectrum::KO, 2) => phase_twist_product(hm, n / 2, z2)?,
        // exp(-i W_theta) with W_theta interpolating diag(H, 0) to
        // diag(0, H); the off-diagonal entries are -(i/2) sin(pi theta) H
        // above and its adjoint below.
        (Spectrum::KU, 1) | (Spectrum::KO, 3 | 7) => {
            let cc = (PI * theta / 2.0).cos().powi(2);
            let ss = (PI * theta / 2.0).sin().powi(2);
            let sp = (PI * theta).sin();
            let mut w = czero(2 * n, 2 * n);
            for i in 0..n {
                for j in 0..n {
                    let e = hm[(i, j)];
                    w[(i, j)] = e * cc;
                    w[(n + i, n + j)] = e * ss;
                    w[(i, n + j)] = -C_I * 0.5 * sp * e;
                    w[(n + i, j)] = C_I * 0.5 * sp * e;
                }
            }
            expm(&(w * -C_I))?
        }
        // exp(-i/2 diag(H, -H)) exp(i/2 [[cos H, i sin H], [-i sin H, -cos H]]).
        (Spectrum::KO, 1) => {
            let mut first = czero(2 * n, 2 * n);
            let mut second = czero(2 * n, 2 * n);
            for i in 0..n {
                for j in 0..n {
                    let e = hm[(i, j)];
                    first[(i, j)] = e;
                    first[(n + i, n + j)] = -e;
                    second[(i, j)] = e * c2;
                    second[(n + i, n + j)] = -e * c2;
                    second[(i, n + j)] = C_I * s2 * e;
                    second[(n + i, j)] = -C_I * s2 * e;
                }
            }
            expm(&(first * Complex64::new(0.0, -0.5)))?
                * expm(&(second * Complex64::new(0.0, 0.5)))?
        }
        // The interleaved chiral blocks of H with phases on the b1 blocks
        // only: the quaternionic-split geodesic leaves the b0 couplings
        // untwisted.
        (Spectrum::KO, 4) => {
            let m = cls.m().expect("CII carries m");
            let (p, q) = (m / 2, (n - m) / 2);
            let b0 = |i: usize, k: usize| hm[(i, m + k)];
            let b1 = |i: usize, k: usize| hm[(i, m + q + k)];
            // Interleaved row offsets: heights p, q, p, q.
            let (r0, r1, r2, r3) = (0, p, p + q, 2 * p + q);
            let mut wd = czero(n, n);
            let mut wp = czero(n, n);
            for i in 0..p {
                for k in 0..q {
                    let (e0, e1) = (C_I * b0(i, k), C_I * b1(i, k));
                    wd[(r0 + i, r1 + k)] = e0;
                    wd[(r1 + k, r0 + i)] = e0.conj();
                    wd[(r2 + i, r3 + k)] = -e0.conj();
                    wd[(r3 + k, r2 + i)] = -e0;
                    wd[(r0 + i, r3 + k)] = e1;
                    wd[(r3 + k, r0 + i)] = e1.conj();
                    wd[(r1 + k, r2 + i)] = e1;
                    wd[(r2 + i, r1 + k)] = e1.conj();
                    wp[(r0 + i, r1 + k)] = e0;
                    wp[(r1 + k, r0 + i)] = e0.conj();
                    wp[(r2 + i, r3 + k)] = -e0.conj();
                    wp[(r3 + k, r2 + i)] = -e0;
                    wp[(r0 + i, r3 + k)] = z2 * e1;
                    wp[(r3 + k, r0 + i)] = (z2 * e1).conj();
                    wp[(r1 + k, r2 + i)] = z2 * e1;
                    wp[(r2 + i, r1 + k)] = (z2 * e1).conj();
                }
            }
            expm(&(wd * Complex64::new(0.0, -0.5)))? * expm(&(wp * Complex64::new(0.0, 0.5)))?
        }
        // exp(-i/2 diag(A, D)) exp(i/2 [[cos A, i sin A J], [i sin J A, cos D]])
        // written out in the N/2 blocks a, b of the source AII Hamiltonian.
        (Spectrum::KO, 5) => {
            let h2 = n / 2;
            let a = |i: usize, k: usize| hm[(i, k)];
            let b = |i: usize, k: usize| hm[(i, h2 + k)];
            let mut first = czero(2 * n, 2 * n);
            let mut second = czero(2 * n, 2 * n);
            for i in 0..h2 {
                for k in 0..h2 {
                    let (av, bv) = (a(i, k), b(i, k));
                    // diag(A, D), A = [[a, b], [-b*, a*]], D = [[-a*, -b*], [b, -a]].
                    first[(i, k)] = av;
                    first[(i, h2 + k)] = bv;
                    first[(h2 + i, k)] = -bv.conj();
                    first[(h2 + i, h2 + k)] = av.conj();
                    first[(n + i, n + k)] = -av.conj();
                    first[(n + i, n + h2 + k)] = -bv.conj();
                    first[(n + h2 + i, n + k)] = bv;
                    first[(n + h2 + i, n + h2 + k)] = -av;
                    // cos(2 pi theta) on the diagonal blocks.
                    second[(i, k)] = av * c2;
                    second[(i, h2 + k)] = bv * c2;
                    second[(h2 + i, k)] = -bv.conj() * c2;
                    second[(h2 + i, h2 + k)] = av.conj() * c2;
                    second[(n + i, n + k)] = -av.conj() * c2;
                    second[(n + i, n + h2 + k)] = -bv.conj() * c2;
                    second[(n + h2 + i, n + k)] = bv * c2;
                    second[(n + h2 + i, n + h2 + k)] = -av * c2;
                    // i sin(2 pi theta) A J above, i sin(2 pi theta) J A below.
                    second[(i, n + k)] = -C_I * s2 * bv;
                    second[(i, n + h2 + k)] = C_I * s2 * av;
                    second[(h2 + i, n + k)] = -C_I * s2 * av.conj();
                    second[(h2 + i, n + h2 + k)] = -C_I * s2 * bv.conj();
                    second[(n + i, k)] = -C_I * s2 * bv.conj();
                    second[(n + i, h2 + k)] = C_I * s2 * av.conj();
                    second[(n + h2 + i, k)] = -C_I * s2 * av;
                    second[(n + h2 + i, h2 + k)] = -C_I * s2 * bv;
                }
            }
            expm(&(first * Complex64::new(0.0, -0.5)))?
                * expm(&(second * Complex64::new(0.0, 0.5)))?
        }
        // Real rotations built from Re b and Im b alone.
        (Spectrum::KO, 6) => {
            let h2 = n / 2;
            let mut first = czero(n, n);
            let mut second = czero(n, n);
            for i in 0..h2 {
                for k in 0..h2 {
                    let b = (hm[(i, h2 + k)] - hm[(k, h2 + i)]) * 0.5;
                    let (re, im) = (b.re, b.im);
                    first[(i, k)] = (0.5 * im).into();
                    first[(i, h2 + k)] = (-0.5 * re).into();
                    first[(h2 + i, k)] = (-0.5 * re).into();
                    first[(h2 + i, h2 + k)] = (-0.5 * im).into();
                    let d = -s2 * re + c2 * im;
                    let o = -c2 * re - s2 * im;
                    second[(i, k)] = (-0.5 * d).into();
                    second[(i, h2 + k)] = (-0.5 * o).into();
                    second[(h2 + i, k)] = (-0.5 * o).into();
                    second[(h2 + i, h2 + k)] = (0.5 * d).into();
                }
            }
            expm(&first)? * expm(&second)?
        }
        _ => unreachable!("level indices are reduced mod the spectrum period"),
    };
    outer_apply(level, v)
}

// exp(-i/2 H) exp(i/2 H_theta) where H_theta carries the phase z2 on the
// upper chiral block and its conjugate below.
fn phase_twist_product(hm: &CMat, m: usize, z2: Complex64) -> Result<CMat> {
    let n = hm.nrows();
    let mut twisted = czero(n, n);
    for i in 0..m {
        for j in m..n {
            twisted[(i, j)] = z2 * hm[(i, j)];
            twisted[(j, i)] = (z2 * hm[(i, j)]).conj();
        }
    }
    Ok(expm(&(hm * Complex64::new(0.0, -0.5)))? * expm(&(twisted * Complex64::new(0.0, 0.5)))?)
}

/// Grow a time evolution to a larger truncation of the same class by
/// inserting identity basis vectors at the class's legal slots: appended
/// for the single-block steps, at the end of the first chiral block for the
/// m-growing steps, and in matching half pairs for the classes whose basis
/// is paired by their symmetry.
pub fn stabilize(
    op: &TimeEvolutionOp,
    target_n: usize,
    target_m: Option<usize>,
) -> Result<TimeEvolutionOp> {
    let cls = *op.class();
    let target = CazClass::new(cls.label(), target_n, target_m)?;
    let n = cls.n();
    if target_n < n {
        return Err(Error::Profile(format!(
            "cannot stabilize {cls} down to N = {target_n}"
        )));
    }
    let mut u = op.matrix().clone();
    match cls.label() {
        CazLabel::A | CazLabel::AI | CazLabel::D => {
            for _ in n..target_n {
                u = insert_identity_slot(&u, u.nrows());
            }
        }
        CazLabel::AIII | CazLabel::BDI => {
            let m0 = cls.m().expect("chiral class carries m");
            let tm = target.m().expect("chiral class carries m");
            if tm < m0 || target_n - tm < n - m0 {
                return Err(Error::Profile(format!(
                    "stabilizing {cls} to (N = {target_n}, m = {tm}) shrinks a chiral block"
                )));
            }
            let mut mm = m0;
            for _ in m0..tm {
                u = insert_identity_slot(&u, mm);
                mm += 1;
            }
            for _ in 0..(target_n - n) - (tm - m0) {
                u = insert_identity_slot(&u, u.nrows());
            }
        }
        // Paired basis: one slot at the end of each half, keeping the
        // pairing of index i with N/2 + i.
        CazLabel::C | CazLabel::AII | CazLabel::CI | CazLabel::DIII => {
            if (target_n - n) % 2 != 0 {
                return Err(Error::Profile(format!(
                    "class {cls} steps by paired slots; N = {n} -> {target_n} is odd"
                )));
            }
            let mut cur = n;
            for _ in 0..(target_n - n) / 2 {
                u = insert_identity_slot(&u, cur / 2);
                u = insert_identity_slot(&u, cur + 1);
                cur += 2;
            }
        }
        // Each chiral block is itself paired, so either block grows by a
        // half pair: first-block pairs first, then second-block pairs.
        CazLabel::CII => {
            let m0 = cls.m().expect("CII carries m");
            let tm = target.m().expect("CII carries m");
            if tm < m0 || target_n - tm < n - m0 {
                return Err(Error::Profile(format!(
                    "stabilizing {cls} to (N = {target_n}, m = {tm}) shrinks a chiral block"
                )));
            }
            let (mut cn, mut cm) = (n, m0);
            for _ in 0..(tm - m0) / 2 {
                u = insert_identity_slot(&u, cm / 2);
                u = insert_identity_slot(&u, cm + 1);
                cm += 2;
                cn += 2;
            }
            for _ in 0..((target_n - tm) - (n - m0)) / 2 {
                let q = (cn - cm) / 2;
                u = insert_identity_slot(&u, cm + q);
                u = insert_identity_slot(&u, cn + 1);
                cn += 2;
            }
        }
    }
    let u = UnitaryMatrix::new(u)
        .map_err(|e| Error::Internal(format!("stabilization broke unitarity: {e}")))?;
    TimeEvolutionOp::new(u, target)
        .map_err(|e| Error::Internal(format!("stabilization broke membership: {e}")))
}

// The (n+1) x (n+1) matrix acting as u away from slot p and as the
// identity on the new basis vector at p.
fn insert_identity_slot(u: &CMat, p: usize) -> CMat {
    let n = u.nrows();
    let mut out = czero(n + 1, n + 1);
    for i in 0..n {
        let ii = i + usize::from(i >= p);
        for j in 0..n {
            let jj = j + usize::from(j >= p);
            out[(ii, jj)] = u[(i, j)];
        }
    }
    out[(p, p)] = C_ONE;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariant::sample_equivariant;
    use crate::mat::{ceye, C_ZERO};

    fn lvl(spectrum: Spectrum, level: usize, n: usize, m: Option<usize>) -> SpectrumLevel {
        SpectrumLevel::new(spectrum, level, n, m).unwrap()
    }

    fn smallest_levels() -> Vec<SpectrumLevel> {
        vec![
            lvl(Spectrum::KU, 0, 4, Some(2)),
            lvl(Spectrum::KU, 1, 3, None),
            lvl(Spectrum::KO, 0, 4, Some(2)),
            lvl(Spectrum::KO, 1, 3, None),
            lvl(Spectrum::KO, 2, 4, None),
            lvl(Spectrum::KO, 3, 4, None),
            lvl(Spectrum::KO, 4, 4, Some(2)),
            lvl(Spectrum::KO, 5, 4, None),
            lvl(Spectrum::KO, 6, 4, None),
            lvl(Spectrum::KO, 7, 3, None),
        ]
    }

    fn input(level: &SpectrumLevel, seed: u64, theta: f64) -> SuspensionInput {
        let h = sample_equivariant(level.class(), seed).unwrap();
        SuspensionInput::new(*level, h, theta).unwrap()
    }

    #[test]
    fn level_classes_and_targets() {
        let expect = [
            (Spectrum::KU, 0, CazLabel::AIII, CazLabel::A, 4, None),
            (Spectrum::KU, 1, CazLabel::A, CazLabel::AIII, 6, Some(3)),
            (Spectrum::KO, 0, CazLabel::BDI, CazLabel::AI, 4, None),
            (Spectrum::KO, 1, CazLabel::AI, CazLabel::CI, 6, None),
            (Spectrum::KO, 2, CazLabel::CI, CazLabel::C, 4, None),
            (Spectrum::KO, 3, CazLabel::C, CazLabel::CII, 8, Some(4)),
            (Spectrum::KO, 4, CazLabel::CII, CazLabel::AII, 4, None),
            (Spectrum::KO, 5, CazLabel::AII, CazLabel::DIII, 8, None),
            (Spectrum::KO, 6, CazLabel::DIII, CazLabel::D, 4, None),
            (Spectrum::KO, 7, CazLabel::D, CazLabel::BDI, 6, Some(3)),
        ];
        for (level, (sp, k, src, tgt, tn, tm)) in smallest_levels().iter().zip(expect) {
            assert_eq!(level.spectrum(), sp);
            assert_eq!(level.level(), k);
            assert_eq!(level.class().label(), src);
            let t = level.target().unwrap();
            assert_eq!(t.class().label(), tgt, "target of {level}");
            assert_eq!(t.n(), tn);
            assert_eq!(t.m(), tm);
        }
        // Indices reduce mod the period.
        assert_eq!(
            SpectrumLevel::new(Spectrum::KO, 14, 4, None).unwrap().level(),
            6
        );
        assert_eq!(
            SpectrumLevel::new(Spectrum::KU, 2, 4, Some(2)).unwrap().level(),
            0
        );
    }

    #[test]
    fn geodesic_examples() {
        for level in smallest_levels() {
            let s0 = geodesic_s(&level, 0.0).unwrap();
            assert!(fro_dist(s0.as_mat(), &ceye(s0.dim())) <= 1e-14, "{level}");
        }
        let s = geodesic_s(&lvl(Spectrum::KU, 0, 2, Some(1)), 0.5).unwrap();
        let mut want = czero(2, 2);
        want[(0, 0)] = -C_I;
        want[(1, 1)] = C_I;
        assert!(fro_dist(s.as_mat(), &want) <= 1e-15);

        let s = geodesic_s(&lvl(Spectrum::KO, 6, 2, None), 0.5).unwrap();
        let mut want = czero(2, 2);
        want[(0, 1)] = C_ONE;
        want[(1, 0)] = -C_ONE;
        assert!(fro_dist(s.as_mat(), &want) <= 1e-15);

        assert!(geodesic_s(&lvl(Spectrum::KU, 0, 4, Some(2)), f64::NAN).is_err());
    }

    #[test]
    fn commutator_geodesics_stay_in_target_class() {
        for level in smallest_levels() {
            if level.shape() == SigmaShape::ConjugationThenChiral {
                continue;
            }
            // The level-4 geodesic is presented in its inclusion's
            // interleaved basis, where the target's quaternionic pairing
            // reads it as a phase pair rather than a member; its role is
            // pinned by the closed-form and landing tests instead.
            if (level.spectrum(), level.level()) == (Spectrum::KO, 4) {
                continue;
            }
            let target = level.target().unwrap();
            for theta in [0.25, 0.6] {
                let s = geodesic_s(&level, theta).unwrap();
                let report = class_membership(&s, target.class(), 1e-9).unwrap();
                assert!(
                    report.ok,
                    "{level} geodesic left {} at theta = {theta}: {:.3e}",
                    target.class(),
                    report.residual
                );
            }
        }
    }

    #[test]
    fn inclusion_block_forms() {
        let a3 = lvl(Spectrum::KU, 1, 3, None);
        let h = sample_equivariant(a3.class(), 11).unwrap();
        let w = inclusion_iota(&a3, h.hamiltonian()).unwrap();
        assert_eq!(w.dim(), 6);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(w.as_mat()[(i, j)], h.matrix()[(i, j)]);
                assert_eq!(w.as_mat()[(3 + i, 3 + j)], C_ZERO);
            }
        }

        let ai3 = lvl(Spectrum::KO, 1, 3, None);
        let h = sample_equivariant(ai3.class(), 12).unwrap();
        let w = inclusion_iota(&ai3, h.hamiltonian()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(w.as_mat()[(3 + i, 3 + j)], -h.matrix()[(i, j)]);
                assert_eq!(w.as_mat()[(i, 3 + j)], C_ZERO);
            }
        }

        // The real/imaginary split on a hand-built DIII Hamiltonian.
        let b = Complex64::new(1.0, 2.0);
        let mut hm = czero(4, 4);
        hm[(0, 3)] = b;
        hm[(1, 2)] = -b;
        hm[(3, 0)] = b.conj();
        hm[(2, 1)] = -b.conj();
        let h = HermitianMatrix::new(hm).unwrap();
        let diii = lvl(Spectrum::KO, 6, 4, None);
        let w = inclusion_iota(&diii, &h).unwrap();
        assert_eq!(w.as_mat()[(0, 1)], C_I * b.im);
        assert_eq!(w.as_mat()[(0, 3)], -C_I * b.re);
        assert_eq!(w.as_mat()[(2, 1)], -C_I * b.re);
        assert_eq!(w.as_mat()[(2, 3)], -C_I * b.im);

        // Non-equivariant sources are rejected.
        let mut bad = czero(4, 4);
        bad[(0, 0)] = C_ONE;
        let bad = HermitianMatrix::new(bad).unwrap();
        let ku0 = lvl(Spectrum::KU, 0, 4, Some(2));
        assert!(matches!(
            inclusion_iota(&ku0, &bad),
            Err(Error::NotEquivariant { .. })
        ));
    }

    #[test]
    fn inclusions_commute_with_target_charge_conjugation() {
        for (level, seed) in [
            (lvl(Spectrum::KO, 1, 3, None), 21u64),
            (lvl(Spectrum::KO, 3, 4, None), 22),
            (lvl(Spectrum::KO, 5, 4, None), 23),
        ] {
            let h = sample_equivariant(level.class(), seed).unwrap();
            let w = inclusion_iota(&level, h.hamiltonian()).unwrap();
            let target = level.target().unwrap();
            let c = canonical_symmetries(target.class())
                .unwrap()
                .into_iter()
                .find(|s| s.kind() == SymmetryKind::ChargeConjugation)
                .expect("targets of these levels carry C")
                .block()
                .clone();
            let img = &c * w.as_mat().conjugate() * c.adjoint();
            let residual = fro_dist(&img, &(-w.as_mat()));
            assert!(residual <= 1e-12, "{level}: residual {residual:.3e}");
        }
    }

    #[test]
    fn suspension_lands_in_target_class() {
        for level in smallest_levels() {
            let target = level.target().unwrap();
            for seed in 0..4 {
                for theta in [0.3, 0.7] {
                    let out = suspend(&input(&level, seed, theta)).unwrap();
                    assert_eq!(out.class(), target.class(), "{level}");
                }
            }
        }
    }

    #[test]
    fn closed_forms_match_abstract_route() {
        for level in smallest_levels() {
            for seed in 0..3 {
                let h = sample_equivariant(level.class(), seed).unwrap();
                for theta in [0.15, 0.5, 0.85] {
                    let residual =
                        verify_suspension_identity(&level, h.hamiltonian(), theta).unwrap();
                    assert!(
                        residual <= CLOSED_FORM_TOL,
                        "{level} theta = {theta}: {residual:.3e}"
                    );
                }
            }
        }
    }

    #[test]
    fn endpoints_are_basepoints() {
        // Commutator levels close because s(1) has equal opposite phases on
        // the blocks H couples; conjugation levels close because the inner
        // factor is block diagonal at both endpoints, so the outer chiral
        // bracket cancels it. Both endpoint values are measured, and all
        // are the identity.
        for level in smallest_levels() {
            for theta in [0.0, 1.0] {
                let out = suspend(&input(&level, 5, theta)).unwrap();
                let d = fro_dist(out.matrix(), &ceye(out.matrix().nrows()));
                assert!(d <= BASEPOINT_TOL, "{level} theta = {theta}: {d:.3e}");
            }
        }
    }

    #[test]
    fn zero_hamiltonian_suspends_to_identity() {
        for level in smallest_levels() {
            let n = level.n();
            let h = FreeHamiltonian::new(HermitianMatrix::new(czero(n, n)).unwrap(), *level.class())
                .unwrap();
            let out = suspend(&SuspensionInput::new(level, h, 0.37).unwrap()).unwrap();
            let d = fro_dist(out.matrix(), &ceye(out.matrix().nrows()));
            assert!(d <= BASEPOINT_TOL, "{level}: {d:.3e}");
        }
    }

    #[test]
    fn explicit_phase_twist_example() {
        // Smallest chiral profile: H = [[0, b], [conj b, 0]].
        let level = lvl(Spectrum::KU, 0, 2, Some(1));
        let b = Complex64::new(0.7, -0.3);
        let mut hm = czero(2, 2);
        hm[(0, 1)] = b;
        hm[(1, 0)] = b.conj();
        let h = FreeHamiltonian::new(HermitianMatrix::new(hm.clone()).unwrap(), *level.class())
            .unwrap();
        let theta = 0.35;
        let out = suspend(&SuspensionInput::new(level, h, theta).unwrap()).unwrap();

        let z2 = Complex64::from_polar(1.0, -2.0 * PI * theta);
        let mut twisted = czero(2, 2);
        twisted[(0, 1)] = z2 * b;
        twisted[(1, 0)] = (z2 * b).conj();
        let want = expm(&(hm * Complex64::new(0.0, -0.5))).unwrap()
            * expm(&(twisted * Complex64::new(0.0, 0.5))).unwrap();
        assert!(fro_dist(out.matrix(), &want) <= 1e-12);
    }

    #[test]
    fn input_validation() {
        let level = lvl(Spectrum::KU, 0, 4, Some(2));
        let h = sample_equivariant(level.class(), 3).unwrap();
        assert!(matches!(
            SuspensionInput::new(level, h.clone(), 1.5),
            Err(Error::Convention(_))
        ));
        assert!(matches!(
            SuspensionInput::new(level, h, f64::NAN),
            Err(Error::Convention(_))
        ));
        let wrong = sample_equivariant(&CazClass::new(CazLabel::A, 4, None).unwrap(), 3).unwrap();
        assert!(matches!(
            SuspensionInput::new(level, wrong, 0.5),
            Err(Error::Convention(_))
        ));
    }

    #[test]
    fn stabilize_identity_examples() {
        let a = CazClass::new(CazLabel::A, 3, None).unwrap();
        let op = TimeEvolutionOp::new(UnitaryMatrix::new(ceye(3)).unwrap(), a).unwrap();
        let up = stabilize(&op, 5, None).unwrap();
        assert!(fro_dist(up.matrix(), &ceye(5)) == 0.0);

        let aiii = CazClass::new(CazLabel::AIII, 4, Some(2)).unwrap();
        let op = TimeEvolutionOp::new(UnitaryMatrix::new(ceye(4)).unwrap(), aiii).unwrap();
        let up = stabilize(&op, 5, Some(3)).unwrap();
        assert!(fro_dist(up.matrix(), &ceye(5)) == 0.0);
    }

    #[test]
    fn stabilize_preserves_membership() {
        let cases = [
            (CazClass::new(CazLabel::A, 3, None).unwrap(), 5, None),
            (CazClass::new(CazLabel::AI, 3, None).unwrap(), 4, None),
            (CazClass::new(CazLabel::D, 3, None).unwrap(), 5, None),
            (CazClass::new(CazLabel::AIII, 4, Some(2)).unwrap(), 7, Some(4)),
            (CazClass::new(CazLabel::BDI, 4, Some(2)).unwrap(), 6, Some(3)),
            (CazClass::new(CazLabel::C, 4, None).unwrap(), 8, None),
            (CazClass::new(CazLabel::AII, 4, None).unwrap(), 6, None),
            (CazClass::new(CazLabel::CI, 4, None).unwrap(), 8, None),
            (CazClass::new(CazLabel::DIII, 4, None).unwrap(), 6, None),
            (CazClass::new(CazLabel::CII, 4, Some(2)).unwrap(), 8, Some(4)),
        ];
        for (cls, tn, tm) in cases {
            let h = sample_equivariant(&cls, 9).unwrap();
            let op = time_evolution(&h).unwrap();
            let up = stabilize(&op, tn, tm).unwrap();
            assert_eq!(up.class().n(), tn);
            assert_eq!(up.class().m(), tm);
            // Entries ahead of any insertion slot are untouched.
            assert_eq!(up.matrix()[(0, 0)], op.matrix()[(0, 0)]);
        }
    }

    #[test]
    fn stabilize_rejects_illegal_steps() {
        let c = CazClass::new(CazLabel::C, 4, None).unwrap();
        let op = TimeEvolutionOp::new(UnitaryMatrix::new(ceye(4)).unwrap(), c).unwrap();
        assert!(stabilize(&op, 2, None).is_err());
        assert!(stabilize(&op, 5, None).is_err());

        let aiii = CazClass::new(CazLabel::AIII, 4, Some(2)).unwrap();
        let op = TimeEvolutionOp::new(UnitaryMatrix::new(ceye(4)).unwrap(), aiii).unwrap();
        assert!(matches!(stabilize(&op, 4, Some(1)), Err(Error::Profile(_))));
        // Growing m by 1 while holding N shrinks the second block.
        assert!(matches!(stabilize(&op, 4, Some(3)), Err(Error::Profile(_))));
    }

    #[test]
    fn stabilization_commutes_with_suspension() {
        // Appending an identity slot before or after the level-0 complex
        // suspension gives the same matrix: the appended slot rides along
        // untouched in the second chiral block.
        for seed in 0..3 {
            for theta in [0.3, 0.8] {
                let small = lvl(Spectrum::KU, 0, 4, Some(2));
                let h = sample_equivariant(small.class(), seed).unwrap();

                let mut h5 = czero(5, 5);
                for i in 0..4 {
                    for j in 0..4 {
                        h5[(i, j)] = h.matrix()[(i, j)];
                    }
                }
                let big = lvl(Spectrum::KU, 0, 5, Some(2));
                let h5 = FreeHamiltonian::new(HermitianMatrix::new(h5).unwrap(), *big.class())
                    .unwrap();
                let suspended_after = suspend(&SuspensionInput::new(big, h5, theta).unwrap())
                    .unwrap();

                let suspended_first = suspend(&SuspensionInput::new(small, h, theta).unwrap())
                    .unwrap();
                let stabilized = stabilize(&suspended_first, 5, None).unwrap();

                let d = fro_dist(suspended_after.matrix(), stabilized.matrix());
                assert!(d <= 1e-9, "seed {seed} theta {theta}: {d:.3e}");
            }
        }
    }
}
