//! Cartan involutions on the unitary group and the symmetric spaces of
//! class time evolutions.
//!
//! Each symmetry induces an involutive automorphism of U(N): a chiral S
//! gives Sigma(U) = SUS†, a charge conjugation C gives Xi(U) = CU*C†, and
//! a time reversal T gives Theta(U) = TU*T†. Equivariant time evolutions
//! are Xi-fixed (linear C) and Sigma/Theta-inverted (antilinear S, T), so
//! each class carves a compact symmetric space out of U(N). This module
//! provides the involutions, fixed and inverted membership, the Cartan
//! embedding u -> u tau(u)† and its inverse, geodesic inversion, the
//! explicit block patterns of each class's evolution space, and the
//! isomorphisms of the fixed subgroups onto standard matrix groups.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equivariant::FreeHamiltonian;
use crate::error::{Error, Result};
use crate::mat::{
    czero, expm, fro_dist, j_mat, polar_unitary, random_hermitian, unitary_sqrt, CMat,
    UnitaryMatrix, C_I, C_ONE,
};
use crate::symmetry::{canonical_symmetries, CazClass, CazLabel, SymmetryKind, SymmetrySpec};

/// Default tolerance for class-membership residuals (already normalized by
/// dimension, see [`class_membership`]).
pub const MEMBERSHIP_TOL: f64 = 1.0e-9;

// Gate for inputs that must lie in an Inv or Fix set (scaled by N).
const SET_GATE_TOL: f64 = 1.0e-8;

// Internal consistency bound on the unembed round trip (scaled by N).
const EMBED_VERIFY_TOL: f64 = 1.0e-8;

// Residual bound on fix_isomorphism images (scaled by N).
const IMAGE_TOL: f64 = 1.0e-9;

/// Which involution a symmetry induces on the unitary group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvolutionKind {
    /// Xi(U) = CU*C†, from a charge conjugation.
    Xi,
    /// Sigma(U) = SUS†, from a chiral symmetry.
    Sigma,
    /// Theta(U) = TU*T†, from a time reversal.
    Theta,
}

/// An involutive automorphism of U(N) induced by a symmetry.
#[derive(Debug, Clone)]
pub struct CartanInvolution {
    kind: InvolutionKind,
    sym: SymmetrySpec,
}

impl CartanInvolution {
    /// Pair a kind with its symmetry; the symmetry's own kind must agree
    /// (Xi from charge conjugation, Sigma from chiral, Theta from time
    /// reversal).
    pub fn new(kind: InvolutionKind, sym: SymmetrySpec) -> Result<Self> {
        let wanted = match kind {
            InvolutionKind::Xi => SymmetryKind::ChargeConjugation,
            InvolutionKind::Sigma => SymmetryKind::Chiral,
            InvolutionKind::Theta => SymmetryKind::TimeReversal,
        };
        if sym.kind() != wanted {
            return Err(Error::Convention(format!(
                "involution {kind:?} requires a {wanted:?} symmetry, got {:?}",
                sym.kind()
            )));
        }
        Ok(Self { kind, sym })
    }

    /// Infer the involution from the symmetry's kind (regular symmetries
    /// induce inner automorphisms, not Cartan involutions, and are
    /// rejected).
    pub fn from_symmetry(sym: SymmetrySpec) -> Result<Self> {
        let kind = match sym.kind() {
            SymmetryKind::ChargeConjugation => InvolutionKind::Xi,
            SymmetryKind::Chiral => InvolutionKind::Sigma,
            SymmetryKind::TimeReversal => InvolutionKind::Theta,
            SymmetryKind::Regular => {
                return Err(Error::Convention(
                    "a regular symmetry does not induce a Cartan involution".into(),
                ))
            }
        };
        Ok(Self { kind, sym })
    }

    pub fn kind(&self) -> InvolutionKind {
        self.kind
    }

    pub fn symmetry(&self) -> &SymmetrySpec {
        &self.sym
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn apply(&self, u: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        involution_apply(self, u)
    }

    // The involution on matrices, without the unitarity wrapper.
    fn apply_mat(&self, u: &CMat) -> CMat {
        let b = self.sym.block();
        match self.kind {
            InvolutionKind::Sigma => b * u * b.adjoint(),
            InvolutionKind::Xi | InvolutionKind::Theta => b * u.conjugate() * b.adjoint(),
        }
    }
}

fn check_involution_dims(tau: &CartanInvolution, dim: usize, what: &str) -> Result<()> {
    if tau.dim() != dim {
        return Err(Error::Dimension(format!(
            "involution acts on dimension {}, {what} has dimension {dim}",
            tau.dim()
        )));
    }
    Ok(())
}

/// Apply the involution: Xi(U) = CU*C†, Sigma(U) = SUS†, Theta(U) = TU*T†.
pub fn involution_apply(tau: &CartanInvolution, u: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    check_involution_dims(tau, u.dim(), "operand")?;
    Ok(UnitaryMatrix::new_unchecked(tau.apply_mat(u.as_mat())))
}

/// Frobenius distance from tau(U) to U.
pub fn fixed_residual(tau: &CartanInvolution, u: &UnitaryMatrix) -> Result<f64> {
    check_involution_dims(tau, u.dim(), "operand")?;
    Ok(fro_dist(&tau.apply_mat(u.as_mat()), u.as_mat()))
}

/// Frobenius distance from tau(U) to U†.
pub fn inverted_residual(tau: &CartanInvolution, u: &UnitaryMatrix) -> Result<f64> {
    check_involution_dims(tau, u.dim(), "operand")?;
    Ok(fro_dist(&tau.apply_mat(u.as_mat()), &u.as_mat().adjoint()))
}

/// Is U in the fixed subgroup of tau?
pub fn is_fixed(tau: &CartanInvolution, u: &UnitaryMatrix, tol: f64) -> Result<bool> {
    Ok(fixed_residual(tau, u)? <= tol)
}

/// Is U in the inverted set of tau?
pub fn is_inverted(tau: &CartanInvolution, u: &UnitaryMatrix, tol: f64) -> Result<bool> {
    Ok(inverted_residual(tau, u)? <= tol)
}

/// Cartan embedding of the coset U Fix_tau: c_tau(U) = U tau(U)†. The
/// image always lies in the inverted set, and inverted elements map to
/// their squares.
pub fn cartan_embed(tau: &CartanInvolution, u: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    check_involution_dims(tau, u.dim(), "operand")?;
    let c = u.as_mat() * tau.apply_mat(u.as_mat()).adjoint();
    Ok(UnitaryMatrix::new_unchecked(c))
}

/// Inverse of the Cartan embedding on the inverted set: the principal
/// square root, symmetrized onto the inverted set by one polar correction.
/// Deterministic coset representative; multiply by fixed elements for any
/// other. Errors when u is not inverted, when an eigenvalue sits on the
/// branch cut, or when the round trip fails to reproduce u.
pub fn cartan_unembed(tau: &CartanInvolution, u: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    let n = u.dim();
    let residual = inverted_residual(tau, u)?;
    if residual > SET_GATE_TOL * n as f64 {
        return Err(Error::NotInvolutionCompatible {
            context: "cartan_unembed input is not tau-inverted",
            residual,
        });
    }
    let v = unitary_sqrt(u, false)?;
    // tau(v)† is also a square root of u with the same principal phases;
    // averaging cancels the off-Inv error and polar restores unitarity.
    let avg = (v.as_mat() + tau.apply_mat(v.as_mat()).adjoint()) * Complex64::new(0.5, 0.0);
    let v = polar_unitary(&avg)?;
    let back = cartan_embed(tau, &v)?;
    let err = fro_dist(back.as_mat(), u.as_mat());
    if err > EMBED_VERIFY_TOL * n as f64 {
        return Err(Error::Internal(format!(
            "cartan_unembed round trip off by {err:.3e}"
        )));
    }
    Ok(v)
}

/// Geodesic inversion through y: s_y(x) = y x† y.
pub fn geodesic_inversion(y: &UnitaryMatrix, x: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    if y.dim() != x.dim() {
        return Err(Error::Dimension(format!(
            "geodesic inversion needs matching dimensions, got {} and {}",
            y.dim(),
            x.dim()
        )));
    }
    Ok(UnitaryMatrix::new_unchecked(
        y.as_mat() * x.as_mat().adjoint() * y.as_mat(),
    ))
}

/// Result of a class-membership test: per-equation Frobenius residuals of
/// the class's defining block pattern, and their maximum normalized by the
/// matrix dimension.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub ok: bool,
    /// max equation residual divided by N
    pub residual: f64,
    pub equations: Vec<(&'static str, f64)>,
}

/// Test whether U satisfies the block pattern of the class's evolution
/// space. The reported residual is the largest pattern-equation norm
/// divided by N; `ok` compares it against `tol`.
pub fn class_membership(u: &UnitaryMatrix, cls: &CazClass, tol: f64) -> Result<MembershipReport> {
    if u.dim() != cls.n() {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, class {cls} expects N = {}",
            u.dim(),
            u.dim(),
            cls.n()
        )));
    }
    let n = cls.n();
    let um = u.as_mat();
    let equations = membership_equations(um, cls);
    let residual = equations
        .iter()
        .map(|&(_, r)| r)
        .fold(0.0f64, f64::max)
        / n as f64;
    Ok(MembershipReport {
        ok: residual <= tol,
        residual,
        equations,
    })
}

fn membership_equations(um: &CMat, cls: &CazClass) -> Vec<(&'static str, f64)> {
    let n = cls.n();
    match cls.label() {
        CazLabel::A => vec![],
        CazLabel::AI => vec![("U symmetric", (um - um.transpose()).norm())],
        CazLabel::D => vec![("U real", (um - um.conjugate()).norm())],
        CazLabel::AII => {
            let m = n / 2;
            let a = um.view((0, 0), (m, m)).into_owned();
            let b = um.view((0, m), (m, m)).into_owned();
            let c = um.view((m, 0), (m, m)).into_owned();
            let d = um.view((m, m), (m, m)).into_owned();
            vec![
                ("d = a^t", (&d - a.transpose()).norm()),
                ("b antisymmetric", (&b + b.transpose()).norm()),
                ("c antisymmetric", (&c + c.transpose()).norm()),
            ]
        }
        CazLabel::C => {
            let m = n / 2;
            let a = um.view((0, 0), (m, m)).into_owned();
            let b = um.view((0, m), (m, m)).into_owned();
            let c = um.view((m, 0), (m, m)).into_owned();
            let d = um.view((m, m), (m, m)).into_owned();
            vec![
                ("d = conj(a)", (&d - a.conjugate()).norm()),
                ("c = -conj(b)", (&c + b.conjugate()).norm()),
            ]
        }
        CazLabel::AIII => {
            let m = cls.m().expect("AIII carries m");
            let a = um.view((0, 0), (m, m)).into_owned();
            let b = um.view((0, m), (m, n - m)).into_owned();
            let c = um.view((m, 0), (n - m, m)).into_owned();
            let d = um.view((m, m), (n - m, n - m)).into_owned();
            vec![
                ("a Hermitian", (&a - a.adjoint()).norm()),
                ("d Hermitian", (&d - d.adjoint()).norm()),
                ("c = -b†", (&c + b.adjoint()).norm()),
            ]
        }
        CazLabel::BDI => {
            let m = cls.m().expect("BDI carries m");
            let a = um.view((0, 0), (m, m)).into_owned();
            let b = um.view((0, m), (m, n - m)).into_owned();
            let c = um.view((m, 0), (n - m, m)).into_owned();
            let d = um.view((m, m), (n - m, n - m)).into_owned();
            vec![
                ("a real", (&a - a.conjugate()).norm()),
                ("a symmetric", (&a - a.transpose()).norm()),
                ("d real", (&d - d.conjugate()).norm()),
                ("d symmetric", (&d - d.transpose()).norm()),
                ("b imaginary", (&b + b.conjugate()).norm()),
                ("c = b^t", (&c - b.transpose()).norm()),
            ]
        }
        CazLabel::CI => {
            let m = n / 2;
            let a = um.view((0, 0), (m, m)).into_owned();
            let b = um.view((0, m), (m, m)).into_owned();
            let c = um.view((m, 0), (m, m)).into_owned();
            let d = um.view((m, m), (m, m)).into_owned();
            vec![
                ("d = conj(a)", (&d - a.conjugate()).norm()),
                ("c = -conj(b)", (&c + b.conjugate()).norm()),
                ("a Hermitian", (&a - a.adjoint()).norm()),
                ("b symmetric", (&b - b.transpose()).norm()),
            ]
        }
        CazLabel::DIII => {
            let m = n / 2;
            let a = um.view((0, 0), (m, m)).into_owned();
            let b = um.view((0, m), (m, m)).into_owned();
            let c = um.view((m, 0), (m, m)).into_owned();
            let d = um.view((m, m), (m, m)).into_owned();
            vec![
                ("d = conj(a)", (&d - a.conjugate()).norm()),
                ("c = conj(b)", (&c - b.conjugate()).norm()),
                ("a Hermitian", (&a - a.adjoint()).norm()),
                ("b antisymmetric", (&b + b.transpose()).norm()),
            ]
        }
        CazLabel::CII => {
            let m = cls.m().expect("CII carries m");
            let (p, q) = (m / 2, (n - m) / 2);
            let a = um.view((0, 0), (m, m)).into_owned();
            let b = um.view((0, m), (m, n - m)).into_owned();
            let c = um.view((m, 0), (n - m, m)).into_owned();
            let d = um.view((m, m), (n - m, n - m)).into_owned();
            let a0 = a.view((0, 0), (p, p)).into_owned();
            let a1 = a.view((0, p), (p, p)).into_owned();
            let b0 = b.view((0, 0), (p, q)).into_owned();
            let b1 = b.view((0, q), (p, q)).into_owned();
            let d0 = d.view((0, 0), (q, q)).into_owned();
            let d1 = d.view((0, q), (q, q)).into_owned();
            vec![
                (
                    "a quaternionic",
                    (a.view((p, 0), (p, p)) + a1.conjugate()).norm()
                        + (a.view((p, p), (p, p)) - a0.conjugate()).norm(),
                ),
                ("a0 Hermitian", (&a0 - a0.adjoint()).norm()),
                ("a1 antisymmetric", (&a1 + a1.transpose()).norm()),
                (
                    "d quaternionic",
                    (d.view((q, 0), (q, q)) + d1.conjugate()).norm()
                        + (d.view((q, q), (q, q)) - d0.conjugate()).norm(),
                ),
                ("d0 Hermitian", (&d0 - d0.adjoint()).norm()),
                ("d1 antisymmetric", (&d1 + d1.transpose()).norm()),
                (
                    "b paired",
                    (b.view((p, 0), (p, q)) - b1.conjugate()).norm()
                        + (b.view((p, q), (p, q)) + b0.conjugate()).norm(),
                ),
                ("c = -b†", (&c + b.adjoint()).norm()),
            ]
        }
    }
}

/// A unitary certified to lie in the evolution space of its class.
#[derive(Debug, Clone)]
pub struct TimeEvolutionOp {
    u: UnitaryMatrix,
    cls: CazClass,
}

impl TimeEvolutionOp {
    pub fn new(u: UnitaryMatrix, cls: CazClass) -> Result<Self> {
        let report = class_membership(&u, &cls, MEMBERSHIP_TOL)?;
        if !report.ok {
            return Err(Error::NotInClass {
                class: cls.label().as_str(),
                residual: report.residual,
            });
        }
        Ok(Self { u, cls })
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.u
    }

    pub fn matrix(&self) -> &CMat {
        self.u.as_mat()
    }

    pub fn class(&self) -> &CazClass {
        &self.cls
    }

    pub fn into_unitary(self) -> UnitaryMatrix {
        self.u
    }
}

/// Exponentiate an equivariant Hamiltonian: U = exp(-iH) lands in the
/// class's evolution space.
pub fn time_evolution(h: &FreeHamiltonian) -> Result<TimeEvolutionOp> {
    let g = h.matrix() * (-C_I);
    let u = UnitaryMatrix::new(expm(&g)?)?;
    TimeEvolutionOp::new(u, *h.class())
}

/// The Cartan involution whose fixed subgroup or inverted set carries the
/// class's evolution space: Sigma for AIII, Theta for AI and AII, Xi for
/// every class with a charge conjugation. Class A has none.
pub fn class_involution(cls: &CazClass) -> Result<Option<CartanInvolution>> {
    let wanted = match cls.label() {
        CazLabel::A => return Ok(None),
        CazLabel::AIII => SymmetryKind::Chiral,
        CazLabel::AI | CazLabel::AII => SymmetryKind::TimeReversal,
        _ => SymmetryKind::ChargeConjugation,
    };
    let sym = canonical_symmetries(cls)?
        .into_iter()
        .find(|s| s.kind() == wanted)
        .ok_or_else(|| {
            Error::Internal(format!("canonical set of {cls} lacks a {wanted:?} symmetry"))
        })?;
    Ok(Some(CartanInvolution::from_symmetry(sym)?))
}

/// Map the class's fixed subgroup onto its standard matrix group: the
/// identity onto block-diagonal unitaries (AIII), real orthogonal matrices
/// (AI, D), or quaternionic unitaries (AII, C, CI); a diagonal phase
/// rescaling onto O(N) for BDI; the real-and-imaginary-parts map onto O(N)
/// for DIII; a half-block interleaving with phases onto the quaternionic
/// unitaries for CII. Errors when the input is not fixed or the class has
/// no involution.
pub fn fix_isomorphism(cls: &CazClass, u: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    let n = cls.n();
    let tau = class_involution(cls)?.ok_or_else(|| {
        Error::Convention("class A has no Cartan involution, so no fixed subgroup".into())
    })?;
    let residual = fixed_residual(&tau, u)?;
    if residual > IMAGE_TOL * n as f64 {
        return Err(Error::NotInvolutionCompatible {
            context: "fix_isomorphism input is not tau-fixed",
            residual,
        });
    }
    let um = u.as_mat();
    let w = match cls.label() {
        CazLabel::BDI => {
            let m = cls.m().expect("BDI carries m");
            // conjugation by diag(1_m, -i 1_{N-m}) turns the imaginary
            // off-diagonal blocks real
            let mut w = um.clone();
            for i in 0..n {
                for j in 0..n {
                    let phase = match (i >= m, j >= m) {
                        (true, false) => -C_I,
                        (false, true) => C_I,
                        _ => C_ONE,
                    };
                    w[(i, j)] *= phase;
                }
            }
            w
        }
        CazLabel::DIII => {
            let h = n / 2;
            let a = um.view((0, 0), (h, h));
            let b = um.view((0, h), (h, h));
            let mut w = czero(n, n);
            for i in 0..h {
                for j in 0..h {
                    let (aij, bij) = (a[(i, j)], b[(i, j)]);
                    w[(i, j)] = Complex64::new(aij.re + bij.re, 0.0);
                    w[(i, h + j)] = Complex64::new(-(aij.im - bij.im), 0.0);
                    w[(h + i, j)] = Complex64::new(aij.im + bij.im, 0.0);
                    w[(h + i, h + j)] = Complex64::new(aij.re - bij.re, 0.0);
                }
            }
            w
        }
        CazLabel::CII => {
            let m = cls.m().expect("CII carries m");
            let v = cii_half_interleaving(n, m);
            &v * um * v.adjoint()
        }
        _ => um.clone(),
    };
    verify_fix_image(cls, &w)?;
    Ok(UnitaryMatrix::new_unchecked(w))
}

// Basis change sending the two quaternionic half-blocks of a CII fixed
// element into standard interleaved form: first halves of both chiral
// blocks, then (phase -i) both second halves.
pub(crate) fn cii_half_interleaving(n: usize, m: usize) -> CMat {
    let (p, q) = (m / 2, (n - m) / 2);
    let mut v = czero(n, n);
    for i in 0..p {
        v[(i, i)] = C_ONE;
    }
    for i in 0..q {
        v[(p + i, m + i)] = -C_I;
    }
    for i in 0..p {
        v[(p + q + i, p + i)] = C_ONE;
    }
    for i in 0..q {
        v[(p + q + p + i, m + q + i)] = -C_I;
    }
    v
}

fn verify_fix_image(cls: &CazClass, w: &CMat) -> Result<()> {
    let n = cls.n();
    let tol = IMAGE_TOL * n as f64;
    let residual = match cls.label() {
        CazLabel::A => unreachable!("class A is rejected before mapping"),
        CazLabel::AIII => {
            let m = cls.m().expect("AIII carries m");
            w.view((0, m), (m, n - m)).norm() + w.view((m, 0), (n - m, m)).norm()
        }
        CazLabel::AI | CazLabel::D | CazLabel::BDI | CazLabel::DIII => {
            (w - w.conjugate()).norm() + (w.adjoint() * w - CMat::identity(n, n)).norm()
        }
        CazLabel::AII | CazLabel::C | CazLabel::CI | CazLabel::CII => {
            let j = j_mat(n)?;
            (&j * w * j.adjoint() - w.conjugate()).norm()
        }
    };
    if residual > tol {
        return Err(Error::NotInvolutionCompatible {
            context: "fix_isomorphism image misses its target group",
            residual,
        });
    }
    Ok(())
}

/// Deterministic sample from the fixed subgroup of tau: a seeded Gaussian
/// Hermitian generator is projected onto the fixed subalgebra and
/// exponentiated.
pub fn sample_fixed(tau: &CartanInvolution, seed: u64) -> Result<UnitaryMatrix> {
    let n = tau.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hermitian(n, &mut rng);
    let x = h.as_mat() * (-C_I);
    let x = (&x + tau.apply_mat(&x)) * Complex64::new(0.5, 0.0);
    UnitaryMatrix::new(expm(&x)?)
}
