//! Equivariant free Hamiltonians: for each class, the real subspace of
//! Hermitian matrices commuting with the class symmetries in the canonical
//! basis. Provides membership tests, orthogonal projection, dimension
//! counting by basis enumeration, block-pattern verification, and seeded
//! sampling.
//!
//! The equivariance conditions on H are SHS† = -H (chiral present),
//! CHC† = -H* (charge conjugation present), and THT† = H* (time reversal
//! present), with S, C, T the canonical class matrices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mat::{czero, fro_dist, CMat, HermitianMatrix, C_I, C_ONE};
use crate::symmetry::{canonical_symmetries, CazClass, CazLabel, SymmetryKind};

/// Default tolerance for class-membership residuals (scaled by N).
pub const EQUIVARIANCE_TOL: f64 = 1.0e-9;

// Rank cutoff when enumerating the equivariant basis: projected unit basis
// elements either vanish (~1e-16) or keep norm >= 1/2.
const RANK_TOL: f64 = 1.0e-8;

/// A Hermitian matrix certified equivariant for its class.
#[derive(Debug, Clone)]
pub struct FreeHamiltonian {
    h: HermitianMatrix,
    cls: CazClass,
}

impl FreeHamiltonian {
    pub fn new(h: HermitianMatrix, cls: CazClass) -> Result<Self> {
        let report = is_equivariant(&h, &cls, EQUIVARIANCE_TOL * cls.n() as f64)?;
        if !report.ok {
            return Err(Error::NotEquivariant {
                context: "free Hamiltonian constructor",
                residual: report.max_residual,
            });
        }
        Ok(Self { h, cls })
    }

    pub fn matrix(&self) -> &CMat {
        self.h.as_mat()
    }

    pub fn hamiltonian(&self) -> &HermitianMatrix {
        &self.h
    }

    pub fn class(&self) -> &CazClass {
        &self.cls
    }

    pub fn into_hamiltonian(self) -> HermitianMatrix {
        self.h
    }
}

/// Residuals of the individual equivariance conditions; None marks an
/// absent symmetry.
#[derive(Debug, Clone, Copy)]
pub struct EquivarianceReport {
    pub ok: bool,
    pub chiral: Option<f64>,
    pub charge: Option<f64>,
    pub time_reversal: Option<f64>,
    pub max_residual: f64,
}

// Canonical symmetry blocks of a class, with the three induced involutions
// on Hermitian matrices.
struct ClassInvolutions {
    n: usize,
    s: Option<CMat>,
    c: Option<CMat>,
    t: Option<CMat>,
}

impl ClassInvolutions {
    fn of(cls: &CazClass) -> Result<Self> {
        let mut out = Self {
            n: cls.n(),
            s: None,
            c: None,
            t: None,
        };
        for spec in canonical_symmetries(cls)? {
            let block = spec.block().clone();
            match spec.kind() {
                SymmetryKind::Chiral => out.s = Some(block),
                SymmetryKind::ChargeConjugation => out.c = Some(block),
                SymmetryKind::TimeReversal => out.t = Some(block),
                SymmetryKind::Regular => {}
            }
        }
        Ok(out)
    }

    fn chiral_map(&self, h: &CMat) -> Option<CMat> {
        self.s.as_ref().map(|s| -(s * h * s.adjoint()))
    }

    fn time_map(&self, h: &CMat) -> Option<CMat> {
        self.t.as_ref().map(|t| t * h.conjugate() * t.adjoint())
    }

    fn charge_map(&self, h: &CMat) -> Option<CMat> {
        self.c.as_ref().map(|c| -(c * h.conjugate() * c.adjoint()))
    }

    // Sequential symmetrization in the pinned order: chiral, time reversal,
    // charge conjugation.
    fn project(&self, h: &CMat) -> CMat {
        let half = Complex64::new(0.5, 0.0);
        let mut acc = h.clone();
        if let Some(img) = self.chiral_map(&acc) {
            acc = (&acc + img) * half;
        }
        if let Some(img) = self.time_map(&acc) {
            acc = (&acc + img) * half;
        }
        if let Some(img) = self.charge_map(&acc) {
            acc = (&acc + img) * half;
        }
        acc
    }

    fn map_by_index(&self, which: usize, h: &CMat) -> Option<CMat> {
        match which {
            0 => self.chiral_map(h),
            1 => self.time_map(h),
            _ => self.charge_map(h),
        }
    }

    // Sequential symmetrization is an orthogonal projection only because
    // the three involutions commute; verified here on the full Hermitian
    // basis (exact for the canonical integer matrices).
    fn verify_commutation(&self) -> Result<()> {
        let tol = 1.0e-12 * self.n as f64;
        for b in hermitian_basis(self.n) {
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let fg = self.map_by_index(i, &b).and_then(|x| self.map_by_index(j, &x));
                    let gf = self.map_by_index(j, &b).and_then(|x| self.map_by_index(i, &x));
                    if let (Some(fg), Some(gf)) = (fg, gf) {
                        let d = fro_dist(&fg, &gf);
                        if d > tol {
                            return Err(Error::Internal(format!(
                                "canonical involutions fail to commute (residual {d:.3e})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

// HS-orthonormal real basis of the Hermitian N x N matrices: E_ii, then
// (E_ij + E_ji)/sqrt2 and i(E_ij - E_ji)/sqrt2 for i < j.
fn hermitian_basis(n: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(n * n);
    let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for i in 0..n {
        let mut e = czero(n, n);
        e[(i, i)] = C_ONE;
        out.push(e);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sym = czero(n, n);
            sym[(i, j)] = inv_sqrt2;
            sym[(j, i)] = inv_sqrt2;
            out.push(sym);

            let mut asym = czero(n, n);
            asym[(i, j)] = C_I * inv_sqrt2;
            asym[(j, i)] = -C_I * inv_sqrt2;
            out.push(asym);
        }
    }
    out
}

fn check_dims(h: &HermitianMatrix, cls: &CazClass) -> Result<()> {
    if h.dim() != cls.n() {
        return Err(Error::Dimension(format!(
            "Hamiltonian is {}x{}, class {cls} expects N = {}",
            h.dim(),
            h.dim(),
            cls.n()
        )));
    }
    Ok(())
}

/// Test the equivariance conditions of a class, reporting per-condition
/// Frobenius residuals.
pub fn is_equivariant(h: &HermitianMatrix, cls: &CazClass, tol: f64) -> Result<EquivarianceReport> {
    check_dims(h, cls)?;
    let inv = ClassInvolutions::of(cls)?;
    let hm = h.as_mat();
    let chiral = inv.chiral_map(hm).map(|img| fro_dist(&img, hm));
    let time_reversal = inv.time_map(hm).map(|img| fro_dist(&img, hm));
    let charge = inv.charge_map(hm).map(|img| fro_dist(&img, hm));
    let max_residual = [chiral, charge, time_reversal]
        .into_iter()
        .flatten()
        .fold(0.0f64, f64::max);
    Ok(EquivarianceReport {
        ok: max_residual <= tol,
        chiral,
        charge,
        time_reversal,
        max_residual,
    })
}

/// Orthogonal projection (real Frobenius inner product) onto the
/// equivariant subspace of a class.
pub fn project_equivariant(h: &HermitianMatrix, cls: &CazClass) -> Result<FreeHamiltonian> {
    check_dims(h, cls)?;
    let inv = ClassInvolutions::of(cls)?;
    inv.verify_commutation()?;
    let projected = inv.project(h.as_mat());
    FreeHamiltonian::new(HermitianMatrix::new(projected)?, *cls)
}

/// Orthonormal real basis of the equivariant subspace, produced by
/// projecting the canonical Hermitian basis and discarding dependencies.
pub fn equivariant_basis(cls: &CazClass) -> Result<Vec<CMat>> {
    let inv = ClassInvolutions::of(cls)?;
    inv.verify_commutation()?;
    let n = cls.n();
    let mut basis: Vec<CMat> = Vec::new();
    for e in hermitian_basis(n) {
        let mut w = inv.project(&e);
        for b in &basis {
            let overlap = (b.adjoint() * &w).trace().re;
            w -= b * Complex64::new(overlap, 0.0);
        }
        let norm = w.norm();
        if norm > RANK_TOL {
            basis.push(w / Complex64::new(norm, 0.0));
        }
    }
    Ok(basis)
}

/// Real dimension of the equivariant subspace, by enumeration.
pub fn equivariant_dimension(cls: &CazClass) -> Result<usize> {
    Ok(equivariant_basis(cls)?.len())
}

/// Verify the explicit block/reality pattern of the class (Table form).
pub fn structure_check(h: &HermitianMatrix, cls: &CazClass) -> Result<bool> {
    Ok(structure_residual(h, cls)? <= EQUIVARIANCE_TOL * cls.n() as f64)
}

/// Frobenius residual of the explicit block/reality pattern of the class.
///
/// Patterns (m the chiral block size, blocks sized m and N-m; for the
/// half-split classes both blocks are N/2):
/// - A: any Hermitian (residual 0)
/// - AIII: [[0, b], [b†, 0]]
/// - AI: H real; AII: [[a, b], [-b*, a*]] with bᵗ = -b
/// - D: H pure imaginary; C: [[a, b], [b*, -a*]] with bᵗ = b
/// - BDI: [[0, b], [bᵗ, 0]] with b real
/// - CI: [[0, b], [b*, 0]] with bᵗ = b; DIII: [[0, b], [-b*, 0]] with bᵗ = -b
/// - CII: [[0, B], [B†, 0]] with B = [[b₀, b₁], [-b₁*, b₀*]] in half blocks
pub fn structure_residual(h: &HermitianMatrix, cls: &CazClass) -> Result<f64> {
    check_dims(h, cls)?;
    let n = cls.n();
    let hm = h.as_mat();
    let r = match cls.label() {
        CazLabel::A => 0.0,
        CazLabel::AI => (hm - hm.transpose()).norm(),
        CazLabel::D => (hm + hm.transpose()).norm(),
        CazLabel::AIII => {
            let m = cls.m().expect("AIII carries m");
            off_diagonal_residual(hm, m, n)
        }
        CazLabel::BDI => {
            let m = cls.m().expect("BDI carries m");
            let b = hm.view((0, m), (m, n - m));
            off_diagonal_residual(hm, m, n) + b.map(|z| z.im).norm()
        }
        CazLabel::CI => {
            let m = n / 2;
            let b = hm.view((0, m), (m, m)).into_owned();
            off_diagonal_residual(hm, m, n) + (&b - b.transpose()).norm()
        }
        CazLabel::DIII => {
            let m = n / 2;
            let b = hm.view((0, m), (m, m)).into_owned();
            off_diagonal_residual(hm, m, n) + (&b + b.transpose()).norm()
        }
        CazLabel::C => {
            let m = n / 2;
            let a = hm.view((0, 0), (m, m)).into_owned();
            let b = hm.view((0, m), (m, m)).into_owned();
            let d = hm.view((m, m), (m, m)).into_owned();
            (&d + a.conjugate()).norm() + (&b - b.transpose()).norm()
        }
        CazLabel::AII => {
            let m = n / 2;
            let a = hm.view((0, 0), (m, m)).into_owned();
            let b = hm.view((0, m), (m, m)).into_owned();
            let d = hm.view((m, m), (m, m)).into_owned();
            (&d - a.conjugate()).norm() + (&b + b.transpose()).norm()
        }
        CazLabel::CII => {
            let m = cls.m().expect("CII carries m");
            let (p, q) = (m / 2, (n - m) / 2);
            let b = hm.view((0, m), (m, n - m)).into_owned();
            let b0 = b.view((0, 0), (p, q)).into_owned();
            let b1 = b.view((0, q), (p, q)).into_owned();
            let b2 = b.view((p, 0), (p, q)).into_owned();
            let b3 = b.view((p, q), (p, q)).into_owned();
            off_diagonal_residual(hm, m, n)
                + (&b2 + b1.conjugate()).norm()
                + (&b3 - b0.conjugate()).norm()
        }
    };
    Ok(r)
}

// Residual of the chiral block-off-diagonal pattern: both diagonal blocks
// vanish (Hermiticity ties the two off-diagonal blocks together).
fn off_diagonal_residual(h: &CMat, m: usize, n: usize) -> f64 {
    h.view((0, 0), (m, m)).norm() + h.view((m, m), (n - m, n - m)).norm()
}

/// Deterministic equivariant sample: Gaussian coefficients over the
/// enumerated basis, seeded.
pub fn sample_equivariant(cls: &CazClass, seed: u64) -> Result<FreeHamiltonian> {
    let basis = equivariant_basis(cls)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cls.n();
    let mut h = czero(n, n);
    for b in &basis {
        let g: f64 = rng.sample(StandardNormal);
        h += b * Complex64::new(g, 0.0);
    }
    FreeHamiltonian::new(HermitianMatrix::new(h)?, *cls)
}
