//! Takagi-style congruence factorizations of unitary matrices.
//!
//! Symmetric case: C = C^t unitary factors as C = A A^t. The principal
//! square root of a symmetric matrix is symmetric, so A = sqrt(C) works once
//! the spectrum is rotated clear of the branch cut.
//!
//! Skew case: C = −C^t unitary factors as C = A J_N A^t. Here v ↦ C v̄ is an
//! antiunitary with square −1, so the columns of A come from quaternionic
//! pairs (e, −C ē).

use num_complex::Complex64;
use std::f64::consts::PI;

use super::decomp::{unitary_eig, unitary_sqrt};
use super::{j_mat, CMat, UnitaryMatrix, STRUCTURE_TOL};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TakagiKind {
    Symmetric,
    Skew,
}

/// Factor a symmetric unitary as C = A A^t or a skew-symmetric unitary as
/// C = A J_N A^t, returning the unitary A.
pub fn takagi(c: &UnitaryMatrix, kind: TakagiKind) -> Result<UnitaryMatrix> {
    if c.dim() == 0 {
        return Ok(UnitaryMatrix::new_unchecked(CMat::zeros(0, 0)));
    }
    match kind {
        TakagiKind::Symmetric => takagi_symmetric(c),
        TakagiKind::Skew => takagi_skew(c),
    }
}

fn takagi_symmetric(c: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    let n = c.dim();
    let tol = STRUCTURE_TOL * n as f64;
    let sym_residual = (c.as_mat() - c.as_mat().transpose()).norm();
    if sym_residual > tol {
        return Err(Error::Structure {
            context: "takagi symmetric input",
            residual: sym_residual,
            tol,
        });
    }
    // Rotate the spectrum so the cut at pi falls in the largest phase gap,
    // take the principal root there, then undo half the rotation.
    let (_, phases) = unitary_eig(c.as_mat())?;
    let phi = clearing_rotation(&phases);
    let rotated = UnitaryMatrix::new_unchecked(c.as_mat() * Complex64::from_polar(1.0, -phi));
    let root = unitary_sqrt(&rotated, false)?;
    let a = root.as_mat() * Complex64::from_polar(1.0, phi / 2.0);
    let check = (&a * a.transpose() - c.as_mat()).norm();
    if check > tol {
        return Err(Error::Internal(format!(
            "takagi symmetric congruence off by {check:.3e}"
        )));
    }
    Ok(UnitaryMatrix::new_unchecked(a))
}

/// Global phase phi such that the eigenphases of e^{−i phi} C sit centered
/// away from pi. Phases come in ascending; the widest circular gap hosts the
/// cut after rotation.
fn clearing_rotation(phases: &[f64]) -> f64 {
    let n = phases.len();
    let mut best_gap = phases[0] + 2.0 * PI - phases[n - 1];
    let mut mid = (phases[n - 1] + phases[0] + 2.0 * PI) / 2.0;
    for k in 0..n - 1 {
        let gap = phases[k + 1] - phases[k];
        if gap > best_gap {
            best_gap = gap;
            mid = (phases[k] + phases[k + 1]) / 2.0;
        }
    }
    let mut phi = mid - PI;
    if phi > PI {
        phi -= 2.0 * PI;
    }
    phi
}

fn takagi_skew(c: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    let n = c.dim();
    if n % 2 != 0 {
        return Err(Error::Dimension(format!(
            "skew factorization needs even dimension, got {n}"
        )));
    }
    let tol = STRUCTURE_TOL * n as f64;
    let skew_residual = (c.as_mat() + c.as_mat().transpose()).norm();
    if skew_residual > tol {
        return Err(Error::Structure {
            context: "takagi skew input",
            residual: skew_residual,
            tol,
        });
    }
    let m = n / 2;
    // Build orthonormal pairs (e_k, f_k) with f_k = −C ē_k; the span of each
    // pair is invariant under v ↦ C v̄, so Gram-Schmidt recurses cleanly.
    let mut left: Vec<CMat> = Vec::with_capacity(m);
    let mut right: Vec<CMat> = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best: Option<(f64, CMat)> = None;
        for j in 0..n {
            let mut cand = CMat::zeros(n, 1);
            cand[(j, 0)] = Complex64::new(1.0, 0.0);
            project_out(&mut cand, left.iter().chain(right.iter()));
            let norm = cand.norm();
            if norm >= 0.5 {
                best = Some((norm, cand));
                break;
            }
            if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
                best = Some((norm, cand));
            }
        }
        let (norm, mut e) = best.expect("even-dimensional space has a remaining direction");
        if norm < 1.0e-8 {
            return Err(Error::Internal(
                "skew factorization lost orthogonality".into(),
            ));
        }
        e /= Complex64::new(norm, 0.0);
        let mut f = -(c.as_mat() * e.map(|z| z.conj()));
        // Already orthogonal in exact arithmetic; re-project for hygiene.
        project_out(&mut f, left.iter().chain(right.iter()).chain([&e]));
        let fnorm = f.norm();
        if fnorm < 0.5 {
            return Err(Error::Internal(
                "skew factorization produced a degenerate pair".into(),
            ));
        }
        f /= Complex64::new(fnorm, 0.0);
        left.push(e);
        right.push(f);
    }
    let mut a = CMat::zeros(n, n);
    for (k, col) in left.iter().chain(right.iter()).enumerate() {
        for i in 0..n {
            a[(i, k)] = col[(i, 0)];
        }
    }
    let j = j_mat(n)?;
    let check = (&a * j * a.transpose() - c.as_mat()).norm();
    if check > tol {
        return Err(Error::Internal(format!(
            "takagi skew congruence off by {check:.3e}"
        )));
    }
    Ok(UnitaryMatrix::new_unchecked(a))
}

fn project_out<'a>(v: &mut CMat, basis: impl Iterator<Item = &'a CMat>) {
    for b in basis {
        let overlap: Complex64 = b.iter().zip(v.iter()).map(|(bi, vi)| bi.conj() * vi).sum();
        for i in 0..v.nrows() {
            let bi = b[(i, 0)];
            v[(i, 0)] -= overlap * bi;
        }
    }
}
