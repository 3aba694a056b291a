//! Exponential, principal logarithm, square root, and polar maps.
//!
//! Hermitian and skew-Hermitian generators go through an exact spectral
//! route; only general non-normal inputs fall back to scaling-and-squaring
//! Pade. Unitary spectra come from the complex Schur form, which is
//! numerically diagonal for normal inputs.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::{ceye, ensure_finite, ensure_square, CMat, UnitaryMatrix, C_ZERO};
use crate::error::{Error, Result};

/// Angular margin to the branch cut below which principal log/sqrt refuse.
pub const BRANCH_TOL: f64 = 1.0e-9;

/// Eigendecomposition of a Hermitian matrix: (Q, lambda) with H = Q diag(lambda) Q†.
/// Eigenvalues ascending; Q unitary.
pub fn hermitian_eig(h: &CMat) -> Result<(CMat, Vec<f64>)> {
    ensure_square(h)?;
    let se = h.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..h.nrows()).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let q = CMat::from_fn(h.nrows(), h.nrows(), |i, j| se.eigenvectors[(i, idx[j])]);
    let vals = idx.iter().map(|&k| se.eigenvalues[k]).collect();
    Ok((q, vals))
}

/// Spectral decomposition of a unitary matrix: (Q, theta) with
/// U = Q diag(e^{i theta}) Q†, phases in (−pi, pi], ascending.
pub fn unitary_eig(u: &CMat) -> Result<(CMat, Vec<f64>)> {
    let n = ensure_square(u)?;
    let schur = u
        .clone()
        .try_schur(1.0e-13, 200 * n.max(4))
        .ok_or_else(|| Error::Convergence("Schur iteration on unitary input".into()))?;
    let (q, t) = schur.unpack();
    // Unitary inputs are normal, so T is diagonal up to roundoff.
    let mut pairs: Vec<(f64, usize)> = (0..n)
        .map(|k| {
            let z = t[(k, k)];
            let mut th = z.arg();
            if th <= -PI {
                th = PI;
            }
            (th, k)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let qs = CMat::from_fn(n, n, |i, j| q[(i, pairs[j].1)]);
    let phases: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    // Guard: reconstruction must hold or the input was not close to normal.
    let rec = &qs
        * CMat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, phases[i])
            } else {
                C_ZERO
            }
        })
        * qs.adjoint();
    let err = (&rec - u).norm();
    if err > 1.0e-9 * n as f64 {
        return Err(Error::Internal(format!(
            "unitary spectral reconstruction off by {err:.3e}"
        )));
    }
    Ok((qs, phases))
}

fn spectral_apply(q: &CMat, vals: impl Iterator<Item = Complex64>) -> CMat {
    let n = q.nrows();
    let d: Vec<Complex64> = vals.collect();
    let mut scaled = q.clone();
    for j in 0..n {
        for i in 0..n {
            scaled[(i, j)] *= d[j];
        }
    }
    scaled * q.adjoint()
}

/// Matrix exponential e^A. Hermitian and skew-Hermitian inputs take the
/// spectral route; anything else uses Pade 13 with scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat> {
    ensure_square(a)?;
    ensure_finite(a)?;
    let scale = a.norm().max(1.0);
    let herm = (a - a.adjoint()).norm();
    let skew = (a + a.adjoint()).norm();
    let tol = 1.0e-12 * a.nrows() as f64 * scale;
    if herm <= tol {
        let (q, vals) = hermitian_eig(a)?;
        return Ok(spectral_apply(
            &q,
            vals.into_iter().map(|l| Complex64::new(l.exp(), 0.0)),
        ));
    }
    if skew <= tol {
        // A = −iH with H = iA Hermitian: e^A = Q e^{−i lambda} Q†.
        let h = a * Complex64::new(0.0, 1.0);
        let (q, vals) = hermitian_eig(&h)?;
        return Ok(spectral_apply(
            &q,
            vals.into_iter().map(|l| Complex64::from_polar(1.0, -l)),
        ));
    }
    Ok(expm_pade(a))
}

/// Higham's degree-13 Pade approximant with scaling and squaring.
fn expm_pade(a: &CMat) -> CMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let b = |k: usize| Complex64::new(B[k], 0.0);
    let a = a / Complex64::new(2.0f64.powi(s as i32), 0.0);
    let id = ceye(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u = &a
        * (&a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
            + &a6 * b(7)
            + &a4 * b(5)
            + &a2 * b(3)
            + &id * b(1));
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);
    let num = &v + &u;
    let den = &v - &u;
    let mut r = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is nonsingular for scaled inputs");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn branch_margin(phases: &[f64]) -> f64 {
    phases.iter().map(|t| PI - t.abs()).fold(f64::INFINITY, f64::min)
}

/// Principal logarithm of a unitary matrix: skew-Hermitian L with
/// eigenphases in (−pi, pi] and e^L = U.
///
/// Refuses inputs with an eigenphase within [`BRANCH_TOL`] of the cut at pi
/// unless `allow_branch_edge` is set.
pub fn logm_principal(u: &UnitaryMatrix, allow_branch_edge: bool) -> Result<CMat> {
    let (q, phases) = unitary_eig(u.as_mat())?;
    let margin = branch_margin(&phases);
    if !allow_branch_edge && margin < BRANCH_TOL {
        return Err(Error::BranchCut { margin });
    }
    Ok(spectral_apply(
        &q,
        phases.iter().map(|&t| Complex64::new(0.0, t)),
    ))
}

/// Principal square root of a unitary matrix: eigenphases halved into
/// (−pi/2, pi/2]. Same branch-cut policy as [`logm_principal`].
pub fn unitary_sqrt(u: &UnitaryMatrix, allow_branch_edge: bool) -> Result<UnitaryMatrix> {
    let (q, phases) = unitary_eig(u.as_mat())?;
    let margin = branch_margin(&phases);
    if !allow_branch_edge && margin < BRANCH_TOL {
        return Err(Error::BranchCut { margin });
    }
    let v = spectral_apply(
        &q,
        phases.iter().map(|&t| Complex64::from_polar(1.0, t / 2.0)),
    );
    Ok(UnitaryMatrix::new_unchecked(v))
}

/// Unitary factor of the polar decomposition M = U P, the Frobenius-nearest
/// unitary to M. Errors on rank deficiency.
pub fn polar_unitary(m: &CMat) -> Result<UnitaryMatrix> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let smin = svd.singular_values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if smin <= 1.0e-12 * smax.max(1.0) {
        return Err(Error::Singular { sigma_min: smin });
    }
    let u = svd.u.as_ref().expect("requested U").clone();
    let vt = svd.v_t.as_ref().expect("requested V^T").clone();
    Ok(UnitaryMatrix::new_unchecked(u * vt))
}
