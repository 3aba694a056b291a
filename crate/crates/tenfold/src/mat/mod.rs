//! Dense complex matrix primitives.
//!
//! Everything downstream works with `DMatrix<Complex64>` (aliased [`CMat`]).
//! The wrapper types [`UnitaryMatrix`] and [`HermitianMatrix`] carry a
//! validated structural invariant; the free functions here provide the
//! structured constants 1_{p,q}, J_N, F_N and small conveniences shared by
//! the rest of the crate.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

mod decomp;
mod takagi;

pub use decomp::{
    expm, hermitian_eig, logm_principal, polar_unitary, unitary_eig, unitary_sqrt,
};
pub use takagi::{takagi, TakagiKind};

pub type CMat = DMatrix<Complex64>;

/// Unitarity validation tolerance, scaled by dimension.
pub const UNITARY_TOL: f64 = 1.0e-10;
/// Hermiticity validation tolerance, scaled by dimension.
pub const HERMITIAN_TOL: f64 = 1.0e-12;
/// Default tolerance for structure checks (symmetric, skew, block patterns).
pub const STRUCTURE_TOL: f64 = 1.0e-9;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

pub fn czero(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn ceye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Frobenius distance between two matrices of equal shape.
pub fn fro_dist(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

pub fn ensure_finite(m: &CMat) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite(i, j));
            }
        }
    }
    Ok(())
}

pub fn ensure_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn unitarity_residual(m: &CMat) -> f64 {
    (m.adjoint() * m - ceye(m.nrows())).norm()
}

pub fn hermiticity_residual(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

/// Square matrix with ‖U†U − 1‖_F within tolerance of zero.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(CMat);

impl UnitaryMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        let n = ensure_square(&m)?;
        ensure_finite(&m)?;
        let residual = unitarity_residual(&m);
        let tol = UNITARY_TOL * n as f64;
        if residual > tol {
            return Err(Error::Structure {
                context: "unitarity",
                residual,
                tol,
            });
        }
        Ok(Self(m))
    }

    /// Wrap without validation. Caller guarantees the invariant.
    pub fn new_unchecked(m: CMat) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }
}

impl std::ops::Deref for UnitaryMatrix {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.0
    }
}

/// Square matrix with ‖H − H†‖_F within tolerance of zero.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        let n = ensure_square(&m)?;
        ensure_finite(&m)?;
        let residual = hermiticity_residual(&m);
        let tol = HERMITIAN_TOL * n as f64 * m.norm().max(1.0);
        if residual > tol {
            return Err(Error::Structure {
                context: "hermiticity",
                residual,
                tol,
            });
        }
        Ok(Self(m))
    }

    pub fn new_unchecked(m: CMat) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }
}

impl std::ops::Deref for HermitianMatrix {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.0
    }
}

/// diag(1_p, −1_q).
pub fn one_pq(p: usize, q: usize) -> CMat {
    CMat::from_fn(p + q, p + q, |i, j| {
        if i != j {
            C_ZERO
        } else if i < p {
            C_ONE
        } else {
            -C_ONE
        }
    })
}

/// J_N = [[0, 1],[−1, 0]] in N/2 blocks; requires N even.
pub fn j_mat(n: usize) -> Result<CMat> {
    if n % 2 != 0 {
        return Err(Error::Dimension(format!("J_N needs even N, got {n}")));
    }
    let m = n / 2;
    Ok(CMat::from_fn(n, n, |i, j| {
        if i < m && j == i + m {
            C_ONE
        } else if i >= m && j == i - m {
            -C_ONE
        } else {
            C_ZERO
        }
    }))
}

/// F_N = [[0, 1],[1, 0]] in N/2 blocks; requires N even.
pub fn f_mat(n: usize) -> Result<CMat> {
    if n % 2 != 0 {
        return Err(Error::Dimension(format!("F_N needs even N, got {n}")));
    }
    let m = n / 2;
    Ok(CMat::from_fn(n, n, |i, j| {
        if (i < m && j == i + m) || (i >= m && j == i - m) {
            C_ONE
        } else {
            C_ZERO
        }
    }))
}

/// Complex Gaussian matrix, entries (re, im) ~ N(0, 1) each.
pub fn gaussian_cmat<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-ish random unitary: Q factor of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> UnitaryMatrix {
    let g = gaussian_cmat(n, n, rng);
    let q = g.qr().q();
    UnitaryMatrix::new_unchecked(q)
}

/// Random Hermitian matrix (GUE-normalized entries).
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let g = gaussian_cmat(n, n, rng);
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    HermitianMatrix::new_unchecked(h)
}
