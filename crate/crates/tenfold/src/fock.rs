//! Fermionic Fock space over N modes: the exterior algebra basis indexed by
//! occupation subsets of {1..N}, creation/annihilation operators, quadratic
//! Hamiltonians, parity and number operators, and the Nambu-space adjoint
//! representation of a free Hamiltonian.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat::{czero, ensure_finite, fro_dist, CMat, HermitianMatrix, C_ONE};

/// Operators are stored dense; past ten modes a single 2^N x 2^N complex
/// matrix no longer fits comfortably in memory.
pub const MAX_MODES: usize = 10;

/// Commutation with parity is decided at this Frobenius tolerance.
pub const EVEN_TOL: f64 = 1.0e-10;

/// Fock space over `n` fermionic modes.
///
/// Basis states are the subsets of {1..n}, ordered by cardinality and then
/// lexicographically within each cardinality. For n = 2 the order is
/// |0⟩, |1⟩, |2⟩, |12⟩; the vacuum is always index 0.
#[derive(Debug, Clone)]
pub struct FockSpace {
    n: usize,
    basis: Vec<Vec<usize>>,
    // bitmask (bit j-1 set iff mode j occupied) -> basis position
    position: Vec<usize>,
}

impl FockSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_MODES {
            return Err(Error::Dimension(format!(
                "mode count {n} outside supported range 1..={MAX_MODES}"
            )));
        }
        let mut basis: Vec<Vec<usize>> = Vec::with_capacity(1 << n);
        for k in 0..=n {
            push_subsets(n, k, &mut basis);
        }
        let mut position = vec![0usize; 1 << n];
        for (idx, s) in basis.iter().enumerate() {
            position[mask_of(s)] = idx;
        }
        Ok(Self { n, basis, position })
    }

    /// Number of single-particle modes.
    pub fn modes(&self) -> usize {
        self.n
    }

    /// Fock dimension 2^n.
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Basis occupation subsets in order (sorted ascending within each).
    pub fn basis(&self) -> &[Vec<usize>] {
        &self.basis
    }

    /// Basis position of an occupation subset (must be sorted, distinct, in 1..=n).
    pub fn state_index(&self, subset: &[usize]) -> Result<usize> {
        let mut mask = 0usize;
        for &j in subset {
            if j == 0 || j > self.n {
                return Err(Error::Dimension(format!(
                    "occupation index {j} outside 1..={}",
                    self.n
                )));
            }
            let bit = 1 << (j - 1);
            if mask & bit != 0 {
                return Err(Error::Dimension(format!("repeated occupation index {j}")));
            }
            mask |= bit;
        }
        Ok(self.position[mask])
    }

    /// Unit state vector for an occupation subset.
    pub fn basis_state(&self, subset: &[usize]) -> Result<DVector<Complex64>> {
        let idx = self.state_index(subset)?;
        let mut v = DVector::zeros(self.dim());
        v[idx] = C_ONE;
        Ok(v)
    }
}

fn mask_of(subset: &[usize]) -> usize {
    subset.iter().fold(0, |m, &j| m | (1 << (j - 1)))
}

// Emits the k-subsets of {1..n} in lexicographic order.
fn push_subsets(n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    let mut cur: Vec<usize> = (1..=k).collect();
    loop {
        out.push(cur.clone());
        if k == 0 {
            return;
        }
        // successor: rightmost element that can still be incremented
        let mut i = k;
        while i > 0 && cur[i - 1] == n - (k - i) {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Dense operator on a Fock space.
#[derive(Debug, Clone)]
pub struct FockOperator {
    n: usize,
    mat: CMat,
}

impl FockOperator {
    pub fn new(space: &FockSpace, mat: CMat) -> Result<Self> {
        ensure_finite(&mat)?;
        if mat.nrows() != space.dim() || mat.ncols() != space.dim() {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, expected {}x{} for {} modes",
                mat.nrows(),
                mat.ncols(),
                space.dim(),
                space.dim(),
                space.modes()
            )));
        }
        Ok(Self {
            n: space.modes(),
            mat,
        })
    }

    pub fn zero(space: &FockSpace) -> Self {
        Self {
            n: space.modes(),
            mat: czero(space.dim(), space.dim()),
        }
    }

    pub fn identity(space: &FockSpace) -> Self {
        Self {
            n: space.modes(),
            mat: CMat::identity(space.dim(), space.dim()),
        }
    }

    /// Number of single-particle modes.
    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            n: self.n,
            mat: &self.mat * c,
        }
    }

    /// Anticommutator {self, other}.
    pub fn anticommutator(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "mode count mismatch");
        Self {
            n: self.n,
            mat: &self.mat * &other.mat + &other.mat * &self.mat,
        }
    }

    /// Commutator [self, other].
    pub fn commutator(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "mode count mismatch");
        Self {
            n: self.n,
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
        }
    }
}

impl std::ops::Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.n, rhs.n, "mode count mismatch");
        FockOperator {
            n: self.n,
            mat: &self.mat * &rhs.mat,
        }
    }
}

impl std::ops::Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.n, rhs.n, "mode count mismatch");
        FockOperator {
            n: self.n,
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.n, rhs.n, "mode count mismatch");
        FockOperator {
            n: self.n,
            mat: &self.mat - &rhs.mat,
        }
    }
}

fn check_mode_index(space: &FockSpace, j: usize) -> Result<()> {
    if j == 0 || j > space.modes() {
        return Err(Error::Dimension(format!(
            "mode index {j} outside 1..={}",
            space.modes()
        )));
    }
    Ok(())
}

// Sign picked up moving a_j past the occupied modes below j.
fn insertion_sign(subset: &[usize], j: usize) -> f64 {
    let crossings = subset.iter().filter(|&&i| i < j).count();
    if crossings % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Creation operator a_j†: wedge insertion of mode j.
///
/// a_j† |S⟩ = (-1)^{#{i ∈ S : i < j}} |S ∪ {j}⟩ for j ∉ S, and 0 otherwise.
pub fn creation(space: &FockSpace, j: usize) -> Result<FockOperator> {
    check_mode_index(space, j)?;
    let mut m = czero(space.dim(), space.dim());
    for (col, s) in space.basis().iter().enumerate() {
        if s.contains(&j) {
            continue;
        }
        let mut t = s.clone();
        let pos = t.partition_point(|&i| i < j);
        t.insert(pos, j);
        let row = space.position[mask_of(&t)];
        m[(row, col)] = Complex64::new(insertion_sign(s, j), 0.0);
    }
    FockOperator::new(space, m)
}

/// Annihilation operator a_j: contraction with mode j.
///
/// a_j |S⟩ = (-1)^{#{i ∈ S : i < j}} |S \ {j}⟩ for j ∈ S, and 0 otherwise.
pub fn annihilation(space: &FockSpace, j: usize) -> Result<FockOperator> {
    check_mode_index(space, j)?;
    let mut m = czero(space.dim(), space.dim());
    for (col, s) in space.basis().iter().enumerate() {
        if !s.contains(&j) {
            continue;
        }
        let t: Vec<usize> = s.iter().copied().filter(|&i| i != j).collect();
        let row = space.position[mask_of(&t)];
        m[(row, col)] = Complex64::new(insertion_sign(s, j), 0.0);
    }
    FockOperator::new(space, m)
}

/// A Nambu-space vector: creation amplitudes `v` and annihilation amplitudes `f`.
///
/// The associated field operator is Σ_j v_j a_j† + f_j a_j.
#[derive(Debug, Clone)]
pub struct NambuVector {
    v: DVector<Complex64>,
    f: DVector<Complex64>,
}

impl NambuVector {
    pub fn new(v: DVector<Complex64>, f: DVector<Complex64>) -> Result<Self> {
        if v.len() != f.len() {
            return Err(Error::Dimension(format!(
                "creation part has length {}, annihilation part {}",
                v.len(),
                f.len()
            )));
        }
        Ok(Self { v, f })
    }

    /// Single-particle dimension N.
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn creation_part(&self) -> &DVector<Complex64> {
        &self.v
    }

    pub fn annihilation_part(&self) -> &DVector<Complex64> {
        &self.f
    }

    /// Basis vector k of the 2N-dimensional Nambu space: k < N gives the
    /// creation direction e_k, k >= N the annihilation direction e_{k-N}.
    pub fn nambu_basis(n: usize, k: usize) -> Result<Self> {
        if k >= 2 * n {
            return Err(Error::Dimension(format!(
                "Nambu basis index {k} outside 0..{}",
                2 * n
            )));
        }
        let mut v = DVector::zeros(n);
        let mut f = DVector::zeros(n);
        if k < n {
            v[k] = C_ONE;
        } else {
            f[k - n] = C_ONE;
        }
        Ok(Self { v, f })
    }

    /// Components stacked as a 2N-vector (creation part first).
    pub fn stacked(&self) -> DVector<Complex64> {
        let n = self.dim();
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            out[i] = self.v[i];
            out[n + i] = self.f[i];
        }
        out
    }

    pub fn from_stacked(w: &DVector<Complex64>) -> Result<Self> {
        if w.len() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "stacked Nambu vector has odd length {}",
                w.len()
            )));
        }
        let n = w.len() / 2;
        Ok(Self {
            v: DVector::from_fn(n, |i, _| w[i]),
            f: DVector::from_fn(n, |i, _| w[n + i]),
        })
    }
}

/// The bilinear form b(Ψ₁, Ψ₂) = f₁·v₂ + f₂·v₁ (no conjugation).
///
/// This is the anticommutator form: Ψ̂₁Ψ̂₂ + Ψ̂₂Ψ̂₁ = b(Ψ₁, Ψ₂)·1.
pub fn nambu_form(p1: &NambuVector, p2: &NambuVector) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..p1.dim().min(p2.dim()) {
        acc += p1.f[i] * p2.v[i] + p2.f[i] * p1.v[i];
    }
    acc
}

/// Field operator Σ_j v_j a_j† + f_j a_j for a Nambu vector.
pub fn field_operator(space: &FockSpace, psi: &NambuVector) -> Result<FockOperator> {
    if psi.dim() != space.modes() {
        return Err(Error::Dimension(format!(
            "Nambu vector has dimension {}, space has {} modes",
            psi.dim(),
            space.modes()
        )));
    }
    let mut m = czero(space.dim(), space.dim());
    for j in 1..=space.modes() {
        let (cv, cf) = (psi.v[j - 1], psi.f[j - 1]);
        if cv.norm() != 0.0 {
            m += creation(space, j)?.matrix() * cv;
        }
        if cf.norm() != 0.0 {
            m += annihilation(space, j)?.matrix() * cf;
        }
    }
    FockOperator::new(space, m)
}

/// Second-quantized free Hamiltonian Ĥ = Σ_ij H_ij a_i† a_j.
///
/// Built by direct action on the occupation basis. The result is Hermitian
/// and annihilates the vacuum.
pub fn quadratic_hamiltonian(space: &FockSpace, h: &HermitianMatrix) -> Result<FockOperator> {
    let n = space.modes();
    if h.dim() != n {
        return Err(Error::Dimension(format!(
            "Hamiltonian is {}x{}, space has {n} modes",
            h.dim(),
            h.dim()
        )));
    }
    let hm = h.as_mat();
    let mut m = czero(space.dim(), space.dim());
    for (col, s) in space.basis().iter().enumerate() {
        for &j in s {
            let sign_j = insertion_sign(s, j);
            let t: Vec<usize> = s.iter().copied().filter(|&i| i != j).collect();
            for i in 1..=n {
                if t.contains(&i) {
                    continue;
                }
                let sign_i = insertion_sign(&t, i);
                let mut u = t.clone();
                let pos = u.partition_point(|&x| x < i);
                u.insert(pos, i);
                let row = space.position[mask_of(&u)];
                m[(row, col)] += hm[(i - 1, j - 1)] * Complex64::new(sign_j * sign_i, 0.0);
            }
        }
    }
    FockOperator::new(space, m)
}

/// Number operator N̂, diagonal with subset cardinalities.
pub fn number(space: &FockSpace) -> FockOperator {
    let mut m = czero(space.dim(), space.dim());
    for (idx, s) in space.basis().iter().enumerate() {
        m[(idx, idx)] = Complex64::new(s.len() as f64, 0.0);
    }
    FockOperator {
        n: space.modes(),
        mat: m,
    }
}

/// Parity operator P̂ = exp(iπN̂), diagonal with (-1)^cardinality.
pub fn parity(space: &FockSpace) -> FockOperator {
    let mut m = czero(space.dim(), space.dim());
    for (idx, s) in space.basis().iter().enumerate() {
        m[(idx, idx)] = Complex64::new(if s.len() % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    FockOperator {
        n: space.modes(),
        mat: m,
    }
}

/// Nambu-space matrix of ad_Ĥ: the block matrix diag(H, -H*).
///
/// Acting on stacked Nambu coordinates (creation part first), this is the
/// matrix of Ψ ↦ [Ĥ, Ψ̂] expressed back in field-operator components.
pub fn adjoint_rep_nambu(h: &HermitianMatrix) -> CMat {
    let n = h.dim();
    let hm = h.as_mat();
    let mut out = czero(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = hm[(i, j)];
            out[(n + i, n + j)] = -hm[(i, j)].conj();
        }
    }
    out
}

/// Whether an operator commutes with parity (Frobenius residual ≤ 1e-10).
pub fn is_even(op: &FockOperator) -> bool {
    let space = FockSpace::new(op.modes()).expect("operator mode count was validated");
    let p = parity(&space);
    fro_dist(&(p.matrix() * op.matrix()), &(op.matrix() * p.matrix())) <= EVEN_TOL
}

/// Exterior-power representation ⋀u of a single-particle unitary (or any
/// N x N matrix): block-diagonal over cardinality sectors, with
/// ⟨S'|⋀u|S⟩ = det u[S', S] on equal cardinalities.
///
/// For unitary u this satisfies ⋀(e^{-iH}) = exp(-iĤ) exactly, where Ĥ is
/// the quadratic Hamiltonian of H.
pub fn wedge_power(space: &FockSpace, u: &CMat) -> Result<FockOperator> {
    let n = space.modes();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::Dimension(format!(
            "single-particle matrix is {}x{}, space has {n} modes",
            u.nrows(),
            u.ncols()
        )));
    }
    ensure_finite(u)?;
    let mut m = czero(space.dim(), space.dim());
    for (col, s) in space.basis().iter().enumerate() {
        for (row, t) in space.basis().iter().enumerate() {
            if t.len() != s.len() {
                continue;
            }
            m[(row, col)] = if s.is_empty() {
                C_ONE
            } else {
                let k = s.len();
                let sub = CMat::from_fn(k, k, |a, b| u[(t[a] - 1, s[b] - 1)]);
                sub.determinant()
            };
        }
    }
    FockOperator::new(space, m)
}
