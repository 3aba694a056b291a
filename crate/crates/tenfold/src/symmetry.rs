//! Symmetry types of free-fermion systems, their signatures, the tenfold
//! class labels, canonical representatives, and the convenient change of
//! basis bringing a symmetry set to its canonical form.
//!
//! A symmetry acts on the 2N-dimensional Nambu space through one N x N
//! unitary block: regular symmetries as diag(U, U*), time reversals as
//! diag(T, T*)·K, charge conjugations as antidiag(C, C*), and chiral
//! symmetries as antidiag(S, S*)·K, where K is componentwise conjugation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat::{
    czero, f_mat, fro_dist, j_mat, one_pq, takagi, CMat, TakagiKind, UnitaryMatrix, C_I,
};

/// Squares TT*, CC*, S² must equal ±1 within this tolerance (scaled by N).
pub const SQUARE_TOL: f64 = 1.0e-9;

/// Canonical forms produced by [`convenient_basis`] match Table-form
/// matrices within this tolerance.
pub const CANONICAL_TOL: f64 = 1.0e-8;

/// The four symmetry types, distinguished by whether they conjugate the
/// one-particle space (antilinear) and whether they swap creation and
/// annihilation sectors (transposing).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryKind {
    /// Linear, non-transposing: diag(U, U*).
    Regular,
    /// Antilinear, non-transposing: diag(T, T*)·K.
    TimeReversal,
    /// Linear, transposing: antidiag(C, C*).
    ChargeConjugation,
    /// Antilinear, transposing: antidiag(S, S*)·K.
    Chiral,
}

/// One symmetry, given by its kind and its N x N unitary block.
#[derive(Debug, Clone)]
pub struct SymmetrySpec {
    kind: SymmetryKind,
    u: UnitaryMatrix,
}

impl SymmetrySpec {
    /// Validates the squaring constraint for non-regular kinds:
    /// TT* = ±1, CC* = ±1, S² = ±1 within 1e-9 (scaled by N).
    pub fn new(kind: SymmetryKind, u: UnitaryMatrix) -> Result<Self> {
        if kind != SymmetryKind::Regular {
            square_sign_of(kind, u.as_mat())?;
        }
        Ok(Self { kind, u })
    }

    pub fn regular(u: UnitaryMatrix) -> Self {
        Self {
            kind: SymmetryKind::Regular,
            u,
        }
    }

    pub fn time_reversal(u: UnitaryMatrix) -> Result<Self> {
        Self::new(SymmetryKind::TimeReversal, u)
    }

    pub fn charge_conjugation(u: UnitaryMatrix) -> Result<Self> {
        Self::new(SymmetryKind::ChargeConjugation, u)
    }

    pub fn chiral(u: UnitaryMatrix) -> Result<Self> {
        Self::new(SymmetryKind::Chiral, u)
    }

    pub fn kind(&self) -> SymmetryKind {
        self.kind
    }

    /// The N x N block.
    pub fn block(&self) -> &CMat {
        self.u.as_mat()
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    /// True for the conjugating kinds (time reversal and chiral).
    pub fn antilinear(&self) -> bool {
        matches!(
            self.kind,
            SymmetryKind::TimeReversal | SymmetryKind::Chiral
        )
    }

    /// Sign of the square (TT*, CC*, or S²); None for regular symmetries.
    pub fn square_sign(&self) -> Option<i8> {
        square_sign_of(self.kind, self.u.as_mat()).ok()
    }

    /// The same symmetry expressed after the one-particle basis change R.
    ///
    /// The induced Nambu change diag(R, R*) gives U ↦ RUR† for regular
    /// blocks, T ↦ RTRᵗ, C ↦ RCRᵗ, and S ↦ RSR† (the chiral block is both
    /// transposing and antilinear, so the two transposes cancel).
    pub fn conjugated(&self, r: &UnitaryMatrix) -> SymmetrySpec {
        let rm = r.as_mat();
        let block = match self.kind {
            SymmetryKind::Regular | SymmetryKind::Chiral => rm * self.u.as_mat() * rm.adjoint(),
            SymmetryKind::TimeReversal | SymmetryKind::ChargeConjugation => {
                rm * self.u.as_mat() * rm.transpose()
            }
        };
        SymmetrySpec {
            kind: self.kind,
            u: UnitaryMatrix::new_unchecked(block),
        }
    }
}

fn square_sign_of(kind: SymmetryKind, u: &CMat) -> Result<i8> {
    let n = u.nrows();
    let context = match kind {
        SymmetryKind::Regular => return Err(Error::Internal("regular symmetries do not square".into())),
        SymmetryKind::TimeReversal => "time reversal square TT*",
        SymmetryKind::ChargeConjugation => "charge conjugation square CC*",
        SymmetryKind::Chiral => "chiral square S²",
    };
    let sq = match kind {
        SymmetryKind::Chiral => u * u,
        _ => u * u.conjugate(),
    };
    let id = CMat::identity(n, n);
    let tol = SQUARE_TOL * (n.max(1)) as f64;
    let plus = fro_dist(&sq, &id);
    let minus = fro_dist(&sq, &(-&id));
    if plus <= tol {
        Ok(1)
    } else if minus <= tol {
        Ok(-1)
    } else {
        Err(Error::Structure {
            context,
            residual: plus.min(minus),
            tol,
        })
    }
}

/// The 2N x 2N Nambu-space representation: the linear part and an
/// antilinearity flag (conjugation K applied after the matrix).
pub fn nambu_rep(s: &SymmetrySpec) -> (CMat, bool) {
    let n = s.dim();
    let u = s.block();
    let uc = u.conjugate();
    let mut m = czero(2 * n, 2 * n);
    let transposing = matches!(
        s.kind(),
        SymmetryKind::ChargeConjugation | SymmetryKind::Chiral
    );
    for i in 0..n {
        for j in 0..n {
            if transposing {
                m[(i, n + j)] = u[(i, j)];
                m[(n + i, j)] = uc[(i, j)];
            } else {
                m[(i, j)] = u[(i, j)];
                m[(n + i, n + j)] = uc[(i, j)];
            }
        }
    }
    (m, s.antilinear())
}

/// Symmetry signature (ε_S, ε_C, ε_T); 0 marks an absent symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub eps_s: i8,
    pub eps_c: i8,
    pub eps_t: i8,
}

impl Signature {
    pub fn new(eps_s: i8, eps_c: i8, eps_t: i8) -> Result<Self> {
        let sig = Self { eps_s, eps_c, eps_t };
        sig.label()?;
        Ok(sig)
    }

    /// The class label this signature indexes.
    pub fn label(&self) -> Result<CazLabel> {
        use CazLabel::*;
        match (self.eps_s, self.eps_c, self.eps_t) {
            (0, 0, 0) => Ok(A),
            (1, 0, 0) => Ok(AIII),
            (0, 0, 1) => Ok(AI),
            (0, 0, -1) => Ok(AII),
            (0, 1, 0) => Ok(D),
            (0, -1, 0) => Ok(C),
            (1, 1, 1) => Ok(BDI),
            (1, -1, 1) => Ok(CI),
            (1, 1, -1) => Ok(DIII),
            (1, -1, -1) => Ok(CII),
            _ => Err(Error::Signature(format!(
                "({}, {}, {}) is not one of the ten legal signatures",
                self.eps_s, self.eps_c, self.eps_t
            ))),
        }
    }
}

/// The ten class labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CazLabel {
    A,
    AIII,
    AI,
    AII,
    D,
    C,
    BDI,
    DIII,
    CI,
    CII,
}

impl CazLabel {
    pub const ALL: [CazLabel; 10] = [
        CazLabel::A,
        CazLabel::AIII,
        CazLabel::AI,
        CazLabel::AII,
        CazLabel::D,
        CazLabel::C,
        CazLabel::BDI,
        CazLabel::DIII,
        CazLabel::CI,
        CazLabel::CII,
    ];

    pub fn signature(&self) -> Signature {
        let (s, c, t) = match self {
            CazLabel::A => (0, 0, 0),
            CazLabel::AIII => (1, 0, 0),
            CazLabel::AI => (0, 0, 1),
            CazLabel::AII => (0, 0, -1),
            CazLabel::D => (0, 1, 0),
            CazLabel::C => (0, -1, 0),
            CazLabel::BDI => (1, 1, 1),
            CazLabel::CI => (1, -1, 1),
            CazLabel::DIII => (1, 1, -1),
            CazLabel::CII => (1, -1, -1),
        };
        Signature {
            eps_s: s,
            eps_c: c,
            eps_t: t,
        }
    }

    /// Whether the class carries a chiral block size m.
    pub fn has_block_size(&self) -> bool {
        matches!(self, CazLabel::AIII | CazLabel::BDI | CazLabel::CII)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CazLabel::A => "A",
            CazLabel::AIII => "AIII",
            CazLabel::AI => "AI",
            CazLabel::AII => "AII",
            CazLabel::D => "D",
            CazLabel::C => "C",
            CazLabel::BDI => "BDI",
            CazLabel::DIII => "DIII",
            CazLabel::CI => "CI",
            CazLabel::CII => "CII",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        CazLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Signature(format!("unknown class label {s:?}")))
    }
}

impl std::fmt::Display for CazLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A class label with its dimension data: N, and for the chiral-split
/// classes (AIII, BDI, CII) the block size m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CazClass {
    label: CazLabel,
    n: usize,
    m: Option<usize>,
}

impl CazClass {
    pub fn new(label: CazLabel, n: usize, m: Option<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("dimension N must be positive".into()));
        }
        let needs_even = matches!(
            label,
            CazLabel::C | CazLabel::CI | CazLabel::DIII | CazLabel::AII | CazLabel::CII
        );
        if needs_even && n % 2 != 0 {
            return Err(Error::Dimension(format!(
                "class {label} forces N to be even, got N = {n}"
            )));
        }
        match (label.has_block_size(), m) {
            (true, Some(m)) => {
                if m > n {
                    return Err(Error::Dimension(format!(
                        "block size m = {m} exceeds N = {n}"
                    )));
                }
                if label == CazLabel::CII && (m % 2 != 0 || (n - m) % 2 != 0) {
                    return Err(Error::Dimension(format!(
                        "class CII requires even m and even N-m, got m = {m}, N = {n}"
                    )));
                }
            }
            (true, None) => {
                return Err(Error::Dimension(format!(
                    "class {label} requires a block size m"
                )));
            }
            (false, Some(_)) => {
                return Err(Error::Dimension(format!(
                    "class {label} does not take a block size m"
                )));
            }
            (false, None) => {}
        }
        Ok(Self { label, n, m })
    }

    pub fn label(&self) -> CazLabel {
        self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> Option<usize> {
        self.m
    }
}

impl std::fmt::Display for CazClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.m {
            Some(m) => write!(f, "{}(N={}, m={})", self.label, self.n, m),
            None => write!(f, "{}(N={})", self.label, self.n),
        }
    }
}

/// Compute the signature of a symmetry set.
///
/// Regular symmetries are ignored. An anti-idempotent chiral input
/// (S² = -1) is rephased to iS. When all three non-regular kinds are
/// present, the product convention S = TC* is enforced.
pub fn signature_of(symmetries: &[SymmetrySpec]) -> Result<Signature> {
    let parts = SymmetryParts::collect(symmetries)?;
    Ok(parts.signature)
}

// The at-most-one-of-each decomposition of a symmetry list, with the chiral
// block normalized to square +1.
struct SymmetryParts {
    n: usize,
    s: Option<CMat>,
    c: Option<CMat>,
    t: Option<CMat>,
    signature: Signature,
}

impl SymmetryParts {
    fn collect(symmetries: &[SymmetrySpec]) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut s: Option<CMat> = None;
        let mut c: Option<CMat> = None;
        let mut t: Option<CMat> = None;
        let (mut eps_c, mut eps_t) = (0i8, 0i8);
        for spec in symmetries {
            match n {
                None => n = Some(spec.dim()),
                Some(n0) if n0 != spec.dim() => {
                    return Err(Error::Dimension(format!(
                        "symmetry blocks of mixed dimension: {} and {n0}",
                        spec.dim()
                    )));
                }
                _ => {}
            }
            let slot = match spec.kind() {
                SymmetryKind::Regular => continue,
                SymmetryKind::Chiral => &mut s,
                SymmetryKind::ChargeConjugation => &mut c,
                SymmetryKind::TimeReversal => &mut t,
            };
            if slot.is_some() {
                return Err(Error::Signature(format!(
                    "more than one symmetry of kind {:?}",
                    spec.kind()
                )));
            }
            let sign = square_sign_of(spec.kind(), spec.block())?;
            match spec.kind() {
                SymmetryKind::ChargeConjugation => eps_c = sign,
                SymmetryKind::TimeReversal => eps_t = sign,
                SymmetryKind::Chiral => {}
                SymmetryKind::Regular => unreachable!(),
            }
            *slot = Some(spec.block().clone());
        }
        let n = n.ok_or_else(|| {
            Error::Dimension("cannot infer the dimension from an empty symmetry list".into())
        })?;

        // normalize an anti-idempotent chiral block to square +1
        let mut raw_matched_product = false;
        if let Some(sm) = s.take() {
            let sign = square_sign_of(SymmetryKind::Chiral, &sm)?;
            let normalized = if sign == 1 { sm.clone() } else { &sm * C_I };
            if let (Some(cm), Some(tm)) = (&c, &t) {
                let product = tm * cm.conjugate();
                let tol = SQUARE_TOL * n as f64;
                raw_matched_product = fro_dist(&sm, &product) <= tol;
                let normalized_matches = fro_dist(&normalized, &product) <= tol;
                if !raw_matched_product && !normalized_matches {
                    return Err(Error::Convention(format!(
                        "chiral block differs from TC* (residual {:.3e}); the product \
                         convention S = TC* is required when all three symmetries are present",
                        fro_dist(&normalized, &product)
                    )));
                }
            }
            s = Some(normalized);
        }
        let _ = raw_matched_product;

        let eps_s = if s.is_some() { 1 } else { 0 };
        let signature = Signature::new(eps_s, eps_c, eps_t)?;
        Ok(Self {
            n,
            s,
            c,
            t,
            signature,
        })
    }
}

/// Classify a signature into its CAZ class at dimension N (block size m
/// for the chiral-split classes).
pub fn caz_class(sig: &Signature, n: usize, m: Option<usize>) -> Result<CazClass> {
    CazClass::new(sig.label()?, n, m)
}

/// The canonical symmetry triple of a class, in (S, C, T) order.
///
/// These are the exact integer matrices: 1_{m,N-m} for chiral blocks,
/// identity / J_N / F_N / block-J combinations for the rest.
pub fn canonical_symmetries(cls: &CazClass) -> Result<Vec<SymmetrySpec>> {
    let n = cls.n();
    let mk = |kind: SymmetryKind, m: CMat| -> Result<SymmetrySpec> {
        SymmetrySpec::new(kind, UnitaryMatrix::new(m)?)
    };
    let chiral_block = || one_pq(cls.m().unwrap_or(0), n - cls.m().unwrap_or(0));
    let out = match cls.label() {
        CazLabel::A => vec![],
        CazLabel::AIII => vec![mk(SymmetryKind::Chiral, chiral_block())?],
        CazLabel::AI => vec![mk(SymmetryKind::TimeReversal, CMat::identity(n, n))?],
        CazLabel::AII => vec![mk(SymmetryKind::TimeReversal, j_mat(n)?)?],
        CazLabel::D => vec![mk(SymmetryKind::ChargeConjugation, CMat::identity(n, n))?],
        CazLabel::C => vec![mk(SymmetryKind::ChargeConjugation, j_mat(n)?)?],
        CazLabel::BDI => vec![
            mk(SymmetryKind::Chiral, chiral_block())?,
            mk(SymmetryKind::ChargeConjugation, chiral_block())?,
            mk(SymmetryKind::TimeReversal, CMat::identity(n, n))?,
        ],
        CazLabel::CI => vec![
            mk(SymmetryKind::Chiral, one_pq(n / 2, n / 2))?,
            mk(SymmetryKind::ChargeConjugation, -j_mat(n)?)?,
            mk(SymmetryKind::TimeReversal, f_mat(n)?)?,
        ],
        CazLabel::DIII => vec![
            mk(SymmetryKind::Chiral, one_pq(n / 2, n / 2))?,
            mk(SymmetryKind::ChargeConjugation, f_mat(n)?)?,
            mk(SymmetryKind::TimeReversal, j_mat(n)?)?,
        ],
        CazLabel::CII => {
            let m = cls.m().expect("CII carries m");
            vec![
                mk(SymmetryKind::Chiral, chiral_block())?,
                mk(
                    SymmetryKind::ChargeConjugation,
                    block_diag(&(-j_mat(m)?), &j_mat(n - m)?),
                )?,
                mk(
                    SymmetryKind::TimeReversal,
                    block_diag(&j_mat(m)?, &j_mat(n - m)?),
                )?,
            ]
        }
    };
    Ok(out)
}

fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = czero(na + nb, na + nb);
    for i in 0..na {
        for j in 0..na {
            out[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..nb {
        for j in 0..nb {
            out[(na + i, na + j)] = b[(i, j)];
        }
    }
    out
}

/// The change of basis R bringing a symmetry set to canonical form: after
/// conjugating each symmetry by R (per-kind laws as in
/// [`SymmetrySpec::conjugated`]), the blocks match [`canonical_symmetries`]
/// within 1e-8.
///
/// Regular symmetries in the input are ignored; they carry no canonical
/// form of their own.
pub fn convenient_basis(symmetries: &[SymmetrySpec]) -> Result<UnitaryMatrix> {
    let parts = SymmetryParts::collect(symmetries)?;
    let n = parts.n;
    let sig = parts.signature;

    let r = match (parts.s.as_ref(), parts.c.as_ref(), parts.t.as_ref()) {
        (None, None, None) => UnitaryMatrix::new_unchecked(CMat::identity(n, n)),
        (Some(s), None, None) => chiral_split(s)?.0,
        (None, Some(c), None) => single_takagi(c, sig.eps_c)?,
        (None, None, Some(t)) => single_takagi(t, sig.eps_t)?,
        (Some(s), Some(_), Some(_)) => triple_basis(&parts, s)?,
        // legality of the signature was checked in collect()
        _ => unreachable!("signature validation admits no other combination"),
    };

    verify_canonical(symmetries, &parts, &r)?;
    Ok(r)
}

// R = A† where X = A·Aᵗ (symmetric, square +1) or X = A·J·Aᵗ (skew,
// square -1); then R X Rᵗ is the identity or J_N.
fn single_takagi(x: &CMat, eps: i8) -> Result<UnitaryMatrix> {
    let wrapped = UnitaryMatrix::new(x.clone())?;
    let kind = if eps == 1 {
        TakagiKind::Symmetric
    } else {
        TakagiKind::Skew
    };
    let a = takagi(&wrapped, kind)?;
    Ok(UnitaryMatrix::new_unchecked(a.as_mat().adjoint()))
}

// Diagonalizes an idempotent Hermitian chiral block to 1_{m,N-m}.
// Returns (R, m). Exact on canonical inputs: the eigenbasis is assembled
// from projected standard basis columns, preferring the identity.
fn chiral_split(s: &CMat) -> Result<(UnitaryMatrix, usize)> {
    let n = s.nrows();
    let id = CMat::identity(n, n);
    let p_plus = (&id + s) * Complex64::new(0.5, 0.0);
    let p_minus = (&id - s) * Complex64::new(0.5, 0.0);
    let trace = s.trace().re;
    let m = ((n as f64 + trace) / 2.0).round();
    if !(0.0..=n as f64).contains(&m) {
        return Err(Error::Structure {
            context: "chiral block trace",
            residual: trace,
            tol: n as f64,
        });
    }
    let m = m as usize;

    let mut cols = projector_basis(&p_plus, m)?;
    cols.extend(projector_basis(&p_minus, n - m)?);
    let mut v = czero(n, n);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            v[(i, j)] = col[i];
        }
    }
    Ok((UnitaryMatrix::new_unchecked(v.adjoint()), m))
}

// Orthonormal basis of the range of a Hermitian projector, built from
// projected standard basis vectors. Prefers, in index order, columns whose
// residual after Gram-Schmidt keeps norm >= 1/2; fills any remainder with
// the largest-residual columns.
fn projector_basis(p: &CMat, rank: usize) -> Result<Vec<nalgebra::DVector<Complex64>>> {
    let n = p.nrows();
    let mut chosen: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(rank);
    let residual = |i: usize, chosen: &[nalgebra::DVector<Complex64>]| {
        let mut w = p.column(i).into_owned();
        for b in chosen {
            let overlap = b.dotc(&w);
            w -= b * overlap;
        }
        w
    };
    for i in 0..n {
        if chosen.len() == rank {
            break;
        }
        let w = residual(i, &chosen);
        let norm = w.norm();
        if norm >= 0.5 {
            chosen.push(w / Complex64::new(norm, 0.0));
        }
    }
    while chosen.len() < rank {
        let (mut best_i, mut best_norm) = (0usize, -1.0f64);
        for i in 0..n {
            let norm = residual(i, &chosen).norm();
            if norm > best_norm {
                best_i = i;
                best_norm = norm;
            }
        }
        if best_norm <= 1.0e-6 {
            return Err(Error::Structure {
                context: "chiral eigenprojector rank",
                residual: best_norm,
                tol: 1.0e-6,
            });
        }
        let w = residual(best_i, &chosen);
        let norm = w.norm();
        chosen.push(w / Complex64::new(norm, 0.0));
    }
    Ok(chosen)
}

// Canonicalization when all three symmetries are present. Staged: first
// diagonalize the chiral block, then reduce the time-reversal block by
// Takagi factorizations of its diagonal blocks (when TT* and CC* share a
// sign, T commutes with the diagonalized S) or by R = diag(b†, 1) (when
// the signs differ, T anticommutes and is block-off-diagonal).
fn triple_basis(parts: &SymmetryParts, s: &CMat) -> Result<UnitaryMatrix> {
    let n = parts.n;
    let sig = parts.signature;
    let (r1, m) = chiral_split(s)?;
    let t = parts.t.as_ref().expect("triple case has T");
    let t1 = r1.as_mat() * t * r1.as_mat().transpose();

    let tol = CANONICAL_TOL * n as f64;
    let r2 = if sig.eps_t == sig.eps_c {
        // T is block-diagonal over the chiral split
        let off = t1.view((0, m), (m, n - m)).norm() + t1.view((m, 0), (n - m, m)).norm();
        if off > tol {
            return Err(Error::Convention(format!(
                "time reversal does not commute with the chiral block (residual {off:.3e}) \
                 although the squares TT* and CC* share a sign"
            )));
        }
        let a = t1.view((0, 0), (m, m)).into_owned();
        let d = t1.view((m, m), (n - m, n - m)).into_owned();
        let ra = single_takagi(&a, sig.eps_t)?;
        let rd = single_takagi(&d, sig.eps_t)?;
        UnitaryMatrix::new_unchecked(block_diag(ra.as_mat(), rd.as_mat()))
    } else {
        // T is block-off-diagonal, which forces m = N - m
        if 2 * m != n {
            return Err(Error::Convention(format!(
                "opposite squares TT*, CC* force a half-dimensional chiral split, got m = {m}, N = {n}"
            )));
        }
        let diag = t1.view((0, 0), (m, m)).norm() + t1.view((m, m), (m, m)).norm();
        if diag > tol {
            return Err(Error::Convention(format!(
                "time reversal does not anticommute with the chiral block (residual {diag:.3e}) \
                 although the squares TT* and CC* have opposite signs"
            )));
        }
        let b = t1.view((0, m), (m, m)).into_owned();
        let mut r2 = czero(n, n);
        let b_dag = b.adjoint();
        for i in 0..m {
            for j in 0..m {
                r2[(i, j)] = b_dag[(i, j)];
            }
            r2[(m + i, m + i)] = Complex64::new(1.0, 0.0);
        }
        UnitaryMatrix::new_unchecked(r2)
    };
    Ok(UnitaryMatrix::new_unchecked(r2.as_mat() * r1.as_mat()))
}

// Conjugates every non-regular input by R and compares with the canonical
// matrices of the inferred class.
fn verify_canonical(
    symmetries: &[SymmetrySpec],
    parts: &SymmetryParts,
    r: &UnitaryMatrix,
) -> Result<()> {
    let n = parts.n;
    let label = parts.signature.label()?;
    let m = if label.has_block_size() {
        let s = parts.s.as_ref().expect("chiral classes carry S");
        let transformed = r.as_mat() * s * r.as_mat().adjoint();
        Some(((n as f64 + transformed.trace().re) / 2.0).round() as usize)
    } else {
        None
    };
    let cls = CazClass::new(label, n, m)?;
    let canonical = canonical_symmetries(&cls)?;
    let tol = CANONICAL_TOL * n as f64;

    for spec in symmetries {
        if spec.kind() == SymmetryKind::Regular {
            continue;
        }
        // compare against the rephased chiral representative
        let block = if spec.kind() == SymmetryKind::Chiral {
            parts.s.clone().expect("chiral block present")
        } else {
            spec.block().clone()
        };
        let normalized = SymmetrySpec {
            kind: spec.kind(),
            u: UnitaryMatrix::new_unchecked(block),
        }
        .conjugated(r);
        let target = canonical
            .iter()
            .find(|c| c.kind() == spec.kind())
            .ok_or_else(|| Error::Internal("canonical triple misses a kind".into()))?;
        let d = fro_dist(normalized.block(), target.block());
        if d > tol {
            return Err(Error::Convention(format!(
                "basis change leaves {:?} at distance {d:.3e} from its canonical form",
                spec.kind()
            )));
        }
    }
    Ok(())
}
