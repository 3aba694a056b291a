//! Whole-crate acceptance run.
//!
//! Each test exercises one contract group end to end, independently of the
//! others: the symmetry table and sampled structure, membership patterns and
//! dimension counts, the canonical anticommutation relations, the Cartan
//! machinery, the suspension levels, the worked two-mode example, the
//! weak-decomposition round trip, and symmetry preservation along retract
//! paths. Every test prints a one-line summary with the observed worst
//! residual next to its bound (visible under `--nocapture`).

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use tenfold::cartan::{
    cartan_embed, cartan_unembed, class_involution, class_membership, fix_isomorphism,
    inverted_residual, sample_fixed, time_evolution, CartanInvolution, InvolutionKind,
};
use tenfold::equivariant::{
    equivariant_dimension, sample_equivariant, structure_check, structure_residual,
    FreeHamiltonian,
};
use tenfold::fock::{
    adjoint_rep_nambu, annihilation, field_operator, parity, quadratic_hamiltonian, FockOperator,
    FockSpace, NambuVector,
};
use tenfold::mat::{
    ceye, czero, expm, fro_dist, one_pq, random_hermitian, random_unitary, CMat, HermitianMatrix,
    UnitaryMatrix, C_I, C_ONE,
};
use tenfold::suspension::{
    suspend, verify_suspension_identity, Spectrum, SpectrumLevel, SuspensionInput,
};
use tenfold::symmetry::{canonical_symmetries, CazClass, CazLabel, SymmetryKind, SymmetrySpec};
use tenfold::weak::{
    example_path, involution_compatibility_check, nearest_free, ortho_complement_basis, retract_h,
    weak_decompose, InteractingOp, LiftedInvolution, NearestFreeOpts, WeakStatus,
};

/// The standard profile of a class at even N: m = N/2 where a block size
/// applies, stepped down to the nearest even split for CII when N/2 is odd
/// (its blocks pair up, so odd splits do not exist).
fn profile(label: CazLabel, n: usize) -> CazClass {
    let m = if label.has_block_size() {
        let mut m = n / 2;
        if label == CazLabel::CII && m % 2 != 0 {
            m -= 1;
        }
        Some(m)
    } else {
        None
    };
    CazClass::new(label, n, m).unwrap()
}

fn standard_profiles() -> Vec<CazClass> {
    let mut out = Vec::new();
    for label in CazLabel::ALL {
        for n in [2usize, 4, 6, 8] {
            out.push(profile(label, n));
        }
    }
    out
}

fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn unitarity_residual(m: &CMat) -> f64 {
    fro_dist(&(m.adjoint() * m), &ceye(m.nrows()))
}

// ---------------------------------------------------------------------------
// 1. Symmetry table: canonical squares are exact and sampled equivariant
//    Hamiltonians stay inside the class pattern.

#[test]
fn symmetry_tables_squares_and_structure() {
    let profiles = standard_profiles();

    for cls in &profiles {
        for spec in canonical_symmetries(cls).unwrap() {
            let Some(sign) = spec.square_sign() else {
                continue;
            };
            let b = spec.block();
            // antiunitary squares are B B*, the chiral square is B B
            let square = match spec.kind() {
                SymmetryKind::Chiral => b * b,
                _ => b * b.map(|z| z.conj()),
            };
            let expected = ceye(cls.n()) * Complex64::new(f64::from(sign), 0.0);
            assert_eq!(square, expected, "{cls} {:?} square", spec.kind());
        }
    }

    let worst = profiles
        .par_iter()
        .enumerate()
        .map(|(pi, cls)| {
            let mut w: f64 = 0.0;
            for i in 0..1000u64 {
                let seed = 10_000 + 1_000_000 * pi as u64 + i;
                let h = sample_equivariant(cls, seed).unwrap();
                let r = structure_residual(h.hamiltonian(), cls).unwrap();
                assert!(
                    r <= 1.0e-9,
                    "{cls} seed {seed}: structure residual {r:.3e}"
                );
                assert!(structure_check(h.hamiltonian(), cls).unwrap(), "{cls} seed {seed}");
                w = w.max(r);
            }
            w
        })
        .reduce(|| 0.0, f64::max);

    println!(
        "squares exact on {} profiles; 1000 samples each, worst structure residual {worst:.3e} (bound 1e-9)",
        profiles.len()
    );
}

// ---------------------------------------------------------------------------
// 2. Membership patterns of exponentials and the dimension formulas, checked
//    against enumeration over every legal profile at N <= 8.

fn dimension_formula(cls: &CazClass) -> usize {
    let n = cls.n();
    let m = cls.m().unwrap_or(0);
    match cls.label() {
        CazLabel::A => n * n,
        CazLabel::AIII => 2 * m * (n - m),
        CazLabel::AI | CazLabel::C => n * (n + 1) / 2,
        CazLabel::AII | CazLabel::D => n * (n - 1) / 2,
        CazLabel::BDI | CazLabel::CII => m * (n - m),
        CazLabel::CI => n * (n + 2) / 4,
        CazLabel::DIII => n * (n - 2) / 4,
    }
}

#[test]
fn membership_patterns_and_dimension_formulas() {
    let mut combos = 0usize;
    for label in CazLabel::ALL {
        for n in 1..=8usize {
            let splits: Vec<Option<usize>> = if label.has_block_size() {
                (0..=n).map(Some).collect()
            } else {
                vec![None]
            };
            for m in splits {
                // the constructor rejects illegal parities; those profiles
                // simply do not exist
                let Ok(cls) = CazClass::new(label, n, m) else {
                    continue;
                };
                let counted = equivariant_dimension(&cls).unwrap();
                assert_eq!(counted, dimension_formula(&cls), "{cls}");
                combos += 1;
            }
        }
    }

    let profiles = standard_profiles();
    let worst = profiles
        .par_iter()
        .enumerate()
        .map(|(pi, cls)| {
            let mut w: f64 = 0.0;
            for i in 0..25u64 {
                let seed = 41_000 + 1_000 * pi as u64 + i;
                let h = sample_equivariant(cls, seed).unwrap();
                let u = time_evolution(&h).unwrap();
                let report = class_membership(u.unitary(), cls, 1.0e-8).unwrap();
                assert!(
                    report.ok && report.residual <= 1.0e-8,
                    "{cls} seed {seed}: membership residual {:.3e}",
                    report.residual
                );
                w = w.max(report.residual);
            }
            w
        })
        .reduce(|| 0.0, f64::max);

    println!(
        "dimension formula exact on {combos} profiles; membership worst residual {worst:.3e} over {} exponentials (bound 1e-8)",
        profiles.len() * 25
    );
}

// ---------------------------------------------------------------------------
// 3. Canonical anticommutation relations and the quadratic adjoint action on
//    field operators against brute-force commutators.

#[test]
fn car_relations_and_nambu_adjoint() {
    let mut worst_car: f64 = 0.0;
    for n in 1..=4usize {
        let space = FockSpace::new(n).unwrap();
        let d = space.dim();
        let id = ceye(d);
        let zero = czero(d, d);
        let a: Vec<FockOperator> = (1..=n).map(|j| annihilation(&space, j).unwrap()).collect();
        for i in 0..n {
            for j in 0..n {
                let aa = a[i].anticommutator(&a[j]);
                let cc = a[i].adjoint().anticommutator(&a[j].adjoint());
                let mixed = a[i].anticommutator(&a[j].adjoint());
                let delta = if i == j { &id } else { &zero };
                worst_car = worst_car
                    .max(fro_dist(aa.matrix(), &zero))
                    .max(fro_dist(cc.matrix(), &zero))
                    .max(fro_dist(mixed.matrix(), delta));
            }
        }
    }
    assert!(worst_car <= 1.0e-14, "CAR residual {worst_car:.3e}");

    let mut worst_adj: f64 = 0.0;
    for n in 1..=3usize {
        let space = FockSpace::new(n).unwrap();
        for rep in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(7_000 + 100 * n as u64 + rep);
            let h = random_hermitian(n, &mut rng);
            let hq = quadratic_hamiltonian(&space, &h).unwrap();
            let block = adjoint_rep_nambu(&h);
            for k in 0..2 * n {
                let psi = NambuVector::nambu_basis(n, k).unwrap();
                let brute = hq.commutator(&field_operator(&space, &psi).unwrap());
                let col: DVector<Complex64> = block.column(k).into_owned();
                let mapped =
                    field_operator(&space, &NambuVector::from_stacked(&col).unwrap()).unwrap();
                worst_adj = worst_adj.max(fro_dist(brute.matrix(), mapped.matrix()));
            }
        }
    }
    assert!(worst_adj <= 1.0e-12, "adjoint action residual {worst_adj:.3e}");

    println!(
        "CAR worst residual {worst_car:.3e} (bound 1e-14); adjoint action worst residual {worst_adj:.3e} (bound 1e-12)"
    );
}

// ---------------------------------------------------------------------------
// 4. Cartan machinery: involutivity, the embedding's square law, the
//    unembed round trip, and the fixed-subgroup isomorphisms, 100 samples
//    per class involution.

/// The involution's conjugation on Hermitian generators: K -> B K B† for
/// the linear kind, K -> B K* B† for the antilinear ones.
fn involution_on_generator(tau: &CartanInvolution, k: &CMat) -> CMat {
    let b = tau.symmetry().block();
    match tau.kind() {
        InvolutionKind::Sigma => b * k * b.adjoint(),
        InvolutionKind::Xi | InvolutionKind::Theta => b * k.map(|z| z.conj()) * b.adjoint(),
    }
}

/// A random tau-inverted unitary: exp(-iK) with K projected onto the
/// generators that the involution sends to exp(+iK), scaled well inside the
/// principal branch.
fn sample_inverted(tau: &CartanInvolution, rng: &mut ChaCha8Rng) -> UnitaryMatrix {
    let n = tau.dim();
    // Sigma inverts when the conjugation negates K; Xi and Theta invert
    // when it preserves K (the entrywise conjugate absorbs the sign of i)
    let sign = match tau.kind() {
        InvolutionKind::Sigma => -1.0,
        InvolutionKind::Xi | InvolutionKind::Theta => 1.0,
    };
    loop {
        let raw = random_hermitian(n, rng).into_mat();
        let mapped = involution_on_generator(tau, &raw);
        let k = hermitize(&((&raw + mapped * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0)));
        let norm = k.norm();
        if norm < 1.0e-6 {
            continue;
        }
        let k = k * Complex64::new(2.0 / norm, 0.0);
        return UnitaryMatrix::new(expm(&(k * -C_I)).unwrap()).unwrap();
    }
}

#[test]
fn cartan_involutions_embeddings_and_fixed_maps() {
    let classes: Vec<CazClass> = CazLabel::ALL
        .into_iter()
        .filter(|l| *l != CazLabel::A)
        .map(|l| profile(l, 4))
        .collect();

    let worst = classes
        .par_iter()
        .enumerate()
        .map(|(ci, cls)| {
            let tau = class_involution(cls).unwrap().expect("class carries an involution");
            let n = tau.dim();
            let base = 50_000 + 10_000 * ci as u64;
            let mut w_twice: f64 = 0.0;
            let mut w_square: f64 = 0.0;
            let mut w_round: f64 = 0.0;
            let mut w_hom: f64 = 0.0;
            for i in 0..100u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(base + i);

                let u = random_unitary(n, &mut rng);
                let twice = tau.apply(&tau.apply(&u).unwrap()).unwrap();
                w_twice = w_twice.max(fro_dist(twice.as_mat(), u.as_mat()));

                let v = sample_inverted(&tau, &mut rng);
                assert!(inverted_residual(&tau, &v).unwrap() <= 1.0e-10, "{cls} sample {i}");

                let emb = cartan_embed(&tau, &v).unwrap();
                w_square = w_square.max(fro_dist(emb.as_mat(), &(v.as_mat() * v.as_mat())));

                let half = cartan_unembed(&tau, &v).unwrap();
                let back = cartan_embed(&tau, &half).unwrap();
                w_round = w_round.max(fro_dist(back.as_mat(), v.as_mat()));

                let x = sample_fixed(&tau, base + 2_000 + i).unwrap();
                let y = sample_fixed(&tau, base + 4_000 + i).unwrap();
                let xy = UnitaryMatrix::new(x.as_mat() * y.as_mat()).unwrap();
                let fx = fix_isomorphism(cls, &x).unwrap();
                let fy = fix_isomorphism(cls, &y).unwrap();
                let fxy = fix_isomorphism(cls, &xy).unwrap();
                w_hom = w_hom.max(fro_dist(fxy.as_mat(), &(fx.as_mat() * fy.as_mat())));
            }
            assert!(w_twice <= 1.0e-10, "{cls}: tau^2 residual {w_twice:.3e}");
            assert!(w_square <= 1.0e-10, "{cls}: embed square residual {w_square:.3e}");
            assert!(w_round <= 1.0e-8, "{cls}: round trip residual {w_round:.3e}");
            assert!(w_hom <= 1.0e-9, "{cls}: homomorphism residual {w_hom:.3e}");
            [w_twice, w_square, w_round, w_hom]
        })
        .reduce(
            || [0.0; 4],
            |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2]), a[3].max(b[3])],
        );

    println!(
        "9 involutions, 100 samples each: tau^2 {:.3e} (1e-10), embed square {:.3e} (1e-10), round trip {:.3e} (1e-8), fixed-map homomorphism {:.3e} (1e-9)",
        worst[0], worst[1], worst[2], worst[3]
    );
}

// ---------------------------------------------------------------------------
// 5. Suspension levels: abstract route vs closed form, landing in the
//    target class, and the basepoint laws, at the smallest profile whose
//    source class has something to sample.

fn smallest_levels() -> Vec<SpectrumLevel> {
    vec![
        SpectrumLevel::new(Spectrum::KU, 0, 2, Some(1)).unwrap(),
        SpectrumLevel::new(Spectrum::KU, 1, 1, None).unwrap(),
        SpectrumLevel::new(Spectrum::KO, 0, 2, Some(1)).unwrap(),
        SpectrumLevel::new(Spectrum::KO, 1, 1, None).unwrap(),
        SpectrumLevel::new(Spectrum::KO, 2, 2, None).unwrap(),
        SpectrumLevel::new(Spectrum::KO, 3, 2, None).unwrap(),
        SpectrumLevel::new(Spectrum::KO, 4, 4, Some(2)).unwrap(),
        SpectrumLevel::new(Spectrum::KO, 5, 2, None).unwrap(),
        SpectrumLevel::new(Spectrum::KO, 6, 4, None).unwrap(),
        SpectrumLevel::new(Spectrum::KO, 7, 2, None).unwrap(),
    ]
}

/// Levels where the suspension is a group commutator against the geodesic,
/// pinning both basepoint laws; the remaining levels (KU 1, KO 3, KO 7)
/// conjugate the generator instead, so only the zero-Hamiltonian law holds.
fn has_theta_zero_law(level: &SpectrumLevel) -> bool {
    !matches!(
        (level.spectrum(), level.level()),
        (Spectrum::KU, 1) | (Spectrum::KO, 3) | (Spectrum::KO, 7)
    )
}

#[test]
fn suspension_levels_land_and_match_closed_forms() {
    let levels = smallest_levels();
    let worst = levels
        .par_iter()
        .enumerate()
        .map(|(li, level)| {
            let cls = *level.class();
            let target = level.target().unwrap();
            let target_eye = ceye(target.n());
            let zero_h =
                FreeHamiltonian::new(HermitianMatrix::new(czero(cls.n(), cls.n())).unwrap(), cls)
                    .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(60_000 + li as u64);
            let mut w_form: f64 = 0.0;
            let mut w_land: f64 = 0.0;
            let mut w_base: f64 = 0.0;
            for i in 0..100u64 {
                let h = sample_equivariant(&cls, 61_000 + 1_000 * li as u64 + i).unwrap();
                let theta: f64 = rng.gen();

                let r = verify_suspension_identity(level, h.hamiltonian(), theta).unwrap();
                assert!(r <= 1.0e-9, "{:?} level {} sample {i}: closed form {r:.3e}", level.spectrum(), level.level());
                w_form = w_form.max(r);

                let input = SuspensionInput::new(*level, h.clone(), theta).unwrap();
                let out = suspend(&input).unwrap();
                let report = class_membership(out.unitary(), target.class(), 1.0e-8).unwrap();
                assert!(report.ok && report.residual <= 1.0e-8);
                w_land = w_land.max(report.residual);

                // basepoint law in the circle direction
                let frozen = SuspensionInput::new(*level, zero_h.clone(), theta).unwrap();
                let at_zero_h = suspend(&frozen).unwrap();
                let r0 = fro_dist(at_zero_h.matrix(), &target_eye);
                assert!(r0 <= 1.0e-10, "zero-Hamiltonian law {r0:.3e}");
                w_base = w_base.max(r0);

                // basepoint law at theta = 0, where the level pins one
                if has_theta_zero_law(level) {
                    let start = SuspensionInput::new(*level, h.clone(), 0.0).unwrap();
                    let at_zero_t = suspend(&start).unwrap();
                    let r1 = fro_dist(at_zero_t.matrix(), &target_eye);
                    assert!(r1 <= 1.0e-10, "theta = 0 law {r1:.3e}");
                    w_base = w_base.max(r1);
                }
            }
            [w_form, w_land, w_base]
        })
        .reduce(
            || [0.0; 3],
            |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])],
        );

    println!(
        "10 levels, 100 inputs each: closed form {:.3e} (1e-9), landing {:.3e} (1e-8), basepoint {:.3e} (1e-10)",
        worst[0], worst[1], worst[2]
    );
}

// ---------------------------------------------------------------------------
// 6. The worked two-mode evolution: displayed matrix entries, the tied
//    minimizers at the half-period point, and the free start.

fn example_matrix(t: f64) -> CMat {
    let c = Complex64::new((2.0 * std::f64::consts::PI * t).cos(), 0.0);
    let s = Complex64::new(0.0, -(2.0 * std::f64::consts::PI * t).sin());
    let mut m = czero(4, 4);
    m[(0, 0)] = c;
    m[(0, 3)] = s;
    m[(1, 1)] = -C_ONE;
    m[(2, 2)] = -C_ONE;
    m[(3, 0)] = s;
    m[(3, 3)] = c;
    m
}

#[test]
fn worked_example_matrix_and_decompositions() {
    let mut w_mat: f64 = 0.0;
    for t in [0.0, 0.25, 0.5, 1.0] {
        let u = example_path(t).unwrap();
        let r = fro_dist(u.matrix(), &example_matrix(t));
        assert!(r <= 1.0e-12, "t = {t}: {r:.3e}");
        w_mat = w_mat.max(r);
    }

    let mid = example_path(0.5).unwrap();
    let dec = weak_decompose(&mid).unwrap();
    assert_eq!(dec.status(), WeakStatus::CutLocus, "midpoint status");
    let ties = nearest_free(&mid, &NearestFreeOpts::default()).unwrap();
    assert!(ties.len() >= 2, "{} minimizer(s) at the midpoint", ties.len());
    let dmin = ties.iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
    let dmax = ties.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    assert!(dmax - dmin <= 1.0e-6, "distance gap {:.3e}", dmax - dmin);

    let start = example_path(0.0).unwrap();
    let dec0 = weak_decompose(&start).unwrap();
    assert_eq!(dec0.status(), WeakStatus::Weak, "start status");
    assert!(dec0.distance() <= 1.0e-8, "start distance {:.3e}", dec0.distance());

    println!(
        "path matrix residual {w_mat:.3e} (1e-12); midpoint cut locus with {} minimizers at distance {dmin:.12}, gap {:.3e}; start weak at distance {:.3e}",
        ties.len(),
        dmax - dmin,
        dec0.distance()
    );
}

// ---------------------------------------------------------------------------
// 7. Weak-decomposition round trip at two and three modes: recover the
//    planted free point and interaction direction, and keep the retract
//    path even and unitary.

/// A Gaussian combination of the interaction directions, rescaled to the
/// requested Frobenius norm.
fn complement_direction(modes: usize, rng: &mut ChaCha8Rng, norm: f64) -> CMat {
    let basis = ortho_complement_basis(modes).unwrap();
    let d = basis[0].dim();
    let mut x = czero(d, d);
    for op in &basis {
        let c: f64 = rng.sample(StandardNormal);
        x += op.matrix() * Complex64::new(c, 0.0);
    }
    let scale = norm / x.norm();
    x * Complex64::new(scale, 0.0)
}

#[test]
fn weak_round_trip_and_retract_path() {
    let worst = (0..200u64)
        .into_par_iter()
        .map(|trial| {
            let modes = if trial < 100 { 2 } else { 3 };
            let space = FockSpace::new(modes).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(90_000 + trial);

            let h = random_hermitian(modes, &mut rng);
            let lifted = quadratic_hamiltonian(&space, &h).unwrap();
            let u0 = expm(&(lifted.matrix() * -C_I)).unwrap();
            let norm_x = 0.05 + 0.25 * rng.gen::<f64>();
            let x = complement_direction(modes, &mut rng, norm_x);
            let u_mat = &u0 * expm(&(&x * -C_I)).unwrap();

            let op = InteractingOp::new(FockOperator::new(&space, u_mat.clone()).unwrap()).unwrap();
            let dec = weak_decompose(&op).unwrap();
            assert_eq!(dec.status(), WeakStatus::Weak, "trial {trial}");

            let e_u0 = fro_dist(dec.u0().matrix(), &u0);
            let e_x = fro_dist(dec.x().matrix(), &x);
            assert!(e_u0 <= 1.0e-6, "trial {trial}: free part off by {e_u0:.3e}");
            assert!(e_x <= 1.0e-6, "trial {trial}: direction off by {e_x:.3e}");

            let e_start = fro_dist(retract_h(&dec, 0.0).unwrap().matrix(), dec.u0().matrix());
            let e_end = fro_dist(retract_h(&dec, 1.0).unwrap().matrix(), &u_mat);
            assert!(e_start <= 1.0e-9, "trial {trial}: start endpoint {e_start:.3e}");
            assert!(e_end <= 1.0e-9, "trial {trial}: end endpoint {e_end:.3e}");

            let p = parity(&space);
            let mut e_path: f64 = 0.0;
            for k in 0..=5 {
                let t = k as f64 / 5.0;
                let point = retract_h(&dec, t).unwrap();
                let m = point.matrix();
                e_path = e_path
                    .max(unitarity_residual(m))
                    .max(fro_dist(&(p.matrix() * m), &(m * p.matrix())));
            }
            assert!(e_path <= 1.0e-10, "trial {trial}: path residual {e_path:.3e}");

            [e_u0.max(e_x), e_start.max(e_end), e_path]
        })
        .reduce(
            || [0.0; 3],
            |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])],
        );

    println!(
        "200 trials: recovery {:.3e} (1e-6), endpoints {:.3e} (1e-9), path even+unitary {:.3e} (1e-10)",
        worst[0], worst[1], worst[2]
    );
}

// ---------------------------------------------------------------------------
// 8. Lifted symmetries along retract paths: inputs built inside a lift's
//    fixed or inverted set decompose into paths that stay there.

/// The sign s with which a compatible generator must satisfy
/// tau(K) = s K: a linear lift fixes exp(-iK) when s = +1 and inverts it
/// when s = -1; an antilinear lift swaps the two roles.
fn generator_sign(kind: SymmetryKind) -> f64 {
    match kind {
        SymmetryKind::Regular | SymmetryKind::TimeReversal => 1.0,
        SymmetryKind::Chiral | SymmetryKind::ChargeConjugation => -1.0,
    }
}

#[test]
fn lifted_symmetries_hold_along_retract_paths() {
    let space = FockSpace::new(2).unwrap();
    let p = parity(&space);
    let swap = {
        let mut m = czero(2, 2);
        m[(0, 1)] = C_ONE;
        m[(1, 0)] = C_ONE;
        m
    };
    let cases: Vec<(&str, SymmetrySpec)> = vec![
        (
            "time reversal",
            SymmetrySpec::time_reversal(UnitaryMatrix::new(ceye(2)).unwrap()).unwrap(),
        ),
        (
            "charge conjugation",
            SymmetrySpec::charge_conjugation(UnitaryMatrix::new(ceye(2)).unwrap()).unwrap(),
        ),
        (
            "chiral",
            SymmetrySpec::chiral(UnitaryMatrix::new(one_pq(1, 1)).unwrap()).unwrap(),
        ),
        (
            "mode swap",
            SymmetrySpec::regular(UnitaryMatrix::new(swap).unwrap()),
        ),
    ];

    let mut worst: f64 = 0.0;
    for (name, spec) in &cases {
        let sign = generator_sign(spec.kind());
        let tau = LiftedInvolution::from_symmetry(&space, spec).unwrap();
        for rep in 0..3u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(95_000 + 10 * rep);

            // free part plus an even interaction, then projected onto the
            // compatible generators; both components survive generically
            let h = random_hermitian(2, &mut rng).into_mat();
            let free = quadratic_hamiltonian(&space, &HermitianMatrix::new_unchecked(h)).unwrap();
            let free = free.matrix() * Complex64::new(0.6 / free.matrix().norm(), 0.0);
            let bump = random_hermitian(4, &mut rng).into_mat();
            let bump = hermitize(&((&bump + p.matrix() * &bump * p.matrix()) * Complex64::new(0.5, 0.0)));
            let bump = &bump * Complex64::new(0.2 / bump.norm(), 0.0);
            let raw = free + bump;
            let k = hermitize(&((&raw + tau.apply(&raw) * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0)));
            assert!(
                fro_dist(&tau.apply(&k), &(&k * Complex64::new(sign, 0.0))) <= 1.0e-10,
                "{name}: generator projection"
            );

            let u = expm(&(&k * -C_I)).unwrap();
            let op = InteractingOp::new(FockOperator::new(&space, u).unwrap()).unwrap();
            let dec = weak_decompose(&op).unwrap();
            assert_eq!(dec.status(), WeakStatus::Weak, "{name} rep {rep}");
            assert!(
                dec.distance() > 5.0e-3,
                "{name} rep {rep}: input degenerated to free (distance {:.3e})",
                dec.distance()
            );

            let r = involution_compatibility_check(&tau, &dec).unwrap();
            assert!(r <= 1.0e-8, "{name} rep {rep}: path residual {r:.3e}");
            worst = worst.max(r);
        }
    }

    println!(
        "4 lifted symmetries, 3 interacting inputs each: worst path residual {worst:.3e} (bound 1e-8)"
    );
}
