//! One function per subcommand, each filling a report and mapping library
//! errors onto the exit-code bands.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use tenfold::cartan::{class_membership, time_evolution};
use tenfold::equivariant::{
    equivariant_dimension, is_equivariant, sample_equivariant, structure_residual,
    FreeHamiltonian,
};
use tenfold::fock::{
    annihilation, creation, parity, quadratic_hamiltonian, FockOperator, FockSpace, EVEN_TOL,
};
use tenfold::mat::{
    ceye, czero, expm, fro_dist, CMat, HermitianMatrix, UnitaryMatrix, HERMITIAN_TOL,
    STRUCTURE_TOL, UNITARY_TOL,
};
use tenfold::suspension::{
    suspend, verify_suspension_identity, Spectrum, SpectrumLevel, SuspensionInput,
};
use tenfold::symmetry::{
    canonical_symmetries, convenient_basis, signature_of, CazClass, CazLabel, SymmetryKind,
    SymmetrySpec,
};
use tenfold::weak::{
    example_path, nearest_free, ortho_complement_basis, retract_h, weak_decompose,
    weak_decompose_with, InteractingHamiltonian, InteractingOp, NearestFreeOpts, WeakStatus,
    DEFAULT_RESTARTS, MAX_WEAK_MODES,
};

use crate::io::{emit_matrix_file, parse_matrix_file, MatrixFile, Metadata};
use crate::report::Report;
use crate::{lift, CmdError, SpectrumArg, Suite};

/// Flags shared by every subcommand.
pub struct Ctx {
    /// Global tolerance override for all checks.
    pub tol: Option<f64>,
    /// TENFOLD_SEED environment default.
    pub seed_env: Option<u64>,
}

impl Ctx {
    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

fn load(path: &Path, report: &mut Report) -> Result<MatrixFile, CmdError> {
    let (mf, bytes) = parse_matrix_file(path)?;
    report.absorb(&bytes);
    Ok(mf)
}

fn square_matrix(mf: &MatrixFile, path: &Path) -> Result<CMat, CmdError> {
    if mf.rows != mf.cols {
        return Err(CmdError::Usage(format!(
            "{}: matrix is {}x{}, expected square",
            path.display(),
            mf.rows,
            mf.cols
        )));
    }
    Ok(mf.to_matrix())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn kind_tag(kind: SymmetryKind) -> &'static str {
    match kind {
        SymmetryKind::Regular => "regular",
        SymmetryKind::TimeReversal => "time_reversal",
        SymmetryKind::ChargeConjugation => "charge_conjugation",
        SymmetryKind::Chiral => "chiral",
    }
}

// Checks unitarity (recorded), then builds the spec for the tagged kind.
fn symmetry_spec(
    mf: &MatrixFile,
    path: &Path,
    ctx: &Ctx,
    report: &mut Report,
) -> Result<SymmetrySpec, CmdError> {
    let tag = mf.kind_tag().ok_or_else(|| {
        CmdError::Usage(format!(
            "{}: missing metadata.kind; tag the symmetry as one of \
             regular, time_reversal, charge_conjugation, chiral",
            path.display()
        ))
    })?;
    let m = square_matrix(mf, path)?;
    let n = m.nrows();
    let residual = fro_dist(&(&m * &m.adjoint()), &ceye(n));
    let tol = ctx.tol_or(UNITARY_TOL * n as f64);
    if !report.check(&format!("unitary[{}]", stem(path)), residual, tol) {
        return Err(CmdError::Check(format!(
            "{}: symmetry block is not unitary",
            path.display()
        )));
    }
    let u = UnitaryMatrix::new_unchecked(m);
    match tag {
        "regular" => Ok(SymmetrySpec::regular(u)),
        "time_reversal" => SymmetrySpec::time_reversal(u).map_err(lift),
        "charge_conjugation" => SymmetrySpec::charge_conjugation(u).map_err(lift),
        "chiral" => SymmetrySpec::chiral(u).map_err(lift),
        other => Err(CmdError::Usage(format!(
            "{}: unknown symmetry kind {other:?}",
            path.display()
        ))),
    }
}

fn load_symmetries(
    paths: &[PathBuf],
    ctx: &Ctx,
    report: &mut Report,
) -> Result<Vec<SymmetrySpec>, CmdError> {
    let mut specs = Vec::with_capacity(paths.len());
    for path in paths {
        let mf = load(path, report)?;
        specs.push(symmetry_spec(&mf, path, ctx, report)?);
    }
    Ok(specs)
}

fn signature_string(specs: &[SymmetrySpec]) -> Result<(CazLabel, String), CmdError> {
    let sig = signature_of(specs).map_err(lift)?;
    let label = sig.label().map_err(lift)?;
    Ok((
        label,
        format!("({},{},{})", sig.eps_s, sig.eps_c, sig.eps_t),
    ))
}

pub fn classify(sym: &[PathBuf], ctx: &Ctx, report: &mut Report) -> Result<(), CmdError> {
    let specs = load_symmetries(sym, ctx, report)?;
    for (path, spec) in sym.iter().zip(&specs) {
        report.result(
            &format!("input[{}]", stem(path)),
            format!("{} {}x{}", kind_tag(spec.kind()), spec.dim(), spec.dim()),
        );
    }
    let (label, sig) = signature_string(&specs)?;
    report.result("class", label.as_str());
    report.result("signature", sig);
    Ok(())
}

// Chiral blocks are idempotent after construction, so the +1 eigenspace
// dimension is read off the trace.
fn chiral_block_size(specs: &[SymmetrySpec]) -> Option<usize> {
    let s = specs.iter().find(|s| s.kind() == SymmetryKind::Chiral)?;
    let trace: f64 = (0..s.dim()).map(|i| s.block()[(i, i)].re).sum();
    Some(((s.dim() as f64 + trace) / 2.0).round() as usize)
}

pub fn normalize(
    sym: &[PathBuf],
    out: &Path,
    ctx: &Ctx,
    report: &mut Report,
) -> Result<(), CmdError> {
    let specs = load_symmetries(sym, ctx, report)?;
    let (label, sig) = signature_string(&specs)?;
    report.result("class", label.as_str());
    report.result("signature", sig);

    let r = convenient_basis(&specs).map_err(lift)?;
    let n = specs[0].dim();
    let m = label.has_block_size().then(|| {
        chiral_block_size(&specs).expect("chiral-split classes carry a chiral symmetry")
    });
    let cls = CazClass::new(label, n, m).map_err(lift)?;
    let canon = canonical_symmetries(&cls).map_err(lift)?;

    std::fs::create_dir_all(out)
        .map_err(|e| CmdError::Usage(format!("cannot create {}: {e}", out.display())))?;
    let ctol = ctx.tol_or(1e-8);
    for (path, spec) in sym.iter().zip(&specs) {
        let rotated = spec.conjugated(&r);
        if let Some(reference) = canon.iter().find(|c| c.kind() == rotated.kind()) {
            report.check(
                &format!("canonical[{}]", stem(path)),
                fro_dist(rotated.block(), reference.block()),
                ctol,
            );
        }
        let mf = MatrixFile::from_matrix(
            rotated.block(),
            Some(Metadata {
                class: Some(label.as_str().to_owned()),
                kind: Some(kind_tag(rotated.kind()).to_owned()),
            }),
        );
        let dest = out.join(format!("{}.json", stem(path)));
        emit_matrix_file(&dest, &mf)?;
        report.result(&format!("out[{}]", stem(path)), dest.display().to_string());
    }

    let basis = MatrixFile::from_matrix(
        r.as_mat(),
        Some(Metadata {
            class: Some(label.as_str().to_owned()),
            kind: None,
        }),
    );
    let dest = out.join("basis.json");
    emit_matrix_file(&dest, &basis)?;
    report.result("basis", dest.display().to_string());
    Ok(())
}

fn resolve_class(
    class: &str,
    n: usize,
    m: Option<usize>,
    report: &mut Report,
) -> Result<CazClass, CmdError> {
    let label = CazLabel::parse(class).map_err(lift)?;
    let m = match (label.has_block_size(), m) {
        (true, None) => {
            report.result("m", n / 2);
            Some(n / 2)
        }
        (_, given) => given,
    };
    CazClass::new(label, n, m).map_err(lift)
}

// Shared head of check-hamiltonian and suspend: hermiticity gate plus the
// per-condition equivariance records.
fn checked_hermitian(
    mat: CMat,
    cls: &CazClass,
    ctx: &Ctx,
    report: &mut Report,
) -> Result<HermitianMatrix, CmdError> {
    let n = mat.nrows();
    let residual = fro_dist(&mat, &mat.adjoint());
    if !report.check("hermitian", residual, ctx.tol_or(HERMITIAN_TOL * n as f64)) {
        return Err(CmdError::Check("input matrix is not Hermitian".into()));
    }
    let h = HermitianMatrix::new_unchecked(mat);
    let stol = ctx.tol_or(STRUCTURE_TOL);
    report.check(
        "structure",
        structure_residual(&h, cls).map_err(lift)?,
        stol,
    );
    let eq = is_equivariant(&h, cls, stol).map_err(lift)?;
    for (name, residual) in [
        ("equivariant[chiral]", eq.chiral),
        ("equivariant[charge]", eq.charge),
        ("equivariant[time_reversal]", eq.time_reversal),
    ] {
        if let Some(residual) = residual {
            report.check(name, residual, stol);
        }
    }
    Ok(h)
}

pub fn check_hamiltonian(
    class: &str,
    n: usize,
    m: Option<usize>,
    input: &Path,
    ctx: &Ctx,
    report: &mut Report,
) -> Result<(), CmdError> {
    let cls = resolve_class(class, n, m, report)?;
    report.result("class", cls.to_string());
    let mf = load(input, report)?;
    let mat = square_matrix(&mf, input)?;
    if mat.nrows() != n {
        return Err(CmdError::Usage(format!(
            "{}: matrix is {}x{} but --n is {n}",
            input.display(),
            mat.nrows(),
            mat.nrows()
        )));
    }
    checked_hermitian(mat, &cls, ctx, report)?;
    Ok(())
}

pub fn sample(
    class: &str,
    n: usize,
    m: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
    ctx: &Ctx,
    report: &mut Report,
) -> Result<(), CmdError> {
    let cls = resolve_class(class, n, m, report)?;
    report.result("class", cls.to_string());
    let seed = seed.or(ctx.seed_env).unwrap_or(0);
    report.set_seed(seed);
    let fh = sample_equivariant(&cls, seed).map_err(lift)?;
    report.check(
        "structure",
        structure_residual(fh.hamiltonian(), &cls).map_err(lift)?,
        ctx.tol_or(STRUCTURE_TOL),
    );
    let mf = MatrixFile::from_matrix(
        fh.matrix(),
        Some(Metadata {
            class: Some(cls.label().as_str().to_owned()),
            kind: None,
        }),
    );
    report.result("hamiltonian", &mf);
    if let Some(out) = out {
        emit_matrix_file(out, &mf)?;
        report.result("out", out.display().to_string());
    }
    Ok(())
}

pub fn suspend_cmd(
    spectrum: SpectrumArg,
    level: usize,
    theta: f64,
    input: &Path,
    m: Option<usize>,
    out: Option<&Path>,
    ctx: &Ctx,
    report: &mut Report,
) -> Result<(), CmdError> {
    let spectrum = match spectrum {
        SpectrumArg::Ku => Spectrum::KU,
        SpectrumArg::Ko => Spectrum::KO,
    };
    let mf = load(input, report)?;
    let mat = square_matrix(&mf, input)?;
    let n = mat.nrows();
    let label = spectrum.level_label(level);
    let m = match (label.has_block_size(), m) {
        (true, None) => {
            report.result("m", n / 2);
            Some(n / 2)
        }
        (_, given) => given,
    };
    let lvl = SpectrumLevel::new(spectrum, level, n, m).map_err(lift)?;
    report.result("source", lvl.class().to_string());

    let h = checked_hermitian(mat, lvl.class(), ctx, report)?;
    let fh = FreeHamiltonian::new(h.clone(), *lvl.class()).map_err(lift)?;
    let sus = SuspensionInput::new(lvl, fh, theta).map_err(lift)?;
    let evolved = suspend(&sus).map_err(lift)?;

    report.check(
        "closed_form",
        verify_suspension_identity(&lvl, &h, theta).map_err(lift)?,
        ctx.tol_or(1e-9),
    );
    let target = lvl.target().map_err(lift)?;
    let ltol = ctx.tol_or(1e-8);
    let membership = class_membership(evolved.unitary(), target.class(), ltol).map_err(lift)?;
    report.check("landing", membership.residual, ltol);
    report.result(
        "target",
        format!("{} (level {})", target.class(), target.level()),
    );

    let out_mf = MatrixFile::from_matrix(
        evolved.matrix(),
        Some(Metadata {
            class: Some(target.class().label().as_str().to_owned()),
            kind: None,
        }),
    );
    report.result("suspension", &out_mf);
    if let Some(out) = out {
        emit_matrix_file(out, &out_mf)?;
        report.result("out", out.display().to_string());
    }
    Ok(())
}

pub fn decompose(
    n: usize,
    input: &Path,
    restarts: Option<usize>,
    seed: Option<u64>,
    ctx: &Ctx,
    report: &mut Report,
) -> Result<(), CmdError> {
    if n == 0 || n > MAX_WEAK_MODES {
        return Err(CmdError::Usage(format!(
            "mode count {n} outside supported range 1..={MAX_WEAK_MODES}"
        )));
    }
    let mf = load(input, report)?;
    let mat = square_matrix(&mf, input)?;
    let dim = 1usize << n;
    if mat.nrows() != dim {
        return Err(CmdError::Usage(format!(
            "{}: matrix is {}x{}, a Fock operator on {n} modes is {dim}x{dim}",
            input.display(),
            mat.nrows(),
            mat.nrows()
        )));
    }
    let space = FockSpace::new(n).map_err(lift)?;

    let unitary_res = fro_dist(&(mat.adjoint() * &mat), &ceye(dim));
    if !report.check("unitary", unitary_res, ctx.tol_or(UNITARY_TOL * dim as f64)) {
        return Err(CmdError::Check("input operator is not unitary".into()));
    }
    let op = FockOperator::new(&space, mat).map_err(lift)?;
    let p = parity(&space);
    let even_res = fro_dist(
        &(op.matrix() * p.matrix()),
        &(p.matrix() * op.matrix()),
    );
    if !report.check("even", even_res, ctx.tol_or(EVEN_TOL * dim as f64)) {
        return Err(CmdError::Check(
            "input operator does not commute with fermion parity".into(),
        ));
    }
    let u = InteractingOp::new(op).map_err(lift)?;

    let seed = seed.or(ctx.seed_env).unwrap_or(0);
    report.set_seed(seed);
    let opts = NearestFreeOpts {
        restarts: restarts.unwrap_or(DEFAULT_RESTARTS),
        seed,
        ..NearestFreeOpts::default()
    };
    let d = weak_decompose_with(&u, &opts).map_err(lift)?;

    report.result("status", d.status().to_string());
    report.result("distance", d.distance());
    report.result(
        "free_hamiltonian",
        MatrixFile::from_matrix(d.free_hamiltonian().as_mat(), None),
    );
    report.result("u0", MatrixFile::from_matrix(d.u0().matrix(), None));
    report.result("x", MatrixFile::from_matrix(d.x().matrix(), None));

    match d.status() {
        WeakStatus::Weak => {
            let minus_i = Complex64::new(0.0, -1.0);
            let rebuilt = d.u0().matrix() * expm(&(d.x().matrix() * minus_i)).map_err(lift)?;
            report.check(
                "reconstruction",
                fro_dist(&rebuilt, u.matrix()),
                ctx.tol_or(1e-8 * (dim as f64).sqrt()),
            );
        }
        WeakStatus::CutLocus => {
            // The tied-minimizer shell is the cut-locus evidence; surface it.
            let feet = nearest_free(&u, &opts).map_err(lift)?;
            report.result("minimizers", feet.len());
            if let (Some(first), Some(last)) = (feet.first(), feet.last()) {
                report.result("distance_gap", last.1 - first.1);
            }
        }
        WeakStatus::Ambiguous => {}
    }
    Ok(())
}

pub fn verify(suite: Suite, n_max: usize, ctx: &Ctx, report: &mut Report) -> Result<(), CmdError> {
    if n_max == 0 || n_max > 6 {
        return Err(CmdError::Usage(format!(
            "--n-max {n_max} outside supported range 1..=6"
        )));
    }
    let all = suite == Suite::All;
    if all || suite == Suite::Car {
        car_suite(n_max, ctx, report)?;
    }
    if all || suite == Suite::Tables {
        tables_suite(n_max, ctx, report)?;
    }
    if all || suite == Suite::Spectra {
        spectra_suite(ctx, report)?;
    }
    if all || suite == Suite::Weak {
        weak_suite(ctx, report)?;
    }
    Ok(())
}

fn car_suite(n_max: usize, ctx: &Ctx, report: &mut Report) -> Result<(), CmdError> {
    let tol = ctx.tol_or(1e-14);
    for n in 1..=n_max {
        let space = FockSpace::new(n).map_err(lift)?;
        let id = ceye(space.dim());
        let zero = czero(space.dim(), space.dim());
        let mut worst = 0.0f64;
        for i in 1..=n {
            for j in 1..=n {
                let ai = annihilation(&space, i).map_err(lift)?;
                let aj = annihilation(&space, j).map_err(lift)?;
                let ci = creation(&space, i).map_err(lift)?;
                let cj = creation(&space, j).map_err(lift)?;
                let delta = if i == j { &id } else { &zero };
                worst = worst
                    .max((&(&ai * &aj) + &(&aj * &ai)).matrix().norm())
                    .max((&(&ci * &cj) + &(&cj * &ci)).matrix().norm())
                    .max(((&(&ai * &cj) + &(&cj * &ai)).matrix() - delta).norm());
            }
        }
        report.check(&format!("car[n={n}]"), worst, tol);
    }
    Ok(())
}

// Largest class dimension within the cap, preferring one whose equivariant
// space is not just {0} so the sampled checks see real matrices.
fn largest_legal(label: CazLabel, n_max: usize) -> Option<CazClass> {
    let mut fallback = None;
    for n in (1..=n_max).rev() {
        let m = label.has_block_size().then_some(n / 2);
        let Ok(cls) = CazClass::new(label, n, m) else {
            continue;
        };
        if equivariant_dimension(&cls).map(|d| d > 0).unwrap_or(false) {
            return Some(cls);
        }
        fallback.get_or_insert(cls);
    }
    fallback
}

// Real dimension of the equivariant space, counted off the class's block
// pattern: complex entries count twice, real or imaginary ones once.
fn pattern_dimension(cls: &CazClass) -> usize {
    let n = cls.n();
    let k = n / 2;
    let m = cls.m().unwrap_or(0);
    match cls.label() {
        CazLabel::A => n * n,
        CazLabel::AIII => 2 * m * (n - m),
        CazLabel::AI => n * (n + 1) / 2,
        CazLabel::AII => k * (2 * k - 1),
        CazLabel::D => n * (n - 1) / 2,
        CazLabel::C => k * (2 * k + 1),
        CazLabel::BDI => m * (n - m),
        CazLabel::CI => k * (k + 1),
        CazLabel::DIII => k * (k - 1),
        CazLabel::CII => m * (n - m),
    }
}

fn square_residual(spec: &SymmetrySpec) -> f64 {
    let u = spec.block();
    let n = u.nrows();
    let sq = match spec.kind() {
        SymmetryKind::Chiral => u * u,
        _ => u * u.map(|z| z.conj()),
    };
    let sign = spec.square_sign().unwrap_or(1);
    fro_dist(&sq, &(ceye(n) * Complex64::new(f64::from(sign), 0.0)))
}

fn tables_suite(n_max: usize, ctx: &Ctx, report: &mut Report) -> Result<(), CmdError> {
    let stol = ctx.tol_or(STRUCTURE_TOL);
    let mtol = ctx.tol_or(1e-8);
    for &label in CazLabel::ALL.iter() {
        let Some(cls) = largest_legal(label, n_max) else {
            report.result(
                &format!("skipped[{label}]"),
                format!("no legal dimension <= {n_max}"),
            );
            continue;
        };
        let canon = canonical_symmetries(&cls).map_err(lift)?;

        let relabeled = if canon.is_empty() {
            label == CazLabel::A
        } else {
            signature_of(&canon)
                .and_then(|sig| sig.label())
                .map(|l| l == label)
                .unwrap_or(false)
        };
        report.check(
            &format!("signature[{label}]"),
            if relabeled { 0.0 } else { 1.0 },
            0.0,
        );

        let squares = canon
            .iter()
            .filter(|s| s.kind() != SymmetryKind::Regular)
            .map(square_residual)
            .fold(0.0f64, f64::max);
        report.check(&format!("squares[{label}]"), squares, 0.0);

        let enumerated = equivariant_dimension(&cls).map_err(lift)?;
        report.check(
            &format!("dimension[{label}]"),
            (enumerated as f64 - pattern_dimension(&cls) as f64).abs(),
            0.0,
        );

        let mut worst = 0.0f64;
        for seed in 0..3 {
            let fh = sample_equivariant(&cls, seed).map_err(lift)?;
            worst = worst.max(structure_residual(fh.hamiltonian(), &cls).map_err(lift)?);
        }
        report.check(&format!("structure[{label}]"), worst, stol);

        let fh = sample_equivariant(&cls, 5).map_err(lift)?;
        let ev = time_evolution(&fh).map_err(lift)?;
        let membership = class_membership(ev.unitary(), &cls, mtol).map_err(lift)?;
        report.check(&format!("membership[{label}]"), membership.residual, mtol);
    }
    Ok(())
}

// Smallest dimension whose equivariant space is nonzero, so random inputs
// exist for the level.
fn smallest_profile(spectrum: Spectrum, level: usize) -> Option<(SpectrumLevel, FreeHamiltonian)> {
    let label = spectrum.level_label(level);
    for n in 1..=8 {
        let m = label.has_block_size().then_some(n / 2);
        let Ok(lvl) = SpectrumLevel::new(spectrum, level, n, m) else {
            continue;
        };
        if equivariant_dimension(lvl.class()).map(|d| d == 0).unwrap_or(true) {
            continue;
        }
        let Ok(fh) = sample_equivariant(lvl.class(), 11) else {
            continue;
        };
        return Some((lvl, fh));
    }
    None
}

fn spectra_suite(ctx: &Ctx, report: &mut Report) -> Result<(), CmdError> {
    let itol = ctx.tol_or(1e-9);
    let ltol = ctx.tol_or(1e-8);
    for (spectrum, tag) in [(Spectrum::KU, "ku"), (Spectrum::KO, "ko")] {
        for level in 0..spectrum.period() {
            let Some((lvl, fh)) = smallest_profile(spectrum, level) else {
                report.result(&format!("skipped[{tag}:{level}]"), "no usable profile");
                continue;
            };
            let target = lvl.target().map_err(lift)?;
            let mut worst_identity = 0.0f64;
            let mut worst_landing = 0.0f64;
            for theta in [0.0, 0.3, 0.5, 1.0] {
                worst_identity = worst_identity.max(
                    verify_suspension_identity(&lvl, fh.hamiltonian(), theta).map_err(lift)?,
                );
                let sus = SuspensionInput::new(lvl, fh.clone(), theta).map_err(lift)?;
                let evolved = suspend(&sus).map_err(lift)?;
                let membership =
                    class_membership(evolved.unitary(), target.class(), ltol).map_err(lift)?;
                worst_landing = worst_landing.max(membership.residual);
            }
            report.check(&format!("identity[{tag}:{level}]"), worst_identity, itol);
            report.check(&format!("landing[{tag}:{level}]"), worst_landing, ltol);
        }
    }
    Ok(())
}

fn weak_suite(ctx: &Ctx, report: &mut Report) -> Result<(), CmdError> {
    let space = FockSpace::new(2).map_err(lift)?;
    let minus_i = Complex64::new(0.0, -1.0);

    // A generic free evolution: class A admits every Hermitian block.
    let cls = CazClass::new(CazLabel::A, 2, None).map_err(lift)?;
    let h = sample_equivariant(&cls, 3).map_err(lift)?;
    let quad = quadratic_hamiltonian(&space, h.hamiltonian()).map_err(lift)?;
    let u0 = InteractingHamiltonian::new(quad)
        .map_err(lift)?
        .evolve()
        .map_err(lift)?;

    let d = weak_decompose(&u0).map_err(lift)?;
    let free_res = if d.status() == WeakStatus::Weak {
        d.distance()
    } else {
        1.0
    };
    report.check("free[n=2]", free_res, ctx.tol_or(1e-6));

    // Plant an orthogonal interaction generator and recover it.
    let complement = ortho_complement_basis(2).map_err(lift)?;
    let mut x = czero(space.dim(), space.dim());
    for (j, b) in complement.iter().enumerate() {
        x += b.matrix() * Complex64::new(1.0 / (j as f64 + 2.0), 0.0);
    }
    x *= Complex64::new(0.2 / x.norm(), 0.0);
    let u_mat = u0.matrix() * expm(&(&x * minus_i)).map_err(lift)?;
    let op = FockOperator::new(&space, u_mat.clone()).map_err(lift)?;
    let u = InteractingOp::new(op).map_err(lift)?;
    let d = weak_decompose(&u).map_err(lift)?;
    let recovery = if d.status() == WeakStatus::Weak {
        fro_dist(d.u0().matrix(), u0.matrix()).max(fro_dist(d.x().matrix(), &x))
    } else {
        1.0
    };
    report.check("roundtrip[n=2]", recovery, ctx.tol_or(1e-6));

    if d.status() == WeakStatus::Weak {
        let at0 = retract_h(&d, 0.0).map_err(lift)?;
        let at1 = retract_h(&d, 1.0).map_err(lift)?;
        let endpoints = fro_dist(at0.matrix(), d.u0().matrix())
            .max(fro_dist(at1.matrix(), &u_mat));
        report.check("retract[n=2]", endpoints, ctx.tol_or(1e-9));

        let p = parity(&space);
        let mut worst = 0.0f64;
        for t in [0.25, 0.5, 0.75] {
            let mid = retract_h(&d, t).map_err(lift)?;
            worst = worst
                .max(fro_dist(
                    &(mid.matrix() * p.matrix()),
                    &(p.matrix() * mid.matrix()),
                ))
                .max(fro_dist(
                    &(mid.matrix().adjoint() * mid.matrix()),
                    &ceye(space.dim()),
                ));
        }
        report.check("path[n=2]", worst, ctx.tol_or(1e-10));
    }

    // The documented obstruction: the loop's midpoint sits on the cut locus.
    let mid = example_path(0.5).map_err(lift)?;
    let d = weak_decompose(&mid).map_err(lift)?;
    report.check(
        "example_cut_locus",
        if d.status() == WeakStatus::CutLocus {
            0.0
        } else {
            1.0
        },
        0.0,
    );
    Ok(())
}
