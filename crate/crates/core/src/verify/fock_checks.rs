//! Identities and bounds on the truncated Fock space alone.

use crate::config::Model;
use crate::error::Result;
use crate::fock::{self, FockBasis};
use crate::linalg::krylov::{operator_norm, KrylovOptions};
use crate::linalg::{dense, norm, C64, I, ONE};
use crate::one_particle::{FrameAxes, ModeGrid, OneParticleVector};
use crate::rng;
use crate::sparse::{Csr, SquareCsr};
use crate::try_check;

use super::{relative_gap, Check, CheckResult};

fn random_vector(r: &mut rng::StreamRng, slots: usize) -> OneParticleVector {
    OneParticleVector::new(rng::complex_gaussian(r, slots))
}

fn identity_scaled(n: usize, c: C64) -> Csr {
    Csr::identity(n).scale(c)
}

/// `‖P (M) P‖_F` with `P` the projection onto quanta `≤ m`.
fn masked_frobenius(basis: &FockBasis, m: &Csr, top: usize) -> f64 {
    let mask = basis.sector_mask(top);
    m.sandwich(&mask, &mask).frobenius()
}

/// Largest singular value, iterative and (below `dense_limit`) dense.
fn norm_pair(m: Csr, dense_limit: Option<usize>) -> Result<(f64, Option<f64>)> {
    let dense_val = match dense_limit {
        Some(limit) if m.rows() <= limit => Some(dense::max_singular_value(&m.to_dense())),
        _ => None,
    };
    let est = operator_norm(&SquareCsr::new(m), &KrylovOptions::default())?;
    Ok((est.value, dense_val))
}

fn safe_label(basis: &FockBasis, margin: usize) -> String {
    format!("quanta ≤ {} (N_max − {margin})", basis.n_max().saturating_sub(margin))
}

/// Basis used by the Fock-level checks of a model.
pub fn check_basis(model: &Model) -> Result<FockBasis> {
    FockBasis::new(
        model.modes.slots(),
        model.config.fock.check_n_max,
        model.config.budget.composite,
    )
}

/// CCR and the field commutator on random inputs.
pub fn ccr(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let tol = cfg.tolerances.exact;
    let grid = &*model.modes;
    let basis = match check_basis(model) {
        Ok(b) => b,
        Err(e) => return vec![Check::new("ccr", "ccr_basis", "truncated Fock basis").error(&e)],
    };
    let n = basis.dim();
    let top = basis.n_max() - 2;
    let mut r = rng::stream(cfg.seed, "ccr");
    let mut worst = [0.0f64; 4];
    let result = (|| -> Result<()> {
        for _ in 0..cfg.checks.samples {
            let f = random_vector(&mut r, grid.slots());
            let g = random_vector(&mut r, grid.slots());
            let af = fock::annihilation(&basis, grid, &f)?;
            let ag = fock::annihilation(&basis, grid, &g)?;
            let adf = fock::creation(&basis, grid, &f)?;
            let adg = fock::creation(&basis, grid, &g)?;
            let fg = grid.inner(&f, &g);
            let mixed = af.matrix().commutator(adg.matrix())?;
            let mixed = mixed.add(ONE, &identity_scaled(n, fg), -ONE)?;
            worst[0] = worst[0].max(masked_frobenius(&basis, &mixed, top));
            worst[1] = worst[1].max(masked_frobenius(&basis, &af.matrix().commutator(ag.matrix())?, top));
            worst[2] = worst[2].max(masked_frobenius(&basis, &adf.matrix().commutator(adg.matrix())?, top));
            let phf = fock::field(&basis, grid, &f)?;
            let phg = fock::field(&basis, grid, &g)?;
            let c = phf.matrix().commutator(phg.matrix())?;
            let c = c.add(ONE, &identity_scaled(n, I * fg.im), -ONE)?;
            worst[3] = worst[3].max(masked_frobenius(&basis, &c, top));
        }
        Ok(())
    })();
    let specs = [
        ("ccr_mixed", "[a(f), a*(g)] = (f,g)"),
        ("ccr_annihilation", "[a(f), a(g)] = 0"),
        ("ccr_creation", "[a*(f), a*(g)] = 0"),
        ("field_commutator", "[φ(f), φ(g)] = i Im(f,g)"),
    ];
    specs
        .iter()
        .zip(worst)
        .map(|((name, id), w)| {
            let mut c = Check::new("ccr", *name, id).safe(safe_label(&basis, 2));
            if let Err(e) = &result {
                return c.error(e);
            }
            c.detail("samples", cfg.checks.samples);
            c.detail("fock_dim", n);
            c.detail("norm", "Frobenius of the projected difference");
            c.residual(w, tol)
        })
        .collect()
}

/// `[H_f, φ(h)] = −iφ(iωh)` on quanta `≤ N_max − 1`.
pub fn field_energy_commutator(model: &Model) -> CheckResult {
    let cfg = &model.config;
    let grid = &*model.modes;
    let c = Check::new("field_energy", "field_energy_commutator", "[H_f, φ(h)] = −iφ(iωh)");
    let basis = try_check!(c, check_basis(model));
    let c = c.safe(safe_label(&basis, 1));
    let hf = try_check!(c, fock::field_energy(&basis, grid));
    let mut r = rng::stream(cfg.seed, "field_energy");
    let mut worst = 0.0f64;
    for _ in 0..cfg.checks.samples {
        let h = random_vector(&mut r, grid.slots());
        let iwh = grid.multiply_omega(&h).scaled(I);
        let ph = try_check!(c, fock::field(&basis, grid, &h));
        let piw = try_check!(c, fock::field(&basis, grid, &iwh));
        let lhs = try_check!(c, hf.matrix().commutator(ph.matrix()));
        let d = try_check!(c, lhs.add(ONE, piw.matrix(), I));
        worst = worst.max(masked_frobenius(&basis, &d, basis.n_max() - 1));
    }
    let mut c = c;
    c.detail("samples", cfg.checks.samples);
    c.residual(worst, cfg.tolerances.resolvent)
}

/// `‖P φ(h)(H_f+1)^{-1/2} P‖ ≤ √2‖h‖_ω` with `P` onto quanta `≤ N_max − margin`.
pub fn check_field_bound(
    basis: &FockBasis,
    grid: &ModeGrid,
    h: &OneParticleVector,
    safe_margin: usize,
    tolerance: f64,
    dense_limit: Option<usize>,
) -> CheckResult {
    let mut c = Check::new("norm_bounds", "field_bound", "‖φ(h)(H_f+1)^{-1/2}‖ ≤ √2‖h‖_ω")
        .safe(safe_label(basis, safe_margin));
    let (measured, oracle) = try_check!(c, field_bound_norm(basis, grid, h, safe_margin, dense_limit));
    c.detail("dense_oracle", oracle);
    c.at_most(measured, 2f64.sqrt() * grid.omega_norm(h), tolerance)
}

fn field_bound_norm(
    basis: &FockBasis,
    grid: &ModeGrid,
    h: &OneParticleVector,
    margin: usize,
    dense_limit: Option<usize>,
) -> Result<(f64, Option<f64>)> {
    let mask = basis.sector_mask(basis.n_max().saturating_sub(margin));
    let w: Vec<f64> = basis
        .diagonal_values(&grid.slot_omegas())
        .iter()
        .zip(&mask)
        .map(|(e, m)| m / (e + 1.0).sqrt())
        .collect();
    let m = fock::field(basis, grid, h)?.matrix().sandwich(&mask, &w);
    norm_pair(m, dense_limit)
}

/// `‖P φ(g)φ(h)(H_f+1)^{-1} P‖ ≤ 4‖g‖_ω‖h‖_ω`.
pub fn check_quadratic_field_bound(
    basis: &FockBasis,
    grid: &ModeGrid,
    g: &OneParticleVector,
    h: &OneParticleVector,
    safe_margin: usize,
    tolerance: f64,
    dense_limit: Option<usize>,
) -> CheckResult {
    let mut c = Check::new(
        "norm_bounds",
        "quadratic_field_bound",
        "‖φ(g)φ(h)(H_f+1)^{-1}‖ ≤ 4‖g‖_ω‖h‖_ω",
    )
    .safe(safe_label(basis, safe_margin));
    let (measured, oracle) =
        try_check!(c, quadratic_bound_norm(basis, grid, g, h, safe_margin, dense_limit));
    c.detail("dense_oracle", oracle);
    c.at_most(measured, 4.0 * grid.omega_norm(g) * grid.omega_norm(h), tolerance)
}

fn quadratic_bound_norm(
    basis: &FockBasis,
    grid: &ModeGrid,
    g: &OneParticleVector,
    h: &OneParticleVector,
    margin: usize,
    dense_limit: Option<usize>,
) -> Result<(f64, Option<f64>)> {
    let mask = basis.sector_mask(basis.n_max().saturating_sub(margin));
    let w: Vec<f64> = basis
        .diagonal_values(&grid.slot_omegas())
        .iter()
        .zip(&mask)
        .map(|(e, m)| m / (e + 1.0))
        .collect();
    let prod = fock::field(basis, grid, g)?.mul(&fock::field(basis, grid, h)?);
    norm_pair(prod.matrix().sandwich(&mask, &w), dense_limit)
}

/// Worst of a batch of bound checks: the one with the largest excess over
/// its bound, with batch statistics attached.
fn worst_of(name: &str, results: Vec<CheckResult>, oracle_tol: f64) -> Vec<CheckResult> {
    let count = results.len();
    let failed = results.iter().filter(|r| !r.passed).count();
    let max_ratio = results
        .iter()
        .filter(|r| r.bound > 0.0)
        .map(|r| r.measured / r.bound)
        .fold(0.0, f64::max);
    let mut oracle_gap = 0.0f64;
    let mut oracle_count = 0;
    for r in &results {
        if let Some(d) = r.details.get("dense_oracle").and_then(|v| v.as_f64()) {
            oracle_gap = oracle_gap.max(relative_gap(r.measured, d, 1e-300));
            oracle_count += 1;
        }
    }
    let Some(mut worst) = results
        .into_iter()
        .max_by(|a, b| (a.measured - a.bound).total_cmp(&(b.measured - b.bound)))
    else {
        return Vec::new();
    };
    worst.name = name.into();
    if let serde_json::Value::Object(m) = &mut worst.details {
        m.insert("samples".into(), count.into());
        m.insert("failed_samples".into(), failed.into());
        m.insert("max_ratio_to_bound".into(), max_ratio.into());
    }
    worst.passed = worst.passed && failed == 0;
    let mut out = vec![worst];
    if oracle_count > 0 {
        let mut c = Check::new("norm_bounds", format!("{name}_dense_oracle"), "iterative norm = dense SVD");
        c.detail("compared", oracle_count);
        out.push(c.residual(oracle_gap, oracle_tol));
    }
    out
}

/// Norm bounds on random inputs, the single-mode oscillator case and the
/// annihilation bound.
pub fn norm_bounds(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let tol = cfg.tolerances.bound;
    let grid = &*model.modes;
    let dense_limit = cfg.dense_oracle.then_some(cfg.budget.dense);
    let basis = match check_basis(model) {
        Ok(b) => b,
        Err(e) => return vec![Check::new("norm_bounds", "norm_bounds_basis", "truncated Fock basis").error(&e)],
    };
    let mut r = rng::stream(cfg.seed, "norm_bounds");
    let mut linear = Vec::new();
    let mut quadratic = Vec::new();
    for _ in 0..cfg.checks.bound_samples {
        let g = random_vector(&mut r, grid.slots());
        let h = random_vector(&mut r, grid.slots());
        linear.push(check_field_bound(&basis, grid, &h, 1, tol, dense_limit));
        quadratic.push(check_quadratic_field_bound(&basis, grid, &g, &h, 2, tol, dense_limit));
    }
    let mut out = worst_of("field_bound", linear, cfg.tolerances.iterative);
    out.extend(worst_of("quadratic_field_bound", quadratic, cfg.tolerances.iterative));
    out.extend(single_mode_bounds(cfg.checks.single_mode_n_max, tol, cfg.tolerances.iterative));
    out.push(annihilation_bound(model, &basis));
    out
}

/// `ω = 1`, `h = 1`: the bounds are 2 and 8; the measured values come from
/// the dense singular values of the oscillator truncation.
pub fn single_mode_bounds(n_max: usize, tol: f64, oracle_tol: f64) -> Vec<CheckResult> {
    let setup = || -> Result<(ModeGrid, FockBasis)> {
        let grid = ModeGrid::new(vec![[1.0, 0.0, 0.0]], vec![1.0], 1, 0.0, FrameAxes::default())?;
        let basis = FockBasis::new(1, n_max, usize::MAX)?;
        Ok((grid, basis))
    };
    let c = Check::new("norm_bounds", "single_mode_field_bound", "‖φ(1)(H_f+1)^{-1/2}‖ ≤ 2 for ω = 1");
    let (grid, basis) = try_check!(c, setup());
    let h = OneParticleVector::new(vec![ONE]);
    let mut out = Vec::new();
    let mut c = c.safe(safe_label(&basis, 1));
    let (it, dn) = try_check!(c, field_bound_norm(&basis, &grid, &h, 1, Some(usize::MAX)));
    let dn = dn.unwrap_or(f64::NAN);
    c.detail("iterative", it);
    c.detail("n_max", n_max);
    let gap = relative_gap(it, dn, 1e-300);
    out.push(c.at_most(dn, 2.0, tol));
    let mut c = Check::new(
        "norm_bounds",
        "single_mode_quadratic_bound",
        "‖φ(1)²(H_f+1)^{-1}‖ ≤ 8 for ω = 1",
    )
    .safe(safe_label(&basis, 2));
    let (it2, dn2) = try_check!(c, quadratic_bound_norm(&basis, &grid, &h, &h, 2, Some(usize::MAX)));
    let dn2 = dn2.unwrap_or(f64::NAN);
    c.detail("iterative", it2);
    c.detail("n_max", n_max);
    let gap = gap.max(relative_gap(it2, dn2, 1e-300));
    out.push(c.at_most(dn2, 8.0, tol));
    out.push(
        Check::new("norm_bounds", "single_mode_dense_oracle", "iterative norm = dense SVD")
            .residual(gap, oracle_tol),
    );
    out
}

/// `‖a(f)ψ‖ ≤ ‖f/√ω‖ ‖H_f^{1/2}ψ‖` on every basis state and on random
/// vectors; exact on the truncation since `a` only lowers quanta.
pub fn annihilation_bound(model: &Model, basis: &FockBasis) -> CheckResult {
    let cfg = &model.config;
    let grid = &*model.modes;
    let c = Check::new(
        "norm_bounds",
        "annihilation_bound",
        "‖a(f)ψ‖ ≤ ‖f/√ω‖ ‖H_f^{1/2}ψ‖",
    )
    .safe("all quanta");
    let mut r = rng::stream(cfg.seed, "annihilation_bound");
    let energies = basis.diagonal_values(&grid.slot_omegas());
    let n = basis.dim();
    let mut worst = 0.0f64;
    let mut vacuum = 0.0f64;
    for _ in 0..cfg.checks.bound_samples {
        let f = random_vector(&mut r, grid.slots());
        let a = try_check!(c, fock::annihilation(basis, grid, &f));
        let k = grid.inverse_sqrt_omega_norm(&f);
        let mut vectors: Vec<Vec<C64>> = (0..n)
            .map(|i| {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[i] = ONE;
                e
            })
            .collect();
        vectors.extend((0..100).map(|_| rng::complex_gaussian(&mut r, n)));
        for v in &vectors {
            let lhs = norm(&crate::linalg::LinearOperator::apply_vec(&a, v));
            let hv: f64 = v.iter().zip(&energies).map(|(x, e)| x.norm_sqr() * e).sum();
            let rhs = k * hv.sqrt();
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
            } else {
                vacuum = vacuum.max(lhs);
            }
        }
    }
    let mut c = c;
    c.detail("samples", cfg.checks.bound_samples);
    c.detail("vectors_per_sample", n + 100);
    c.detail("max_on_vacuum", vacuum);
    if vacuum > cfg.tolerances.exact {
        return c.at_most(f64::INFINITY, 1.0, cfg.tolerances.exact);
    }
    c.at_most(worst, 1.0, cfg.tolerances.exact)
}
