//! Identities and bounds for the x-dependent field on the composite space.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::config::Model;
use crate::error::Result;
use crate::fock::FockBasis;
use crate::linalg::krylov::{extremal_eigenpairs, operator_norm, Extremal, KrylovOptions};
use crate::linalg::{dense, dot, norm, LinearOperator, C64, I, ONE};
use crate::one_particle::{CouplingFamily, FormFactor, FrameAxes, ModeGrid};
use crate::pauli_fierz::assemble::{field_energy, field_energy_function, fock_sector, spatial_band};
use crate::pauli_fierz::coupling::{self, band_margins};
use crate::pauli_fierz::{
    assemble_ta, step1_commutator_operators, CompositeOperator, CompositeSpace, QuadraticTermSign, TaOperators,
};
use crate::rng;
use crate::try_check;

use super::{max_relative_residual, max_residual, probes, relative_gap, Check, CheckResult, ZeroOp};

fn fock_label(space: &CompositeSpace, margin: usize) -> String {
    format!("quanta ≤ {} (N_max − {margin})", space.fock.n_max().saturating_sub(margin))
}

fn band_label(margins: &[i64]) -> String {
    format!("spatial Fourier band shrunk by {margins:?} per axis")
}

/// Projection onto quanta `≤ N_max − margin`.
pub fn fock_projection(space: &Arc<CompositeSpace>, margin: usize) -> CompositeOperator {
    fock_sector(space, space.fock.n_max().saturating_sub(margin))
}

/// Fock projection followed by the spatial band for `band` multiples of
/// the mode extent.
pub fn safe_projection(space: &Arc<CompositeSpace>, margin: usize, band: i64) -> CompositeOperator {
    let p = fock_projection(space, margin);
    if band == 0 {
        return p;
    }
    let b = spatial_band(space, &band_margins(space, band));
    (&b * &p).tagged_hermitian()
}

/// Gaussian profile with independent entries at every grid point and slot.
pub fn random_profile(space: &CompositeSpace, r: &mut rng::StreamRng) -> Arc<Vec<C64>> {
    Arc::new(rng::complex_gaussian(r, space.spatial_size() * space.fock.slots()))
}

/// `c_s G_s(x)` with random per-slot `c_s`: band-limited like `G`.
pub fn random_band_limited(space: &CompositeSpace, base: &[C64], r: &mut rng::StreamRng) -> Arc<Vec<C64>> {
    let c = rng::complex_gaussian(r, space.fock.slots());
    coupling::scale_slots(space, base, &c)
}

/// `sup_x ‖G(x)‖_ω` for a folded profile.
pub fn sup_omega_norm(space: &CompositeSpace, profile: &[C64]) -> f64 {
    let slots = space.fock.slots();
    let om = space.modes.slot_omegas();
    (0..space.spatial_size())
        .map(|x| {
            profile[x * slots..(x + 1) * slots]
                .iter()
                .zip(&om)
                .map(|(v, w)| v.norm_sqr() * (1.0 + 1.0 / w))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// `[Φ(F), Φ(G)] = i Im(F,G)_𝔥` on random profiles.
pub fn field_commutator(model: &Model) -> CheckResult {
    let cfg = &model.config;
    let sp = &model.space;
    let p = fock_projection(sp, 2);
    let c = Check::new("ccr", "composite_field_commutator", "[Φ(F), Φ(G)] = i Im(F,G)_𝔥")
        .safe(fock_label(sp, 2));
    let mut r = rng::stream(cfg.seed, "composite_field_commutator");
    let psis = probes(cfg.seed, "composite_field_commutator_probes", sp.dim(), cfg.checks.samples, Some(&p));
    let mut worst = 0.0f64;
    for psi in &psis {
        let f = random_profile(sp, &mut r);
        let g = random_profile(sp, &mut r);
        let lhs = CompositeOperator::field(sp, f.clone()).commutator(&CompositeOperator::field(sp, g.clone()));
        let im: Vec<C64> = coupling::pointwise_inner(sp, &f, &g).iter().map(|v| I * v.im).collect();
        let rhs = CompositeOperator::spatial(sp, im);
        worst = worst.max(max_residual(&lhs, &rhs, std::slice::from_ref(psi)));
    }
    let mut c = c;
    c.detail("samples", psis.len());
    c.residual(worst, cfg.tolerances.exact)
}

/// `[H_f, Φ(G)] = −iΦ(iωG)` on random profiles.
pub fn field_energy_commutator(model: &Model) -> CheckResult {
    let cfg = &model.config;
    let sp = &model.space;
    let p = fock_projection(sp, 1);
    let hf = field_energy(sp);
    let mut r = rng::stream(cfg.seed, "composite_field_energy");
    let psis = probes(cfg.seed, "composite_field_energy_probes", sp.dim(), cfg.checks.samples, Some(&p));
    let mut worst = 0.0f64;
    for psi in &psis {
        let g = random_profile(sp, &mut r);
        let lhs = hf.commutator(&CompositeOperator::field(sp, g.clone()));
        let rhs = CompositeOperator::field(sp, coupling::i_omega(sp, &g)).scaled(-I);
        worst = worst.max(max_residual(&lhs, &rhs, std::slice::from_ref(psi)));
    }
    let mut c = Check::new("field_energy", "composite_field_energy_commutator", "[H_f, Φ(G)] = −iΦ(iωG)")
        .safe(fock_label(sp, 1));
    c.detail("samples", psis.len());
    c.residual(worst, cfg.tolerances.resolvent)
}

struct NormCase {
    measured: f64,
    bound: f64,
    oracle: Option<f64>,
}

fn composite_norm(op: &CompositeOperator, dense_limit: Option<usize>) -> Result<(f64, Option<f64>)> {
    let est = operator_norm(op, &KrylovOptions::default())?;
    let oracle = match dense_limit {
        Some(l) if op.dim() <= l => Some(dense::max_singular_value(&dense::materialize(op, l)?)),
        _ => None,
    };
    Ok((est.value, oracle))
}

fn summarize_norms(
    c: Check,
    cases: Result<Vec<NormCase>>,
    tol: f64,
    oracle_tol: f64,
) -> Vec<CheckResult> {
    let cases = match cases {
        Ok(v) => v,
        Err(e) => return vec![c.error(&e)],
    };
    let mut c = c;
    let worst = cases
        .iter()
        .max_by(|a, b| (a.measured - a.bound).total_cmp(&(b.measured - b.bound)))
        .map(|w| (w.measured, w.bound))
        .unwrap_or((0.0, 0.0));
    let failed = cases.iter().filter(|k| k.measured > k.bound + tol).count();
    let ratio = cases
        .iter()
        .filter(|k| k.bound > 0.0)
        .map(|k| k.measured / k.bound)
        .fold(0.0, f64::max);
    c.detail("samples", cases.len());
    c.detail("failed_samples", failed);
    c.detail("max_ratio_to_bound", ratio);
    let name = c.name.clone();
    let family = c.family.clone();
    let mut out = vec![c.at_most(if failed > 0 { f64::INFINITY } else { worst.0 }, worst.1, tol)];
    let gaps: Vec<f64> = cases
        .iter()
        .filter_map(|k| k.oracle.map(|o| relative_gap(k.measured, o, 1e-300)))
        .collect();
    if !gaps.is_empty() {
        let mut o = Check::new(&family, format!("{name}_dense_oracle"), "iterative norm = dense SVD");
        o.detail("compared", gaps.len());
        out.push(o.residual(gaps.iter().copied().fold(0.0, f64::max), oracle_tol));
    }
    out
}

/// `‖Φ(G)(H_f+1)^{-1/2}‖ ≤ √2 sup_x‖G(x)‖_ω` and
/// `‖Φ(F)Φ(G)(H_f+1)^{-1}‖ ≤ 4 sup‖F‖_ω sup‖G‖_ω` on the composite space.
pub fn norm_bounds(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let sp = &model.space;
    let dense_limit = cfg.dense_oracle.then_some(cfg.budget.dense);
    let p1 = fock_projection(sp, 1);
    let p2 = fock_projection(sp, 2);
    let w1 = field_energy_function(sp, |e| 1.0 / (e + 1.0).sqrt());
    let w2 = field_energy_function(sp, |e| 1.0 / (e + 1.0));
    let mut r = rng::stream(cfg.seed, "composite_norm_bounds");
    let mut gs: Vec<Arc<Vec<C64>>> = model.profiles.clone();
    let count = cfg.checks.bound_samples.max(gs.len());
    while gs.len() < count {
        gs.push(random_profile(sp, &mut r));
    }
    let fs: Vec<Arc<Vec<C64>>> = (0..count).map(|_| random_profile(sp, &mut r)).collect();
    // dense oracles only on the first two cases to keep the suite fast
    let oracle_cases = 2;
    let linear = gs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let op = CompositeOperator::product(
                sp,
                vec![p1.clone(), CompositeOperator::field(sp, g.clone()), w1.clone(), p1.clone()],
            );
            let (measured, oracle) = composite_norm(&op, dense_limit.filter(|_| i < oracle_cases))?;
            Ok(NormCase {
                measured,
                bound: 2f64.sqrt() * sup_omega_norm(sp, g),
                oracle,
            })
        })
        .collect::<Result<Vec<_>>>();
    let quadratic = gs
        .iter()
        .zip(&fs)
        .enumerate()
        .map(|(i, (g, f))| {
            let op = CompositeOperator::product(
                sp,
                vec![
                    p2.clone(),
                    CompositeOperator::field(sp, f.clone()),
                    CompositeOperator::field(sp, g.clone()),
                    w2.clone(),
                    p2.clone(),
                ],
            );
            let (measured, oracle) = composite_norm(&op, dense_limit.filter(|_| i < oracle_cases))?;
            Ok(NormCase {
                measured,
                bound: 4.0 * sup_omega_norm(sp, f) * sup_omega_norm(sp, g),
                oracle,
            })
        })
        .collect::<Result<Vec<_>>>();
    let mut out = summarize_norms(
        Check::new(
            "norm_bounds",
            "composite_field_bound",
            "‖Φ(G)(H_f+1)^{-1/2}‖ ≤ √2 sup_x‖G(x)‖_ω",
        )
        .safe(fock_label(sp, 1)),
        linear,
        cfg.tolerances.bound,
        cfg.tolerances.iterative,
    );
    out.extend(summarize_norms(
        Check::new(
            "norm_bounds",
            "composite_quadratic_field_bound",
            "‖Φ(F)Φ(G)(H_f+1)^{-1}‖ ≤ 4 sup‖F‖_ω sup‖G‖_ω",
        )
        .safe(fock_label(sp, 2)),
        quadratic,
        cfg.tolerances.bound,
        cfg.tolerances.iterative,
    ));
    out
}

/// Profiles exercised by the Leibniz check, with the particle they belong to.
fn leibniz_profiles(model: &Model, r: &mut rng::StreamRng) -> Vec<(String, usize, Arc<Vec<C64>>)> {
    let sp = &model.space;
    let s = sp.particle_dim;
    let mut out = Vec::new();
    for (a, g) in model.profiles.iter().enumerate() {
        out.push((format!("G[{a}]"), a / s, g.clone()));
        out.push((format!("random band-limited from G[{a}]"), a / s, random_band_limited(sp, g, r)));
    }
    if let Some(mag) = &model.magnetic {
        for (j, t) in mag.iter().enumerate() {
            for (a, g) in t.iter().enumerate() {
                out.push((format!("E[{j}][{a}]"), j, g.clone()));
            }
        }
    }
    out
}

/// `[p_a, Φ(G)] = −iΦ(∂_a G)` on the spatial band, plus the
/// finite-difference cross-check of `∂G`.
pub fn leibniz(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let sp = &model.space;
    let margins = band_margins(sp, 1);
    let band = safe_projection(sp, 0, 1);
    let mut r = rng::stream(cfg.seed, "leibniz");
    let psis = probes(cfg.seed, "leibniz_probes", sp.dim(), cfg.checks.samples, Some(&band));
    let raw = probes(cfg.seed, "leibniz_unprojected", sp.dim(), 4, None);
    let mut worst = 0.0f64;
    let mut worst_raw = 0.0f64;
    let mut names = Vec::new();
    for (name, particle, g) in leibniz_profiles(model, &mut r) {
        for a in 0..sp.grid.axes() {
            let p = crate::pauli_fierz::assemble::momentum(sp, a);
            let phi = CompositeOperator::field(sp, g.clone());
            let lhs = p.commutator(&phi);
            let rhs = CompositeOperator::field(sp, coupling::derivative(sp, &g, particle, a)).scaled(-I);
            worst = worst.max(max_residual(&lhs, &rhs, &psis));
            worst_raw = worst_raw.max(max_residual(&lhs, &rhs, &raw));
        }
        names.push(name);
    }
    let mut c = Check::new("leibniz", "leibniz_rule", "p_a Φ(G) − Φ(G) p_a = −iΦ(∂_a G)").safe(band_label(&margins));
    c.detail("profiles", names);
    c.detail("probes", psis.len());
    c.detail("unprojected_residual", worst_raw);
    let mut out = vec![c.residual(worst, cfg.tolerances.resolvent)];

    // x-independent G: the commutator vanishes
    let mut worst_const = 0.0f64;
    for _ in 0..4 {
        let v = rng::complex_gaussian(&mut r, sp.fock.slots());
        let prof: Vec<C64> = (0..sp.spatial_size()).flat_map(|_| v.iter().copied()).collect();
        let phi = CompositeOperator::field(sp, Arc::new(prof));
        for a in 0..sp.grid.axes() {
            let lhs = crate::pauli_fierz::assemble::momentum(sp, a).commutator(&phi);
            worst_const = worst_const.max(max_residual(&lhs, &ZeroOp(sp.dim()), &psis[..4.min(psis.len())]));
        }
    }
    out.push(
        Check::new("leibniz", "leibniz_constant_coupling", "[p_a, Id ⊗ φ(G)] = 0")
            .safe("all")
            .residual(worst_const, cfg.tolerances.resolvent),
    );
    out.push(finite_difference(model, &mut r));
    out
}

fn finite_difference(model: &Model, r: &mut rng::StreamRng) -> CheckResult {
    use rand::Rng;
    let cfg = &model.config;
    let sp = &model.space;
    let c = Check::new("leibniz", "coupling_derivative_fd", "∂_a G = central difference of G");
    let fams = try_check!(c, coupling::vector_potential_families(sp, &model.form_factor));
    let step = 1e-4;
    let l = sp.grid.length();
    let mut worst = 0.0f64;
    for _ in 0..cfg.checks.samples {
        let x: Vec<f64> = (0..sp.grid.axes()).map(|_| r.random::<f64>() * l).collect();
        for fam in &fams {
            for a in 0..sp.grid.axes() {
                let an = fam.derivative(&sp.modes, &x, a);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[a] += step;
                xm[a] -= step;
                let gp = fam.evaluate(&sp.modes, &xp);
                let gm = fam.evaluate(&sp.modes, &xm);
                let fd: Vec<C64> = gp
                    .amplitudes
                    .iter()
                    .zip(&gm.amplitudes)
                    .map(|(p, m)| (p - m) / (2.0 * step))
                    .collect();
                let diff: f64 = fd.iter().zip(&an.amplitudes).map(|(f, a)| (f - a).norm_sqr()).sum::<f64>().sqrt();
                let scale = norm(&an.amplitudes);
                if scale > 0.0 {
                    worst = worst.max(diff / scale);
                }
            }
        }
    }
    let mut c = c;
    c.detail("step", step);
    c.detail("points", cfg.checks.samples);
    c.residual(worst, cfg.tolerances.finite_difference)
}

/// `q(u, v) = Σ_a ⟨X_a u, X_a v⟩ + ⟨H_f^{1/2}u, H_f^{1/2}v⟩`.
pub fn form(ta: &TaOperators, u: &[C64], v: &[C64]) -> C64 {
    let mut acc = dot(&ta.field_energy_sqrt.apply_vec(u), &ta.field_energy_sqrt.apply_vec(v));
    for x in &ta.shifted {
        acc += dot(&x.apply_vec(u), &x.apply_vec(v));
    }
    acc
}

/// The resolvent commutator identities at every configured `α`.
pub fn resolvent(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let sp = &model.space;
    let e = cfg.checks.coupling;
    let tol = cfg.tolerances.resolvent;
    let p1 = fock_projection(sp, 1);
    let p2 = fock_projection(sp, 2);
    let safe = safe_projection(sp, 2, 1);
    let margins = band_margins(sp, 1);
    let n = cfg.checks.samples;
    let psi1 = probes(cfg.seed, "resolvent_p1", sp.dim(), n, Some(&p1));
    let psi2 = probes(cfg.seed, "resolvent_p2", sp.dim(), n, Some(&p2));
    let psis = probes(cfg.seed, "resolvent_safe", sp.dim(), n, Some(&safe));
    let phis = probes(cfg.seed, "resolvent_any", sp.dim(), cfg.checks.form_pairs, None);
    let ta = match assemble_ta(sp, &model.profiles, e) {
        Ok(t) => t,
        Err(err) => return vec![Check::new("resolvent", "resolvent_setup", "T_A").error(&err)],
    };
    let mut out = Vec::new();
    for &alpha in &cfg.checks.alphas {
        let tag = format!("[alpha={alpha}]");
        let ops = match step1_commutator_operators(sp, &model.profiles, e, alpha) {
            Ok(o) => o,
            Err(err) => {
                out.push(Check::new("resolvent", format!("resolvent_setup{tag}"), "R_α").error(&err));
                continue;
            }
        };
        let axes = ops.fields.len();

        let mut w = 0.0f64;
        for j in 0..axes {
            let comm = ops.fields[j].commutator(&ops.resolvent);
            w = w.max(max_residual(&ops.e_ops[j], &comm, &psi1));
        }
        let mut c = Check::new("resolvent", format!("e_identity{tag}"), "E_{α,j} = [A_j, R_α] = −iα R_α Π_j R_α")
            .safe(fock_label(sp, 1));
        c.detail("alpha", alpha);
        out.push(c.residual(w, tol));

        let mut w = 0.0f64;
        let mut w_neg = 0.0f64;
        for j in 0..axes {
            let rc = ops.resolvent.commutator(&ops.fields[j]).commutator(&ops.fields[j]);
            w = w.max(max_residual(&rc, &ops.double_commutator_formula(j, QuadraticTermSign::Derived), &psi2));
            w_neg = w_neg.max(max_residual(&rc, &ops.double_commutator_formula(j, QuadraticTermSign::Negated), &psi2));
        }
        let mut c = Check::new(
            "resolvent",
            format!("double_commutator{tag}"),
            "[[R_α, A_j], A_j] = −2α² R_α(Π_j R_α)² + α R_α² (ωG_j, G_j)_𝔥",
        )
        .safe(fock_label(sp, 2));
        c.detail("alpha", alpha);
        c.detail("residual_with_negated_quadratic_term", w_neg);
        out.push(c.residual(w, tol));

        let f = ops.f_alpha(QuadraticTermSign::Derived);
        let f_neg = ops.f_alpha(QuadraticTermSign::Negated);
        let terms: Vec<(C64, CompositeOperator)> = (0..axes)
            .map(|j| (ONE, ops.shifted[j].commutator(&ops.e_ops[j])))
            .collect();
        let sum = CompositeOperator::sum(sp, terms);
        let mut c = Check::new("resolvent", format!("f_alpha{tag}"), "Σ_j [p_j + A_j, E_{α,j}] = F_α")
            .safe(format!("{}; {}", fock_label(sp, 2), band_label(&margins)));
        c.detail("alpha", alpha);
        c.detail("residual_with_negated_quadratic_term", max_residual(&sum, &f_neg, &psis));
        c.detail("hermiticity_residual", f.hermiticity_residual(cfg.seed, 4));
        out.push(c.residual(max_residual(&sum, &f, &psis), tol));

        // quadratic-form version, φ arbitrary and ψ safe
        let r = &ops.resolvent;
        let mut worst = 0.0f64;
        let mut worst_neg = 0.0f64;
        for (phi, psi) in phis.iter().zip(psis.iter().cycle()) {
            let q1 = form(&ta, &r.apply_vec(phi), psi);
            let q2 = form(&ta, phi, &r.apply_vec(psi));
            let fterm = dot(&f.apply_vec(phi), psi);
            let fneg = dot(&f_neg.apply_vec(phi), psi);
            let mut eterm = C64::new(0.0, 0.0);
            for j in 0..axes {
                let ex = ops.e_ops[j].apply_vec(&ops.shifted[j].apply_vec(phi));
                eterm += dot(&ex, psi) * 2.0;
            }
            let scale = q1.norm() + q2.norm() + fterm.norm() + eterm.norm();
            if scale > 0.0 {
                worst = worst.max(((q1 - q2) - (fterm + eterm)).norm() / scale);
                worst_neg = worst_neg.max(((q1 - q2) - (fneg + eterm)).norm() / scale);
            }
        }
        let mut c = Check::new(
            "resolvent",
            format!("form_identity{tag}"),
            "q(R_α φ, ψ) = q(φ, R_α ψ) + (F_α φ, ψ) + 2 Σ_j (E_{α,j}(p_j + A_j)φ, ψ)",
        )
        .safe(format!("ψ: {}; {}", fock_label(sp, 2), band_label(&margins)));
        c.detail("alpha", alpha);
        c.detail("pairs", phis.len());
        c.detail("relative_residual_with_negated_quadratic_term", worst_neg);
        out.push(c.residual(worst, tol));
    }

    // E_{α,j} → 0 as α → 0
    let small = 1e-8;
    let c = Check::new("resolvent", "e_limit", "‖E_{α,j}ψ‖ → 0 as α → 0");
    let ops = try_check!(c, step1_commutator_operators(sp, &model.profiles, e, small));
    let mut track = Vec::new();
    for a in [1e-2, 1e-4, 1e-6, small] {
        let o = try_check!(c, step1_commutator_operators(sp, &model.profiles, e, a));
        let v = o
            .e_ops
            .iter()
            .flat_map(|op| psi1.iter().take(8).map(move |p| norm(&op.apply_vec(p)) / norm(p)))
            .fold(0.0, f64::max);
        track.push((a, v));
    }
    let measured = ops
        .e_ops
        .iter()
        .flat_map(|op| psi1.iter().take(8).map(move |p| norm(&op.apply_vec(p)) / norm(p)))
        .fold(0.0, f64::max);
    let mut c = c;
    c.detail("alpha", small);
    c.detail("norms_by_alpha", track);
    out.push(c.at_most(measured, 1e-6, 0.0));
    out
}

/// `T_A` against its explicit and expanded forms, the quadratic form,
/// Hermiticity, positivity and the free spectrum.
pub fn ta_identity(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let sp = &model.space;
    let e = cfg.checks.coupling;
    let tol = cfg.tolerances.ta_identity;
    let ta = match assemble_ta(sp, &model.profiles, e) {
        Ok(t) => t,
        Err(err) => return vec![Check::new("ta_identity", "ta_setup", "T_A").error(&err)],
    };
    let psis = probes(cfg.seed, "ta_identity", sp.dim(), cfg.checks.probes, None);
    let mut out = Vec::new();

    let mut c = Check::new("ta_identity", "ta_explicit", "T_A ψ = Σ_a (p_a + A_a)(p_a + A_a)ψ + H_f ψ");
    c.detail("probes", psis.len());
    c.detail("coupling", e);
    out.push(c.residual(max_relative_residual(&ta.ta, &ta.explicit, &psis), tol));

    let mut c = Check::new(
        "ta_identity",
        "ta_expansion",
        "T_A = p² + Σ_a (p_a A_a + A_a p_a) + Σ_a A_a² + H_f",
    );
    c.detail("probes", psis.len());
    out.push(c.residual(max_relative_residual(&ta.ta, &ta.expansion, &psis), tol));

    let pairs = probes(cfg.seed, "ta_form_left", sp.dim(), cfg.checks.form_pairs, None);
    let mut worst = 0.0f64;
    for (phi, psi) in pairs.iter().zip(&psis) {
        let tpsi = ta.explicit.apply_vec(psi);
        let lhs = dot(phi, &tpsi);
        let q = form(&ta, phi, psi);
        worst = worst.max((lhs - q).norm() / (norm(phi) * norm(&tpsi)));
    }
    let mut c = Check::new(
        "ta_identity",
        "ta_quadratic_form",
        "⟨φ, T_A ψ⟩ = Σ_a ⟨(p_a + A_a)φ, (p_a + A_a)ψ⟩ + ⟨H_f^{1/2}φ, H_f^{1/2}ψ⟩",
    );
    c.detail("pairs", pairs.len());
    out.push(c.residual(worst, tol));

    let h = ta.explicit.hermiticity_residual(cfg.seed, 10).max(ta.ta.hermiticity_residual(cfg.seed, 10));
    out.push(
        Check::new("ta_identity", "ta_hermitian", "⟨u, T_A v⟩ = ⟨T_A u, v⟩")
            .residual(h, cfg.tolerances.exact),
    );

    let c = Check::new("ta_identity", "ta_positive", "T_A ⪰ 0");
    let eig = try_check!(
        c,
        extremal_eigenpairs(&ta.ta, 1, Extremal::Lowest, None, &KrylovOptions::default())
    );
    let mut c = c;
    c.detail("lowest_ritz", eig.value());
    c.detail("ritz_residual", eig.max_residual());
    out.push(c.at_least(eig.value() / eig.scale.max(1.0), 0.0, 1e-10));

    out.push(free_spectrum(model));
    out
}

/// `p² + H_f` at zero coupling: spectrum equals sums of grid wavenumbers
/// squared and field energies.
fn free_spectrum(model: &Model) -> CheckResult {
    let cfg = &model.config;
    let sp = &model.space;
    let c = Check::new("ta_identity", "free_spectrum", "spec(p² + H_f) = {|k|² + Σ n_s ω_s}");
    let ta = try_check!(c, assemble_ta(sp, &model.profiles, 0.0));
    let lap = sp.grid.laplacian_symbol();
    let hf = sp.fock.diagonal_values(&sp.modes.slot_omegas());
    let mut sums: Vec<f64> = hf.iter().flat_map(|e| lap.iter().map(move |k| k + e)).collect();
    sums.sort_by(f64::total_cmp);
    let mut c = c;
    if cfg.dense_oracle && sp.dim() <= cfg.budget.dense {
        let m = try_check!(c, dense::materialize(&ta.ta, cfg.budget.dense));
        let ev = dense::hermitian_eigenvalues(&m);
        let gap = ev
            .iter()
            .zip(&sums)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        c.detail("method", "dense eigenvalues against enumeration");
        c.detail("eigenvalues", ev.len());
        return c.residual(gap / sums.last().copied().unwrap_or(1.0).max(1.0), cfg.tolerances.iterative);
    }
    let eig = try_check!(
        c,
        extremal_eigenpairs(&ta.ta, 1, Extremal::Lowest, None, &KrylovOptions::default())
    );
    c.detail("method", "lowest Ritz value against the smallest sum");
    c.residual((eig.value() - sums[0]).abs(), cfg.tolerances.iterative)
}

/// Two particles on a line with modes `±k`: components of different
/// particles fail to commute exactly when `|ρ(k)| ≠ |ρ(−k)|`.
pub fn noncommuting(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let nc = &cfg.checks.noncommuting;
    let build = |ff: FormFactor| -> Result<(Arc<CompositeSpace>, Vec<Arc<Vec<C64>>>)> {
        let l = cfg.grid.length;
        let kappa = 2.0 * PI / l;
        let momenta = vec![
            [kappa, kappa, 0.0],
            [-kappa, -kappa, 0.0],
            [2.0 * kappa, 0.0, kappa],
            [-2.0 * kappa, 0.0, -kappa],
        ];
        let weights = vec![kappa.powi(3); momenta.len()];
        let modes = Arc::new(ModeGrid::new(momenta, weights, 2, 0.0, FrameAxes::default())?);
        let fock = Arc::new(FockBasis::new(modes.slots(), nc.n_max, cfg.budget.composite)?);
        let sp = CompositeSpace::new(2, 1, nc.points, l, false, modes.clone(), fock, cfg.budget.composite)?;
        let rho = ff.on_grid(&modes);
        let fams: Vec<CouplingFamily> = coupling::vector_potential_families(&sp, &rho)?;
        let profiles = fams.iter().map(|f| coupling::sample(&sp, f)).collect::<Result<Vec<_>>>()?;
        Ok((sp, profiles))
    };
    let cutoff = 10.0;
    let cases = [
        (
            "asymmetric",
            FormFactor::Asymmetric {
                cutoff,
                asymmetry: nc.asymmetry,
                direction: [1.0, 0.0, 0.0],
            },
        ),
        ("symmetric", FormFactor::Indicator { cutoff }),
    ];
    let mut out = Vec::new();
    for (label, ff) in cases {
        let c = Check::new(
            "noncommuting",
            format!("noncommuting_{label}"),
            if label == "asymmetric" {
                "‖[A_{x,1}, A_{x,2}]‖ > 0 when |ρ(k)| ≠ |ρ(−k)|"
            } else {
                "[A_{x,1}, A_{x,2}] = 0 when |ρ(k)| = |ρ(−k)|"
            },
        );
        let (sp, prof) = try_check!(c, build(ff));
        let c = c.safe(fock_label(&sp, 2));
        let p = fock_projection(&sp, 2);
        let comm = CompositeOperator::field(&sp, prof[0].clone())
            .commutator(&CompositeOperator::field(&sp, prof[1].clone()));
        let op = CompositeOperator::product(&sp, vec![p.clone(), comm, p.clone()]);
        // the symmetric case is zero up to rounding; the floor resolves σ to 1e-15
        let kopts = KrylovOptions {
            abs_tol: 1e-30,
            ..KrylovOptions::default()
        };
        let est = try_check!(c, operator_norm(&op, &kopts));
        let im: Vec<f64> = coupling::pointwise_inner(&sp, &prof[0], &prof[1]).iter().map(|v| v.im).collect();
        let sup_im = im.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut c = c;
        c.detail("dim", sp.dim());
        c.detail("sup_x_abs_im_inner", sup_im);
        c.detail("norm_interval", est.interval);
        out.push(if label == "asymmetric" {
            c.at_least(est.value, cfg.tolerances.noncommuting_floor, 0.0)
        } else {
            c.residual(est.value, cfg.tolerances.exact)
        });
    }
    out
}
