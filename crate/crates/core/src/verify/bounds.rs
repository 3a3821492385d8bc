//! Best constants of the relative bounds between `T_A` and `p² + H_f`.
//!
//! Forward: the smallest `C₁` with `‖Dφ‖² ≤ C₁‖Tφ‖² + C₂‖φ‖²` is the top of
//! the pencil `(D² − C₂, T²)`. Reverse: the smallest `D₁` with
//! `‖Tφ‖² ≤ D₁‖Dφ‖² + D₂‖φ‖²` is the top of `(T² − D₂, D²)`. Here
//! `D = p² + H_f` and `T = T_A`.

use std::sync::Arc;

use serde::Serialize;

use crate::config::Model;
use crate::error::Result;
use crate::linalg::dense;
use crate::linalg::krylov::{extremal_eigenpairs, Extremal, KrylovOptions};
use crate::linalg::pencil::{pencil_max, PencilOptions};
use crate::linalg::{norm_sqr, Chain, LinearOperator, Shifted, C64};
use crate::pauli_fierz::assemble::field_energy_function;
use crate::pauli_fierz::{assemble_ta, CompositeOperator, CompositeSpace, TaOperators};

use super::{probes, relative_gap, Check, CheckResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `‖(p² + H_f)φ‖² ≤ C₁‖T_A φ‖² + C₂‖φ‖²`.
    Forward,
    /// `‖T_A φ‖² ≤ D₁‖(p² + H_f)φ‖² + D₂‖φ‖²`.
    Reverse,
}

#[derive(Debug, Clone, Serialize)]
pub struct Resubstitution {
    pub probes: usize,
    /// Largest `(lhs − rhs) / rhs` over the probes and the extremal vector.
    pub max_violation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundEstimate {
    pub kind: BoundKind,
    pub e: f64,
    /// `C₁` or `D₁`; `None` when no finite constant exists for this shift.
    pub c1: Option<f64>,
    /// `C₂` or `D₂`.
    pub c2: f64,
    /// Reverse bound only: `‖T_A(c ⊗ Ω)‖²` for the kernel `c ⊗ Ω` of
    /// `p² + H_f`; shifts below it admit no finite `D₁`.
    pub floor: Option<f64>,
    pub extremal_residual: f64,
    pub solver_steps: usize,
    pub matvecs: usize,
    pub resubstitution: Option<Resubstitution>,
}

/// Options shared by the constant estimators.
#[derive(Debug, Clone)]
pub struct BoundOptions {
    pub pencil: PencilOptions,
    pub seed: u64,
    pub resubstitution_probes: usize,
    pub slack: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            pencil: PencilOptions::default(),
            seed: 0,
            resubstitution_probes: 200,
            slack: 1e-9,
        }
    }
}

/// Normalised `c ⊗ Ω` for every spin state: the kernel of `p² + H_f`.
fn free_kernel(space: &CompositeSpace) -> Vec<Vec<C64>> {
    let s = space.spatial_size();
    let c = vec![C64::new(1.0 / (s as f64).sqrt(), 0.0); s];
    (0..space.spin_dim())
        .map(|sigma| space.product_state(&c, sigma, space.fock.vacuum()))
        .collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::error::Error::param("grid", "must be non-negative and strictly increasing"));
    }
    Ok(())
}

fn resubstitute(
    lhs: &dyn LinearOperator,
    rhs: &dyn LinearOperator,
    c1: f64,
    c2: f64,
    vectors: &[Vec<C64>],
    slack: f64,
) -> Resubstitution {
    let mut worst = f64::NEG_INFINITY;
    for v in vectors {
        let l = norm_sqr(&lhs.apply_vec(v));
        let r = c1 * norm_sqr(&rhs.apply_vec(v)) + c2 * norm_sqr(v);
        let viol = if r > 0.0 { (l - r) / r } else if l > 0.0 { f64::INFINITY } else { 0.0 };
        worst = worst.max(viol);
    }
    Resubstitution {
        probes: vectors.len(),
        max_violation: worst,
        passed: worst <= slack,
    }
}

fn estimate(
    kind: BoundKind,
    e: f64,
    lhs: &CompositeOperator,
    rhs: &CompositeOperator,
    grid: &[f64],
    floor: Option<f64>,
    opts: &BoundOptions,
) -> Result<Vec<BoundEstimate>> {
    check_grid(grid)?;
    let dim = lhs.dim();
    let a2 = Chain(lhs, lhs);
    let b2 = Chain(rhs, rhs);
    let label = match kind {
        BoundKind::Forward => "forward_resubstitution",
        BoundKind::Reverse => "reverse_resubstitution",
    };
    let random = probes(opts.seed, label, dim, opts.resubstitution_probes, None);
    let mut out = Vec::with_capacity(grid.len());
    for &c2 in grid {
        if let Some(f) = floor {
            if c2 < f * (1.0 - 1e-12) {
                out.push(BoundEstimate {
                    kind,
                    e,
                    c1: None,
                    c2,
                    floor,
                    extremal_residual: 0.0,
                    solver_steps: 0,
                    matvecs: 0,
                    resubstitution: None,
                });
                continue;
            }
        }
        let a = Shifted {
            a: &a2,
            b: None,
            shift: c2,
        };
        let res = pencil_max(&a, &b2, &opts.pencil)?;
        let resub = res.value.map(|c1| {
            let mut vs = random.clone();
            if !res.vector.is_empty() {
                vs.push(res.vector.clone());
            }
            resubstitute(lhs, rhs, c1, c2, &vs, opts.slack)
        });
        out.push(BoundEstimate {
            kind,
            e,
            c1: res.value,
            c2,
            floor,
            extremal_residual: res.residual,
            solver_steps: res.steps,
            matvecs: res.matvecs,
            resubstitution: resub,
        });
    }
    Ok(out)
}

/// `C₁` for every `C₂` in `grid`, at the coupling built into `ta`.
pub fn relative_bound_constants(ta: &TaOperators, e: f64, grid: &[f64], opts: &BoundOptions) -> Result<Vec<BoundEstimate>> {
    estimate(BoundKind::Forward, e, &ta.free, &ta.ta, grid, None, opts)
}

/// `D₁` for every `D₂` in `grid`.
pub fn reverse_bound_constants(ta: &TaOperators, e: f64, grid: &[f64], opts: &BoundOptions) -> Result<Vec<BoundEstimate>> {
    let floor = free_kernel(&ta.ta.space)
        .iter()
        .map(|v| norm_sqr(&ta.ta.apply_vec(v)))
        .fold(0.0, f64::max);
    estimate(BoundKind::Reverse, e, &ta.ta, &ta.free, grid, Some(floor), opts)
}

/// Dense top of the pencil `(L² − c₂, R²)`.
pub fn dense_constant(lhs: &CompositeOperator, rhs: &CompositeOperator, c2: f64, limit: usize) -> Result<Option<f64>> {
    let l = dense::materialize(lhs, limit)?;
    let r = dense::materialize(rhs, limit)?;
    let n = l.nrows();
    let a = &l.adjoint() * &l - nalgebra::DMatrix::<C64>::identity(n, n) * C64::new(c2, 0.0);
    let b = r.adjoint() * &r;
    Ok(dense::pencil_max(&a, &b))
}

/// First estimate with a finite constant.
pub fn first_finite(est: &[BoundEstimate]) -> Option<&BoundEstimate> {
    est.iter().find(|b| b.c1.is_some())
}

/// Step-2 lower bound of the quadratic form
/// `½‖H_f φ‖² + (H_f φ, X φ) + (X φ, H_f φ)`, `X = Σ_a (p_a + A_a)²`.
#[derive(Debug, Clone, Serialize)]
pub struct Step2Estimate {
    pub e: f64,
    /// Smallest eigenvalue of the form.
    pub mu: f64,
    /// `max(0, −μ)`.
    pub b: f64,
    /// Largest eigenvalue of `(H_f+1)^{-1/2}(¼H_f² − Q)(H_f+1)^{-1/2}`.
    pub c: f64,
    pub residual: f64,
    pub converged: bool,
    pub matvecs: usize,
}

/// `Q = ½H_f² + H_f X + X H_f` and `W(¼H_f² − Q)W` with `W = (H_f+1)^{-1/2}`.
pub fn step2_operators(space: &Arc<CompositeSpace>, ta: &TaOperators) -> (CompositeOperator, CompositeOperator) {
    let hf = &ta.field_energy;
    let terms: Vec<(C64, CompositeOperator)> = ta.shifted.iter().map(|x| (C64::new(1.0, 0.0), x * x)).collect();
    let x = CompositeOperator::sum(space, terms).tagged_hermitian();
    let q = CompositeOperator::sum(
        space,
        vec![
            (C64::new(0.5, 0.0), hf * hf),
            (C64::new(1.0, 0.0), hf * &x),
            (C64::new(1.0, 0.0), &x * hf),
        ],
    )
    .tagged_hermitian();
    let w = field_energy_function(space, |e| 1.0 / (e + 1.0).sqrt());
    let inner = CompositeOperator::sum(
        space,
        vec![(C64::new(0.25, 0.0), hf * hf), (C64::new(-1.0, 0.0), q.clone())],
    );
    let c_op = CompositeOperator::product(space, vec![w.clone(), inner, w]).tagged_hermitian();
    (q, c_op)
}

pub fn step2_lower_bound(space: &Arc<CompositeSpace>, ta: &TaOperators, e: f64) -> Result<Step2Estimate> {
    let (q, c_op) = step2_operators(space, ta);
    let opts = KrylovOptions::default();
    let lo = extremal_eigenpairs(&q, 1, Extremal::Lowest, None, &opts)?;
    let hi = extremal_eigenpairs(&c_op, 1, Extremal::Highest, None, &opts)?;
    let mu = lo.value();
    Ok(Step2Estimate {
        e,
        mu,
        b: (-mu).max(0.0),
        c: hi.value(),
        residual: lo.max_residual().max(hi.max_residual()),
        converged: lo.converged && hi.converged,
        matvecs: lo.matvecs + hi.matvecs,
    })
}

pub(crate) fn bound_options(model: &Model) -> BoundOptions {
    let cfg = &model.config;
    BoundOptions {
        pencil: PencilOptions::default(),
        seed: cfg.seed,
        resubstitution_probes: cfg.checks.resubstitution_probes,
        slack: cfg.tolerances.resubstitution_slack,
    }
}

fn monotone_violation(est: &[BoundEstimate]) -> f64 {
    // None counts as +∞
    let vals: Vec<f64> = est.iter().map(|b| b.c1.unwrap_or(f64::INFINITY)).collect();
    vals.windows(2)
        .map(|w| {
            if w[1] <= w[0] {
                0.0
            } else if w[0].is_finite() {
                (w[1] - w[0]) / w[0].max(1e-300)
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Checks over one set of estimates: finiteness of the chosen row,
/// monotonicity in the shift and resubstitution.
pub(crate) fn estimate_checks(
    family: &str,
    tag: &str,
    est: &[BoundEstimate],
    model: &Model,
) -> Vec<CheckResult> {
    let cfg = &model.config;
    let mut out = Vec::new();
    let kind = est.first().map(|b| b.kind).unwrap_or(BoundKind::Forward);
    let (c1n, c2n, ineq) = match kind {
        BoundKind::Forward => ("C1", "C2", "‖(p²+H_f)φ‖² ≤ C₁‖T_A φ‖² + C₂‖φ‖²"),
        BoundKind::Reverse => ("D1", "D2", "‖T_A φ‖² ≤ D₁‖(p²+H_f)φ‖² + D₂‖φ‖²"),
    };
    let prefix = match kind {
        BoundKind::Forward => "relative",
        BoundKind::Reverse => "reverse",
    };
    let mut c = Check::new(family, format!("{prefix}_constant_finite{tag}"), ineq);
    c.detail("estimates", est);
    let chosen = first_finite(est);
    c.detail(c1n, chosen.and_then(|b| b.c1));
    c.detail(c2n, chosen.map(|b| b.c2));
    out.push(c.at_most(if chosen.is_some() { 0.0 } else { f64::INFINITY }, 0.0, 0.0));

    let mut c = Check::new(family, format!("{prefix}_monotone{tag}"), &format!("{c1n} non-increasing in {c2n}"));
    c.detail("relative_increase", monotone_violation(est));
    out.push(c.residual(monotone_violation(est), cfg.tolerances.iterative));

    let worst = est
        .iter()
        .filter_map(|b| b.resubstitution.as_ref())
        .map(|r| r.max_violation)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut c = Check::new(family, format!("{prefix}_resubstitution{tag}"), ineq);
    c.detail("probes_per_constant", cfg.checks.resubstitution_probes + 1);
    c.detail("max_relative_violation", worst);
    out.push(c.at_most(worst.max(0.0), 0.0, cfg.tolerances.resubstitution_slack));
    out
}

/// Free-case constants and the desk-coupling constants with dense oracles.
pub fn relative_bound(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let sp = &model.space;
    let opts = bound_options(model);
    let mut out = Vec::new();

    let c = Check::new("relative_bound", "free_case_constants", "C₁ = D₁ = 1 at C₂ = D₂ = 0 when A = 0");
    let ta0 = match assemble_ta(sp, &model.profiles, 0.0) {
        Ok(t) => t,
        Err(e) => return vec![c.error(&e)],
    };
    let fwd0 = match relative_bound_constants(&ta0, 0.0, &[0.0], &opts) {
        Ok(v) => v,
        Err(e) => return vec![c.error(&e)],
    };
    let rev0 = match reverse_bound_constants(&ta0, 0.0, &[0.0], &opts) {
        Ok(v) => v,
        Err(e) => return vec![c.error(&e)],
    };
    let c1 = fwd0[0].c1.unwrap_or(f64::NAN);
    let d1 = rev0[0].c1.unwrap_or(f64::NAN);
    let mut c = c;
    c.detail("C1", c1);
    c.detail("D1", d1);
    out.push(c.residual((c1 - 1.0).abs().max((d1 - 1.0).abs()), cfg.tolerances.resolvent));

    let e = cfg.checks.coupling;
    let tag = format!("[e={e}]");
    let c = Check::new("relative_bound", format!("relative_bound_setup{tag}"), "T_A");
    let ta = match assemble_ta(sp, &model.profiles, e) {
        Ok(t) => t,
        Err(err) => {
            out.push(c.error(&err));
            return out;
        }
    };
    let fwd = relative_bound_constants(&ta, e, &cfg.checks.c2_grid, &opts);
    let rev = reverse_bound_constants(&ta, e, &cfg.checks.d2_grid, &opts);
    let (fwd, rev) = match (fwd, rev) {
        (Ok(f), Ok(r)) => (f, r),
        (Err(err), _) | (_, Err(err)) => {
            out.push(c.error(&err));
            return out;
        }
    };
    out.extend(estimate_checks("relative_bound", &tag, &fwd, model));
    out.extend(estimate_checks("relative_bound", &tag, &rev, model));

    if cfg.dense_oracle && sp.dim() <= cfg.budget.dense {
        for (name, est, lhs, rhs) in [
            ("relative_constant_dense_oracle", first_finite(&fwd), &ta.free, &ta.ta),
            ("reverse_constant_dense_oracle", first_finite(&rev), &ta.ta, &ta.free),
        ] {
            let mut c = Check::new("relative_bound", format!("{name}{tag}"), "pencil solver = dense pencil");
            let Some(b) = est else {
                out.push(c.residual(f64::INFINITY, cfg.tolerances.iterative));
                continue;
            };
            let dv = match dense_constant(lhs, rhs, b.c2, cfg.budget.dense) {
                Ok(v) => v,
                Err(err) => {
                    out.push(c.error(&err));
                    continue;
                }
            };
            c.detail("iterative", b.c1);
            c.detail("dense", dv);
            c.detail("shift", b.c2);
            let gap = match (b.c1, dv) {
                (Some(x), Some(y)) => relative_gap(x, y, 1e-300),
                _ => f64::INFINITY,
            };
            out.push(c.residual(gap, cfg.tolerances.iterative));
        }
    }
    out
}

/// Step-2 lower bound at zero and at the desk coupling.
pub fn step2(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let sp = &model.space;
    let mut out = Vec::new();
    for e in [0.0, cfg.checks.coupling] {
        let tag = format!("[e={e}]");
        let c = Check::new(
            "step2",
            format!("step2_lower_bound{tag}"),
            "½‖H_f φ‖² + 2 Re(H_f φ, (p+A)²φ) ≥ −b‖φ‖²",
        );
        let ta = match assemble_ta(sp, &model.profiles, e) {
            Ok(t) => t,
            Err(err) => {
                out.push(c.error(&err));
                continue;
            }
        };
        let est = match step2_lower_bound(sp, &ta, e) {
            Ok(v) => v,
            Err(err) => {
                out.push(c.error(&err));
                continue;
            }
        };
        let mut c = c;
        c.detail("estimate", &est);
        c.detail(
            "note",
            "μ is the smallest eigenvalue of the form; C is reported for ¼‖H_f φ‖² − C‖(H_f+1)^{1/2}φ‖²",
        );
        if e == 0.0 {
            // all terms non-negative without coupling: b = 0 admissible
            c.detail("requirement", "μ ≥ 0 up to solver tolerance");
            out.push(c.at_least(est.mu, 0.0, cfg.tolerances.iterative * est.c.abs().max(1.0)));
        } else {
            let finite = est.mu.is_finite() && est.converged;
            out.push(c.at_most(if finite { est.residual } else { f64::INFINITY }, 0.0, cfg.tolerances.iterative));
        }
        if e != 0.0 && cfg.dense_oracle && sp.dim() <= cfg.budget.dense {
            let mut c = Check::new("step2", format!("step2_dense_oracle{tag}"), "Lanczos μ = dense μ");
            let (q, _) = step2_operators(sp, &ta);
            let m = match dense::materialize(&q, cfg.budget.dense) {
                Ok(m) => m,
                Err(err) => {
                    out.push(c.error(&err));
                    continue;
                }
            };
            let ev = dense::hermitian_eigenvalues(&m);
            let scale = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            c.detail("dense_mu", ev[0]);
            out.push(c.residual((ev[0] - est.mu).abs() / scale.max(1.0), cfg.tolerances.iterative));
        }
    }
    out
}

/// Graph-norm ratios on random vectors: operator graph norms
/// `(‖φ‖² + ‖T_A φ‖²)/(‖φ‖² + ‖(p²+H_f)φ‖²)` and form norms
/// `‖φ‖²_{+1} / (‖φ‖² + ‖pφ‖² + ‖H_f^{1/2}φ‖²)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GraphRatios {
    pub operator_min: f64,
    pub operator_max: f64,
    pub form_min: f64,
    pub form_max: f64,
}

pub fn graph_ratios(ta: &TaOperators, ta0: &TaOperators, seed: u64, count: usize) -> GraphRatios {
    let vs = probes(seed, "graph_norm", ta.ta.dim(), count, None);
    let mut g = GraphRatios {
        operator_min: f64::INFINITY,
        operator_max: 0.0,
        form_min: f64::INFINITY,
        form_max: 0.0,
    };
    for v in &vs {
        let n = norm_sqr(v);
        let op = (n + norm_sqr(&ta.ta.apply_vec(v))) / (n + norm_sqr(&ta.free.apply_vec(v)));
        let plus = |t: &TaOperators| {
            n + t.shifted.iter().map(|x| norm_sqr(&x.apply_vec(v))).sum::<f64>()
                + norm_sqr(&t.field_energy_sqrt.apply_vec(v))
        };
        let form = plus(ta) / plus(ta0);
        g.operator_min = g.operator_min.min(op);
        g.operator_max = g.operator_max.max(op);
        g.form_min = g.form_min.min(form);
        g.form_max = g.form_max.max(form);
    }
    g
}
