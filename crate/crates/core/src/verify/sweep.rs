//! Coupling-constant sweep: relative-bound constants in both directions,
//! graph-norm ratios, the Step-2 lower bound and the Pauli-Fierz ground
//! energy at every `e`.

use serde::Serialize;

use crate::config::Model;
use crate::error::Result;
use crate::par;
use crate::pauli_fierz::assemble_ta;

use super::bounds::{
    bound_options, estimate_checks, first_finite, graph_ratios, relative_bound_constants, reverse_bound_constants,
    step2_lower_bound, BoundEstimate, GraphRatios, Step2Estimate,
};
use super::physics::{hamiltonian, lowest, RitzValue};
use super::{Check, CheckResult};

pub const SWEEP_LABEL: &str = "graph-norm equivalence across couplings is a finite-dimensional analogy probe; \
essential self-adjointness on operator cores has no finite-dimensional counterpart";

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub e: f64,
    /// First `C₂` of the grid with a finite `C₁`, and that `C₁`.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    /// Lowest Ritz value of the Pauli-Fierz operator at charges `e · q_j`.
    pub ground_energy: Option<RitzValue>,
    pub ground_converged: bool,
    pub step2: Step2Estimate,
    pub graph: GraphRatios,
    pub forward: Vec<BoundEstimate>,
    pub reverse: Vec<BoundEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub label: String,
    pub rows: Vec<SweepRow>,
    /// `max |C₁(e') − C₁(e)| / |e' − e|` over consecutive rows.
    pub continuity_modulus: Option<f64>,
    pub checks: Vec<CheckResult>,
}

fn row(model: &Model, e: f64) -> Result<SweepRow> {
    let cfg = &model.config;
    let sp = &model.space;
    let opts = bound_options(model);
    let ta = assemble_ta(sp, &model.profiles, e)?;
    let ta0 = assemble_ta(sp, &model.profiles, 0.0)?;
    let forward = relative_bound_constants(&ta, e, &cfg.checks.c2_grid, &opts)?;
    let reverse = reverse_bound_constants(&ta, e, &cfg.checks.d2_grid, &opts)?;
    let step2 = step2_lower_bound(sp, &ta, e)?;
    let graph = graph_ratios(&ta, &ta0, cfg.seed, cfg.checks.probes);
    let h = hamiltonian(model, e, true)?;
    let (ritz, converged) = lowest(&h, 1)?;
    let f = first_finite(&forward);
    let r = first_finite(&reverse);
    Ok(SweepRow {
        e,
        c1: f.and_then(|b| b.c1),
        c2: f.map(|b| b.c2),
        d1: r.and_then(|b| b.c1),
        d2: r.map(|b| b.c2),
        ground_energy: ritz.first().copied(),
        ground_converged: converged,
        step2,
        graph,
        forward,
        reverse,
    })
}

pub fn coupling_sweep(model: &Model, e_values: &[f64]) -> Result<SweepReport> {
    let cfg = &model.config;
    if !e_values.contains(&0.0) || e_values.iter().any(|e| !e.is_finite()) {
        return Err(crate::error::Error::param("e_values", "must be finite and include 0"));
    }
    let rows = par::map(e_values, |&e| row(model, e)).into_iter().collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();

    let mut c = Check::new("sweep", "sweep_free_row", "C₁ = D₁ = 1 at C₂ = D₂ = 0 when e = 0");
    let free = rows.iter().find(|r| r.e == 0.0);
    let gap = free
        .map(|r| {
            let ok_shift = r.c2 == Some(0.0) && r.d2 == Some(0.0);
            let d = (r.c1.unwrap_or(f64::NAN) - 1.0).abs().max((r.d1.unwrap_or(f64::NAN) - 1.0).abs());
            if ok_shift { d } else { f64::INFINITY }
        })
        .unwrap_or(f64::NAN);
    c.detail("row", free.map(|r| (r.c1, r.c2, r.d1, r.d2)));
    checks.push(c.residual(gap, cfg.tolerances.resolvent));

    let missing = rows.iter().filter(|r| r.c1.is_none() || r.d1.is_none()).count();
    let mut c = Check::new("sweep", "sweep_constants_finite", "C₁, D₁ finite at every e");
    c.detail("rows", rows.len());
    checks.push(c.at_most(missing as f64, 0.0, 0.0));

    for r in &rows {
        let tag = format!("[e={}]", r.e);
        checks.extend(estimate_checks("sweep", &tag, &r.forward, model));
        checks.extend(estimate_checks("sweep", &tag, &r.reverse, model));
        let mut c = Check::new("sweep", format!("ground_energy{tag}"), "lowest Ritz value of H finite");
        c.detail("ritz", r.ground_energy);
        let measured = match r.ground_energy {
            Some(g) if g.value.is_finite() && r.ground_converged => g.residual,
            _ => f64::INFINITY,
        };
        checks.push(c.at_most(measured, 0.0, cfg.tolerances.iterative));
        let mut c = Check::new("sweep", format!("step2{tag}"), "Step-2 μ finite");
        c.detail("b", r.step2.b);
        let measured = if r.step2.converged && r.step2.mu.is_finite() { r.step2.residual } else { f64::INFINITY };
        checks.push(c.at_most(measured, 0.0, cfg.tolerances.iterative));
    }

    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.e.total_cmp(&b.e));
    let continuity_modulus = sorted
        .windows(2)
        .map(|w| match (w[0].c1, w[1].c1) {
            (Some(a), Some(b)) if w[1].e != w[0].e => Some((b - a).abs() / (w[1].e - w[0].e).abs()),
            _ => None,
        })
        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)));

    Ok(SweepReport {
        label: SWEEP_LABEL.into(),
        rows,
        continuity_modulus,
        checks,
    })
}
