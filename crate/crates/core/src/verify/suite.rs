//! Family dispatch and the low-lying spectrum.

use serde::Serialize;

use crate::config::Model;
use crate::error::{Error, Result};
use crate::linalg::dense;
use crate::par;

use super::physics::{hamiltonian, lowest, RitzValue};
use super::{bounds, composite, fock_checks, physics, CheckResult};

type Job = fn(&Model) -> Vec<CheckResult>;

fn ccr(m: &Model) -> Vec<CheckResult> {
    let mut out = fock_checks::ccr(m);
    out.push(composite::field_commutator(m));
    out
}

fn field_energy(m: &Model) -> Vec<CheckResult> {
    vec![fock_checks::field_energy_commutator(m), composite::field_energy_commutator(m)]
}

fn norm_bounds(m: &Model) -> Vec<CheckResult> {
    let mut out = fock_checks::norm_bounds(m);
    out.extend(composite::norm_bounds(m));
    out
}

const JOBS: &[(&str, Job)] = &[
    ("ccr", ccr),
    ("field_energy", field_energy),
    ("norm_bounds", norm_bounds),
    ("leibniz", composite::leibniz),
    ("resolvent", composite::resolvent),
    ("ta_identity", composite::ta_identity),
    ("relative_bound", bounds::relative_bound),
    ("step2", bounds::step2),
    ("noncommuting", composite::noncommuting),
    ("pauli_fierz", physics::pauli_fierz),
    ("kato", physics::kato),
];

/// Runs every selected family; results keep the family order above.
pub fn run_checks(model: &Model) -> Vec<CheckResult> {
    let jobs: Vec<&(&str, Job)> = JOBS.iter().filter(|(name, _)| model.config.selected(name)).collect();
    par::map(&jobs, |(_, job)| job(model)).into_iter().flatten().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub k: usize,
    pub dim: usize,
    pub eigenvalues: Vec<RitzValue>,
    pub converged: bool,
    /// Dense eigenvalues when the oracle is on and the dimension allows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dense: Option<Vec<f64>>,
}

/// Lowest `k` eigenvalues of the Pauli-Fierz operator at the configured
/// charges.
pub fn spectrum(model: &Model, k: usize) -> Result<SpectrumReport> {
    let h = hamiltonian(model, 1.0, true)?;
    let dim = model.spin_space.dim();
    if k == 0 || k > dim {
        return Err(Error::param("k", format!("must lie in 1..={dim}")));
    }
    let cfg = &model.config;
    let dense = if cfg.dense_oracle && dim <= cfg.budget.dense {
        let m = dense::materialize(&h, cfg.budget.dense)?;
        let mut ev = dense::hermitian_eigenvalues(&m);
        ev.truncate(k);
        Some(ev)
    } else {
        None
    };
    let (eigenvalues, converged) = if 4 * k + 16 >= dim {
        // Krylov would need the whole space; report the dense values.
        match &dense {
            Some(ev) => (ev.iter().map(|&value| RitzValue { value, residual: 0.0 }).collect(), true),
            None => lowest(&h, k)?,
        }
    } else {
        lowest(&h, k)?
    };
    Ok(SpectrumReport {
        k,
        dim,
        eigenvalues,
        converged,
        dense,
    })
}
