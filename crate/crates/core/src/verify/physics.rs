//! The Pauli-Fierz operator and the Coulomb relative-bound estimator.

use serde::Serialize;

use crate::config::Model;
use crate::error::Result;
use crate::linalg::dense;
use crate::linalg::krylov::{extremal_eigenpairs, Extremal, KrylovOptions};
use crate::linalg::{dot, C64};
use crate::particle::{coulomb_potential, kato_bound_estimate, KatoOptions, KatoPoint, Nucleus, PotentialSpec, SpatialGrid};
use crate::pauli_fierz::{assemble_pauli_fierz, CompositeOperator, PauliFierzParams};

use super::{relative_gap, Check, CheckResult};

/// Pushes a failed result and returns the list on error.
macro_rules! try_check_vec {
    ($out:ident, $check:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $out.push($check.error(&err));
                return $out;
            }
        }
    };
}

/// Charges scaled by `e`; `e = 1` gives the configured charges.
pub fn scaled_params(model: &Model, e: f64) -> PauliFierzParams {
    let ph = &model.config.physics;
    PauliFierzParams {
        masses: ph.masses.clone(),
        charges: ph.charges.iter().map(|q| q * e).collect(),
    }
}

/// Pauli-Fierz operator at charges `e · q_j`, with or without the potential.
pub fn hamiltonian(model: &Model, e: f64, with_potential: bool) -> Result<CompositeOperator> {
    assemble_pauli_fierz(
        &model.spin_space,
        &model.profiles,
        model.magnetic.as_deref(),
        if with_potential { model.potential.as_deref() } else { None },
        &scaled_params(model, e),
    )
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RitzValue {
    pub value: f64,
    pub residual: f64,
}

/// Lowest `k` Ritz values.
pub fn lowest(op: &CompositeOperator, k: usize) -> Result<(Vec<RitzValue>, bool)> {
    let opts = KrylovOptions {
        max_basis: (64usize).max(4 * k + 16),
        ..KrylovOptions::default()
    };
    let eig = extremal_eigenpairs(op, k, Extremal::Lowest, None, &opts)?;
    Ok((
        eig.pairs
            .iter()
            .map(|p| RitzValue {
                value: p.value,
                residual: p.residual,
            })
            .collect(),
        eig.converged,
    ))
}

pub fn pauli_fierz(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let sp = &model.spin_space;
    let tol = &cfg.tolerances;
    let mut out = Vec::new();

    let c = Check::new("pauli_fierz", "hamiltonian_hermitian", "⟨u, Hv⟩ = ⟨Hu, v⟩");
    let h = try_check_vec!(out, c, hamiltonian(model, 1.0, true));
    let mut c = c;
    c.detail("dim", sp.dim());
    c.detail("spin", sp.spin);
    c.detail("potential", model.potential.is_some());
    out.push(c.residual(h.hermiticity_residual(cfg.seed, 10), tol.exact));

    if sp.spin {
        // Σ_σ ⟨x,σ,f| σ_a |x,σ,f⟩ at a fixed x and f
        let mut worst = 0.0f64;
        for j in 0..sp.particles {
            for a in 0..3 {
                let op = CompositeOperator::pauli(sp, j, a);
                let mut tr = C64::new(0.0, 0.0);
                for sigma in 0..sp.spin_dim() {
                    let mut v = vec![C64::new(0.0, 0.0); sp.dim()];
                    v[sp.index(0, sigma, 0)] = C64::new(1.0, 0.0);
                    tr += dot(&v, &crate::linalg::LinearOperator::apply_vec(&op, &v));
                }
                worst = worst.max(tr.norm());
            }
        }
        out.push(
            Check::new("pauli_fierz", "pauli_traceless", "tr σ_{j,a} = 0 on each spin block")
                .residual(worst, tol.exact),
        );
    }

    let c = Check::new("pauli_fierz", "free_ground_energy", "min spec(Σ p_j²/2m_j + H_f) = 0");
    let h0 = try_check_vec!(out, c, hamiltonian(model, 0.0, false));
    let (v0, conv0) = try_check_vec!(out, c, lowest(&h0, 1));
    let mut c = c;
    c.detail("ritz", v0[0]);
    c.detail("converged", conv0);
    out.push(c.residual(v0[0].value.abs(), tol.resolvent));

    let c = Check::new("pauli_fierz", "ground_energy", "lowest Ritz value of H finite");
    let (v, conv) = try_check_vec!(out, c, lowest(&h, 1));
    let mut c = c;
    c.detail("ground_energy", v[0].value);
    c.detail("converged", conv);
    let e_h = v[0].value;
    out.push(c.at_most(if e_h.is_finite() && conv { v[0].residual } else { f64::INFINITY }, 0.0, tol.iterative));

    if cfg.dense_oracle && sp.dim() <= cfg.budget.dense {
        let mut c = Check::new("pauli_fierz", "ground_energy_dense_oracle", "Lanczos ground energy = dense");
        match dense::materialize(&h, cfg.budget.dense) {
            Ok(m) => {
                let ev = dense::hermitian_eigenvalues(&m);
                c.detail("dense", ev[0]);
                out.push(c.residual(relative_gap(e_h, ev[0], 1.0), tol.iterative));
            }
            Err(err) => out.push(c.error(&err)),
        }
    }

    // small-coupling shift without potential: recorded, see details
    let c = Check::new(
        "pauli_fierz",
        "ground_energy_small_coupling",
        "E(0.1) − E(0) of H without potential (direction recorded)",
    );
    let hs = try_check_vec!(out, c, hamiltonian(model, 0.1, false));
    let (vs, convs) = try_check_vec!(out, c, lowest(&hs, 1));
    let mut c = c;
    let shift = vs[0].value - v0[0].value;
    c.detail("e0", v0[0].value);
    c.detail("e_small", vs[0].value);
    c.detail("shift", shift);
    c.detail("direction", if shift < 0.0 { "decreases" } else { "increases" });
    c.detail("converged", convs);
    out.push(c.at_most(if convs { vs[0].residual } else { f64::INFINITY }, 0.0, tol.iterative));
    out
}

/// The estimator's potential: one nucleus at the centre of a 1D box.
pub fn kato_potential(model: &Model, points: usize) -> Result<(SpatialGrid, Vec<f64>)> {
    let k = &model.config.checks.kato;
    let l = model.config.grid.length;
    let grid = SpatialGrid::new(1, points, l)?;
    let spec = PotentialSpec {
        particles: 1,
        particle_dim: 1,
        pair_coupling: Vec::new(),
        nuclei: vec![Nucleus {
            position: vec![0.5 * l],
            coupling: vec![k.charge],
        }],
        softening: k.softening,
    };
    let v = coulomb_potential(&grid, &spec)?;
    Ok((grid, v))
}

fn increase(points: &[KatoPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| match (w[0].a_min, w[1].a_min) {
            (_, None) if w[0].a_min.is_some() => f64::INFINITY,
            (Some(a), Some(b)) => (b - a).max(0.0),
            _ => 0.0,
        })
        .fold(0.0, f64::max)
}

pub fn kato(model: &Model) -> Vec<CheckResult> {
    let cfg = &model.config;
    let k = &cfg.checks.kato;
    let mut out = Vec::new();
    let c = Check::new("kato", "kato_monotone", "a_min(b) non-increasing in b");
    let (grid, v) = try_check_vec!(out, c, kato_potential(model, k.points));
    let pts = try_check_vec!(out, c, kato_bound_estimate(&v, &grid, &k.b_values, &KatoOptions::default()));
    let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut c = c;
    c.detail("points", k.points);
    c.detail("softening", k.softening);
    c.detail("estimates", &pts);
    c.detail("rms_v", rms);
    c.detail("max_abs_v", vmax);
    c.detail(
        "note",
        "a_min is reported, not adjudicated: how closely the softened kernel mimics an infinitesimal bound depends on δ and P",
    );
    out.push(c.residual(increase(&pts), 0.0));

    if cfg.dense_oracle {
        let c = Check::new("kato", "kato_dense_oracle", "iterative a_min = dense a_min");
        let (g16, v16) = try_check_vec!(out, c, kato_potential(model, k.oracle_points));
        let it = try_check_vec!(out, c, kato_bound_estimate(&v16, &g16, &k.b_values, &KatoOptions::default()));
        let dn = try_check_vec!(
            out,
            c,
            kato_bound_estimate(
                &v16,
                &g16,
                &k.b_values,
                &KatoOptions {
                    dense: true,
                    ..KatoOptions::default()
                },
            )
        );
        let gap = it
            .iter()
            .zip(&dn)
            .map(|(a, b)| match (a.a_min, b.a_min) {
                (Some(x), Some(y)) => relative_gap(x, y, 1e-300),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max);
        let mut c = c;
        c.detail("points", k.oracle_points);
        c.detail("iterative", &it);
        c.detail("dense", &dn);
        out.push(c.residual(gap, cfg.tolerances.iterative));
    }
    out
}
