//! Run configuration and the model it describes.
//!
//! Every field has a default, so `{}` is the desk model: one particle on a
//! 16-point periodic line of length 10, two photon modes, `N_max = 3`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{binomial, FockBasis};
use crate::linalg::C64;
use crate::one_particle::{FormFactor, FrameAxes, ModeGrid, Vec3};
use crate::particle::{coulomb_potential, Nucleus, PotentialSpec, SpatialGrid};
use crate::pauli_fierz::coupling::{self, check_band_limit};
use crate::pauli_fierz::CompositeSpace;

/// Check families, in report order.
pub const FAMILIES: [&str; 11] = [
    "ccr",
    "field_energy",
    "norm_bounds",
    "leibniz",
    "resolvent",
    "ta_identity",
    "relative_bound",
    "step2",
    "noncommuting",
    "pauli_fierz",
    "kato",
];

/// Families whose checks need at least two quanta of headroom.
const COMMUTATOR_FAMILIES: [&str; 5] = ["ccr", "field_energy", "norm_bounds", "resolvent", "noncommuting"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub particles: usize,
    pub particle_dim: usize,
    pub points: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            particles: 1,
            particle_dim: 1,
            points: 16,
            length: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModesConfig {
    /// Listed momenta; weights default to `(2π/L)³` each.
    Explicit {
        momenta: Vec<Vec3>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Cubic lattice of spacing `2π/L`, `|m_i| ≤ per_axis`, `|k| ≤ cutoff`.
    Lattice { per_axis: i64, cutoff: f64 },
}

impl Default for ModesConfig {
    fn default() -> Self {
        let kappa = 2.0 * PI / GridConfig::default().length;
        ModesConfig::Explicit {
            momenta: vec![[kappa, kappa, 0.0], [-kappa, kappa, 0.0]],
            weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub modes: ModesConfig,
    pub polarizations: usize,
    pub photon_mass: f64,
    pub frame: FrameAxes,
    pub form_factor: FormFactor,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            modes: ModesConfig::default(),
            polarizations: 2,
            photon_mass: 0.0,
            frame: FrameAxes::default(),
            form_factor: FormFactor::Indicator { cutoff: 2.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FockConfig {
    /// Cutoff of the composite space.
    pub n_max: usize,
    /// Cutoff for the Fock-only identity checks.
    pub check_n_max: usize,
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig { n_max: 3, check_n_max: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusConfig {
    /// Box centre when omitted.
    #[serde(default)]
    pub position: Option<Vec<f64>>,
    /// `z_{j,J}` per particle.
    pub coupling: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// `c_{j,l}`; empty means no pair terms.
    pub pair_coupling: Vec<Vec<f64>>,
    pub nuclei: Vec<NucleusConfig>,
    /// Softening `δ`; one grid spacing when omitted.
    pub softening: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            pair_coupling: Vec::new(),
            nuclei: vec![NucleusConfig {
                position: None,
                coupling: vec![-1.0],
            }],
            softening: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub masses: Vec<f64>,
    pub charges: Vec<f64>,
    pub spin: bool,
    pub potential: Option<PotentialConfig>,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            masses: vec![1.0],
            charges: vec![1.0],
            spin: true,
            potential: Some(PotentialConfig::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KatoConfig {
    pub points: usize,
    pub oracle_points: usize,
    pub softening: f64,
    pub charge: f64,
    pub b_values: Vec<f64>,
}

impl Default for KatoConfig {
    fn default() -> Self {
        KatoConfig {
            points: 32,
            oracle_points: 16,
            softening: 0.2,
            charge: -1.0,
            b_values: vec![1.5, 2.0, 3.0, 4.0, 6.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoncommutingConfig {
    pub points: usize,
    pub n_max: usize,
    pub asymmetry: f64,
}

impl Default for NoncommutingConfig {
    fn default() -> Self {
        NoncommutingConfig {
            points: 8,
            n_max: 2,
            asymmetry: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    /// Random inputs per identity.
    pub samples: usize,
    /// Random inputs per norm bound.
    pub bound_samples: usize,
    /// Random vectors for operator identities on the composite space.
    pub probes: usize,
    /// Random pairs for quadratic-form identities.
    pub form_pairs: usize,
    pub resubstitution_probes: usize,
    /// Coupling used by the composite checks.
    pub coupling: f64,
    pub alphas: Vec<f64>,
    pub c2_grid: Vec<f64>,
    pub d2_grid: Vec<f64>,
    pub sweep_e: Vec<f64>,
    pub spectrum_k: usize,
    /// Cutoff of the single-mode norm-bound case.
    pub single_mode_n_max: usize,
    pub kato: KatoConfig,
    pub noncommuting: NoncommutingConfig,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        let grid = vec![0.0, 0.1, 1.0, 10.0, 100.0, 1000.0];
        ChecksConfig {
            samples: 50,
            bound_samples: 20,
            probes: 100,
            form_pairs: 50,
            resubstitution_probes: 200,
            coupling: 1.0,
            alphas: vec![0.1, 1.0, 10.0],
            c2_grid: grid.clone(),
            d2_grid: grid,
            sweep_e: vec![0.0, 0.5, 1.0, 2.0],
            spectrum_k: 4,
            single_mode_n_max: 40,
            kato: KatoConfig::default(),
            noncommuting: NoncommutingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Exact finite-dimensional identities.
    pub exact: f64,
    /// Identities with one resolvent or inverse square root.
    pub resolvent: f64,
    /// Outputs of iterative solvers.
    pub iterative: f64,
    /// `T_A` against its explicit and expanded forms.
    pub ta_identity: f64,
    pub resubstitution_slack: f64,
    /// Norm-bound slack.
    pub bound: f64,
    /// Lower threshold for commutators expected to be nonzero.
    pub noncommuting_floor: f64,
    /// Finite-difference cross-check of `∂G`.
    pub finite_difference: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-12,
            resolvent: 1e-10,
            iterative: 1e-8,
            ta_identity: 1e-11,
            resubstitution_slack: 1e-9,
            bound: 1e-10,
            noncommuting_floor: 1e-6,
            finite_difference: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub composite: usize,
    pub dense: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            composite: 5_000_000,
            dense: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub field: FieldConfig,
    pub fock: FockConfig,
    pub physics: PhysicsConfig,
    pub checks: ChecksConfig,
    pub tolerances: Tolerances,
    pub budget: Budget,
    /// Families to run; all when empty.
    pub only: Vec<String>,
    pub seed: u64,
    pub dense_oracle: bool,
    pub out: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridConfig::default(),
            field: FieldConfig::default(),
            fock: FockConfig::default(),
            physics: PhysicsConfig::default(),
            checks: ChecksConfig::default(),
            tolerances: Tolerances::default(),
            budget: Budget::default(),
            only: Vec::new(),
            seed: 0,
            dense_oracle: true,
            out: "pfcert-out".into(),
        }
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("parse: {e}")]))
    }

    /// Whether family `name` is selected.
    pub fn selected(&self, name: &str) -> bool {
        self.only.is_empty() || self.only.iter().any(|n| n == name)
    }

    /// Weights and momenta of the configured mode grid.
    pub fn mode_grid(&self) -> Result<ModeGrid> {
        let f = &self.field;
        match &f.modes {
            ModesConfig::Explicit { momenta, weights } => {
                let w = weights
                    .clone()
                    .unwrap_or_else(|| vec![(2.0 * PI / self.grid.length).powi(3); momenta.len()]);
                ModeGrid::new(momenta.clone(), w, f.polarizations, f.photon_mass, f.frame)
            }
            ModesConfig::Lattice { per_axis, cutoff } => ModeGrid::lattice(
                2.0 * PI / self.grid.length,
                *per_axis,
                *cutoff,
                f.polarizations,
                f.photon_mass,
                f.frame,
            ),
        }
    }

    fn potential_spec(&self, p: &PotentialConfig, spacing: f64) -> PotentialSpec {
        let g = &self.grid;
        let centre = vec![0.5 * g.length; g.particle_dim];
        PotentialSpec {
            particles: g.particles,
            particle_dim: g.particle_dim,
            pair_coupling: p.pair_coupling.clone(),
            nuclei: p
                .nuclei
                .iter()
                .map(|n| Nucleus {
                    position: n.position.clone().unwrap_or_else(|| centre.clone()),
                    coupling: n.coupling.clone(),
                })
                .collect(),
            softening: p.softening.unwrap_or(spacing),
        }
    }

    /// Validates every field before anything is allocated. All problems are
    /// collected, each prefixed by its field path.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut err = |path: &str, msg: String| errs.push(format!("{path}: {msg}"));
        let g = &self.grid;
        if g.particles == 0 {
            err("grid.particles", "at least one particle is required".into());
        }
        if !(1..=3).contains(&g.particle_dim) {
            err("grid.particle_dim", "must be 1, 2 or 3".into());
        }
        if g.points < 2 {
            err("grid.points", "need at least 2 points per axis".into());
        }
        if !positive(g.length) {
            err("grid.length", "must be positive".into());
        }
        for name in &self.only {
            if !FAMILIES.contains(&name.as_str()) {
                err("only", format!("unknown family `{name}` (known: {})", FAMILIES.join(", ")));
            }
        }
        let commutators = COMMUTATOR_FAMILIES.iter().any(|f| self.selected(f));
        if commutators && self.fock.n_max < 2 {
            err(
                "fock.n_max",
                format!("{} < 2 leaves no safe sector for the commutator checks", self.fock.n_max),
            );
        }
        if commutators && self.fock.check_n_max < 2 {
            err("fock.check_n_max", "must be at least 2 for the commutator checks".into());
        }
        let f = &self.field;
        if !(1..=2).contains(&f.polarizations) {
            err("field.polarizations", "must be 1 or 2".into());
        }
        if !(f.photon_mass >= 0.0 && f.photon_mass.is_finite()) {
            err("field.photon_mass", "must be finite and non-negative".into());
        }
        let modes = self.mode_grid();
        match &modes {
            Err(e) => err("field.modes", e.to_string()),
            Ok(m) if g.particle_dim >= 1 && g.particle_dim <= 3 && positive(g.length) => {
                let limit = g.points as i64 / 2 - 1;
                for (i, k) in m.momenta().iter().enumerate() {
                    for (c, kc) in k.iter().take(g.particle_dim).enumerate() {
                        let q = kc * g.length / (2.0 * PI);
                        if (q - q.round()).abs() > 1e-9 * q.abs().max(1.0) {
                            err(
                                &format!("field.modes.momenta[{i}][{c}]"),
                                format!("{kc} is not a multiple of 2π/L"),
                            );
                        } else if q.round().abs() as i64 > limit {
                            err(
                                &format!("field.modes.momenta[{i}][{c}]"),
                                format!("|m| = {} is at or above Nyquist (limit P/2 − 1 = {limit})", q.round().abs()),
                            );
                        }
                    }
                }
            }
            Ok(_) => {}
        }
        let ph = &self.physics;
        if ph.masses.len() != g.particles {
            err("physics.masses", format!("need {} entries", g.particles));
        }
        if ph.charges.len() != g.particles {
            err("physics.charges", format!("need {} entries", g.particles));
        }
        if ph.masses.iter().any(|m| !positive(*m)) {
            err("physics.masses", "masses must be positive".into());
        }
        if let Some(p) = &ph.potential {
            if let Some(d) = p.softening {
                if !positive(d) {
                    err("physics.potential.softening", "δ must be positive".into());
                }
            }
            if let Ok(grid) = SpatialGrid::new(1, g.points.max(2), if positive(g.length) { g.length } else { 1.0 }) {
                let spec = self.potential_spec(p, grid.spacing());
                if let Ok(full) = SpatialGrid::new(
                    (g.particles * g.particle_dim).max(1),
                    g.points.max(2),
                    if positive(g.length) { g.length } else { 1.0 },
                ) {
                    if let Err(e) = spec.validate(&full) {
                        err("physics.potential", e.to_string());
                    }
                }
            }
        }
        let c = &self.checks;
        if c.alphas.iter().any(|a| !positive(*a)) {
            err("checks.alphas", "α must be positive".into());
        }
        for (path, grid) in [("checks.c2_grid", &c.c2_grid), ("checks.d2_grid", &c.d2_grid)] {
            if grid.is_empty() || grid.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || !increasing(grid) {
                err(path, "must be a non-empty, non-negative, strictly increasing list".into());
            }
        }
        if c.sweep_e.iter().any(|e| !e.is_finite()) {
            err("checks.sweep_e", "values must be finite".into());
        }
        if !c.sweep_e.contains(&0.0) {
            err("checks.sweep_e", "must include 0 (the free-case reference row)".into());
        }
        if !c.coupling.is_finite() {
            err("checks.coupling", "must be finite".into());
        }
        if c.spectrum_k == 0 {
            err("checks.spectrum_k", "must be at least 1".into());
        }
        if c.resubstitution_probes == 0 || c.probes == 0 {
            err("checks", "probe counts must be positive".into());
        }
        let k = &c.kato;
        if !positive(k.softening) {
            err("checks.kato.softening", "δ must be positive".into());
        }
        if k.points < 4 || k.oracle_points < 4 {
            err("checks.kato.points", "need at least 4 points".into());
        }
        if k.b_values.is_empty() || k.b_values.iter().any(|b| !positive(*b)) || !increasing(&k.b_values) {
            err("checks.kato.b_values", "must be positive and strictly increasing".into());
        }
        if self.selected("noncommuting") {
            let nc = &c.noncommuting;
            if nc.points < 4 {
                err("checks.noncommuting.points", "need at least 4 points".into());
            }
            if nc.n_max < 2 {
                err("checks.noncommuting.n_max", "must be at least 2".into());
            }
        }
        let t = &self.tolerances;
        for (path, v) in [
            ("tolerances.exact", t.exact),
            ("tolerances.resolvent", t.resolvent),
            ("tolerances.iterative", t.iterative),
            ("tolerances.ta_identity", t.ta_identity),
            ("tolerances.resubstitution_slack", t.resubstitution_slack),
            ("tolerances.bound", t.bound),
            ("tolerances.noncommuting_floor", t.noncommuting_floor),
            ("tolerances.finite_difference", t.finite_difference),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                err(path, "must be finite and non-negative".into());
            }
        }
        // dimension budget, computed without allocating
        if let Ok(m) = &modes {
            if g.points >= 2 && (1..=3).contains(&g.particle_dim) && g.particles > 0 {
                let fock = binomial(m.slots() + self.fock.n_max, self.fock.n_max);
                let spatial = (g.points as u128).checked_pow((g.particles * g.particle_dim) as u32);
                let spin: u128 = if ph.spin { 1u128 << g.particles.min(64) } else { 1 };
                let dim = spatial.and_then(|s| s.checked_mul(fock)).and_then(|d| d.checked_mul(spin));
                match dim {
                    Some(d) if d <= self.budget.composite as u128 => {}
                    _ => err(
                        "budget.composite",
                        format!(
                            "composite dimension {} exceeds the budget {}",
                            dim.map(|d| d.to_string()).unwrap_or_else(|| "overflow".into()),
                            self.budget.composite
                        ),
                    ),
                }
                let check = binomial(m.slots() + self.fock.check_n_max, self.fock.check_n_max);
                if check > self.budget.composite as u128 {
                    err("fock.check_n_max", format!("Fock dimension {check} exceeds the budget"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Validates and builds the model.
    pub fn build(&self) -> Result<Model> {
        self.validate()?;
        let g = &self.grid;
        let modes = Arc::new(self.mode_grid()?);
        let form_factor = self.field.form_factor.on_grid(&modes);
        let fock = Arc::new(FockBasis::new(modes.slots(), self.fock.n_max, self.budget.composite)?);
        let space = CompositeSpace::new(
            g.particles,
            g.particle_dim,
            g.points,
            g.length,
            false,
            modes.clone(),
            fock,
            self.budget.composite,
        )?;
        check_band_limit(&space)?;
        let spin_space = space.with_spin(self.physics.spin);
        let profiles = coupling::vector_potential_families(&space, &form_factor)?
            .iter()
            .map(|f| coupling::sample(&space, f))
            .collect::<Result<Vec<_>>>()?;
        let magnetic = if self.physics.spin && self.field.polarizations == 2 {
            let fams = coupling::magnetic_families(&space, &form_factor)?;
            Some(
                fams.iter()
                    .map(|t| -> Result<[Arc<Vec<C64>>; 3]> {
                        Ok([
                            coupling::sample(&space, &t[0])?,
                            coupling::sample(&space, &t[1])?,
                            coupling::sample(&space, &t[2])?,
                        ])
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let potential = match &self.physics.potential {
            Some(p) => Some(coulomb_potential(&space.grid, &self.potential_spec(p, space.grid.spacing()))?),
            None => None,
        };
        Ok(Model {
            config: self.clone(),
            modes,
            form_factor,
            space,
            spin_space,
            profiles,
            magnetic,
            potential,
        })
    }
}

/// Operators' raw material for one configuration.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: RunConfig,
    pub modes: Arc<ModeGrid>,
    pub form_factor: Vec<C64>,
    /// Spinless composite space.
    pub space: Arc<CompositeSpace>,
    /// Composite space of the Pauli-Fierz operator (spin per config).
    pub spin_space: Arc<CompositeSpace>,
    /// Unit-coupling `G_a`, one folded profile per grid axis.
    pub profiles: Vec<Arc<Vec<C64>>>,
    /// Unit-coupling `E_{j,a}` when spin is on.
    pub magnetic: Option<Vec<[Arc<Vec<C64>>; 3]>>,
    pub potential: Option<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_is_the_desk_model() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        let m = c.build().unwrap();
        assert_eq!(m.space.dim(), 16 * 35);
        assert_eq!(m.spin_space.dim(), 16 * 2 * 35);
        assert_eq!(m.profiles.len(), 1);
        assert!(m.magnetic.is_some());
    }

    #[test]
    fn round_trip_through_json() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn low_cutoff_is_rejected_with_path() {
        let mut c = RunConfig::default();
        c.fock.n_max = 1;
        match c.validate() {
            Err(Error::Config(v)) => assert!(v.iter().any(|m| m.starts_with("fock.n_max"))),
            other => panic!("{other:?}"),
        }
        c.only = vec!["kato".into()];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn nyquist_and_budget_are_rejected() {
        let mut c = RunConfig::default();
        c.grid.points = 4;
        let kappa = 2.0 * PI / 10.0;
        c.field.modes = ModesConfig::Explicit {
            momenta: vec![[2.0 * kappa, 0.0, 0.0]],
            weights: None,
        };
        let Err(Error::Config(v)) = c.validate() else { panic!() };
        assert!(v.iter().any(|m| m.contains("momenta[0][0]")), "{v:?}");
        let mut c = RunConfig::default();
        c.budget.composite = 100;
        let Err(Error::Config(v)) = c.validate() else { panic!() };
        assert!(v.iter().any(|m| m.starts_with("budget.composite")));
    }

    #[test]
    fn unknown_fields_fail_to_parse() {
        assert!(RunConfig::from_json(r#"{"grid": {"pionts": 3}}"#).is_err());
    }
}
