//! Discretised one-particle space: a finite set of weighted momentum modes,
//! each carrying `p` polarization slots.
//!
//! Slots are flattened mode-major, `slot = mode · p + λ`. Inner products carry
//! the quadrature weights and are conjugate-linear in the first argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, I, ZERO};

pub type Vec3 = [f64; 3];

fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Axes used to build transverse frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameAxes {
    pub primary: Vec3,
    pub fallback: Vec3,
}

impl Default for FrameAxes {
    fn default() -> Self {
        FrameAxes {
            primary: [1.0, 0.0, 0.0],
            fallback: [0.0, 1.0, 0.0],
        }
    }
}

/// Beyond this overlap with `k̂` the primary axis is swapped for the fallback.
const PARALLEL_THRESHOLD: f64 = 0.9;

/// Orthonormal pair `(ε1, ε2)` perpendicular to `k`, with `ε1 × ε2 = k̂`.
///
/// `ε1` is the Gram-Schmidt projection of the primary axis off `k̂` (the
/// fallback axis when the primary is nearly parallel to `k`), `ε2 = k̂ × ε1`.
pub fn build_polarizations(k: &Vec3, axes: &FrameAxes) -> Result<(Vec3, Vec3)> {
    let kn = norm3(k);
    if kn == 0.0 || !kn.is_finite() {
        return Err(Error::ZeroWaveVector);
    }
    let khat = [k[0] / kn, k[1] / kn, k[2] / kn];
    let pn = norm3(&axes.primary);
    let aux = if pn > 0.0 && (dot3(&axes.primary, &khat) / pn).abs() <= PARALLEL_THRESHOLD {
        axes.primary
    } else {
        axes.fallback
    };
    let proj = dot3(&aux, &khat);
    let mut e1 = [
        aux[0] - proj * khat[0],
        aux[1] - proj * khat[1],
        aux[2] - proj * khat[2],
    ];
    let n1 = norm3(&e1);
    if n1 < 1e-8 {
        return Err(Error::param("fallback_axis", "parallel to a wave vector"));
    }
    for c in &mut e1 {
        *c /= n1;
    }
    let e2 = cross(&khat, &e1);
    Ok((e1, e2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    momenta: Vec<Vec3>,
    weights: Vec<f64>,
    omegas: Vec<f64>,
    polarization_count: usize,
    photon_mass: f64,
    /// Per-mode polarization vectors (empty for scalar fields).
    frames: Vec<Vec<Vec3>>,
    axes: FrameAxes,
}

impl ModeGrid {
    /// Explicit modes. Fails on a zero-frequency mode, duplicate momenta or
    /// a non-positive weight.
    pub fn new(
        momenta: Vec<Vec3>,
        weights: Vec<f64>,
        polarization_count: usize,
        photon_mass: f64,
        axes: FrameAxes,
    ) -> Result<Self> {
        if momenta.is_empty() {
            return Err(Error::param("momenta", "at least one mode is required"));
        }
        if momenta.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: momenta.len(),
                found: weights.len(),
            });
        }
        if !(1..=2).contains(&polarization_count) {
            return Err(Error::param(
                "polarizations",
                "must be 1 (scalar field) or 2 (transverse photons)",
            ));
        }
        if !(photon_mass >= 0.0 && photon_mass.is_finite()) {
            return Err(Error::param("photon_mass", "must be finite and non-negative"));
        }
        for (i, w) in weights.iter().enumerate() {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::param("weights", format!("weight {i} is not positive")));
            }
        }
        for i in 0..momenta.len() {
            for j in 0..i {
                if momenta[i] == momenta[j] {
                    return Err(Error::param("momenta", format!("modes {j} and {i} coincide")));
                }
            }
        }
        let omegas: Vec<f64> = momenta
            .iter()
            .map(|k| (photon_mass * photon_mass + dot3(k, k)).sqrt())
            .collect();
        if let Some(i) = omegas.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::param(
                "momenta",
                format!("mode {i} has zero frequency (massless zero mode)"),
            ));
        }
        let frames = if polarization_count == 2 {
            momenta
                .iter()
                .map(|k| build_polarizations(k, &axes).map(|(a, b)| vec![a, b]))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(ModeGrid {
            momenta,
            weights,
            omegas,
            polarization_count,
            photon_mass,
            frames,
            axes,
        })
    }

    /// Cubic lattice `spacing · m`, `m ∈ Z³`, `|m_i| ≤ per_axis`, `|k| ≤ cutoff`,
    /// every point weighted by the cell volume. Zero-frequency points are
    /// dropped.
    pub fn lattice(
        spacing: f64,
        per_axis: i64,
        cutoff: f64,
        polarization_count: usize,
        photon_mass: f64,
        axes: FrameAxes,
    ) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::param("spacing", "must be positive"));
        }
        let mut momenta = Vec::new();
        for a in -per_axis..=per_axis {
            for b in -per_axis..=per_axis {
                for c in -per_axis..=per_axis {
                    let k = [a as f64 * spacing, b as f64 * spacing, c as f64 * spacing];
                    let kk = norm3(&k);
                    if kk > cutoff * (1.0 + 1e-12) {
                        continue;
                    }
                    if photon_mass == 0.0 && kk == 0.0 {
                        continue;
                    }
                    if polarization_count == 2 && kk == 0.0 {
                        continue;
                    }
                    momenta.push(k);
                }
            }
        }
        let w = spacing.powi(3);
        let weights = vec![w; momenta.len()];
        Self::new(momenta, weights, polarization_count, photon_mass, axes)
    }

    pub fn modes(&self) -> usize {
        self.momenta.len()
    }

    pub fn polarization_count(&self) -> usize {
        self.polarization_count
    }

    /// `M · p`.
    pub fn slots(&self) -> usize {
        self.momenta.len() * self.polarization_count
    }

    pub fn momentum(&self, mode: usize) -> &Vec3 {
        &self.momenta[mode]
    }

    pub fn momenta(&self) -> &[Vec3] {
        &self.momenta
    }

    pub fn weight(&self, mode: usize) -> f64 {
        self.weights[mode]
    }

    pub fn photon_mass(&self) -> f64 {
        self.photon_mass
    }

    pub fn frame_axes(&self) -> &FrameAxes {
        &self.axes
    }

    /// `ω(k) = sqrt(m_ph² + |k|²)`.
    pub fn dispersion(&self, mode: usize) -> f64 {
        self.omegas[mode]
    }

    pub fn slot_mode(&self, slot: usize) -> usize {
        slot / self.polarization_count
    }

    pub fn slot_weight(&self, slot: usize) -> f64 {
        self.weights[self.slot_mode(slot)]
    }

    pub fn slot_omega(&self, slot: usize) -> f64 {
        self.omegas[self.slot_mode(slot)]
    }

    /// Dispersion per slot, the diagonal of the one-particle operator `M_ω`.
    pub fn slot_omegas(&self) -> Vec<f64> {
        (0..self.slots()).map(|s| self.slot_omega(s)).collect()
    }

    /// `ε(λ, k_mode)`; `None` for scalar fields.
    pub fn polarization(&self, mode: usize, lambda: usize) -> Option<&Vec3> {
        self.frames.get(mode).map(|f| &f[lambda])
    }

    pub fn zeros(&self) -> OneParticleVector {
        OneParticleVector {
            amplitudes: vec![ZERO; self.slots()],
        }
    }

    /// `(g, h) = Σ w |.|`-weighted, conjugate-linear in `g`.
    pub fn inner(&self, g: &OneParticleVector, h: &OneParticleVector) -> C64 {
        g.amplitudes
            .iter()
            .zip(&h.amplitudes)
            .enumerate()
            .fold(ZERO, |acc, (s, (a, b))| acc + a.conj() * b * self.slot_weight(s))
    }

    pub fn norm(&self, h: &OneParticleVector) -> f64 {
        self.inner(h, h).re.max(0.0).sqrt()
    }

    /// `‖h‖_ω = (‖h‖² + ‖h/√ω‖²)^{1/2}`.
    pub fn omega_norm(&self, h: &OneParticleVector) -> f64 {
        h.amplitudes
            .iter()
            .enumerate()
            .map(|(s, a)| self.slot_weight(s) * a.norm_sqr() * (1.0 + 1.0 / self.slot_omega(s)))
            .sum::<f64>()
            .sqrt()
    }

    /// `‖h/√ω‖`.
    pub fn inverse_sqrt_omega_norm(&self, h: &OneParticleVector) -> f64 {
        h.amplitudes
            .iter()
            .enumerate()
            .map(|(s, a)| self.slot_weight(s) * a.norm_sqr() / self.slot_omega(s))
            .sum::<f64>()
            .sqrt()
    }

    /// Pointwise `ω h`.
    pub fn multiply_omega(&self, h: &OneParticleVector) -> OneParticleVector {
        OneParticleVector {
            amplitudes: h
                .amplitudes
                .iter()
                .enumerate()
                .map(|(s, a)| a * self.slot_omega(s))
                .collect(),
        }
    }

    pub fn check(&self, h: &OneParticleVector) -> Result<()> {
        if h.amplitudes.len() != self.slots() {
            return Err(Error::DimensionMismatch {
                expected: self.slots(),
                found: h.amplitudes.len(),
            });
        }
        Ok(())
    }
}

/// Element of the truncated one-particle space, one amplitude per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneParticleVector {
    pub amplitudes: Vec<C64>,
}

impl OneParticleVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        OneParticleVector { amplitudes }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn scaled(&self, c: C64) -> Self {
        OneParticleVector {
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        OneParticleVector {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Which coupling function a family evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    /// `ρ(k) ω^{-1/2} e^{-ik·x_j} ε_a(λ,k)`.
    VectorPotential,
    /// `−i ρ(k) ω^{-1/2} e^{-ik·x_j} (k ∧ ε(λ,k))_a`.
    Magnetic,
    /// `ρ(k) ω^{-1/2} e^{-ik·x_j}` on a scalar (p = 1) field.
    Scalar,
}

/// Coupling function `x ↦ G_{j,a}(x)` for particle `j` and component `a`.
///
/// Particle positions live in `R^s` with `s = particle_dim ≤ 3`; the phase
/// pairs them with the first `s` components of each momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingFamily {
    pub particle: usize,
    pub component: usize,
    pub kind: CouplingKind,
    pub particle_dim: usize,
    /// `ρ(k)` per mode.
    pub form_factor: Vec<C64>,
}

impl CouplingFamily {
    pub fn new(
        grid: &ModeGrid,
        particle: usize,
        component: usize,
        kind: CouplingKind,
        particle_dim: usize,
        form_factor: Vec<C64>,
    ) -> Result<Self> {
        if form_factor.len() != grid.modes() {
            return Err(Error::DimensionMismatch {
                expected: grid.modes(),
                found: form_factor.len(),
            });
        }
        if component > 2 {
            return Err(Error::param("component", "must be 0, 1 or 2"));
        }
        if !(1..=3).contains(&particle_dim) {
            return Err(Error::param("particle_dim", "must be 1, 2 or 3"));
        }
        match kind {
            CouplingKind::Scalar if grid.polarization_count() != 1 => {
                return Err(Error::param("kind", "scalar coupling needs one polarization"))
            }
            CouplingKind::VectorPotential | CouplingKind::Magnetic
                if grid.polarization_count() != 2 =>
            {
                return Err(Error::param("kind", "vector couplings need two polarizations"))
            }
            _ => {}
        }
        Ok(CouplingFamily {
            particle,
            component,
            kind,
            particle_dim,
            form_factor,
        })
    }

    /// Polarization-dependent weight `ε_a`, `(k ∧ ε)_a` or 1.
    fn polarization_weight(&self, grid: &ModeGrid, mode: usize, lambda: usize) -> C64 {
        match self.kind {
            CouplingKind::Scalar => C64::new(1.0, 0.0),
            CouplingKind::VectorPotential => {
                C64::new(grid.polarization(mode, lambda).unwrap()[self.component], 0.0)
            }
            CouplingKind::Magnetic => {
                let eps = grid.polarization(mode, lambda).unwrap();
                let kxe = cross(grid.momentum(mode), eps);
                -I * kxe[self.component]
            }
        }
    }

    /// Amplitudes at `x_j = 0`: `ρ ω^{-1/2}` times the polarization weight.
    pub fn base_amplitudes(&self, grid: &ModeGrid) -> Vec<C64> {
        let p = grid.polarization_count();
        let mut out = Vec::with_capacity(grid.slots());
        for mode in 0..grid.modes() {
            let pref = self.form_factor[mode] / grid.dispersion(mode).sqrt();
            for lambda in 0..p {
                out.push(pref * self.polarization_weight(grid, mode, lambda));
            }
        }
        out
    }

    fn particle_position<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        let s = self.particle_dim;
        &x[self.particle * s..(self.particle + 1) * s]
    }

    /// Phase `k·x_j` of each mode.
    pub fn phase(&self, grid: &ModeGrid, x: &[f64], mode: usize) -> f64 {
        let k = grid.momentum(mode);
        self.particle_position(x)
            .iter()
            .zip(k.iter())
            .map(|(xi, ki)| xi * ki)
            .sum()
    }

    /// `G(x)` for the full configuration `x ∈ R^{n·s}`.
    pub fn evaluate(&self, grid: &ModeGrid, x: &[f64]) -> OneParticleVector {
        let base = self.base_amplitudes(grid);
        let p = grid.polarization_count();
        let amplitudes = base
            .iter()
            .enumerate()
            .map(|(slot, b)| {
                let ph = self.phase(grid, x, slot / p);
                b * C64::from_polar(1.0, -ph)
            })
            .collect();
        OneParticleVector { amplitudes }
    }

    /// Analytic `∂G/∂x_coord`: `−i k_b G` when `coord` is axis `b` of this
    /// family's particle, zero otherwise.
    pub fn derivative(&self, grid: &ModeGrid, x: &[f64], coord: usize) -> OneParticleVector {
        let s = self.particle_dim;
        if coord / s != self.particle {
            return grid.zeros();
        }
        let b = coord % s;
        let g = self.evaluate(grid, x);
        let p = grid.polarization_count();
        OneParticleVector {
            amplitudes: g
                .amplitudes
                .iter()
                .enumerate()
                .map(|(slot, a)| -I * grid.momentum(slot / p)[b] * a)
                .collect(),
        }
    }
}

/// Form-factor choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormFactor {
    /// `1` for `|k| ≤ Λ`, else `0`.
    Indicator { cutoff: f64 },
    /// `(1 + β k̂·u)` inside the cutoff; `|ρ(k)| ≠ |ρ(−k)|` for `β ≠ 0`.
    Asymmetric {
        cutoff: f64,
        asymmetry: f64,
        direction: Vec3,
    },
}

impl FormFactor {
    pub fn evaluate(&self, k: &Vec3) -> C64 {
        let kk = norm3(k);
        match *self {
            FormFactor::Indicator { cutoff } => {
                C64::new(if kk <= cutoff * (1.0 + 1e-12) { 1.0 } else { 0.0 }, 0.0)
            }
            FormFactor::Asymmetric {
                cutoff,
                asymmetry,
                direction,
            } => {
                if kk > cutoff * (1.0 + 1e-12) {
                    return ZERO;
                }
                let un = norm3(&direction);
                let proj = if kk > 0.0 && un > 0.0 {
                    dot3(k, &direction) / (kk * un)
                } else {
                    0.0
                };
                C64::new(1.0 + asymmetry * proj, 0.0)
            }
        }
    }

    pub fn on_grid(&self, grid: &ModeGrid) -> Vec<C64> {
        grid.momenta().iter().map(|k| self.evaluate(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(omega_k: Vec3, mass: f64, p: usize) -> ModeGrid {
        ModeGrid::new(vec![omega_k], vec![1.0], p, mass, FrameAxes::default()).unwrap()
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(single([3.0, 4.0, 0.0], 0.0, 1).dispersion(0), 5.0);
        assert_eq!(single([0.0, 0.0, 0.0], 1.0, 1).dispersion(0), 1.0);
        let err = ModeGrid::new(vec![[0.0; 3]], vec![1.0], 1, 0.0, FrameAxes::default());
        assert!(err.is_err());
    }

    #[test]
    fn lattice_excludes_massless_zero_mode() {
        let g = ModeGrid::lattice(1.0, 1, 1.0, 1, 0.0, FrameAxes::default()).unwrap();
        assert_eq!(g.modes(), 6);
        assert!(g.momenta().iter().all(|k| norm3(k) > 0.0));
    }

    #[test]
    fn omega_norm_examples() {
        let g = single([0.0, 0.0, 0.0], 1.0, 1);
        let h = OneParticleVector::new(vec![C64::new(1.0, 0.0)]);
        assert!((g.omega_norm(&h) - 2f64.sqrt()).abs() < 1e-15);
        let g4 = single([0.0, 0.0, 4.0], 0.0, 1);
        let h2 = OneParticleVector::new(vec![C64::new(2.0, 0.0)]);
        assert!((g4.omega_norm(&h2) - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(g4.omega_norm(&g4.zeros()), 0.0);
    }

    #[test]
    fn canonical_frame() {
        let (e1, e2) = build_polarizations(&[0.0, 0.0, 1.0], &FrameAxes::default()).unwrap();
        assert_eq!(e1, [1.0, 0.0, 0.0]);
        assert_eq!(e2, [0.0, 1.0, 0.0]);
        assert_eq!(
            build_polarizations(&[0.0; 3], &FrameAxes::default()),
            Err(Error::ZeroWaveVector)
        );
    }

    #[test]
    fn frames_are_orthonormal_and_transverse() {
        let s = 1.0 / 3f64.sqrt();
        for k in [[0.0, 0.0, -1.0], [s, s, s], [1.0, 0.0, 0.0], [-2.0, 1e-9, 0.0]] {
            let (e1, e2) = build_polarizations(&k, &FrameAxes::default()).unwrap();
            let kn = norm3(&k);
            let kh = [k[0] / kn, k[1] / kn, k[2] / kn];
            assert!((dot3(&e1, &e1) - 1.0).abs() < 1e-14);
            assert!((dot3(&e2, &e2) - 1.0).abs() < 1e-14);
            assert!(dot3(&e1, &e2).abs() < 1e-14);
            assert!(dot3(&e1, &kh).abs() < 1e-14);
            assert!(dot3(&e2, &kh).abs() < 1e-14);
            let c = cross(&e1, &e2);
            assert!((dot3(&c, &kh) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn magnetic_weight_is_cross_product() {
        let g = single([0.0, 0.0, 1.0], 0.0, 2);
        // k ∧ ε1 = (0,1,0) for k = ẑ, ε1 = x̂
        for a in 0..3 {
            let fam = CouplingFamily::new(&g, 0, a, CouplingKind::Magnetic, 3, vec![C64::new(1.0, 0.0)])
                .unwrap();
            let amp = fam.evaluate(&g, &[0.0; 3]).amplitudes[0];
            let expected = if a == 1 { -I } else { ZERO };
            assert!((amp - expected).norm() < 1e-15, "component {a}: {amp}");
        }
    }

    #[test]
    fn coupling_at_origin_and_shifted() {
        let g = ModeGrid::new(
            vec![[1.0, 2.0, 0.5], [-0.3, 0.1, 0.7]],
            vec![0.5, 0.25],
            2,
            0.0,
            FrameAxes::default(),
        )
        .unwrap();
        let fam = CouplingFamily::new(
            &g,
            0,
            1,
            CouplingKind::VectorPotential,
            3,
            vec![C64::new(1.0, 0.0), C64::new(0.5, 0.2)],
        )
        .unwrap();
        let g0 = fam.evaluate(&g, &[0.0; 3]);
        for (slot, a) in g0.amplitudes.iter().enumerate() {
            let mode = slot / 2;
            let eps = g.polarization(mode, slot % 2).unwrap();
            let expected = fam.form_factor[mode] / g.dispersion(mode).sqrt() * eps[1];
            assert!((a - expected).norm() < 1e-15);
        }
        let gx = fam.evaluate(&g, &[0.3, -1.7, 2.2]);
        assert!((g.omega_norm(&gx) - g.omega_norm(&g0)).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let g = ModeGrid::new(
            vec![[1.0, 2.0, 0.5], [-0.3, 0.1, 0.7]],
            vec![0.5, 0.25],
            2,
            0.2,
            FrameAxes::default(),
        )
        .unwrap();
        let fam = CouplingFamily::new(
            &g,
            1,
            0,
            CouplingKind::VectorPotential,
            3,
            vec![C64::new(1.0, 0.0); 2],
        )
        .unwrap();
        let x = [0.1, 0.2, 0.3, 0.4, -0.5, 0.6];
        let step = 1e-5;
        for coord in 0..6 {
            let analytic = fam.derivative(&g, &x, coord);
            let mut xp = x;
            let mut xm = x;
            xp[coord] += step;
            xm[coord] -= step;
            let fp = fam.evaluate(&g, &xp);
            let fm = fam.evaluate(&g, &xm);
            let fd: Vec<C64> = fp
                .amplitudes
                .iter()
                .zip(&fm.amplitudes)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect();
            let scale = g.norm(&fam.evaluate(&g, &x));
            for (a, b) in analytic.amplitudes.iter().zip(&fd) {
                assert!((a - b).norm() <= 1e-8 * scale, "coord {coord}");
            }
        }
    }
}
