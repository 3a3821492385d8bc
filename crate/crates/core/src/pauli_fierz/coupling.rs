//! Coupling functions sampled on the spatial grid.

use std::f64::consts::PI;
use std::sync::Arc;

use super::space::CompositeSpace;
use crate::error::{Error, Result};
use crate::linalg::{C64, I};
use crate::one_particle::{CouplingFamily, CouplingKind, ModeGrid};

/// Checks that every momentum component along a particle axis is a grid
/// Fourier mode strictly below Nyquist, `k_c = 2π m / L` with
/// `|m| ≤ P/2 − 1`.
pub fn check_band_limit(space: &CompositeSpace) -> Result<()> {
    let modes = &space.modes;
    let l = space.grid.length();
    let limit = (space.grid.points() as i64) / 2 - 1;
    for mode in 0..modes.modes() {
        let k = modes.momentum(mode);
        for (axis, kc) in k.iter().take(space.particle_dim).enumerate() {
            let m = kc * l / (2.0 * PI);
            let mr = m.round();
            if (m - mr).abs() > 1e-9 * mr.abs().max(1.0) {
                return Err(Error::Nyquist {
                    mode,
                    axis,
                    reason: format!("k = {kc} is not a multiple of 2π/L (m = {m})"),
                });
            }
            if mr.abs() as i64 > limit {
                return Err(Error::Nyquist {
                    mode,
                    axis,
                    reason: format!("|m| = {} exceeds P/2 − 1 = {limit}", mr.abs()),
                });
            }
        }
    }
    Ok(())
}

/// Largest `|m|` per particle axis over all modes.
pub fn mode_extent(space: &CompositeSpace) -> Vec<i64> {
    let l = space.grid.length();
    (0..space.particle_dim)
        .map(|c| {
            space
                .modes
                .momenta()
                .iter()
                .map(|k| (k[c] * l / (2.0 * PI)).round().abs() as i64)
                .max()
                .unwrap_or(0)
        })
        .collect()
}

/// Band margins for every grid axis, `margin · extent` per axis.
pub fn band_margins(space: &CompositeSpace, multiple: i64) -> Vec<i64> {
    let ext = mode_extent(space);
    (0..space.grid.axes())
        .map(|a| ext[a % space.particle_dim] * multiple)
        .collect()
}

/// Folded profile `√w_s G_s(x)` at index `x·slots + s`.
pub fn sample(space: &CompositeSpace, family: &CouplingFamily) -> Result<Arc<Vec<C64>>> {
    check_band_limit(space)?;
    if family.particle >= space.particles || family.particle_dim != space.particle_dim {
        return Err(Error::param("coupling", "family does not match the composite space"));
    }
    let modes = &space.modes;
    let slots = modes.slots();
    let sqrt_w: Vec<f64> = (0..slots).map(|s| modes.slot_weight(s).sqrt()).collect();
    let mut out = Vec::with_capacity(space.spatial_size() * slots);
    for x in 0..space.spatial_size() {
        let coords = space.grid.coordinates(x);
        let g = family.evaluate(modes, &coords);
        out.extend(g.amplitudes.iter().zip(&sqrt_w).map(|(a, w)| a * w));
    }
    Ok(Arc::new(out))
}

/// Pointwise `profile · m_s` for a per-slot multiplier.
pub fn scale_slots(space: &CompositeSpace, profile: &[C64], factor: &[C64]) -> Arc<Vec<C64>> {
    let slots = space.fock.slots();
    Arc::new(
        profile
            .iter()
            .enumerate()
            .map(|(i, v)| v * factor[i % slots])
            .collect(),
    )
}

/// Profile of `iωG`.
pub fn i_omega(space: &CompositeSpace, profile: &[C64]) -> Arc<Vec<C64>> {
    let f: Vec<C64> = space.modes.slot_omegas().iter().map(|w| I * w).collect();
    scale_slots(space, profile, &f)
}

/// Profile of `∂G/∂x_axis` for a family of particle `j`: `−i k_c G` when
/// `axis` is component `c` of particle `j`, zero otherwise.
pub fn derivative(space: &CompositeSpace, profile: &[C64], particle: usize, axis: usize) -> Arc<Vec<C64>> {
    let s = space.particle_dim;
    let modes = &space.modes;
    let f: Vec<C64> = (0..modes.slots())
        .map(|slot| {
            if axis / s == particle {
                -I * modes.momentum(modes.slot_mode(slot))[axis % s]
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    scale_slots(space, profile, &f)
}

/// `(F(x), G(x))_𝔥` per grid point, from folded profiles.
pub fn pointwise_inner(space: &CompositeSpace, f: &[C64], g: &[C64]) -> Vec<C64> {
    let slots = space.fock.slots();
    (0..space.spatial_size())
        .map(|x| {
            f[x * slots..(x + 1) * slots]
                .iter()
                .zip(&g[x * slots..(x + 1) * slots])
                .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
        })
        .collect()
}

/// `G_{j,c}` for every grid axis `a = j·s + c`: the vector potential for
/// transverse fields, the scalar coupling for `p = 1`.
pub fn vector_potential_families(
    space: &CompositeSpace,
    form_factor: &[C64],
) -> Result<Vec<CouplingFamily>> {
    let modes: &ModeGrid = &space.modes;
    let kind = if modes.polarization_count() == 2 {
        CouplingKind::VectorPotential
    } else {
        CouplingKind::Scalar
    };
    let s = space.particle_dim;
    (0..space.grid.axes())
        .map(|a| CouplingFamily::new(modes, a / s, a % s, kind, s, form_factor.to_vec()))
        .collect()
}

/// `E_{j,a}` for each particle `j` and `a ∈ {0, 1, 2}`.
pub fn magnetic_families(
    space: &CompositeSpace,
    form_factor: &[C64],
) -> Result<Vec<[CouplingFamily; 3]>> {
    let s = space.particle_dim;
    (0..space.particles)
        .map(|j| {
            let mk = |a| {
                CouplingFamily::new(&space.modes, j, a, CouplingKind::Magnetic, s, form_factor.to_vec())
            };
            Ok([mk(0)?, mk(1)?, mk(2)?])
        })
        .collect()
}
