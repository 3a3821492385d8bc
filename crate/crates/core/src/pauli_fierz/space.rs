//! Composite space `(spatial grid) ⊗ (spin) ⊗ (Fock)`.
//!
//! Flat index `x + S·(σ + S_σ·f)`: spatial index fastest, Fock index
//! slowest. The spin bit of particle `j` is bit `n − 1 − j` of `σ`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::linalg::C64;
use crate::one_particle::ModeGrid;
use crate::particle::SpatialGrid;

#[derive(Debug)]
pub struct CompositeSpace {
    pub grid: SpatialGrid,
    pub particles: usize,
    pub particle_dim: usize,
    pub spin: bool,
    pub modes: Arc<ModeGrid>,
    pub fock: Arc<FockBasis>,
}

impl CompositeSpace {
    /// Fails when the total dimension exceeds `budget`.
    pub fn new(
        particles: usize,
        particle_dim: usize,
        points: usize,
        length: f64,
        spin: bool,
        modes: Arc<ModeGrid>,
        fock: Arc<FockBasis>,
        budget: usize,
    ) -> Result<Arc<Self>> {
        if particles == 0 {
            return Err(Error::param("particles", "at least one particle is required"));
        }
        if !(1..=3).contains(&particle_dim) {
            return Err(Error::param("particle_dim", "must be 1, 2 or 3"));
        }
        if modes.slots() != fock.slots() {
            return Err(Error::DimensionMismatch {
                expected: modes.slots(),
                found: fock.slots(),
            });
        }
        let axes = particles * particle_dim;
        let spatial = (points as u128).pow(axes as u32);
        let spin_dim: u128 = if spin { 1 << particles } else { 1 };
        let dim = spatial * spin_dim * fock.dim() as u128;
        if dim > budget as u128 {
            return Err(Error::DimensionBudget {
                dim: dim.min(usize::MAX as u128) as usize,
                budget,
            });
        }
        let grid = SpatialGrid::new(axes, points, length)?;
        Ok(Arc::new(CompositeSpace {
            grid,
            particles,
            particle_dim,
            spin,
            modes,
            fock,
        }))
    }

    /// Same factors with spin switched on or off.
    pub fn with_spin(&self, spin: bool) -> Arc<Self> {
        Arc::new(CompositeSpace {
            grid: self.grid.clone(),
            particles: self.particles,
            particle_dim: self.particle_dim,
            spin,
            modes: self.modes.clone(),
            fock: self.fock.clone(),
        })
    }

    pub fn spatial_size(&self) -> usize {
        self.grid.size()
    }

    pub fn spin_dim(&self) -> usize {
        if self.spin {
            1 << self.particles
        } else {
            1
        }
    }

    /// Length of one Fock block, `S · S_σ`.
    pub fn block(&self) -> usize {
        self.spatial_size() * self.spin_dim()
    }

    pub fn dim(&self) -> usize {
        self.block() * self.fock.dim()
    }

    pub fn index(&self, x: usize, sigma: usize, f: usize) -> usize {
        x + self.spatial_size() * (sigma + self.spin_dim() * f)
    }

    /// `(x, σ, f)` of a flat index.
    pub fn split(&self, i: usize) -> (usize, usize, usize) {
        let s = self.spatial_size();
        let sd = self.spin_dim();
        (i % s, (i / s) % sd, i / (s * sd))
    }

    /// Product state `χ(x) ⊗ e_σ ⊗ e_f`.
    pub fn product_state(&self, spatial: &[C64], sigma: usize, f: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        for (x, a) in spatial.iter().enumerate() {
            v[self.index(x, sigma, f)] = *a;
        }
        v
    }
}
