//! Truncated symmetric Fock space in the occupation-number basis.
//!
//! Quadrature weights are folded into the matrix elements, so every stored
//! operator acts on plain coefficient vectors with the Euclidean inner
//! product. Creation operators are followed by the projection back onto
//! total quanta `≤ N_max`; identities therefore hold exactly only on the
//! low sectors, which callers select with [`FockBasis::sector_mask`].

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, C64, ZERO};
use crate::one_particle::{ModeGrid, OneParticleVector};
use crate::sparse::{Csr, SquareCsr};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct FockBasis {
    slots: usize,
    n_max: usize,
    states: Vec<Vec<u16>>,
    totals: Vec<usize>,
    index: HashMap<Vec<u16>, usize>,
    /// `raise[i·slots + s]` = index of `n_i + e_s`, or `NONE` at the cutoff.
    raise: Vec<u32>,
    /// `lower[i·slots + s]` = index of `n_i − e_s`, or `NONE` when `n_s = 0`.
    lower: Vec<u32>,
}

/// `binom(n, k)` in u128, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    r
}

fn compositions(slots: usize, total: usize, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if prefix.len() + 1 == slots {
        prefix.push(total as u16);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first as u16);
        compositions(slots, total - first, prefix, out);
        prefix.pop();
    }
}

impl FockBasis {
    /// Fails when the dimension `binom(slots + n_max, n_max)` exceeds `budget`.
    pub fn new(slots: usize, n_max: usize, budget: usize) -> Result<Self> {
        if slots == 0 {
            return Err(Error::param("slots", "at least one slot is required"));
        }
        let dim = binomial(slots + n_max, n_max);
        if dim > budget as u128 {
            return Err(Error::DimensionBudget {
                dim: dim.min(usize::MAX as u128) as usize,
                budget,
            });
        }
        let mut states = Vec::with_capacity(dim as usize);
        for total in 0..=n_max {
            let mut block = Vec::new();
            compositions(slots, total, &mut Vec::with_capacity(slots), &mut block);
            block.sort();
            states.extend(block);
        }
        let totals: Vec<usize> = states
            .iter()
            .map(|s| s.iter().map(|&v| v as usize).sum())
            .collect();
        let index: HashMap<Vec<u16>, usize> =
            states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut raise = vec![NONE; states.len() * slots];
        let mut lower = vec![NONE; states.len() * slots];
        for (i, st) in states.iter().enumerate() {
            if totals[i] == n_max {
                continue;
            }
            let mut up = st.clone();
            for s in 0..slots {
                up[s] += 1;
                let j = index[&up];
                raise[i * slots + s] = j as u32;
                lower[j * slots + s] = i as u32;
                up[s] -= 1;
            }
        }
        Ok(FockBasis {
            slots,
            n_max,
            states,
            totals,
            index,
            raise,
            lower,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn total(&self, i: usize) -> usize {
        self.totals[i]
    }

    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn vacuum(&self) -> usize {
        0
    }

    /// Index of `n_i + e_s`, `None` at the cutoff.
    pub fn raised(&self, i: usize, s: usize) -> Option<usize> {
        let r = self.raise[i * self.slots + s];
        (r != NONE).then_some(r as usize)
    }

    /// Index of `n_i − e_s`, `None` when slot `s` is empty.
    pub fn lowered(&self, i: usize, s: usize) -> Option<usize> {
        let r = self.lower[i * self.slots + s];
        (r != NONE).then_some(r as usize)
    }

    /// 1 on states with total quanta `≤ m`, else 0.
    pub fn sector_mask(&self, m: usize) -> Vec<f64> {
        self.totals
            .iter()
            .map(|&t| if t <= m { 1.0 } else { 0.0 })
            .collect()
    }

    /// `Σ_s n_s v_s` per state.
    pub fn diagonal_values(&self, values: &[f64]) -> Vec<f64> {
        self.states
            .iter()
            .map(|st| st.iter().zip(values).map(|(&n, v)| n as f64 * v).sum())
            .collect()
    }

    fn check_grid(&self, grid: &ModeGrid) -> Result<()> {
        if grid.slots() != self.slots {
            return Err(Error::DimensionMismatch {
                expected: self.slots,
                found: grid.slots(),
            });
        }
        Ok(())
    }

    /// Folded ladder amplitudes `√w_s h_s`.
    pub fn ladder_amplitudes(&self, grid: &ModeGrid, h: &OneParticleVector) -> Result<Vec<C64>> {
        self.check_grid(grid)?;
        grid.check(h)?;
        Ok(h.amplitudes
            .iter()
            .enumerate()
            .map(|(s, a)| a * grid.slot_weight(s).sqrt())
            .collect())
    }

    /// `y = scale · φ(c) x` with `φ(c) = (a(c) + a*(c))/√2` on folded
    /// amplitudes `c`; `y` is accumulated into, not overwritten.
    pub fn accumulate_field(&self, amps: &[C64], scale: C64, x: &[C64], y: &mut [C64]) {
        let f = scale * std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.dim() {
            let st = &self.states[i];
            for (s, &c) in amps.iter().enumerate() {
                if c == ZERO {
                    continue;
                }
                if let Some(j) = self.raised(i, s) {
                    let m = (st[s] as f64 + 1.0).sqrt();
                    // ⟨j| a*(c) |i⟩ = c √(n_s+1), ⟨i| a(c) |j⟩ = conj(c) √(n_s+1)
                    y[j] += f * c * m * x[i];
                    y[i] += f * c.conj() * m * x[j];
                }
            }
        }
    }
}

/// Grading shift of an operator in total quanta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    Lowering,
    Preserving,
    Raising,
    Mixed,
}

#[derive(Debug, Clone)]
pub struct FockOperator {
    pub op: SquareCsr,
    pub grading: Grading,
    pub hermitian: bool,
}

impl FockOperator {
    fn new(matrix: Csr, grading: Grading, hermitian: bool) -> Self {
        FockOperator {
            op: SquareCsr::new(matrix),
            grading,
            hermitian,
        }
    }

    pub fn matrix(&self) -> &Csr {
        &self.op.matrix
    }

    pub fn adjoint(&self) -> FockOperator {
        let grading = match self.grading {
            Grading::Lowering => Grading::Raising,
            Grading::Raising => Grading::Lowering,
            g => g,
        };
        FockOperator {
            op: SquareCsr {
                matrix: self.op.adjoint.clone(),
                adjoint: self.op.matrix.clone(),
            },
            grading,
            hermitian: self.hermitian,
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.op
            .matrix
            .add(C64::new(1.0, 0.0), &self.op.adjoint, C64::new(-1.0, 0.0))
            .map(|d| d.max_abs())
            .unwrap_or(f64::INFINITY)
    }

    pub fn mul(&self, other: &FockOperator) -> FockOperator {
        FockOperator::new(
            self.matrix().matmul(other.matrix()).expect("equal Fock bases"),
            Grading::Mixed,
            false,
        )
    }

    pub fn commutator(&self, other: &FockOperator) -> FockOperator {
        FockOperator::new(
            self.matrix().commutator(other.matrix()).expect("equal Fock bases"),
            Grading::Mixed,
            false,
        )
    }

    pub fn linear_combination(&self, a: C64, other: &FockOperator, b: C64) -> FockOperator {
        FockOperator::new(
            self.matrix().add(a, other.matrix(), b).expect("equal Fock bases"),
            Grading::Mixed,
            false,
        )
    }
}

impl LinearOperator for FockOperator {
    fn dim(&self) -> usize {
        self.op.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.op.apply(x, y)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.op.apply_adjoint(x, y)
    }
}

/// `a*(h)`: `⟨n + e_s| a*(h) |n⟩ = √w_s h_s √(n_s + 1)`.
pub fn creation(basis: &FockBasis, grid: &ModeGrid, h: &OneParticleVector) -> Result<FockOperator> {
    let amps = basis.ladder_amplitudes(grid, h)?;
    let mut trips = Vec::new();
    for i in 0..basis.dim() {
        let st = basis.state(i);
        for (s, &c) in amps.iter().enumerate() {
            if let Some(j) = basis.raised(i, s) {
                trips.push((j, i, c * (st[s] as f64 + 1.0).sqrt()));
            }
        }
    }
    let n = basis.dim();
    Ok(FockOperator::new(
        Csr::from_triplets(n, n, trips),
        Grading::Raising,
        false,
    ))
}

/// `a(h)`, the adjoint of [`creation`].
pub fn annihilation(
    basis: &FockBasis,
    grid: &ModeGrid,
    h: &OneParticleVector,
) -> Result<FockOperator> {
    Ok(creation(basis, grid, h)?.adjoint())
}

/// `φ(h) = (a(h) + a*(h))/√2`.
pub fn field(basis: &FockBasis, grid: &ModeGrid, h: &OneParticleVector) -> Result<FockOperator> {
    let ad = creation(basis, grid, h)?;
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let m = ad.op.matrix.add(r, &ad.op.adjoint, r)?;
    Ok(FockOperator::new(m, Grading::Mixed, true))
}

/// `dΓ(M_v)`: diagonal with entry `Σ_s n_s v_s`.
pub fn second_quantization_diagonal(basis: &FockBasis, values: &[f64]) -> Result<FockOperator> {
    if values.len() != basis.slots() {
        return Err(Error::DimensionMismatch {
            expected: basis.slots(),
            found: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("mode_values", "must be finite"));
    }
    Ok(FockOperator::new(
        Csr::diagonal(&basis.diagonal_values(values)),
        Grading::Preserving,
        true,
    ))
}

pub fn number_operator(basis: &FockBasis) -> FockOperator {
    second_quantization_diagonal(basis, &vec![1.0; basis.slots()]).expect("unit values")
}

/// `H_f = dΓ(M_ω)`.
pub fn field_energy(basis: &FockBasis, grid: &ModeGrid) -> Result<FockOperator> {
    second_quantization_diagonal(basis, &grid.slot_omegas())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::one_particle::FrameAxes;

    fn scalar_grid(omegas: &[f64]) -> ModeGrid {
        let momenta = omegas.iter().map(|w| [0.0, 0.0, *w]).collect();
        ModeGrid::new(momenta, vec![1.0; omegas.len()], 1, 0.0, FrameAxes::default()).unwrap()
    }

    fn ones(n: usize) -> OneParticleVector {
        OneParticleVector::new(vec![C64::new(1.0, 0.0); n])
    }

    #[test]
    fn dimension_is_binomial() {
        for (slots, n) in [(1, 4), (2, 3), (4, 3), (6, 5)] {
            let b = FockBasis::new(slots, n, 1 << 20).unwrap();
            assert_eq!(b.dim() as u128, binomial(slots + n, n));
            for i in 1..b.dim() {
                assert!(b.total(i - 1) <= b.total(i));
                if b.total(i - 1) == b.total(i) {
                    assert!(b.state(i - 1) < b.state(i));
                }
                assert_eq!(b.index_of(b.state(i)), Some(i));
            }
        }
        assert!(FockBasis::new(10, 10, 1000).is_err());
    }

    #[test]
    fn single_slot_ladder() {
        let g = scalar_grid(&[1.0]);
        let b = FockBasis::new(1, 4, 100).unwrap();
        let ad = creation(&b, &g, &ones(1)).unwrap();
        for n in 0..4 {
            assert!((ad.matrix().get(n + 1, n).re - ((n + 1) as f64).sqrt()).abs() < 1e-15);
        }
        assert_eq!(ad.matrix().nnz(), 4);
        let phi = field(&b, &g, &ones(1)).unwrap();
        assert!(phi.hermiticity_residual() < 1e-15);
        for n in 0..4 {
            let v = phi.matrix().get(n, n + 1).re;
            assert!((v - ((n + 1) as f64 / 2.0).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn creation_on_vacuum_places_h() {
        let g = scalar_grid(&[1.0, 2.0, 3.0]);
        let b = FockBasis::new(3, 2, 100).unwrap();
        let h = OneParticleVector::new(vec![C64::new(0.5, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, 2.0)]);
        let ad = creation(&b, &g, &h).unwrap();
        let mut vac = vec![ZERO; b.dim()];
        vac[0] = C64::new(1.0, 0.0);
        let out = ad.apply_vec(&vac);
        let norm: f64 = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - g.norm(&h)).abs() < 1e-15);
        let a = annihilation(&b, &g, &h).unwrap();
        assert!(a.apply_vec(&vac).iter().all(|z| *z == ZERO));
        // a(h) a*(g) Ω = (h, g) Ω
        let g2 = OneParticleVector::new(vec![C64::new(1.0, -1.0), C64::new(0.3, 0.0), C64::new(2.0, 0.5)]);
        let adg = creation(&b, &g, &g2).unwrap();
        let res = a.apply_vec(&adg.apply_vec(&vac));
        let ip = g.inner(&h, &g2);
        assert!((res[0] - ip).norm() < 1e-14);
        assert!(res[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn field_energy_examples() {
        let g = scalar_grid(&[1.0, 2.0, 0.5]);
        let b = FockBasis::new(3, 3, 100).unwrap();
        let hf = field_energy(&b, &g).unwrap();
        let i = b.index_of(&[1, 0, 2]).unwrap();
        assert!((hf.matrix().get(i, i).re - 2.0).abs() < 1e-15);
        assert_eq!(hf.matrix().get(0, 0), ZERO);
        let n = number_operator(&FockBasis::new(2, 3, 100).unwrap());
        let b2 = FockBasis::new(2, 3, 100).unwrap();
        let j = b2.index_of(&[2, 1]).unwrap();
        assert_eq!(n.matrix().get(j, j).re, 3.0);
    }

    #[test]
    fn accumulate_field_matches_assembled() {
        let g = scalar_grid(&[1.0, 2.0]);
        let b = FockBasis::new(2, 3, 100).unwrap();
        let h = OneParticleVector::new(vec![C64::new(0.5, 1.0), C64::new(-1.0, 0.25)]);
        let phi = field(&b, &g, &h).unwrap();
        let amps = b.ladder_amplitudes(&g, &h).unwrap();
        let x: Vec<C64> = (0..b.dim()).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let mut y = vec![ZERO; b.dim()];
        b.accumulate_field(&amps, C64::new(1.0, 0.0), &x, &mut y);
        let expected = phi.apply_vec(&x);
        for (a, e) in y.iter().zip(&expected) {
            assert!((a - e).norm() < 1e-13);
        }
    }
}
