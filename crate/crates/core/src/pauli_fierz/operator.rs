//! Lazily applied operators on the composite space.
//!
//! Leaves act on a single tensor factor; sums and products compose them
//! without ever forming the composite matrix. Products list their factors
//! left to right and apply them right to left.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::space::CompositeSpace;
use crate::fock::FockOperator;
use crate::linalg::{axpy, dot, norm, LinearOperator, C64, ONE, ZERO};
use crate::par;
use crate::particle::FourierMultiplier;
use crate::rng;

#[derive(Debug)]
pub enum Node {
    Identity,
    Zero,
    /// Multiplication by a function of the grid point.
    Spatial(Arc<Vec<C64>>),
    /// Real diagonal in the occupation basis.
    FockDiagonal(Arc<Vec<f64>>),
    Fourier(FourierMultiplier),
    /// `Φ(G)`: block over grid points `x` with block `φ(G(x))`. The profile
    /// holds folded amplitudes `√w_s G_s(x)` at index `x·slots + s`.
    Field(Arc<Vec<C64>>),
    Fock(Arc<FockOperator>),
    Pauli { particle: usize, axis: usize },
    Sum(Vec<(C64, CompositeOperator)>),
    Product(Vec<CompositeOperator>),
    Adjoint(CompositeOperator),
}

#[derive(Debug, Clone)]
pub struct CompositeOperator {
    pub space: Arc<CompositeSpace>,
    pub node: Arc<Node>,
    /// Declared Hermitian; see [`CompositeOperator::hermiticity_residual`].
    pub hermitian: bool,
}

impl CompositeOperator {
    pub fn new(space: &Arc<CompositeSpace>, node: Node, hermitian: bool) -> Self {
        CompositeOperator {
            space: space.clone(),
            node: Arc::new(node),
            hermitian,
        }
    }

    pub fn identity(space: &Arc<CompositeSpace>) -> Self {
        Self::new(space, Node::Identity, true)
    }

    pub fn zero(space: &Arc<CompositeSpace>) -> Self {
        Self::new(space, Node::Zero, true)
    }

    pub fn spatial(space: &Arc<CompositeSpace>, values: Vec<C64>) -> Self {
        assert_eq!(values.len(), space.spatial_size());
        let herm = values.iter().all(|v| v.im == 0.0);
        Self::new(space, Node::Spatial(Arc::new(values)), herm)
    }

    pub fn spatial_real(space: &Arc<CompositeSpace>, values: &[f64]) -> Self {
        Self::spatial(space, values.iter().map(|v| C64::new(*v, 0.0)).collect())
    }

    pub fn fock_diagonal(space: &Arc<CompositeSpace>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), space.fock.dim());
        Self::new(space, Node::FockDiagonal(Arc::new(values)), true)
    }

    pub fn fourier(space: &Arc<CompositeSpace>, multiplier: FourierMultiplier) -> Self {
        assert_eq!(multiplier.grid.size(), space.spatial_size());
        Self::new(space, Node::Fourier(multiplier), true)
    }

    pub fn field(space: &Arc<CompositeSpace>, profile: Arc<Vec<C64>>) -> Self {
        assert_eq!(profile.len(), space.spatial_size() * space.fock.slots());
        Self::new(space, Node::Field(profile), true)
    }

    pub fn fock(space: &Arc<CompositeSpace>, op: Arc<FockOperator>) -> Self {
        assert_eq!(op.dim(), space.fock.dim());
        let herm = op.hermitian;
        Self::new(space, Node::Fock(op), herm)
    }

    pub fn pauli(space: &Arc<CompositeSpace>, particle: usize, axis: usize) -> Self {
        assert!(space.spin, "Pauli matrices need the spin factor");
        assert!(particle < space.particles && axis < 3);
        Self::new(space, Node::Pauli { particle, axis }, true)
    }

    pub fn sum(space: &Arc<CompositeSpace>, terms: Vec<(C64, CompositeOperator)>) -> Self {
        let herm = terms.iter().all(|(c, t)| c.im == 0.0 && t.hermitian);
        Self::new(space, Node::Sum(terms), herm)
    }

    pub fn product(space: &Arc<CompositeSpace>, factors: Vec<CompositeOperator>) -> Self {
        Self::new(space, Node::Product(factors), false)
    }

    pub fn adjoint(&self) -> Self {
        if self.hermitian {
            return self.clone();
        }
        Self::new(&self.space, Node::Adjoint(self.clone()), false)
    }

    /// Overrides the Hermitian tag, e.g. for `X†X` or `B A B` with `A, B`
    /// Hermitian.
    pub fn tagged_hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self::sum(&self.space, vec![(c, self.clone())])
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64], adjoint: bool) {
        let sp = &*self.space;
        match &*self.node {
            Node::Identity => y.copy_from_slice(x),
            Node::Zero => y.iter_mut().for_each(|v| *v = ZERO),
            Node::Spatial(values) => {
                let s = sp.spatial_size();
                par::for_each_chunk(y, s, |b, yc| {
                    let xs = &x[b * s..(b + 1) * s];
                    for ((yi, xi), v) in yc.iter_mut().zip(xs).zip(values.iter()) {
                        *yi = if adjoint { v.conj() } else { *v } * xi;
                    }
                });
            }
            Node::FockDiagonal(values) => {
                let blk = sp.block();
                par::for_each_chunk(y, blk, |f, yc| {
                    let d = values[f];
                    for (yi, xi) in yc.iter_mut().zip(&x[f * blk..(f + 1) * blk]) {
                        *yi = xi * d;
                    }
                });
            }
            Node::Fourier(m) => {
                let s = sp.spatial_size();
                par::for_each_chunk(y, s, |b, yc| m.apply_block(&x[b * s..(b + 1) * s], yc));
            }
            Node::Field(profile) => apply_field(sp, profile, x, y),
            Node::Fock(op) => {
                let blk = sp.block();
                let m = if adjoint { &op.op.adjoint } else { &op.op.matrix };
                par::for_each_chunk(y, blk, |f, yc| {
                    yc.iter_mut().for_each(|v| *v = ZERO);
                    for (g, v) in m.row(f) {
                        for (yi, xi) in yc.iter_mut().zip(&x[g * blk..(g + 1) * blk]) {
                            *yi += v * xi;
                        }
                    }
                });
            }
            Node::Pauli { particle, axis } => {
                let s = sp.spatial_size();
                let sd = sp.spin_dim();
                let bit = 1usize << (sp.particles - 1 - particle);
                par::for_each_chunk(y, s * sd, |f, yc| {
                    let base = f * s * sd;
                    for sigma in 0..sd {
                        let up = sigma & bit == 0;
                        let (src, c) = match axis {
                            0 => (sigma ^ bit, ONE),
                            // σ_y|↑⟩ = i|↓⟩, σ_y|↓⟩ = −i|↑⟩; output σ reads the flipped input
                            1 => (sigma ^ bit, if up { -C64::i() } else { C64::i() }),
                            _ => (sigma, if up { ONE } else { -ONE }),
                        };
                        let xs = &x[base + src * s..base + (src + 1) * s];
                        for (yi, xi) in yc[sigma * s..(sigma + 1) * s].iter_mut().zip(xs) {
                            *yi = c * xi;
                        }
                    }
                });
            }
            Node::Sum(terms) => {
                y.iter_mut().for_each(|v| *v = ZERO);
                let mut tmp = vec![ZERO; x.len()];
                for (c, t) in terms {
                    t.apply_into(x, &mut tmp, adjoint);
                    axpy(if adjoint { c.conj() } else { *c }, &tmp, y);
                }
            }
            Node::Product(factors) => {
                let mut cur = x.to_vec();
                let mut next = vec![ZERO; x.len()];
                let order: Box<dyn Iterator<Item = &CompositeOperator>> = if adjoint {
                    Box::new(factors.iter())
                } else {
                    Box::new(factors.iter().rev())
                };
                for f in order {
                    f.apply_into(&cur, &mut next, adjoint);
                    std::mem::swap(&mut cur, &mut next);
                }
                y.copy_from_slice(&cur);
            }
            Node::Adjoint(inner) => inner.apply_into(x, y, !adjoint),
        }
    }

    /// `max |⟨u, A v⟩ − ⟨A u, v⟩| / (‖u‖‖v‖)` over `trials` seeded pairs.
    pub fn hermiticity_residual(&self, seed: u64, trials: usize) -> f64 {
        let mut r = rng::stream(seed, "hermiticity");
        let n = self.dim();
        (0..trials)
            .map(|_| {
                let u = rng::complex_gaussian(&mut r, n);
                let v = rng::complex_gaussian(&mut r, n);
                let lhs = dot(&u, &self.apply_vec(&v));
                let rhs = dot(&self.apply_vec(&u), &v);
                (lhs - rhs).norm() / (norm(&u) * norm(&v))
            })
            .fold(0.0, f64::max)
    }

    /// `max |⟨u, A v⟩ − ⟨A† u, v⟩| / (‖u‖‖v‖)`, the consistency of the
    /// forward and adjoint code paths.
    pub fn adjoint_residual(&self, seed: u64, trials: usize) -> f64 {
        let mut r = rng::stream(seed, "adjoint");
        let n = self.dim();
        (0..trials)
            .map(|_| {
                let u = rng::complex_gaussian(&mut r, n);
                let v = rng::complex_gaussian(&mut r, n);
                let lhs = dot(&u, &self.apply_vec(&v));
                let rhs = dot(&self.apply_adjoint_vec(&u), &v);
                (lhs - rhs).norm() / (norm(&u) * norm(&v))
            })
            .fold(0.0, f64::max)
    }
}

/// `y = Φ(G) x`, parallel over output Fock blocks.
fn apply_field(sp: &CompositeSpace, profile: &[C64], x: &[C64], y: &mut [C64]) {
    let s = sp.spatial_size();
    let sd = sp.spin_dim();
    let blk = s * sd;
    let slots = sp.fock.slots();
    let fock = &*sp.fock;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    par::for_each_chunk(y, blk, |f, yc| {
        yc.iter_mut().for_each(|v| *v = ZERO);
        let st = fock.state(f);
        for slot in 0..slots {
            let n = st[slot] as f64;
            // a*(G) from n − e_s: ⟨f| a* |i⟩ = u_s √n_s
            if let Some(i) = fock.lowered(f, slot) {
                let c = r * n.sqrt();
                for sigma in 0..sd {
                    let src = &x[i * blk + sigma * s..i * blk + (sigma + 1) * s];
                    let dst = &mut yc[sigma * s..(sigma + 1) * s];
                    for (xp, (d, v)) in dst.iter_mut().zip(src).enumerate() {
                        *d += profile[xp * slots + slot] * c * v;
                    }
                }
            }
            // a(G) from n + e_s: ⟨f| a |j⟩ = conj(u_s) √(n_s + 1)
            if let Some(j) = fock.raised(f, slot) {
                let c = r * (n + 1.0).sqrt();
                for sigma in 0..sd {
                    let src = &x[j * blk + sigma * s..j * blk + (sigma + 1) * s];
                    let dst = &mut yc[sigma * s..(sigma + 1) * s];
                    for (xp, (d, v)) in dst.iter_mut().zip(src).enumerate() {
                        *d += profile[xp * slots + slot].conj() * c * v;
                    }
                }
            }
        }
    });
}

impl LinearOperator for CompositeOperator {
    fn dim(&self) -> usize {
        self.space.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.apply_into(x, y, false)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply_into(x, y, true)
    }
}

impl Add for &CompositeOperator {
    type Output = CompositeOperator;
    fn add(self, rhs: &CompositeOperator) -> CompositeOperator {
        CompositeOperator::sum(&self.space, vec![(ONE, self.clone()), (ONE, rhs.clone())])
    }
}

impl Sub for &CompositeOperator {
    type Output = CompositeOperator;
    fn sub(self, rhs: &CompositeOperator) -> CompositeOperator {
        CompositeOperator::sum(&self.space, vec![(ONE, self.clone()), (-ONE, rhs.clone())])
    }
}

impl Sub for CompositeOperator {
    type Output = CompositeOperator;
    fn sub(self, rhs: CompositeOperator) -> CompositeOperator {
        &self - &rhs
    }
}

impl Add for CompositeOperator {
    type Output = CompositeOperator;
    fn add(self, rhs: CompositeOperator) -> CompositeOperator {
        &self + &rhs
    }
}

impl Mul for &CompositeOperator {
    type Output = CompositeOperator;
    fn mul(self, rhs: &CompositeOperator) -> CompositeOperator {
        CompositeOperator::product(&self.space, vec![self.clone(), rhs.clone()])
    }
}

impl Mul for CompositeOperator {
    type Output = CompositeOperator;
    fn mul(self, rhs: CompositeOperator) -> CompositeOperator {
        &self * &rhs
    }
}

impl Mul<&CompositeOperator> for C64 {
    type Output = CompositeOperator;
    fn mul(self, rhs: &CompositeOperator) -> CompositeOperator {
        rhs.scaled(self)
    }
}

impl Mul<CompositeOperator> for f64 {
    type Output = CompositeOperator;
    fn mul(self, rhs: CompositeOperator) -> CompositeOperator {
        rhs.scaled(C64::new(self, 0.0))
    }
}

impl Neg for &CompositeOperator {
    type Output = CompositeOperator;
    fn neg(self) -> CompositeOperator {
        self.scaled(-ONE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, FockBasis};
    use crate::linalg::dense;
    use crate::one_particle::{FrameAxes, ModeGrid, OneParticleVector};

    fn space(spin: bool) -> Arc<CompositeSpace> {
        let modes = Arc::new(
            ModeGrid::new(
                vec![[1.0, 0.5, 0.0], [-0.5, 1.0, 0.2]],
                vec![0.3, 0.7],
                2,
                0.0,
                FrameAxes::default(),
            )
            .unwrap(),
        );
        let basis = Arc::new(FockBasis::new(4, 2, 1000).unwrap());
        CompositeSpace::new(2, 1, 4, 3.0, spin, modes, basis, 1 << 20).unwrap()
    }

    fn random_profile(sp: &CompositeSpace, seed: u64) -> Arc<Vec<C64>> {
        let mut r = rng::stream(seed, "profile");
        Arc::new(rng::complex_gaussian(&mut r, sp.spatial_size() * sp.fock.slots()))
    }

    #[test]
    fn field_blocks_match_fock_field() {
        let sp = space(true);
        let profile = random_profile(&sp, 1);
        let phi = CompositeOperator::field(&sp, profile.clone());
        let m = dense::materialize(&phi, 4096).unwrap();
        let slots = sp.fock.slots();
        let unit = ModeGrid::new(
            (0..slots).map(|i| [0.0, 0.0, 1.0 + i as f64]).collect(),
            vec![1.0; slots],
            1,
            0.0,
            FrameAxes::default(),
        )
        .unwrap();
        for x in 0..sp.spatial_size() {
            let h = OneParticleVector::new(profile[x * slots..(x + 1) * slots].to_vec());
            let block = fock::field(&sp.fock, &unit, &h).unwrap();
            for sigma in 0..sp.spin_dim() {
                for f in 0..sp.fock.dim() {
                    for g in 0..sp.fock.dim() {
                        let a = m[(sp.index(x, sigma, f), sp.index(x, sigma, g))];
                        assert!((a - block.matrix().get(f, g)).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn leaves_are_consistent_with_their_adjoints() {
        let sp = space(true);
        let ops = vec![
            CompositeOperator::field(&sp, random_profile(&sp, 2)),
            CompositeOperator::pauli(&sp, 0, 1),
            CompositeOperator::pauli(&sp, 1, 0),
            CompositeOperator::pauli(&sp, 1, 2),
            CompositeOperator::fourier(&sp, FourierMultiplier::momentum(&sp.grid, 1)),
            CompositeOperator::spatial(&sp, (0..sp.spatial_size()).map(|i| C64::new(i as f64, 1.0)).collect()),
        ];
        for op in &ops {
            assert!(op.adjoint_residual(3, 4) < 1e-13);
            if op.hermitian {
                assert!(op.hermiticity_residual(4, 4) < 1e-13);
            }
        }
        let prod = &ops[0] * &ops[5];
        assert!(prod.adjoint_residual(5, 4) < 1e-13);
        let adj = prod.adjoint();
        let x = rng::complex_gaussian(&mut rng::stream(6, "x"), sp.dim());
        let a = adj.apply_vec(&x);
        let b = prod.apply_adjoint_vec(&x);
        assert!(crate::linalg::norm(&crate::linalg::sub(&a, &b)) < 1e-12);
    }

    #[test]
    fn pauli_algebra() {
        let sp = space(true);
        let x = rng::complex_gaussian(&mut rng::stream(7, "x"), sp.dim());
        for j in 0..2 {
            let s: Vec<_> = (0..3).map(|a| CompositeOperator::pauli(&sp, j, a)).collect();
            // σ_x σ_y = i σ_z
            let lhs = (&s[0] * &s[1]).apply_vec(&x);
            let rhs = s[2].scaled(C64::i()).apply_vec(&x);
            assert!(crate::linalg::norm(&crate::linalg::sub(&lhs, &rhs)) < 1e-13);
            for a in 0..3 {
                let sq = (&s[a] * &s[a]).apply_vec(&x);
                assert!(crate::linalg::norm(&crate::linalg::sub(&sq, &x)) < 1e-13);
            }
        }
        // different particles commute
        let c = CompositeOperator::pauli(&sp, 0, 0).commutator(&CompositeOperator::pauli(&sp, 1, 1));
        assert!(crate::linalg::norm(&c.apply_vec(&x)) < 1e-13);
    }
}
