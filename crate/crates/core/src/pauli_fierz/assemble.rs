//! Assembly of `T_A`, the Pauli-Fierz Hamiltonian and the operators of the
//! resolvent commutator identity.

use std::sync::Arc;

use super::coupling;
use super::operator::{CompositeOperator, Node};
use super::space::CompositeSpace;
use crate::error::{Error, Result};
use crate::linalg::{C64, I, ONE};
use crate::particle::FourierMultiplier;

/// Folded coupling profiles scaled by `e`.
pub fn scale_profiles(profiles: &[Arc<Vec<C64>>], e: f64) -> Vec<Arc<Vec<C64>>> {
    profiles
        .iter()
        .map(|p| Arc::new(p.iter().map(|v| v * e).collect()))
        .collect()
}

/// Field energy `H_f` on the composite space.
pub fn field_energy(space: &Arc<CompositeSpace>) -> CompositeOperator {
    let values = space.fock.diagonal_values(&space.modes.slot_omegas());
    CompositeOperator::fock_diagonal(space, values)
}

/// Real function of the field energy, `g(H_f)`, applied entrywise.
pub fn field_energy_function(space: &Arc<CompositeSpace>, g: impl Fn(f64) -> f64) -> CompositeOperator {
    let values = space
        .fock
        .diagonal_values(&space.modes.slot_omegas())
        .into_iter()
        .map(g)
        .collect();
    CompositeOperator::fock_diagonal(space, values)
}

/// Projection onto total quanta `≤ m`.
pub fn fock_sector(space: &Arc<CompositeSpace>, m: usize) -> CompositeOperator {
    CompositeOperator::fock_diagonal(space, space.fock.sector_mask(m))
}

/// Projection onto spatial Fourier modes inside the band for the given
/// per-axis margins.
pub fn spatial_band(space: &Arc<CompositeSpace>, margins: &[i64]) -> CompositeOperator {
    let symbol = space.grid.band_symbol(margins);
    CompositeOperator::fourier(
        space,
        FourierMultiplier::new(&space.grid, symbol, (0..space.grid.axes()).collect()),
    )
}

pub fn momentum(space: &Arc<CompositeSpace>, axis: usize) -> CompositeOperator {
    CompositeOperator::fourier(space, FourierMultiplier::momentum(&space.grid, axis))
}

/// `p² + H_f`.
pub fn free_operator(space: &Arc<CompositeSpace>) -> CompositeOperator {
    let lap = CompositeOperator::fourier(space, FourierMultiplier::laplacian(&space.grid));
    &lap + &field_energy(space)
}

/// The operators built around `T_A = Σ_a (p_a + A_a)² + H_f`.
#[derive(Debug, Clone)]
pub struct TaOperators {
    pub momenta: Vec<CompositeOperator>,
    /// `A_a = Φ(G_a)`.
    pub fields: Vec<CompositeOperator>,
    /// `p_a + A_a`.
    pub shifted: Vec<CompositeOperator>,
    pub field_energy: CompositeOperator,
    pub field_energy_sqrt: CompositeOperator,
    /// Operator of the form `q`: `Σ X_a† X_a + (H_f^{1/2})† H_f^{1/2}`,
    /// applied through the adjoint code paths.
    pub ta: CompositeOperator,
    /// `Σ (p_a + A_a)∘(p_a + A_a) + H_f`.
    pub explicit: CompositeOperator,
    /// `p² + Σ (p_a A_a + A_a p_a) + Σ A_a² + H_f`.
    pub expansion: CompositeOperator,
    /// `p² + H_f`.
    pub free: CompositeOperator,
}

/// Assembles `T_A` for couplings `e · G_a`, one profile per grid axis.
pub fn assemble_ta(
    space: &Arc<CompositeSpace>,
    profiles: &[Arc<Vec<C64>>],
    e: f64,
) -> Result<TaOperators> {
    let axes = space.grid.axes();
    if profiles.len() != axes {
        return Err(Error::DimensionMismatch {
            expected: axes,
            found: profiles.len(),
        });
    }
    coupling::check_band_limit(space)?;
    let scaled = scale_profiles(profiles, e);
    let momenta: Vec<_> = (0..axes).map(|a| momentum(space, a)).collect();
    let fields: Vec<_> = scaled
        .iter()
        .map(|p| CompositeOperator::field(space, p.clone()))
        .collect();
    let shifted: Vec<_> = momenta.iter().zip(&fields).map(|(p, a)| p + a).collect();
    let hf = field_energy(space);
    let hf_sqrt = field_energy_function(space, f64::sqrt);

    let explicit_adjoint = |op: &CompositeOperator| CompositeOperator::new(space, Node::Adjoint(op.clone()), false);
    let mut form_terms: Vec<(C64, CompositeOperator)> = shifted
        .iter()
        .map(|x| (ONE, &explicit_adjoint(x) * x))
        .collect();
    form_terms.push((ONE, &explicit_adjoint(&hf_sqrt) * &hf_sqrt));
    let ta = CompositeOperator::sum(space, form_terms).tagged_hermitian();

    let mut explicit_terms: Vec<(C64, CompositeOperator)> =
        shifted.iter().map(|x| (ONE, x * x)).collect();
    explicit_terms.push((ONE, hf.clone()));
    let explicit = CompositeOperator::sum(space, explicit_terms).tagged_hermitian();

    let lap = CompositeOperator::fourier(space, FourierMultiplier::laplacian(&space.grid));
    let mut expansion_terms = vec![(ONE, lap), (ONE, hf.clone())];
    for (p, a) in momenta.iter().zip(&fields) {
        expansion_terms.push((ONE, p * a));
        expansion_terms.push((ONE, a * p));
        expansion_terms.push((ONE, a * a));
    }
    let expansion = CompositeOperator::sum(space, expansion_terms).tagged_hermitian();

    Ok(TaOperators {
        momenta,
        fields,
        shifted,
        field_energy: hf,
        field_energy_sqrt: hf_sqrt,
        ta,
        explicit,
        expansion,
        free: free_operator(space),
    })
}

/// Physical parameters of the Pauli-Fierz operator.
#[derive(Debug, Clone)]
pub struct PauliFierzParams {
    pub masses: Vec<f64>,
    pub charges: Vec<f64>,
}

/// `Σ_j 1/(2m_j) Σ_c (p_{j,c} − e_j A_{j,c})² + H_f + Σ_j e_j/(2m_j) σ_j·B_j + V_c`.
///
/// `vector` holds one profile per grid axis, `magnetic` three per particle
/// (`B_{j,a} = Φ(E_{j,a})`); the spin term is added only when the space
/// carries spin and magnetic profiles are given.
pub fn assemble_pauli_fierz(
    space: &Arc<CompositeSpace>,
    vector: &[Arc<Vec<C64>>],
    magnetic: Option<&[[Arc<Vec<C64>>; 3]]>,
    potential: Option<&[f64]>,
    params: &PauliFierzParams,
) -> Result<CompositeOperator> {
    let n = space.particles;
    let s = space.particle_dim;
    if params.masses.len() != n || params.charges.len() != n {
        return Err(Error::param("masses/charges", format!("need one entry per particle ({n})")));
    }
    if let Some(j) = params.masses.iter().position(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::param("masses", format!("mass of particle {j} must be positive")));
    }
    if vector.len() != space.grid.axes() {
        return Err(Error::DimensionMismatch {
            expected: space.grid.axes(),
            found: vector.len(),
        });
    }
    coupling::check_band_limit(space)?;
    let mut terms: Vec<(C64, CompositeOperator)> = Vec::new();
    for j in 0..n {
        let m = params.masses[j];
        let e = params.charges[j];
        for c in 0..s {
            let a = j * s + c;
            let field = CompositeOperator::field(space, vector[a].clone());
            let y = &momentum(space, a) - &field.scaled(C64::new(e, 0.0));
            terms.push((C64::new(0.5 / m, 0.0), (&y * &y).tagged_hermitian()));
        }
    }
    terms.push((ONE, field_energy(space)));
    if let (true, Some(mag)) = (space.spin, magnetic) {
        if mag.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: mag.len(),
            });
        }
        for j in 0..n {
            let coef = params.charges[j] / (2.0 * params.masses[j]);
            for a in 0..3 {
                let b = CompositeOperator::field(space, mag[j][a].clone());
                // σ and B act on different factors and commute
                let sb = (&CompositeOperator::pauli(space, j, a) * &b).tagged_hermitian();
                terms.push((C64::new(coef, 0.0), sb));
            }
        }
    }
    if let Some(v) = potential {
        if v.len() != space.spatial_size() {
            return Err(Error::DimensionMismatch {
                expected: space.spatial_size(),
                found: v.len(),
            });
        }
        terms.push((ONE, CompositeOperator::spatial_real(space, v)));
    }
    Ok(CompositeOperator::sum(space, terms).tagged_hermitian())
}

/// `R_α = (α H_f + 1)^{-1}`.
pub fn resolvent_family(space: &Arc<CompositeSpace>, alpha: f64) -> Result<CompositeOperator> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "must be positive"));
    }
    Ok(field_energy_function(space, |e| 1.0 / (alpha * e + 1.0)))
}

/// Sign of the `α R_α² (ωG_j, G_j)` term in the double commutator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadraticTermSign {
    /// `+α R² (ωG, G)`, which follows from `[Π_j, A_j] = −i(ωG_j, G_j)`.
    Derived,
    /// `−α R² (ωG, G)`.
    Negated,
}

/// Operators of the resolvent commutator identity at one `α`.
#[derive(Debug, Clone)]
pub struct Step1Operators {
    pub alpha: f64,
    pub resolvent: CompositeOperator,
    /// `A_j`.
    pub fields: Vec<CompositeOperator>,
    /// `Π_j = Φ(iωG_j)`.
    pub pi: Vec<CompositeOperator>,
    /// `p_j + A_j`.
    pub shifted: Vec<CompositeOperator>,
    /// `E_{α,j} = −iα R Π_j R`.
    pub e_ops: Vec<CompositeOperator>,
    /// `(ωG_j, G_j)_𝔥` as multiplication operators.
    pub omega_inner: Vec<CompositeOperator>,
    /// `Φ(Σ_j ∂_j G_j)`.
    pub divergence_field: CompositeOperator,
}

pub fn step1_commutator_operators(
    space: &Arc<CompositeSpace>,
    profiles: &[Arc<Vec<C64>>],
    e: f64,
    alpha: f64,
) -> Result<Step1Operators> {
    let axes = space.grid.axes();
    if profiles.len() != axes {
        return Err(Error::DimensionMismatch {
            expected: axes,
            found: profiles.len(),
        });
    }
    coupling::check_band_limit(space)?;
    let r = resolvent_family(space, alpha)?;
    let scaled = scale_profiles(profiles, e);
    let s = space.particle_dim;
    let mut fields = Vec::new();
    let mut pi = Vec::new();
    let mut shifted = Vec::new();
    let mut e_ops = Vec::new();
    let mut omega_inner = Vec::new();
    let mut divergence = vec![C64::new(0.0, 0.0); scaled[0].len()];
    for (a, prof) in scaled.iter().enumerate() {
        let field = CompositeOperator::field(space, prof.clone());
        let pi_prof = coupling::i_omega(space, prof);
        let p = CompositeOperator::field(space, pi_prof);
        let e_op = CompositeOperator::product(space, vec![r.clone(), p.clone(), r.clone()])
            .scaled(-I * alpha);
        let omega_prof = coupling::scale_slots(
            space,
            prof,
            &space.modes.slot_omegas().iter().map(|w| C64::new(*w, 0.0)).collect::<Vec<_>>(),
        );
        let inner = coupling::pointwise_inner(space, &omega_prof, prof);
        omega_inner.push(CompositeOperator::spatial(space, inner));
        let d = coupling::derivative(space, prof, a / s, a);
        for (acc, v) in divergence.iter_mut().zip(d.iter()) {
            *acc += v;
        }
        shifted.push(&momentum(space, a) + &field);
        fields.push(field);
        pi.push(p);
        e_ops.push(e_op);
    }
    Ok(Step1Operators {
        alpha,
        resolvent: r,
        fields,
        pi,
        shifted,
        e_ops,
        omega_inner,
        divergence_field: CompositeOperator::field(space, Arc::new(divergence)),
    })
}

impl Step1Operators {
    /// Closed form of `[[R_α, A_j], A_j]`:
    /// `−2α² R (Π_j R)² ± α R² (ωG_j, G_j)`.
    pub fn double_commutator_formula(&self, j: usize, sign: QuadraticTermSign) -> CompositeOperator {
        let sp = &self.resolvent.space;
        let r = &self.resolvent;
        let a = self.alpha;
        let first = CompositeOperator::product(
            sp,
            vec![r.clone(), self.pi[j].clone(), r.clone(), self.pi[j].clone(), r.clone()],
        );
        let second = CompositeOperator::product(sp, vec![r.clone(), r.clone(), self.omega_inner[j].clone()]);
        let sgn = match sign {
            QuadraticTermSign::Derived => 1.0,
            QuadraticTermSign::Negated => -1.0,
        };
        CompositeOperator::sum(
            sp,
            vec![
                (C64::new(-2.0 * a * a, 0.0), first),
                (C64::new(sgn * a, 0.0), second),
            ],
        )
    }

    /// `F_α = Σ_j (−2α² R (Π_j R)² ± α R² (ωG_j, G_j)) + i[R_α, Φ(Σ_j ∂_j G_j)]`.
    pub fn f_alpha(&self, sign: QuadraticTermSign) -> CompositeOperator {
        let sp = &self.resolvent.space;
        let mut terms: Vec<(C64, CompositeOperator)> = (0..self.pi.len())
            .map(|j| (ONE, self.double_commutator_formula(j, sign)))
            .collect();
        terms.push((I, self.resolvent.commutator(&self.divergence_field)));
        CompositeOperator::sum(sp, terms).tagged_hermitian()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockBasis;
    use crate::linalg::{dense, norm, sub, LinearOperator};
    use crate::one_particle::{FormFactor, FrameAxes, ModeGrid};
    use crate::rng;
    use std::f64::consts::PI;

    fn desk_space(spin: bool) -> (Arc<CompositeSpace>, Vec<Arc<Vec<C64>>>) {
        let kappa = 2.0 * PI / 10.0;
        let modes = Arc::new(
            ModeGrid::new(
                vec![[kappa, kappa, 0.0], [-kappa, kappa, 0.0]],
                vec![kappa.powi(3); 2],
                2,
                0.0,
                FrameAxes::default(),
            )
            .unwrap(),
        );
        let fock = Arc::new(FockBasis::new(4, 3, 10_000).unwrap());
        let sp = CompositeSpace::new(1, 1, 16, 10.0, spin, modes.clone(), fock, 1 << 22).unwrap();
        let ff = FormFactor::Indicator { cutoff: 10.0 }.on_grid(&modes);
        let fams = coupling::vector_potential_families(&sp, &ff).unwrap();
        let profiles = fams.iter().map(|f| coupling::sample(&sp, f).unwrap()).collect();
        (sp, profiles)
    }

    #[test]
    fn ta_routes_agree() {
        let (sp, prof) = desk_space(false);
        let t = assemble_ta(&sp, &prof, 1.0).unwrap();
        let x = rng::complex_gaussian(&mut rng::stream(1, "x"), sp.dim());
        let a = t.ta.apply_vec(&x);
        let b = t.explicit.apply_vec(&x);
        let c = t.expansion.apply_vec(&x);
        assert!(norm(&sub(&a, &b)) < 1e-12 * norm(&a));
        assert!(norm(&sub(&a, &c)) < 1e-12 * norm(&a));
    }

    #[test]
    fn free_spectrum_is_sums() {
        let (sp, prof) = desk_space(false);
        let t = assemble_ta(&sp, &prof, 0.0).unwrap();
        let m = dense::materialize(&t.ta, 4096).unwrap();
        let eig = dense::hermitian_eigenvalues(&m);
        let lap = sp.grid.laplacian_symbol();
        let hf = sp.fock.diagonal_values(&sp.modes.slot_omegas());
        let mut expected: Vec<f64> = hf.iter().flat_map(|e| lap.iter().map(move |k| k + e)).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn resolvent_entries() {
        let (sp, _) = desk_space(false);
        assert!(resolvent_family(&sp, 0.0).is_err());
        let r = resolvent_family(&sp, 1e-12).unwrap();
        let x = rng::complex_gaussian(&mut rng::stream(2, "x"), sp.dim());
        assert!(norm(&sub(&r.apply_vec(&x), &x)) < 1e-10 * norm(&x));
    }

    #[test]
    fn free_pauli_fierz_ground_energy_is_zero() {
        let (sp, prof) = desk_space(true);
        let h = assemble_pauli_fierz(
            &sp,
            &prof,
            None,
            None,
            &PauliFierzParams {
                masses: vec![1.0],
                charges: vec![0.0],
            },
        )
        .unwrap();
        let m = dense::materialize(&h, 4096).unwrap();
        assert!(dense::hermitian_eigenvalues(&m)[0].abs() < 1e-12);
        let bad = assemble_pauli_fierz(
            &sp,
            &prof,
            None,
            None,
            &PauliFierzParams {
                masses: vec![0.0],
                charges: vec![0.0],
            },
        );
        assert!(bad.is_err());
    }
}
