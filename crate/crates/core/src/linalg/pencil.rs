//! Largest eigenvalue of a Hermitian pencil `(A, B)` with `B ⪰ 0`, without
//! inverting `B`.
//!
//! With `g(ρ) = λ_max(A − ρB)`, the smallest admissible `ρ ≥ 0` satisfying
//! `⟨x, A x⟩ ≤ ρ ⟨x, B x⟩` for every `x` is the root of `g`. The iteration
//! `ρ ← ⟨y, A y⟩ / ⟨y, B y⟩`, with `y` the top eigenvector of `A − ρB`, is a
//! Newton step on the convex, non-increasing `g`; it climbs monotonically to
//! the root. When `A` is positive on the kernel of `B` no finite `ρ` exists
//! and the iteration reports it as infeasible.

use super::krylov::{extremal_eigenpairs, Extremal, KrylovOptions};
use super::{dot, norm, LinearOperator, Shifted, C64};
use crate::rng;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PencilOptions {
    pub krylov: KrylovOptions,
    pub max_steps: usize,
    /// Stops once a Newton step changes `ρ` by at most `tol · ρ`.
    pub tol: f64,
}

impl Default for PencilOptions {
    fn default() -> Self {
        PencilOptions {
            krylov: KrylovOptions {
                tol: 1e-12,
                ..KrylovOptions::default()
            },
            max_steps: 100,
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PencilResult {
    /// `None` when no finite value exists.
    pub value: Option<f64>,
    pub steps: usize,
    pub matvecs: usize,
    /// Residual of the final inner eigenproblem.
    pub residual: f64,
    /// Top eigenvector at the final shift (the extremal direction).
    pub vector: Vec<C64>,
}

pub fn pencil_max(
    a: &dyn LinearOperator,
    b: &dyn LinearOperator,
    opts: &PencilOptions,
) -> Result<PencilResult> {
    let mut rho = 0.0f64;
    let mut matvecs = 0;
    let mut start: Option<Vec<C64>> = None;
    let mut noise = rng::stream(opts.krylov.seed, "pencil-start");
    let mut a_scale = 0.0f64;
    let mut b_scale = 0.0f64;
    let done = |value: Option<f64>, steps, matvecs, residual, vector: &[C64]| PencilResult {
        value,
        steps,
        matvecs,
        residual,
        vector: vector.to_vec(),
    };
    for step in 0..opts.max_steps {
        let shifted = Shifted {
            a,
            b: Some(b),
            shift: rho,
        };
        // residuals are measured against the scale of A and ρB, not of A − ρB
        let krylov = KrylovOptions {
            abs_tol: opts.krylov.abs_tol.max(opts.krylov.tol * (a_scale + rho * b_scale)),
            ..opts.krylov.clone()
        };
        let eig = extremal_eigenpairs(&shifted, 1, Extremal::Highest, start.as_deref(), &krylov)?;
        if !eig.converged {
            return Err(Error::NoConvergence {
                iterations: eig.matvecs,
                residual: eig.max_residual(),
                lower: rho,
                upper: f64::INFINITY,
            });
        }
        matvecs += eig.matvecs;
        let pair = &eig.pairs[0];
        let ay = a.apply_vec(&pair.vector);
        let by = b.apply_vec(&pair.vector);
        matvecs += 2;
        let ya = dot(&pair.vector, &ay).re;
        let yb = dot(&pair.vector, &by).re;
        a_scale = a_scale.max(ya.abs()).max(eig.scale);
        b_scale = b_scale.max(yb.abs());
        if pair.value <= 1e-15 * (a_scale + rho * b_scale) {
            // A − ρB ⪯ 0 already: ρ is the root (or 0 is admissible)
            return Ok(done(Some(rho), step, matvecs, pair.residual, &pair.vector));
        }
        if yb <= 1e-14 * b_scale.max(f64::MIN_POSITIVE) {
            return Ok(done(None, step, matvecs, pair.residual, &pair.vector));
        }
        let next = ya / yb;
        if !next.is_finite() || next > 1e14 * (a_scale / b_scale.max(f64::MIN_POSITIVE)).max(1.0) {
            return Ok(done(None, step, matvecs, pair.residual, &pair.vector));
        }
        if next - rho <= opts.tol * next.abs() {
            return Ok(done(Some(next.max(rho)), step, matvecs, pair.residual, &pair.vector));
        }
        rho = next;
        // a pure warm start sits on an eigenvector of the previous shift and
        // lets Lanczos settle on a non-top Ritz value
        let mut s = rng::complex_gaussian(&mut noise, a.dim());
        let scale = norm(&s);
        s.iter_mut().zip(&pair.vector).for_each(|(x, v)| *x = *v + *x / scale);
        start = Some(s);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_steps,
        residual: f64::NAN,
        lower: rho,
        upper: f64::INFINITY,
    })
}
