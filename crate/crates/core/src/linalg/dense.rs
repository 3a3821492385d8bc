//! Dense reference computations for small dimensions. These share nothing
//! with the Krylov code beyond the operator's own matvec.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen, SVD};

use super::{LinearOperator, C64, ZERO};
use crate::error::{Error, Result};

pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// Materialises `op` column by column.
pub fn materialize(op: &dyn LinearOperator, limit: usize) -> Result<DMatrix<C64>> {
    let n = op.dim();
    if n > limit {
        return Err(Error::DimensionBudget {
            dim: n,
            budget: limit,
        });
    }
    let cols: Vec<Vec<C64>> = crate::par::map_range(n, |j| {
        let mut e = vec![ZERO; n];
        e[j] = C64::new(1.0, 0.0);
        op.apply_vec(&e)
    });
    Ok(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
}

fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(hermitize(m));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn max_singular_value(m: &DMatrix<C64>) -> f64 {
    let svd = SVD::new(m.clone(), false, false);
    svd.singular_values.iter().copied().fold(0.0, f64::max)
}

pub fn frobenius(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn top_pair(m: &DMatrix<C64>) -> (f64, nalgebra::DVector<C64>) {
    let eig = SymmetricEigen::new(hermitize(m));
    let (i, v) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best });
    (v, eig.eigenvectors.column(i).into_owned())
}

/// Smallest `ρ ≥ 0` with `A − ρB ⪯ 0`, or `None` if none exists.
///
/// Uses a Cholesky reduction when `B` is well conditioned. Otherwise runs
/// the inverse-free Newton iteration `ρ ← ⟨y,Ay⟩/⟨y,By⟩` with `y` the top
/// eigenvector of `A − ρB` from a full dense eigendecomposition.
pub fn pencil_max(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Option<f64> {
    let a = hermitize(a);
    let b = hermitize(b);
    let b_eigs = hermitian_eigenvalues(&b);
    let b_max = b_eigs.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let b_min = b_eigs.first().copied().unwrap_or(0.0);
    if b_min > 1e-6 * b_max {
        if let Some(chol) = Cholesky::new(b.clone()) {
            let linv = chol.l().try_inverse()?;
            let reduced = &linv * &a * linv.adjoint();
            let top = *hermitian_eigenvalues(&reduced).last()?;
            return Some(top.max(0.0));
        }
    }
    let a_max = hermitian_eigenvalues(&a).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rho = 0.0f64;
    for _ in 0..200 {
        let (g, y) = top_pair(&(&a - &b * C64::new(rho, 0.0)));
        if g <= 1e-15 * (a_max + rho * b_max) {
            return Some(rho);
        }
        let ya = (y.adjoint() * &a * &y)[(0, 0)].re;
        let yb = (y.adjoint() * &b * &y)[(0, 0)].re;
        if yb <= 1e-14 * b_max {
            return None;
        }
        let next = ya / yb;
        if !next.is_finite() || next > 1e14 * (a_max / b_max).max(1.0) {
            return None;
        }
        if next - rho <= 1e-14 * next.abs() {
            return Some(next.max(rho));
        }
        rho = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::krylov::{extremal_eigenpairs, operator_norm, Extremal, KrylovOptions};
    use crate::linalg::pencil::{self, PencilOptions};
    use crate::linalg::LinearOperator;
    use crate::rng;

    struct DenseOp(DMatrix<C64>);

    impl LinearOperator for DenseOp {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            let v = &self.0 * nalgebra::DVector::from_column_slice(x);
            y.copy_from_slice(v.as_slice());
        }
        fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
            let v = self.0.adjoint() * nalgebra::DVector::from_column_slice(x);
            y.copy_from_slice(v.as_slice());
        }
    }

    fn random(n: usize, seed: u64) -> DMatrix<C64> {
        let v = rng::complex_gaussian(&mut rng::stream(seed, "dense"), n * n);
        DMatrix::from_vec(n, n, v)
    }

    #[test]
    fn identity_and_diagonal_norms() {
        let opts = KrylovOptions::default();
        let id = DenseOp(DMatrix::identity(5, 5));
        assert!((operator_norm(&id, &opts).unwrap().value - 1.0).abs() < 1e-12);
        let mut d = DMatrix::zeros(2, 2);
        d[(0, 0)] = C64::new(3.0, 0.0);
        d[(1, 1)] = C64::new(-4.0, 0.0);
        assert!((operator_norm(&DenseOp(d), &opts).unwrap().value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_norm_matches_svd() {
        let m = random(200, 1);
        let exact = max_singular_value(&m);
        let est = operator_norm(&DenseOp(m), &KrylovOptions::default()).unwrap();
        assert!((est.value - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn lanczos_extremes_match_dense() {
        let m = random(120, 2);
        let h = hermitize(&m);
        let eig = hermitian_eigenvalues(&h);
        let opts = KrylovOptions::default();
        let lo = extremal_eigenpairs(&DenseOp(h.clone()), 3, Extremal::Lowest, None, &opts).unwrap();
        let hi = extremal_eigenpairs(&DenseOp(h), 1, Extremal::Highest, None, &opts).unwrap();
        for i in 0..3 {
            assert!((lo.pairs[i].value - eig[i]).abs() < 1e-9);
        }
        assert!((hi.value() - eig[119]).abs() < 1e-9);
    }

    #[test]
    fn pencil_routes_agree() {
        let n = 60;
        let x = random(n, 3);
        let y = random(n, 4);
        let a = &x * x.adjoint();
        // rank-deficient B forces the Newton path in the dense oracle
        let mut yb = y.clone();
        yb.column_mut(0).fill(C64::new(0.0, 0.0));
        let b = &yb * yb.adjoint() + &a * C64::new(1e-3, 0.0);
        let dense_val = pencil_max(&a, &b).unwrap();
        let it = pencil::pencil_max(&DenseOp(a.clone()), &DenseOp(b.clone()), &PencilOptions::default())
            .unwrap()
            .value
            .unwrap();
        assert!((dense_val - it).abs() < 1e-8 * dense_val, "{dense_val} vs {it}");
        // infeasible: A positive on the kernel of B
        let b2 = &yb * yb.adjoint();
        assert_eq!(pencil_max(&a, &b2), None);
        let r = pencil::pencil_max(&DenseOp(a), &DenseOp(b2), &PencilOptions::default()).unwrap();
        assert_eq!(r.value, None);
    }
}
