//! Matrix-free linear algebra: the operator trait shared by Fock and
//! composite operators, deterministic vector kernels, Krylov eigensolvers and
//! dense oracles.

pub mod dense;
pub mod krylov;
pub mod pencil;

use num_complex::Complex64;

use crate::par;

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A linear map on `C^dim` that can be applied forwards and adjointly.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// `y = A† x`; `y` is overwritten.
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]);

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply(x, &mut y);
        y
    }

    fn apply_adjoint_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply_adjoint(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply(x, y)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply_adjoint(x, y)
    }
}

/// `⟨a, b⟩`, conjugate-linear in `a`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    par::ordered_sum(a.len(), |r| {
        a[r.clone()]
            .iter()
            .zip(&b[r])
            .fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
    })
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    par::ordered_sum(a.len(), |r| {
        C64::new(a[r].iter().map(|x| x.norm_sqr()).sum::<f64>(), 0.0)
    })
    .re
}

pub fn norm(a: &[C64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// `y += alpha x`.
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    let chunk = par::REDUCE_BLOCK;
    par::for_each_chunk(y, chunk, |b, yc| {
        let xs = &x[b * chunk..b * chunk + yc.len()];
        for (yi, xi) in yc.iter_mut().zip(xs) {
            *yi += alpha * xi;
        }
    });
}

pub fn scale(alpha: C64, y: &mut [C64]) {
    par::for_each_chunk(y, par::REDUCE_BLOCK, |_, yc| {
        for v in yc {
            *v *= alpha;
        }
    });
}

/// Normalises in place and returns the previous norm.
pub fn normalize(y: &mut [C64]) -> f64 {
    let n = norm(y);
    if n > 0.0 {
        scale(C64::new(1.0 / n, 0.0), y);
    }
    n
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `Σ c_i v_i` for equally long vectors.
pub fn combine(coeffs: &[C64], vectors: &[Vec<C64>], len: usize) -> Vec<C64> {
    let mut out = vec![ZERO; len];
    let chunk = par::REDUCE_BLOCK;
    par::for_each_chunk(&mut out, chunk, |b, oc| {
        let start = b * chunk;
        let len = oc.len();
        for (c, v) in coeffs.iter().zip(vectors) {
            if *c == ZERO {
                continue;
            }
            for (o, vi) in oc.iter_mut().zip(&v[start..start + len]) {
                *o += c * vi;
            }
        }
    });
    out
}

/// `A - shift·B` for two operators of equal dimension.
pub struct Shifted<'a> {
    pub a: &'a dyn LinearOperator,
    pub b: Option<&'a dyn LinearOperator>,
    pub shift: f64,
}

impl LinearOperator for Shifted<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.a.apply(x, y);
        if self.shift != 0.0 {
            match self.b {
                Some(b) => {
                    let bx = b.apply_vec(x);
                    axpy(C64::new(-self.shift, 0.0), &bx, y);
                }
                None => axpy(C64::new(-self.shift, 0.0), x, y),
            }
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.a.apply_adjoint(x, y);
        if self.shift != 0.0 {
            match self.b {
                Some(b) => {
                    let bx = b.apply_adjoint_vec(x);
                    axpy(C64::new(-self.shift, 0.0), &bx, y);
                }
                None => axpy(C64::new(-self.shift, 0.0), x, y),
            }
        }
    }
}

/// `A† A`, used for singular values.
pub struct Normal<'a>(pub &'a dyn LinearOperator);

impl LinearOperator for Normal<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let ax = self.0.apply_vec(x);
        self.0.apply_adjoint(&ax, y);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply(x, y)
    }
}

/// `B A`: apply `A` then `B`.
pub struct Chain<'a>(pub &'a dyn LinearOperator, pub &'a dyn LinearOperator);

impl LinearOperator for Chain<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let ax = self.1.apply_vec(x);
        self.0.apply(&ax, y);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let bx = self.0.apply_adjoint_vec(x);
        self.1.apply_adjoint(&bx, y);
    }
}

/// Real diagonal operator.
pub struct Diagonal(pub Vec<f64>);

impl LinearOperator for Diagonal {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = xi * d;
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply(x, y)
    }
}

/// Conjugation `D A D` by a real diagonal.
pub struct Congruence<'a> {
    pub inner: &'a dyn LinearOperator,
    pub diag: &'a [f64],
}

impl LinearOperator for Congruence<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let dx: Vec<C64> = x.iter().zip(self.diag).map(|(v, d)| v * d).collect();
        self.inner.apply(&dx, y);
        for (yi, d) in y.iter_mut().zip(self.diag) {
            *yi *= d;
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let dx: Vec<C64> = x.iter().zip(self.diag).map(|(v, d)| v * d).collect();
        self.inner.apply_adjoint(&dx, y);
        for (yi, d) in y.iter_mut().zip(self.diag) {
            *yi *= d;
        }
    }
}
