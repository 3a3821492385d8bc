//! Thick-restart Lanczos for extremal eigenpairs of Hermitian operators.
//!
//! The Krylov basis is kept fully orthogonal (classical Gram-Schmidt applied
//! twice) and the projected matrix is formed explicitly from stored images,
//! so the Rayleigh-Ritz step never relies on the three-term recurrence. On a
//! restart the wanted Ritz vectors are kept together with the residual of the
//! leading unconverged one; that residual is parallel to the next Lanczos
//! vector, so the search space stays a Krylov space.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{axpy, combine, dot, norm, normalize, LinearOperator, C64, ZERO};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremal {
    Lowest,
    Highest,
}

#[derive(Debug, Clone)]
pub struct KrylovOptions {
    pub max_basis: usize,
    pub max_matvecs: usize,
    /// Convergence: `‖A y − θ y‖ ≤ tol · scale + abs_tol`, where `scale` is
    /// the largest Ritz magnitude seen.
    pub tol: f64,
    pub abs_tol: f64,
    pub check_every: usize,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            max_basis: 64,
            max_matvecs: 20_000,
            tol: 1e-12,
            abs_tol: 1e-300,
            check_every: 4,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub pairs: Vec<RitzPair>,
    pub matvecs: usize,
    pub converged: bool,
    /// Largest Ritz magnitude, the scale used by the stopping rule.
    pub scale: f64,
}

impl EigenResult {
    pub fn value(&self) -> f64 {
        self.pairs[0].value
    }
    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, w);
            if c != ZERO {
                axpy(-c, b, w);
            }
        }
    }
}

struct Ritz {
    values: Vec<f64>,
    coeffs: Vec<Vec<C64>>,
}

fn rayleigh_ritz(h: &[Vec<C64>], which: Extremal) -> Ritz {
    let m = h.len();
    let mat = DMatrix::from_fn(m, m, |i, j| (h[i][j] + h[j][i].conj()) * 0.5);
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        match which {
            Extremal::Lowest => va.total_cmp(&vb),
            Extremal::Highest => vb.total_cmp(&va),
        }
    });
    Ritz {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        coeffs: order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
    }
}

/// `k` extremal eigenpairs of the Hermitian operator `op`.
///
/// Returns the best available pairs with `converged = false` when the matvec
/// budget runs out; callers decide whether that is an error.
pub fn extremal_eigenpairs(
    op: &dyn LinearOperator,
    k: usize,
    which: Extremal,
    start: Option<&[C64]>,
    opts: &KrylovOptions,
) -> Result<EigenResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::param(
            "k",
            format!("requested {k} eigenpairs of a {n}-dimensional operator"),
        ));
    }
    let m = opts.max_basis.max(k + 8).min(n);
    let mut restart_rng = rng::stream(opts.seed, "krylov-restart");

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut images: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut h: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut matvecs = 0usize;
    let mut scale = 0.0f64;

    let mut next: Option<Vec<C64>> = Some(match start {
        Some(s) if norm(s) > 0.0 => s.to_vec(),
        _ => rng::complex_gaussian(&mut rng::stream(opts.seed, "krylov-start"), n),
    });

    loop {
        // expand
        let mut exhausted = false;
        while basis.len() < m {
            let mut w = match next.take() {
                Some(v) => v,
                None => images.last().cloned().unwrap_or_else(|| vec![ZERO; n]),
            };
            let before = norm(&w);
            orthogonalize(&mut w, &basis);
            let mut after = norm(&w);
            if !(after > 1e-10 * before) || after == 0.0 {
                // invariant subspace reached; continue with a fresh direction
                if basis.len() >= n {
                    exhausted = true;
                    break;
                }
                w = rng::complex_gaussian(&mut restart_rng, n);
                orthogonalize(&mut w, &basis);
                after = norm(&w);
                if after == 0.0 {
                    exhausted = true;
                    break;
                }
            }
            let _ = after;
            normalize(&mut w);
            let aw = op.apply_vec(&w);
            matvecs += 1;
            let mut col: Vec<C64> = basis.iter().map(|b| dot(b, &aw)).collect();
            col.push(dot(&w, &aw));
            for (i, row) in h.iter_mut().enumerate() {
                row.push(col[i]);
            }
            h.push(col.iter().map(|c| c.conj()).collect());
            let last = h.len() - 1;
            h[last][last] = col[last];
            basis.push(w);
            images.push(aw);

            let len = basis.len();
            if len >= k && (len % opts.check_every.max(1) == 0 || len == m) {
                if let Some(done) = try_finish(&basis, &images, &h, k, which, opts, &mut scale, matvecs)
                {
                    return Ok(done);
                }
            }
            if matvecs >= opts.max_matvecs {
                break;
            }
        }

        let ritz = rayleigh_ritz(&h, which);
        let pairs = ritz_pairs(&basis, &images, &ritz, k.min(basis.len()), n);
        scale = scale.max(ritz.values.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        let threshold = opts.tol * scale + opts.abs_tol;
        let converged = pairs.iter().all(|p| p.residual <= threshold);
        if converged || exhausted || basis.len() >= n || matvecs >= opts.max_matvecs {
            let converged = converged || exhausted || basis.len() >= n;
            return Ok(EigenResult {
                pairs,
                matvecs,
                converged,
                scale,
            });
        }

        // thick restart
        let keep = (k + 4).min(m / 2).max(k).min(ritz.values.len());
        let mut new_basis = Vec::with_capacity(m);
        let mut new_images = Vec::with_capacity(m);
        for coeffs in ritz.coeffs.iter().take(keep) {
            new_basis.push(combine(coeffs, &basis, n));
            new_images.push(combine(coeffs, &images, n));
        }
        let lead = pairs
            .iter()
            .position(|p| p.residual > threshold)
            .unwrap_or(0);
        let mut resid = new_images[lead].clone();
        axpy(C64::new(-ritz.values[lead], 0.0), &new_basis[lead], &mut resid);
        basis = new_basis;
        images = new_images;
        h = (0..basis.len())
            .map(|i| (0..basis.len()).map(|j| dot(&basis[i], &images[j])).collect())
            .collect();
        next = Some(resid);
    }
}

#[allow(clippy::too_many_arguments)]
fn try_finish(
    basis: &[Vec<C64>],
    images: &[Vec<C64>],
    h: &[Vec<C64>],
    k: usize,
    which: Extremal,
    opts: &KrylovOptions,
    scale: &mut f64,
    matvecs: usize,
) -> Option<EigenResult> {
    let ritz = rayleigh_ritz(h, which);
    *scale = scale.max(ritz.values.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let n = basis[0].len();
    let pairs = ritz_pairs(basis, images, &ritz, k, n);
    let threshold = opts.tol * *scale + opts.abs_tol;
    if pairs.iter().all(|p| p.residual <= threshold) {
        Some(EigenResult {
            pairs,
            matvecs,
            converged: true,
            scale: *scale,
        })
    } else {
        None
    }
}

fn ritz_pairs(
    basis: &[Vec<C64>],
    images: &[Vec<C64>],
    ritz: &Ritz,
    k: usize,
    n: usize,
) -> Vec<RitzPair> {
    (0..k)
        .map(|i| {
            let mut vector = combine(&ritz.coeffs[i], basis, n);
            let image = combine(&ritz.coeffs[i], images, n);
            let nv = normalize(&mut vector);
            let theta = ritz.values[i];
            let mut r = image;
            if nv > 0.0 {
                super::scale(C64::new(1.0 / nv, 0.0), &mut r);
            }
            axpy(C64::new(-theta, 0.0), &vector, &mut r);
            RitzPair {
                value: theta,
                residual: norm(&r),
                vector,
            }
        })
        .collect()
}

/// Largest singular value of `op` with a deterministic start.
#[derive(Debug, Clone)]
pub struct NormEstimate {
    pub value: f64,
    /// `[σ_lo, σ_hi]` from the Ritz value and its residual bound on `A†A`.
    pub interval: (f64, f64),
    pub matvecs: usize,
    pub converged: bool,
    pub certificate: Vec<C64>,
}

pub fn operator_norm(op: &dyn LinearOperator, opts: &KrylovOptions) -> Result<NormEstimate> {
    let normal = super::Normal(op);
    let res = extremal_eigenpairs(&normal, 1, Extremal::Highest, None, opts)?;
    let pair = &res.pairs[0];
    let theta = pair.value.max(0.0);
    let value = theta.sqrt();
    let upper = (theta + pair.residual).sqrt();
    let lower = (theta - pair.residual).max(0.0).sqrt().min(value);
    if !res.converged {
        return Err(Error::NoConvergence {
            iterations: res.matvecs,
            residual: pair.residual,
            lower,
            upper,
        });
    }
    Ok(NormEstimate {
        value,
        interval: (value, upper),
        matvecs: res.matvecs,
        converged: res.converged,
        certificate: pair.vector.clone(),
    })
}
