//! Independent reference computations for the Fock and Pauli-Fierz layers.

use std::collections::BTreeMap;

use pfcert::config::RunConfig;
use pfcert::fock::{self, FockBasis};
use pfcert::linalg::{dense, C64};
use pfcert::one_particle::{FrameAxes, ModeGrid, OneParticleVector};
use pfcert::verify;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Sequences of slot labels of length `n` over `d` slots, in lexicographic order.
fn sequences(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..d).map(move |x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// An n-quantum tensor stored as a map from slot sequence to amplitude.
type Tensor = BTreeMap<Vec<usize>, C64>;

fn symmetrize(t: &Tensor, n: usize) -> Tensor {
    let perms = permutations(n);
    let mut out = Tensor::new();
    for (seq, v) in t {
        for p in &perms {
            let s: Vec<usize> = p.iter().map(|&i| seq[i]).collect();
            *out.entry(s).or_insert(ZERO) += v / perms.len() as f64;
        }
    }
    out
}

/// Normalised symmetric tensor of the occupation `occ`.
fn occupation_tensor(d: usize, occ: &[u16]) -> Tensor {
    let n: usize = occ.iter().map(|&x| x as usize).sum();
    let matching: Vec<Vec<usize>> = sequences(d, n)
        .into_iter()
        .filter(|s| (0..d).all(|slot| s.iter().filter(|&&x| x == slot).count() == occ[slot] as usize))
        .collect();
    let amp = C64::new(1.0 / (matching.len() as f64).sqrt(), 0.0);
    matching.into_iter().map(|s| (s, amp)).collect()
}

/// `a*(h)ψ = √(n+1) S(h ⊗ ψ)` on an n-quantum tensor.
fn create(h: &[C64], psi: &Tensor, n: usize) -> Tensor {
    let mut t = Tensor::new();
    for (seq, v) in psi {
        for (s, hs) in h.iter().enumerate() {
            let mut full = vec![s];
            full.extend(seq);
            *t.entry(full).or_insert(ZERO) += hs * v;
        }
    }
    let mut out = symmetrize(&t, n + 1);
    for v in out.values_mut() {
        *v *= ((n + 1) as f64).sqrt();
    }
    out
}

fn inner(a: &Tensor, b: &Tensor) -> C64 {
    a.iter().filter_map(|(k, v)| b.get(k).map(|w| v.conj() * w)).sum()
}

#[test]
fn creation_matches_symmetric_tensor_construction() {
    let grid = ModeGrid::new(vec![[0.7, 0.2, -0.4]], vec![1.7], 2, 0.0, FrameAxes::default()).unwrap();
    let basis = FockBasis::new(2, 3, 1000).unwrap();
    let h = vec![C64::new(0.3, -1.1), C64::new(-0.8, 0.45)];
    let op = fock::creation(&basis, &grid, &OneParticleVector::new(h.clone())).unwrap();
    // quadrature weights are folded into the matrix elements
    let folded: Vec<C64> = h.iter().map(|v| v * 1.7f64.sqrt()).collect();
    let mut worst = 0.0f64;
    for k in 0..basis.dim() {
        let n = basis.total(k);
        let psi = occupation_tensor(2, basis.state(k));
        let image = create(&folded, &psi, n);
        for m in 0..basis.dim() {
            let expected = if basis.total(m) == n + 1 {
                inner(&occupation_tensor(2, basis.state(m)), &image)
            } else {
                ZERO
            };
            worst = worst.max((op.matrix().get(m, k) - expected).norm());
        }
    }
    assert!(worst < 1e-14, "max deviation {worst:e}");
}

/// Zeros of the physicists' Hermite polynomial `H_n`, by bisection.
fn hermite_zeros(n: usize) -> Vec<f64> {
    let eval = |x: f64| {
        let (mut a, mut b) = (1.0, 2.0 * x);
        if n == 0 {
            return a;
        }
        for k in 1..n {
            let c = 2.0 * x * b - 2.0 * k as f64 * a;
            a = b;
            b = c;
        }
        b
    };
    let r = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    let steps = 20_000;
    let mut zeros = Vec::new();
    for i in 0..steps {
        let (mut lo, mut hi) = (-r + 2.0 * r * i as f64 / steps as f64, -r + 2.0 * r * (i + 1) as f64 / steps as f64);
        if eval(lo).signum() == eval(hi).signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval(mid).signum() == eval(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        zeros.push(0.5 * (lo + hi));
    }
    zeros
}

#[test]
fn truncated_single_mode_field_has_hermite_spectrum() {
    let n_max = 12;
    let grid = ModeGrid::new(vec![[1.0, 0.0, 0.0]], vec![1.0], 1, 0.0, FrameAxes::default()).unwrap();
    let basis = FockBasis::new(1, n_max, 1000).unwrap();
    let phi = fock::field(&basis, &grid, &OneParticleVector::new(vec![C64::new(1.0, 0.0)])).unwrap();
    let ev = dense::hermitian_eigenvalues(&phi.matrix().to_dense());
    let zeros = hermite_zeros(n_max + 1);
    assert_eq!(ev.len(), zeros.len());
    for (a, b) in ev.iter().zip(&zeros) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn ground_energy_follows_second_order_perturbation_theory() {
    let mut cfg = RunConfig::default();
    cfg.physics.spin = false;
    cfg.physics.potential = None;
    let model = cfg.build().unwrap();
    let limit = cfg.budget.dense;
    let mat = |e: f64| dense::materialize(&verify::physics::hamiltonian(&model, e, false).unwrap(), limit).unwrap();
    // H(e) = H₀ + e V₁ + e² V₂ exactly
    let h0 = mat(0.0);
    let (hp, hm) = (mat(1.0), mat(-1.0));
    let half = C64::new(0.5, 0.0);
    let v1 = (&hp - &hm) * half;
    let v2 = (&hp + &hm) * half - &h0;

    let eig = nalgebra::SymmetricEigen::new((&h0 + h0.adjoint()) * half);
    let order = {
        let mut o: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        o.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        o
    };
    let g = order[0];
    assert!(eig.eigenvalues[order[1]] - eig.eigenvalues[g] > 1e-3, "unperturbed ground state is degenerate");
    let e0 = eig.eigenvalues[g];
    let u0 = eig.eigenvectors.column(g);
    let first = (u0.adjoint() * &v1 * u0)[(0, 0)].re;
    let mut second = (u0.adjoint() * &v2 * u0)[(0, 0)].re;
    for &n in &order[1..] {
        let un = eig.eigenvectors.column(n);
        let m = (un.adjoint() * &v1 * u0)[(0, 0)];
        second -= m.norm_sqr() / (eig.eigenvalues[n] - e0);
    }
    assert!(first.abs() < 1e-12, "first-order shift {first:e}");

    // the symmetric average cancels odd orders, leaving e²E₂ + O(e⁴)
    let e = 1e-2;
    let ground = |e: f64| {
        let h = verify::physics::hamiltonian(&model, e, false).unwrap();
        verify::physics::lowest(&h, 1).unwrap().0[0].value
    };
    let shift = 0.5 * (ground(e) + ground(-e)) - e0;
    let predicted = e * e * second;
    assert!(
        (shift - predicted).abs() <= 1e-3 * predicted.abs(),
        "shift {shift:e}, second-order prediction {predicted:e}"
    );
}

#[test]
fn displayed_sign_of_the_quadratic_term_fails() {
    let mut cfg = RunConfig::default();
    cfg.only = vec!["resolvent".into()];
    let model = cfg.build().unwrap();
    let checks = verify::run_checks(&model);
    let mut seen = 0;
    for c in &checks {
        for key in ["residual_with_negated_quadratic_term", "relative_residual_with_negated_quadratic_term"] {
            if let Some(v) = c.details.get(key).and_then(|v| v.as_f64()) {
                assert!(c.passed, "{} failed", c.name);
                assert!(v > 1e3 * c.tolerance, "{}: negated residual {v:e}", c.name);
                seen += 1;
            }
        }
    }
    assert!(seen >= 9, "only {seen} negated residuals recorded");
}
