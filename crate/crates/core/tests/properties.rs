use proptest::prelude::*;

use pfcert::fock::{self, binomial, FockBasis};
use pfcert::linalg::pencil::{pencil_max, PencilOptions};
use pfcert::linalg::{dense, norm, LinearOperator, C64};
use pfcert::one_particle::{build_polarizations, FrameAxes, ModeGrid, OneParticleVector};
use pfcert::particle::{kato_bound_estimate, KatoOptions, SpatialGrid};
use pfcert::rng;
use pfcert::sparse::{Csr, SquareCsr};
use pfcert::verify::CheckKind;

fn grid3() -> ModeGrid {
    ModeGrid::new(
        vec![[0.6, 0.0, 0.0], [0.0, -1.3, 0.2], [0.9, 0.9, 0.0]],
        vec![0.4, 1.1, 0.7],
        1,
        0.0,
        FrameAxes::default(),
    )
    .unwrap()
}

fn random_h(seed: u64, label: &str, slots: usize) -> OneParticleVector {
    OneParticleVector::new(rng::complex_gaussian(&mut rng::stream(seed, label), slots))
}

fn dense_csr(m: &nalgebra::DMatrix<C64>) -> Csr {
    let mut t = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            t.push((r, c, m[(r, c)]));
        }
    }
    Csr::from_triplets(m.nrows(), m.ncols(), t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fock_dimension_is_binomial(slots in 1usize..6, n_max in 0usize..6) {
        let b = FockBasis::new(slots, n_max, 1_000_000).unwrap();
        prop_assert_eq!(b.dim() as u128, binomial(slots + n_max, n_max));
        for i in 0..b.dim() {
            prop_assert_eq!(b.index_of(b.state(i)), Some(i));
            prop_assert!(b.total(i) <= n_max);
        }
    }

    #[test]
    fn ccr_holds_below_the_top_two_sectors(seed in any::<u64>()) {
        let grid = grid3();
        let basis = FockBasis::new(3, 4, 10_000).unwrap();
        let f = random_h(seed, "f", 3);
        let g = random_h(seed, "g", 3);
        let a = fock::annihilation(&basis, &grid, &f).unwrap();
        let ad = fock::creation(&basis, &grid, &g).unwrap();
        let comm = a.commutator(&ad);
        let fg = grid.inner(&f, &g);
        let diff = comm.matrix().add(C64::new(1.0, 0.0), &Csr::identity(basis.dim()), -fg).unwrap();
        let mask = basis.sector_mask(2);
        prop_assert!(diff.sandwich(&mask, &mask).frobenius() < 1e-12);
    }

    #[test]
    fn annihilation_is_bounded_by_field_energy(seed in any::<u64>()) {
        let grid = grid3();
        let basis = FockBasis::new(3, 4, 10_000).unwrap();
        let f = random_h(seed, "f", 3);
        let a = fock::annihilation(&basis, &grid, &f).unwrap();
        let hf = fock::field_energy(&basis, &grid).unwrap();
        let psi = rng::complex_gaussian(&mut rng::stream(seed, "psi"), basis.dim());
        let op = SquareCsr::new(a.matrix().clone());
        let lhs = norm(&op.apply_vec(&psi));
        let energy: f64 = pfcert::linalg::dot(&psi, &SquareCsr::new(hf.matrix().clone()).apply_vec(&psi)).re;
        prop_assert!(lhs <= grid.inverse_sqrt_omega_norm(&f) * energy.max(0.0).sqrt() * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn omega_norm_dominates_norm(seed in any::<u64>()) {
        let grid = grid3();
        let h = random_h(seed, "h", 3);
        prop_assert!(grid.omega_norm(&h) >= grid.norm(&h));
    }

    #[test]
    fn polarization_frames_are_orthonormal(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
        let k = [x, y, z];
        let kn = (x * x + y * y + z * z).sqrt();
        prop_assume!(kn > 1e-3);
        let (e1, e2) = build_polarizations(&k, &FrameAxes::default()).unwrap();
        let khat = [x / kn, y / kn, z / kn];
        let d = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        for (a, b, want) in [(&e1, &e1, 1.0), (&e2, &e2, 1.0), (&e1, &e2, 0.0), (&e1, &khat, 0.0), (&e2, &khat, 0.0)] {
            prop_assert!((d(a, b) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn iterative_pencil_matches_dense(seed in any::<u64>(), n in 4usize..24) {
        let mut r = rng::stream(seed, "pencil");
        let x = nalgebra::DMatrix::from_vec(n, n, rng::complex_gaussian(&mut r, n * n));
        let y = nalgebra::DMatrix::from_vec(n, n, rng::complex_gaussian(&mut r, n * n));
        let a = &x * x.adjoint();
        let b = &y * y.adjoint() + nalgebra::DMatrix::<C64>::identity(n, n) * C64::new(0.1, 0.0);
        let want = dense::pencil_max(&a, &b).unwrap();
        let got = pencil_max(&SquareCsr::new(dense_csr(&a)), &SquareCsr::new(dense_csr(&b)), &PencilOptions::default())
            .unwrap()
            .value
            .unwrap();
        prop_assert!((got - want).abs() <= 1e-8 * want, "{} vs {}", got, want);
    }

    #[test]
    fn pass_flag_depends_only_on_the_numbers(m in -1e3f64..1e3, b in -1e3f64..1e3, t in 0.0f64..10.0) {
        prop_assert_eq!(CheckKind::Residual.passes(m, b, t), m <= t);
        prop_assert_eq!(CheckKind::AtMost.passes(m, b, t), m <= b + t);
        prop_assert_eq!(CheckKind::AtLeast.passes(m, b, t), m >= b - t);
    }

    #[test]
    fn kato_constant_is_non_increasing(depth in 0.1f64..3.0, width in 0.2f64..2.0) {
        let grid = SpatialGrid::new(1, 16, 10.0).unwrap();
        let v: Vec<f64> = (0..16)
            .map(|i| {
                let x = i as f64 * 10.0 / 16.0 - 5.0;
                -depth / (x * x + width * width).sqrt()
            })
            .collect();
        let pts = kato_bound_estimate(&v, &grid, &[0.5, 1.0, 2.0, 4.0, 8.0], &KatoOptions::default()).unwrap();
        for w in pts.windows(2) {
            match (w[0].a_min, w[1].a_min) {
                (Some(a), Some(b)) => prop_assert!(b <= a * (1.0 + 1e-8) + 1e-12),
                (Some(_), None) => prop_assert!(false, "finite a lost at larger b"),
                _ => {}
            }
        }
    }
}
