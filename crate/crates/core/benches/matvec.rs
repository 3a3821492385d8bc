//! Composite matvecs on the default rayon pool against a one-thread pool.
//!
//! Build with `--no-default-features` to time the sequential fallback; the
//! group name records which kernels were compiled in.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pfcert::config::RunConfig;
use pfcert::linalg::LinearOperator;
use pfcert::pauli_fierz::assemble_ta;
use pfcert::{par, rng, verify};

fn bench_matvec(c: &mut Criterion) {
    let mut cfg = RunConfig::default();
    cfg.grid.points = 64;
    cfg.fock.n_max = 4;
    let model = cfg.build().unwrap();
    let ta = assemble_ta(&model.space, &model.profiles, 1.0).unwrap();
    let pf = verify::physics::hamiltonian(&model, 1.0, true).unwrap();
    let ops: [(&str, &dyn LinearOperator); 2] = [("t_a", &ta.ta), ("pauli_fierz", &pf)];

    let kernels = if par::is_parallel() { "rayon" } else { "sequential" };
    let mut group = c.benchmark_group(format!("matvec/{kernels}"));
    let mut counts = vec![1, rayon::current_num_threads()];
    counts.dedup();
    for (name, op) in ops {
        let x = rng::complex_gaussian(&mut rng::stream(0, "bench"), op.dim());
        for &threads in &counts {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            group.bench_with_input(BenchmarkId::new(name, format!("{}x{threads}", op.dim())), &x, |b, x| {
                let mut y = vec![Default::default(); x.len()];
                b.iter(|| pool.install(|| op.apply(x, &mut y)));
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_matvec);
criterion_main!(benches);
