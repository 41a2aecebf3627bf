//! Sweep throughput: sequential vs rayon-parallel grid execution, plus the
//! single-trajectory forward pass.
//!
//! Run with `cargo bench -p iffm-core`. Building with
//! `--no-default-features` benches only the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use iffm_core::integrator::{simulate, SimConfig};
use iffm_core::motifs::InitialPolicy;
use iffm_core::preset;
use iffm_core::response::{log_grid, sweep_seq};

fn bench_cfg() -> SimConfig {
    // Trimmed sampling keeps one bench iteration in the tens of
    // milliseconds; relative seq/par timings are what matter here.
    SimConfig { n_samples: 257, ..SimConfig::default() }
}

fn forward_pass(c: &mut Criterion) {
    let sys = preset::subsystem();
    let motif = preset::motif(1);
    let init = InitialPolicy::new(
        iffm_core::motifs::X0Policy::Explicit(preset::x0(2)),
        preset::y0_policy(motif.kind()),
    );
    let cfg = bench_cfg();
    c.bench_function("simulate/iffm-1/u=1", |b| {
        b.iter(|| simulate(&sys, &motif, 1.0, &init, &cfg).unwrap())
    });
}

fn grid_sweep(c: &mut Criterion) {
    let sys = preset::subsystem();
    let cfg = bench_cfg();
    let grid = log_grid(1e-3, 1e3, 41).unwrap();

    let mut group = c.benchmark_group("sweep-41pt");
    for iffm in [1u8, 4u8] {
        let motif = preset::motif(iffm);
        let init = InitialPolicy::new(
            iffm_core::motifs::X0Policy::Explicit(preset::x0(1)),
            preset::y0_policy(motif.kind()),
        );
        group.bench_with_input(BenchmarkId::new("seq", iffm), &iffm, |b, _| {
            b.iter(|| sweep_seq(&sys, &motif, &init, &cfg, &grid).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("par", iffm), &iffm, |b, _| {
            b.iter(|| iffm_core::response::sweep_par(&sys, &motif, &init, &cfg, &grid).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forward_pass, grid_sweep);
criterion_main!(benches);
