use abzeta::catalog;
use abzeta::oracle::{oracle_count, Mode, OracleConfig};
use abzeta_bench::representatives;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn oracle_modes(c: &mut Criterion) {
    let cfg = OracleConfig::default();
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    for fam in representatives() {
        for (mode, m) in [(Mode::Full, 2), (Mode::Fast, 3)] {
            let id = BenchmarkId::new(format!("{mode}"), format!("{} p=3 m={m}", fam.label()));
            g.bench_with_input(id, &fam, |b, f| b.iter(|| oracle_count(f, 3, m, mode, &cfg).unwrap()));
        }
    }
    g.finish();
}

fn closed_forms(c: &mut Criterion) {
    let mut g = c.benchmark_group("closed-form");
    for fam in representatives() {
        g.bench_with_input(BenchmarkId::new("local p=7 m=20", fam.label()), &fam, |b, f| {
            b.iter(|| catalog::closed_form_table(f, 7, 20).unwrap())
        });
    }
    let n0 = catalog::family("N", Some(0)).unwrap();
    g.sample_size(10);
    g.bench_function("global N_0 n=1e5", |b| b.iter(|| catalog::global_coeffs(&n0, 100_000).unwrap()));
    g.finish();
}

criterion_group!(benches, oracle_modes, closed_forms);
criterion_main!(benches);
