use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oqc_core::fixtures;
use oqc_core::lefschetz::{jordan_type, pair_of_type};
use oqc_core::qdm::{connection, fundamental_solution, quantum_product, CorrelatorTable};
use oqc_core::scalar::{rat, rat_int, Scalar};
use oqc_core::series::{series_mul, Mono, SSeries, Series, VarSet};
use oqc_core::special::gamma_taylor;

fn bench_gamma_taylor(c: &mut Criterion) {
    c.bench_function("gamma_taylor f=1/3 k=12", |b| {
        b.iter(|| gamma_taylor(black_box(&rat(1, 3)), 12).unwrap())
    });
}

fn bench_series_mul(c: &mut Criterion) {
    let vars = VarSet::new(vec!["x".into(), "y".into(), "z".into()], 8, 4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut make = |seed_shift: u64| {
        let _ = seed_shift;
        let mut s = SSeries::zero(vars.clone());
        for _ in 0..40 {
            let mut m = Mono::unit(3);
            for e in m.exps.iter_mut() {
                *e = rng.random_range(0..3);
            }
            m.zh = 2 * rng.random_range(-2..=1);
            s.add_term(m, Scalar::from_rat(rat(rng.random_range(-9..9), 1 + rng.random_range(1..7))));
        }
        s
    };
    let a = make(0);
    let b = make(1);
    c.bench_function("series_mul 40x40 terms", |bch| {
        bch.iter(|| series_mul(black_box(&a), black_box(&b)).unwrap())
    });
}

fn bench_fundamental_solution(c: &mut Criterion) {
    let input = fixtures::c3z3();
    let d = input.datum;
    let table = CorrelatorTable::from_json(&fixtures::c3z3_correlators().unwrap(), &d).unwrap();
    c.bench_function("fundamental_solution c3z3 order 12", |b| {
        b.iter(|| {
            let qp = quantum_product(&table, &d, 12).unwrap();
            let conn = connection(&d, qp).unwrap();
            fundamental_solution(black_box(&conn), 1e-10).unwrap()
        })
    });
}

fn bench_jordan_type(c: &mut Criterion) {
    let mut r = ChaCha8Rng::seed_from_u64(42);
    let mut rng = move || r.random_range(-3..=3i64);
    let spec = vec![
        (3u32, rat_int(3)),
        (2, rat_int(2)),
        (1, rat_int(3)),
        (0, rat_int(2)),
    ];
    let (pair, _) = pair_of_type(&spec, &mut rng);
    c.bench_function("jordan_type dim 10", |b| {
        b.iter(|| jordan_type(black_box(&pair), 0.0).unwrap())
    });
}

criterion_group!(
    benches,
    bench_gamma_taylor,
    bench_series_mul,
    bench_fundamental_solution,
    bench_jordan_type
);
criterion_main!(benches);
