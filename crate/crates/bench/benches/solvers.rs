use criterion::{black_box, criterion_group, criterion_main, Criterion};
use paraflow::linalg::LaplacianState;
use paraflow::{
    run_efpa, run_mca, run_mcfi, solve_fixed, ApproxParams, EfpaOptions, FwOptions, InitialSolution, McfiOptions,
};
use paraflow_bench::{grid, sioux_falls, triangle};

fn efpa_triangle(c: &mut Criterion) {
    let (inst, d) = triangle();
    c.bench_function("efpa/triangle", |b| {
        b.iter(|| run_efpa(black_box(&inst), &d, InitialSolution::ZeroFlow, EfpaOptions::default()).unwrap())
    });
}

fn sioux_falls_pair(c: &mut Criterion) {
    let bundle = sioux_falls();
    let inst = bundle.instance().unwrap();
    let d = bundle.demand(0, 19, 1.0).unwrap();
    let params = ApproxParams::default();
    let mut g = c.benchmark_group("sioux_falls");
    g.bench_function("mca", |b| {
        b.iter(|| run_mca(black_box(&inst), &d, &params, EfpaOptions::default()).unwrap())
    });
    let b1 = d.at(1.0).unwrap();
    g.bench_function("fw_1e-4", |b| {
        b.iter(|| solve_fixed(black_box(&inst), &b1, &FwOptions::with_epsilon(1e-4), None).unwrap())
    });
    let mut mcfi_params = params;
    mcfi_params.epsilon = Some(0.0015);
    g.sample_size(10);
    g.bench_function("mcfi", |b| {
        b.iter(|| run_mcfi(black_box(&inst), &d, &mcfi_params, &McfiOptions::default()).unwrap())
    });
    g.finish();
}

fn laplacian(c: &mut Criterion) {
    let (net, cond) = grid(12);
    let n = net.n_vertices();
    let mut rhs = vec![0.0; n];
    rhs[0] = -1.0;
    rhs[n - 1] = 1.0;
    let mut g = c.benchmark_group("laplacian_12x12");
    g.bench_function("assemble_and_solve", |b| {
        b.iter(|| {
            LaplacianState::assemble(&net, black_box(&cond))
                .unwrap()
                .reduced_solve(&rhs)
                .unwrap()
        })
    });
    let mut lap = LaplacianState::assemble(&net, &cond).unwrap();
    let mut k = 0;
    g.bench_function("rank_one_update", |b| {
        b.iter(|| {
            k = (k + 1) % net.n_edges();
            let value = if lap.conductances()[k] == 1.0 { 2.0 } else { 1.0 };
            lap.rank_one_update(k, value).unwrap();
            lap.reduced_solve(&rhs).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, efpa_triangle, sioux_falls_pair, laplacian);
criterion_main!(benches);
