use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use k4flab_bench::mid_process;
use k4flab_core::graph::{completion_counts, open_pairs};
use k4flab_core::greedy::{run_greedy, GreedyConfig};
use k4flab_core::staged::{self, ProcessParams, StepMode};
use k4flab_core::survival::{self, TreeSpec};

fn k4_probe(c: &mut Criterion) {
    let (m, trav) = mid_process(1000, 1, 0.3);
    let pairs: Vec<(usize, usize)> = (0..1000)
        .flat_map(|u| (u + 1..1000).map(move |v| (u, v)))
        .filter(|&(u, v)| !trav.has_edge(u, v))
        .take(4096)
        .collect();
    c.bench_function("closes_k4 n=1000 x4096", |b| {
        b.iter(|| pairs.iter().filter(|&&(u, v)| m.closes_k4(u, v)).count())
    });
}

fn greedy(c: &mut Criterion) {
    let mut g = c.benchmark_group("greedy");
    g.sample_size(10);
    for n in [256usize, 1024] {
        g.bench_function(format!("run to exhaustion n={n}"), |b| {
            b.iter(|| {
                run_greedy(&GreedyConfig::new(black_box(n), 7))
                    .unwrap()
                    .graph
                    .m()
            })
        });
    }
    g.finish();
}

fn completions(c: &mut Criterion) {
    let (m, trav) = mid_process(1000, 2, 0.3);
    let open = open_pairs(&m, &trav);
    let sample: Vec<(usize, usize)> = open.edges().take(256).collect();
    c.bench_function("completion_counts n=1000 x256", |b| {
        b.iter(|| {
            sample
                .iter()
                .map(|&(u, v)| completion_counts(&m, &open, u, v)[5])
                .sum::<u64>()
        })
    });
    c.bench_function("open_pairs n=1000", |b| {
        b.iter(|| open_pairs(&m, &trav).m())
    });
}

fn survival_dp(c: &mut Criterion) {
    let tree = TreeSpec::regular(4, 3, 4).unwrap();
    c.bench_function("survival_dp regular(4,3,4) h=1e-3", |b| {
        b.iter(|| survival::survival_dp(black_box(&tree), 1e-3).unwrap().big_p[1000])
    });
}

fn staged_round(c: &mut Criterion) {
    let mut g = c.benchmark_group("staged n=500");
    g.sample_size(20);
    for (name, mode) in [("staged", StepMode::Staged), ("oneshot", StepMode::OneShot)] {
        g.bench_function(name, |b| {
            b.iter(|| staged::final_edge_count(&ProcessParams::desk(500, 3), mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    k4_probe,
    greedy,
    completions,
    survival_dp,
    staged_round
);
criterion_main!(benches);
