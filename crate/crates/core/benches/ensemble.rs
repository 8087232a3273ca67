use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use imitodyn::engine::SimConfig;
use imitodyn::ensemble::{ensemble_map, Execution, RunSpec};
use imitodyn::game::example4_game;
use imitodyn::rules::arctan_uniform;
use imitodyn::simplex::PopulationType;
use imitodyn::topology::Graph;

const RUNS: usize = 32;

fn complete_spec(n: u32) -> RunSpec {
    RunSpec::complete(
        example4_game(),
        arctan_uniform(2, 1.0).unwrap(),
        PopulationType::from_fractions(&[0.3, 0.7], n).unwrap(),
        SimConfig::new(1.0, 20.0, 0),
    )
}

fn lattice_spec(side: usize) -> RunSpec {
    let graph = Graph::square_lattice(side, true).unwrap();
    let n = graph.n() as u32;
    RunSpec::network(
        graph,
        example4_game(),
        arctan_uniform(2, 1.0).unwrap(),
        PopulationType::from_fractions(&[0.3, 0.7], n).unwrap(),
        SimConfig::new(1.0, 20.0, 0),
    )
}

fn compare(c: &mut Criterion, group_name: &str, specs: Vec<(String, RunSpec)>) {
    let mut group = c.benchmark_group(group_name);
    group.sample_size(10);
    group.throughput(Throughput::Elements(RUNS as u64));
    for (label, spec) in &specs {
        for (mode, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(mode, label), spec, |b, spec| {
                b.iter(|| ensemble_map(spec, RUNS, 1, exec, |_, t| t.final_state()).unwrap())
            });
        }
    }
    group.finish();
}

fn complete_graph(c: &mut Criterion) {
    let specs = [500u32, 5000]
        .into_iter()
        .map(|n| (format!("n={n}"), complete_spec(n)))
        .collect();
    compare(c, "ensemble_complete", specs);
}

fn lattice(c: &mut Criterion) {
    let specs = [20usize, 71]
        .into_iter()
        .map(|side| (format!("{side}x{side}"), lattice_spec(side)))
        .collect();
    compare(c, "ensemble_lattice", specs);
}

criterion_group!(benches, complete_graph, lattice);
criterion_main!(benches);
