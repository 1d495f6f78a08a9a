use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use pureid::minerr::{global_povm, minerr_locc_protocol, Priors};
use pureid::simulate::{run_batch, run_batch_sequential, TrialSpec};
use pureid::unambiguous::unamb_locc_protocol;

const TRIALS: u64 = 20_000;

fn specs() -> Vec<(&'static str, TrialSpec)> {
    let priors = Priors::equal();
    vec![
        (
            "minerr-global-d4",
            TrialSpec::global(global_povm(4, priors).unwrap(), 4, priors).unwrap(),
        ),
        (
            "minerr-locc-2x2",
            TrialSpec::locc(minerr_locc_protocol(2, 2, priors).unwrap(), priors).unwrap(),
        ),
        (
            "unamb-locc-2x3",
            TrialSpec::locc(unamb_locc_protocol(2, 3, false).unwrap(), priors).unwrap(),
        ),
    ]
}

fn batches(c: &mut Criterion) {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let mut group = c.benchmark_group("run_batch");
    group.sample_size(10);
    group.throughput(Throughput::Elements(TRIALS));
    for (name, spec) in specs() {
        group.bench_with_input(BenchmarkId::new("sequential", name), &spec, |b, s| {
            b.iter(|| run_batch_sequential(s, TRIALS, 1).unwrap())
        });
        group.bench_with_input(
            BenchmarkId::new(format!("parallel-{workers}"), name),
            &spec,
            |b, s| b.iter(|| run_batch(s, TRIALS, 1, workers).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, batches);
criterion_main!(benches);
