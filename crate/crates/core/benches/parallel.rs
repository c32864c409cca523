use criterion::{criterion_group, criterion_main, Criterion};
use otafl_core::experiment::{run_experiment, scenarios, ExperimentConfig};
use otafl_core::fl::Transport;
use otafl_core::rng::{stream, Purpose};
use otafl_core::single_carrier::GradientVector;
use otafl_core::Execution;
use rand::Rng;
use rand_distr::StandardNormal;
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn ofdm_aggregation(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        ues: 40,
        scheme: Transport::Ofdm,
        clip: true,
        ..ExperimentConfig::desk()
    };
    let mut rng = stream(0, Purpose::Synthetic, 0, 0);
    let raw: Vec<GradientVector> = (0..cfg.ues)
        .map(|_| GradientVector::raw((0..1842).map(|_| rng.sample(StandardNormal)).collect()))
        .collect();
    let mut group = c.benchmark_group("ofdm_clip_aggregate_k40");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut air = scenarios(&cfg).unwrap().remove(0).fl.air;
        air.exec = exec;
        group.bench_function(name, |b| b.iter(|| black_box(air.aggregate(black_box(&raw), 1, 1).unwrap())));
    }
    group.finish();
}

fn experiment_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("desk_sc_experiment_5_rounds");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = ExperimentConfig {
            rounds: 5,
            scheme: Transport::SingleCarrier,
            execution: exec,
            ..ExperimentConfig::desk()
        };
        group.bench_function(name, |b| b.iter(|| black_box(run_experiment(&cfg).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, ofdm_aggregation, experiment_batch);
criterion_main!(benches);
