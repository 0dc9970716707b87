use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use doq_core::algopt::{update_representatives, RepresentativeMode};
use doq_core::evalx::{oracle_utilities, relative_loss, OracleSpec};
use doq_core::exec;
use doq_core::model::*;
use doq_core::quantizer::{argmax_labels, DecisionalQuantizer};

fn mimo_setup() -> (UtilityModel, DecisionSet, SampleSet) {
    let cfg = MimoEeConfig {
        n_tx: 4,
        n_rx: 1,
        r0: 1e6,
        sigma2: 5.0,
        p0: 10.0,
        p_max: 12.0,
    };
    let d = build_egt_decision_set(&cfg, 12.0).unwrap();
    let samples = sample_params(
        &ParameterSampler {
            kind: SamplerKind::ComplexGaussianMatrix { n_rx: 1, n_tx: 4 },
            seed: 1,
        },
        20_000,
    )
    .unwrap();
    (UtilityModel::MimoEe(cfg), d, samples)
}

fn ee_setup() -> (UtilityModel, DecisionSet, SampleSet) {
    let model = UtilityModel::MultiBandEe(MultiBandEeConfig {
        n_bands: 2,
        c: 1.0,
        sigma2: 10.0,
    });
    let levels: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
    let d = DecisionSet::power_product(&levels, 2).unwrap();
    let samples = sample_params(
        &ParameterSampler {
            kind: SamplerKind::ExponentialGains { n_bands: 2 },
            seed: 2,
        },
        10_000,
    )
    .unwrap();
    (model, d, samples)
}

const MODES: [(&str, bool); 2] = [("parallel", false), ("sequential", true)];

fn bench_labeling(c: &mut Criterion) {
    let (model, d, samples) = mimo_setup();
    let mut group = c.benchmark_group("exhaustive_labeling");
    group.sample_size(10);
    for (name, sequential) in MODES {
        exec::force_sequential(sequential);
        group.bench_function(BenchmarkId::new("miso_20k", name), |b| {
            b.iter(|| argmax_labels(&model, &d, &samples).unwrap())
        });
    }
    exec::force_sequential(false);
    group.finish();
}

fn bench_relative_loss(c: &mut Criterion) {
    let (model, d, samples) = mimo_setup();
    let q = DecisionalQuantizer::ExhaustiveArgmax {
        model: model.clone(),
        decisions: d.clone(),
    };
    let oracle = OracleSpec::MaxOverDecisionSet(d.clone());
    let mut group = c.benchmark_group("relative_loss");
    group.sample_size(10);
    for (name, sequential) in MODES {
        exec::force_sequential(sequential);
        group.bench_function(BenchmarkId::new("miso_20k", name), |b| {
            b.iter(|| relative_loss(&q, &model, &d, &samples, &oracle).unwrap())
        });
    }
    exec::force_sequential(false);
    group.finish();
}

fn bench_fine_grid_oracle(c: &mut Criterion) {
    let (model, _, samples) = ee_setup();
    let small = samples.subset(&(0..500).collect::<Vec<_>>());
    let oracle = OracleSpec::fine_grid_default();
    let mut group = c.benchmark_group("fine_grid_oracle");
    group.sample_size(10);
    for (name, sequential) in MODES {
        exec::force_sequential(sequential);
        group.bench_function(BenchmarkId::new("ee_500", name), |b| {
            b.iter(|| oracle_utilities(&model, &small, &oracle).unwrap())
        });
    }
    exec::force_sequential(false);
    group.finish();
}

fn bench_representative_step(c: &mut Criterion) {
    let (model, candidates, samples) = ee_setup();
    let current = DecisionSet::new(candidates.as_slice()[..4].to_vec()).unwrap();
    let labels = argmax_labels(&model, &current, &samples).unwrap();
    let mode = RepresentativeMode::DiscreteCandidates(candidates);
    let mut group = c.benchmark_group("representative_step");
    group.sample_size(10);
    for (name, sequential) in MODES {
        exec::force_sequential(sequential);
        group.bench_function(BenchmarkId::new("ee_10k", name), |b| {
            b.iter(|| update_representatives(&model, &samples, &labels, &current, &mode).unwrap())
        });
    }
    exec::force_sequential(false);
    group.finish();
}

criterion_group!(
    benches,
    bench_labeling,
    bench_relative_loss,
    bench_fine_grid_oracle,
    bench_representative_step
);
criterion_main!(benches);
