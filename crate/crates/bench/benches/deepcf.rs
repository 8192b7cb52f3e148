use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use deepcf::eval::evaluate;
use deepcf::model::{ArchSpec, Gradients, ModelParams, Variant, INIT_STDDEV};
use deepcf::rng::seeded;
use deepcf::train::{train_epoch, OptimizerKind, OptimizerState, TrainConfig};
use deepcf_bench::{synthetic_instances, synthetic_matrix, synthetic_tests};

const USERS: usize = 1000;
const ITEMS: usize = 2000;
const FACTORS: usize = 32;

fn model(variant: Variant, train: &deepcf::data::InteractionMatrix) -> ModelParams {
    let arch = ArchSpec::new(variant, train.num_users(), train.num_items(), FACTORS);
    ModelParams::init(arch, INIT_STDDEV, &mut seeded(1)).unwrap()
}

fn forward_backward(c: &mut Criterion) {
    let train = synthetic_matrix(USERS, ITEMS, 40, 0);
    let batch = synthetic_instances(&train, 256, 2);
    let users: Vec<&[u32]> = batch.iter().map(|x| train.row(x.user as usize)).collect();
    let items: Vec<&[u32]> = batch.iter().map(|x| train.col(x.item as usize)).collect();
    let mut group = c.benchmark_group("batch256");
    for variant in [Variant::Rl, Variant::Ml, Variant::Fused] {
        let params = model(variant, &train);
        group.bench_function(format!("forward/{variant}"), |b| {
            b.iter(|| black_box(params.forward(&users, &items).unwrap().logits()[0]))
        });
        let mut grads = Gradients::zeros(&params);
        let dlogits = vec![1.0 / 256.0; 256];
        group.bench_function(format!("forward_backward/{variant}"), |b| {
            b.iter(|| {
                let cache = params.forward(&users, &items).unwrap();
                grads.clear();
                params.backward(&cache, &dlogits, &mut grads).unwrap();
                black_box(grads.output[0])
            })
        });
    }
    group.finish();
}

fn epoch(c: &mut Criterion) {
    let train = synthetic_matrix(200, 500, 20, 0);
    let mut group = c.benchmark_group("epoch");
    group.sample_size(10);
    for kind in [OptimizerKind::Adam, OptimizerKind::Sgd] {
        let config = TrainConfig {
            optimizer: kind,
            ..TrainConfig::default()
        };
        group.bench_function(format!("fused/{kind}"), |b| {
            b.iter_batched(
                || {
                    let p = model(Variant::Fused, &train);
                    let opt = OptimizerState::new(kind, &p);
                    (p, opt)
                },
                |(mut p, mut opt)| train_epoch(&mut p, &train, &config, &mut opt, 1).unwrap().mean_loss,
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let train = synthetic_matrix(300, ITEMS, 40, 0);
    let tests = synthetic_tests(&train, 100, 3);
    let params = model(Variant::Fused, &train);
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    group.bench_function("fused/300_users", |b| {
        b.iter(|| black_box(evaluate(&params, &train, &tests, 10).unwrap().hr))
    });
    group.finish();
}

criterion_group!(benches, forward_backward, epoch, evaluation);
criterion_main!(benches);
