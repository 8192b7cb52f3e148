//! Per-batch time split of forward, backward and optimizer step on a
//! prepared dataset: `cargo run --release --example profile -- <prefix> [rl|ml|fused]`.

use std::time::Instant;

use deepcf::data::{DatasetFiles, TrainInstance};
use deepcf::model::{ArchSpec, Gradients, ModelParams, Variant, INIT_STDDEV};
use deepcf::pipeline::load_dataset;
use deepcf::rng::seeded;
use deepcf::train::{OptimizerKind, OptimizerState};

fn main() {
    let prefix = std::env::args().nth(1).expect("dataset prefix");
    let variant: Variant = std::env::args()
        .nth(2)
        .unwrap_or_else(|| "ml".into())
        .parse()
        .expect("variant");
    let ds = load_dataset(&DatasetFiles::from_prefix(prefix.as_ref())).expect("dataset");
    let train = &ds.split.train;
    let arch = ArchSpec::new(variant, train.num_users(), train.num_items(), 64);
    let mut p = ModelParams::init(arch, INIT_STDDEV, &mut seeded(0)).expect("init");
    let mut opt = OptimizerState::new(OptimizerKind::Adam, &p);
    let mut grads = Gradients::zeros(&p);
    let instances: Vec<TrainInstance> = train
        .pairs()
        .step_by(37)
        .take(256 * 40)
        .map(|(user, item)| TrainInstance { user, item, label: 1 })
        .collect();
    let dlogits = vec![1e-3; 256];
    let (mut tf, mut tb, mut to) = (0.0, 0.0, 0.0);
    for batch in instances.chunks(256) {
        let users: Vec<&[u32]> = batch.iter().map(|x| train.row(x.user as usize)).collect();
        let items: Vec<&[u32]> = batch.iter().map(|x| train.col(x.item as usize)).collect();
        let t = Instant::now();
        let cache = p.forward(&users, &items).expect("forward");
        tf += t.elapsed().as_secs_f64();
        let t = Instant::now();
        grads.clear();
        p.backward(&cache, &dlogits[..batch.len()], &mut grads).expect("backward");
        tb += t.elapsed().as_secs_f64();
        drop(cache);
        let t = Instant::now();
        opt.step(&mut p, &grads, 1e-3).expect("step");
        to += t.elapsed().as_secs_f64();
    }
    let n = instances.len().div_ceil(256) as f64;
    println!(
        "{variant}: per batch ms forward {:.2} backward {:.2} optimizer {:.2}",
        tf * 1e3 / n,
        tb * 1e3 / n,
        to * 1e3 / n
    );
}
