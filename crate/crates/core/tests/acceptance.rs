//! Acceptance criteria, one test per criterion. Each prints a single
//! `[criterion N] PASS|FAIL ...` line (run with `--nocapture` to see them).
//!
//! Criteria that need real data are `#[ignore]`d. They read prepared
//! datasets (`<name>.train.rating` etc.) from `$DEEPCF_DATA_DIR`:
//! `lastfm`, `ml-1m` and `ml-1m-u20` (20% user subsample). Run them with
//! `cargo test --release -p deepcf --test acceptance -- --ignored --nocapture`.

use std::f64::consts::LN_2;
use std::fs;
use std::path::{Path, PathBuf};

use deepcf::data::{CanonicalDataset, DatasetFiles, InteractionMatrix, TestCase, TrainInstance};
use deepcf::eval::{evaluate, hit_ratio_at_k, ndcg_at_k, rank_and_truncate, ItemPop};
use deepcf::kernel::{finite_difference, relative_error, sigmoid, GRADCHECK_STEP};
use deepcf::model::{ArchSpec, Gradients, ModelParams, Variant, INIT_STDDEV};
use deepcf::pipeline::{
    load_dataset, prepare, run, run_pretrained_chain, write_run, PrepareOptions, RunSpec, RunVariant,
};
use deepcf::rng::seeded;
use deepcf::train::{
    bce_from_logit, epoch_instances, mean_loss, train_epoch, OptimizerKind, OptimizerState, TrainConfig,
};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

const VARIANTS: [Variant; 3] = [Variant::Rl, Variant::Ml, Variant::Fused];

fn verdict(n: u32, pass: bool, detail: &str) {
    println!("[criterion {n}] {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn random_support<R: Rng>(n: usize, rng: &mut R) -> Vec<u32> {
    let k = rng.random_range(1..=n);
    let mut s: Vec<u32> = sample(rng, n, k).into_iter().map(|i| i as u32).collect();
    s.sort_unstable();
    s
}

/// Users with a random number of random items, plus a structured component
/// (user `u` likes items congruent to `u` mod 3) so models have something
/// to learn.
fn synthetic(users: usize, items: usize, density: f64, seed: u64) -> InteractionMatrix {
    let mut rng = seeded(seed);
    let mut pairs = Vec::new();
    for u in 0..users {
        for i in 0..items {
            let structured = i % 3 == u % 3 && rng.random::<f64>() < 3.0 * density;
            if structured || rng.random::<f64>() < density / 4.0 {
                pairs.push((u as u32, i as u32));
            }
        }
        pairs.push((u as u32, (u % items) as u32));
    }
    InteractionMatrix::from_pairs(users, items, pairs).unwrap()
}

fn synthetic_tests(train: &InteractionMatrix, seed: u64) -> Vec<TestCase> {
    let mut rng = seeded(seed);
    (0..train.num_users() as u32)
        .map(|u| {
            let mut free = Vec::new();
            while free.len() < 101 {
                let j = rng.random_range(0..train.num_items() as u32);
                if !train.contains(u as usize, j as usize) && !free.contains(&j) {
                    free.push(j);
                }
            }
            TestCase {
                user: u,
                positive: free[0],
                negatives: free[1..].to_vec(),
            }
        })
        .collect()
}

fn init(variant: Variant, train: &InteractionMatrix, d: usize, std: f64, seed: u64) -> ModelParams {
    let arch = ArchSpec::new(variant, train.num_users(), train.num_items(), d);
    ModelParams::init(arch, std, &mut seeded(seed)).unwrap()
}

#[test]
fn criterion_01_gradients_match_finite_differences() {
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for case in 0..12u64 {
        let mut rng = seeded(100 + case);
        let (m, n) = (rng.random_range(2..=8), rng.random_range(2..=8));
        let d = rng.random_range(1..=2);
        let variant = VARIANTS[case as usize % 3];
        let mut p = init(variant, &InteractionMatrix::from_pairs(m, n, [(0, 0)]).unwrap(), d, 0.5, case);
        // Random biases too: zero biases can put a ReLU exactly on its kink,
        // where central differences see half the slope.
        let normal = Normal::new(0.0, 0.5).unwrap();
        for t in p.tensors_mut() {
            t.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
        }
        let b = rng.random_range(1..=6);
        let rows: Vec<Vec<u32>> = (0..b).map(|_| random_support(n, &mut rng)).collect();
        let cols: Vec<Vec<u32>> = (0..b).map(|_| random_support(m, &mut rng)).collect();
        let labels: Vec<f64> = (0..b).map(|_| rng.random_range(0..2) as f64).collect();
        let users: Vec<&[u32]> = rows.iter().map(Vec::as_slice).collect();
        let items: Vec<&[u32]> = cols.iter().map(Vec::as_slice).collect();

        let loss = |q: &ModelParams| -> f64 {
            let cache = q.forward(&users, &items).unwrap();
            cache
                .logits()
                .iter()
                .zip(&labels)
                .map(|(&z, &y)| bce_from_logit(z, y))
                .sum::<f64>()
                / b as f64
        };
        let cache = p.forward(&users, &items).unwrap();
        let dlogits: Vec<f64> = cache
            .logits()
            .iter()
            .zip(&labels)
            .map(|(&z, &y)| (sigmoid(z) - y) / b as f64)
            .collect();
        let mut g = Gradients::zeros(&p);
        p.backward(&cache, &dlogits, &mut g).unwrap();
        drop(cache);
        let analytic = g.to_dense();
        let numeric = finite_difference(&mut p, GRADCHECK_STEP, |q| q.tensors_mut(), loss);
        for (a, nu) in analytic.iter().zip(&numeric) {
            for (x, y) in a.iter().zip(nu) {
                worst = worst.max(relative_error(*x, *y));
                checked += 1;
            }
        }
    }
    verdict(
        1,
        worst <= 1e-4,
        &format!("max relative error {worst:.2e} over {checked} parameters (tolerance 1e-4, h = 1e-5)"),
    );
}

#[test]
fn criterion_02_metric_oracles() {
    let mut rng = seeded(2);
    let k = 10;
    let mut mismatches = 0;
    let mut worst_ndcg: f64 = 0.0;
    for user in 0..1000u32 {
        let n = 101;
        let candidates: Vec<u32> = sample(&mut rng, 5000, n).into_iter().map(|i| i as u32).collect();
        // Coarse scores force frequent ties.
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..20) as f64 / 4.0).collect();
        let ranked = rank_and_truncate(user, &candidates, &scores, k);
        let hr = hit_ratio_at_k(Some(ranked.positive_rank), k);
        let ndcg = ndcg_at_k(Some(ranked.positive_rank), k);

        // Oracle: count the candidates placed ahead of the positive.
        let (pos_item, pos_score) = (candidates[0], scores[0]);
        let ahead = candidates
            .iter()
            .zip(&scores)
            .skip(1)
            .filter(|&(&c, &s)| s > pos_score || (s == pos_score && c < pos_item))
            .count();
        let rank = ahead + 1;
        let hr_oracle = if rank <= k { 1.0 } else { 0.0 };
        let ndcg_oracle = if rank <= k { 1.0 / ((rank + 1) as f64).log2() } else { 0.0 };
        if hr != hr_oracle || ranked.positive_rank != rank {
            mismatches += 1;
        }
        worst_ndcg = worst_ndcg.max((ndcg - ndcg_oracle).abs());
    }
    let anchors = (ndcg_at_k(Some(1), k) - 1.0).abs() <= 1e-12 && (ndcg_at_k(Some(3), k) - 0.5).abs() <= 1e-12;
    verdict(
        2,
        mismatches == 0 && worst_ndcg <= 1e-12 && anchors,
        &format!(
            "1000 lists: {mismatches} rank/HR mismatches, max NDCG error {worst_ndcg:.1e}; NDCG(1) = 1 and NDCG(3) = 0.5: {anchors}"
        ),
    );
}

fn initial_losses(train: &InteractionMatrix, sample_size: usize) -> Vec<(Variant, f64)> {
    let config = TrainConfig::default();
    let mut instances = epoch_instances(train, &config, 1);
    instances.truncate(sample_size);
    VARIANTS
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let p = init(v, train, 64, INIT_STDDEV, 30 + k as u64);
            (v, mean_loss(&p, train, &instances, 256).unwrap())
        })
        .collect()
}

fn loss_anchor_line(name: &str, losses: &[(Variant, f64)]) -> (bool, String) {
    let pass = losses.iter().all(|(_, l)| (l - LN_2).abs() <= 0.05);
    let parts: Vec<String> = losses.iter().map(|(v, l)| format!("{v} {l:.4}")).collect();
    (pass, format!("{name}: {}", parts.join(", ")))
}

#[test]
fn criterion_03_initial_loss_near_ln2_synthetic() {
    let mut pass = true;
    let mut lines = Vec::new();
    for (name, users, items, density) in [("synthetic-a", 200, 300, 0.05), ("synthetic-b", 500, 120, 0.1)] {
        let train = synthetic(users, items, density, 3);
        let (ok, line) = loss_anchor_line(name, &initial_losses(&train, usize::MAX));
        pass &= ok;
        lines.push(line);
    }
    verdict(3, pass, &format!("ln 2 = {LN_2:.4} ± 0.05; {}", lines.join("; ")));
}

#[test]
fn criterion_04_memorizes_3x3_toy() {
    // Each user leaves one item unobserved, so every sampled negative is that item.
    let train = InteractionMatrix::from_pairs(3, 3, [(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2)]).unwrap();
    let cells: Vec<TrainInstance> = (0..3u32)
        .flat_map(|u| (0..3u32).map(move |i| (u, i)))
        .map(|(user, item)| TrainInstance {
            user,
            item,
            label: train.contains(user as usize, item as usize) as u8,
        })
        .collect();
    // One- and two-hot inputs with 0.01-std weights give logit gradients
    // below Adam's epsilon, and narrow ReLU towers often end with disjoint
    // active units for some (user, item) cell, pinning its rl logit at 0.
    // Wider towers and a 0.1-std init isolate capacity from those effects.
    let mut results = Vec::new();
    for seed in 0..3u64 {
        for (k, v) in VARIANTS.into_iter().enumerate() {
            let config = TrainConfig {
                batch_size: 4,
                learning_rate: 0.003,
                negative_ratio: 2,
                seed,
                ..TrainConfig::default()
            };
            let mut p = init(v, &train, 32, 0.1, 40 + k as u64 + 10 * seed);
            let mut opt = OptimizerState::new(OptimizerKind::Adam, &p);
            let mut reached = None;
            for epoch in 1..=200 {
                train_epoch(&mut p, &train, &config, &mut opt, epoch).unwrap();
                if mean_loss(&p, &train, &cells, 9).unwrap() < 0.05 {
                    reached = Some(epoch);
                    break;
                }
            }
            results.push((seed, v, reached, mean_loss(&p, &train, &cells, 9).unwrap()));
        }
    }
    let pass = results.iter().all(|r| r.2.is_some());
    let parts: Vec<String> = results
        .iter()
        .map(|(s, v, e, l)| match e {
            Some(e) => format!("{v}/seed {s}: epoch {e}"),
            None => format!("{v}/seed {s}: still {l:.4} after 200 epochs"),
        })
        .collect();
    verdict(4, pass, &format!("full-matrix loss < 0.05 reached at {}", parts.join(", ")));
}

#[test]
fn criterion_05_random_scorer_hit_ratio() {
    let train = synthetic(1200, 400, 0.02, 5);
    let tests = synthetic_tests(&train, 6);
    let expected = 10.0 / 101.0;
    let constant = |_: &TestCase| vec![0.0; 101];
    let hr_const = evaluate(&constant, &train, &tests, 10).unwrap().hr;
    let untrained = init(Variant::Fused, &train, 8, INIT_STDDEV, 7);
    let hr_init = evaluate(&untrained, &train, &tests, 10).unwrap().hr;
    let pass = (hr_const - 0.099).abs() <= 0.02 && (hr_init - 0.099).abs() <= 0.02;
    verdict(
        5,
        pass,
        &format!(
            "{} users: constant HR@10 {hr_const:.4}, untrained fused HR@10 {hr_init:.4} (expected {expected:.4}, 0.099 ± 0.02)",
            tests.len()
        ),
    );
}

/// A small raw log with a timestamp per record, in `user::item::rating::ts` form.
fn write_raw_log(path: &Path, users: usize, items: usize, seed: u64) {
    let train = synthetic(users, items, 0.06, seed);
    let mut rng = seeded(seed + 1);
    let mut text = String::new();
    for (u, i) in train.pairs() {
        let ts = 1_000_000 + rng.random_range(0..50_000u64);
        text += &format!("{}::{}::{}::{ts}\n", u + 1, i * 7 + 3, rng.random_range(1..=5));
    }
    fs::write(path, text).unwrap();
}

fn pipeline_once(root: &Path, raw: &Path) -> Vec<(String, Vec<u8>)> {
    let files = DatasetFiles::new(&root.join("data"), "toy");
    let opts = PrepareOptions {
        min_user: 2,
        min_item: 1,
        seed: 9,
        ..PrepareOptions::default()
    };
    let stats = prepare(raw, &files, &opts).unwrap();
    fs::write(&files.stats, stats.to_text()).unwrap();
    let ds = load_dataset(&files).unwrap();
    let spec = RunSpec {
        predictive_dim: 4,
        train: TrainConfig {
            epochs: 2,
            batch_size: 64,
            seed: 9,
            ..TrainConfig::default()
        },
        ..RunSpec::default()
    };
    let finetune = TrainConfig {
        learning_rate: 0.01,
        ..spec.train.clone()
    };
    let chain = run_pretrained_chain(&ds, &spec, &finetune).unwrap();
    let out = root.join("runs");
    write_run(&out, "rl", &chain.rl, "toy", 9).unwrap();
    write_run(&out, "ml", &chain.ml, "toy", 9).unwrap();
    write_run(&out, "fused", &chain.fused, "toy", 9).unwrap();
    let mut names = vec![files.stats.clone(), files.train.clone(), files.test.clone(), files.negatives.clone()];
    for run in ["rl", "ml", "fused"] {
        for ext in ["log", "report", "ckpt"] {
            names.push(out.join(format!("{run}.{ext}")));
        }
    }
    names
        .into_iter()
        .map(|p: PathBuf| {
            let rel = p.strip_prefix(root).unwrap().display().to_string();
            (rel, fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn criterion_10_pipeline_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("ratings.dat");
    write_raw_log(&raw, 60, 200, 10);
    let a = pipeline_once(&tmp.path().join("a"), &raw);
    let b = pipeline_once(&tmp.path().join("b"), &raw);
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    verdict(
        10,
        differing.is_empty() && a.len() == b.len(),
        &format!(
            "{} artifacts (stats, split files, logs, reports, checkpoints) compared byte for byte; differing: {differing:?}",
            a.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// Real-data criteria.

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("DEEPCF_DATA_DIR").map(PathBuf::from)
}

fn dataset(name: &str) -> Result<CanonicalDataset, String> {
    let dir = data_dir().ok_or("DEEPCF_DATA_DIR is not set")?;
    let files = DatasetFiles::new(&dir, name);
    if !files.exist() {
        return Err(format!("prepared dataset {name} not found in {}", dir.display()));
    }
    load_dataset(&files).map_err(|e| e.to_string())
}

fn require(n: u32, name: &str) -> CanonicalDataset {
    dataset(name).unwrap_or_else(|e| {
        verdict(n, false, &format!("{name} data unavailable: {e}"));
        unreachable!()
    })
}

/// Pre-training and fine-tuning budget for the real-data runs.
const PRETRAIN_EPOCHS: usize = 20;
const FINETUNE_EPOCHS: usize = 10;
const SUBSAMPLE_PRETRAIN_EPOCHS: usize = 10;
const SUBSAMPLE_FINETUNE_EPOCHS: usize = 5;

fn chain_spec(d: usize, seed: u64, epochs: usize) -> RunSpec {
    RunSpec {
        predictive_dim: d,
        train: TrainConfig {
            epochs,
            seed,
            negative_ratio: 4,
            ..TrainConfig::default()
        },
        ..RunSpec::default()
    }
}

fn finetune(spec: &RunSpec, epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        learning_rate: RunVariant::Fused.default_learning_rate(),
        ..spec.train.clone()
    }
}

#[test]
#[ignore = "needs DEEPCF_DATA_DIR with prepared real datasets"]
fn criterion_03_initial_loss_near_ln2_real_data() {
    let mut pass = true;
    let mut lines = Vec::new();
    for name in ["lastfm", "ml-1m"] {
        match dataset(name) {
            Ok(ds) => {
                let (ok, line) = loss_anchor_line(name, &initial_losses(&ds.split.train, 50_000));
                pass &= ok;
                lines.push(line);
            }
            Err(e) => {
                pass = false;
                lines.push(format!("{name}: unavailable ({e})"));
            }
        }
    }
    verdict(3, pass, &format!("real data, first 50000 epoch-1 instances; {}", lines.join("; ")));
}

#[test]
#[ignore = "needs the lastfm dataset; long run"]
fn criterion_06_lastfm_reproduction() {
    let ds = require(6, "lastfm");
    let spec = chain_spec(64, 0, PRETRAIN_EPOCHS);
    let chain = run_pretrained_chain(&ds, &spec, &finetune(&spec, FINETUNE_EPOCHS)).unwrap();
    let r = chain.fused.report.unwrap();
    verdict(
        6,
        r.hr >= 0.86 && r.ndcg >= 0.58,
        &format!("lastfm fused d=64: HR@10 {:.4} (>= 0.86), NDCG@10 {:.4} (>= 0.58)", r.hr, r.ndcg),
    );
}

#[test]
#[ignore = "needs the lastfm dataset; long run"]
fn criterion_07_pretraining_helps() {
    let ds = require(7, "lastfm");
    let mut rows = Vec::new();
    let mut pass = true;
    for seed in 0..3 {
        let spec = chain_spec(64, seed, PRETRAIN_EPOCHS);
        let with = run_pretrained_chain(&ds, &spec, &finetune(&spec, FINETUNE_EPOCHS))
            .unwrap()
            .fused
            .report
            .unwrap();
        let scratch_spec = RunSpec {
            variant: RunVariant::FusedScratch,
            ..chain_spec(64, seed, PRETRAIN_EPOCHS + FINETUNE_EPOCHS)
        };
        let without = run(&ds, &scratch_spec, None).unwrap().report.unwrap();
        pass &= with.hr > without.hr && with.ndcg > without.ndcg;
        rows.push(format!(
            "seed {seed}: pretrained {:.4}/{:.4} vs scratch {:.4}/{:.4}",
            with.hr, with.ndcg, without.hr, without.ndcg
        ));
    }
    verdict(7, pass, &format!("HR@10/NDCG@10 {}", rows.join("; ")));
}

#[test]
#[ignore = "needs DEEPCF_DATA_DIR with prepared real datasets"]
fn criterion_08_itempop_baseline() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, target) in [("lastfm", 0.6628), ("ml-1m", 0.4535)] {
        match dataset(name) {
            Ok(ds) => {
                let train = &ds.split.train;
                let hr = evaluate(&ItemPop::fit(train), train, &ds.tests, 10).unwrap().hr;
                let ok = (hr - target).abs() <= 0.03;
                pass &= ok;
                parts.push(format!("{name} HR@10 {hr:.4} (target {target} ± 0.03, {})", if ok { "ok" } else { "off" }));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name} unavailable ({e})"));
            }
        }
    }
    verdict(8, pass, &parts.join("; "));
}

#[test]
#[ignore = "needs the ml-1m-u20 dataset; long run"]
fn criterion_09_predictive_factor_trend() {
    let ds = require(9, "ml-1m-u20");
    let hr = |d: usize| {
        let spec = chain_spec(d, 0, SUBSAMPLE_PRETRAIN_EPOCHS);
        let chain = run_pretrained_chain(&ds, &spec, &finetune(&spec, SUBSAMPLE_FINETUNE_EPOCHS)).unwrap();
        chain.fused.report.unwrap().hr
    };
    let (hr8, hr64) = (hr(8), hr(64));
    verdict(
        9,
        hr64 - hr8 >= 0.02,
        &format!(
            "ml-1m 20% users ({} users): HR@10 d=8 {hr8:.4}, d=64 {hr64:.4}, gap {:.4} (>= 0.02)",
            ds.split.num_users(),
            hr64 - hr8
        ),
    );
}
