use std::time::Instant;

use log::{debug, info};
use rand::seq::SliceRandom;

use crate::data::{sample_train_negatives, InteractionMatrix, TestCase, TrainInstance};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::kernel::{adam_step, sgd_step, AdamConfig, AdamState};
use crate::model::{fuse_pretrained, ArchSpec, Gradients, ModelParams, Variant, INIT_STDDEV};
use crate::rng::{derive, Stream};

use super::{bce_from_logit, bce_grad_from_logit, EpochRecord, OptimizerKind, TrainConfig, TrainHistory};

#[derive(Debug, Clone)]
pub enum OptimizerState {
    Adam(AdamState),
    Sgd,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, params: &ModelParams) -> Self {
        match kind {
            OptimizerKind::Adam => {
                OptimizerState::Adam(AdamState::new(AdamConfig::default(), &params.tensor_sizes()))
            }
            OptimizerKind::Sgd => OptimizerState::Sgd,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients, lr: f64) -> Result<()> {
        let views = grads.views();
        let mut tensors = params.tensors_mut();
        match self {
            OptimizerState::Adam(state) => adam_step(&mut tensors, &views, state, lr),
            OptimizerState::Sgd => sgd_step(&mut tensors, &views, lr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub instances: usize,
    pub batches: usize,
}

fn check_dims(params: &ModelParams, train: &InteractionMatrix) -> Result<()> {
    if (params.arch.num_users, params.arch.num_items) != (train.num_users(), train.num_items()) {
        return Err(Error::ArchMismatch(format!(
            "model built for {}x{}, training matrix is {}x{}",
            params.arch.num_users,
            params.arch.num_items,
            train.num_users(),
            train.num_items()
        )));
    }
    Ok(())
}

fn batch_inputs<'a>(
    train: &'a InteractionMatrix,
    batch: &[TrainInstance],
) -> (Vec<&'a [u32]>, Vec<&'a [u32]>) {
    batch
        .iter()
        .map(|x| (train.row(x.user as usize), train.col(x.item as usize)))
        .unzip()
}

/// Mean loss of `instances` under `params`, without updating anything.
pub fn mean_loss(
    params: &ModelParams,
    train: &InteractionMatrix,
    instances: &[TrainInstance],
    batch_size: usize,
) -> Result<f64> {
    check_dims(params, train)?;
    if instances.is_empty() {
        return Err(Error::InvalidArgument("no instances".into()));
    }
    let mut total = 0.0;
    for batch in instances.chunks(batch_size.max(1)) {
        let (users, items) = batch_inputs(train, batch);
        let cache = params.forward(&users, &items)?;
        total += cache
            .logits()
            .iter()
            .zip(batch)
            .map(|(&z, x)| bce_from_logit(z, x.label as f64))
            .sum::<f64>();
    }
    Ok(total / instances.len() as f64)
}

/// Training instances of epoch `epoch` (1-based): every positive plus freshly
/// sampled negatives, shuffled. Both draws use streams derived from the seed
/// and epoch, so a run can be replayed.
pub fn epoch_instances(train: &InteractionMatrix, config: &TrainConfig, epoch: usize) -> Vec<TrainInstance> {
    let mut rng = derive(config.seed, Stream::TrainNegatives, epoch as u64);
    let mut instances = sample_train_negatives(train, config.negative_ratio, &mut rng).instances;
    instances.shuffle(&mut derive(config.seed, Stream::Shuffle, epoch as u64));
    instances
}

/// One pass over the epoch's instances in mini-batches, one optimizer step
/// per batch on the batch-mean gradient. Returns the mean per-instance loss
/// measured before each batch's update.
pub fn train_epoch(
    params: &mut ModelParams,
    train: &InteractionMatrix,
    config: &TrainConfig,
    optimizer: &mut OptimizerState,
    epoch: usize,
) -> Result<EpochStats> {
    config.validate()?;
    check_dims(params, train)?;
    let instances = epoch_instances(train, config, epoch);
    let mut grads = Gradients::zeros(params);
    let mut total = 0.0;
    let mut dlogits = Vec::with_capacity(config.batch_size.min(instances.len()));
    let mut batches = 0;
    for (b, batch) in instances.chunks(config.batch_size).enumerate() {
        let (users, items) = batch_inputs(train, batch);
        let cache = params.forward(&users, &items)?;
        let scale = 1.0 / batch.len() as f64;
        let mut batch_loss = 0.0;
        dlogits.clear();
        for (&z, x) in cache.logits().iter().zip(batch) {
            let y = x.label as f64;
            batch_loss += bce_from_logit(z, y);
            dlogits.push(bce_grad_from_logit(z, y) * scale);
        }
        if !batch_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: b });
        }
        total += batch_loss;
        grads.clear();
        params.backward(&cache, &dlogits, &mut grads)?;
        optimizer.step(params, &grads, config.learning_rate)?;
        batches += 1;
    }
    let mean_loss = if instances.is_empty() {
        0.0
    } else {
        total / instances.len() as f64
    };
    Ok(EpochStats {
        mean_loss,
        instances: instances.len(),
        batches,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best evaluated epoch, or the final ones when
    /// nothing was evaluated.
    pub params: ModelParams,
    pub history: TrainHistory,
    /// Report of the kept parameters, when evaluated.
    pub report: Option<EvalReport>,
}

/// Trains `params` from their current values, evaluating on `tests` every
/// `config.eval_every` epochs (and after the last one) and keeping the
/// parameters with the highest HR@K. Ties keep the earlier epoch.
pub fn train(
    mut params: ModelParams,
    train: &InteractionMatrix,
    tests: &[TestCase],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    check_dims(&params, train)?;
    let evaluating = config.eval_every > 0 && !tests.is_empty();
    let mut history = TrainHistory::default();
    let mut best: Option<(ModelParams, EvalReport)> = None;
    let mut stale = 0;

    if evaluating {
        let report = evaluate(&params, train, tests, config.k)?;
        info!("epoch 0: HR@{k} {:.4} NDCG@{k} {:.4}", report.hr, report.ndcg, k = config.k);
        history.initial = Some((report.hr, report.ndcg));
        history.best_epoch = Some(0);
        best = Some((params.clone(), report));
    }

    let mut optimizer = OptimizerState::new(config.optimizer, &params);
    for epoch in 1..=config.epochs {
        let start = Instant::now();
        let stats = train_epoch(&mut params, train, config, &mut optimizer, epoch)?;
        debug!("epoch {epoch}: {} instances in {} batches", stats.instances, stats.batches);
        let mut record = EpochRecord {
            epoch,
            loss: stats.mean_loss,
            hr: None,
            ndcg: None,
            seconds: 0.0,
        };
        if evaluating && (epoch % config.eval_every == 0 || epoch == config.epochs) {
            let report = evaluate(&params, train, tests, config.k)?;
            record.hr = Some(report.hr);
            record.ndcg = Some(report.ndcg);
            let improved = best.as_ref().is_none_or(|(_, b)| report.hr > b.hr);
            if improved {
                history.best_epoch = Some(epoch);
                best = Some((params.clone(), report));
                stale = 0;
            } else {
                stale += 1;
            }
        }
        record.seconds = start.elapsed().as_secs_f64();
        info!(
            "epoch {epoch}: loss {:.6} HR {} NDCG {} ({:.1}s)",
            record.loss,
            record.hr.map_or("-".into(), |v| format!("{v:.4}")),
            record.ndcg.map_or("-".into(), |v| format!("{v:.4}")),
            record.seconds
        );
        history.records.push(record);
        if config.patience.is_some_and(|p| stale >= p) {
            info!("no HR improvement in {stale} evaluations; stopping");
            break;
        }
    }

    Ok(match best {
        Some((params, report)) => TrainOutcome {
            params,
            history,
            report: Some(report),
        },
        None => TrainOutcome {
            params,
            history,
            report: None,
        },
    })
}

/// Which model to train and how it starts.
#[derive(Debug, Clone)]
pub enum RunKind {
    Rl,
    Ml,
    /// Fused architecture from random initialization, trained with the
    /// configured optimizer.
    FusedScratch,
    /// Fused from pre-trained sub-models, fine-tuned with the configured
    /// optimizer (vanilla SGD in the standard recipe).
    FusedPretrained {
        rl: Box<ModelParams>,
        ml: Box<ModelParams>,
        alpha: f64,
    },
}

impl RunKind {
    pub fn variant(&self) -> Variant {
        match self {
            RunKind::Rl => Variant::Rl,
            RunKind::Ml => Variant::Ml,
            _ => Variant::Fused,
        }
    }

    /// Starting parameters. Random ones come from the seed's init stream.
    pub fn initial_params(&self, train: &InteractionMatrix, predictive_dim: usize, seed: u64) -> Result<ModelParams> {
        match self {
            RunKind::FusedPretrained { rl, ml, alpha } => fuse_pretrained(rl, ml, *alpha),
            other => {
                let arch = ArchSpec::new(other.variant(), train.num_users(), train.num_items(), predictive_dim);
                let stream = match other.variant() {
                    Variant::Rl => 1,
                    Variant::Ml => 2,
                    Variant::Fused => 3,
                };
                ModelParams::init(arch, INIT_STDDEV, &mut derive(seed, Stream::Init, stream))
            }
        }
    }
}
