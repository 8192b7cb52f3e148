use std::fs;
use std::path::{Path, PathBuf};

use deepcf::data::{CanonicalDataset, DatasetFiles, RatingFormat};
use deepcf::eval::{evaluate, ItemPop, DEFAULT_K};
use deepcf::model::{load_checkpoint, ModelParams, DEFAULT_ALPHA};
use deepcf::pipeline::{
    load_dataset, prepare, run, sweep, sweep_series, sweep_table, Manifest, PrepareOptions, RunSpec,
    RunVariant, SweepAxis, SweepCell, FINETUNE_LR,
};
use deepcf::train::TrainConfig;
use log::{info, warn};

use crate::args::{EvaluateArgs, PrepareArgs, RunArgs, SweepArgs, TrainArgs};
use crate::config::ConfigFile;
use crate::error::CliError;

const RUN_KEYS: &[&str] = &[
    "dataset",
    "variant",
    "factors",
    "neg-ratio",
    "epochs",
    "lr",
    "batch-size",
    "seed",
    "out",
    "k",
    "eval-every",
    "patience",
    "alpha",
];

fn required<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Validation(format!("--{name} is required (flag or config key)")))
}

fn dataset_name(prefix: &Path) -> String {
    prefix
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn open_dataset(prefix: &Path) -> Result<CanonicalDataset, CliError> {
    let files = DatasetFiles::from_prefix(prefix);
    if !files.exist() {
        return Err(CliError::Validation(format!(
            "dataset {} is not prepared (expected {})",
            prefix.display(),
            files.train.display()
        )));
    }
    Ok(load_dataset(&files)?)
}

fn existing_file(path: Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    let path = required(path, name)?;
    if !path.is_file() {
        return Err(CliError::Validation(format!("--{name} {} does not exist", path.display())));
    }
    Ok(path)
}

fn check_matches(params: &ModelParams, ds: &CanonicalDataset, what: &str) -> Result<(), CliError> {
    let (m, n) = (ds.split.num_users(), ds.split.num_items());
    if (params.arch.num_users, params.arch.num_items) != (m, n) {
        return Err(CliError::Validation(format!(
            "{what} was trained on {}x{}, dataset is {m}x{n}",
            params.arch.num_users, params.arch.num_items
        )));
    }
    Ok(())
}

pub fn cmd_prepare(args: PrepareArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::optional(args.config.as_deref())?;
    cfg.check_keys(&[
        "input",
        "dataset",
        "format",
        "min-user",
        "min-item",
        "user-fraction",
        "seed",
        "out",
    ])?;
    let defaults = PrepareOptions::default();
    let input = existing_file(cfg.pick_opt(args.input, "input")?, "input")?;
    let dataset: PathBuf = required(cfg.pick_opt(args.dataset, "dataset")?, "dataset")?;
    let format_name: String = cfg.pick(args.format, "format", "double-colon".to_string())?;
    let format: RatingFormat = format_name.parse().map_err(CliError::invalid)?;
    let opts = PrepareOptions {
        format,
        min_user: cfg.pick(args.min_user, "min-user", defaults.min_user)?,
        min_item: cfg.pick(args.min_item, "min-item", defaults.min_item)?,
        user_fraction: cfg.pick(args.user_fraction, "user-fraction", defaults.user_fraction)?,
        seed: cfg.pick(args.seed, "seed", defaults.seed)?,
        test_negatives: defaults.test_negatives,
    };
    if !(opts.user_fraction > 0.0 && opts.user_fraction <= 1.0) {
        return Err(CliError::Validation(format!(
            "--user-fraction {} outside (0, 1]",
            opts.user_fraction
        )));
    }
    let files = DatasetFiles::from_prefix(&dataset);
    let out = cfg
        .pick_opt(args.out, "out")?
        .or_else(|| files.train.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));

    let stats = prepare(&input, &files, &opts)?;
    fs::write(&files.stats, stats.to_text()).map_err(deepcf::Error::from)?;
    let mut manifest = Manifest::new("prepare");
    manifest
        .set("input", input.display())
        .set("dataset", dataset.display())
        .set("format", &format_name)
        .set("min-user", opts.min_user)
        .set("min-item", opts.min_item)
        .set("user-fraction", opts.user_fraction)
        .set("seed", opts.seed)
        .set("test-negatives", opts.test_negatives);
    manifest.write(&out)?;
    print!("{}", stats.to_text());
    Ok(())
}

/// Fully resolved options of `train` and `sweep`.
struct Resolved {
    dataset: PathBuf,
    out: PathBuf,
    spec: RunSpec,
    manifest: Manifest,
}

fn resolve_run(command: &str, args: RunArgs, cfg: &ConfigFile) -> Result<Resolved, CliError> {
    let dataset: PathBuf = required(cfg.pick_opt(args.dataset, "dataset")?, "dataset")?;
    let out: PathBuf = required(cfg.pick_opt(args.out, "out")?, "out")?;
    let variant_name: String = cfg.pick(args.variant, "variant", RunVariant::Fused.to_string())?;
    let variant: RunVariant = variant_name.parse().map_err(CliError::invalid)?;
    let defaults = TrainConfig::default();
    let spec = RunSpec {
        variant,
        predictive_dim: cfg.pick(args.factors, "factors", RunSpec::default().predictive_dim)?,
        alpha: cfg.pick(args.alpha, "alpha", DEFAULT_ALPHA)?,
        train: TrainConfig {
            batch_size: cfg.pick(args.batch_size, "batch-size", defaults.batch_size)?,
            learning_rate: cfg.pick(args.lr, "lr", variant.default_learning_rate())?,
            epochs: cfg.pick(args.epochs, "epochs", defaults.epochs)?,
            negative_ratio: cfg.pick(args.neg_ratio, "neg-ratio", defaults.negative_ratio)?,
            seed: cfg.pick(args.seed, "seed", defaults.seed)?,
            eval_every: cfg.pick(args.eval_every, "eval-every", defaults.eval_every)?,
            patience: cfg.pick_opt(args.patience, "patience")?,
            k: cfg.pick(args.k, "k", DEFAULT_K)?,
            ..defaults
        },
    };
    if spec.predictive_dim == 0 {
        return Err(CliError::Validation("--factors must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&spec.alpha) {
        return Err(CliError::Validation(format!("--alpha {} outside [0, 1]", spec.alpha)));
    }
    let config = spec.effective_config();
    config.validate().map_err(CliError::invalid)?;

    let mut manifest = Manifest::new(command);
    manifest
        .set("dataset", dataset.display())
        .set("out", out.display())
        .set("variant", variant)
        .set("factors", spec.predictive_dim)
        .set("neg-ratio", config.negative_ratio)
        .set("epochs", config.epochs)
        .set("lr", config.learning_rate)
        .set("batch-size", config.batch_size)
        .set("optimizer", config.optimizer)
        .set("seed", config.seed)
        .set("k", config.k)
        .set("eval-every", config.eval_every)
        .set("patience", config.patience.map_or("none".to_string(), |p| p.to_string()))
        .set("alpha", spec.alpha);
    Ok(Resolved {
        dataset,
        out,
        spec,
        manifest,
    })
}

pub fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::optional(args.run.config.as_deref())?;
    let mut keys = RUN_KEYS.to_vec();
    keys.extend(["rl-checkpoint", "ml-checkpoint"]);
    cfg.check_keys(&keys)?;
    let rl_path: Option<PathBuf> = cfg.pick_opt(args.rl_checkpoint, "rl-checkpoint")?;
    let ml_path: Option<PathBuf> = cfg.pick_opt(args.ml_checkpoint, "ml-checkpoint")?;
    let Resolved {
        dataset,
        out,
        spec,
        mut manifest,
    } = resolve_run("train", args.run, &cfg)?;

    let pretrained_paths = if spec.variant == RunVariant::Fused {
        let rl = existing_file(rl_path, "rl-checkpoint")?;
        let ml = existing_file(ml_path, "ml-checkpoint")?;
        manifest.set("rl-checkpoint", rl.display()).set("ml-checkpoint", ml.display());
        Some((rl, ml))
    } else {
        None
    };
    let ds = open_dataset(&dataset)?;
    let pretrained = match pretrained_paths {
        Some((rl, ml)) => {
            let rl = load_checkpoint(&rl)?;
            let ml = load_checkpoint(&ml)?;
            check_matches(&rl, &ds, "rl checkpoint")?;
            check_matches(&ml, &ds, "ml checkpoint")?;
            Some((rl, ml))
        }
        None => None,
    };

    manifest.write(&out)?;
    let outcome = run(&ds, &spec, pretrained)?;
    let name = spec.variant.to_string();
    deepcf::pipeline::write_run(&out, &name, &outcome, &dataset_name(&dataset), spec.train.seed)?;
    match &outcome.report {
        Some(r) => println!(
            "{name}\thr@{k}\t{:.6}\tndcg@{k}\t{:.6}\tbest_epoch\t{}",
            r.hr,
            r.ndcg,
            outcome.history.best_epoch.unwrap_or(0),
            k = r.k
        ),
        None => println!("{name}\tnot evaluated"),
    }
    Ok(())
}

pub fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::optional(args.config.as_deref())?;
    cfg.check_keys(&["dataset", "checkpoint", "itempop", "k", "out"])?;
    let dataset: PathBuf = required(cfg.pick_opt(args.dataset, "dataset")?, "dataset")?;
    let out: PathBuf = required(cfg.pick_opt(args.out, "out")?, "out")?;
    let k: usize = cfg.pick(args.k, "k", DEFAULT_K)?;
    if k == 0 {
        return Err(CliError::Validation("--k must be >= 1".into()));
    }
    let itempop = args.itempop || cfg.get::<bool>("itempop")?.unwrap_or(false);
    let checkpoint: Option<PathBuf> = cfg.pick_opt(args.checkpoint, "checkpoint")?;
    let mut manifest = Manifest::new("evaluate");
    manifest.set("dataset", dataset.display()).set("k", k);

    let ds = open_dataset(&dataset)?;
    let train = &ds.split.train;
    let (name, report) = match (itempop, checkpoint) {
        (true, None) => {
            manifest.set("scorer", "itempop");
            ("itempop".to_string(), evaluate(&ItemPop::fit(train), train, &ds.tests, k)?)
        }
        (false, Some(path)) => {
            if !path.is_file() {
                return Err(CliError::Validation(format!("--checkpoint {} does not exist", path.display())));
            }
            manifest.set("scorer", "checkpoint").set("checkpoint", path.display());
            let params = load_checkpoint(&path)?;
            check_matches(&params, &ds, "checkpoint")?;
            let name = path
                .file_stem()
                .map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned());
            (name, evaluate(&params, train, &ds.tests, k)?)
        }
        (true, Some(_)) => {
            return Err(CliError::Validation("--itempop and --checkpoint are exclusive".into()))
        }
        (false, None) => return Err(CliError::Validation("pass --checkpoint or --itempop".into())),
    };
    manifest.write(&out)?;
    let report = report.with_meta(&name, &dataset_name(&dataset), 0);
    fs::write(out.join(format!("{name}.report")), report.to_text()).map_err(deepcf::Error::from)?;
    println!("{name}\thr@{k}\t{:.6}\tndcg@{k}\t{:.6}", report.hr, report.ndcg);
    Ok(())
}

fn parse_values(raw: &str) -> Result<Vec<usize>, CliError> {
    let values: Vec<usize> = raw
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("invalid sweep value {v:?}")))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(CliError::Validation("--values is empty".into()));
    }
    Ok(values)
}

pub fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::optional(args.run.config.as_deref())?;
    let mut keys = RUN_KEYS.to_vec();
    keys.extend(["axis", "values", "finetune-epochs", "finetune-lr", "jobs"]);
    cfg.check_keys(&keys)?;
    let axis_name: String = required(cfg.pick_opt(args.axis, "axis")?, "axis")?;
    let axis: SweepAxis = axis_name.parse().map_err(CliError::invalid)?;
    let values = parse_values(&required(cfg.pick_opt::<String>(args.values, "values")?, "values")?)?;
    let jobs: usize = cfg.pick(args.jobs, "jobs", 1)?;
    let finetune_epochs_flag = cfg.pick_opt(args.finetune_epochs, "finetune-epochs")?;
    let finetune_lr: f64 = cfg.pick(args.finetune_lr, "finetune-lr", FINETUNE_LR)?;
    let explicit_lr: Option<f64> = cfg.pick_opt(args.run.lr, "lr")?;
    let Resolved {
        dataset,
        out,
        spec,
        mut manifest,
    } = resolve_run("sweep", args.run, &cfg)?;
    if jobs == 0 {
        return Err(CliError::Validation("--jobs must be >= 1".into()));
    }
    if axis == SweepAxis::PredictiveDim && values.contains(&0) {
        return Err(CliError::Validation("factor values must be >= 1".into()));
    }

    // For `fused` the run flags configure pre-training; fine-tuning has its own.
    let mut base = spec.clone();
    let finetune = TrainConfig {
        epochs: finetune_epochs_flag.unwrap_or(spec.train.epochs),
        learning_rate: finetune_lr,
        ..spec.train.clone()
    };
    if spec.variant == RunVariant::Fused {
        base.train.learning_rate = explicit_lr.unwrap_or(RunVariant::Rl.default_learning_rate());
        manifest
            .set("lr", base.train.learning_rate)
            .set("optimizer", "adam (pre-training), sgd (fine-tuning)")
            .set("finetune-epochs", finetune.epochs)
            .set("finetune-lr", finetune.learning_rate);
    }
    manifest
        .set("axis", axis)
        .set("values", values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
        .set("jobs", jobs);

    let ds = open_dataset(&dataset)?;
    manifest.write(&out)?;
    let cells = run_cells(&ds, &base, &finetune, axis, &values, jobs);
    let failed = cells.iter().filter(|c| c.result.is_err()).count();
    if failed > 0 {
        warn!("{failed} of {} sweep cells failed", cells.len());
    }
    let k = spec.train.k;
    let table = sweep_table(axis, k, &cells);
    fs::write(out.join(format!("sweep_{axis}.tsv")), &table).map_err(deepcf::Error::from)?;
    fs::write(out.join(format!("sweep_{axis}.series.tsv")), sweep_series(axis, k, &cells))
        .map_err(deepcf::Error::from)?;
    print!("{table}");
    Ok(())
}

/// Cells are independent runs on the shared split, so running them on
/// separate threads gives the same results as running them in order.
fn run_cells(
    ds: &CanonicalDataset,
    base: &RunSpec,
    finetune: &TrainConfig,
    axis: SweepAxis,
    values: &[usize],
    jobs: usize,
) -> Vec<SweepCell> {
    if jobs <= 1 || values.len() <= 1 {
        return sweep(ds, base, finetune, axis, values);
    }
    info!("running {} cells on {jobs} threads", values.len());
    let chunk = values.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = values
            .chunks(chunk)
            .map(|part| s.spawn(move || sweep(ds, base, finetune, axis, part)))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values_parse() {
        assert_eq!(parse_values("8, 16,32").unwrap(), vec![8, 16, 32]);
        assert!(parse_values("8,,16").is_err());
        assert!(parse_values("x").is_err());
    }

    #[test]
    fn run_resolution_uses_variant_learning_rate() {
        let cfg = ConfigFile::parse("dataset = d\nout = o\nvariant = fused", None).unwrap();
        let empty = || RunArgs {
            dataset: None,
            variant: None,
            factors: None,
            neg_ratio: None,
            epochs: None,
            lr: None,
            batch_size: None,
            seed: None,
            out: None,
            k: None,
            eval_every: None,
            patience: None,
            alpha: None,
            config: None,
        };
        let r = resolve_run("train", empty(), &cfg).unwrap();
        assert_eq!(r.spec.train.learning_rate, FINETUNE_LR);
        assert_eq!(r.manifest.get("optimizer"), Some("sgd"));
        let r = resolve_run("train", RunArgs { lr: Some(0.2), ..empty() }, &cfg).unwrap();
        assert_eq!(r.spec.train.learning_rate, 0.2);
    }
}
