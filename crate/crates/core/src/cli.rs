//! Command-line interface: `convert`, `train`, `sparsify`, `evaluate`,
//! `export` and `report`.
//!
//! Every command that writes files writes them into an output directory
//! together with `config.json`, the resolved run configuration. Nothing is
//! left behind when a command fails.
//!
//! Exit codes: 0 ok, 2 input error, 3 state error (e.g. an oblique model
//! where an axis-parallel one is needed), 4 numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checkpoint::{ensemble_from_json, ensemble_to_json};
use crate::convert::export_ensemble;
use crate::data::{load_csv, load_matrix, split, CsvSchema, Dataset, Encoding, Manifest, Standardizer};
use crate::ensemble::{convert_ensemble, ensemble_architecture, single_tree_architecture, PredictMode, TreeEnsemble};
use crate::error::{Error, Result};
use crate::ingest::{parse_canonical_json, parse_gbdt_text, to_canonical_json};
use crate::metrics::{feature_importance_split, kendall_tau, tournament, ImportanceVector};
use crate::model::CanonicalTreeModel;
use crate::sparsify::{two_stage_pipeline, GateMode, PipelineConfig};
use crate::train::{history_jsonl, train, Init, OptimizerKind, TauSchedule, TrainConfig};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STATE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "treegrad", version, about = "Neural decision tree ensembles from gradient boosted trees")]
pub struct Cli {
    /// Worker threads for per-tree work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a tree model dump into a neural ensemble checkpoint.
    Convert(ConvertArgs),
    /// Train a neural ensemble (warm start or random reinit).
    Train(TrainArgs),
    /// Oblique training with gates, projection, axis-parallel fine-tuning.
    Sparsify(SparsifyArgs),
    /// Accuracy, loss and split importance of a model on a dataset.
    Evaluate(EvaluateArgs),
    /// Write an axis-parallel checkpoint back out as a canonical tree model.
    Export(ExportArgs),
    /// Render accuracy tables with wins, mean reciprocal rank and Kendall's tau.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFormat {
    /// Sniff the file contents.
    Auto,
    /// Gradient boosting text dump.
    Text,
    /// Canonical tree JSON.
    Json,
    /// Neural ensemble checkpoint.
    Checkpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Soft,
    Hard,
}

impl From<Mode> for PredictMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Soft => PredictMode::Soft,
            Mode::Hard => PredictMode::Hard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Optim {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    All,
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateArg {
    Expected,
    Sampled,
    GumbelSt,
    Deterministic,
}

impl From<GateArg> for GateMode {
    fn from(g: GateArg) -> Self {
        match g {
            GateArg::Expected => GateMode::Expected,
            GateArg::Sampled => GateMode::Sampled,
            GateArg::GumbelSt => GateMode::GumbelSt,
            GateArg::Deterministic => GateMode::Deterministic,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Model file: text dump, canonical JSON or checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelFormat::Auto)]
    pub format: ModelFormat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "manifest")]
    pub data: Option<PathBuf>,
    /// Label column of `--data`.
    #[arg(long, requires = "data")]
    pub label: Option<String>,
    /// Categorical columns of `--data`, comma separated.
    #[arg(long, value_delimiter = ',', requires = "data")]
    pub categorical: Vec<String>,
    #[arg(long, value_enum, default_value_t = EncodingArg::Ordinal)]
    pub encoding: EncodingArg,
    /// Dataset manifest; use with `--dataset`.
    #[arg(long, requires = "dataset")]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    pub dataset: Option<String>,
    /// Held-out fraction; 0 trains and evaluates on everything.
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Plain instead of stratified split.
    #[arg(long)]
    pub no_stratify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingArg {
    Ordinal,
    Onehot,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Feature-only CSV used to calibrate split sharpness and to check fidelity.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Keep only the architecture and redraw all parameters.
    #[arg(long)]
    pub reinit: bool,
    /// Largest accepted tree when building from a dump.
    #[arg(long, default_value_t = 32)]
    pub max_leaves: usize,
    /// Trees taken from a dump.
    #[arg(long, default_value_t = 100)]
    pub num_trees: usize,
    /// One tree with a leaf vector per class instead of an ensemble.
    #[arg(long)]
    pub single_tree: bool,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Temperature: used for conversion and held fixed during training.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Anneal the temperature from 1.0 to 0.1 instead.
    #[arg(long, conflicts_with = "tau")]
    pub anneal: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Optim::Adam)]
    pub optimizer: Optim,
    /// Train on raw instead of standardized features.
    #[arg(long)]
    pub no_standardize: bool,
    /// Routing used for reported accuracies.
    #[arg(long, value_enum, default_value_t = Mode::Soft)]
    pub eval_mode: Mode,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SparsifyArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    /// l0 weight per tree; the penalty uses this divided by the tree count.
    #[arg(long, default_value_t = 0.01)]
    pub l0: f64,
    /// l1 weight per tree, scaled like `--l0`.
    #[arg(long, default_value_t = 0.001)]
    pub l1: f64,
    #[arg(long, value_enum, default_value_t = GateArg::Sampled)]
    pub gate_mode: GateArg,
    /// Fine-tuning epochs (default: same as `--epochs`).
    #[arg(long)]
    pub fine_tune_epochs: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Subset::All)]
    pub subset: Subset,
    #[arg(long, value_enum, default_value_t = Mode::Soft)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Output directory for `metrics.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExportArgs {
    /// Axis-parallel ensemble checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Accuracy table JSON.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Accuracy tables: one section per model family setting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub datasets: Vec<String>,
    pub sections: Vec<TableSection>,
    /// Split-importance vectors to compare per section and dataset.
    #[serde(default)]
    pub importance: Vec<ImportanceEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSection {
    pub name: String,
    pub models: Vec<String>,
    /// `accuracy[model][dataset]`.
    pub accuracy: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub section: String,
    pub dataset: String,
    pub vectors: BTreeMap<String, ImportanceVector>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Oblique { .. } | Error::ObliqueImportance { .. } | Error::NoSelectableFeature { .. } => EXIT_STATE,
        Error::NonFiniteLoss { .. } | Error::UndefinedCorrelation(_) => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command) -> Result<()> {
    let out_dir = match cmd {
        Command::Convert(a) => Some(&a.out),
        Command::Train(a) => Some(&a.fit.out),
        Command::Sparsify(a) => Some(&a.fit.out),
        Command::Evaluate(a) => a.out.as_ref(),
        Command::Export(a) => Some(&a.out),
        Command::Report(a) => a.out.as_ref(),
    };
    let mut out = Outputs::new(out_dir.map(PathBuf::as_path));
    let result = match cmd {
        Command::Convert(a) => cmd_convert(a, &mut out),
        Command::Train(a) => cmd_train(a, &mut out),
        Command::Sparsify(a) => cmd_sparsify(a, &mut out),
        Command::Evaluate(a) => cmd_evaluate(a, &mut out),
        Command::Export(a) => cmd_export(a, &mut out),
        Command::Report(a) => cmd_report(a, &mut out),
    };
    if result.is_err() {
        out.discard();
    }
    result
}

/// Files written by one command, removed again if it fails.
struct Outputs {
    dir: Option<PathBuf>,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: Option<&Path>) -> Self {
        Outputs {
            dir: dir.map(Path::to_path_buf),
            created_dir: false,
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        if !dir.exists() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            self.created_dir = true;
        }
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// `config.json`: the command, its resolved arguments and whatever
    /// else was derived from them. The timestamp is the only field that
    /// changes between identical runs.
    fn config<A: Serialize>(&mut self, command: &str, args: &A, resolved: serde_json::Value) -> Result<()> {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        self.write_json(
            "config.json",
            &json!({
                "command": command,
                "args": args,
                "resolved": resolved,
                "created_unix": created,
            }),
        )
    }

    fn discard(&mut self) {
        for p in self.written.drain(..) {
            let _ = std::fs::remove_file(p);
        }
        if self.created_dir {
            if let Some(dir) = &self.dir {
                let _ = std::fs::remove_dir_all(dir);
            }
        }
    }
}

enum Loaded {
    Trees(CanonicalTreeModel),
    Neural(TreeEnsemble),
}

fn load_model(args: &ModelArgs) -> Result<Loaded> {
    let path = &args.model;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = match args.format {
        ModelFormat::Auto => sniff(&bytes),
        f => f,
    };
    Ok(match format {
        ModelFormat::Text => Loaded::Trees(parse_gbdt_text(&bytes)?),
        ModelFormat::Json => Loaded::Trees(parse_canonical_json(&bytes)?),
        _ => Loaded::Neural(ensemble_from_json(&bytes)?),
    })
}

fn sniff(bytes: &[u8]) -> ModelFormat {
    let text = String::from_utf8_lossy(&bytes[..bytes.len().min(4096)]);
    if !text.trim_start().starts_with('{') {
        return ModelFormat::Text;
    }
    // checkpoints carry matrices under "W"; canonical models carry "nodes"
    if text.contains("\"W\"") {
        ModelFormat::Checkpoint
    } else {
        ModelFormat::Json
    }
}

fn load_data(args: &DataArgs) -> Result<Dataset> {
    if let (Some(m), Some(name)) = (&args.manifest, &args.dataset) {
        return Manifest::load(m)?.load_dataset(name);
    }
    let (Some(path), Some(label)) = (&args.data, &args.label) else {
        return Err(Error::InvalidArgument(
            "give --data with --label, or --manifest with --dataset".into(),
        ));
    };
    let schema = CsvSchema {
        label: label.clone(),
        categorical: args.categorical.clone(),
        encoding: match args.encoding {
            EncodingArg::Ordinal => Encoding::Ordinal,
            EncodingArg::Onehot => Encoding::Onehot,
        },
    };
    load_csv(path, &schema)
}

/// Train and optional test part of the data.
fn split_data(args: &DataArgs, data: Dataset) -> Result<(Dataset, Option<Dataset>)> {
    if args.test_fraction == 0.0 {
        return Ok((data, None));
    }
    let s = split(&data, args.test_fraction, args.split_seed, !args.no_stratify)?;
    if s.fell_back {
        eprintln!("warning: a class has fewer than two samples, split is not stratified");
    }
    let (train, test) = s.apply(&data);
    Ok((train, Some(test)))
}

fn cmd_convert(a: &ConvertArgs, out: &mut Outputs) -> Result<()> {
    let Loaded::Trees(m) = load_model(&a.model)? else {
        return Err(Error::InvalidArgument("convert expects a tree model dump, not a checkpoint".into()));
    };
    let calib = a.calib.as_ref().map(load_matrix).transpose()?;
    let e = convert_ensemble(&m, calib.as_ref(), a.tau)?;
    let fidelity = match &calib {
        Some(x) => {
            let ours = e.predict_classes(x, PredictMode::Hard)?;
            let mut agree = 0;
            for (row, &c) in x.outer_iter().zip(&ours) {
                agree += (m.predict_class(row.as_slice().expect("row"))? == c) as usize;
            }
            let f = agree as f64 / x.nrows() as f64;
            println!("fidelity: {f:?}");
            Some(f)
        }
        None => {
            println!("fidelity: not measured (no --calib samples)");
            None
        }
    };
    out.write("model.json", ensemble_to_json(&e))?;
    out.write_json(
        "metrics.json",
        &json!({"trees": e.trees.len(), "num_class": e.num_class, "fidelity": fidelity}),
    )?;
    out.config("convert", a, json!({"tau": a.tau}))
}

/// Builds the starting ensemble of `train` / `sparsify`.
fn initial_model(f: &FitArgs, data: &Dataset) -> Result<TreeEnsemble> {
    let tau = f.tau.unwrap_or(0.1);
    let e = match load_model(&f.model)? {
        Loaded::Neural(e) => e,
        Loaded::Trees(m) => {
            if f.single_tree {
                single_tree_architecture(&m, f.max_leaves, tau)?
            } else {
                if let Some((t, tree)) = m.trees.iter().enumerate().find(|(_, t)| t.leaf_count() > f.max_leaves) {
                    return Err(Error::InvalidArgument(format!(
                        "tree {t} has {} leaves, more than --max-leaves {}",
                        tree.leaf_count(),
                        f.max_leaves
                    )));
                }
                ensemble_architecture(&m, Some(f.num_trees), tau)?
            }
        }
    };
    if e.feature_count() != data.feature_count() {
        return Err(Error::Shape(format!(
            "model reads {} features, data has {}",
            e.feature_count(),
            data.feature_count()
        )));
    }
    if e.num_class != data.class_count().max(2) {
        return Err(Error::Shape(format!(
            "model has {} classes, data has {}",
            e.num_class,
            data.class_count()
        )));
    }
    Ok(e)
}

fn train_config(f: &FitArgs) -> TrainConfig {
    TrainConfig {
        learning_rate: f.lr,
        batch_size: f.batch_size,
        epochs: f.epochs,
        tau: if f.anneal {
            Some(TauSchedule::anneal())
        } else {
            f.tau.map(TauSchedule::constant)
        },
        seed: f.seed,
        optimizer: match f.optimizer {
            Optim::Adam => OptimizerKind::default(),
            Optim::Sgd => OptimizerKind::Sgd,
        },
        init: if f.reinit { Init::Reinit } else { Init::WarmStart },
        ..TrainConfig::default()
    }
}

/// Data, split and standardizer shared by `train` and `sparsify`.
struct Prepared {
    train: Dataset,
    test: Option<Dataset>,
    standardizer: Standardizer,
}

fn prepare(f: &FitArgs) -> Result<(TreeEnsemble, Prepared)> {
    let data = load_data(&f.data)?;
    let mut model = initial_model(f, &data)?;
    let (train, test) = split_data(&f.data, data)?;
    let standardizer = if f.no_standardize {
        Standardizer::identity(train.feature_count())
    } else {
        Standardizer::fit(&train.x)
    };
    model.to_standardized(&standardizer);
    let p = Prepared {
        train: standardizer.transform(&train),
        test: test.map(|t| standardizer.transform(&t)),
        standardizer,
    };
    Ok((model, p))
}

fn accuracies(e: &TreeEnsemble, p: &Prepared, mode: PredictMode) -> Result<serde_json::Value> {
    Ok(json!({
        "mode": mode,
        "train_acc": e.accuracy(&p.train, mode)?,
        "test_acc": p.test.as_ref().map(|t| e.accuracy(t, mode)).transpose()?,
    }))
}

fn cmd_train(a: &TrainArgs, out: &mut Outputs) -> Result<()> {
    let f = &a.fit;
    let (model, p) = prepare(f)?;
    let cfg = train_config(f);
    let (mut e, history) = train(model, &p.train, &cfg)?;
    let metrics = accuracies(&e, &p, f.eval_mode.into())?;
    println!("{metrics}");
    e.fold_standardizer(&p.standardizer);
    out.write("model.json", ensemble_to_json(&e))?;
    out.write("history.jsonl", history_jsonl(&history))?;
    out.write_json("metrics.json", &metrics)?;
    out.config(
        "train",
        a,
        json!({"train": cfg, "standardizer": p.standardizer, "trees": e.trees.len()}),
    )
}

fn cmd_sparsify(a: &SparsifyArgs, out: &mut Outputs) -> Result<()> {
    let f = &a.fit;
    let (model, p) = prepare(f)?;
    let per_tree = 1.0 / model.trees.len() as f64;
    let base = train_config(f);
    let cfg = PipelineConfig {
        oblique: TrainConfig {
            lambda_l0: a.l0 * per_tree,
            lambda_l1: a.l1 * per_tree,
            gate_mode: Some(a.gate_mode.into()),
            ..base.clone()
        },
        fine_tune: TrainConfig {
            init: Init::WarmStart,
            epochs: a.fine_tune_epochs.unwrap_or(f.epochs),
            ..base
        },
        eval_mode: f.eval_mode.into(),
    };
    let (mut e, report) = two_stage_pipeline(model, &p.train, p.test.as_ref(), &cfg)?;
    for s in &report.stages {
        println!(
            "{}: train {:.4} test {} active gates {}",
            s.stage,
            s.train_acc,
            s.test_acc.map_or("-".into(), |v| format!("{v:.4}")),
            s.active_gates.map_or("-".into(), |v| format!("{v:.3}"))
        );
    }
    e.fold_standardizer(&p.standardizer);
    let importance = feature_importance_split(&e)?;
    out.write("model.json", ensemble_to_json(&e))?;
    out.write("oblique_history.jsonl", history_jsonl(&report.oblique_history))?;
    out.write("fine_tune_history.jsonl", history_jsonl(&report.fine_tune_history))?;
    out.write_json(
        "metrics.json",
        &json!({"stages": report.stages, "importance": importance, "axis_parallel": e.is_axis_parallel()}),
    )?;
    out.config(
        "sparsify",
        a,
        json!({"pipeline": cfg, "standardizer": p.standardizer, "trees": e.trees.len()}),
    )
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut Outputs) -> Result<()> {
    let e = match load_model(&a.model)? {
        Loaded::Neural(e) => e,
        Loaded::Trees(m) => convert_ensemble(&m, None, a.tau)?,
    };
    let data = load_data(&a.data)?;
    let data = match a.subset {
        Subset::All => data,
        s => {
            let (train, test) = split_data(&a.data, data)?;
            match (s, test) {
                (Subset::Test, Some(t)) => t,
                (Subset::Test, None) => {
                    return Err(Error::InvalidArgument("--subset test needs a nonzero --test-fraction".into()))
                }
                _ => train,
            }
        }
    };
    if data.feature_count() != e.feature_count() {
        return Err(Error::Shape(format!(
            "model reads {} features, data has {}",
            e.feature_count(),
            data.feature_count()
        )));
    }
    let mode: PredictMode = a.mode.into();
    let (loss, _) = e.loss_and_accuracy(&data)?;
    let importance = if e.is_axis_parallel() {
        Some(feature_importance_split(&e)?)
    } else {
        None
    };
    let metrics = json!({
        "samples": data.len(),
        "mode": mode,
        "accuracy": e.accuracy(&data, mode)?,
        "soft_loss": loss,
        "axis_parallel": e.is_axis_parallel(),
        "importance": importance,
    });
    println!("{metrics}");
    out.write_json("metrics.json", &metrics)?;
    out.config("evaluate", a, json!({}))
}

fn cmd_export(a: &ExportArgs, out: &mut Outputs) -> Result<()> {
    let bytes = std::fs::read(&a.model).map_err(|e| Error::io(&a.model, e))?;
    let e = ensemble_from_json(&bytes)?;
    let m = export_ensemble(&e)?;
    out.write("tree_model.json", to_canonical_json(&m)?)?;
    out.config("export", a, json!({"trees": m.trees.len()}))
}

pub fn load_table(path: &Path) -> Result<AccuracyTable> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    let t: AccuracyTable = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    for s in &t.sections {
        if s.accuracy.len() != s.models.len() || s.accuracy.iter().any(|r| r.len() != t.datasets.len()) {
            return Err(Error::Shape(format!(
                "section `{}` must be {} models × {} datasets",
                s.name,
                s.models.len(),
                t.datasets.len()
            )));
        }
    }
    Ok(t)
}

/// Report as JSON plus its plain-text rendering.
pub fn render_report(t: &AccuracyTable) -> Result<(serde_json::Value, String)> {
    let mut text = String::new();
    let mut sections = Vec::new();
    let width = t.datasets.iter().map(String::len).max().unwrap_or(0).max(8);
    for s in &t.sections {
        let tour = tournament(&s.accuracy)?;
        text.push_str(&format!("{}\n{:width$}", s.name, "dataset"));
        for m in &s.models {
            text.push_str(&format!("  {m:>9}"));
        }
        text.push('\n');
        for (d, name) in t.datasets.iter().enumerate() {
            text.push_str(&format!("{name:width$}"));
            for (m, row) in s.accuracy.iter().enumerate() {
                let mark = if tour.ranks[m][d] == 1 { '*' } else { ' ' };
                text.push_str(&format!("  {:>8.3}{mark}", row[d]));
            }
            text.push('\n');
        }
        text.push_str(&format!("{:width$}", "wins"));
        for w in &tour.wins {
            text.push_str(&format!("  {w:>9}"));
        }
        text.push_str(&format!("\n{:width$}", "MRR"));
        for r in &tour.mrr {
            text.push_str(&format!("  {r:>9.3}"));
        }
        text.push_str("\n\n");
        sections.push(json!({
            "name": s.name,
            "models": s.models,
            "accuracy": s.accuracy,
            "ranks": tour.ranks,
            "wins": tour.wins,
            "mrr": tour.mrr,
        }));
    }
    let mut kendall = Vec::new();
    for entry in &t.importance {
        let names: Vec<&String> = entry.vectors.keys().collect();
        let vecs: Vec<Vec<f64>> = entry.vectors.values().map(ImportanceVector::as_f64).collect();
        let mut matrix = vec![vec![None; names.len()]; names.len()];
        text.push_str(&format!("kendall tau, {} / {}\n", entry.section, entry.dataset));
        for i in 0..names.len() {
            text.push_str(&format!("{:>10}", names[i]));
            for j in 0..names.len() {
                // undefined (constant vectors) stays null
                matrix[i][j] = match kendall_tau(&vecs[i], &vecs[j]) {
                    Ok(v) => Some(v),
                    Err(Error::UndefinedCorrelation(_)) => None,
                    Err(e) => return Err(e),
                };
                text.push_str(&matrix[i][j].map_or("         -".into(), |v| format!("  {v:>8.3}")));
            }
            text.push('\n');
        }
        text.push('\n');
        kendall.push(json!({
            "section": entry.section,
            "dataset": entry.dataset,
            "models": names,
            "tau": matrix,
            "importance": entry.vectors,
        }));
    }
    Ok((
        json!({"datasets": t.datasets, "sections": sections, "kendall": kendall}),
        text,
    ))
}

fn cmd_report(a: &ReportArgs, out: &mut Outputs) -> Result<()> {
    let t = load_table(&a.table)?;
    let (report, text) = render_report(&t)?;
    print!("{text}");
    out.write_json("report.json", &report)?;
    out.write("report.txt", &text)?;
    out.config("report", a, json!({}))
}
