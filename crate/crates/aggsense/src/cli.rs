//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 data or file format, 3 training failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use aggsense_core::dataset::{Split, WindowedDataset, DEFAULT_FRACTIONS};
use aggsense_core::eval::evaluate;
use aggsense_core::learner::{BaseKind, BaseLearnerSpec};
use aggsense_core::multilabel::{self, check_label_order, MetaMethod};
use aggsense_core::simulator::{default_configs, simulate_household};
use aggsense_core::stream::StreamPredictor;
use aggsense_core::tuning::{published_spec, random_search, SearchRequest, SearchResult, SearchSpace};
use aggsense_core::{Fixture, LabelVector, FIXTURES, N_LABELS};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::load_sim_config;
use crate::dataset_file::{export_csv_file, load_dataset, save_dataset};
use crate::error::{Error, Result};
use crate::experiment::{resolve_preset, run_experiment, write_outcome, write_timings};
use crate::model_file::{load_model, save_model, ModelFile};
use crate::report::{metrics_text, to_json, write_report_files};
use crate::trace::{load_trace, save_trace};

#[derive(Debug, Parser)]
#[command(name = "aggsense", version, about = "Appliance activity classification from an aggregate water meter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a household and write its trace CSV.
    Simulate(SimulateArgs),
    /// Turn a trace CSV into a windowed dataset file.
    Window(WindowArgs),
    /// Assign chronological train/val/test blocks to a dataset file.
    Split(SplitArgs),
    /// Fit a meta-model on the training block.
    Train(TrainArgs),
    /// Random hyperparameter search scored on the validation block.
    Tune(TuneArgs),
    /// Score a model on one block of a dataset.
    Evaluate(EvaluateArgs),
    /// Predict from aggregate readings, one per input line.
    Predict(PredictArgs),
    /// Run an experiment preset and write comparison tables.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 180)]
    pub days: u32,
    #[arg(long)]
    pub seed: u64,
    /// Simulator config (TOML); the built-in household when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub step_seconds: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub size: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also export the feature rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output path; the input is rewritten when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = DEFAULT_FRACTIONS)]
    pub fractions: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ModelChoice {
    #[arg(long)]
    pub model: BaseKind,
    #[arg(long)]
    pub meta: MetaMethod,
    /// Re-window the dataset to this width.
    #[arg(long)]
    pub window: Option<usize>,
    /// Chain order as comma-separated fixture names.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<Fixture>>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub choice: ModelChoice,
    #[arg(long)]
    pub seed: u64,
    /// Hyperparameters as a JSON or TOML file with a `kind` field.
    #[arg(long, conflicts_with = "published")]
    pub params: Option<PathBuf>,
    /// Use the published tuned values for the model and window.
    #[arg(long)]
    pub published: bool,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub choice: ModelChoice,
    #[arg(long)]
    pub budget: usize,
    #[arg(long)]
    pub seed: u64,
    /// Search space as JSON or TOML; the built-in space when omitted.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the winning hyperparameters, usable with `train --params`.
    #[arg(long)]
    pub best: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Directory for metrics.json, metrics.txt and confusion CSVs.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write the predicted bits of the evaluated rows as `t,b0,..,b4`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Print the JSON report instead of the text table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Readings file; standard input when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Built-in preset (empty, smoke, desk, full) or a TOML/JSON preset file.
    #[arg(long)]
    pub preset: String,
    /// Override the preset seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of simulated days.
    #[arg(long)]
    pub days: Option<u32>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Window(a) => window(a),
        Command::Split(a) => split(a),
        Command::Train(a) => train(a),
        Command::Tune(a) => tune(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cfgs = match &a.config {
        Some(p) => load_sim_config(p)?,
        None => default_configs(),
    };
    let series = simulate_household(&cfgs, a.days, a.step_seconds, a.seed)?;
    save_trace(&series, &a.out)?;
    eprintln!("wrote {} steps to {}", series.len(), a.out.display());
    Ok(())
}

fn window(a: WindowArgs) -> Result<()> {
    let series = load_trace(&a.input)?;
    let ds = aggsense_core::dataset::window_series(&series, a.size).map_err(|e| Error::Usage(e.to_string()))?;
    save_dataset(&ds, &a.out)?;
    if let Some(csv) = &a.csv {
        export_csv_file(&ds, csv)?;
    }
    eprintln!("wrote {} rows of width {} to {}", ds.len(), ds.window(), a.out.display());
    Ok(())
}

fn split(a: SplitArgs) -> Result<()> {
    let fractions: [f64; 3] = a
        .fractions
        .as_slice()
        .try_into()
        .map_err(|_| Error::Usage("--fractions needs three values".into()))?;
    let ds = load_dataset(&a.input)?
        .split_chronological(fractions)
        .map_err(|e| Error::Usage(e.to_string()))?;
    let out = a.out.as_deref().unwrap_or(&a.input);
    save_dataset(&ds, out)?;
    let c = ds.split_counts().expect("just split");
    println!("train {} val {} test {}", c.train, c.val, c.test);
    Ok(())
}

/// Rebuilds `ds` at `window`, keeping labels and split tags.
pub fn rewindow(ds: WindowedDataset, window: usize) -> Result<WindowedDataset> {
    if ds.window() == window {
        return Ok(ds);
    }
    let labels = ds.labels().to_vec();
    Ok(WindowedDataset::new(window, ds.step_seconds(), ds.aggregate(), labels)
        .map_err(|e| Error::Usage(e.to_string()))?
        .with_split(ds.split_counts())?)
}

fn load_for(choice: &ModelChoice, path: &Path) -> Result<WindowedDataset> {
    let ds = load_dataset(path)?;
    if ds.split_counts().is_none() {
        return Err(Error::Usage(format!("{} has no split; run `aggsense split` first", path.display())));
    }
    match choice.window {
        Some(w) => rewindow(ds, w),
        None => Ok(ds),
    }
}

fn label_order(choice: &ModelChoice) -> Result<Vec<Fixture>> {
    let order = choice.order.clone().unwrap_or_else(|| FIXTURES.to_vec());
    check_label_order(&order).map_err(|e| Error::Usage(e.to_string()))?;
    Ok(order)
}

fn read_structured<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ctx = path.display().to_string();
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| Error::format(ctx, e.message().to_string()))
    } else {
        serde_json::from_str(&text).map_err(|e| Error::format(ctx, e.to_string()))
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(value)?).map_err(|e| Error::io(path, e))
}

fn train(a: TrainArgs) -> Result<()> {
    let ds = load_for(&a.choice, &a.data)?;
    let kind = a.choice.model;
    let spec = if let Some(p) = &a.params {
        read_structured::<BaseLearnerSpec>(p)?
    } else if a.published {
        published_spec(kind, ds.window()).ok_or_else(|| {
            Error::Usage(format!("no published values for {kind} at window {}", ds.window()))
        })?
    } else {
        BaseLearnerSpec::default_for(kind)
    };
    if spec.kind() != kind {
        return Err(Error::Usage(format!("parameters are for {}, not {kind}", spec.kind())));
    }
    spec.validate().map_err(|e| Error::Usage(e.to_string()))?;
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(Error::Usage("--threshold must lie in (0, 1)".into()));
    }
    let order = label_order(&a.choice)?;
    let start = Instant::now();
    let mut meta = multilabel::fit(&ds, a.choice.meta, &spec, &order, a.seed)?;
    meta.threshold = a.threshold;
    save_model(&ModelFile::new(meta, ds.step_seconds(), a.seed), &a.out)?;
    eprintln!(
        "fit {} ({}) at window {} in {:.1} s, wrote {}",
        kind.title(),
        a.choice.meta.title(),
        ds.window(),
        start.elapsed().as_secs_f64(),
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TuneLog {
    pub model: BaseKind,
    pub meta: MetaMethod,
    pub window: usize,
    pub budget: usize,
    pub seed: u64,
    pub best: BaseLearnerSpec,
    pub best_val_f1_micro: f64,
    pub search: SearchResult,
}

fn tune(a: TuneArgs) -> Result<()> {
    let ds = load_for(&a.choice, &a.data)?;
    let space = match &a.space {
        Some(p) => read_structured::<SearchSpace>(p)?,
        None => SearchSpace::default_for(a.choice.model),
    };
    if space.kind() != a.choice.model {
        return Err(Error::Usage(format!("search space is for {}, not {}", space.kind(), a.choice.model)));
    }
    space.validate().map_err(|e| Error::Usage(e.to_string()))?;
    if a.budget == 0 {
        return Err(Error::Usage("--budget must be at least 1".into()));
    }
    let order = label_order(&a.choice)?;
    let req = SearchRequest {
        space: &space,
        method: a.choice.meta,
        label_order: &order,
        budget: a.budget,
        seed: a.seed,
    };
    let epoch = Instant::now();
    let result = random_search(
        &req,
        &ds,
        || epoch.elapsed().as_secs_f64(),
        |t| eprintln!("trial {:>3}  val f1 {:.4}  {:.1} s", t.index, t.val_f1_micro, t.fit_seconds),
    )?;
    let best = result.best().clone();
    let log = TuneLog {
        model: a.choice.model,
        meta: a.choice.meta,
        window: ds.window(),
        budget: a.budget,
        seed: a.seed,
        best: best.spec.clone(),
        best_val_f1_micro: best.val_f1_micro,
        search: result,
    };
    write_json(&log, &a.out)?;
    if let Some(p) = &a.best {
        write_json(&best.spec, p)?;
    }
    println!("best trial {} with validation F1-micro {:.4}", best.index, best.val_f1_micro);
    Ok(())
}

fn parse_split(name: &str) -> Result<Split> {
    Split::ALL
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::Usage(format!("unknown split '{name}' (train, val, test)")))
}

fn bits_line(t: u64, l: LabelVector) -> String {
    let mut s = t.to_string();
    for k in 0..N_LABELS {
        s.push(',');
        s.push(if l.get(k) { '1' } else { '0' });
    }
    s
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let split = parse_split(&a.split)?;
    let ds = load_dataset(&a.data)?;
    if ds.step_seconds() != model.step_seconds {
        eprintln!(
            "warning: model was fit at {} s steps, data has {} s",
            model.step_seconds,
            ds.step_seconds()
        );
    }
    let ds = rewindow(ds, model.window())?;
    let (x, truth) = ds.part(split).map_err(|e| Error::Usage(e.to_string()))?;
    let pred = model.model.predict(&x)?;
    let report = evaluate(&pred.labels, truth)?;
    if a.json {
        println!("{}", to_json(&report)?);
    } else {
        print!("{}", metrics_text(&report));
    }
    if let Some(dir) = &a.out_dir {
        write_report_files(&report, dir)?;
    }
    if let Some(p) = &a.predictions {
        let first = ds.split_counts().expect("part succeeded").range(split).start;
        let file = File::create(p).map_err(|e| Error::io(p, e))?;
        let mut w = BufWriter::new(file);
        let step = u64::from(ds.step_seconds());
        for (i, l) in pred.labels.iter().enumerate() {
            writeln!(w, "{}", bits_line((first + i) as u64 * step, *l)).map_err(|e| Error::io(p, e))?;
        }
        w.flush().map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let mut stream = StreamPredictor::new(&model.model)?;
    let input: Box<dyn BufRead> = match &a.input {
        Some(p) => Box::new(BufReader::new(File::open(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(io::stdin().lock()),
    };
    let out_path = a.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut out: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(io::stdout().lock()),
    };
    let step = u64::from(model.step_seconds);
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&out_path, e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let flow = match text.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => {
                eprintln!("line {}: not a flow reading: '{text}'", n + 1);
                continue;
            }
        };
        let o = stream.push(flow)?;
        writeln!(out, "{}", bits_line(o.step * step, o.labels)).map_err(|e| Error::io(&out_path, e))?;
    }
    out.flush().map_err(|e| Error::io(&out_path, e))
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut preset = resolve_preset(&a.preset)?;
    if let Some(s) = a.seed {
        preset.seed = s;
    }
    if let Some(d) = a.days {
        preset.days = d;
    }
    if preset.cells.is_empty() {
        eprintln!("preset '{}' has no cells; nothing to do", preset.name);
        return Ok(());
    }
    let mut timings = BTreeMap::new();
    let outcome = run_experiment(&preset, |id, secs, err| {
        match err {
            None => eprintln!("{id:<16} done in {secs:.1} s"),
            Some(e) => eprintln!("{id:<16} FAILED after {secs:.1} s: {e}"),
        }
        timings.insert(id.to_string(), secs);
    })?;
    write_outcome(&outcome, &a.out_dir)?;
    write_timings(&timings, &a.out_dir)?;
    for t in &outcome.tables {
        println!("{}", t.render());
    }
    match outcome.failures.first() {
        None => Ok(()),
        Some(f) => Err(Error::CellsFailed {
            failed: outcome.failures.len(),
            total: preset.cells.len(),
            code: f.exit_code,
        }),
    }
}
