//! Experiment presets: simulate a household, fit a grid of
//! (model, meta-method, window) cells and lay the test metrics out as
//! comparison tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use aggsense_core::boosting::GbtParams;
use aggsense_core::dataset::{window_series, Split, DEFAULT_FRACTIONS};
use aggsense_core::eval::{evaluate, MetricsReport};
use aggsense_core::learner::{BaseKind, BaseLearnerSpec};
use aggsense_core::multilabel::{self, MetaMethod};
use aggsense_core::neural::MlpConfig;
use aggsense_core::simulator::{default_configs, simulate_household, HouseholdSeries, DEFAULT_STEP_SECONDS};
use aggsense_core::trees::{ClassWeight, ForestParams, MaxFeatures};
use aggsense_core::tuning::published_spec;
use aggsense_core::{Fixture, FIXTURES};
use serde::{Deserialize, Serialize};

use crate::config::load_sim_config;
use crate::error::{Error, Result};
use crate::report::{to_json, write_report_files, Table};

/// Where cells without explicit hyperparameters take them from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSource {
    /// Reduced settings sized for a laptop run.
    Desk,
    /// Published tuned values where the window has them, desk otherwise.
    Published,
    /// Library defaults.
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub model: BaseKind,
    pub meta: MetaMethod,
    pub window: usize,
    #[serde(default)]
    pub params: Option<BaseLearnerSpec>,
}

impl Cell {
    pub fn new(model: BaseKind, meta: MetaMethod, window: usize) -> Self {
        Cell {
            model,
            meta,
            window,
            params: None,
        }
    }

    pub fn id(&self) -> String {
        format!("{}_{}_w{}", self.model, self.meta, self.window)
    }

    pub fn label(&self) -> String {
        format!("{} ({}) - Window {}", self.model.title(), self.meta.title(), self.window)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub name: String,
    pub days: u32,
    #[serde(default = "default_step")]
    pub step_seconds: u32,
    pub seed: u64,
    /// Simulator config file; the built-in household when absent.
    #[serde(default)]
    pub sim_config: Option<PathBuf>,
    #[serde(default = "canonical_order")]
    pub label_order: Vec<Fixture>,
    pub params: ParamSource,
    pub cells: Vec<Cell>,
    /// Window used for each model in the classifier comparison.
    #[serde(default = "comparison_windows")]
    pub comparison: Vec<(BaseKind, usize)>,
}

fn default_step() -> u32 {
    DEFAULT_STEP_SECONDS
}

fn canonical_order() -> Vec<Fixture> {
    FIXTURES.to_vec()
}

fn comparison_windows() -> Vec<(BaseKind, usize)> {
    vec![(BaseKind::Forest, 60), (BaseKind::Gbt, 240), (BaseKind::Mlp, 120)]
}

pub const STANDARD_WINDOWS: [usize; 4] = [60, 120, 240, 480];

/// Every chain model at every window, plus binary relevance at each
/// model's comparison window.
fn full_grid() -> Vec<Cell> {
    let mut cells = Vec::new();
    for kind in BaseKind::ALL {
        for w in STANDARD_WINDOWS {
            cells.push(Cell::new(kind, MetaMethod::Cc, w));
        }
    }
    for (kind, w) in comparison_windows() {
        cells.push(Cell::new(kind, MetaMethod::Br, w));
    }
    cells
}

pub const PRESET_NAMES: [&str; 4] = ["empty", "smoke", "desk", "full"];

pub fn builtin_preset(name: &str) -> Option<ExperimentPreset> {
    let base = |days, params, cells| ExperimentPreset {
        name: name.to_string(),
        days,
        step_seconds: DEFAULT_STEP_SECONDS,
        seed: 1,
        sim_config: None,
        label_order: canonical_order(),
        params,
        cells,
        comparison: comparison_windows(),
    };
    match name {
        "empty" => Some(base(1, ParamSource::Desk, Vec::new())),
        "smoke" => {
            let mut cells: Vec<Cell> = STANDARD_WINDOWS
                .iter()
                .map(|&w| Cell::new(BaseKind::Forest, MetaMethod::Cc, w))
                .collect();
            cells.push(Cell::new(BaseKind::Forest, MetaMethod::Br, 60));
            cells.push(Cell::new(BaseKind::Gbt, MetaMethod::Cc, 240));
            cells.push(Cell::new(BaseKind::Mlp, MetaMethod::Cc, 120));
            for c in &mut cells {
                c.params = Some(smoke_spec(c.model));
            }
            Some(base(3, ParamSource::Desk, cells))
        }
        "desk" => Some(base(21, ParamSource::Desk, full_grid())),
        "full" => Some(base(180, ParamSource::Published, full_grid())),
        _ => None,
    }
}

/// A built-in preset name or a TOML/JSON preset file.
pub fn resolve_preset(name_or_path: &str) -> Result<ExperimentPreset> {
    if let Some(p) = builtin_preset(name_or_path) {
        return Ok(p);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::Usage(format!(
            "unknown preset '{name_or_path}' (built-in: {})",
            PRESET_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ctx = path.display().to_string();
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Error::format(ctx, e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| Error::format(ctx, e.message().to_string()))
    }
}

fn smoke_spec(kind: BaseKind) -> BaseLearnerSpec {
    match kind {
        BaseKind::Forest => BaseLearnerSpec::Forest(ForestParams {
            n_estimators: 10,
            max_depth: 6,
            max_features: MaxFeatures::Sqrt,
            class_weight: ClassWeight::Balanced,
            ..ForestParams::default()
        }),
        BaseKind::Gbt => BaseLearnerSpec::Gbt(GbtParams {
            n_estimators: 20,
            max_depth: 4,
            ..GbtParams::default()
        }),
        BaseKind::Mlp => BaseLearnerSpec::Mlp(MlpConfig {
            hidden: vec![16],
            epochs: 3,
            ..MlpConfig::default()
        }),
    }
}

/// Laptop-sized settings in the neighbourhood of the published values.
pub fn desk_spec(kind: BaseKind) -> BaseLearnerSpec {
    match kind {
        BaseKind::Forest => BaseLearnerSpec::Forest(ForestParams {
            n_estimators: 50,
            max_depth: 8,
            max_features: MaxFeatures::Sqrt,
            class_weight: ClassWeight::Balanced,
            ..ForestParams::default()
        }),
        BaseKind::Gbt => BaseLearnerSpec::Gbt(GbtParams {
            n_estimators: 100,
            max_depth: 6,
            learning_rate: 0.1,
            subsample: 0.7,
            colsample_bytree: 0.7,
            ..GbtParams::default()
        }),
        BaseKind::Mlp => BaseLearnerSpec::Mlp(MlpConfig {
            hidden: vec![32, 32],
            epochs: 10,
            ..MlpConfig::default()
        }),
    }
}

impl ExperimentPreset {
    pub fn spec_for(&self, cell: &Cell) -> BaseLearnerSpec {
        if let Some(p) = &cell.params {
            return p.clone();
        }
        match self.params {
            ParamSource::Desk => desk_spec(cell.model),
            ParamSource::Published => {
                published_spec(cell.model, cell.window).unwrap_or_else(|| desk_spec(cell.model))
            }
            ParamSource::Default => BaseLearnerSpec::default_for(cell.model),
        }
    }

    pub fn simulate(&self) -> Result<HouseholdSeries> {
        let cfgs = match &self.sim_config {
            Some(p) => load_sim_config(p)?,
            None => default_configs(),
        };
        Ok(simulate_household(&cfgs, self.days, self.step_seconds, self.seed)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub id: String,
    pub cell: Cell,
    pub params: BaseLearnerSpec,
    pub seed: u64,
    pub val_f1_micro: f64,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub id: String,
    pub error: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub preset: String,
    pub days: u32,
    pub seed: u64,
    pub results: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
    pub tables: Vec<Table>,
}

/// Fits one cell on the training block and scores it on validation and test.
pub fn run_cell(preset: &ExperimentPreset, series: &HouseholdSeries, cell: &Cell) -> Result<CellResult> {
    let spec = preset.spec_for(cell);
    let ds = window_series(series, cell.window)?.split_chronological(DEFAULT_FRACTIONS)?;
    let meta = multilabel::fit(&ds, cell.meta, &spec, &preset.label_order, preset.seed)?;
    let (xv, yv) = ds.part(Split::Val)?;
    let val = evaluate(&meta.predict(&xv)?.labels, yv)?;
    let (xt, yt) = ds.part(Split::Test)?;
    let test = evaluate(&meta.predict(&xt)?.labels, yt)?;
    Ok(CellResult {
        id: cell.id(),
        cell: cell.clone(),
        params: spec,
        seed: preset.seed,
        val_f1_micro: val.f1_micro,
        test,
    })
}

/// Runs every cell in order. A failing cell is recorded and the rest still
/// run. `progress` receives each cell id with its wall time in seconds.
pub fn run_experiment(
    preset: &ExperimentPreset,
    mut progress: impl FnMut(&str, f64, Option<&str>),
) -> Result<ExperimentOutcome> {
    let mut outcome = ExperimentOutcome {
        preset: preset.name.clone(),
        days: preset.days,
        seed: preset.seed,
        results: Vec::new(),
        failures: Vec::new(),
        tables: Vec::new(),
    };
    if preset.cells.is_empty() {
        return Ok(outcome);
    }
    let series = preset.simulate()?;
    for cell in &preset.cells {
        let start = Instant::now();
        match run_cell(preset, &series, cell) {
            Ok(r) => {
                progress(&r.id, start.elapsed().as_secs_f64(), None);
                outcome.results.push(r);
            }
            Err(e) => {
                let msg = e.to_string();
                progress(&cell.id(), start.elapsed().as_secs_f64(), Some(&msg));
                outcome.failures.push(CellFailure {
                    id: cell.id(),
                    error: msg,
                    exit_code: e.exit_code(),
                });
            }
        }
    }
    outcome.tables = build_tables(&outcome.results, &preset.comparison);
    Ok(outcome)
}

fn pct(x: f64) -> f64 {
    100.0 * x
}

fn table(title: String, cols: &[&CellResult], headers: Vec<String>) -> Table {
    let per_label: Vec<String> = cols
        .iter()
        .map(|r| format!("{:.2}", pct(r.test.label_accuracy_mean)))
        .collect();
    Table {
        title,
        columns: headers,
        rows: vec![
            ("Accuracy".into(), cols.iter().map(|r| pct(r.test.subset_accuracy)).collect()),
            ("F1-Micro".into(), cols.iter().map(|r| pct(r.test.f1_micro)).collect()),
        ],
        notes: vec![format!(
            "Accuracy is subset accuracy on the test block. Per-label accuracy: {}.",
            per_label.join(", ")
        )],
    }
}

fn short_name(kind: BaseKind) -> &'static str {
    match kind {
        BaseKind::Forest => "RF",
        BaseKind::Gbt => "XGBoost",
        BaseKind::Mlp => "MLP",
    }
}

/// Window sweeps per model under the chain method, binary relevance versus
/// chain comparisons, and the cross-model comparison.
pub fn build_tables(results: &[CellResult], comparison: &[(BaseKind, usize)]) -> Vec<Table> {
    let find = |k: BaseKind, m: MetaMethod, w: usize| {
        results
            .iter()
            .find(|r| r.cell.model == k && r.cell.meta == m && r.cell.window == w)
    };
    let mut tables = Vec::new();
    for kind in BaseKind::ALL {
        let mut windows: Vec<usize> = results
            .iter()
            .filter(|r| r.cell.model == kind && r.cell.meta == MetaMethod::Cc)
            .map(|r| r.cell.window)
            .collect();
        windows.sort_unstable();
        windows.dedup();
        if windows.is_empty() {
            continue;
        }
        let cols: Vec<&CellResult> = windows
            .iter()
            .filter_map(|&w| find(kind, MetaMethod::Cc, w))
            .collect();
        let headers = windows.iter().map(|w| format!("Window {w}")).collect();
        tables.push(table(format!("Performance of {} (CC)", kind.title()), &cols, headers));
    }
    for &(kind, w) in comparison {
        if let (Some(br), Some(cc)) = (find(kind, MetaMethod::Br, w), find(kind, MetaMethod::Cc, w)) {
            let cols = [br, cc];
            let headers = cols.iter().map(|r| r.cell.label()).collect();
            tables.push(table(
                format!("Comparison of multi-task methods with {}", short_name(kind)),
                &cols,
                headers,
            ));
        }
    }
    let cols: Vec<&CellResult> = comparison
        .iter()
        .filter_map(|&(k, w)| find(k, MetaMethod::Cc, w))
        .collect();
    if cols.len() >= 2 {
        let headers = cols.iter().map(|r| r.cell.label()).collect();
        tables.push(table("Comparison of different classifiers".into(), &cols, headers));
    }
    tables
}

/// Writes `tables.md`, `results.json` and per-cell confusion files under
/// `dir/cells/<id>/`. Nothing time-dependent goes into these files.
pub fn write_outcome(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut md = format!(
        "# Experiment `{}`: {} simulated days, seed {}\n\n",
        outcome.preset, outcome.days, outcome.seed
    );
    for t in &outcome.tables {
        md.push_str(&t.render());
        md.push('\n');
    }
    for f in &outcome.failures {
        md.push_str(&format!("Cell {} failed: {}\n", f.id, f.error));
    }
    let path = dir.join("tables.md");
    std::fs::write(&path, md).map_err(|e| Error::io(path, e))?;
    let path = dir.join("results.json");
    std::fs::write(&path, to_json(outcome)?).map_err(|e| Error::io(path, e))?;
    for r in &outcome.results {
        write_report_files(&r.test, &dir.join("cells").join(&r.id))?;
    }
    Ok(())
}

/// Wall time per cell, kept apart from the deterministic outputs.
pub fn write_timings(timings: &BTreeMap<String, f64>, dir: &Path) -> Result<()> {
    let path = dir.join("timings.json");
    std::fs::write(&path, to_json(timings)?).map_err(|e| Error::io(path, e))
}
