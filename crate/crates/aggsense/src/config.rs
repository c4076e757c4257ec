//! Simulator configuration files.
//!
//! A config is a TOML document with one `[[fixture]]` table per fixture:
//!
//! ```toml
//! [[fixture]]
//! name = "toilet"
//! uses_per_day = 10.0
//! diurnal_weights = [1.0, 1.0, ...]          # 24 values, one per hour
//! duration = { median = 60.0, sigma = 0.25 }  # seconds
//! intensity = { mu = 0.095, sigma = 0.15 }    # liters per step
//! min_duration_steps = 2
//! cycle_template = [{ duration_steps = 3, flow_fraction = 1.0 }]
//! ```
//!
//! Log-normal parameters take either `mu` or `median` (= exp(mu)) with
//! `sigma`. Sections may appear in any order; the result is canonical.

use std::path::Path;

use aggsense_core::simulator::{validate_config_set, CyclePhase, FixtureConfig, LogNormalParams};
use aggsense_core::Fixture;
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    #[serde(default)]
    fixture: Vec<Section>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Section {
    name: String,
    uses_per_day: f64,
    diurnal_weights: Vec<f64>,
    duration: Dist,
    intensity: Dist,
    #[serde(default)]
    cycle_template: Vec<CyclePhase>,
    #[serde(default = "one")]
    min_duration_steps: u32,
}

fn one() -> u32 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Dist {
    mu: Option<f64>,
    median: Option<f64>,
    sigma: f64,
}

fn bad(key: String, message: &str) -> Error {
    Error::Core(aggsense_core::Error::config(key, message))
}

impl Dist {
    fn resolve(&self, key: String) -> Result<LogNormalParams> {
        match (self.mu, self.median) {
            (Some(mu), None) => Ok(LogNormalParams { mu, sigma: self.sigma }),
            (None, Some(m)) if m > 0.0 => Ok(LogNormalParams::with_median(m, self.sigma)),
            (None, Some(_)) => Err(bad(format!("{key}.median"), "must be positive")),
            _ => Err(bad(key, "give exactly one of mu or median")),
        }
    }
}

impl Section {
    fn into_config(self) -> Result<FixtureConfig> {
        let fixture: Fixture = self
            .name
            .parse()
            .map_err(|_| bad("fixture.name".into(), &format!("unknown fixture '{}'", self.name)))?;
        let key = |k: &str| format!("{}.{k}", fixture.name());
        let diurnal_weights: [f64; 24] = self
            .diurnal_weights
            .try_into()
            .map_err(|_| bad(key("diurnal_weights"), "needs exactly 24 values"))?;
        Ok(FixtureConfig {
            fixture,
            uses_per_day: self.uses_per_day,
            diurnal_weights,
            duration: self.duration.resolve(key("duration"))?,
            intensity: self.intensity.resolve(key("intensity"))?,
            cycle_template: self.cycle_template,
            min_duration_steps: self.min_duration_steps,
        })
    }
}

/// Parses and validates a config document, returning five configs in
/// canonical fixture order.
pub fn parse_sim_config(text: &str) -> Result<Vec<FixtureConfig>> {
    let file: File = toml::from_str(text).map_err(|e| Error::format("config", e.message()))?;
    let cfgs = file
        .fixture
        .into_iter()
        .map(Section::into_config)
        .collect::<Result<Vec<_>>>()?;
    Ok(validate_config_set(cfgs)?)
}

pub fn load_sim_config(path: &Path) -> Result<Vec<FixtureConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sim_config(&text).map_err(|e| match e {
        Error::Core(c) => Error::format(path.display().to_string(), c.to_string()),
        Error::Format { message, .. } => Error::format(path.display().to_string(), message),
        other => other,
    })
}

/// The config file shipped with the crate; it describes the same household
/// as [`aggsense_core::simulator::default_configs`].
pub const DEFAULT_SIM_CONFIG: &str = include_str!("../config/default_sim.toml");
