//! Stochastic household water end-use simulator.
//!
//! Each fixture launches events from a thinned Poisson process: candidates
//! arrive at the peak hourly rate and are accepted with probability
//! `weight(hour) / max_weight`, which yields `uses_per_day` events per day on
//! average with the configured time-of-day profile. An event draws a
//! log-normal duration (seconds) and a log-normal intensity (liters per
//! step). Multi-phase appliances follow a cycle template whose phases are
//! stretched to the drawn duration; zero-fraction phases produce the
//! intermittent gaps typical of washers. Events of one fixture that overlap
//! are merged by adding their flows, and at most one event starts per step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::fixture::{Fixture, LabelVector, FIXTURES, N_LABELS};
use crate::rng::{self, Rng};
use crate::{Error, Result};

pub const SECONDS_PER_DAY: u32 = 86_400;
pub const DEFAULT_STEP_SECONDS: u32 = 10;

/// Parameters of a log-normal distribution: `exp(N(mu, sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalParams {
    /// Parameters whose median is `median`.
    pub fn with_median(median: f64, sigma: f64) -> Self {
        LogNormalParams {
            mu: libm::log(median),
            sigma,
        }
    }

    fn distribution(&self) -> LogNormal<f64> {
        // Validated configs always produce a finite mu and sigma >= 0.
        LogNormal::new(self.mu, self.sigma).expect("validated log-normal parameters")
    }
}

/// One phase of a multi-phase appliance cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclePhase {
    pub duration_steps: u32,
    /// Fraction of the event intensity drawn during this phase; 0 for a gap.
    pub flow_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub fixture: Fixture,
    pub uses_per_day: f64,
    pub diurnal_weights: [f64; 24],
    /// Event duration in seconds.
    pub duration: LogNormalParams,
    /// Flow while active, liters per step.
    pub intensity: LogNormalParams,
    #[serde(default)]
    pub cycle_template: Vec<CyclePhase>,
    pub min_duration_steps: u32,
}

impl FixtureConfig {
    pub fn validate(&self) -> Result<()> {
        let name = self.fixture.name();
        let key = |k: &str| format!("{name}.{k}");
        if !(self.uses_per_day.is_finite() && self.uses_per_day >= 0.0) {
            return Err(Error::config(key("uses_per_day"), "must be a nonnegative number"));
        }
        if self.diurnal_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::config(key("diurnal_weights"), "weights must be nonnegative"));
        }
        if self.diurnal_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config(key("diurnal_weights"), "weights must not all be zero"));
        }
        for (k, p) in [("duration", &self.duration), ("intensity", &self.intensity)] {
            if !p.mu.is_finite() {
                return Err(Error::config(key(&format!("{k}.mu")), "must be finite"));
            }
            if !(p.sigma.is_finite() && p.sigma >= 0.0) {
                return Err(Error::config(key(&format!("{k}.sigma")), "must be nonnegative"));
            }
        }
        if self.min_duration_steps == 0 {
            return Err(Error::config(key("min_duration_steps"), "must be at least 1"));
        }
        if !self.cycle_template.is_empty() {
            for (i, phase) in self.cycle_template.iter().enumerate() {
                if phase.duration_steps == 0 {
                    return Err(Error::config(
                        key(&format!("cycle_template[{i}].duration_steps")),
                        "must be at least 1",
                    ));
                }
                if !(0.0..=1.0).contains(&phase.flow_fraction) {
                    return Err(Error::config(
                        key(&format!("cycle_template[{i}].flow_fraction")),
                        "must lie in [0, 1]",
                    ));
                }
            }
            if self.cycle_template.iter().all(|p| p.flow_fraction == 0.0) {
                return Err(Error::config(
                    key("cycle_template"),
                    "at least one phase must carry flow",
                ));
            }
        }
        Ok(())
    }
}

/// Checks a parsed configuration set and returns it in canonical order.
/// Exactly one config per fixture is required.
pub fn validate_config_set(cfgs: Vec<FixtureConfig>) -> Result<Vec<FixtureConfig>> {
    let mut slots: [Option<FixtureConfig>; N_LABELS] = Default::default();
    for cfg in cfgs {
        cfg.validate()?;
        let slot = &mut slots[cfg.fixture.index()];
        if slot.is_some() {
            return Err(Error::config(
                cfg.fixture.name(),
                format!("fixture {} defined twice", cfg.fixture),
            ));
        }
        *slot = Some(cfg);
    }
    let mut out = Vec::with_capacity(N_LABELS);
    for (fixture, slot) in FIXTURES.iter().zip(slots) {
        match slot {
            Some(cfg) => out.push(cfg),
            None => {
                return Err(Error::config(
                    fixture.name(),
                    format!("fixture {fixture} absent"),
                ))
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureTrace {
    pub fixture: Fixture,
    /// Liters per step, all entries nonnegative.
    pub flow: Vec<f64>,
}

/// Five fixture traces, their aggregate meter signal and per-step labels.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdSeries {
    pub step_seconds: u32,
    pub traces: Vec<FixtureTrace>,
    pub aggregate: Vec<f64>,
    pub labels: Vec<LabelVector>,
    /// Simulation seed; `None` for imported series.
    pub seed: Option<u64>,
}

/// Meter reading for one step: fixture flows summed left to right in
/// canonical order. Every producer and checker of aggregates uses this.
#[inline]
pub fn aggregate_step(flows: &[f64; N_LABELS]) -> f64 {
    flows.iter().fold(0.0, |acc, f| acc + f)
}

impl HouseholdSeries {
    /// Builds the aggregate and labels from five traces in canonical order.
    pub fn from_traces(
        step_seconds: u32,
        traces: Vec<FixtureTrace>,
        seed: Option<u64>,
    ) -> Result<HouseholdSeries> {
        if traces.len() != N_LABELS {
            return Err(Error::Shape {
                what: "fixture traces",
                expected: N_LABELS,
                found: traces.len(),
            });
        }
        for (trace, fixture) in traces.iter().zip(FIXTURES) {
            if trace.fixture != fixture {
                return Err(Error::invalid(format!(
                    "trace for {} found where {} expected",
                    trace.fixture, fixture
                )));
            }
            if trace.flow.len() != traces[0].flow.len() {
                return Err(Error::Shape {
                    what: "trace length",
                    expected: traces[0].flow.len(),
                    found: trace.flow.len(),
                });
            }
        }
        let len = traces[0].flow.len();
        let mut aggregate = Vec::with_capacity(len);
        let mut labels = Vec::with_capacity(len);
        for t in 0..len {
            let flows: [f64; N_LABELS] = core::array::from_fn(|k| traces[k].flow[t]);
            if flows.iter().any(|f| f.is_nan() || *f < 0.0) {
                return Err(Error::invalid(format!("negative or NaN flow at step {t}")));
            }
            aggregate.push(aggregate_step(&flows));
            labels.push(LabelVector::from_bits(flows.map(|f| f > 0.0)));
        }
        Ok(HouseholdSeries {
            step_seconds,
            traces,
            aggregate,
            labels,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.aggregate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aggregate.is_empty()
    }

    pub fn flows_at(&self, t: usize) -> [f64; N_LABELS] {
        core::array::from_fn(|k| self.traces[k].flow[t])
    }
}

/// Number of steps in `days` at `step_seconds` resolution.
pub fn series_len(days: u32, step_seconds: u32) -> Result<usize> {
    if days == 0 {
        return Err(Error::invalid("days must be at least 1"));
    }
    if step_seconds == 0 || !SECONDS_PER_DAY.is_multiple_of(step_seconds) {
        return Err(Error::invalid(format!(
            "step of {step_seconds} s does not divide a day"
        )));
    }
    Ok(days as usize * (SECONDS_PER_DAY / step_seconds) as usize)
}

/// Simulates one fixture for `days` days.
pub fn simulate_fixture(
    cfg: &FixtureConfig,
    days: u32,
    step_seconds: u32,
    rng: &mut Rng,
) -> Result<FixtureTrace> {
    cfg.validate()?;
    let len = series_len(days, step_seconds)?;
    let mut flow = vec![0.0; len];
    if cfg.uses_per_day > 0.0 {
        let max_w = cfg.diurnal_weights.iter().copied().fold(0.0, f64::max);
        let mean_w = cfg.diurnal_weights.iter().sum::<f64>() / 24.0;
        let rate = cfg.uses_per_day / f64::from(SECONDS_PER_DAY) * (max_w / mean_w);
        let gaps = Exp::new(rate).map_err(|_| Error::invalid("launch rate out of range"))?;
        let durations = cfg.duration.distribution();
        let intensities = cfg.intensity.distribution();
        let horizon = f64::from(days) * f64::from(SECONDS_PER_DAY);

        let mut clock = 0.0;
        let mut last_start: Option<usize> = None;
        loop {
            clock += gaps.sample(rng);
            if clock >= horizon {
                break;
            }
            let hour = ((clock as u64 % u64::from(SECONDS_PER_DAY)) / 3600) as usize;
            let accept = rng.gen::<f64>() * max_w < cfg.diurnal_weights[hour];
            if !accept {
                continue;
            }
            let start = (clock / f64::from(step_seconds)) as usize;
            if last_start == Some(start) {
                continue;
            }
            last_start = Some(start);
            let seconds = durations.sample(rng);
            let intensity = intensities.sample(rng);
            let steps = libm::round(seconds / f64::from(step_seconds)).max(0.0) as usize;
            let steps = steps.max(cfg.min_duration_steps as usize);
            write_event(&mut flow[start.min(len)..], cfg, steps, intensity);
        }
    }
    Ok(FixtureTrace {
        fixture: cfg.fixture,
        flow,
    })
}

/// Lays one event into `flow` (which starts at the event's first step),
/// truncating at the end of the series.
fn write_event(flow: &mut [f64], cfg: &FixtureConfig, steps: usize, intensity: f64) {
    if cfg.cycle_template.is_empty() {
        for f in flow.iter_mut().take(steps) {
            *f += intensity;
        }
        return;
    }
    let nominal: u64 = cfg.cycle_template.iter().map(|p| u64::from(p.duration_steps)).sum();
    let scale = steps as f64 / nominal as f64;
    let mut at = 0usize;
    for phase in &cfg.cycle_template {
        let len = (libm::round(f64::from(phase.duration_steps) * scale) as usize).max(1);
        let end = (at + len).min(flow.len());
        if phase.flow_fraction > 0.0 {
            let q = intensity * phase.flow_fraction;
            for f in &mut flow[at.min(end)..end] {
                *f += q;
            }
        }
        at += len;
        if at >= flow.len() {
            break;
        }
    }
}

/// Simulates a household from five configs in canonical order, each fixture
/// drawing from its own substream of `seed`.
pub fn simulate_household(
    cfgs: &[FixtureConfig],
    days: u32,
    step_seconds: u32,
    seed: u64,
) -> Result<HouseholdSeries> {
    if cfgs.len() != N_LABELS {
        return Err(Error::Shape {
            what: "fixture configs",
            expected: N_LABELS,
            found: cfgs.len(),
        });
    }
    let mut traces = Vec::with_capacity(N_LABELS);
    for (cfg, fixture) in cfgs.iter().zip(FIXTURES) {
        if cfg.fixture != fixture {
            return Err(Error::config(
                fixture.name(),
                format!("expected {fixture} config, found {}", cfg.fixture),
            ));
        }
        let mut rng = rng::substream(seed, fixture.index() as u64);
        traces.push(simulate_fixture(cfg, days, step_seconds, &mut rng)?);
    }
    HouseholdSeries::from_traces(step_seconds, traces, Some(seed))
}

// Hour-of-day launch profiles for the default household.
const BATHROOM: [f64; 24] = [
    0.3, 0.2, 0.1, 0.1, 0.2, 0.6, 2.0, 3.0, 2.5, 1.5, 1.0, 1.0, //
    1.2, 1.0, 0.9, 0.9, 1.0, 1.3, 1.6, 1.8, 1.8, 1.7, 1.2, 0.6,
];
const SHOWER: [f64; 24] = [
    0.1, 0.0, 0.0, 0.0, 0.1, 0.5, 3.0, 4.0, 2.5, 1.0, 0.5, 0.3, //
    0.3, 0.2, 0.2, 0.3, 0.4, 0.8, 1.2, 1.6, 2.0, 1.8, 1.0, 0.3,
];
const KITCHEN: [f64; 24] = [
    0.1, 0.1, 0.0, 0.0, 0.1, 0.3, 1.2, 2.0, 1.8, 1.0, 0.8, 1.2, //
    1.8, 1.4, 0.8, 0.7, 0.9, 1.6, 2.4, 2.6, 2.0, 1.4, 0.8, 0.3,
];
const LAUNDRY: [f64; 24] = [
    0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.3, 0.8, 1.5, 2.0, 2.0, 1.8, //
    1.5, 1.4, 1.4, 1.5, 1.6, 1.6, 1.5, 1.3, 1.0, 0.6, 0.2, 0.0,
];
const DISHES: [f64; 24] = [
    0.2, 0.1, 0.0, 0.0, 0.0, 0.0, 0.1, 0.3, 0.8, 0.6, 0.3, 0.3, //
    0.6, 1.0, 0.6, 0.3, 0.3, 0.4, 0.8, 1.6, 2.5, 2.5, 1.6, 0.6,
];

fn phases(spec: &[(u32, f64)]) -> Vec<CyclePhase> {
    spec.iter()
        .map(|&(duration_steps, flow_fraction)| CyclePhase {
            duration_steps,
            flow_fraction,
        })
        .collect()
}

/// Default two-person household: standard toilet, shower, faucet and
/// dishwasher, high-efficiency clothes washer. Flows are liters per 10 s
/// step. The dishwasher is rare and intermittent, accounting for roughly
/// 1.9 % of all fixture-active steps over long runs.
pub fn default_configs() -> Vec<FixtureConfig> {
    vec![
        FixtureConfig {
            fixture: Fixture::Toilet,
            uses_per_day: 10.0,
            diurnal_weights: BATHROOM,
            duration: LogNormalParams::with_median(60.0, 0.25),
            intensity: LogNormalParams::with_median(1.1, 0.15),
            cycle_template: Vec::new(),
            min_duration_steps: 2,
        },
        FixtureConfig {
            fixture: Fixture::Shower,
            uses_per_day: 1.4,
            diurnal_weights: SHOWER,
            duration: LogNormalParams::with_median(480.0, 0.35),
            intensity: LogNormalParams::with_median(1.3, 0.15),
            cycle_template: Vec::new(),
            min_duration_steps: 6,
        },
        FixtureConfig {
            fixture: Fixture::Faucet,
            uses_per_day: 20.0,
            diurnal_weights: KITCHEN,
            duration: LogNormalParams::with_median(30.0, 0.6),
            intensity: LogNormalParams::with_median(0.7, 0.4),
            cycle_template: Vec::new(),
            min_duration_steps: 1,
        },
        FixtureConfig {
            fixture: Fixture::ClothesWasher,
            uses_per_day: 0.5,
            diurnal_weights: LAUNDRY,
            duration: LogNormalParams::with_median(2700.0, 0.15),
            intensity: LogNormalParams::with_median(1.6, 0.1),
            // fill, agitate, drain/fill, rinse, spin
            cycle_template: phases(&[
                (18, 1.0),
                (60, 0.0),
                (12, 1.0),
                (60, 0.0),
                (12, 0.8),
                (50, 0.0),
                (12, 0.8),
                (46, 0.0),
            ]),
            min_duration_steps: 60,
        },
        FixtureConfig {
            fixture: Fixture::Dishwasher,
            uses_per_day: 0.3,
            diurnal_weights: DISHES,
            duration: LogNormalParams::with_median(5400.0, 0.1),
            intensity: LogNormalParams::with_median(1.0, 0.1),
            // pre-rinse, wash fill, two rinses, final rinse with gaps between
            cycle_template: phases(&[
                (3, 1.0),
                (100, 0.0),
                (3, 1.0),
                (120, 0.0),
                (3, 1.0),
                (100, 0.0),
                (3, 1.0),
                (100, 0.0),
                (3, 1.0),
                (105, 0.0),
            ]),
            min_duration_steps: 60,
        },
    ]
}
