//! `key = value` scenario files.
//!
//! ```text
//! # comments start with '#'
//! scenario.label = delay_0.2
//! scenario.delay = 0.2
//! params.cart_mass = 1.0
//! bat.population_size = 20
//! sim.initial_state = 0, 0.05236, 0, 0, 0, 0
//! ```
//!
//! Every key is optional; unknown keys and repeated keys are errors.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use dipbat::sim::FitnessWeights;
use dipbat::{BatConfig, PadeConvention, PhysicalParams, SearchBounds, SimConfig};

use crate::error::CliError;
use crate::scenario::{DesignModel, Scenario};

/// Damping-factor search interval.
pub const DEFAULT_ZETA_BOUNDS: (f64, f64) = (0.01, 1.5);
/// Natural-frequency search interval, rad/s.
pub const DEFAULT_OMEGA_BOUNDS: (f64, f64) = (0.1, 5.0);

const KEYS: &[&str] = &[
    "scenario.label",
    "scenario.delay",
    "scenario.design_model",
    "scenario.pade_convention",
    "params.cart_mass",
    "params.link1_mass",
    "params.link2_mass",
    "params.link1_length",
    "params.link2_length",
    "params.link1_com",
    "params.link2_com",
    "params.link1_inertia",
    "params.link2_inertia",
    "params.cart_friction",
    "params.gravity",
    "bounds.zeta_min",
    "bounds.zeta_max",
    "bounds.omega_min",
    "bounds.omega_max",
    "bat.population_size",
    "bat.generations",
    "bat.loudness",
    "bat.pulse_rate",
    "bat.freq_min",
    "bat.freq_max",
    "bat.loudness_decay",
    "bat.pulse_growth",
    "bat.seed",
    "sim.dt",
    "sim.horizon",
    "sim.initial_state",
    "sim.reference",
    "sim.settling_band",
    "fitness.cart",
    "fitness.lower",
    "fitness.upper",
];

/// Raw key/value pairs with the line each came from.
struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {line_no}: expected `key = value`, got `{line}`")));
            };
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {line_no}: unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(CliError::Config(format!("line {line_no}: `{key}` has no value")));
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line_no, value.to_string())) {
                return Err(CliError::Config(format!("line {line_no}: `{key}` already set on line {first}")));
            }
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, value)) => value
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("line {line}: cannot parse `{key}` from `{value}`"))),
        }
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<(), CliError> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some((line, value)) = self.0.get(key) else {
            return Ok(None);
        };
        value
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("line {line}: `{key}` must be a comma-separated list of numbers")))
    }
}

impl FromStr for DesignModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jacobian" => Ok(Self::Jacobian),
            "closed_form" => Ok(Self::ClosedForm),
            other => Err(other.to_string()),
        }
    }
}

fn parse_convention(s: &str) -> Option<PadeConvention> {
    match s {
        "stable" => Some(PadeConvention::Stable),
        "unstable" => Some(PadeConvention::Unstable),
        _ => None,
    }
}

/// Builds a validated scenario from config text.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let e = Entries::parse(text)?;
    let mut s = Scenario::default();

    e.set("scenario.label", &mut s.label)?;
    e.set("scenario.delay", &mut s.delay)?;
    e.set("scenario.design_model", &mut s.design_model)?;
    if let Some(v) = e.get::<String>("scenario.pade_convention")? {
        s.pade_convention = parse_convention(&v).ok_or_else(|| {
            CliError::Config(format!("scenario.pade_convention must be `stable` or `unstable`, got `{v}`"))
        })?;
    }

    s.params = parse_params(&e)?;

    let (mut zlo, mut zhi) = DEFAULT_ZETA_BOUNDS;
    let (mut wlo, mut whi) = DEFAULT_OMEGA_BOUNDS;
    e.set("bounds.zeta_min", &mut zlo)?;
    e.set("bounds.zeta_max", &mut zhi)?;
    e.set("bounds.omega_min", &mut wlo)?;
    e.set("bounds.omega_max", &mut whi)?;
    s.bounds = SearchBounds { lower: vec![zlo, wlo], upper: vec![zhi, whi] };

    let mut bat = BatConfig::default();
    e.set("bat.population_size", &mut bat.population_size)?;
    e.set("bat.generations", &mut bat.generations)?;
    e.set("bat.loudness", &mut bat.loudness)?;
    e.set("bat.pulse_rate", &mut bat.pulse_rate)?;
    e.set("bat.freq_min", &mut bat.freq_min)?;
    e.set("bat.freq_max", &mut bat.freq_max)?;
    e.set("bat.loudness_decay", &mut bat.loudness_decay)?;
    e.set("bat.pulse_growth", &mut bat.pulse_growth)?;
    e.set("bat.seed", &mut bat.seed)?;
    s.bat = bat;

    let mut sim = SimConfig::default();
    e.set("sim.dt", &mut sim.dt)?;
    e.set("sim.horizon", &mut sim.horizon)?;
    e.set("sim.reference", &mut sim.reference)?;
    if let Some(x0) = e.list("sim.initial_state")? {
        sim.initial_state = x0;
    }
    s.sim = sim;
    e.set("sim.settling_band", &mut s.settling_band)?;

    let mut w = FitnessWeights::default();
    e.set("fitness.cart", &mut w.cart)?;
    e.set("fitness.lower", &mut w.lower)?;
    e.set("fitness.upper", &mut w.upper)?;
    s.weights = w;

    s.validate()?;
    Ok(s)
}

fn parse_params(e: &Entries) -> Result<PhysicalParams, CliError> {
    let mut p = PhysicalParams::default();
    e.set("params.cart_mass", &mut p.cart_mass)?;
    e.set("params.link1_mass", &mut p.link1_mass)?;
    e.set("params.link2_mass", &mut p.link2_mass)?;
    e.set("params.link1_length", &mut p.link1_length)?;
    e.set("params.link2_length", &mut p.link2_length)?;
    e.set("params.cart_friction", &mut p.cart_friction)?;
    e.set("params.gravity", &mut p.gravity)?;

    // Uniform-rod geometry unless overridden explicitly.
    let rods = PhysicalParams::uniform_rods(
        p.cart_mass,
        p.link1_mass,
        p.link2_mass,
        p.link1_length,
        p.link2_length,
        p.cart_friction,
        p.gravity,
    );
    p.link1_com = e.get("params.link1_com")?.unwrap_or(rods.link1_com);
    p.link2_com = e.get("params.link2_com")?.unwrap_or(rods.link2_com);
    p.link1_inertia = e.get("params.link1_inertia")?.unwrap_or(rods.link1_inertia);
    p.link2_inertia = e.get("params.link2_inertia")?.unwrap_or(rods.link2_inertia);
    Ok(p)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| CliError::Config(format!("cannot read {}: {err}", path.display())))?;
    parse_scenario(&text)
}
