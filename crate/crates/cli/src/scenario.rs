//! One tuning experiment: build the (delay-augmented) model, search
//! `(ζ, ωₙ)` with the bat algorithm, then synthesize and simulate the best design.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use dipbat::bat::{self, PENALTY_BASE};
use dipbat::control::{self, StabilityReport};
use dipbat::linearization::{jacobian_model, model_discrepancy, paper_linear_model, ModelDiscrepancy};
use dipbat::sim::{self, Feedback, FitnessWeights};
use dipbat::{
    BatConfig, ControllerSpec, DelaySpec, GainVector, PadeConvention, PhysicalParams, PlantState, SearchBounds,
    SimConfig, StateSpaceModel, Trajectory,
};

use crate::config::{DEFAULT_OMEGA_BOUNDS, DEFAULT_ZETA_BOUNDS};
use crate::error::CliError;
use crate::output;

/// Which six-state linear model the controller is designed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DesignModel {
    /// Numerical Jacobian of the nonlinear equations of motion.
    #[default]
    Jacobian,
    /// Closed-form coefficient model.
    ClosedForm,
}

impl DesignModel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Jacobian => "jacobian",
            Self::ClosedForm => "closed_form",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    /// Measurement delay Γ, s. Zero disables the Padé state.
    pub delay: f64,
    pub design_model: DesignModel,
    pub pade_convention: PadeConvention,
    pub params: PhysicalParams,
    /// `[ζ, ωₙ]` search box.
    pub bounds: SearchBounds,
    pub bat: BatConfig,
    pub sim: SimConfig,
    pub weights: FitnessWeights,
    /// Fraction of the initial error norm used for settling.
    pub settling_band: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            label: "scenario".into(),
            delay: 0.0,
            design_model: DesignModel::Jacobian,
            pade_convention: PadeConvention::Stable,
            params: PhysicalParams::default(),
            bounds: SearchBounds {
                lower: vec![DEFAULT_ZETA_BOUNDS.0, DEFAULT_OMEGA_BOUNDS.0],
                upper: vec![DEFAULT_ZETA_BOUNDS.1, DEFAULT_OMEGA_BOUNDS.1],
            },
            bat: BatConfig::default(),
            sim: SimConfig::default(),
            weights: FitnessWeights::default(),
            settling_band: 0.02,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Scenario {
    pub fn with_delay(&self, delay: f64, label: impl Into<String>) -> Self {
        Self { delay, label: label.into(), ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.label.is_empty() || self.label.contains(['/', '\\']) || self.label.starts_with('.') {
            return Err(config_err(format!("scenario.label `{}` is not a valid directory name", self.label)));
        }
        if !(self.delay.is_finite() && self.delay >= 0.0) {
            return Err(config_err(format!("scenario.delay must be >= 0, got {}", self.delay)));
        }
        if let Err(dipbat::Error::InvalidParams { field, reason }) = self.params.validate() {
            return Err(config_err(format!("params.{field} {reason}")));
        }

        let b = &self.bounds;
        if b.lower.len() != 2 || b.upper.len() != 2 {
            return Err(config_err("bounds must cover exactly (zeta, omega_n)"));
        }
        for (name, lo, hi) in [("zeta", b.lower[0], b.upper[0]), ("omega", b.lower[1], b.upper[1])] {
            if !(lo.is_finite() && lo > 0.0) {
                return Err(config_err(format!("bounds.{name}_min must be > 0, got {lo}")));
            }
            if !(hi.is_finite() && lo < hi) {
                return Err(config_err(format!("bounds.{name}_min ({lo}) must be below bounds.{name}_max ({hi})")));
            }
        }

        self.bat.validate().map_err(|e| config_err(strip_prefix(e)))?;
        self.sim.validate().map_err(|e| config_err(strip_prefix(e)))?;
        if self.sim.initial_state.len() != PlantState::DIM {
            return Err(config_err(format!(
                "sim.initial_state needs {} entries, got {}",
                PlantState::DIM,
                self.sim.initial_state.len()
            )));
        }
        if !(self.settling_band > 0.0 && self.settling_band.is_finite()) {
            return Err(config_err("sim.settling_band must be > 0"));
        }
        let w = &self.weights;
        if [w.cart, w.lower, w.upper].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(config_err("fitness weights must be finite and >= 0"));
        }
        if w.cart + w.lower + w.upper == 0.0 {
            return Err(config_err("at least one fitness weight must be positive"));
        }
        Ok(())
    }

    pub fn delay_spec(&self) -> DelaySpec {
        DelaySpec { delay: self.delay }
    }
}

fn strip_prefix(e: dipbat::Error) -> String {
    match e {
        dipbat::Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

/// Undelayed plant and the model the controller is designed on.
#[derive(Debug, Clone)]
pub struct Models {
    pub plant: StateSpaceModel,
    pub augmented: StateSpaceModel,
    pub delay: DelaySpec,
}

impl Models {
    pub fn build(scenario: &Scenario) -> dipbat::Result<Self> {
        let plant = match scenario.design_model {
            DesignModel::Jacobian => jacobian_model(&scenario.params)?,
            DesignModel::ClosedForm => paper_linear_model(&scenario.params)?,
        };
        let delay = DelaySpec::new(scenario.delay)?;
        let augmented = delay.apply(&plant, scenario.pade_convention)?;
        Ok(Self { plant, augmented, delay })
    }

    pub fn delayed(&self) -> bool {
        self.delay.is_delayed()
    }
}

/// A synthesized controller and its closed loop.
#[derive(Debug, Clone)]
pub struct Design {
    pub gain: GainVector,
    pub closed_loop: StateSpaceModel,
    pub stability: StabilityReport,
}

pub fn synthesize(models: &Models, spec: &ControllerSpec) -> dipbat::Result<Design> {
    let delayed = models.delayed();
    let gain = control::design_gain(&models.augmented, spec, delayed)?;
    let closed_loop = control::closed_loop(&models.augmented, &gain, delayed)?;
    let stability = control::is_stable(&closed_loop)?;
    Ok(Design { gain, closed_loop, stability })
}

/// Weighted ISE of the linear closed loop, or a penalty for unstable or
/// failed designs.
pub fn fitness(scenario: &Scenario, models: &Models, point: &[f64]) -> f64 {
    let Ok(spec) = ControllerSpec::new(point[0], point[1]) else {
        return PENALTY_BASE;
    };
    let design = match synthesize(models, &spec) {
        Ok(d) => d,
        Err(_) => return PENALTY_BASE,
    };
    if !design.stability.stable {
        return PENALTY_BASE + design.stability.spectral_abscissa;
    }
    let cfg = scenario.sim.for_delay(models.delay);
    match sim::integrate_linear(&design.closed_loop, &cfg, None) {
        Ok(traj) => {
            let ise = sim::ise_fitness(&traj, &scenario.weights);
            if ise.is_finite() {
                ise
            } else {
                PENALTY_BASE + design.stability.spectral_abscissa
            }
        }
        Err(_) => PENALTY_BASE + design.stability.spectral_abscissa,
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub zeta: f64,
    pub omega_n: f64,
    pub best_fitness: f64,
    pub fitness_history: Vec<f64>,
    pub evaluations: usize,
    pub wall_time: f64,
    /// Gain on the design model (seven entries when delayed).
    pub gain: GainVector,
    /// Gain for the same poles on the undelayed plant.
    pub gain_undelayed: GainVector,
    pub stability: StabilityReport,
    pub stability_undelayed: StabilityReport,
    pub linear_delayed: Trajectory,
    pub linear_undelayed: Trajectory,
    pub nonlinear_delayed: Trajectory,
    pub nonlinear_undelayed: Trajectory,
    pub settling_linear: Option<f64>,
    pub settling_nonlinear: Option<f64>,
    /// Closed-form model against the Jacobian model; `Err` when the
    /// closed-form coefficients are degenerate.
    pub discrepancy: Result<ModelDiscrepancy, String>,
    pub files: Vec<PathBuf>,
}

impl ScenarioReport {
    pub fn stable(&self) -> bool {
        self.stability.stable
    }
}

/// Runs one scenario. When `out` is given, artifacts are written to
/// `out/<label>/` and listed in its manifest.
pub fn run_scenario(scenario: &Scenario, out: Option<&Path>) -> Result<ScenarioReport, CliError> {
    scenario.validate()?;
    let label = scenario.label.as_str();
    let wrap = |e| CliError::scenario(label, e);

    let models = Models::build(scenario).map_err(wrap)?;
    let result =
        bat::optimize(|x: &[f64]| fitness(scenario, &models, x), &scenario.bounds, &scenario.bat).map_err(wrap)?;
    let (zeta, omega_n) = (result.best_point[0], result.best_point[1]);
    let spec = ControllerSpec::new(zeta, omega_n).map_err(wrap)?;

    let design = synthesize(&models, &spec).map_err(wrap)?;
    let undelayed_models =
        Models { augmented: models.plant.clone(), delay: DelaySpec { delay: 0.0 }, ..models.clone() };
    let undelayed = synthesize(&undelayed_models, &spec).map_err(wrap)?;

    let delayed = models.delayed();
    let cfg_delayed = scenario.sim.for_delay(models.delay);
    let linear_delayed =
        sim::integrate_linear(&design.closed_loop, &cfg_delayed, Some(Feedback { gain: &design.gain, delayed }))
            .map_err(wrap)?;
    let linear_undelayed = sim::integrate_linear(
        &undelayed.closed_loop,
        &scenario.sim,
        Some(Feedback { gain: &undelayed.gain, delayed: false }),
    )
    .map_err(wrap)?;

    let nonlinear_delayed = sim::integrate_nonlinear_delayed(
        &scenario.params,
        &design.gain,
        models.delay,
        scenario.pade_convention,
        &cfg_delayed,
    )
    .map_err(wrap)?;
    let nonlinear_undelayed =
        sim::integrate_nonlinear(&scenario.params, &undelayed.gain, &scenario.sim).map_err(wrap)?;

    let discrepancy = match (paper_linear_model(&scenario.params), jacobian_model(&scenario.params)) {
        (Ok(closed), Ok(jac)) => model_discrepancy(&closed, &jac).map_err(|e| e.to_string()),
        (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
    };

    let mut report = ScenarioReport {
        scenario: scenario.clone(),
        zeta,
        omega_n,
        best_fitness: result.best_fitness,
        fitness_history: result.fitness_history,
        evaluations: result.evaluations,
        wall_time: result.wall_time,
        settling_linear: sim::settling_time(&linear_delayed, scenario.settling_band),
        settling_nonlinear: sim::settling_time(&nonlinear_delayed, scenario.settling_band),
        gain: design.gain,
        gain_undelayed: undelayed.gain,
        stability: design.stability,
        stability_undelayed: undelayed.stability,
        linear_delayed,
        linear_undelayed,
        nonlinear_delayed,
        nonlinear_undelayed,
        discrepancy,
        files: Vec::new(),
    };

    if let Some(out) = out {
        report.files = output::write_scenario(&out.join(label), &report)?;
    }
    Ok(report)
}

/// Summary line of a sweep; `outcome` holds the error text of a failed scenario.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub label: String,
    pub delay: f64,
    pub outcome: Result<SweepValues, (String, i32)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepValues {
    pub wall_time: f64,
    pub zeta: f64,
    pub omega_n: f64,
    pub best_fitness: f64,
    pub stable: bool,
}

/// Runs every scenario in order. Validation of the list happens before
/// any run; failures of individual scenarios are recorded in their row.
pub fn run_sweep(scenarios: &[Scenario], out: Option<&Path>) -> Result<Vec<SweepRow>, CliError> {
    if scenarios.is_empty() {
        return Err(CliError::Usage("sweep needs at least one scenario".into()));
    }
    let mut seen = HashSet::new();
    for s in scenarios {
        if !seen.insert(s.label.as_str()) {
            return Err(config_err(format!("duplicate scenario label `{}`", s.label)));
        }
    }
    for s in scenarios {
        s.validate()?;
    }

    let rows: Vec<SweepRow> = scenarios
        .iter()
        .map(|s| SweepRow {
            label: s.label.clone(),
            delay: s.delay,
            outcome: run_scenario(s, out)
                .map(|r| SweepValues {
                    wall_time: r.wall_time,
                    zeta: r.zeta,
                    omega_n: r.omega_n,
                    best_fitness: r.best_fitness,
                    stable: r.stable(),
                })
                .map_err(|e| (e.to_string(), e.exit_code())),
        })
        .collect();

    if let Some(out) = out {
        output::write_sweep_summary(out, &rows)?;
    }
    Ok(rows)
}
