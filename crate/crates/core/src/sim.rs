//! Fixed-step RK4 simulation of closed loops, plus the fitness and settling metrics.

use crate::control::{effective_gain, GainVector};
use crate::delay::{DelaySpec, PadeConvention, DELAYED_CHANNEL};
use crate::dynamics::{nonlinear_derivative, GeneralizedForce, PhysicalParams, PlantState};
use crate::error::{Error, Result};
use crate::linearization::StateSpaceModel;

/// Step used inside optimization loops.
pub const OPTIMIZATION_DT: f64 = 1e-3;
/// Step used for verification runs.
pub const VERIFICATION_DT: f64 = 1e-4;
/// Horizon of the fitness simulation, s.
pub const DEFAULT_HORIZON: f64 = 20.0;
/// Lower-link tilt of the reference scenarios, degrees.
pub const DEFAULT_TILT_DEG: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Absolute initial state; its length fixes the simulated order.
    pub initial_state: Vec<f64>,
    /// Desired cart position, m.
    pub reference: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let mut initial_state = vec![0.0; PlantState::DIM];
        initial_state[1] = DEFAULT_TILT_DEG.to_radians();
        Self { dt: OPTIMIZATION_DT, horizon: DEFAULT_HORIZON, initial_state, reference: 0.0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("sim.dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::Config(format!("sim.horizon must be >= dt, got {}", self.horizon)));
        }
        if !self.initial_state.iter().all(|v| v.is_finite()) || !self.reference.is_finite() {
            return Err(Error::Config("sim.initial_state and sim.reference must be finite".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Same configuration with the initial state extended for a delayed loop.
    pub fn for_delay(&self, delay: DelaySpec) -> Self {
        let mut cfg = self.clone();
        if self.initial_state.len() == PlantState::DIM {
            cfg.initial_state = delay.extend_state(&self.initial_state);
        }
        cfg
    }
}

/// Uniformly sampled state history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Applied cart force at each sample, N.
    pub inputs: Vec<f64>,
    pub reference: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn order(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Deviation of sample `i` from the rest point at the reference.
    pub fn error(&self, i: usize) -> Vec<f64> {
        let x_ref = reference_state(self.order(), self.reference);
        self.states[i].iter().zip(&x_ref).map(|(x, r)| x - r).collect()
    }
}

/// Rest point with the cart at `reference`. The Padé state of a delayed
/// loop settles at twice the cart position.
pub fn reference_state(order: usize, reference: f64) -> Vec<f64> {
    let mut x = vec![0.0; order];
    if order > DELAYED_CHANNEL {
        x[DELAYED_CHANNEL] = reference;
    }
    if order > PlantState::DIM {
        x[PlantState::DIM] = 2.0 * reference;
    }
    x
}

/// Classical fourth-order Runge-Kutta with reusable stage buffers.
#[derive(Debug, Clone, Default)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advances `x` by `dt` in place. `dt` may be negative.
    pub fn step<F>(&mut self, f: &mut F, x: &mut [f64], dt: f64) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let n = x.len();
        for buf in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.stage] {
            buf.resize(n, 0.0);
        }

        fn axpy(out: &mut [f64], x: &[f64], h: f64, k: &[f64]) {
            for ((o, x), k) in out.iter_mut().zip(x).zip(k) {
                *o = x + h * k;
            }
        }

        f(x, &mut self.k1)?;
        axpy(&mut self.stage, x, 0.5 * dt, &self.k1);
        f(&self.stage, &mut self.k2)?;
        axpy(&mut self.stage, x, 0.5 * dt, &self.k2);
        f(&self.stage, &mut self.k3)?;
        axpy(&mut self.stage, x, dt, &self.k3);
        f(&self.stage, &mut self.k4)?;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// Integrates `ẋ = f(x)` on the configured grid, recording `input(x)`.
fn integrate<F, U>(config: &SimConfig, mut f: F, input: U) -> Result<Trajectory>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    U: Fn(&[f64]) -> f64,
{
    config.validate()?;
    let steps = config.steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);

    let mut rk = Rk4::new();
    let mut x = config.initial_state.clone();
    for k in 0..=steps {
        let t = k as f64 * config.dt;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged { time: t });
        }
        times.push(t);
        inputs.push(input(&x));
        states.push(x.clone());
        if k < steps {
            rk.step(&mut f, &mut x, config.dt).map_err(|e| match e {
                Error::Numerical(_) => Error::Diverged { time: t },
                other => other,
            })?;
        }
    }
    Ok(Trajectory { times, states, inputs, reference: config.reference })
}

/// Feedback recorded alongside a linear simulation.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    pub gain: &'a GainVector,
    pub delayed: bool,
}

/// RK4 integration of the autonomous error dynamics `ė = A_cl·e` with
/// `e = x − x_ref`. When `feedback` is supplied the input `u = −K̃·e` is
/// recorded; otherwise inputs are zero.
pub fn integrate_linear(
    model: &StateSpaceModel,
    config: &SimConfig,
    feedback: Option<Feedback<'_>>,
) -> Result<Trajectory> {
    let n = model.order();
    if config.initial_state.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, model order is {n}",
            config.initial_state.len()
        )));
    }
    let x_ref = reference_state(n, config.reference);
    let a = &model.a;
    let k = feedback.map(|fb| effective_gain(fb.gain, fb.delayed));
    if let Some(k) = &k {
        if k.len() != n {
            return Err(Error::DimensionMismatch(format!("gain has {} entries, model order is {n}", k.len())));
        }
    }

    let rhs = |x: &[f64], dx: &mut [f64]| {
        for (i, d) in dx.iter_mut().enumerate() {
            *d = (0..n).map(|j| a[(i, j)] * (x[j] - x_ref[j])).sum();
        }
        Ok(())
    };
    let input = |x: &[f64]| match &k {
        Some(k) => -x.iter().zip(&x_ref).zip(&k.0).map(|((x, r), g)| g * (x - r)).sum::<f64>(),
        None => 0.0,
    };
    integrate(config, rhs, input)
}

/// Nonlinear plant under `F = −K·(x − x_ref)` with undelayed measurements.
pub fn integrate_nonlinear(params: &PhysicalParams, gain: &GainVector, config: &SimConfig) -> Result<Trajectory> {
    params.validate()?;
    if gain.len() != PlantState::DIM || config.initial_state.len() != PlantState::DIM {
        return Err(Error::DimensionMismatch(format!(
            "undelayed nonlinear loop needs 6 gains and 6 initial states, got {} and {}",
            gain.len(),
            config.initial_state.len()
        )));
    }
    let x_ref = reference_state(PlantState::DIM, config.reference);
    let force = |x: &[f64]| -gain.0.iter().zip(x).zip(&x_ref).map(|((k, x), r)| k * (x - r)).sum::<f64>();
    let rhs = |x: &[f64], dx: &mut [f64]| {
        let d = nonlinear_derivative(params, &PlantState::from_slice(x), GeneralizedForce::new(force(x)))?;
        dx.copy_from_slice(&d);
        Ok(())
    };
    integrate(config, rhs, force)
}

/// Nonlinear plant with the Padé measurement state appended. The gain has
/// seven entries and its first entry reads the delayed measurement.
pub fn integrate_nonlinear_delayed(
    params: &PhysicalParams,
    gain: &GainVector,
    delay: DelaySpec,
    convention: PadeConvention,
    config: &SimConfig,
) -> Result<Trajectory> {
    params.validate()?;
    if !delay.is_delayed() {
        return integrate_nonlinear(params, gain, config);
    }
    let n = PlantState::DIM + 1;
    if gain.len() != n || config.initial_state.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "delayed nonlinear loop needs 7 gains and 7 initial states, got {} and {}",
            gain.len(),
            config.initial_state.len()
        )));
    }
    let (diag, coupling) = match convention {
        PadeConvention::Stable => (-2.0 / delay.delay, 4.0 / delay.delay),
        PadeConvention::Unstable => (2.0 / delay.delay, -4.0 / delay.delay),
    };
    let k = effective_gain(gain, true);
    let x_ref = reference_state(n, config.reference);
    let force = |x: &[f64]| -k.0.iter().zip(x).zip(&x_ref).map(|((k, x), r)| k * (x - r)).sum::<f64>();
    let rhs = |x: &[f64], dx: &mut [f64]| {
        let d = nonlinear_derivative(params, &PlantState::from_slice(x), GeneralizedForce::new(force(x)))?;
        dx[..PlantState::DIM].copy_from_slice(&d);
        dx[PlantState::DIM] = diag * (x[PlantState::DIM] - x_ref[PlantState::DIM])
            + coupling * (x[DELAYED_CHANNEL] - x_ref[DELAYED_CHANNEL]);
        Ok(())
    };
    integrate(config, rhs, force)
}

/// Weights on cart-position error and the two link angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessWeights {
    pub cart: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self { cart: 1.0, lower: 1.0, upper: 1.0 }
    }
}

/// Weighted integral of squared error, left Riemann sum over the samples.
pub fn ise_fitness(traj: &Trajectory, weights: &FitnessWeights) -> f64 {
    let dt = traj.dt();
    let samples = traj.len().saturating_sub(1);
    traj.states[..samples]
        .iter()
        .map(|x| {
            let e = x[0] - traj.reference;
            dt * (weights.cart * e * e + weights.lower * x[1] * x[1] + weights.upper * x[2] * x[2])
        })
        .sum()
}

/// Norms below this never count as leaving the band of a zero start.
pub const SETTLING_FLOOR: f64 = 1e-9;

/// First sample time after which the error norm stays within
/// `band × max(‖e(0)‖, floor)`. `None` if the final sample is still outside.
pub fn settling_time(traj: &Trajectory, band: f64) -> Option<f64> {
    if traj.is_empty() || band.is_nan() || band <= 0.0 {
        return None;
    }
    let norm = |i: usize| traj.error(i).iter().map(|v| v * v).sum::<f64>().sqrt();
    let threshold = band * norm(0).max(SETTLING_FLOOR);
    let last_outside = (0..traj.len()).rev().find(|&i| norm(i) > threshold);
    match last_outside {
        None => Some(0.0),
        Some(i) if i + 1 == traj.len() => None,
        Some(i) => Some(traj.times[i + 1]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, DMatrix};

    fn scalar(a: f64) -> StateSpaceModel {
        StateSpaceModel::new(dmatrix![a], dmatrix![1.0]).unwrap()
    }

    fn cfg(x0: Vec<f64>, dt: f64, horizon: f64) -> SimConfig {
        SimConfig { dt, horizon, initial_state: x0, reference: 0.0 }
    }

    #[test]
    fn zero_start_stays_at_rest() {
        let m = StateSpaceModel::new(DMatrix::from_element(3, 3, 0.3), DMatrix::zeros(3, 1)).unwrap();
        let t = integrate_linear(&m, &cfg(vec![0.0; 3], 0.01, 1.0), None).unwrap();
        assert!(t.states.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(t.len(), 101);
    }

    #[test]
    fn scalar_decay_matches_exponential() {
        let t = integrate_linear(&scalar(-1.0), &cfg(vec![1.0], 1e-3, 1.0), None).unwrap();
        assert_relative_eq!(t.states.last().unwrap()[0], (-1.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn divergence_reports_time() {
        let err = integrate_linear(&scalar(800.0), &cfg(vec![1.0], 0.01, 10.0), None).unwrap_err();
        assert!(matches!(err, Error::Diverged { time } if time > 0.0 && time < 10.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(integrate_linear(&scalar(-1.0), &cfg(vec![1.0, 2.0], 0.1, 1.0), None).is_err());
    }

    #[test]
    fn records_feedback_input() {
        let k = GainVector(vec![2.0]);
        let m = scalar(-2.0);
        let t = integrate_linear(&m, &cfg(vec![0.5], 0.1, 0.2), Some(Feedback { gain: &k, delayed: false })).unwrap();
        assert_eq!(t.inputs[0], -1.0);
    }

    #[test]
    fn nonlinear_rest_start_stays_put() {
        let p = PhysicalParams::default();
        let k = GainVector(vec![1.0, -50.0, 40.0, 2.0, -3.0, 3.0]);
        let t = integrate_nonlinear(&p, &k, &cfg(vec![0.0; 6], 1e-3, 1.0)).unwrap();
        assert!(t.states.iter().flatten().all(|&v| v == 0.0));
    }

    fn constant(states: Vec<f64>, dt: f64, horizon: f64) -> Trajectory {
        let n = (horizon / dt).round() as usize;
        Trajectory {
            times: (0..=n).map(|i| i as f64 * dt).collect(),
            states: vec![states; n + 1],
            inputs: vec![0.0; n + 1],
            reference: 0.0,
        }
    }

    #[test]
    fn ise_examples() {
        let zero = constant(vec![0.0; 6], 0.01, 2.0);
        assert_eq!(ise_fitness(&zero, &FitnessWeights::default()), 0.0);
        for dt in [0.5, 0.01, 1e-3] {
            let shifted = constant(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0], dt, 2.0);
            assert_relative_eq!(ise_fitness(&shifted, &FitnessWeights::default()), 2.0, epsilon = 1e-9);
        }
        let tilted = constant(vec![1.0, 0.5, 0.5, 0.0, 0.0, 0.0], 0.1, 1.0);
        let cart_only = FitnessWeights { cart: 1.0, lower: 0.0, upper: 0.0 };
        assert_relative_eq!(ise_fitness(&tilted, &cart_only), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn settling_examples() {
        let zero = constant(vec![0.0; 6], 0.01, 1.0);
        assert_eq!(settling_time(&zero, 0.02), Some(0.0));

        let dt = 1e-3;
        let t = integrate_linear(&scalar(-1.0), &cfg(vec![1.0], dt, 6.0), None).unwrap();
        let ts = settling_time(&t, 0.02).unwrap();
        assert!((ts - 50f64.ln()).abs() <= dt, "{ts}");

        let grow = integrate_linear(&scalar(0.5), &cfg(vec![1.0], 0.01, 5.0), None).unwrap();
        assert_eq!(settling_time(&grow, 0.02), None);
    }

    #[test]
    fn reference_state_layout() {
        assert_eq!(reference_state(6, 0.5), vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(reference_state(7, 0.5)[6], 1.0);
    }
}
