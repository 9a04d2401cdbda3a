//! Bat-algorithm minimizer over a box.
//!
//! Each bat carries a position, a velocity, a loudness `Aᵢ` and a pulse
//! rate `rᵢ`. Per generation `t` and bat `i`:
//!
//! 1. `fᵢ = f_min + (f_max − f_min)·β`, `β ~ U(0,1)`
//! 2. `vᵢ ← vᵢ + (xᵢ − x*)·fᵢ`, candidate `xᵢ + vᵢ` clamped to the box
//! 3. with probability `1 − rᵢ` the candidate is replaced by the local walk
//!    `x* + ε·Ā` (`ε ~ U(−1,1)` per dimension, `Ā` the mean loudness), clamped
//! 4. the candidate replaces `xᵢ` if it is better and `U(0,1) < Aᵢ`; on
//!    acceptance `Aᵢ ← α·Aᵢ` and `rᵢ ← r₀·(1 − e^{−γt})`
//! 5. `x*` keeps the best point ever evaluated (ties keep the incumbent)
//!
//! All random draws of a generation happen before its evaluations, which run
//! on the rayon pool and are merged in bat order, so results depend only on
//! the seed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Fitness of an unstable or failed design: `PENALTY_BASE + spectral abscissa`.
pub const PENALTY_BASE: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct BatConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Initial loudness `A₀`.
    pub loudness: f64,
    /// Initial pulse rate `r₀`.
    pub pulse_rate: f64,
    pub freq_min: f64,
    pub freq_max: f64,
    /// `α`; 1 keeps the loudness constant.
    pub loudness_decay: f64,
    /// `γ`; 0 keeps the pulse rate constant at `r₀`.
    pub pulse_growth: f64,
    pub seed: u64,
}

impl Default for BatConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            generations: 20,
            loudness: 0.5,
            pulse_rate: 0.5,
            freq_min: 0.0,
            freq_max: 2.0,
            loudness_decay: 0.9,
            pulse_growth: 0.9,
            seed: 1,
        }
    }
}

impl BatConfig {
    /// Loudness and pulse rate held at their initial values.
    pub fn constant_mode(mut self) -> Self {
        self.loudness_decay = 1.0;
        self.pulse_growth = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.population_size < 2 {
            return fail(format!("bat.population_size must be >= 2, got {}", self.population_size));
        }
        if self.generations < 1 {
            return fail("bat.generations must be >= 1".into());
        }
        if !(self.loudness > 0.0 && self.loudness <= 1.0) {
            return fail(format!("bat.loudness must be in (0, 1], got {}", self.loudness));
        }
        if !(0.0..=1.0).contains(&self.pulse_rate) {
            return fail(format!("bat.pulse_rate must be in [0, 1], got {}", self.pulse_rate));
        }
        if !(self.freq_min.is_finite() && self.freq_max.is_finite() && self.freq_min <= self.freq_max) {
            return fail(format!("bat.freq_min must not exceed bat.freq_max ({} > {})", self.freq_min, self.freq_max));
        }
        if !(self.loudness_decay > 0.0 && self.loudness_decay <= 1.0) {
            return fail(format!("bat.loudness_decay must be in (0, 1], got {}", self.loudness_decay));
        }
        if !(self.pulse_growth.is_finite() && self.pulse_growth >= 0.0) {
            return fail(format!("bat.pulse_growth must be >= 0, got {}", self.pulse_growth));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let bounds = Self { lower, upper };
        bounds.validate()?;
        Ok(bounds)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(Error::Config(format!(
                "bounds need matching non-empty lower/upper vectors, got {} and {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("bounds[{i}]: lower {lo} must be below upper {hi}")));
            }
        }
        Ok(())
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| lo <= v && v <= hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_point: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after each generation.
    pub fitness_history: Vec<f64>,
    pub evaluations: usize,
    /// Seconds.
    pub wall_time: f64,
    pub final_loudness: Vec<f64>,
    pub final_pulse_rate: Vec<f64>,
}

struct Swarm {
    positions: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    fitness: Vec<f64>,
    loudness: Vec<f64>,
    pulse_rate: Vec<f64>,
}

/// A bat's move for one generation, drawn before evaluation.
struct Proposal {
    candidate: Vec<f64>,
    acceptance_draw: f64,
}

fn sanitize(value: f64) -> f64 {
    if value.is_nan() {
        f64::INFINITY
    } else {
        value
    }
}

fn evaluate_all<F>(objective: &F, points: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    points.par_iter().map(|x| sanitize(objective(x))).collect()
}

/// Minimizes `objective` over `bounds` from a seeded uniform initial population.
pub fn optimize<F>(objective: F, bounds: &SearchBounds, config: &BatConfig) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    bounds.validate()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = (0..config.population_size)
        .map(|_| bounds.lower.iter().zip(&bounds.upper).map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect())
        .collect();
    run(objective, bounds, config, initial, rng)
}

/// Same as [`optimize`] with a caller-supplied initial population.
pub fn optimize_from<F>(
    objective: F,
    bounds: &SearchBounds,
    config: &BatConfig,
    initial: Vec<Vec<f64>>,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    bounds.validate()?;
    config.validate()?;
    if initial.len() != config.population_size || initial.iter().any(|x| x.len() != bounds.dim()) {
        return Err(Error::Config(format!(
            "initial population must hold {} points of dimension {}",
            config.population_size,
            bounds.dim()
        )));
    }
    let mut initial = initial;
    for x in &mut initial {
        bounds.clamp(x);
    }
    run(objective, bounds, config, initial, ChaCha8Rng::seed_from_u64(config.seed))
}

fn run<F>(
    objective: F,
    bounds: &SearchBounds,
    config: &BatConfig,
    initial: Vec<Vec<f64>>,
    mut rng: ChaCha8Rng,
) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let started = Instant::now();
    let pop = config.population_size;
    let dim = bounds.dim();

    let fitness = evaluate_all(&objective, &initial);
    let mut evaluations = pop;
    let mut swarm = Swarm {
        positions: initial,
        velocities: vec![vec![0.0; dim]; pop],
        fitness,
        loudness: vec![config.loudness; pop],
        pulse_rate: vec![config.pulse_rate; pop],
    };

    let mut best_idx = 0;
    for i in 1..pop {
        if swarm.fitness[i] < swarm.fitness[best_idx] {
            best_idx = i;
        }
    }
    let mut best_point = swarm.positions[best_idx].clone();
    let mut best_fitness = swarm.fitness[best_idx];
    let mut history = Vec::with_capacity(config.generations);

    for generation in 1..=config.generations {
        let mean_loudness = swarm.loudness.iter().sum::<f64>() / pop as f64;

        let proposals: Vec<Proposal> = (0..pop)
            .map(|i| {
                let beta: f64 = rng.random();
                let freq = config.freq_min + (config.freq_max - config.freq_min) * beta;
                let mut candidate = Vec::with_capacity(dim);
                for ((v, x), b) in swarm.velocities[i].iter_mut().zip(&swarm.positions[i]).zip(&best_point) {
                    *v += (x - b) * freq;
                    candidate.push(x + *v);
                }
                bounds.clamp(&mut candidate);

                if rng.random::<f64>() > swarm.pulse_rate[i] {
                    for (c, b) in candidate.iter_mut().zip(&best_point) {
                        let eps: f64 = rng.random_range(-1.0..1.0);
                        *c = b + eps * mean_loudness;
                    }
                    bounds.clamp(&mut candidate);
                }
                Proposal { candidate, acceptance_draw: rng.random() }
            })
            .collect();

        let candidates: Vec<Vec<f64>> = proposals.iter().map(|p| p.candidate.clone()).collect();
        let scores = evaluate_all(&objective, &candidates);
        evaluations += pop;

        for (i, (proposal, score)) in proposals.into_iter().zip(scores).enumerate() {
            if score < swarm.fitness[i] && proposal.acceptance_draw < swarm.loudness[i] {
                swarm.fitness[i] = score;
                swarm.positions[i] = proposal.candidate.clone();
                swarm.loudness[i] *= config.loudness_decay;
                if config.pulse_growth > 0.0 {
                    swarm.pulse_rate[i] = config.pulse_rate * (1.0 - (-config.pulse_growth * generation as f64).exp());
                }
            }
            if score < best_fitness {
                best_fitness = score;
                best_point = proposal.candidate;
            }
        }
        history.push(best_fitness);
    }

    Ok(OptimizationResult {
        best_point,
        best_fitness,
        fitness_history: history,
        evaluations,
        wall_time: started.elapsed().as_secs_f64(),
        final_loudness: swarm.loudness,
        final_pulse_rate: swarm.pulse_rate,
    })
}
