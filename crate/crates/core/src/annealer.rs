//! Simulated annealing over keyword box positions.
//!
//! Each pass proposes a random translation, scores it with
//! [`weighted_overlap_energy`], and accepts it when a uniform draw falls
//! below `exp(-(E' - E) / T)`. The temperature drops linearly by
//! `cooling_rate` per pass. The loop stops once the energy is zero or
//! `max_iterations` passes have run.
//!
//! Random draws per pass, in order: the box index (single-box mode only),
//! then `dx`, `dy` for each moved box, then one acceptance draw. Keeping this
//! order fixed is what makes a trace replayable from its seed.

use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{weighted_overlap_energy, Layout};
use crate::seed::{self, Rng};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("initial_temperature must be positive, got {0}")]
    Temperature(f64),
    #[error("cooling_rate must be non-negative, got {0}")]
    CoolingRate(f64),
    #[error("max_shift_fraction must lie in (0, 1], got {0}")]
    ShiftFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveMode {
    /// Move one uniformly chosen box per pass.
    #[default]
    SingleBox,
    /// Jitter every box on every pass.
    AllBoxes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealConfig {
    pub initial_temperature: f64,
    /// Subtracted from the temperature after every pass.
    pub cooling_rate: f64,
    pub max_iterations: usize,
    /// Largest step, as a fraction of the canvas side, at temperature 1.
    pub max_shift_fraction: f64,
    pub seed: u64,
    pub move_mode: MoveMode,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            initial_temperature: 1.0,
            cooling_rate: 1.0 / 3000.0,
            max_iterations: 70,
            max_shift_fraction: 0.05,
            seed: 0,
            move_mode: MoveMode::SingleBox,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.initial_temperature.is_nan() || self.initial_temperature <= 0.0 {
            return Err(ConfigError::Temperature(self.initial_temperature));
        }
        if self.cooling_rate.is_nan() || self.cooling_rate < 0.0 {
            return Err(ConfigError::CoolingRate(self.cooling_rate));
        }
        if !(self.max_shift_fraction > 0.0 && self.max_shift_fraction <= 1.0) {
            return Err(ConfigError::ShiftFraction(self.max_shift_fraction));
        }
        Ok(())
    }

    /// The generator an [`optimize`] run with this config draws from.
    pub fn rng(&self) -> Rng {
        seed::rng(self.seed)
    }
}

/// Linear schedule, floored at zero.
pub fn temperature_at(config: &AnnealConfig, iteration: usize) -> f64 {
    (config.initial_temperature - iteration as f64 * config.cooling_rate).max(0.0)
}

/// Metropolis acceptance probability. Values above 1 mean the move is always
/// taken. At `temperature <= 0` the rule degenerates to strict descent:
/// 1 for an improvement, 0 otherwise.
pub fn acceptance_probability(energy_old: f64, energy_new: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return if energy_new < energy_old { 1.0 } else { 0.0 };
    }
    (-(energy_new - energy_old) / temperature).exp()
}

fn shift(rng: &mut Rng, delta: f64) -> i32 {
    let u: f64 = rng.gen();
    ((2.0 * u - 1.0) * delta).round() as i32
}

/// Propose a neighbouring layout: translate one box (or every box, in
/// [`MoveMode::AllBoxes`]) by a uniform step in `[-δ, δ]` per axis, where
/// `δ = max_shift_fraction · canvas side · temperature`, then clamp it back
/// into the canvas.
pub fn random_adjustment(layout: &Layout, temperature: f64, config: &AnnealConfig, rng: &mut Rng) -> Layout {
    let mut next = layout.clone();
    if layout.is_empty() {
        return next;
    }
    let canvas = layout.canvas();
    let t = temperature.max(0.0);
    let dx_max = config.max_shift_fraction * f64::from(canvas.width) * t;
    let dy_max = config.max_shift_fraction * f64::from(canvas.height) * t;

    let move_box = |index: usize, next: &mut Layout, rng: &mut Rng| {
        let dx = shift(rng, dx_max);
        let dy = shift(rng, dy_max);
        let moved = layout.entries()[index].bbox.translate(dx, dy);
        let clamped = canvas
            .clamp(&moved)
            .expect("boxes of a valid layout always fit their canvas");
        next.set_box_unchecked(index, clamped);
    };

    match config.move_mode {
        MoveMode::SingleBox => {
            let index = rng.gen_range(0..layout.len());
            move_box(index, &mut next, rng);
        }
        MoveMode::AllBoxes => {
            for index in 0..layout.len() {
                move_box(index, &mut next, rng);
            }
        }
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealStep {
    pub iteration: usize,
    pub temperature: f64,
    pub energy_before: f64,
    /// Energy of the proposed layout, whether or not it was taken.
    pub energy_after: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealTrace {
    pub initial_energy: f64,
    pub steps: Vec<AnnealStep>,
    pub final_layout: Layout,
    pub final_energy: f64,
    pub best_layout: Layout,
    pub best_energy: f64,
}

impl AnnealTrace {
    /// One row per pass, for plotting.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for step in &self.steps {
            w.serialize(step)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run the annealer and return the lowest-energy layout it visited.
///
/// The returned layout can differ from `trace.final_layout` when the walk
/// ended on an uphill move; its energy never exceeds the input's.
pub fn optimize(layout: &Layout, config: &AnnealConfig) -> (Layout, AnnealTrace) {
    let mut rng = config.rng();
    let mut current = layout.clone();
    let mut energy = weighted_overlap_energy(&current);
    let initial_energy = energy;
    let mut best = current.clone();
    let mut best_energy = energy;
    let mut steps = Vec::new();

    let mut iteration = 0;
    while energy > 0.0 && iteration < config.max_iterations {
        let temperature = temperature_at(config, iteration);
        let candidate = random_adjustment(&current, temperature, config, &mut rng);
        let candidate_energy = weighted_overlap_energy(&candidate);
        let p = acceptance_probability(energy, candidate_energy, temperature);
        let accepted = rng.gen::<f64>() < p;
        steps.push(AnnealStep {
            iteration,
            temperature,
            energy_before: energy,
            energy_after: candidate_energy,
            accepted,
        });
        if accepted {
            current = candidate;
            energy = candidate_energy;
            if energy < best_energy {
                best_energy = energy;
                best = current.clone();
            }
        }
        iteration += 1;
    }

    let trace = AnnealTrace {
        initial_energy,
        steps,
        final_layout: current,
        final_energy: energy,
        best_layout: best.clone(),
        best_energy,
    };
    (best, trace)
}
