//! Sequential Monte Carlo beat inference.
//!
//! Per frame the tracker runs motion (deterministic shift, tempo sampled only
//! on wrap), weighting against the current beat activation, stochastic
//! universal resampling, optional double/half tempo investigators, and a
//! median-based beat decision. Nothing is buffered: each activation yields its
//! decision before the next one is read.

mod decision;
mod oracle;
mod particles;
mod tracker;

pub use decision::{decide_beat, median_interval, median_normalized_position};
pub use oracle::{ExactForwardFilter, FilterFrame};
pub use particles::{
    observation_weight, sus_offspring, Particle, ParticleSet, WeighOutcome, OBSERVATION_FLOOR,
};
pub use tracker::{Tracker, TrackerStats};

use crate::error::{Error, Result};
use crate::state_space::StateSpaceConfig;

/// When to run the resampling step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResamplePolicy {
    #[default]
    EveryFrame,
    /// Only when the effective sample size drops below `N / 2`.
    EssHalf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub n_particles: usize,
    /// Sharpness of the tempo transition.
    pub lambda: f64,
    /// Observation likelihood outside the beat states.
    pub gamma: f64,
    pub state_space: StateSpaceConfig,
    /// Fraction of particles moved to double/half the median tempo each time
    /// a beat is emitted. Zero disables the investigators.
    pub tempo_injection_fraction: f64,
    pub seed: u64,
    pub resample_policy: ResamplePolicy,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            n_particles: 1000,
            lambda: 30.0,
            gamma: 0.03,
            state_space: StateSpaceConfig::default(),
            tempo_injection_fraction: 0.02,
            seed: 0,
            resample_policy: ResamplePolicy::EveryFrame,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::Config(format!(
                "need at least 2 particles, got {}",
                self.n_particles
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must be in (0, 1), got {}", self.gamma)));
        }
        if !(0.0..=0.2).contains(&self.tempo_injection_fraction) {
            return Err(Error::Config(format!(
                "tempo injection fraction must be in [0, 0.2], got {}",
                self.tempo_injection_fraction
            )));
        }
        self.state_space.validate()
    }

    pub fn frame_rate(&self) -> f64 {
        1.0 / self.state_space.frame_period_s
    }
}

/// A beat emitted by the tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatEvent {
    pub time_s: f64,
    pub frame_index: u64,
    /// Tempo of the median particle row at emission.
    pub tempo_bpm_estimate: f64,
}
