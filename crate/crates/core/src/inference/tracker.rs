use std::sync::Arc;

use super::decision::decide_beat;
use super::particles::ParticleSet;
use super::{BeatEvent, ResamplePolicy, TrackerConfig};
use crate::error::{Error, Result};
use crate::state_space::{StateSpace, TransitionTable};

/// Counters collected while streaming.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrackerStats {
    pub frames: u64,
    pub beats: u64,
    pub resamples: u64,
    pub injections: u64,
    pub degenerate_frames: u64,
}

/// Online beat tracker for a single activation stream.
///
/// ```
/// use beatpf::inference::{Tracker, TrackerConfig};
///
/// let mut tracker = Tracker::new(TrackerConfig { seed: 3, ..Default::default() }).unwrap();
/// let mut beats = Vec::new();
/// for k in 0..1000u64 {
///     let b = if k % 50 == 0 { 0.9 } else { 0.02 };
///     if let Some(ev) = tracker.step(b).unwrap() {
///         beats.push(ev.time_s);
///     }
/// }
/// assert!(beats.len() > 15);
/// ```
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    space: Arc<StateSpace>,
    transitions: Arc<TransitionTable>,
    particles: ParticleSet,
    frame_index: u64,
    last_beat_frame: Option<u64>,
    stats: TrackerStats,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let space = Arc::new(StateSpace::new(&cfg.state_space)?);
        Self::with_space(cfg, space)
    }

    /// Builds a tracker over an existing state space, which must have been
    /// constructed from `cfg.state_space`.
    pub fn with_space(cfg: TrackerConfig, space: Arc<StateSpace>) -> Result<Self> {
        cfg.validate()?;
        let transitions = Arc::new(TransitionTable::new(&space, cfg.lambda)?);
        let particles = ParticleSet::uniform(&space, cfg.n_particles, cfg.seed);
        Ok(Self {
            cfg,
            space,
            transitions,
            particles,
            frame_index: 0,
            last_beat_frame: None,
            stats: TrackerStats::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    /// Index of the next frame to be processed.
    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn last_beat_frame(&self) -> Option<u64> {
        self.last_beat_frame
    }

    pub fn stats(&self) -> TrackerStats {
        self.stats
    }

    /// Consumes the activation of the current frame and returns a beat if
    /// one is decided at this frame.
    pub fn step(&mut self, b: f64) -> Result<Option<BeatEvent>> {
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::ActivationRange { frame: self.frame_index, value: b });
        }
        let space = &*self.space;

        let wrapped = self.particles.advance(space, &self.transitions);
        if self.particles.weigh(space, b, self.cfg.gamma)?.degenerate {
            self.stats.degenerate_frames += 1;
        }

        let resample = match self.cfg.resample_policy {
            ResamplePolicy::EveryFrame => true,
            ResamplePolicy::EssHalf => {
                self.particles.effective_sample_size() < self.cfg.n_particles as f64 / 2.0
            }
        };
        let priority = if resample {
            self.stats.resamples += 1;
            Some(self.particles.resample_sus())
        } else {
            None
        };

        let event = decide_beat(&self.particles, space, self.frame_index, self.last_beat_frame);
        if let Some(ev) = &event {
            self.last_beat_frame = Some(ev.frame_index);
            self.stats.beats += 1;
        }

        // Investigators start at position 1, so they are seeded once per
        // emitted beat, when that position is in phase with the population.
        if event.is_some() && wrapped > 0 && self.cfg.tempo_injection_fraction > 0.0 {
            let priority = priority.unwrap_or_else(|| {
                self.particles.particles().iter().map(|p| p.weight).collect()
            });
            let moved = self.particles.inject_tempo_hypotheses(
                space,
                self.cfg.tempo_injection_fraction,
                &priority,
            );
            if moved > 0 {
                self.stats.injections += 1;
            }
        }
        self.frame_index += 1;
        self.stats.frames += 1;
        Ok(event)
    }

    /// Runs [`Tracker::step`] over a whole activation sequence.
    pub fn run(&mut self, activations: &[f64]) -> Result<Vec<BeatEvent>> {
        let mut events = Vec::new();
        for &b in activations {
            if let Some(ev) = self.step(b)? {
                events.push(ev);
            }
        }
        Ok(events)
    }
}
