//! Beat-level state space.
//!
//! Each tempo is a row of `M` positions, where `M` is the beat period in
//! frames. A particle walks its row one position per frame and wraps from
//! position `M` back to position 1. The first positions of every row are the
//! beat states; tempo may only change on the wrap into them.

use crate::error::{Error, Result};

/// Rule that decides which positions at the start of a row are beat states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discriminator {
    /// The first `max(1, ceil(alpha * M))` positions of every row.
    Fractional(f64),
    /// The first `min(c, M)` positions of every row.
    ConstantCount(usize),
    /// Position 1 only, with a Gaussian fall-off of width `sigma_frac * M`
    /// used to blend the observation between the activation and the floor.
    GaussianSoft(f64),
}

impl Default for Discriminator {
    fn default() -> Self {
        Discriminator::Fractional(1.0 / 60.0)
    }
}

impl Discriminator {
    pub const DEFAULT_COUNT: usize = 1;
    pub const DEFAULT_SIGMA_FRAC: f64 = 0.05;

    fn validate(&self) -> Result<()> {
        match *self {
            Discriminator::Fractional(alpha) if !(alpha > 0.0 && alpha <= 1.0) => Err(
                Error::Config(format!("fractional alpha must be in (0, 1], got {alpha}")),
            ),
            Discriminator::ConstantCount(0) => {
                Err(Error::Config("constant count must be at least 1".into()))
            }
            Discriminator::GaussianSoft(s) if !(s > 0.0 && s <= 1.0) => Err(Error::Config(
                format!("gaussian sigma fraction must be in (0, 1], got {s}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceConfig {
    /// Frame period in seconds (hop size).
    pub frame_period_s: f64,
    pub tempo_min_bpm: f64,
    pub tempo_max_bpm: f64,
    pub discriminator: Discriminator,
}

impl Default for StateSpaceConfig {
    fn default() -> Self {
        Self {
            frame_period_s: 0.01,
            tempo_min_bpm: 55.0,
            tempo_max_bpm: 215.0,
            discriminator: Discriminator::default(),
        }
    }
}

impl StateSpaceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_period_s > 0.0 && self.frame_period_s.is_finite()) {
            return Err(Error::Config(format!(
                "frame period must be positive, got {}",
                self.frame_period_s
            )));
        }
        if !(self.tempo_min_bpm > 0.0 && self.tempo_min_bpm < self.tempo_max_bpm)
            || !self.tempo_max_bpm.is_finite()
        {
            return Err(Error::Config(format!(
                "tempo range must satisfy 0 < min < max, got [{}, {}]",
                self.tempo_min_bpm, self.tempo_max_bpm
            )));
        }
        self.discriminator.validate()
    }
}

/// Converts a tempo to its beat period in frames, `round(60 / (tempo * dt))`,
/// never less than one frame.
pub fn tempo_to_interval(tempo_bpm: f64, frame_period_s: f64) -> Result<usize> {
    if !(tempo_bpm > 0.0 && frame_period_s > 0.0) || !tempo_bpm.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tempo ({tempo_bpm}) and frame period ({frame_period_s}) must be positive"
        )));
    }
    let m = (60.0 / (tempo_bpm * frame_period_s)).round();
    Ok((m as usize).max(1))
}

/// Tempo in BPM of a row with beat period `m` frames.
pub fn interval_to_tempo(m: usize, frame_period_s: f64) -> f64 {
    60.0 / (m as f64 * frame_period_s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TempoRow {
    /// Beat period in frames, the row length.
    pub m: usize,
    pub tempo_bpm: f64,
    pub beat_state_count: usize,
    /// Per-position weight for the Gaussian discriminator, indexed by
    /// `position - 1`. `None` for the hard discriminators.
    pub soft_profile: Option<Vec<f64>>,
}

impl TempoRow {
    /// Whether `position` (1-based) lies inside the row's beat states.
    pub fn is_beat_state(&self, position: usize) -> Result<bool> {
        if position == 0 || position > self.m {
            return Err(Error::InvalidArgument(format!(
                "position {position} outside 1..={}",
                self.m
            )));
        }
        Ok(position <= self.beat_state_count)
    }
}

/// The full set of tempo rows. Immutable once built.
#[derive(Debug, Clone)]
pub struct StateSpace {
    rows: Vec<TempoRow>,
    /// Index of the first state of each row in a flat enumeration, plus a
    /// trailing entry equal to `total_states`.
    offsets: Vec<usize>,
    frame_period_s: f64,
    discriminator: Discriminator,
}

impl StateSpace {
    pub fn new(cfg: &StateSpaceConfig) -> Result<Self> {
        cfg.validate()?;
        let m_min = tempo_to_interval(cfg.tempo_max_bpm, cfg.frame_period_s)?;
        let m_max = tempo_to_interval(cfg.tempo_min_bpm, cfg.frame_period_s)?;
        if m_min > m_max {
            return Err(Error::Config(format!(
                "empty tempo range: M_min {m_min} > M_max {m_max}"
            )));
        }

        let rows: Vec<TempoRow> = (m_min..=m_max)
            .map(|m| build_row(m, cfg.frame_period_s, cfg.discriminator))
            .collect();

        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut acc = 0;
        for row in &rows {
            offsets.push(acc);
            acc += row.m;
        }
        offsets.push(acc);

        Ok(Self {
            rows,
            offsets,
            frame_period_s: cfg.frame_period_s,
            discriminator: cfg.discriminator,
        })
    }

    pub fn rows(&self) -> &[TempoRow] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &TempoRow {
        &self.rows[index]
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn total_states(&self) -> usize {
        *self.offsets.last().expect("offsets is never empty")
    }

    pub fn frame_period_s(&self) -> f64 {
        self.frame_period_s
    }

    pub fn discriminator(&self) -> Discriminator {
        self.discriminator
    }

    pub fn m_min(&self) -> usize {
        self.rows[0].m
    }

    pub fn m_max(&self) -> usize {
        self.rows[self.rows.len() - 1].m
    }

    /// Flat index of `(row, position)`; positions are 1-based.
    pub fn state_index(&self, row: usize, position: usize) -> usize {
        debug_assert!(position >= 1 && position <= self.rows[row].m);
        self.offsets[row] + position - 1
    }

    /// Inverse of [`StateSpace::state_index`].
    pub fn state_at(&self, index: usize) -> (usize, usize) {
        debug_assert!(index < self.total_states());
        // offsets is sorted; find the last row whose offset is <= index
        let row = self.offsets.partition_point(|&o| o <= index) - 1;
        (row, index - self.offsets[row] + 1)
    }

    /// Row index holding beat period `m`, clamped into the row range.
    pub fn nearest_row(&self, m: f64) -> usize {
        let clamped = m.round().clamp(self.m_min() as f64, self.m_max() as f64) as usize;
        clamped - self.m_min()
    }

    pub fn is_beat_state(&self, row: usize, position: usize) -> Result<bool> {
        self.rows
            .get(row)
            .ok_or_else(|| Error::InvalidArgument(format!("row {row} out of range")))?
            .is_beat_state(position)
    }

    /// Normalized-position threshold below which the median particle is
    /// considered to sit in the beat states.
    pub fn beat_boundary_fraction(&self, m_med: usize) -> f64 {
        match self.discriminator {
            Discriminator::Fractional(alpha) => alpha,
            Discriminator::ConstantCount(c) => c as f64 / m_med as f64,
            Discriminator::GaussianSoft(_) => 1.0 / m_med as f64,
        }
    }

    /// Normalized distribution over destination rows when a particle wraps
    /// out of `from_row`: mass `exp(-lambda * |m_to / m_from - 1|)`.
    pub fn tempo_transition_distribution(&self, from_row: usize, lambda: f64) -> Vec<f64> {
        let m_from = self.rows[from_row].m as f64;
        let mut probs: Vec<f64> = self
            .rows
            .iter()
            .map(|to| {
                let dev = (to.m as f64 / m_from - 1.0).abs();
                // avoids inf * 0 when lambda is infinite
                if dev == 0.0 {
                    1.0
                } else {
                    (-lambda * dev).exp()
                }
            })
            .collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        probs
    }
}

fn build_row(m: usize, frame_period_s: f64, discriminator: Discriminator) -> TempoRow {
    let (beat_state_count, soft_profile) = match discriminator {
        Discriminator::Fractional(alpha) => (((alpha * m as f64).ceil() as usize).clamp(1, m), None),
        Discriminator::ConstantCount(c) => (c.min(m), None),
        Discriminator::GaussianSoft(sigma_frac) => {
            let sigma = sigma_frac * m as f64;
            let profile = (0..m)
                .map(|p| (-((p * p) as f64) / (2.0 * sigma * sigma)).exp())
                .collect();
            (1, Some(profile))
        }
    };
    TempoRow {
        m,
        tempo_bpm: interval_to_tempo(m, frame_period_s),
        beat_state_count,
        soft_profile,
    }
}

/// Cumulative tempo-transition tables for one `(space, lambda)` pair, used to
/// sample a destination row with a single uniform draw.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    cdfs: Vec<Vec<f64>>,
}

impl TransitionTable {
    pub fn new(space: &StateSpace, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        let cdfs = (0..space.num_rows())
            .map(|r| {
                let mut acc = 0.0;
                let mut cdf: Vec<f64> = space
                    .tempo_transition_distribution(r, lambda)
                    .into_iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                *cdf.last_mut().unwrap() = 1.0;
                cdf
            })
            .collect();
        Ok(Self { cdfs })
    }

    /// Destination row for a wrap out of `from_row` given `u` in `[0, 1)`.
    pub fn sample(&self, from_row: usize, u: f64) -> usize {
        let cdf = &self.cdfs[from_row];
        cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
    }
}
