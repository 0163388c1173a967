//! Synthetic activation streams with known beat times.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::frontend::{write_binary, write_text, ActivationFormat, MonoAudio};

/// Piecewise-constant tempo curve plus the shape of the activation bumps.
#[derive(Debug, Clone, PartialEq)]
pub struct TempoScript {
    /// `(start_s, tempo_bpm)` breakpoints, strictly increasing in time. The
    /// first tempo also applies before the first breakpoint.
    pub segments: Vec<(f64, f64)>,
    pub duration_s: f64,
    /// Standard deviation of the Gaussian bump, in frames.
    pub pulse_width_frames: f64,
    pub peak: f64,
    pub noise_floor: f64,
    /// Standard deviation of per-beat timing jitter.
    pub jitter_s: f64,
    /// Probability that a beat's bump is left out.
    pub dropout_prob: f64,
    pub seed: u64,
}

impl Default for TempoScript {
    fn default() -> Self {
        Self {
            segments: vec![(0.0, 120.0)],
            duration_s: 30.0,
            pulse_width_frames: 1.5,
            peak: 0.9,
            noise_floor: 0.02,
            jitter_s: 0.0,
            dropout_prob: 0.0,
            seed: 0,
        }
    }
}

impl TempoScript {
    pub fn constant(tempo_bpm: f64, duration_s: f64) -> Self {
        Self { segments: vec![(0.0, tempo_bpm)], duration_s, ..Default::default() }
    }

    pub fn step(from_bpm: f64, to_bpm: f64, at_s: f64, duration_s: f64) -> Self {
        Self { segments: vec![(0.0, from_bpm), (at_s, to_bpm)], duration_s, ..Default::default() }
    }

    /// Linear tempo drift between `start_s` and `end_s`, approximated by a
    /// new breakpoint every `resolution_s`.
    pub fn ramp(from_bpm: f64, to_bpm: f64, start_s: f64, end_s: f64, duration_s: f64) -> Self {
        let resolution_s = 0.5;
        let mut segments = vec![(0.0, from_bpm)];
        let steps = ((end_s - start_s) / resolution_s).round().max(1.0) as usize;
        for i in 0..=steps {
            let t = start_s + i as f64 * resolution_s;
            let frac = i as f64 / steps as f64;
            let tempo = from_bpm + (to_bpm - from_bpm) * frac;
            if t > 0.0 {
                segments.push((t, tempo));
            } else {
                segments[0].1 = tempo;
            }
        }
        Self { segments, duration_s, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::InvalidArgument(m));
        if self.segments.is_empty() {
            return err("tempo script needs at least one segment".into());
        }
        if self.segments.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return err("segment start times must be strictly increasing".into());
        }
        if self.segments.iter().any(|&(t, bpm)| !(bpm > 0.0 && bpm.is_finite()) || !t.is_finite()) {
            return err("segment tempi must be positive".into());
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return err(format!("duration must be non-negative, got {}", self.duration_s));
        }
        if !(self.pulse_width_frames > 0.0) {
            return err("pulse width must be positive".into());
        }
        if !(self.peak > 0.0 && self.peak <= 1.0) || !(self.noise_floor >= 0.0 && self.noise_floor < self.peak) {
            return err(format!(
                "need 0 <= noise_floor < peak <= 1, got floor {} peak {}",
                self.noise_floor, self.peak
            ));
        }
        if !(self.jitter_s >= 0.0) || !(0.0..=1.0).contains(&self.dropout_prob) {
            return err("jitter must be >= 0 and dropout in [0, 1]".into());
        }
        Ok(())
    }

    /// Beat instants of the tempo curve before jitter, one every full cycle of
    /// accumulated phase, starting at `t = 0`.
    pub fn nominal_beat_times(&self) -> Vec<f64> {
        const EPS: f64 = 1e-9;
        let mut beats = Vec::new();
        let mut phase = 0.0;
        for (i, &(start, bpm)) in self.segments.iter().enumerate() {
            let seg_start = if i == 0 { 0.0 } else { start.min(self.duration_s) };
            let seg_end = self
                .segments
                .get(i + 1)
                .map_or(self.duration_s, |s| s.0.min(self.duration_s));
            if seg_end <= seg_start {
                continue;
            }
            let rate = bpm / 60.0;
            let end_phase = phase + rate * (seg_end - seg_start);
            let mut k = (phase - EPS).ceil();
            while k < end_phase - EPS {
                beats.push(seg_start + (k - phase) / rate);
                k += 1.0;
            }
            phase = end_phase;
        }
        beats
    }
}

/// Activations and the beat instants they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrack {
    pub activations: Vec<f64>,
    pub reference: Vec<f64>,
    pub frame_rate: f64,
}

/// Lays a Gaussian bump at every (jittered) beat and adds the noise floor.
/// Dropped-out beats keep their reference time but get no bump.
pub fn generate(script: &TempoScript, frame_rate: f64) -> Result<SyntheticTrack> {
    script.validate()?;
    if !(frame_rate > 0.0) {
        return Err(Error::InvalidArgument(format!("frame rate must be positive, got {frame_rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let jitter = Normal::new(0.0, script.jitter_s).expect("validated jitter");

    let mut reference: Vec<f64> = script
        .nominal_beat_times()
        .into_iter()
        .map(|t| {
            if script.jitter_s > 0.0 {
                (t + jitter.sample(&mut rng)).clamp(0.0, script.duration_s)
            } else {
                t
            }
        })
        .filter(|&t| t < script.duration_s)
        .collect();
    reference.sort_by(f64::total_cmp);

    let n_frames = (script.duration_s * frame_rate).round() as usize;
    let mut bumps = vec![0.0; n_frames];
    let sigma = script.pulse_width_frames;
    let reach = (5.0 * sigma).ceil() as i64;
    for &t in &reference {
        if script.dropout_prob > 0.0 && rng.random::<f64>() < script.dropout_prob {
            continue;
        }
        let center = (t * frame_rate).round() as i64;
        for k in (center - reach).max(0)..=(center + reach).min(n_frames as i64 - 1) {
            let d = (k - center) as f64;
            bumps[k as usize] += script.peak * (-d * d / (2.0 * sigma * sigma)).exp();
        }
    }
    let activations = bumps
        .into_iter()
        .map(|x| (script.noise_floor + x).clamp(0.0, 1.0))
        .collect();

    Ok(SyntheticTrack { activations, reference, frame_rate })
}

/// The ten scripted 30 s items used for the evaluation and sweep benchmarks.
pub fn benchmark_suite(seed: u64) -> Vec<(String, TempoScript)> {
    let with_seed = |i: u64, s: TempoScript| TempoScript { seed: seed.wrapping_add(i), ..s };
    vec![
        ("const_120".into(), TempoScript::constant(120.0, 30.0)),
        ("const_90".into(), TempoScript::constant(90.0, 30.0)),
        ("const_150".into(), TempoScript::constant(150.0, 30.0)),
        ("const_75".into(), TempoScript::constant(75.0, 30.0)),
        ("const_180".into(), TempoScript::constant(180.0, 30.0)),
        ("step_120_144".into(), TempoScript::step(120.0, 144.0, 15.0, 30.0)),
        ("step_100_85".into(), TempoScript::step(100.0, 85.0, 12.0, 30.0)),
        ("ramp_110_130".into(), TempoScript::ramp(110.0, 130.0, 5.0, 25.0, 30.0)),
        (
            "jitter_128".into(),
            with_seed(8, TempoScript { jitter_s: 0.01, ..TempoScript::constant(128.0, 30.0) }),
        ),
        (
            "dropout_100".into(),
            with_seed(9, TempoScript { dropout_prob: 0.15, ..TempoScript::constant(100.0, 30.0) }),
        ),
    ]
}

/// Writes one beat time per line.
pub fn write_annotations<W: Write>(mut out: W, times: &[f64]) -> std::io::Result<()> {
    for t in times {
        writeln!(out, "{t:.6}")?;
    }
    out.flush()
}

/// Writes `<stem>.bact` (or `<stem>.txt`) and `<stem>.beats`, returning both
/// paths.
pub fn write_track(
    track: &SyntheticTrack,
    stem: &Path,
    format: ActivationFormat,
) -> Result<(PathBuf, PathBuf)> {
    let act_path = stem.with_extension(match format {
        ActivationFormat::Binary => "bact",
        ActivationFormat::Text => "txt",
    });
    let beats_path = stem.with_extension("beats");
    let out = BufWriter::new(File::create(&act_path)?);
    match format {
        ActivationFormat::Binary => {
            write_binary(out, &track.activations, track.frame_rate.round() as u32)?
        }
        ActivationFormat::Text => write_text(out, &track.activations)?,
    }
    write_annotations(BufWriter::new(File::create(&beats_path)?), &track.reference)?;
    Ok((act_path, beats_path))
}

const CLICK_S: f64 = 0.02;
const CLICK_HZ: [f64; 2] = [1000.0, 3100.0];

/// Mono audio of `duration_s` seconds with a short decaying two-tone click
/// starting at every beat time. Silence elsewhere.
pub fn click_train(beat_times: &[f64], duration_s: f64, sample_rate: u32) -> MonoAudio {
    let sr = f64::from(sample_rate);
    let len = (duration_s * sr).round() as usize;
    let click_len = (CLICK_S * sr).round() as usize;
    let click: Vec<f32> = (0..click_len)
        .map(|i| {
            let t = i as f64 / sr;
            let env = (-t / (CLICK_S / 5.0)).exp();
            let tone: f64 = CLICK_HZ.iter().map(|f| (std::f64::consts::TAU * f * t).sin()).sum();
            (0.4 * env * tone) as f32
        })
        .collect();
    let mut samples = vec![0.0f32; len];
    for &t in beat_times {
        let start = (t * sr).round() as usize;
        for (dst, src) in samples.iter_mut().skip(start).zip(&click) {
            *dst += src;
        }
    }
    MonoAudio { sample_rate, samples }
}
