//! Streaming drivers: activations or audio in, beat times out, one line per
//! beat written and flushed on the frame it is decided.

use std::io::{Read, Write};

use crate::error::Result;
use crate::frontend::{
    read_wav_from, ActivationReader, AudioFrameConfig, FilterbankConfig, FluxFrontend,
};
use crate::inference::{BeatEvent, Tracker, TrackerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrackOptions {
    /// Append the tempo estimate to every output line.
    pub with_tempo: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackSummary {
    pub frames: u64,
    pub beats: u64,
    pub clamped: usize,
    /// Frame rate declared by the input, when it declares one.
    pub declared_frame_rate: Option<u32>,
}

pub fn format_event(ev: &BeatEvent, opts: TrackOptions) -> String {
    if opts.with_tempo {
        format!("{:.3} {:.1}", ev.time_s, ev.tempo_bpm_estimate)
    } else {
        format!("{:.3}", ev.time_s)
    }
}

fn emit<W: Write>(out: &mut W, ev: &BeatEvent, opts: TrackOptions) -> std::io::Result<()> {
    writeln!(out, "{}", format_event(ev, opts))?;
    out.flush()
}

/// Tracks a text or binary activation stream. A frame rate declared in a
/// binary header replaces the configured frame period.
pub fn track_activations<R: Read, W: Write>(
    source: R,
    cfg: &TrackerConfig,
    out: &mut W,
    opts: TrackOptions,
) -> Result<TrackSummary> {
    let mut reader = ActivationReader::new(source)?;
    let mut cfg = cfg.clone();
    if let Some(rate) = reader.frame_rate() {
        let period = 1.0 / rate as f64;
        if (period - cfg.state_space.frame_period_s).abs() > 1e-12 {
            log::warn!("stream declares {rate} frames/s; overriding configured frame period");
        }
        cfg.state_space.frame_period_s = period;
    }
    let mut tracker = Tracker::new(cfg)?;
    let mut summary = TrackSummary { declared_frame_rate: reader.frame_rate(), ..Default::default() };
    for frame in reader.by_ref() {
        if let Some(ev) = tracker.step(frame?.b)? {
            emit(out, &ev, opts)?;
            summary.beats += 1;
        }
        summary.frames += 1;
    }
    summary.clamped = reader.clamped_count();
    Ok(summary)
}

/// Tracks a WAV file through the spectral-flux front-end. Audio is fed in
/// hop-sized blocks so decisions stay frame-synchronous.
pub fn track_wav<R: Read, W: Write>(
    source: R,
    cfg: &TrackerConfig,
    out: &mut W,
    opts: TrackOptions,
) -> Result<TrackSummary> {
    let audio = read_wav_from(source)?;
    let frame = AudioFrameConfig {
        hop_s: cfg.state_space.frame_period_s,
        ..AudioFrameConfig::new(audio.sample_rate)
    };
    let mut frontend = FluxFrontend::new(frame, FilterbankConfig::default())?;
    let mut tracker = Tracker::new(cfg.clone())?;
    let mut summary = TrackSummary::default();
    for block in audio.samples.chunks(frame.hop_len()) {
        for frame in frontend.push(block)? {
            if let Some(ev) = tracker.step(frame.b)? {
                emit(out, &ev, opts)?;
                summary.beats += 1;
            }
            summary.frames += 1;
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::write_binary;

    #[test]
    fn empty_input_no_output() {
        let mut out = Vec::new();
        let s = track_activations(&b""[..], &TrackerConfig::default(), &mut out, TrackOptions::default()).unwrap();
        assert!(out.is_empty());
        assert_eq!(s.frames, 0);
    }

    #[test]
    fn binary_header_sets_frame_period() {
        let acts: Vec<f64> = (0..500).map(|k| if k % 25 == 0 { 0.9 } else { 0.02 }).collect();
        let mut buf = Vec::new();
        write_binary(&mut buf, &acts, 50).unwrap();
        let mut out = Vec::new();
        let s = track_activations(buf.as_slice(), &TrackerConfig::default(), &mut out, TrackOptions { with_tempo: true })
            .unwrap();
        assert_eq!(s.declared_frame_rate, Some(50));
        let text = String::from_utf8(out).unwrap();
        let last = text.lines().last().unwrap();
        let mut parts = last.split_whitespace();
        let t: f64 = parts.next().unwrap().parse().unwrap();
        let tempo: f64 = parts.next().unwrap().parse().unwrap();
        // 25 frames at 50 frames/s is 120 BPM
        assert!((tempo - 120.0).abs() < 10.0, "{tempo}");
        assert!(t > 8.0 && t < 10.0);
    }

    #[test]
    fn clamped_values_counted() {
        let mut out = Vec::new();
        let s = track_activations("1.5\n0.2\n-3\n".as_bytes(), &TrackerConfig::default(), &mut out, TrackOptions::default())
            .unwrap();
        assert_eq!(s.clamped, 2);
        assert_eq!(s.frames, 3);
    }

    #[test]
    fn decode_error_propagates() {
        let mut out = Vec::new();
        assert!(track_activations("0.1\nxyz\n".as_bytes(), &TrackerConfig::default(), &mut out, TrackOptions::default())
            .is_err());
    }
}
