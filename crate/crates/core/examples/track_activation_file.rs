//! Writes a synthetic activation file, then streams it through the tracker
//! exactly as `beatpf track` does, printing one beat per line.
//!
//! cargo run --release --example track_activation_file

use std::fs::File;
use std::io::BufReader;

use beatpf::frontend::ActivationFormat;
use beatpf::synth::{generate, write_track, TempoScript};
use beatpf::track::{track_activations, TrackOptions};
use beatpf::TrackerConfig;

fn main() -> beatpf::Result<()> {
    let dir = tempfile::tempdir()?;
    let track = generate(&TempoScript::constant(96.0, 12.0), 100.0)?;
    let (act_path, _) = write_track(&track, &dir.path().join("demo"), ActivationFormat::Binary)?;

    let mut out = Vec::new();
    let summary = track_activations(
        BufReader::new(File::open(&act_path)?),
        &TrackerConfig::default(),
        &mut out,
        TrackOptions { with_tempo: true },
    )?;
    print!("{}", String::from_utf8_lossy(&out));
    println!(
        "# {} frames at {:?} frames/s, {} beats, reference has {}",
        summary.frames,
        summary.declared_frame_rate,
        summary.beats,
        track.reference.len()
    );
    Ok(())
}
