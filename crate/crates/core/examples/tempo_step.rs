//! Follows a 120 to 144 BPM step at 15 s and prints every beat with the
//! tempo estimate and its distance to the nearest reference beat.

use beatpf::synth::{generate, TempoScript};
use beatpf::{Tracker, TrackerConfig};

fn main() -> beatpf::Result<()> {
    let track = generate(&TempoScript::step(120.0, 144.0, 15.0, 30.0), 100.0)?;
    let mut tracker = Tracker::new(TrackerConfig::default())?;
    for ev in tracker.run(&track.activations)? {
        let err_ms = track
            .reference
            .iter()
            .map(|r| (r - ev.time_s) * 1000.0)
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(f64::NAN);
        println!("{:7.3} s  {:6.1} BPM  {:+6.0} ms", ev.time_s, ev.tempo_bpm_estimate, err_ms);
    }
    let stats = tracker.stats();
    println!("# {} beats, {} injections, {} degenerate frames", stats.beats, stats.injections, stats.degenerate_frames);
    Ok(())
}
