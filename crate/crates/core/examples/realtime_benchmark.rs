//! Measures the real-time factor of tracking a 30 s stream at the default
//! settings, for a few particle counts.

use std::time::Instant;

use beatpf::synth::{generate, TempoScript};
use beatpf::{Tracker, TrackerConfig};

fn main() -> beatpf::Result<()> {
    let script = TempoScript::constant(120.0, 30.0);
    let track = generate(&script, 100.0)?;
    println!("particles  seconds  real_time_factor  us_per_frame");
    for n in [100, 300, 1000, 3000] {
        let mut tracker = Tracker::new(TrackerConfig { n_particles: n, ..Default::default() })?;
        let start = Instant::now();
        for &b in &track.activations {
            tracker.step(b)?;
        }
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{n:9}  {secs:7.3}  {:16.4}  {:12.1}",
            secs / script.duration_s,
            secs * 1e6 / track.activations.len() as f64
        );
    }
    Ok(())
}
