//! Audio path: renders a 110 BPM click train, computes the spectral-flux
//! activation block by block and feeds it to the tracker as it arrives.

use beatpf::frontend::{AudioFrameConfig, FilterbankConfig, FluxFrontend};
use beatpf::synth::{click_train, TempoScript};
use beatpf::{Tracker, TrackerConfig};

fn main() -> beatpf::Result<()> {
    let script = TempoScript::constant(110.0, 15.0);
    let audio = click_train(&script.nominal_beat_times(), script.duration_s, 44_100);

    let frame = AudioFrameConfig::new(audio.sample_rate);
    let mut frontend = FluxFrontend::new(frame, FilterbankConfig::default())?;
    println!(
        "# window {} samples, hop {}, {} bands",
        frame.window_len(),
        frame.hop_len(),
        frontend.extractor().n_bands()
    );

    let mut tracker = Tracker::new(TrackerConfig::default())?;
    // 1024-sample blocks, as an audio callback would deliver them
    for block in audio.samples.chunks(1024) {
        for frame in frontend.push(block)? {
            if let Some(ev) = tracker.step(frame.b)? {
                println!("{:.3} {:.1}", ev.time_s, ev.tempo_bpm_estimate);
            }
        }
    }
    Ok(())
}
