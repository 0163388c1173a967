//! Mean F-measure against particle count on the synthetic suite, as CSV.

use std::io;

use beatpf::evaluation::{particle_sweep, write_sweep_csv, EvalItem, EvalSettings};
use beatpf::synth::{benchmark_suite, generate};
use beatpf::TrackerConfig;

fn main() -> beatpf::Result<()> {
    let mut items = Vec::new();
    for (name, script) in benchmark_suite(0) {
        let track = generate(&script, 100.0)?;
        items.push(EvalItem {
            name,
            activations: track.activations,
            reference: track.reference,
            frame_rate: Some(track.frame_rate),
        });
    }
    let rows = particle_sweep(
        &items,
        &[50, 100, 200, 300, 500, 1000, 2000],
        &TrackerConfig::default(),
        EvalSettings::default(),
    )?;
    write_sweep_csv(io::stdout().lock(), &rows)?;
    Ok(())
}
