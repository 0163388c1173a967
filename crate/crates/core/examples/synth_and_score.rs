//! Scores the tracker on the ten-item synthetic suite with and without the
//! 5 s skip, using the parallel dataset evaluator.

use beatpf::evaluation::{evaluate_items, EvalItem, EvalSettings};
use beatpf::synth::{benchmark_suite, generate};
use beatpf::TrackerConfig;

fn main() -> beatpf::Result<()> {
    let items = benchmark_suite(0)
        .into_iter()
        .map(|(name, script)| {
            let track = generate(&script, 100.0)?;
            Ok(EvalItem {
                name,
                activations: track.activations,
                reference: track.reference,
                frame_rate: Some(track.frame_rate),
            })
        })
        .collect::<beatpf::Result<Vec<_>>>()?;

    let report = evaluate_items(&items, &TrackerConfig::default(), EvalSettings::default())?;
    print!("{}", report.to_table());
    Ok(())
}
