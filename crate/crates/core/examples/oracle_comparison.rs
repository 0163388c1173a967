//! Runs the particle filter and the exact forward filter side by side on a
//! reduced 100 to 150 BPM space and prints their median tempo rows.

use std::sync::Arc;

use beatpf::inference::{median_interval, ExactForwardFilter};
use beatpf::synth::{generate, TempoScript};
use beatpf::{StateSpace, StateSpaceConfig, Tracker, TrackerConfig};

fn main() -> beatpf::Result<()> {
    let ss = StateSpaceConfig { tempo_min_bpm: 100.0, tempo_max_bpm: 150.0, ..Default::default() };
    let space = Arc::new(StateSpace::new(&ss)?);
    let cfg = TrackerConfig { state_space: ss, ..Default::default() };

    let track = generate(&TempoScript::constant(125.0, 3.0), 100.0)?;
    let mut exact = ExactForwardFilter::new(&space, cfg.lambda, cfg.gamma)?;
    let mut pf = Tracker::with_space(cfg, space.clone())?;

    let mut agree = 0;
    println!("frame  exact_M  pf_M");
    for (k, &b) in track.activations.iter().enumerate() {
        let frame = exact.step(b);
        pf.step(b)?;
        let exact_m = space.row(frame.median_row).m;
        let pf_m = space.row(median_interval(pf.particles(), &space)).m;
        if k > 100 && exact_m.abs_diff(pf_m) <= 2 {
            agree += 1;
        }
        if k % 20 == 0 {
            println!("{k:5}  {exact_m:7}  {pf_m:4}");
        }
    }
    let tail = track.activations.len() - 101;
    println!("# within 2 rows on {agree}/{tail} frames after frame 100");
    Ok(())
}
