//! Prints the tempo rows of the default space, the beat-state count of each
//! discriminator and the tempo transition distribution out of 120 BPM.

use beatpf::{Discriminator, StateSpace, StateSpaceConfig};

fn main() -> beatpf::Result<()> {
    let kinds = [
        ("fractional", Discriminator::Fractional(1.0 / 60.0)),
        ("constant", Discriminator::ConstantCount(2)),
        ("gaussian", Discriminator::GaussianSoft(Discriminator::DEFAULT_SIGMA_FRAC)),
    ];
    let spaces = kinds
        .iter()
        .map(|(_, d)| StateSpace::new(&StateSpaceConfig { discriminator: *d, ..Default::default() }))
        .collect::<beatpf::Result<Vec<_>>>()?;
    let space = &spaces[0];
    println!(
        "# {} rows (M {}..={}), {} states",
        space.num_rows(),
        space.m_min(),
        space.m_max(),
        space.total_states()
    );

    println!("   M    BPM  fractional  constant  gaussian");
    for (i, row) in space.rows().iter().enumerate().step_by(9) {
        let counts: Vec<usize> = spaces.iter().map(|s| s.row(i).beat_state_count).collect();
        println!("{:4} {:6.1}  {:10}  {:8}  {:8}", row.m, row.tempo_bpm, counts[0], counts[1], counts[2]);
    }

    let from = space.nearest_row(50.0);
    let dist = space.tempo_transition_distribution(from, 30.0);
    println!("# transition out of M = 50, lambda = 30");
    for (row, p) in space.rows().iter().zip(&dist).filter(|(_, p)| **p > 0.01) {
        println!("{:4} {:.4} {}", row.m, p, "#".repeat((p * 200.0).round() as usize));
    }
    Ok(())
}
