use super::particles::ParticleSet;
use super::BeatEvent;
use crate::state_space::StateSpace;

const HALF_TOLERANCE: f64 = 1e-12;

/// Row index of the weighted median beat period (lower median when weights
/// are uniform).
pub fn median_interval(set: &ParticleSet, space: &StateSpace) -> usize {
    let mut mass = vec![0.0; space.num_rows()];
    let mut total = 0.0;
    for p in set.particles() {
        mass[p.row] += p.weight;
        total += p.weight;
    }
    let half = 0.5 * total - HALF_TOLERANCE;
    let mut acc = 0.0;
    for (row, m) in mass.iter().enumerate() {
        acc += m;
        if acc >= half && *m > 0.0 {
            return row;
        }
    }
    set.particles()[0].row
}

/// Weighted median of the row-normalized positions `(position - 1) / M`.
pub fn median_normalized_position(set: &ParticleSet, space: &StateSpace) -> f64 {
    let particles = set.particles();
    let eta = |i: usize| {
        let p = &particles[i];
        (p.position - 1) as f64 / space.row(p.row).m as f64
    };

    let w0 = particles[0].weight;
    if particles.iter().all(|p| p.weight == w0) {
        let mut values: Vec<f64> = (0..particles.len()).map(eta).collect();
        let mid = (values.len() - 1) / 2;
        let (_, v, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
        return *v;
    }

    let mut pairs: Vec<(f64, f64)> = (0..particles.len())
        .map(|i| (eta(i), particles[i].weight))
        .collect();
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let half = 0.5 * total - HALF_TOLERANCE;
    let mut acc = 0.0;
    for (v, w) in &pairs {
        acc += w;
        if acc >= half {
            return *v;
        }
    }
    pairs[pairs.len() - 1].0
}

/// Emits a beat when the median particle sits inside the beat boundary and
/// more than half a median beat period has passed since the previous beat.
pub fn decide_beat(
    set: &ParticleSet,
    space: &StateSpace,
    frame_index: u64,
    last_beat_frame: Option<u64>,
) -> Option<BeatEvent> {
    let m_med = space.row(median_interval(set, space)).m;
    let eta_med = median_normalized_position(set, space);
    if eta_med >= space.beat_boundary_fraction(m_med) {
        return None;
    }
    if let Some(last) = last_beat_frame {
        if (frame_index - last) as f64 <= m_med as f64 / 2.0 {
            return None;
        }
    }
    let dt = space.frame_period_s();
    Some(BeatEvent {
        time_s: frame_index as f64 * dt,
        frame_index,
        tempo_bpm_estimate: 60.0 / (m_med as f64 * dt),
    })
}
