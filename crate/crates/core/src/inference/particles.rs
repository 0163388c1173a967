use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::decision::median_interval;
use crate::error::{Error, Result};
use crate::state_space::{StateSpace, TransitionTable};

/// Lower bound on the soft-discriminator likelihood.
pub const OBSERVATION_FLOOR: f64 = 1e-6;

/// One tempo/position hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    /// Index into [`StateSpace::rows`].
    pub row: usize,
    /// 1-based position within the row.
    pub position: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WeighOutcome {
    /// All weight products vanished and the weights were reset to uniform.
    pub degenerate: bool,
}

/// Likelihood of activation `b` for a particle at `(row, position)`.
///
/// Hard discriminators return `b` inside the beat states and `gamma`
/// elsewhere. The Gaussian discriminator blends between the two along the
/// row's soft profile and never drops below [`OBSERVATION_FLOOR`].
pub fn observation_weight(
    space: &StateSpace,
    row: usize,
    position: usize,
    b: f64,
    gamma: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidArgument(format!("activation {b} outside [0, 1]")));
    }
    let r = space.row(row);
    match &r.soft_profile {
        Some(profile) => {
            let w = profile.get(position.wrapping_sub(1)).ok_or_else(|| {
                Error::InvalidArgument(format!("position {position} outside 1..={}", r.m))
            })?;
            Ok((gamma + (b - gamma) * w).max(OBSERVATION_FLOOR))
        }
        None => Ok(if r.is_beat_state(position)? { b } else { gamma }),
    }
}

/// Stochastic universal sampling: parent index of each of `n` offspring for
/// normalized `weights` and a single offset `u` in `[0, 1/n)`.
pub fn sus_offspring(weights: &[f64], n: usize, u: f64) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    sus_into(weights, n, u, &mut out);
    out
}

/// Relative distance below which a cumulative count is treated as the
/// integer it rounds to, so pointers on a boundary go to the right.
const BOUNDARY_SNAP: f64 = 1e-9;

fn sus_into(weights: &[f64], n: usize, u: f64, out: &mut Vec<usize>) {
    out.clear();
    // work in offspring units: pointer j sits at n*u + j
    let scale = n as f64 / weights.iter().sum::<f64>();
    let offset = u * n as f64;
    let snap = |x: f64| {
        let r = x.round();
        if (x - r).abs() <= BOUNDARY_SNAP * r.max(1.0) { r } else { x }
    };
    let last = weights.len() - 1;
    let mut parent = 0;
    let mut cumulative = weights[0] * scale;
    for j in 0..n {
        let pointer = offset + j as f64;
        while pointer >= snap(cumulative) && parent < last {
            parent += 1;
            cumulative += weights[parent] * scale;
        }
        out.push(parent);
    }
}

/// Fixed-size particle population with its own seeded generator.
#[derive(Debug, Clone)]
pub struct ParticleSet {
    particles: Vec<Particle>,
    rng: ChaCha8Rng,
    scratch: Vec<Particle>,
    parents: Vec<usize>,
}

impl ParticleSet {
    /// `n` particles drawn uniformly over every state of `space`, each with
    /// weight `1/n`.
    pub fn uniform(space: &StateSpace, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = space.total_states();
        let weight = 1.0 / n as f64;
        let particles = (0..n)
            .map(|_| {
                let (row, position) = space.state_at(rng.random_range(0..total));
                Particle { row, position, weight }
            })
            .collect();
        Self::from_parts(particles, rng)
    }

    /// Builds a set from explicit particles. Weights are used as given.
    pub fn from_particles(particles: Vec<Particle>, seed: u64) -> Self {
        Self::from_parts(particles, ChaCha8Rng::seed_from_u64(seed))
    }

    fn from_parts(particles: Vec<Particle>, rng: ChaCha8Rng) -> Self {
        let n = particles.len();
        Self {
            particles,
            rng,
            scratch: Vec::with_capacity(n),
            parents: Vec::with_capacity(n),
        }
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// `1 / sum(w^2)` of the normalized weights.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.particles.iter().map(|p| p.weight * p.weight).sum::<f64>()
    }

    /// Motion step. Returns how many particles wrapped into a beat state.
    pub fn advance(&mut self, space: &StateSpace, transitions: &TransitionTable) -> usize {
        let mut wrapped = 0;
        for p in &mut self.particles {
            if p.position < space.row(p.row).m {
                p.position += 1;
            } else {
                let u: f64 = self.rng.random();
                p.row = transitions.sample(p.row, u);
                p.position = 1;
                wrapped += 1;
            }
        }
        wrapped
    }

    /// Multiplies every weight by its observation likelihood and
    /// renormalizes. Falls back to uniform weights when the products vanish.
    pub fn weigh(&mut self, space: &StateSpace, b: f64, gamma: f64) -> Result<WeighOutcome> {
        let mut total = 0.0;
        for p in &mut self.particles {
            p.weight *= observation_weight(space, p.row, p.position, b, gamma)?;
            total += p.weight;
        }
        if total > 0.0 && total.is_finite() {
            self.particles.iter_mut().for_each(|p| p.weight /= total);
            Ok(WeighOutcome { degenerate: false })
        } else {
            let w = 1.0 / self.len() as f64;
            self.particles.iter_mut().for_each(|p| p.weight = w);
            Ok(WeighOutcome { degenerate: true })
        }
    }

    /// Low-variance resampling with one uniform draw. Returns the pre-resample
    /// weight of each offspring's parent.
    pub fn resample_sus(&mut self) -> Vec<f64> {
        let n = self.len();
        let u = self.rng.random::<f64>() / n as f64;
        self.resample_sus_with_offset(u)
    }

    /// [`ParticleSet::resample_sus`] with an explicit pointer offset `u`.
    pub fn resample_sus_with_offset(&mut self, u: f64) -> Vec<f64> {
        let n = self.len();
        let weights: Vec<f64> = self.particles.iter().map(|p| p.weight).collect();
        sus_into(&weights, n, u, &mut self.parents);

        let w = 1.0 / n as f64;
        self.scratch.clear();
        self.scratch.extend(self.parents.iter().map(|&i| Particle {
            weight: w,
            ..self.particles[i]
        }));
        std::mem::swap(&mut self.particles, &mut self.scratch);
        self.parents.iter().map(|&i| weights[i]).collect()
    }

    /// Moves up to `floor(rho * N / 2)` particles to the row nearest twice the
    /// median beat period and as many to the row nearest half of it.
    ///
    /// Only particles at position 1 are candidates, so investigators keep the
    /// phase and the likelihood of the beat they just entered. Among them the
    /// smallest `priority` goes first, lowest index first on ties. Returns the
    /// number of moved particles.
    pub fn inject_tempo_hypotheses(
        &mut self,
        space: &StateSpace,
        rho: f64,
        priority: &[f64],
    ) -> usize {
        let n = self.len();
        let k = (rho * n as f64 / 2.0).floor() as usize;
        if k == 0 {
            return 0;
        }
        debug_assert_eq!(priority.len(), n);

        let m_med = space.row(median_interval(self, space)).m as f64;
        let double_row = space.nearest_row(2.0 * m_med);
        let half_row = space.nearest_row(m_med / 2.0);

        let mut order: Vec<usize> = (0..n).filter(|&i| self.particles[i].position == 1).collect();
        order.sort_by(|&a, &b| priority[a].total_cmp(&priority[b]).then(a.cmp(&b)));
        let moved = order.len().min(2 * k);
        // alternate so a short candidate list still probes both octaves
        for (rank, &i) in order.iter().take(moved).enumerate() {
            self.particles[i].row = if rank % 2 == 0 { double_row } else { half_row };
        }
        moved
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_space::{Discriminator, StateSpaceConfig};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn space() -> StateSpace {
        StateSpace::new(&StateSpaceConfig::default()).unwrap()
    }

    fn p(row: usize, position: usize, weight: f64) -> Particle {
        Particle { row, position, weight }
    }

    #[test]
    fn uniform_init_is_valid_and_deterministic() {
        let s = space();
        let a = ParticleSet::uniform(&s, 1000, 7);
        let b = ParticleSet::uniform(&s, 1000, 7);
        assert_eq!(a.particles(), b.particles());
        assert_eq!(a.len(), 1000);
        for q in a.particles() {
            assert!(q.position >= 1 && q.position <= s.row(q.row).m);
            assert_eq!(q.weight, 1.0 / 1000.0);
        }
        let c = ParticleSet::uniform(&s, 1000, 8);
        assert_ne!(a.particles(), c.particles());
    }

    #[test]
    fn advance_shifts_and_wraps() {
        let s = space();
        let r50 = s.nearest_row(50.0);
        let table = TransitionTable::new(&s, f64::INFINITY).unwrap();
        let mut set = ParticleSet::from_particles(vec![p(r50, 10, 0.5), p(r50, 50, 0.5)], 0);
        let wrapped = set.advance(&s, &table);
        assert_eq!(wrapped, 1);
        assert_eq!(set.particles()[0], p(r50, 11, 0.5));
        assert_eq!(set.particles()[1], p(r50, 1, 0.5));
    }

    #[test]
    fn observation_examples() {
        let s = space();
        let r50 = s.nearest_row(50.0);
        assert_eq!(observation_weight(&s, r50, 1, 0.8, 0.03).unwrap(), 0.8);
        assert_eq!(observation_weight(&s, r50, 2, 0.8, 0.03).unwrap(), 0.03);
        assert_eq!(observation_weight(&s, r50, 30, 0.0, 0.03).unwrap(), 0.03);
        assert!(observation_weight(&s, r50, 1, 1.2, 0.03).is_err());
        assert!(observation_weight(&s, r50, 1, -0.1, 0.03).is_err());
        assert!(observation_weight(&s, r50, 51, 0.5, 0.03).is_err());
    }

    #[test]
    fn gaussian_observation_endpoints() {
        let cfg = StateSpaceConfig {
            discriminator: Discriminator::GaussianSoft(0.05),
            ..Default::default()
        };
        let s = StateSpace::new(&cfg).unwrap();
        let r = s.nearest_row(100.0);
        assert!((observation_weight(&s, r, 1, 0.8, 0.03).unwrap() - 0.8).abs() < 1e-15);
        assert!((observation_weight(&s, r, 100, 0.8, 0.03).unwrap() - 0.03).abs() < 1e-12);
        // weak activation inside B dips below gamma but stays above the floor
        let dip = observation_weight(&s, r, 1, 0.0, 0.03).unwrap();
        assert_eq!(dip, OBSERVATION_FLOOR);
        let mid = observation_weight(&s, r, 3, 0.01, 0.03).unwrap();
        assert!(mid < 0.03 && mid > 0.01);
    }

    #[test]
    fn weigh_two_particles() {
        let s = space();
        let r50 = s.nearest_row(50.0);
        let mut set = ParticleSet::from_particles(vec![p(r50, 1, 0.5), p(r50, 7, 0.5)], 0);
        let out = set.weigh(&s, 0.8, 0.03).unwrap();
        assert!(!out.degenerate);
        let w: Vec<f64> = set.particles().iter().map(|q| q.weight).collect();
        assert!((w[0] - 0.8 / 0.83).abs() < 1e-12);
        assert!((w[1] - 0.03 / 0.83).abs() < 1e-12);
        assert!((w[0] - 0.9639).abs() < 1e-4 && (w[1] - 0.0361).abs() < 1e-4);
    }

    #[test]
    fn weigh_constant_likelihood_keeps_weights() {
        let s = space();
        let parts = (0..10).map(|i| p(i, 5, (i + 1) as f64 / 55.0)).collect();
        let mut set = ParticleSet::from_particles(parts, 0);
        let before: Vec<f64> = set.particles().iter().map(|q| q.weight).collect();
        set.weigh(&s, 0.9, 0.03).unwrap();
        for (a, b) in before.iter().zip(set.particles()) {
            assert!((a - b.weight).abs() < 1e-15);
        }
    }

    #[test]
    fn weigh_degenerate_resets_to_uniform() {
        let s = space();
        let mut set = ParticleSet::from_particles(vec![p(0, 1, 0.5), p(3, 1, 0.5), p(5, 1, 0.0)], 0);
        let out = set.weigh(&s, 0.0, 0.03).unwrap();
        assert!(out.degenerate);
        assert!(set.particles().iter().all(|q| q.weight == 1.0 / 3.0));
    }

    #[test]
    fn sus_uniform_is_identity() {
        let w = vec![0.1; 10];
        for u in [0.0, 0.05, 0.099_999] {
            assert_eq!(sus_offspring(&w, 10, u), (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn sus_uniform_is_identity_with_pointers_on_boundaries() {
        // 1/n is inexact for these n, so u = 0 puts every pointer on a rounded boundary
        for n in [3usize, 7, 10, 49, 100, 333, 1000, 5000] {
            let w = vec![1.0 / n as f64; n];
            let step = 1.0 / n as f64;
            for u in [0.0, 0.5 * step, step * (1.0 - 1e-6)] {
                assert_eq!(sus_offspring(&w, n, u), (0..n).collect::<Vec<_>>(), "n = {n}, u = {u}");
            }
        }
    }

    #[test]
    fn sus_three_to_one() {
        // pointers u, u + 1/4, u + 1/2, u + 3/4 with u < 1/4: three fall below 0.75
        for i in 0..1000 {
            let u = 0.25 * i as f64 / 1000.0;
            assert_eq!(sus_offspring(&[0.75, 0.25], 4, u), vec![0, 0, 0, 1], "u = {u}");
        }
    }

    #[test]
    fn sus_degenerate_weight() {
        assert_eq!(sus_offspring(&[0.0, 1.0, 0.0, 0.0], 4, 0.2), vec![1; 4]);
        assert_eq!(sus_offspring(&[0.0, 0.0, 0.0, 1.0], 4, 0.0), vec![3; 4]);
    }

    #[test]
    fn resample_resets_weights_and_reports_parents() {
        let s = space();
        let _ = s;
        let mut set = ParticleSet::from_particles(
            vec![p(0, 1, 0.75), p(1, 2, 0.25), p(2, 3, 0.0), p(3, 4, 0.0)],
            0,
        );
        let parent_w = set.resample_sus_with_offset(0.1);
        assert_eq!(parent_w, vec![0.75, 0.75, 0.75, 0.25]);
        assert!(set.particles().iter().all(|q| q.weight == 0.25));
        assert_eq!(set.particles().iter().filter(|q| q.row == 0).count(), 3);
    }

    #[test]
    fn injection_examples() {
        let s = space();
        let r50 = s.nearest_row(50.0);
        let parts = vec![p(r50, 1, 1.0 / 1000.0); 1000];
        let priority: Vec<f64> = (0..1000).map(|i| if i >= 990 { 0.0 } else { 1.0 }).collect();

        let mut unchanged = ParticleSet::from_particles(parts.clone(), 0);
        assert_eq!(unchanged.inject_tempo_hypotheses(&s, 0.0, &priority), 0);
        assert_eq!(unchanged.particles(), &parts[..]);

        let mut set = ParticleSet::from_particles(parts, 0);
        assert_eq!(set.inject_tempo_hypotheses(&s, 0.02, &priority), 20);
        let mut hist = BTreeMap::new();
        for q in set.particles() {
            *hist.entry(s.row(q.row).m).or_insert(0) += 1;
        }
        assert_eq!(hist, BTreeMap::from([(28, 10), (50, 980), (100, 10)]));
        // lowest priority first: indices 990..999, then ties broken by index 0..9,
        // alternating double and half
        let order: Vec<usize> = (990..1000).chain(0..10).collect();
        for (rank, &i) in order.iter().enumerate() {
            let expected = if rank % 2 == 0 { 100 } else { 28 };
            assert_eq!(s.row(set.particles()[i].row).m, expected, "index {i}");
        }
        assert_eq!(set.len(), 1000);
        assert!((set.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn injection_clamps_double_tempo() {
        let s = space();
        let r100 = s.nearest_row(100.0);
        let mut set = ParticleSet::from_particles(vec![p(r100, 1, 0.001); 1000], 0);
        set.inject_tempo_hypotheses(&s, 0.02, &[1.0; 1000]);
        let ms: std::collections::BTreeSet<usize> =
            set.particles().iter().map(|q| s.row(q.row).m).collect();
        assert_eq!(ms, [50, 100, 109].into_iter().collect());
    }

    #[test]
    fn injection_only_moves_particles_entering_a_beat() {
        let s = space();
        let r50 = s.nearest_row(50.0);
        let mut parts = vec![p(r50, 7, 0.001); 1000];
        parts[500].position = 1;
        parts[600].position = 1;
        parts[700].position = 1;
        let mut set = ParticleSet::from_particles(parts, 0);
        let priority: Vec<f64> = (0..1000).map(|i| 1.0 - i as f64 / 1000.0).collect();
        assert_eq!(set.inject_tempo_hypotheses(&s, 0.02, &priority), 3);
        let moved: Vec<(usize, usize, usize)> = set
            .particles()
            .iter()
            .enumerate()
            .filter(|(_, q)| q.row != r50)
            .map(|(i, q)| (i, s.row(q.row).m, q.position))
            .collect();
        // highest index has the lowest priority and goes first
        assert_eq!(moved, vec![(500, 100, 1), (600, 28, 1), (700, 100, 1)]);
    }

    proptest! {
        #[test]
        fn sus_counts_within_one(raw in prop::collection::vec(0.0f64..1.0, 1..40), n in 1usize..200, frac in 0.0f64..1.0) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let u = frac / n as f64;
            let off = sus_offspring(&w, n, u);
            prop_assert_eq!(off.len(), n);
            let mut counts = vec![0usize; w.len()];
            for &i in &off { counts[i] += 1; }
            for (c, wi) in counts.iter().zip(&w) {
                let expected = n as f64 * wi;
                prop_assert!((*c as f64 - expected).abs() < 1.0 + 1e-9, "count {} vs {}", c, expected);
            }
        }

        #[test]
        fn pipeline_preserves_count_and_normalization(seed in any::<u64>(), n in 2usize..300, acts in prop::collection::vec(0.0f64..=1.0, 1..60)) {
            let s = space();
            let table = TransitionTable::new(&s, 30.0).unwrap();
            let mut set = ParticleSet::uniform(&s, n, seed);
            for b in acts {
                let before: Vec<Particle> = set.particles().to_vec();
                set.advance(&s, &table);
                for (a, q) in before.iter().zip(set.particles()) {
                    if a.position < s.row(a.row).m {
                        prop_assert_eq!(q.row, a.row);
                        prop_assert_eq!(q.position, a.position + 1);
                    } else {
                        prop_assert_eq!(q.position, 1);
                    }
                }
                set.weigh(&s, b, 0.03).unwrap();
                prop_assert_eq!(set.len(), n);
                prop_assert!((set.weight_sum() - 1.0).abs() < 1e-12);
                let prio = set.resample_sus();
                prop_assert_eq!(set.len(), n);
                prop_assert!((set.weight_sum() - 1.0).abs() < 1e-12);
                set.inject_tempo_hypotheses(&s, 0.2, &prio);
                prop_assert_eq!(set.len(), n);
            }
        }
    }
}
