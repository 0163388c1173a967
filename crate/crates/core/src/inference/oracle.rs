//! Exact forward filtering over the same discrete model the particle filter
//! samples from. Cost per frame is `O(states + rows^2)`, fine for reduced
//! spaces; it is the reference the particle approximation is checked against.

use crate::error::{Error, Result};
use crate::state_space::StateSpace;

/// Filtered marginals after one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterFrame {
    /// Posterior mass per tempo row.
    pub row_marginal: Vec<f64>,
    /// Lowest row whose cumulative mass reaches one half.
    pub median_row: usize,
    /// Row with the largest mass.
    pub map_row: usize,
}

#[derive(Debug, Clone)]
pub struct ExactForwardFilter {
    /// `lengths[r]` is the beat period of row `r`.
    lengths: Vec<usize>,
    offsets: Vec<usize>,
    /// `transition[from][to]`, row-stochastic.
    transition: Vec<Vec<f64>>,
    /// `membership[r][p]` in `[0, 1]`: 1 for hard beat states,
    /// the soft profile for the Gaussian discriminator.
    membership: Vec<Vec<f64>>,
    soft: bool,
    gamma: f64,
    belief: Vec<f64>,
}

impl ExactForwardFilter {
    /// Starts from the uniform distribution over all states.
    pub fn new(space: &StateSpace, lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Config(format!("invalid lambda {lambda} / gamma {gamma}")));
        }
        let lengths: Vec<usize> = space.rows().iter().map(|r| r.m).collect();
        let mut offsets = Vec::with_capacity(lengths.len());
        let mut total = 0;
        for &m in &lengths {
            offsets.push(total);
            total += m;
        }

        let transition = lengths
            .iter()
            .map(|&from| {
                let raw: Vec<f64> = lengths
                    .iter()
                    .map(|&to| {
                        if to == from {
                            1.0
                        } else {
                            (-lambda * (to as f64 / from as f64 - 1.0).abs()).exp()
                        }
                    })
                    .collect();
                let z: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / z).collect()
            })
            .collect();

        let mut soft = false;
        let membership = space
            .rows()
            .iter()
            .map(|row| match &row.soft_profile {
                Some(profile) => {
                    soft = true;
                    profile.clone()
                }
                None => (1..=row.m)
                    .map(|p| if p <= row.beat_state_count { 1.0 } else { 0.0 })
                    .collect(),
            })
            .collect();

        Ok(Self {
            lengths,
            offsets,
            transition,
            membership,
            soft,
            gamma,
            belief: vec![1.0 / total as f64; total],
        })
    }

    /// Full posterior over states, indexed like [`StateSpace::state_index`].
    pub fn belief(&self) -> &[f64] {
        &self.belief
    }

    /// Predict with the shift/wrap transition, then update with the
    /// activation likelihood.
    pub fn step(&mut self, b: f64) -> FilterFrame {
        let rows = self.lengths.len();
        let mut next = vec![0.0; self.belief.len()];

        let wrap_mass: Vec<f64> = (0..rows)
            .map(|r| self.belief[self.offsets[r] + self.lengths[r] - 1])
            .collect();
        for r in 0..rows {
            let o = self.offsets[r];
            let m = self.lengths[r];
            next[o + 1..o + m].copy_from_slice(&self.belief[o..o + m - 1]);
        }
        for (from, &mass) in wrap_mass.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for to in 0..rows {
                next[self.offsets[to]] += mass * self.transition[from][to];
            }
        }

        for r in 0..rows {
            let o = self.offsets[r];
            for (p, weight) in self.membership[r].iter().enumerate() {
                let lik = if self.soft {
                    (self.gamma + (b - self.gamma) * weight).max(1e-6)
                } else if *weight > 0.0 {
                    b
                } else {
                    self.gamma
                };
                next[o + p] *= lik;
            }
        }
        let z: f64 = next.iter().sum();
        if z > 0.0 {
            next.iter_mut().for_each(|x| *x /= z);
        } else {
            let u = 1.0 / next.len() as f64;
            next.iter_mut().for_each(|x| *x = u);
        }
        self.belief = next;
        self.summarize()
    }

    pub fn summarize(&self) -> FilterFrame {
        let row_marginal: Vec<f64> = (0..self.lengths.len())
            .map(|r| {
                let o = self.offsets[r];
                self.belief[o..o + self.lengths[r]].iter().sum()
            })
            .collect();
        let mut acc = 0.0;
        let mut median_row = row_marginal.len() - 1;
        for (r, m) in row_marginal.iter().enumerate() {
            acc += m;
            if acc >= 0.5 {
                median_row = r;
                break;
            }
        }
        let map_row = row_marginal
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(r, _)| r)
            .unwrap_or(0);
        FilterFrame { row_marginal, median_row, map_row }
    }

    pub fn run(&mut self, activations: &[f64]) -> Vec<FilterFrame> {
        activations.iter().map(|&b| self.step(b)).collect()
    }
}
