//! Online beat tracking with a particle filter.
//!
//! A per-frame beat activation (from a neural network or the spectral-flux
//! fallback in [`frontend`]) drives a sequential Monte Carlo filter over a
//! beat-level state space: one row per tempo, one position per frame of the
//! beat period. Each frame is decided as soon as it arrives, so the tracker
//! produces beats from the first second of input with no warm-up window.
//!
//! ```
//! use beatpf::inference::{Tracker, TrackerConfig};
//! use beatpf::synth::{generate, TempoScript};
//! use beatpf::evaluation::score;
//!
//! let track = generate(&TempoScript::constant(90.0, 10.0), 100.0).unwrap();
//! let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
//! let beats: Vec<f64> = tracker
//!     .run(&track.activations)
//!     .unwrap()
//!     .iter()
//!     .map(|ev| ev.time_s)
//!     .collect();
//! let report = score(&beats, &track.reference, 0.07, 0.0);
//! assert!(report.f_measure > 0.8);
//! ```
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`
//! directory (`cargo run --release -p beatpf --example <name>`).

pub mod error;
pub mod evaluation;
pub mod frontend;
pub mod inference;
pub mod state_space;
pub mod synth;
pub mod track;

pub use error::{Error, Result};
pub use inference::{BeatEvent, ResamplePolicy, Tracker, TrackerConfig};
pub use state_space::{Discriminator, StateSpace, StateSpaceConfig};
