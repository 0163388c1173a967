//! Causal spectral features and the spectral-flux fallback activation.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::activation::ActivationFrame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    #[default]
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AudioFrameConfig {
    pub sample_rate: u32,
    pub window_s: f64,
    /// Hop size; equals the tracker's frame period.
    pub hop_s: f64,
    pub window_kind: WindowKind,
}

impl AudioFrameConfig {
    pub fn new(sample_rate: u32) -> Self {
        Self { sample_rate, window_s: 0.046, hop_s: 0.010, window_kind: WindowKind::Hann }
    }

    pub fn window_len(&self) -> usize {
        (self.window_s * self.sample_rate as f64).round() as usize
    }

    pub fn hop_len(&self) -> usize {
        (self.hop_s * self.sample_rate as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 || self.hop_len() == 0 || self.hop_s > self.window_s {
            return Err(Error::Config(format!(
                "need sample_rate > 0 and 0 < hop <= window, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterbankConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub bands_per_octave: u32,
    pub with_first_order_diff: bool,
}

impl Default for FilterbankConfig {
    fn default() -> Self {
        Self { f_min: 30.0, f_max: 17_000.0, bands_per_octave: 12, with_first_order_diff: true }
    }
}

/// Triangular filters on a logarithmic frequency axis, applied to the bins
/// of a magnitude spectrum.
#[derive(Debug, Clone)]
pub struct LogFilterbank {
    /// `(first bin, weights)` per band.
    bands: Vec<(usize, Vec<f64>)>,
    f_max_effective: f64,
    clamped: bool,
}

impl LogFilterbank {
    pub fn new(cfg: &FilterbankConfig, sample_rate: u32, fft_len: usize) -> Result<Self> {
        let nyquist = sample_rate as f64 / 2.0;
        let clamped = cfg.f_max > nyquist;
        let f_max = cfg.f_max.min(nyquist);
        if clamped {
            log::warn!("filterbank f_max {} Hz above Nyquist, clamped to {nyquist} Hz", cfg.f_max);
        }
        if !(cfg.f_min > 0.0 && cfg.f_min < f_max) || cfg.bands_per_octave == 0 {
            return Err(Error::Config(format!(
                "filterbank needs 0 < f_min < f_max, got [{}, {f_max}]",
                cfg.f_min
            )));
        }

        let bin_hz = sample_rate as f64 / fft_len as f64;
        let n_bins = fft_len / 2 + 1;
        let mut bins: Vec<usize> = Vec::new();
        let mut i = 0;
        loop {
            let f = cfg.f_min * 2f64.powf(i as f64 / cfg.bands_per_octave as f64);
            if f > f_max * (1.0 + 1e-12) {
                break;
            }
            let bin = ((f / bin_hz).round() as usize).min(n_bins - 1);
            if bins.last() != Some(&bin) {
                bins.push(bin);
            }
            i += 1;
        }
        if bins.len() < 3 {
            return Err(Error::Config(format!(
                "frequency range [{}, {f_max}] Hz too narrow for FFT size {fft_len}",
                cfg.f_min
            )));
        }

        let bands = bins
            .windows(3)
            .map(|w| {
                let (lo, mid, hi) = (w[0], w[1], w[2]);
                let mut weights: Vec<f64> = (lo..=hi)
                    .map(|k| {
                        if k <= mid {
                            (k - lo) as f64 / (mid - lo) as f64
                        } else {
                            (hi - k) as f64 / (hi - mid) as f64
                        }
                    })
                    .collect();
                let area: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|x| *x /= area);
                (lo, weights)
            })
            .collect();

        Ok(Self { bands, f_max_effective: f_max, clamped })
    }

    pub fn n_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn f_max_effective(&self) -> f64 {
        self.f_max_effective
    }

    /// Whether the requested upper edge exceeded Nyquist.
    pub fn was_clamped(&self) -> bool {
        self.clamped
    }

    pub fn apply(&self, magnitude: &[f64], out: &mut [f64]) {
        for ((start, weights), o) in self.bands.iter().zip(out.iter_mut()) {
            *o = weights.iter().zip(&magnitude[*start..]).map(|(w, m)| w * m).sum();
        }
    }
}

/// Symmetric Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.5 - 0.5 * (std::f64::consts::TAU * n as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Per-frame feature extractor: Hann-windowed magnitude spectrum, log
/// filterbank with `log(1 + x)` compression, and the first-order difference
/// against the previous frame.
pub struct FeatureExtractor {
    frame: AudioFrameConfig,
    with_diff: bool,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filterbank: LogFilterbank,
    buffer: Vec<Complex<f64>>,
    magnitude: Vec<f64>,
    previous: Option<Vec<f64>>,
}

impl FeatureExtractor {
    pub fn new(frame: AudioFrameConfig, fb: FilterbankConfig) -> Result<Self> {
        frame.validate()?;
        let window_len = frame.window_len();
        let fft_len = window_len.next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        let filterbank = LogFilterbank::new(&fb, frame.sample_rate, fft_len)?;
        Ok(Self {
            frame,
            with_diff: fb.with_first_order_diff,
            window: hann(window_len),
            fft,
            filterbank,
            buffer: vec![Complex::default(); fft_len],
            magnitude: vec![0.0; fft_len / 2 + 1],
            previous: None,
        })
    }

    pub fn frame_config(&self) -> &AudioFrameConfig {
        &self.frame
    }

    pub fn filterbank(&self) -> &LogFilterbank {
        &self.filterbank
    }

    pub fn n_bands(&self) -> usize {
        self.filterbank.n_bands()
    }

    /// Length of the returned feature vector.
    pub fn feature_len(&self) -> usize {
        if self.with_diff {
            2 * self.n_bands()
        } else {
            self.n_bands()
        }
    }

    /// Features for one window of `window_len` samples.
    pub fn frame_features(&mut self, block: &[f32]) -> Result<Vec<f64>> {
        if block.len() != self.window.len() {
            return Err(Error::InvalidArgument(format!(
                "expected a block of {} samples, got {}",
                self.window.len(),
                block.len()
            )));
        }
        for (i, c) in self.buffer.iter_mut().enumerate() {
            let x = block.get(i).map_or(0.0, |&s| s as f64 * self.window[i]);
            *c = Complex::new(x, 0.0);
        }
        self.fft.process(&mut self.buffer);
        for (m, c) in self.magnitude.iter_mut().zip(&self.buffer) {
            *m = c.norm();
        }

        let n = self.n_bands();
        let mut features = vec![0.0; self.feature_len()];
        self.filterbank.apply(&self.magnitude, &mut features[..n]);
        features[..n].iter_mut().for_each(|x| *x = x.ln_1p());

        if self.with_diff {
            if let Some(prev) = &self.previous {
                for i in 0..n {
                    features[n + i] = features[i] - prev[i];
                }
            }
            self.previous = Some(features[..n].to_vec());
        }
        Ok(features)
    }
}

/// Splits a sample stream into causal analysis windows. Window `k` ends at
/// sample `k * hop`; samples before the stream start are zeros.
#[derive(Debug, Clone)]
pub struct Framer {
    window_len: usize,
    hop_len: usize,
    pending: Vec<f32>,
}

impl Framer {
    pub fn new(window_len: usize, hop_len: usize) -> Self {
        Self { window_len, hop_len, pending: vec![0.0; window_len - 1] }
    }

    /// Appends samples and hands every completed window to `emit`.
    pub fn push(&mut self, samples: &[f32], mut emit: impl FnMut(&[f32])) {
        for &s in samples {
            self.pending.push(s);
            if self.pending.len() == self.window_len {
                emit(&self.pending);
                self.pending.drain(..self.hop_len.min(self.window_len));
            }
        }
    }
}

/// Positive part of the band-wise difference between two log-filterbank
/// frames.
pub fn spectral_flux(current: &[f64], previous: &[f64]) -> f64 {
    current.iter().zip(previous).map(|(c, p)| (c - p).max(0.0)).sum()
}

/// Scales flux into `[0, 1]` by a running maximum that decays with a fixed
/// half-life.
#[derive(Debug, Clone)]
pub struct FluxNormalizer {
    decay: f64,
    running_max: f64,
}

impl FluxNormalizer {
    pub const HALF_LIFE_S: f64 = 5.0;

    pub fn new(frame_period_s: f64) -> Self {
        Self { decay: 0.5f64.powf(frame_period_s / Self::HALF_LIFE_S), running_max: 0.0 }
    }

    pub fn normalize(&mut self, flux: f64) -> f64 {
        self.running_max = (self.running_max * self.decay).max(flux);
        if self.running_max > 0.0 {
            (flux / self.running_max).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Audio-to-activation fallback: framing, features, flux, normalization.
pub struct FluxFrontend {
    framer: Framer,
    extractor: FeatureExtractor,
    normalizer: FluxNormalizer,
    previous: Option<Vec<f64>>,
    frame_index: u64,
}

impl FluxFrontend {
    pub fn new(frame: AudioFrameConfig, fb: FilterbankConfig) -> Result<Self> {
        let extractor = FeatureExtractor::new(frame, FilterbankConfig { with_first_order_diff: false, ..fb })?;
        Ok(Self {
            framer: Framer::new(frame.window_len(), frame.hop_len()),
            normalizer: FluxNormalizer::new(frame.hop_s),
            extractor,
            previous: None,
            frame_index: 0,
        })
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    /// Feeds samples and returns the activations of every frame they
    /// complete.
    pub fn push(&mut self, samples: &[f32]) -> Result<Vec<ActivationFrame>> {
        let mut blocks = Vec::new();
        self.framer.push(samples, |w| blocks.push(w.to_vec()));
        let mut out = Vec::with_capacity(blocks.len());
        for block in blocks {
            let log_bands = self.extractor.frame_features(&block)?;
            let flux = match &self.previous {
                Some(prev) => spectral_flux(&log_bands, prev),
                None => 0.0,
            };
            self.previous = Some(log_bands);
            out.push(ActivationFrame {
                frame_index: self.frame_index,
                b: self.normalizer.normalize(flux),
            });
            self.frame_index += 1;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, sr: u32, secs: f64) -> Vec<f32> {
        (0..(secs * sr as f64) as usize)
            .map(|n| (0.5 * (std::f64::consts::TAU * freq * n as f64 / sr as f64).sin()) as f32)
            .collect()
    }

    fn features_of(samples: &[f32], sr: u32) -> Vec<Vec<f64>> {
        let frame = AudioFrameConfig::new(sr);
        let mut ex = FeatureExtractor::new(frame, FilterbankConfig::default()).unwrap();
        let mut framer = Framer::new(frame.window_len(), frame.hop_len());
        let mut blocks = Vec::new();
        framer.push(samples, |w| blocks.push(w.to_vec()));
        blocks.iter().map(|b| ex.frame_features(b).unwrap()).collect()
    }

    #[test]
    fn frame_geometry_44k() {
        let frame = AudioFrameConfig::new(44_100);
        assert_eq!(frame.window_len(), 2029);
        assert_eq!(frame.hop_len(), 441);
        let ex = FeatureExtractor::new(frame, FilterbankConfig::default()).unwrap();
        assert_eq!(ex.feature_len(), 2 * ex.n_bands());
        assert!(!ex.filterbank().was_clamped());
    }

    #[test]
    fn framer_is_causal() {
        let mut framer = Framer::new(4, 2);
        let mut frames = Vec::new();
        framer.push(&[1.0, 2.0, 3.0, 4.0, 5.0], |w| frames.push(w.to_vec()));
        assert_eq!(
            frames,
            vec![
                vec![0.0, 0.0, 0.0, 1.0],
                vec![0.0, 1.0, 2.0, 3.0],
                vec![2.0, 3.0, 4.0, 5.0],
            ]
        );
    }

    #[test]
    fn silence_gives_zero_features() {
        let feats = features_of(&vec![0.0; 44_100 / 2], 44_100);
        assert_eq!(feats.len(), 50);
        assert!(feats.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn steady_tone_has_flat_diff() {
        let feats = features_of(&tone(440.0, 44_100, 1.0), 44_100);
        let n = feats[0].len() / 2;
        let peak = feats.last().unwrap()[..n].iter().cloned().fold(0.0, f64::max);
        assert!(peak > 1.0);
        // once the window is full of signal the log spectrum is stationary
        for f in &feats[6..] {
            let worst = f[n..].iter().map(|d| d.abs()).fold(0.0, f64::max);
            assert!(worst < 0.02 * peak, "diff {worst} vs peak {peak}");
        }
    }

    #[test]
    fn nyquist_clamp() {
        let frame = AudioFrameConfig::new(22_050);
        let ex = FeatureExtractor::new(frame, FilterbankConfig::default()).unwrap();
        assert!(ex.filterbank().was_clamped());
        assert_eq!(ex.filterbank().f_max_effective(), 11_025.0);
        let full = FeatureExtractor::new(AudioFrameConfig::new(44_100), FilterbankConfig::default()).unwrap();
        assert!(ex.n_bands() < full.n_bands());
    }

    #[test]
    fn rejects_wrong_block_length() {
        let mut ex = FeatureExtractor::new(AudioFrameConfig::new(44_100), FilterbankConfig::default()).unwrap();
        assert!(ex.frame_features(&[0.0; 100]).is_err());
    }

    #[test]
    fn features_bit_identical() {
        let sig = tone(1000.0, 22_050, 0.5);
        assert_eq!(features_of(&sig, 22_050), features_of(&sig, 22_050));
    }

    #[test]
    fn flux_basics() {
        assert_eq!(spectral_flux(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(spectral_flux(&[3.0, 1.0], &[1.0, 2.0]), 2.0);
        let mut norm = FluxNormalizer::new(0.01);
        assert_eq!(norm.normalize(0.0), 0.0);
        assert_eq!(norm.normalize(4.0), 1.0);
        assert!((norm.normalize(2.0) - 2.0 / (4.0 * norm.decay)).abs() < 1e-12);
        // 5 s later the reference has halved
        let mut norm = FluxNormalizer::new(0.01);
        norm.normalize(1.0);
        for _ in 0..499 {
            norm.normalize(0.0);
        }
        assert!((norm.running_max - 0.5).abs() < 1e-3);
    }

    #[test]
    fn onset_after_silence_hits_one() {
        let sr = 22_050;
        let mut sig = vec![0.0f32; sr as usize / 2];
        sig.extend(tone(880.0, sr, 0.5));
        let mut fe = FluxFrontend::new(AudioFrameConfig::new(sr), FilterbankConfig::default()).unwrap();
        let acts = fe.push(&sig).unwrap();
        assert!(acts.iter().all(|a| (0.0..=1.0).contains(&a.b)));
        let first = acts.iter().position(|a| a.b > 0.0).unwrap();
        assert!((50..=51).contains(&first), "onset frame {first}");
        assert_eq!(acts[first].b, 1.0);
        assert!(acts[..50].iter().all(|a| a.b == 0.0));
    }
}
