//! Activation sources: precomputed activation streams, or a spectral-flux
//! activation computed from audio.

mod activation;
mod features;
mod wav;

pub use activation::{
    read_activation_stream, write_binary, write_text, ActivationFormat, ActivationFrame,
    ActivationReader, ActivationStream, BINARY_MAGIC,
};
pub use features::{
    hann, spectral_flux, AudioFrameConfig, FeatureExtractor, FilterbankConfig, FluxFrontend,
    FluxNormalizer, Framer, LogFilterbank, WindowKind,
};
pub use wav::{read_wav, read_wav_from, MonoAudio};

/// Spectral-flux activations for a whole mono signal.
pub fn flux_activations(audio: &MonoAudio, hop_s: f64) -> crate::Result<Vec<f64>> {
    let frame = AudioFrameConfig { hop_s, ..AudioFrameConfig::new(audio.sample_rate) };
    let mut fe = FluxFrontend::new(frame, FilterbankConfig::default())?;
    Ok(fe.push(&audio.samples)?.into_iter().map(|f| f.b).collect())
}
