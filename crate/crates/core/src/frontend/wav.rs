use std::path::Path;

use hound::{SampleFormat, WavReader};

use crate::error::{Error, Result};

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoAudio {
    pub sample_rate: u32,
    pub samples: Vec<f32>,
}

/// Reads a PCM WAV file (integer or 32-bit float), averaging channels down
/// to mono and scaling integer samples into `[-1, 1]`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<MonoAudio> {
    let reader = WavReader::open(path)?;
    decode(reader)
}

pub fn read_wav_from<R: std::io::Read>(source: R) -> Result<MonoAudio> {
    decode(WavReader::new(source)?)
}

fn decode<R: std::io::Read>(reader: WavReader<R>) -> Result<MonoAudio> {
    let format = reader.spec();
    let channels = format.channels as usize;
    if channels == 0 {
        return Err(Error::InvalidArgument("wav file declares zero channels".into()));
    }
    let interleaved: Vec<f32> = match format.sample_format {
        SampleFormat::Float => reader.into_samples::<f32>().collect::<Result<_, _>>()?,
        SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (format.bits_per_sample - 1)) as f32;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()?
        }
    };
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f32>() / channels as f32)
        .collect();
    Ok(MonoAudio { sample_rate: format.sample_rate, samples })
}
