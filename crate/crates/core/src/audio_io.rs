//! PCM16 WAV input and output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::Signal;

const FULL_SCALE: f64 = 32768.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavInfo {
    pub sample_rate: u32,
    pub channels: u16,
    pub bit_depth: u16,
    pub frame_count: u32,
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::Wav(format!("{}: {other}", path.display())),
    }
}

/// Reads a PCM16 WAV file; channels are averaged to mono and samples scaled by 1/32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Signal, WavInfo)> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        let kind = match spec.sample_format {
            SampleFormat::Float => "float",
            SampleFormat::Int => "integer",
        };
        return Err(Error::Wav(format!(
            "{}: only 16-bit PCM is supported (file is {}-bit {kind})",
            path.display(),
            spec.bits_per_sample
        )));
    }
    let channels = usize::from(spec.channels);
    let raw = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| wav_error(path, e))?;
    if raw.len() % channels != 0 {
        return Err(Error::Wav(format!(
            "{}: truncated sample frame",
            path.display()
        )));
    }
    if channels > 1 {
        log::warn!("{}: averaging {channels} channels to mono", path.display());
    }
    let samples: Vec<f64> = raw
        .chunks(channels)
        .map(|frame| {
            frame.iter().map(|&s| f64::from(s)).sum::<f64>() / (channels as f64 * FULL_SCALE)
        })
        .collect();
    let info = WavInfo {
        sample_rate: spec.sample_rate,
        channels: spec.channels,
        bit_depth: 16,
        frame_count: samples.len() as u32,
    };
    Ok((Signal::new(samples, spec.sample_rate)?, info))
}

/// `round(clip(x) * 32768)` saturated to the i16 range.
pub fn quantize(x: f64) -> i16 {
    (x.clamp(-1.0, 1.0) * FULL_SCALE)
        .round()
        .clamp(-32768.0, 32767.0) as i16
}

/// Writes a mono PCM16 WAV at the signal's rate.
pub fn write_wav(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &s in signal.samples() {
        writer
            .write_sample(quantize(s))
            .map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_convention() {
        assert_eq!(quantize(2.0), 32767);
        assert_eq!(quantize(1.0), 32767);
        assert_eq!(quantize(-1.0), -32768);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(0.5), 16384);
    }

    #[test]
    fn roundtrip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let samples: Vec<f64> = (0..1000).map(|t| 0.9 * (t as f64 * 0.01).sin()).collect();
        let sig = Signal::new(samples.clone(), 8000).unwrap();
        write_wav(&path, &sig).unwrap();
        let (back, info) = read_wav(&path).unwrap();
        assert_eq!(
            info,
            WavInfo {
                sample_rate: 8000,
                channels: 1,
                bit_depth: 16,
                frame_count: 1000
            }
        );
        for (a, b) in samples.iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn zeros_and_extreme_codes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for s in [0i16, 0, -32768, 16384] {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
        let (sig, _) = read_wav(&path).unwrap();
        assert_eq!(sig.samples(), &[0.0, 0.0, -1.0, 0.5]);
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for s in [16384i16, 0, -16384, -16384] {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
        let (sig, info) = read_wav(&path).unwrap();
        assert_eq!(info.channels, 2);
        assert_eq!(sig.samples(), &[0.25, -0.5]);
    }

    #[test]
    fn float_and_garbage_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(0.5f32).unwrap();
        w.finalize().unwrap();
        let err = read_wav(&path).unwrap_err();
        assert!(err.to_string().contains("16-bit PCM"), "{err}");

        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"RIFF\x04\x00\x00\x00WAVX").unwrap();
        assert!(read_wav(&junk).is_err());
    }
}
