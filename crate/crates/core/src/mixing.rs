//! SNR-controlled mixing and synthetic stand-in signals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::signal::{mean_square, Signal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixSpec {
    pub snr_db: f64,
    /// Selects the noise start offset.
    pub seed: u64,
}

/// The noise excerpt aligned with `clean`: a contiguous segment when the noise
/// is long enough, cyclic tiling otherwise. The start offset is drawn from `seed`.
pub fn noise_segment(noise: &[f64], len: usize, seed: u64) -> Vec<f64> {
    let n = noise.len();
    if n == 0 {
        return vec![0.0; len];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = if n >= len {
        rng.random_range(0..=n - len)
    } else {
        rng.random_range(0..n)
    };
    (0..len).map(|i| noise[(offset + i) % n]).collect()
}

/// Scale factor that puts `noise` at `snr_db` below `clean` in mean power.
pub fn snr_scale(clean: &[f64], noise: &[f64], snr_db: f64) -> Result<f64> {
    let (pc, pn) = (mean_square(clean), mean_square(noise));
    if pc == 0.0 || pn == 0.0 {
        return Err(Error::SilentInput);
    }
    Ok((pc / (pn * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// `clean + alpha * noise`, with alpha chosen so the mixture has the requested SNR.
pub fn mix_at_snr(clean: &Signal, noise: &Signal, spec: &MixSpec) -> Result<Signal> {
    if !spec.snr_db.is_finite() {
        return Err(Error::InvalidParameter("SNR must be finite".into()));
    }
    if clean.sample_rate() != noise.sample_rate() {
        return Err(Error::ModelMismatch(format!(
            "clean at {} Hz, noise at {} Hz",
            clean.sample_rate(),
            noise.sample_rate()
        )));
    }
    if noise.is_empty() {
        return Err(Error::SilentInput);
    }
    let segment = noise_segment(noise.samples(), clean.len(), spec.seed);
    let alpha = snr_scale(clean.samples(), &segment, spec.snr_db)?;
    let mixed = clean
        .samples()
        .iter()
        .zip(&segment)
        .map(|(&c, &n)| c + alpha * n)
        .collect();
    Signal::new(mixed, clean.sample_rate())
}

/// `10 log10(P_clean / P_(mixture - clean))`.
pub fn measured_snr_db(clean: &Signal, mixture: &Signal) -> Result<f64> {
    if clean.len() != mixture.len() {
        return Err(Error::LengthMismatch(
            "clean and mixture differ in length".into(),
        ));
    }
    let residual: Vec<f64> = mixture
        .samples()
        .iter()
        .zip(clean.samples())
        .map(|(m, c)| m - c)
        .collect();
    Ok(10.0 * (clean.power() / mean_square(&residual)).log10())
}

fn sample_count(duration_s: f64, sample_rate: u32) -> Result<usize> {
    if !(duration_s >= 0.0 && duration_s.is_finite()) || sample_rate == 0 {
        return Err(Error::InvalidParameter(
            "duration and sample rate must be positive".into(),
        ));
    }
    Ok((duration_s * sample_rate as f64).round() as usize)
}

pub fn synth_tone(
    freq_hz: f64,
    duration_s: f64,
    sample_rate: u32,
    amplitude: f64,
) -> Result<Signal> {
    synth_tone_with_phase(freq_hz, 0.0, duration_s, sample_rate, amplitude)
}

pub fn synth_tone_with_phase(
    freq_hz: f64,
    phase: f64,
    duration_s: f64,
    sample_rate: u32,
    amplitude: f64,
) -> Result<Signal> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(freq_hz >= 0.0 && freq_hz < nyquist) {
        return Err(Error::InvalidParameter(format!(
            "tone at {freq_hz} Hz aliases at {sample_rate} Hz sampling"
        )));
    }
    let n = sample_count(duration_s, sample_rate)?;
    let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate as f64;
    Signal::new(
        (0..n)
            .map(|t| amplitude * (w * t as f64 + phase).sin())
            .collect(),
        sample_rate,
    )
}

/// Gaussian white noise with standard deviation `amplitude`.
pub fn synth_white_noise(
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
    amplitude: f64,
) -> Result<Signal> {
    let n = sample_count(duration_s, sample_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Signal::new(
        (0..n)
            .map(|_| amplitude * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        sample_rate,
    )
}

/// Approximately 1/f noise (Paul Kellet's refined filter over Gaussian white
/// noise), rescaled to rms `amplitude`.
pub fn synth_pink_noise(
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
    amplitude: f64,
) -> Result<Signal> {
    let white = synth_white_noise(duration_s, sample_rate, seed, 1.0)?;
    let mut b = [0.0f64; 7];
    let mut pink: Vec<f64> = white
        .samples()
        .iter()
        .map(|&w| {
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let out = b[..6].iter().sum::<f64>() + b[6] + w * 0.5362;
            b[6] = w * 0.115926;
            out
        })
        .collect();
    let rms = mean_square(&pink).sqrt();
    if rms > 0.0 {
        pink.iter_mut().for_each(|v| *v *= amplitude / rms);
    }
    Signal::new(pink, sample_rate)
}
