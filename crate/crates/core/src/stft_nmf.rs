//! Baseline enhancement: NMF noise tracking on the STFT spectrogram with a
//! Wiener-style gain and phase-preserving resynthesis.

use ndarray::{Array2, Zip};

use crate::config::{EnhanceConfig, FeatureKind, GainApplication, Window};
use crate::error::{Error, Result};
use crate::framing::FrameSpec;
use crate::matrix::NonnegMatrix;
use crate::nmf::{self, NmfParams};
use crate::signal::{fit_length, Signal};
use crate::stft::{istft, stft, ComplexSpectrogram};

/// Trained full-band speech and noise dictionaries.
#[derive(Debug, Clone, PartialEq)]
pub struct StftBasisModel {
    pub sample_rate: u32,
    pub frame_spec: FrameSpec,
    pub window: Window,
    pub feature_kind: FeatureKind,
    pub w_speech: NonnegMatrix,
    pub w_noise: NonnegMatrix,
}

impl StftBasisModel {
    pub fn bins(&self) -> usize {
        self.frame_spec.frame_size() / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bins = self.bins();
        if self.w_speech.rows() != bins || self.w_noise.rows() != bins {
            return Err(Error::DimensionMismatch(format!(
                "dictionaries must have {bins} rows (speech {}, noise {})",
                self.w_speech.rows(),
                self.w_noise.rows()
            )));
        }
        Ok(())
    }

    /// `[W_S W_N]`
    pub fn joint_dictionary(&self) -> Result<NonnegMatrix> {
        NonnegMatrix::hstack(&[&self.w_speech, &self.w_noise])
    }
}

/// Nonnegative feature matrix (power or magnitude) of a spectrogram.
pub fn features(spec: &ComplexSpectrogram, kind: FeatureKind) -> NonnegMatrix {
    let m = spec.magnitude();
    NonnegMatrix::from_trusted(match kind {
        FeatureKind::Power => m.mapv(|v| v * v),
        FeatureKind::Magnitude => m.clone(),
    })
}

fn class_features(signals: &[Signal], cfg: &EnhanceConfig, class: &str) -> Result<NonnegMatrix> {
    if signals.is_empty() {
        return Err(Error::EmptyInput(format!("no {class} training signals")));
    }
    let spec = cfg.frame_spec()?;
    let parts = signals
        .iter()
        .map(|s| stft(s.samples(), spec, cfg.window).map(|f| features(&f, cfg.feature_kind)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&NonnegMatrix> = parts.iter().collect();
    NonnegMatrix::hstack(&refs)
}

fn common_rate(clean: &[Signal], noise: &[Signal]) -> Result<u32> {
    let rate = clean
        .first()
        .or(noise.first())
        .map(Signal::sample_rate)
        .ok_or_else(|| Error::EmptyInput("empty training set".into()))?;
    if let Some(bad) = clean.iter().chain(noise).find(|s| s.sample_rate() != rate) {
        return Err(Error::ModelMismatch(format!(
            "training signals mix sample rates {rate} and {}",
            bad.sample_rate()
        )));
    }
    Ok(rate)
}

/// Learns `W_S` from clean speech and `W_N` from speech-free noise.
pub fn train_stft_model(
    clean: &[Signal],
    noise: &[Signal],
    cfg: &EnhanceConfig,
) -> Result<StftBasisModel> {
    cfg.validate()?;
    let sample_rate = common_rate(clean, noise)?;
    let v_speech = class_features(clean, cfg, "clean")?;
    let v_noise = class_features(noise, cfg, "noise")?;
    let (speech, noise) = rayon::join(
        || nmf::factorize(&v_speech, &cfg.speech_params()),
        || nmf::factorize(&v_noise, &cfg.noise_params()),
    );
    Ok(StftBasisModel {
        sample_rate,
        frame_spec: cfg.frame_spec()?,
        window: cfg.window,
        feature_kind: cfg.feature_kind,
        w_speech: speech?.w,
        w_noise: noise?.w,
    })
}

/// `G = S ./ max(S + N, eps)`, clamped to `[0, 1]`.
pub fn wiener_gain(
    speech: &NonnegMatrix,
    noise: &NonnegMatrix,
    epsilon: f64,
) -> Result<NonnegMatrix> {
    if speech.as_array().dim() != noise.as_array().dim() {
        return Err(Error::DimensionMismatch(
            "speech and noise parts differ in shape".into(),
        ));
    }
    let g = Zip::from(speech.as_array())
        .and(noise.as_array())
        .map_collect(|&s, &n| (s / (s + n).max(epsilon)).clamp(0.0, 1.0));
    Ok(NonnegMatrix::from_trusted(g))
}

/// Noise-tracking gain for a noisy spectrogram.
pub fn spectrogram_gain(
    noisy: &ComplexSpectrogram,
    model: &StftBasisModel,
    params: &NmfParams,
) -> Result<NonnegMatrix> {
    let v = features(noisy, model.feature_kind);
    let joint = model.joint_dictionary()?;
    let h = nmf::encode(&v, &joint, params)?;
    let (speech, noise) = nmf::split_reconstruction(&model.w_speech, &model.w_noise, &h)?;
    wiener_gain(&speech, &noise, params.epsilon)
}

/// Scales the magnitude by `G` (or `sqrt(G)`); phase is reused verbatim.
pub fn apply_gain(
    noisy: &ComplexSpectrogram,
    gain: &NonnegMatrix,
    how: GainApplication,
) -> Result<ComplexSpectrogram> {
    if gain.as_array().dim() != noisy.magnitude().dim() {
        return Err(Error::DimensionMismatch(
            "gain and spectrogram shapes differ".into(),
        ));
    }
    let magnitude: Array2<f64> = Zip::from(noisy.magnitude())
        .and(gain.as_array())
        .map_collect(|&m, &g| match how {
            GainApplication::Direct => g * m,
            GainApplication::Sqrt => g.sqrt() * m,
        });
    noisy.with_magnitude(magnitude)
}

fn check_compatible(noisy: &Signal, model: &StftBasisModel, cfg: &EnhanceConfig) -> Result<()> {
    model.validate()?;
    if noisy.sample_rate() != model.sample_rate {
        return Err(Error::ModelMismatch(format!(
            "signal sample rate {} Hz, model trained at {} Hz",
            noisy.sample_rate(),
            model.sample_rate
        )));
    }
    if cfg.feature_kind != model.feature_kind {
        return Err(Error::ModelMismatch(format!(
            "model uses {} features, configuration asks for {}",
            model.feature_kind.name(),
            cfg.feature_kind.name()
        )));
    }
    Ok(())
}

/// Enhanced spectrogram (before resynthesis) for a noisy signal.
pub fn enhance_spectrogram(
    noisy: &Signal,
    model: &StftBasisModel,
    cfg: &EnhanceConfig,
) -> Result<ComplexSpectrogram> {
    check_compatible(noisy, model, cfg)?;
    let spec = stft(noisy.samples(), model.frame_spec, model.window)?;
    let gain = if cfg.unit_gain {
        NonnegMatrix::from_trusted(Array2::ones(spec.magnitude().dim()))
    } else {
        spectrogram_gain(&spec, model, &cfg.encode_params())?
    };
    apply_gain(&spec, &gain, cfg.gain_on_magnitude)
}

/// Full STFT-NMF enhancement; output length equals input length.
pub fn enhance_stft(noisy: &Signal, model: &StftBasisModel, cfg: &EnhanceConfig) -> Result<Signal> {
    let enhanced = enhance_spectrogram(noisy, model, cfg)?;
    let samples = fit_length(istft(&enhanced, noisy.len())?, noisy.len());
    Signal::new(samples, noisy.sample_rate())
}
