//! Wavelet-packet enhancement: NMF noise tracking directly on the squared,
//! framed DWPT subband signals.
//!
//! Per subband `b` the pipeline is: rectangular framing, entrywise squaring,
//! encoding against `[W_S^b W_N^b]`, square-root Wiener gain, de-framing of the
//! gain by averaging overlap-add, modulation of the subband, and rescaling to
//! the clean-training rms `sigma_b`. The modified bands are then merged by the
//! inverse DWPT.

use ndarray::{Array2, Zip};
use rayon::prelude::*;

use crate::config::{derive_seed, EnhanceConfig};
use crate::error::{Error, Result};
use crate::framing::{frame_signal, overlap_add, square_elementwise, FrameSpec};
use crate::matrix::NonnegMatrix;
use crate::nmf::{self, NmfParams};
use crate::signal::{fit_length, rms, Signal};
use crate::wpt::{dwpt, idwpt, SubbandSet, WaveletFilters};

/// Dictionaries and clean rms for one subband.
#[derive(Debug, Clone, PartialEq)]
pub struct BandModel {
    pub w_speech: NonnegMatrix,
    pub w_noise: NonnegMatrix,
    pub sigma_clean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandBasisModel {
    pub sample_rate: u32,
    pub level: usize,
    pub filter_name: String,
    pub frame_spec: FrameSpec,
    pub bands: Vec<BandModel>,
}

impl SubbandBasisModel {
    pub fn validate(&self) -> Result<()> {
        let expected = 1usize << self.level;
        if self.bands.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} subband blocks, found {}",
                self.bands.len()
            )));
        }
        let rows = self.frame_spec.frame_size();
        for (b, band) in self.bands.iter().enumerate() {
            if band.w_speech.rows() != rows || band.w_noise.rows() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "subband {} dictionaries must have {rows} rows",
                    b + 1
                )));
            }
            if !(band.sigma_clean >= 0.0 && band.sigma_clean.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "subband {} clean rms must be finite and nonnegative",
                    b + 1
                )));
            }
        }
        Ok(())
    }
}

/// Per-sample gain for one subband, every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSequence(Vec<f64>);

impl GainSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::InvalidParameter(
                "gain values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self(values))
    }

    pub fn unit(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `s .* g`
    pub fn modulate(&self, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.0.len() {
            return Err(Error::LengthMismatch(format!(
                "subband has {} samples, gain {}",
                s.len(),
                self.0.len()
            )));
        }
        Ok(s.iter().zip(&self.0).map(|(x, g)| x * g).collect())
    }
}

/// Squared rectangular frames of a subband signal.
pub fn subband_features(s_b: &[f64], spec: FrameSpec) -> Result<NonnegMatrix> {
    square_elementwise(frame_signal(s_b, spec)?.view())
}

/// `G = sqrt(S ./ max(S + N, eps))`, clamped to `[0, 1]`.
pub fn sqrt_wiener_gain(
    speech: &NonnegMatrix,
    noise: &NonnegMatrix,
    epsilon: f64,
) -> Result<Array2<f64>> {
    if speech.as_array().dim() != noise.as_array().dim() {
        return Err(Error::DimensionMismatch(
            "speech and noise parts differ in shape".into(),
        ));
    }
    Ok(Zip::from(speech.as_array())
        .and(noise.as_array())
        .map_collect(|&s, &n| (s / (s + n).max(epsilon)).sqrt().clamp(0.0, 1.0)))
}

/// De-frames a gain matrix to `len` samples. Samples past the last full frame
/// repeat the last covered gain value.
pub fn deframe_gain(gain: &Array2<f64>, spec: FrameSpec, len: usize) -> Result<GainSequence> {
    let mut g = overlap_add(gain.view(), spec, len)?;
    let covered = spec.covered_len(gain.ncols());
    if covered < len {
        let last = g[covered - 1];
        g[covered..].iter_mut().for_each(|v| *v = last);
    }
    Ok(GainSequence(
        g.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    ))
}

/// Gain sequence for subband signal `s_b` against its speech/noise dictionaries.
pub fn subband_gain(
    s_b: &[f64],
    w_s: &NonnegMatrix,
    w_n: &NonnegMatrix,
    spec: FrameSpec,
    params: &NmfParams,
) -> Result<GainSequence> {
    let v = subband_features(s_b, spec)?;
    let joint = NonnegMatrix::hstack(&[w_s, w_n])?;
    let h = nmf::encode(&v, &joint, params)?;
    let (speech, noise) = nmf::split_reconstruction(w_s, w_n, &h)?;
    let gain = sqrt_wiener_gain(&speech, &noise, params.epsilon)?;
    deframe_gain(&gain, spec, s_b.len())
}

/// `(sigma_clean / max(rms(s), eps)) * s`, or zeros when `sigma_clean == 0`.
pub fn normalize_power(s: &[f64], sigma_clean: f64, epsilon: f64) -> Vec<f64> {
    if sigma_clean == 0.0 {
        return vec![0.0; s.len()];
    }
    let scale = sigma_clean / rms(s).max(epsilon);
    s.iter().map(|v| v * scale).collect()
}

fn common_rate(signals: &[Signal]) -> Result<u32> {
    let rate = signals
        .first()
        .map(Signal::sample_rate)
        .ok_or_else(|| Error::EmptyInput("empty training set".into()))?;
    if let Some(bad) = signals.iter().find(|s| s.sample_rate() != rate) {
        return Err(Error::ModelMismatch(format!(
            "training signals mix sample rates {rate} and {}",
            bad.sample_rate()
        )));
    }
    Ok(rate)
}

fn decompose_all(
    signals: &[Signal],
    level: usize,
    filters: &WaveletFilters,
    spec: FrameSpec,
) -> Result<Vec<SubbandSet>> {
    let sets = signals
        .par_iter()
        .map(|s| dwpt(s, level, filters))
        .collect::<Result<Vec<_>>>()?;
    for (u, set) in sets.iter().enumerate() {
        if set.band_len() < spec.frame_size() {
            return Err(Error::BandTooShort {
                utterance: u + 1,
                band: 1,
                len: set.band_len(),
                frame_size: spec.frame_size(),
            });
        }
    }
    Ok(sets)
}

fn band_dictionary(
    sets: &[SubbandSet],
    band: usize,
    spec: FrameSpec,
    params: &NmfParams,
) -> Result<NonnegMatrix> {
    let parts = sets
        .iter()
        .map(|s| subband_features(s.band(band), spec))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&NonnegMatrix> = parts.iter().collect();
    let v = NonnegMatrix::hstack(&refs)?;
    let params = NmfParams {
        seed: derive_seed(params.seed, band as u64 + 1),
        ..*params
    };
    Ok(nmf::factorize(&v, &params)?.w)
}

/// Offline phase: per-subband dictionaries from clean speech and from noise,
/// plus the rms of each clean subband over the whole clean set.
pub fn train_dwpt_model(
    clean: &[Signal],
    noise: &[Signal],
    filters: &WaveletFilters,
    cfg: &EnhanceConfig,
) -> Result<SubbandBasisModel> {
    cfg.validate()?;
    if clean.is_empty() {
        return Err(Error::EmptyInput("no clean training signals".into()));
    }
    if noise.is_empty() {
        return Err(Error::EmptyInput("no noise training signals".into()));
    }
    let all: Vec<Signal> = clean.iter().chain(noise).cloned().collect();
    let sample_rate = common_rate(&all)?;
    let spec = cfg.frame_spec()?;
    let clean_sets = decompose_all(clean, cfg.level, filters, spec)?;
    let noise_sets = decompose_all(noise, cfg.level, filters, spec)?;

    let n_bands = 1usize << cfg.level;
    let sigmas: Vec<f64> = (0..n_bands)
        .map(|b| {
            let samples: Vec<f64> = clean_sets
                .iter()
                .flat_map(|s| s.band(b).iter().copied())
                .collect();
            rms(&samples)
        })
        .collect();
    if sigmas.iter().all(|&s| s == 0.0) {
        return Err(Error::DegenerateCleanSet);
    }

    let (speech_params, noise_params) = (cfg.speech_params(), cfg.noise_params());
    let bands = (0..n_bands)
        .into_par_iter()
        .map(|b| {
            let (w_speech, w_noise) = rayon::join(
                || band_dictionary(&clean_sets, b, spec, &speech_params),
                || band_dictionary(&noise_sets, b, spec, &noise_params),
            );
            Ok(BandModel {
                w_speech: w_speech?,
                w_noise: w_noise?,
                sigma_clean: sigmas[b],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SubbandBasisModel {
        sample_rate,
        level: cfg.level,
        filter_name: filters.name().to_string(),
        frame_spec: spec,
        bands,
    })
}

fn check_compatible(
    noisy: &Signal,
    model: &SubbandBasisModel,
    filters: &WaveletFilters,
) -> Result<()> {
    model.validate()?;
    if filters.name() != model.filter_name {
        return Err(Error::ModelMismatch(format!(
            "model trained with '{}' filters, got '{}'",
            model.filter_name,
            filters.name()
        )));
    }
    if noisy.sample_rate() != model.sample_rate {
        return Err(Error::ModelMismatch(format!(
            "signal sample rate {} Hz, model trained at {} Hz",
            noisy.sample_rate(),
            model.sample_rate
        )));
    }
    Ok(())
}

/// Online phase up to (not including) the inverse transform: the modulated
/// and, if enabled, power-normalized subbands.
pub fn enhance_dwpt_bands(
    noisy: &Signal,
    model: &SubbandBasisModel,
    filters: &WaveletFilters,
    cfg: &EnhanceConfig,
) -> Result<SubbandSet> {
    check_compatible(noisy, model, filters)?;
    let subbands = dwpt(noisy, model.level, filters)?;
    let spec = model.frame_spec;
    if subbands.band_len() < spec.frame_size() {
        return Err(Error::SignalTooShort {
            len: subbands.band_len(),
            frame_size: spec.frame_size(),
        });
    }
    let encode = cfg.encode_params();
    let enhanced = subbands
        .bands()
        .par_iter()
        .zip(&model.bands)
        .enumerate()
        .map(|(b, (s, band))| {
            let gain = if cfg.unit_gain {
                GainSequence::unit(s.len())
            } else {
                let params = NmfParams {
                    seed: derive_seed(encode.seed, b as u64 + 1),
                    ..encode
                };
                subband_gain(s, &band.w_speech, &band.w_noise, spec, &params)?
            };
            let modulated = gain.modulate(s)?;
            Ok(if cfg.normalize {
                normalize_power(&modulated, band.sigma_clean, cfg.epsilon)
            } else {
                modulated
            })
        })
        .collect::<Result<Vec<_>>>()?;
    subbands.with_bands(enhanced)
}

/// Full DWPT-NMF enhancement; output length equals input length.
pub fn enhance_dwpt(
    noisy: &Signal,
    model: &SubbandBasisModel,
    filters: &WaveletFilters,
    cfg: &EnhanceConfig,
) -> Result<Signal> {
    let bands = enhance_dwpt_bands(noisy, model, filters, cfg)?;
    let samples = fit_length(idwpt(&bands, filters)?, noisy.len());
    Signal::new(samples, noisy.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::{synth_tone, synth_white_noise};
    use ndarray::array;

    fn small_cfg() -> EnhanceConfig {
        EnhanceConfig {
            frame_size: 64,
            frame_shift: 16,
            speech_rank: 2,
            noise_rank: 3,
            iters_train: 30,
            iters_encode: 20,
            ..EnhanceConfig::dwpt_defaults()
        }
    }

    #[test]
    fn sqrt_gain_hand_cases() {
        let s = NonnegMatrix::new(array![[1.0, 2.0]]).unwrap();
        let n = NonnegMatrix::new(array![[3.0, 0.0]]).unwrap();
        assert_eq!(sqrt_wiener_gain(&s, &n, 1e-12).unwrap(), array![[0.5, 1.0]]);
    }

    #[test]
    fn deframe_is_mean_of_covering_entries() {
        let spec = FrameSpec::new(5, 2).unwrap();
        let gain = Array2::from_shape_fn((5, 4), |(i, k)| ((i * 7 + k * 3) % 11) as f64 / 10.0);
        let len = 13;
        let g = deframe_gain(&gain, spec, len).unwrap();
        let covered = spec.covered_len(4);
        for t in 0..covered {
            let mut vals = Vec::new();
            for k in 0..4 {
                let start = k * 2;
                if t >= start && t < start + 5 {
                    vals.push(gain[[t - start, k]]);
                }
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((g.values()[t] - mean).abs() < 1e-15);
        }
        for t in covered..len {
            assert_eq!(g.values()[t], g.values()[covered - 1]);
        }
    }

    #[test]
    fn rms_normalization() {
        let s = vec![4.0, -4.0, 4.0, -4.0];
        let out = normalize_power(&s, 2.0, 1e-12);
        assert_eq!(out, vec![2.0, -2.0, 2.0, -2.0]);
        assert!((rms(&out) - 2.0).abs() < 1e-15);
        assert_eq!(normalize_power(&s, 0.0, 1e-12), vec![0.0; 4]);
    }

    #[test]
    fn gain_sequence_bounds() {
        assert!(GainSequence::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(GainSequence::new(vec![1.1]).is_err());
        assert!(GainSequence::unit(3).modulate(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn noiseless_limit_gives_unit_gain() {
        let spec = FrameSpec::new(8, 4).unwrap();
        let s: Vec<f64> = (0..40).map(|t| (t as f64 * 0.3).sin()).collect();
        let w_s = NonnegMatrix::from_trusted(Array2::from_elem((8, 2), 0.5));
        let w_n = NonnegMatrix::zeros(8, 2);
        let g = subband_gain(&s, &w_s, &w_n, spec, &NmfParams::new(4, 10)).unwrap();
        assert_eq!(g.len(), 40);
        assert!(g.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn constant_band_sigma() {
        // A constant-amplitude signal gives a low band of constant value a.
        let a = 0.3;
        let x = Signal::new(vec![a / 2.0; 512], 8000).unwrap();
        let cfg = EnhanceConfig {
            level: 1,
            ..small_cfg()
        };
        let noise = synth_white_noise(0.064, 8000, 1, 0.1).unwrap();
        let model = train_dwpt_model(&[x], &[noise], &WaveletFilters::haar(), &cfg).unwrap();
        let expected = a / 2.0 * 2f64.sqrt();
        assert!((model.bands[0].sigma_clean - expected).abs() < 1e-12);
        assert!(model.bands[1].sigma_clean < 1e-12);
    }

    #[test]
    fn zero_clean_set_is_degenerate() {
        let z = Signal::zeros(4096, 8000).unwrap();
        let n = synth_white_noise(0.512, 8000, 1, 0.1).unwrap();
        let err = train_dwpt_model(&[z], &[n], &WaveletFilters::haar(), &small_cfg()).unwrap_err();
        assert!(err.to_string().contains("degenerate clean set"));
    }

    #[test]
    fn short_utterance_names_band() {
        let x = synth_tone(300.0, 0.04, 8000, 0.5).unwrap();
        let n = synth_white_noise(1.0, 8000, 1, 0.1).unwrap();
        let err = train_dwpt_model(&[x], &[n], &WaveletFilters::haar(), &small_cfg()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::BandTooShort {
                    band: 1,
                    utterance: 1,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn model_shape_and_filter_check() {
        let x = synth_tone(300.0, 0.5, 8000, 0.5).unwrap();
        let n = synth_white_noise(0.5, 8000, 1, 0.1).unwrap();
        let cfg = small_cfg();
        let f = WaveletFilters::from_name("db4").unwrap();
        let model = train_dwpt_model(std::slice::from_ref(&x), &[n], &f, &cfg).unwrap();
        assert_eq!(model.bands.len(), 8);
        assert_eq!(model.bands[0].w_speech.as_array().dim(), (64, 2));
        assert_eq!(model.bands[0].w_noise.as_array().dim(), (64, 3));
        let err = enhance_dwpt(&x, &model, &WaveletFilters::haar(), &cfg).unwrap_err();
        assert!(matches!(err, Error::ModelMismatch(_)));
        let out = enhance_dwpt(&x, &model, &f, &cfg).unwrap();
        assert_eq!(out.len(), x.len());
    }
}
