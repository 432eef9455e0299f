//! Enhancement configuration and the experiment defaults.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::framing::FrameSpec;
use crate::nmf::{NmfParams, DEFAULT_ENCODE_ITERS, DEFAULT_EPSILON, DEFAULT_TRAIN_ITERS};
use crate::wpt::DEFAULT_FAMILY;

pub const STFT_FRAME_SIZE: usize = 256;
pub const STFT_FRAME_SHIFT: usize = 80;
pub const DWPT_FRAME_SIZE: usize = 1000;
pub const DWPT_FRAME_SHIFT: usize = 20;
pub const DWPT_LEVEL: usize = 3;
pub const SPEECH_RANK: usize = 40;
pub const NOISE_RANK: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    StftNmf,
    DwptNmf,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::StftNmf => "stft-nmf",
            Method::DwptNmf => "dwpt-nmf",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stft-nmf" | "stft" => Ok(Method::StftNmf),
            "dwpt-nmf" | "dwpt" => Ok(Method::DwptNmf),
            other => Err(Error::Unknown {
                kind: "method",
                name: other.into(),
            }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which spectrogram feature the STFT dictionaries are trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Power,
    Magnitude,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Power => "power",
            FeatureKind::Magnitude => "magnitude",
        }
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(FeatureKind::Power),
            "magnitude" => Ok(FeatureKind::Magnitude),
            other => Err(Error::Unknown {
                kind: "feature kind",
                name: other.into(),
            }),
        }
    }
}

/// How the STFT Wiener gain multiplies the noisy magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GainApplication {
    /// `|F~| = G |F|`
    Direct,
    /// `|F~| = sqrt(G) |F|`
    Sqrt,
}

impl GainApplication {
    pub fn name(self) -> &'static str {
        match self {
            GainApplication::Direct => "direct",
            GainApplication::Sqrt => "sqrt",
        }
    }
}

impl FromStr for GainApplication {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(GainApplication::Direct),
            "sqrt" => Ok(GainApplication::Sqrt),
            other => Err(Error::Unknown {
                kind: "gain application",
                name: other.into(),
            }),
        }
    }
}

/// Analysis window for the STFT path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    Hamming,
    Hann,
    Rectangular,
}

impl Window {
    pub fn name(self) -> &'static str {
        match self {
            Window::Hamming => "hamming",
            Window::Hann => "hann",
            Window::Rectangular => "rectangular",
        }
    }

    /// Symmetric window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n <= 1 {
            return vec![1.0; n];
        }
        let denom = (n - 1) as f64;
        (0..n)
            .map(|i| {
                let phase = 2.0 * std::f64::consts::PI * i as f64 / denom;
                match self {
                    Window::Hamming => 0.54 - 0.46 * phase.cos(),
                    Window::Hann => 0.5 - 0.5 * phase.cos(),
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming" => Ok(Window::Hamming),
            "hann" | "hanning" => Ok(Window::Hann),
            "rectangular" | "rect" => Ok(Window::Rectangular),
            other => Err(Error::Unknown {
                kind: "window",
                name: other.into(),
            }),
        }
    }
}

/// Everything that controls training and enhancement for either method.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceConfig {
    pub method: Method,
    pub frame_size: usize,
    pub frame_shift: usize,
    /// DWPT depth; ignored by STFT-NMF.
    pub level: usize,
    /// Wavelet family name; ignored by STFT-NMF.
    pub filter_name: String,
    /// STFT analysis window; ignored by DWPT-NMF.
    pub window: Window,
    pub feature_kind: FeatureKind,
    pub speech_rank: usize,
    pub noise_rank: usize,
    pub iters_train: usize,
    pub iters_encode: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Subband power normalization (DWPT-NMF).
    pub normalize: bool,
    pub gain_on_magnitude: GainApplication,
    /// Debug: skip noise tracking and apply unit gains.
    pub unit_gain: bool,
}

impl EnhanceConfig {
    pub fn for_method(method: Method) -> Self {
        let (frame_size, frame_shift) = match method {
            Method::StftNmf => (STFT_FRAME_SIZE, STFT_FRAME_SHIFT),
            Method::DwptNmf => (DWPT_FRAME_SIZE, DWPT_FRAME_SHIFT),
        };
        Self {
            method,
            frame_size,
            frame_shift,
            level: DWPT_LEVEL,
            filter_name: DEFAULT_FAMILY.to_string(),
            window: Window::Hamming,
            feature_kind: FeatureKind::Power,
            speech_rank: SPEECH_RANK,
            noise_rank: NOISE_RANK,
            iters_train: DEFAULT_TRAIN_ITERS,
            iters_encode: DEFAULT_ENCODE_ITERS,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            normalize: true,
            gain_on_magnitude: GainApplication::Direct,
            unit_gain: false,
        }
    }

    pub fn stft_defaults() -> Self {
        Self::for_method(Method::StftNmf)
    }

    pub fn dwpt_defaults() -> Self {
        Self::for_method(Method::DwptNmf)
    }

    pub fn frame_spec(&self) -> Result<FrameSpec> {
        FrameSpec::new(self.frame_size, self.frame_shift)
    }

    pub fn validate(&self) -> Result<()> {
        self.frame_spec()?;
        let positive = [
            ("speech_rank", self.speech_rank),
            ("noise_rank", self.noise_rank),
            ("iters_train", self.iters_train),
            ("iters_encode", self.iters_encode),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive")));
        }
        if self.method == Method::DwptNmf && self.level == 0 {
            return Err(Error::InvalidParameter("level must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn speech_params(&self) -> NmfParams {
        self.nmf_params(self.speech_rank, self.iters_train, 1)
    }

    pub fn noise_params(&self) -> NmfParams {
        self.nmf_params(self.noise_rank, self.iters_train, 2)
    }

    /// Rank is taken from the dictionary at encode time.
    pub fn encode_params(&self) -> NmfParams {
        self.nmf_params(self.speech_rank + self.noise_rank, self.iters_encode, 3)
    }

    fn nmf_params(&self, rank: usize, iters: usize, stream: u64) -> NmfParams {
        NmfParams::new(rank, iters)
            .with_epsilon(self.epsilon)
            .with_seed(derive_seed(self.seed, stream))
    }
}

/// Decorrelates per-purpose seeds drawn from one user seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
