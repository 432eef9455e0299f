//! Speech enhancement by supervised NMF noise tracking, either on STFT
//! spectrograms or directly on wavelet-packet subband signals.
//!
//! The crate is organized bottom-up:
//!
//! - [`signal`], [`matrix`], [`framing`]: shared numeric primitives.
//! - [`wpt`]: full-tree DWPT/IDWPT with periodic boundaries.
//! - [`nmf`]: multiplicative-update NMF (training and fixed-basis encoding).
//! - [`stft`], [`stft_nmf`]: the spectrogram baseline.
//! - [`dwpt_nmf`]: the subband pipeline.
//! - [`mixing`], [`metrics`]: experiment support.
//! - [`audio_io`], [`model_io`], [`cli`]: file formats and the batch tool.

pub mod audio_io;
pub mod cli;
pub mod config;
pub mod dwpt_nmf;
pub mod error;
pub mod framing;
pub mod matrix;
pub mod metrics;
pub mod mixing;
pub mod model_io;
pub mod nmf;
pub mod signal;
pub mod stft;
pub mod stft_nmf;
pub mod wpt;

pub use config::{EnhanceConfig, FeatureKind, GainApplication, Method, Window};
pub use dwpt_nmf::{enhance_dwpt, train_dwpt_model, GainSequence, SubbandBasisModel};
pub use error::{Error, Result};
pub use framing::FrameSpec;
pub use matrix::NonnegMatrix;
pub use metrics::MetricReport;
pub use model_io::Model;
pub use nmf::{NmfParams, NmfResult};
pub use signal::Signal;
pub use stft_nmf::{enhance_stft, train_stft_model, StftBasisModel};
pub use wpt::{SubbandSet, WaveletFilters};
