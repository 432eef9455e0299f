use thiserror::Error;

/// Errors produced by the enhancement library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signal too short for frame size (length {len}, frame size {frame_size})")]
    SignalTooShort { len: usize, frame_size: usize },

    #[error(
        "invalid frame spec: size {frame_size}, shift {frame_shift} (need 1 <= shift <= size)"
    )]
    InvalidFrameSpec {
        frame_size: usize,
        frame_shift: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative entry {value} at ({row}, {col}) in nonnegative matrix")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("length must be even at every level (got {0})")]
    OddLength(usize),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("degenerate clean set: every clean subband has zero energy")]
    DegenerateCleanSet,

    #[error("utterance {utterance} too short for one frame in subband {band} (subband length {len}, frame size {frame_size})")]
    BandTooShort {
        utterance: usize,
        band: usize,
        len: usize,
        frame_size: usize,
    },

    #[error("cannot set SNR with silent input")]
    SilentInput,

    #[error("all segments silent")]
    AllSegmentsSilent,

    #[error("zero-energy reference")]
    ZeroReference,

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("wav: {0}")]
    Wav(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
