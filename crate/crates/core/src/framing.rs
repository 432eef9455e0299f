//! Rectangular framing and averaging overlap-add.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::matrix::NonnegMatrix;

/// Frame length and hop, both in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    frame_size: usize,
    frame_shift: usize,
}

impl FrameSpec {
    pub fn new(frame_size: usize, frame_shift: usize) -> Result<Self> {
        if frame_shift == 0 || frame_shift > frame_size {
            return Err(Error::InvalidFrameSpec {
                frame_size,
                frame_shift,
            });
        }
        Ok(Self {
            frame_size,
            frame_shift,
        })
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size
    }

    pub fn frame_shift(&self) -> usize {
        self.frame_shift
    }

    /// Number of complete frames in a signal of `len` samples (zero if shorter than one frame).
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_size {
            0
        } else {
            (len - self.frame_size) / self.frame_shift + 1
        }
    }

    /// Number of leading samples touched by `frames` consecutive frames.
    pub fn covered_len(&self, frames: usize) -> usize {
        match frames {
            0 => 0,
            n => (n - 1) * self.frame_shift + self.frame_size,
        }
    }
}

/// Cuts `x` into overlapping frames without tapering. Column `k` holds
/// `x[k*shift .. k*shift + size]`; a trailing partial frame is dropped.
pub fn frame_signal(x: &[f64], spec: FrameSpec) -> Result<Array2<f64>> {
    let size = spec.frame_size();
    let count = spec.frame_count(x.len());
    if count == 0 {
        return Err(Error::SignalTooShort {
            len: x.len(),
            frame_size: size,
        });
    }
    let shift = spec.frame_shift();
    Ok(Array2::from_shape_fn((size, count), |(i, k)| {
        x[k * shift + i]
    }))
}

/// Inverse of [`frame_signal`]: sums every frame entry into its sample position
/// and divides by the number of frames covering that sample. Indices past the
/// last frame are zero.
pub fn overlap_add(
    frames: ArrayView2<'_, f64>,
    spec: FrameSpec,
    target_len: usize,
) -> Result<Vec<f64>> {
    let (size, count) = frames.dim();
    if count == 0 || size == 0 {
        return Err(Error::EmptyInput("frame matrix has no frames".into()));
    }
    if size != spec.frame_size() {
        return Err(Error::DimensionMismatch(format!(
            "frame matrix has {size} rows, frame size is {}",
            spec.frame_size()
        )));
    }
    let covered = spec.covered_len(count);
    if target_len < covered {
        return Err(Error::LengthMismatch(format!(
            "target length {target_len} shorter than the {covered} samples covered by {count} frames"
        )));
    }
    let shift = spec.frame_shift();
    let mut sum = vec![0.0; target_len];
    let mut hits = vec![0u32; covered];
    for (k, column) in frames.columns().into_iter().enumerate() {
        let start = k * shift;
        for (i, &v) in column.iter().enumerate() {
            sum[start + i] += v;
            hits[start + i] += 1;
        }
    }
    for (s, &n) in sum.iter_mut().zip(&hits) {
        *s /= f64::from(n);
    }
    Ok(sum)
}

/// Entrywise square, producing the nonnegative feature matrix fed to NMF.
pub fn square_elementwise(frames: ArrayView2<'_, f64>) -> Result<NonnegMatrix> {
    if frames.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("frame matrix"));
    }
    Ok(NonnegMatrix::from_trusted(frames.mapv(|v| v * v)))
}
