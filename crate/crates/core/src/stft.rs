//! Short-time Fourier analysis and weighted overlap-add resynthesis.

use ndarray::Array2;
use realfft::num_complex::Complex64;
use realfft::RealFftPlanner;

use crate::config::Window;
use crate::error::{Error, Result};
use crate::framing::FrameSpec;

const SYNTHESIS_FLOOR: f64 = 1e-8;

/// Magnitude/phase spectrogram, `bins x frames`. Magnitude and phase are kept
/// separately so phase can be carried through enhancement untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    magnitude: Array2<f64>,
    phase: Array2<f64>,
    frame_spec: FrameSpec,
    window: Window,
}

impl ComplexSpectrogram {
    pub fn new(
        magnitude: Array2<f64>,
        phase: Array2<f64>,
        frame_spec: FrameSpec,
        window: Window,
    ) -> Result<Self> {
        if magnitude.dim() != phase.dim() {
            return Err(Error::DimensionMismatch(
                "magnitude and phase shapes differ".into(),
            ));
        }
        if magnitude.nrows() != frame_spec.frame_size() / 2 + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} bins for frame size {}",
                magnitude.nrows(),
                frame_spec.frame_size()
            )));
        }
        if magnitude.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::NonFinite("spectrogram magnitude"));
        }
        Ok(Self {
            magnitude,
            phase,
            frame_spec,
            window,
        })
    }

    pub fn bins(&self) -> usize {
        self.magnitude.nrows()
    }

    pub fn frames(&self) -> usize {
        self.magnitude.ncols()
    }

    pub fn magnitude(&self) -> &Array2<f64> {
        &self.magnitude
    }

    pub fn phase(&self) -> &Array2<f64> {
        &self.phase
    }

    pub fn frame_spec(&self) -> FrameSpec {
        self.frame_spec
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Same phase, new magnitude.
    pub fn with_magnitude(&self, magnitude: Array2<f64>) -> Result<Self> {
        Self::new(magnitude, self.phase.clone(), self.frame_spec, self.window)
    }
}

/// Windowed frames followed by a real-input DFT per frame.
pub fn stft(x: &[f64], spec: FrameSpec, window: Window) -> Result<ComplexSpectrogram> {
    let size = spec.frame_size();
    let frames = spec.frame_count(x.len());
    if frames == 0 {
        return Err(Error::SignalTooShort {
            len: x.len(),
            frame_size: size,
        });
    }
    let bins = size / 2 + 1;
    let win = window.coefficients(size);
    let fft = RealFftPlanner::<f64>::new().plan_fft_forward(size);
    let mut input = fft.make_input_vec();
    let mut output = fft.make_output_vec();
    let mut magnitude = Array2::zeros((bins, frames));
    let mut phase = Array2::zeros((bins, frames));
    for k in 0..frames {
        let start = k * spec.frame_shift();
        for (slot, (&s, &w)) in input
            .iter_mut()
            .zip(x[start..start + size].iter().zip(&win))
        {
            *slot = s * w;
        }
        fft.process(&mut input, &mut output)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for (b, c) in output.iter().enumerate() {
            magnitude[[b, k]] = c.norm();
            phase[[b, k]] = c.arg();
        }
    }
    ComplexSpectrogram::new(magnitude, phase, spec, window)
}

/// Inverse DFT per frame, then overlap-add weighted by the window and divided
/// by the summed squared window (floored at 1e-8). Output has `target_len` samples.
pub fn istft(f: &ComplexSpectrogram, target_len: usize) -> Result<Vec<f64>> {
    let spec = f.frame_spec();
    let size = spec.frame_size();
    let win = f.window().coefficients(size);
    let covered = spec.covered_len(f.frames());
    let mut acc = vec![0.0; covered.max(target_len)];
    let mut norm = vec![0.0; acc.len()];

    let ifft = RealFftPlanner::<f64>::new().plan_fft_inverse(size);
    let mut spectrum = ifft.make_input_vec();
    let mut frame = ifft.make_output_vec();
    let scale = 1.0 / size as f64;
    let last = spectrum.len() - 1;
    for k in 0..f.frames() {
        for (b, slot) in spectrum.iter_mut().enumerate() {
            *slot = Complex64::from_polar(f.magnitude[[b, k]], f.phase[[b, k]]);
        }
        // DC and (for even sizes) Nyquist are real for a real signal.
        spectrum[0].im = 0.0;
        if size.is_multiple_of(2) {
            spectrum[last].im = 0.0;
        }
        ifft.process(&mut spectrum, &mut frame)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let start = k * spec.frame_shift();
        for (i, (&y, &w)) in frame.iter().zip(&win).enumerate() {
            acc[start + i] += y * scale * w;
            norm[start + i] += w * w;
        }
    }
    let mut out: Vec<f64> = acc
        .iter()
        .zip(&norm)
        .map(|(&a, &n)| a / n.max(SYNTHESIS_FLOOR))
        .collect();
    out.truncate(target_len);
    Ok(out)
}
