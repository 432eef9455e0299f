//! Objective quality measures: MSE, segmental SNR and a speech distortion index.

use crate::error::{Error, Result};
use crate::signal::Signal;

pub const SSNR_SEGMENT_MS: f64 = 32.0;
pub const SSNR_FLOOR_DB: f64 = -10.0;
pub const SSNR_CEILING_DB: f64 = 35.0;
const SILENT_SEGMENT_ENERGY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    pub ssnr_db: f64,
    /// Residual-to-reference energy ratio.
    pub sdi: f64,
}

impl MetricReport {
    pub fn evaluate(reference: &Signal, test: &Signal) -> Result<Self> {
        Ok(Self {
            mse: mse(reference, test)?,
            ssnr_db: ssnr_default(reference, test)?,
            sdi: sdi(reference, test)?,
        })
    }

    /// `key=value` lines.
    pub fn to_key_value(&self) -> String {
        format!(
            "mse={}\nssnr_db={}\nsdi={}\n",
            self.mse, self.ssnr_db, self.sdi
        )
    }

    pub const CSV_HEADER: &'static str = "file,mse,ssnr_db,sdi";

    pub fn csv_row(&self, file: &str) -> String {
        format!("{file},{},{},{}", self.mse, self.ssnr_db, self.sdi)
    }
}

fn check_pair(reference: &Signal, test: &Signal) -> Result<()> {
    if reference.len() != test.len() {
        return Err(Error::LengthMismatch(format!(
            "reference has {} samples, test {}",
            reference.len(),
            test.len()
        )));
    }
    if reference.sample_rate() != test.sample_rate() {
        return Err(Error::ModelMismatch(format!(
            "reference at {} Hz, test at {} Hz",
            reference.sample_rate(),
            test.sample_rate()
        )));
    }
    Ok(())
}

pub fn mse(reference: &Signal, test: &Signal) -> Result<f64> {
    check_pair(reference, test)?;
    if reference.is_empty() {
        return Err(Error::EmptyInput("cannot compare empty signals".into()));
    }
    let sum: f64 = reference
        .samples()
        .iter()
        .zip(test.samples())
        .map(|(r, t)| (r - t) * (r - t))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// Segmental SNR with 32 ms segments clamped to [-10, 35] dB.
pub fn ssnr_default(reference: &Signal, test: &Signal) -> Result<f64> {
    ssnr(
        reference,
        test,
        SSNR_SEGMENT_MS,
        (SSNR_FLOOR_DB, SSNR_CEILING_DB),
    )
}

/// Mean over non-silent, non-overlapping segments of the clamped per-segment SNR.
/// A trailing partial segment counts as a segment.
pub fn ssnr(reference: &Signal, test: &Signal, seg_ms: f64, clamp_db: (f64, f64)) -> Result<f64> {
    check_pair(reference, test)?;
    if seg_ms.is_nan() || seg_ms <= 0.0 {
        return Err(Error::InvalidParameter(
            "segment length must be positive".into(),
        ));
    }
    let seg_len = ((seg_ms * reference.sample_rate() as f64 / 1000.0).round() as usize).max(1);
    let (lo, hi) = clamp_db;
    let mut total = 0.0;
    let mut count = 0usize;
    for (r, t) in reference
        .samples()
        .chunks(seg_len)
        .zip(test.samples().chunks(seg_len))
    {
        let signal: f64 = r.iter().map(|v| v * v).sum();
        if signal <= SILENT_SEGMENT_ENERGY {
            continue;
        }
        let error: f64 = r.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
        let db = if error == 0.0 {
            hi
        } else {
            10.0 * (signal / error).log10()
        };
        total += db.clamp(lo, hi);
        count += 1;
    }
    if count == 0 {
        return Err(Error::AllSegmentsSilent);
    }
    Ok(total / count as f64)
}

/// `sum (ref - test)^2 / sum ref^2`
pub fn sdi(reference: &Signal, test: &Signal) -> Result<f64> {
    check_pair(reference, test)?;
    let energy: f64 = reference.samples().iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::ZeroReference);
    }
    let residual: f64 = reference
        .samples()
        .iter()
        .zip(test.samples())
        .map(|(r, t)| (r - t) * (r - t))
        .sum();
    Ok(residual / energy)
}
