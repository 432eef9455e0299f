//! Full-tree discrete wavelet packet transform with periodic boundaries.
//!
//! Each tree node is split by a two-channel orthonormal filter bank and
//! decimated by 2. Both children of every node are split again, so a level-`J`
//! transform yields `2^J` equal-length subbands. Periodic extension makes the
//! round trip exact for any even length, including lengths shorter than the
//! filter.

use realfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Families shipped with the crate, in the order tests iterate them.
pub const SHIPPED_FAMILIES: [&str; 3] = ["haar", "db4", "db8"];

/// Family used when none is requested.
pub const DEFAULT_FAMILY: &str = "db8";

const MAX_LEVEL: usize = 24;

/// Analysis/synthesis filter quadruple of a two-channel filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilters {
    name: String,
    analysis_low: Vec<f64>,
    analysis_high: Vec<f64>,
    synthesis_low: Vec<f64>,
    synthesis_high: Vec<f64>,
}

impl WaveletFilters {
    pub fn new(
        name: impl Into<String>,
        analysis_low: Vec<f64>,
        analysis_high: Vec<f64>,
        synthesis_low: Vec<f64>,
        synthesis_high: Vec<f64>,
    ) -> Result<Self> {
        let taps = analysis_low.len();
        if taps == 0 || !taps.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "wavelet filters need an even, nonzero tap count (got {taps})"
            )));
        }
        if [&analysis_high, &synthesis_low, &synthesis_high]
            .iter()
            .any(|f| f.len() != taps)
        {
            return Err(Error::InvalidParameter(
                "all four wavelet filters must have the same tap count".into(),
            ));
        }
        let all = analysis_low
            .iter()
            .chain(&analysis_high)
            .chain(&synthesis_low)
            .chain(&synthesis_high);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("wavelet filter taps"));
        }
        Ok(Self {
            name: name.into(),
            analysis_low,
            analysis_high,
            synthesis_low,
            synthesis_high,
        })
    }

    /// Orthonormal bank from its scaling (low-pass) filter: the high-pass is the
    /// alternating flip `g[n] = (-1)^n h[L-1-n]`, and synthesis reuses the
    /// analysis taps.
    pub fn orthonormal(name: impl Into<String>, lowpass: Vec<f64>) -> Result<Self> {
        let taps = lowpass.len();
        let highpass: Vec<f64> = (0..taps)
            .map(|n| {
                let v = lowpass[taps - 1 - n];
                if n % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        Self::new(name, lowpass.clone(), highpass.clone(), lowpass, highpass)
    }

    pub fn haar() -> Self {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        Self::orthonormal("haar", vec![c, c]).expect("haar taps are valid")
    }

    /// Daubechies filter with `moments` vanishing moments (`2 * moments` taps).
    pub fn daubechies(moments: usize) -> Result<Self> {
        if moments == 0 || moments > 12 {
            return Err(Error::InvalidParameter(format!(
                "daubechies order must be in 1..=12 (got {moments})"
            )));
        }
        let name = if moments == 1 {
            "haar".to_string()
        } else {
            format!("db{moments}")
        };
        Self::orthonormal(name, daubechies_lowpass(moments))
    }

    /// Looks up `haar` or `dbN`.
    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        if lower == "haar" || lower == "db1" {
            return Ok(Self::haar());
        }
        lower
            .strip_prefix("db")
            .and_then(|n| n.parse::<usize>().ok())
            .map(Self::daubechies)
            .unwrap_or_else(|| {
                Err(Error::Unknown {
                    kind: "wavelet family",
                    name: name.to_string(),
                })
            })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn taps(&self) -> usize {
        self.analysis_low.len()
    }

    pub fn analysis_low(&self) -> &[f64] {
        &self.analysis_low
    }

    pub fn analysis_high(&self) -> &[f64] {
        &self.analysis_high
    }

    pub fn synthesis_low(&self) -> &[f64] {
        &self.synthesis_low
    }

    pub fn synthesis_high(&self) -> &[f64] {
        &self.synthesis_high
    }
}

/// Minimum-phase Daubechies scaling filter by spectral factorization of the
/// half-band polynomial. Normalized to `sum(h) = sqrt(2)`.
fn daubechies_lowpass(moments: usize) -> Vec<f64> {
    // P(y) = sum_k C(N-1+k, k) y^k, with y = sin^2(w/2).
    let degree = moments - 1;
    let mut poly = Vec::with_capacity(moments);
    let mut binom = 1.0f64;
    for k in 0..moments {
        if k > 0 {
            binom = binom * (degree + k) as f64 / k as f64;
        }
        poly.push(binom);
    }

    // Start from the zeros at z = -1, then one zero per root of P inside the unit circle.
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    let mut multiply_root = |root: Complex64| {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * root;
        }
        coeffs = next;
    };
    for _ in 0..moments {
        multiply_root(Complex64::new(-1.0, 0.0));
    }
    for y in polynomial_roots(&poly) {
        // z + 1/z = 2 - 4y
        let b = Complex64::new(2.0, 0.0) - y * 4.0;
        let disc = (b * b - 4.0).sqrt();
        let z1 = (b + disc) / 2.0;
        let z2 = (b - disc) / 2.0;
        multiply_root(if z1.norm() < z2.norm() { z1 } else { z2 });
    }

    let mut h: Vec<f64> = coeffs.iter().map(|c| c.re).collect();
    let scale = std::f64::consts::SQRT_2 / h.iter().sum::<f64>();
    h.iter_mut().for_each(|v| *v *= scale);
    // Highest-energy taps first.
    if h[0].abs() < h[h.len() - 1].abs() {
        h.reverse();
    }
    h
}

/// Roots of `sum_k c[k] x^k` by Durand-Kerner iteration followed by Newton polishing.
fn polynomial_roots(c: &[f64]) -> Vec<Complex64> {
    let degree = c.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = c[degree];
    let monic: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v / lead, 0.0)).collect();
    let eval = |x: Complex64| {
        monic
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &k| acc * x + k)
    };
    let eval_deriv = |x: Complex64| {
        monic
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, &v)| {
                acc * x + v * k as f64
            })
    };

    let radius = 1.0 + monic[..degree].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..5 {
            let d = eval_deriv(*r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= eval(*r) / d;
        }
    }
    roots
}

/// The `2^level` subbands of a packet decomposition, in natural tree order
/// (low-pass path first at every split).
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    level: usize,
    subbands: Vec<Vec<f64>>,
    original_length: usize,
}

impl SubbandSet {
    pub fn new(subbands: Vec<Vec<f64>>, original_length: usize) -> Result<Self> {
        let count = subbands.len();
        if count < 2 || !count.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "subband count must be a power of two >= 2 (got {count})"
            )));
        }
        let len = subbands[0].len();
        if subbands.iter().any(|b| b.len() != len) {
            return Err(Error::LengthMismatch(
                "subbands have unequal lengths".into(),
            ));
        }
        if original_length > len * count {
            return Err(Error::LengthMismatch(format!(
                "original length {original_length} exceeds the {} samples held by the subbands",
                len * count
            )));
        }
        Ok(Self {
            level: count.trailing_zeros() as usize,
            subbands,
            original_length,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.subbands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subbands.is_empty()
    }

    /// Samples per subband.
    pub fn band_len(&self) -> usize {
        self.subbands[0].len()
    }

    pub fn original_length(&self) -> usize {
        self.original_length
    }

    pub fn band(&self, b: usize) -> &[f64] {
        &self.subbands[b]
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.subbands
    }

    pub fn into_bands(self) -> Vec<Vec<f64>> {
        self.subbands
    }

    /// Replaces the band contents, keeping level and original length.
    pub fn with_bands(&self, subbands: Vec<Vec<f64>>) -> Result<Self> {
        if subbands.len() != self.subbands.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} subbands, got {}",
                self.subbands.len(),
                subbands.len()
            )));
        }
        Self::new(subbands, self.original_length)
    }

    /// Sum of squared samples across every band.
    pub fn energy(&self) -> f64 {
        self.subbands.iter().flatten().map(|v| v * v).sum()
    }
}

fn periodic_extension(x: &[f64], extra: usize) -> Vec<f64> {
    let n = x.len();
    (0..n + extra).map(|i| x[i % n]).collect()
}

/// One analysis stage: periodic correlation with each analysis filter,
/// keeping every second output.
pub fn analysis_split(x: &[f64], filters: &WaveletFilters) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::OddLength(n));
    }
    let taps = filters.taps();
    let ext = periodic_extension(x, taps);
    let lo = filters.analysis_low();
    let hi = filters.analysis_high();
    let half = n / 2;
    let mut low = vec![0.0; half];
    let mut high = vec![0.0; half];
    for k in 0..half {
        let window = &ext[2 * k..2 * k + taps];
        let mut a = 0.0;
        let mut d = 0.0;
        for ((&w, &l), &h) in window.iter().zip(lo).zip(hi) {
            a += l * w;
            d += h * w;
        }
        low[k] = a;
        high[k] = d;
    }
    Ok((low, high))
}

/// One synthesis stage: upsample by 2, filter, and fold the periodic tail back.
pub fn synthesis_merge(low: &[f64], high: &[f64], filters: &WaveletFilters) -> Result<Vec<f64>> {
    if low.len() != high.len() {
        return Err(Error::LengthMismatch(format!(
            "low band has {} samples, high band {}",
            low.len(),
            high.len()
        )));
    }
    let n = 2 * low.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let taps = filters.taps();
    let sl = filters.synthesis_low();
    let sh = filters.synthesis_high();
    let mut ext = vec![0.0; n + taps];
    for (k, (&a, &d)) in low.iter().zip(high).enumerate() {
        let out = &mut ext[2 * k..2 * k + taps];
        for ((o, &l), &h) in out.iter_mut().zip(sl).zip(sh) {
            *o += l * a + h * d;
        }
    }
    let mut out = vec![0.0; n];
    for (i, v) in ext.into_iter().enumerate() {
        out[i % n] += v;
    }
    Ok(out)
}

/// Level-`level` packet decomposition of `f`. The signal is zero-padded at the
/// end to a multiple of `2^level`; the pre-padding length is recorded.
pub fn dwpt(f: &Signal, level: usize, filters: &WaveletFilters) -> Result<SubbandSet> {
    dwpt_samples(f.samples(), level, filters)
}

pub fn dwpt_samples(x: &[f64], level: usize, filters: &WaveletFilters) -> Result<SubbandSet> {
    if level == 0 || level > MAX_LEVEL {
        return Err(Error::InvalidParameter(format!(
            "DWPT level must be in 1..={MAX_LEVEL} (got {level})"
        )));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("cannot decompose an empty signal".into()));
    }
    let block = 1usize << level;
    let padded_len = x.len().div_ceil(block) * block;
    let mut padded = x.to_vec();
    padded.resize(padded_len, 0.0);

    let mut nodes = vec![padded];
    for _ in 0..level {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for node in &nodes {
            let (low, high) = analysis_split(node, filters)?;
            next.push(low);
            next.push(high);
        }
        nodes = next;
    }
    SubbandSet::new(nodes, x.len())
}

/// Inverse packet transform; output is truncated to the recorded original length.
pub fn idwpt(s: &SubbandSet, filters: &WaveletFilters) -> Result<Vec<f64>> {
    let mut nodes: Vec<Vec<f64>> = s.bands().to_vec();
    while nodes.len() > 1 {
        nodes = nodes
            .chunks(2)
            .map(|pair| synthesis_merge(&pair[0], &pair[1], filters))
            .collect::<Result<_>>()?;
    }
    let mut out = nodes.pop().unwrap_or_default();
    out.truncate(s.original_length());
    Ok(out)
}
