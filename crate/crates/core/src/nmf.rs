//! Euclidean-distance NMF with multiplicative updates.
//!
//! `factorize` learns both factors (offline dictionary training); `encode`
//! keeps the dictionary fixed and learns only the activations (online phase).
//! Every iteration updates `H` first, then `W`, and records the squared
//! distance `d = sum_ij (V - WH)_ij^2`.

use ndarray::{Array2, ArrayView2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::NonnegMatrix;

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_TRAIN_ITERS: usize = 200;
pub const DEFAULT_ENCODE_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmfParams {
    pub rank: usize,
    pub max_iters: usize,
    /// Floor for denominators and for every updated entry.
    pub epsilon: f64,
    pub seed: u64,
}

impl NmfParams {
    pub fn new(rank: usize, max_iters: usize) -> Self {
        Self {
            rank,
            max_iters,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidParameter("NMF rank must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "NMF iteration count must be >= 1".into(),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(
                "NMF epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfResult {
    pub w: NonnegMatrix,
    pub h: NonnegMatrix,
    /// `d` after each full iteration.
    pub objective_trace: Vec<f64>,
}

impl NmfResult {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Squared Euclidean distance between `v` and `w * h`.
pub fn objective(v: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>) -> f64 {
    let wh = w.dot(&h);
    Zip::from(&v)
        .and(&wh)
        .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
}

fn random_positive(rows: usize, cols: usize, epsilon: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let low = epsilon.min(0.5);
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(low..1.0))
}

/// `x <- max(x .* num ./ max(den, eps), eps)`
fn multiplicative_step(x: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>, epsilon: f64) {
    Zip::from(x).and(num).and(den).for_each(|x, &n, &d| {
        *x = (*x * n / d.max(epsilon)).max(epsilon);
    });
}

fn update_h(v: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>, h: &mut Array2<f64>, epsilon: f64) {
    let num = w.t().dot(&v);
    let den = w.t().dot(&w).dot(h);
    multiplicative_step(h, &num, &den, epsilon);
}

/// Updates `w` and returns `d(v, w h)` for the updated pair.
fn update_w(
    v: ArrayView2<'_, f64>,
    v_norm_sq: f64,
    w: &mut Array2<f64>,
    h: ArrayView2<'_, f64>,
    epsilon: f64,
) -> f64 {
    let vht = v.dot(&h.t());
    let hht = h.dot(&h.t());
    let den = w.dot(&hht);
    multiplicative_step(w, &vht, &den, epsilon);
    // |V - WH|^2 = |V|^2 - 2<W, VH'> + <W'W, HH'>, reusing VH' and HH'.
    let cross = Zip::from(&*w)
        .and(&vht)
        .fold(0.0, |acc, &a, &b| acc + a * b);
    let wtw = w.t().dot(&*w);
    let quad = Zip::from(&wtw)
        .and(&hht)
        .fold(0.0, |acc, &a, &b| acc + a * b);
    (v_norm_sq - 2.0 * cross + quad).max(0.0)
}

/// Full factorization `v ~ W H` with `W` of width `params.rank`.
pub fn factorize(v: &NonnegMatrix, params: &NmfParams) -> Result<NmfResult> {
    params.validate()?;
    let (m, n) = (v.rows(), v.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = random_positive(m, params.rank, params.epsilon, &mut rng);
    let mut h = random_positive(params.rank, n, params.epsilon, &mut rng);
    let vv = v.view();

    let v_norm_sq = v.frobenius_sq();
    let mut trace = Vec::with_capacity(params.max_iters);
    for _ in 0..params.max_iters {
        update_h(vv, w.view(), &mut h, params.epsilon);
        trace.push(update_w(vv, v_norm_sq, &mut w, h.view(), params.epsilon));
    }
    if trace.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("NMF objective"));
    }
    Ok(NmfResult {
        w: NonnegMatrix::from_trusted(w),
        h: NonnegMatrix::from_trusted(h),
        objective_trace: trace,
    })
}

/// Activations of `v` against the fixed dictionary `w_fixed`.
pub fn encode(
    v: &NonnegMatrix,
    w_fixed: &NonnegMatrix,
    params: &NmfParams,
) -> Result<NonnegMatrix> {
    encode_with_trace(v, w_fixed, params).map(|(h, _)| h)
}

/// Like [`encode`], also returning `d` after each iteration.
pub fn encode_with_trace(
    v: &NonnegMatrix,
    w_fixed: &NonnegMatrix,
    params: &NmfParams,
) -> Result<(NonnegMatrix, Vec<f64>)> {
    if v.rows() != w_fixed.rows() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} rows, dictionary has {}",
            v.rows(),
            w_fixed.rows()
        )));
    }
    let params = NmfParams {
        rank: w_fixed.cols(),
        ..*params
    };
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut h = random_positive(params.rank, v.cols(), params.epsilon, &mut rng);
    let (vv, wv) = (v.view(), w_fixed.view());

    // W'W is constant across iterations.
    let wtw = wv.t().dot(&wv);
    let wtv = wv.t().dot(&vv);
    let v_norm_sq = v.frobenius_sq();
    let mut trace = Vec::with_capacity(params.max_iters);
    for _ in 0..params.max_iters {
        let den = wtw.dot(&h);
        multiplicative_step(&mut h, &wtv, &den, params.epsilon);
        // |V - WH|^2 = |V|^2 - 2<H, W'V> + <W'W, HH'>
        let cross = Zip::from(&h).and(&wtv).fold(0.0, |acc, &a, &b| acc + a * b);
        let hht = h.dot(&h.t());
        let quad = Zip::from(&wtw)
            .and(&hht)
            .fold(0.0, |acc, &a, &b| acc + a * b);
        trace.push((v_norm_sq - 2.0 * cross + quad).max(0.0));
    }
    if trace.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("NMF objective"));
    }
    Ok((NonnegMatrix::from_trusted(h), trace))
}

/// Splits `[W_s W_n] [H_s; H_n]` into its speech part `W_s H_s` and noise part `W_n H_n`.
pub fn split_reconstruction(
    w_s: &NonnegMatrix,
    w_n: &NonnegMatrix,
    h: &NonnegMatrix,
) -> Result<(NonnegMatrix, NonnegMatrix)> {
    let (rs, rn) = (w_s.cols(), w_n.cols());
    if h.rows() != rs + rn {
        return Err(Error::DimensionMismatch(format!(
            "encoding has {} rows, dictionaries have {rs} + {rn} columns",
            h.rows()
        )));
    }
    if w_s.rows() != w_n.rows() {
        return Err(Error::DimensionMismatch(format!(
            "speech dictionary has {} rows, noise dictionary {}",
            w_s.rows(),
            w_n.rows()
        )));
    }
    let hv = h.view();
    let h_s = hv.slice(ndarray::s![..rs, ..]);
    let h_n = hv.slice(ndarray::s![rs.., ..]);
    Ok((
        NonnegMatrix::from_trusted(w_s.view().dot(&h_s)),
        NonnegMatrix::from_trusted(w_n.view().dot(&h_n)),
    ))
}
