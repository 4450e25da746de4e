//! Cyclic local harmonic descriptor over temporal tokens.
//!
//! Feature maps are pooled spatially into one token per time step. For each
//! token index `t` (1-based), a length-`W` window is gathered with cyclic
//! wraparound — `W` may exceed the sequence length, in which case tokens
//! repeat — multiplied by a symmetric Hann window, and sent through a
//! per-channel length-`W` DFT. The channel-averaged squared magnitudes give a
//! local energy spectrum over `K = floor(W/2) + 1` bins. Within the
//! physiological frequency band the dominant bin `k1` is located (smallest
//! index on ties), its second harmonic is `k2 = min(2*k1, K-1)`, and the
//! descriptor value is the energy ratio `E(k2) / (E(k1) + eps_h)`.
//!
//! The ratio is a quotient of quadratically homogeneous quantities, so
//! positive rescaling of the tokens moves it only through the `eps_h`
//! regularizer — negligibly whenever the dominant energy is well above
//! `eps_h`. Rotating the token sequence rotates the descriptor sequence
//! bit-exactly, because every window sees the same values in the same order.

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::parallel;

#[derive(Debug, thiserror::Error)]
pub enum HarmonicError {
    #[error("need dim, t', height, width >= 1, got {dim}x{t_prime}x{height}x{width}")]
    BadDims {
        dim: usize,
        t_prime: usize,
        height: usize,
        width: usize,
    },
    #[error("data has {found} values, expected {expected}")]
    DataLength { expected: usize, found: usize },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("token rate {rate_hz} Hz must be positive and finite")]
    BadRate { rate_hz: f64 },
    #[error("token index {t} outside 1..={t_prime}")]
    TokenIndexOutOfRange { t: usize, t_prime: usize },
    #[error("hann window needs length >= 2, got {window_len}")]
    WindowTooShort { window_len: usize },
    #[error("descriptor window needs length >= 4, got {window_len}")]
    BadWindow { window_len: usize },
    #[error("band ({f_min}, {f_max}) Hz needs 0 <= f_min < f_max, both finite")]
    BadBand { f_min: f64, f_max: f64 },
    #[error(
        "band ({f_min}, {f_max}) Hz holds no bin at resolution {rate_hz}/{window_len} Hz \
         (window or rate too small)"
    )]
    BandUnresolvable {
        rate_hz: f64,
        window_len: usize,
        f_min: f64,
        f_max: f64,
    },
    #[error("bin set is empty")]
    EmptyBinSet,
    #[error("bin {bin} outside the {bins} available energy bins")]
    BinOutOfRange { bin: usize, bins: usize },
    #[error("eps_h {eps_h} must be positive and finite")]
    BadEpsilon { eps_h: f64 },
}

/// Spatio-temporal feature maps: `dim` channels by `t_prime` time steps of
/// `height x width` planes, stored row-major in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    dim: usize,
    t_prime: usize,
    height: usize,
    width: usize,
    token_rate_hz: f64,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(
        dim: usize,
        t_prime: usize,
        height: usize,
        width: usize,
        token_rate_hz: f64,
        data: Vec<f64>,
    ) -> Result<Self, HarmonicError> {
        if dim == 0 || t_prime == 0 || height == 0 || width == 0 {
            return Err(HarmonicError::BadDims {
                dim,
                t_prime,
                height,
                width,
            });
        }
        let expected = dim * t_prime * height * width;
        if data.len() != expected {
            return Err(HarmonicError::DataLength {
                expected,
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(HarmonicError::NonFinite { index });
        }
        if !(token_rate_hz.is_finite() && token_rate_hz > 0.0) {
            return Err(HarmonicError::BadRate {
                rate_hz: token_rate_hz,
            });
        }
        Ok(Self {
            dim,
            t_prime,
            height,
            width,
            token_rate_hz,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_prime(&self) -> usize {
        self.t_prime
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn token_rate_hz(&self) -> f64 {
        self.token_rate_hz
    }

    /// Spatial plane of channel `d` at time step `t0` (0-based).
    pub fn plane(&self, d: usize, t0: usize) -> &[f64] {
        let plane = self.height * self.width;
        let start = (d * self.t_prime + t0) * plane;
        &self.data[start..start + plane]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// `t_prime` tokens of dimension `dim`, stored row-major `[t][d]`, sampled at
/// `token_rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    t_prime: usize,
    dim: usize,
    token_rate_hz: f64,
    data: Vec<f64>,
}

impl TokenSequence {
    pub fn new(
        t_prime: usize,
        dim: usize,
        token_rate_hz: f64,
        data: Vec<f64>,
    ) -> Result<Self, HarmonicError> {
        if t_prime == 0 || dim == 0 {
            return Err(HarmonicError::BadDims {
                dim,
                t_prime,
                height: 1,
                width: 1,
            });
        }
        if data.len() != t_prime * dim {
            return Err(HarmonicError::DataLength {
                expected: t_prime * dim,
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(HarmonicError::NonFinite { index });
        }
        if !(token_rate_hz.is_finite() && token_rate_hz > 0.0) {
            return Err(HarmonicError::BadRate {
                rate_hz: token_rate_hz,
            });
        }
        Ok(Self {
            t_prime,
            dim,
            token_rate_hz,
            data,
        })
    }

    pub fn t_prime(&self) -> usize {
        self.t_prime
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn token_rate_hz(&self) -> f64 {
        self.token_rate_hz
    }

    /// Token at 0-based time step `t0`.
    pub fn token(&self, t0: usize) -> &[f64] {
        &self.data[t0 * self.dim..(t0 + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Same sequence with every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self, HarmonicError> {
        Self::new(
            self.t_prime,
            self.dim,
            self.token_rate_hz,
            self.data.iter().map(|v| v * c).collect(),
        )
    }

    /// Same sequence rotated left by `shift` steps (token `shift` becomes
    /// token 0).
    pub fn rotated(&self, shift: usize) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for t0 in 0..self.t_prime {
            data.extend_from_slice(self.token((t0 + shift) % self.t_prime));
        }
        Self {
            t_prime: self.t_prime,
            dim: self.dim,
            token_rate_hz: self.token_rate_hz,
            data,
        }
    }
}

/// Per-token harmonic ratios, aligned with the token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSequence {
    pub ratios: Vec<f64>,
}

/// Descriptor parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicConfig {
    /// Window length `W` in tokens; at least 4.
    pub window_len: usize,
    /// Physiological band `(f_min, f_max)` in Hz, endpoints inclusive.
    pub band_hz: (f64, f64),
    /// Denominator regularizer of the energy ratio.
    pub eps_h: f64,
}

impl Default for HarmonicConfig {
    fn default() -> Self {
        Self {
            window_len: 64,
            band_hz: (0.7, 4.0),
            eps_h: 1e-6,
        }
    }
}

impl HarmonicConfig {
    pub fn validate(&self) -> Result<(), HarmonicError> {
        if self.window_len < 4 {
            return Err(HarmonicError::BadWindow {
                window_len: self.window_len,
            });
        }
        let (f_min, f_max) = self.band_hz;
        if !(f_min.is_finite() && f_max.is_finite() && 0.0 <= f_min && f_min < f_max) {
            return Err(HarmonicError::BadBand { f_min, f_max });
        }
        if !(self.eps_h.is_finite() && self.eps_h > 0.0) {
            return Err(HarmonicError::BadEpsilon { eps_h: self.eps_h });
        }
        Ok(())
    }
}

/// Spatially averages each channel plane into one token per time step.
pub fn pool_tokens(features: &FeatureMap) -> TokenSequence {
    let pixels = (features.height * features.width) as f64;
    let mut data = Vec::with_capacity(features.t_prime * features.dim);
    for t0 in 0..features.t_prime {
        for d in 0..features.dim {
            data.push(features.plane(d, t0).iter().sum::<f64>() / pixels);
        }
    }
    TokenSequence {
        t_prime: features.t_prime,
        dim: features.dim,
        token_rate_hz: features.token_rate_hz,
        data,
    }
}

/// 1-based cyclic window indices starting at token `t`:
/// `pi_t(m) = ((t + m - 1) mod t_prime) + 1` for `m = 0..window_len-1`.
pub fn cyclic_indices(
    t: usize,
    window_len: usize,
    t_prime: usize,
) -> Result<Vec<usize>, HarmonicError> {
    if t == 0 || t > t_prime {
        return Err(HarmonicError::TokenIndexOutOfRange { t, t_prime });
    }
    Ok((0..window_len).map(|m| (t + m - 1) % t_prime + 1).collect())
}

/// Symmetric Hann weights `w(m) = 0.5 - 0.5*cos(2*pi*m/(len-1))`; the two
/// endpoints are zero.
pub fn hann(window_len: usize) -> Result<Vec<f64>, HarmonicError> {
    if window_len < 2 {
        return Err(HarmonicError::WindowTooShort { window_len });
    }
    let denom = (window_len - 1) as f64;
    Ok((0..window_len)
        .map(|m| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * m as f64 / denom).cos())
        .collect())
}

/// Number of non-redundant DFT bins of a length-`window_len` real signal.
pub fn bin_count(window_len: usize) -> usize {
    window_len / 2 + 1
}

/// Windowed per-channel DFT energies around token `t` (1-based), averaged
/// over channels: `bin_count(window_len)` values.
pub fn local_energy(
    tokens: &TokenSequence,
    t: usize,
    config: &HarmonicConfig,
) -> Result<Vec<f64>, HarmonicError> {
    config.validate()?;
    if t == 0 || t > tokens.t_prime {
        return Err(HarmonicError::TokenIndexOutOfRange {
            t,
            t_prime: tokens.t_prime,
        });
    }
    let window = hann(config.window_len)?;
    let plan = FftPlanner::new().plan_fft_forward(config.window_len);
    Ok(local_energy_with(tokens, t - 1, &window, &plan))
}

/// Hot loop shared by [`local_energy`] and [`descriptor`]; `t0` is 0-based
/// and the window/plan are prevalidated.
fn local_energy_with(
    tokens: &TokenSequence,
    t0: usize,
    window: &[f64],
    plan: &Arc<dyn Fft<f64>>,
) -> Vec<f64> {
    let w = window.len();
    let k = bin_count(w);
    let mut energy = vec![0.0; k];
    let mut buf = vec![Complex::new(0.0, 0.0); w];
    for d in 0..tokens.dim {
        for (m, slot) in buf.iter_mut().enumerate() {
            let value = tokens.token((t0 + m) % tokens.t_prime)[d];
            *slot = Complex::new(window[m] * value, 0.0);
        }
        plan.process(&mut buf);
        for (bin, acc) in energy.iter_mut().enumerate() {
            *acc += buf[bin].norm_sqr();
        }
    }
    for acc in &mut energy {
        *acc /= tokens.dim as f64;
    }
    energy
}

/// Bin indices whose frequency `k * rate / window_len` lies in the band,
/// endpoints inclusive. Errors if no bin qualifies.
pub fn band_bins(
    token_rate_hz: f64,
    window_len: usize,
    band_hz: (f64, f64),
) -> Result<Vec<usize>, HarmonicError> {
    if !(token_rate_hz.is_finite() && token_rate_hz > 0.0) {
        return Err(HarmonicError::BadRate {
            rate_hz: token_rate_hz,
        });
    }
    let (f_min, f_max) = band_hz;
    if !(f_min.is_finite() && f_max.is_finite() && 0.0 <= f_min && f_min < f_max) {
        return Err(HarmonicError::BadBand { f_min, f_max });
    }
    let bins: Vec<usize> = (0..bin_count(window_len))
        .filter(|&k| {
            let f = k as f64 * token_rate_hz / window_len as f64;
            f_min <= f && f <= f_max
        })
        .collect();
    if bins.is_empty() {
        return Err(HarmonicError::BandUnresolvable {
            rate_hz: token_rate_hz,
            window_len,
            f_min,
            f_max,
        });
    }
    Ok(bins)
}

/// Index of the largest energy within `bins`; smallest bin wins ties.
pub fn band_argmax(energy: &[f64], bins: &[usize]) -> Result<usize, HarmonicError> {
    let mut best: Option<usize> = None;
    for &bin in bins {
        if bin >= energy.len() {
            return Err(HarmonicError::BinOutOfRange {
                bin,
                bins: energy.len(),
            });
        }
        match best {
            Some(current) if energy[bin] <= energy[current] => {}
            _ => best = Some(bin),
        }
    }
    best.ok_or(HarmonicError::EmptyBinSet)
}

/// Second-harmonic energy ratio `E(k2) / (E(k1) + eps_h)` with
/// `k1 = band_argmax` and `k2 = min(2*k1, K-1)`.
pub fn harmonic_ratio(energy: &[f64], bins: &[usize], eps_h: f64) -> Result<f64, HarmonicError> {
    if !(eps_h.is_finite() && eps_h > 0.0) {
        return Err(HarmonicError::BadEpsilon { eps_h });
    }
    let k1 = band_argmax(energy, bins)?;
    let k2 = (2 * k1).min(energy.len() - 1);
    Ok(energy[k2] / (energy[k1] + eps_h))
}

/// Full per-token descriptor: `ratios[t] = harmonic_ratio(local_energy(.., t),
/// band_bins(..), eps_h)` for every token. Tokens are processed independently
/// (in parallel when the `parallel` feature is on) with output identical to
/// sequential evaluation.
pub fn descriptor(
    tokens: &TokenSequence,
    config: &HarmonicConfig,
) -> Result<HarmonicSequence, HarmonicError> {
    config.validate()?;
    let window = hann(config.window_len)?;
    let bins = band_bins(tokens.token_rate_hz, config.window_len, config.band_hz)?;
    let plan = FftPlanner::new().plan_fft_forward(config.window_len);
    let ratios = parallel::try_map_indexed(tokens.t_prime, |t0| {
        let energy = local_energy_with(tokens, t0, &window, &plan);
        harmonic_ratio(&energy, &bins, config.eps_h)
    })?;
    Ok(HarmonicSequence { ratios })
}
