//! Supervised loss, heart-rate extraction, and evaluation metrics.
//!
//! The supervised loss is `1 - rho(y, y_hat)` where `rho` is the Pearson
//! correlation; it lives in `[0, 2]` and is undefined for (near-)constant
//! signals, which are rejected rather than silently returning NaN. Heart rate
//! is read from a signal as the frequency of the strongest in-band bin of a
//! mean-removed, Hann-windowed, full-length DFT — a deterministic spectral
//! peak, with ties resolved toward the lower frequency. The report bundles
//! MAE, RMSE, and MAPE over paired per-clip heart rates plus the Pearson
//! correlation of the two lists when it is defined.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::harmonic;

/// Variance below which a signal counts as constant and the correlation is
/// treated as undefined.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("sequences have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} samples, got {found}")]
    TooShort { needed: usize, found: usize },
    #[error("empty input")]
    Empty,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("{which} signal variance {variance:.3e} is under the {VARIANCE_FLOOR:.0e} floor")]
    ZeroVariance { which: &'static str, variance: f64 },
    #[error("sample rate {rate_hz} Hz must be positive and finite")]
    BadRate { rate_hz: f64 },
    #[error("band ({f_min}, {f_max}) Hz needs 0 < f_min < f_max, both finite")]
    BadBand { f_min: f64, f_max: f64 },
    #[error("no DFT bin of a {len}-sample signal at {rate_hz} Hz falls in ({f_min}, {f_max}) Hz")]
    BandUnresolvable {
        len: usize,
        rate_hz: f64,
        f_min: f64,
        f_max: f64,
    },
    #[error("no pulse detected: the signal has no in-band energy")]
    NoPulse,
    #[error("ground-truth heart rate at index {index} is zero; relative error undefined")]
    ZeroGroundTruth { index: usize },
}

fn check_finite(signal: &[f64]) -> Result<(), MetricsError> {
    if let Some(index) = signal.iter().position(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite { index });
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `1 - rho(gt, pred)`, clamped into `[0, 2]` against rounding.
pub fn neg_pearson(gt: &[f64], pred: &[f64]) -> Result<f64, MetricsError> {
    if gt.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            left: gt.len(),
            right: pred.len(),
        });
    }
    if gt.len() < 3 {
        return Err(MetricsError::TooShort {
            needed: 3,
            found: gt.len(),
        });
    }
    check_finite(gt)?;
    check_finite(pred)?;
    let (my, mp) = (mean(gt), mean(pred));
    let mut cov = 0.0;
    let mut var_y = 0.0;
    let mut var_p = 0.0;
    for (y, p) in gt.iter().zip(pred) {
        let (dy, dp) = (y - my, p - mp);
        cov += dy * dp;
        var_y += dy * dy;
        var_p += dp * dp;
    }
    let n = gt.len() as f64;
    if var_y / n <= VARIANCE_FLOOR {
        return Err(MetricsError::ZeroVariance {
            which: "ground-truth",
            variance: var_y / n,
        });
    }
    if var_p / n <= VARIANCE_FLOOR {
        return Err(MetricsError::ZeroVariance {
            which: "predicted",
            variance: var_p / n,
        });
    }
    let rho = cov / (var_y.sqrt() * var_p.sqrt());
    Ok((1.0 - rho).clamp(0.0, 2.0))
}

/// `l_sup + gamma * l_hot`. Finite inputs give a finite result; there is
/// nothing to validate beyond what the types already say.
pub fn combined_loss(l_sup: f64, l_hot: f64, gamma: f64) -> f64 {
    l_sup + gamma * l_hot
}

/// Pearson correlation of two equal-length lists; `None` when fewer than two
/// points or either list has zero variance.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

/// Spectral-peak heart rate of a signal, in beats per minute.
///
/// The signal must span at least two cycles of the slowest in-band frequency
/// (`2 * rate / f_min` samples). A constant signal has no pulse; so does one
/// whose in-band spectrum is exactly zero after mean removal and windowing.
pub fn hr_from_signal(
    signal: &[f64],
    sample_rate_hz: f64,
    band_hz: (f64, f64),
) -> Result<f64, MetricsError> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(MetricsError::BadRate {
            rate_hz: sample_rate_hz,
        });
    }
    let (f_min, f_max) = band_hz;
    if !(f_min.is_finite() && f_max.is_finite() && 0.0 < f_min && f_min < f_max) {
        return Err(MetricsError::BadBand { f_min, f_max });
    }
    check_finite(signal)?;
    let needed = (2.0 * sample_rate_hz / f_min).ceil() as usize;
    if signal.len() < needed {
        return Err(MetricsError::TooShort {
            needed,
            found: signal.len(),
        });
    }
    if signal.iter().all(|v| v.to_bits() == signal[0].to_bits()) {
        return Err(MetricsError::NoPulse);
    }

    let n = signal.len();
    let m = mean(signal);
    let window = harmonic::hann(n).expect("length checked above");
    let mut buf: Vec<Complex<f64>> = signal
        .iter()
        .zip(&window)
        .map(|(v, w)| Complex::new((v - m) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let mut best: Option<(usize, f64)> = None;
    for (k, z) in buf.iter().enumerate().take(n / 2 + 1) {
        let f = k as f64 * sample_rate_hz / n as f64;
        if f < f_min || f > f_max {
            continue;
        }
        let energy = z.norm_sqr();
        match best {
            Some((_, top)) if energy <= top => {}
            _ => best = Some((k, energy)),
        }
    }
    let (peak, energy) = best.ok_or(MetricsError::BandUnresolvable {
        len: n,
        rate_hz: sample_rate_hz,
        f_min,
        f_max,
    })?;
    if energy == 0.0 {
        return Err(MetricsError::NoPulse);
    }
    Ok(60.0 * peak as f64 * sample_rate_hz / n as f64)
}

/// Aggregate error metrics over paired per-clip heart rates (bpm).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mae: f64,
    pub rmse: f64,
    /// Mean absolute percentage error, already multiplied by 100.
    pub mape_percent: f64,
    /// Absent for fewer than two pairs or zero-variance lists.
    pub pearson_r: Option<f64>,
    pub n: usize,
}

/// MAE / RMSE / MAPE / Pearson r over ground-truth and predicted heart rates.
pub fn metrics(gt_bpm: &[f64], pred_bpm: &[f64]) -> Result<MetricsReport, MetricsError> {
    if gt_bpm.len() != pred_bpm.len() {
        return Err(MetricsError::LengthMismatch {
            left: gt_bpm.len(),
            right: pred_bpm.len(),
        });
    }
    if gt_bpm.is_empty() {
        return Err(MetricsError::Empty);
    }
    check_finite(gt_bpm)?;
    check_finite(pred_bpm)?;
    if let Some(index) = gt_bpm.iter().position(|y| *y == 0.0) {
        return Err(MetricsError::ZeroGroundTruth { index });
    }
    let n = gt_bpm.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut rel_sum = 0.0;
    for (y, p) in gt_bpm.iter().zip(pred_bpm) {
        let err = (y - p).abs();
        abs_sum += err;
        sq_sum += err * err;
        rel_sum += err / y.abs();
    }
    Ok(MetricsReport {
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
        mape_percent: 100.0 * rel_sum / n,
        pearson_r: pearson_r(gt_bpm, pred_bpm),
        n: gt_bpm.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn sine(freq_hz: f64, rate: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * freq_hz * t as f64 / rate).sin())
            .collect()
    }

    #[test]
    fn neg_pearson_endpoints() {
        let y: Vec<f64> = (0..32).map(|i| rng::unit_f64(1, i)).collect();
        assert!(neg_pearson(&y, &y).unwrap() <= 1e-12);
        let anti: Vec<f64> = y.iter().map(|v| -v).collect();
        assert!((neg_pearson(&y, &anti).unwrap() - 2.0).abs() <= 1e-12);
        let affine: Vec<f64> = y.iter().map(|v| 2.0 * v + 5.0).collect();
        assert!(neg_pearson(&y, &affine).unwrap() < 1e-9);
    }

    #[test]
    fn neg_pearson_is_symmetric() {
        let y: Vec<f64> = (0..20).map(|i| rng::unit_f64(2, i)).collect();
        let p: Vec<f64> = (0..20).map(|i| rng::unit_f64(3, i)).collect();
        let a = neg_pearson(&y, &p).unwrap();
        let b = neg_pearson(&p, &y).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn neg_pearson_rejects_degenerate_inputs() {
        let y = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            neg_pearson(&y, &[1.0, 1.0, 1.0]),
            Err(MetricsError::ZeroVariance {
                which: "predicted",
                ..
            })
        ));
        assert!(matches!(
            neg_pearson(&[2.0, 2.0, 2.0], &y),
            Err(MetricsError::ZeroVariance {
                which: "ground-truth",
                ..
            })
        ));
        assert!(matches!(
            neg_pearson(&y[..2], &y[..2]),
            Err(MetricsError::TooShort { needed: 3, .. })
        ));
        assert!(matches!(
            neg_pearson(&y, &y[..2]),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn combined_loss_is_linear() {
        assert_eq!(combined_loss(0.3, 0.5, 0.0), 0.3);
        assert!((combined_loss(0.3, 0.5, 0.1) - 0.35).abs() < 1e-12);
        assert_eq!(combined_loss(0.7, 0.0, 0.9), 0.7);
    }

    #[test]
    fn hr_recovers_sine_frequencies() {
        let bin = 60.0 * 30.0 / 512.0;
        let hr = hr_from_signal(&sine(1.2, 30.0, 512), 30.0, (0.7, 4.0)).unwrap();
        assert!((hr - 72.0).abs() <= bin, "{hr}");
        let hr = hr_from_signal(&sine(2.0, 30.0, 512), 30.0, (0.7, 4.0)).unwrap();
        assert!((hr - 120.0).abs() <= bin, "{hr}");
        // A frequency sitting exactly on bin 20 comes back exactly.
        let f = 20.0 * 30.0 / 512.0;
        let hr = hr_from_signal(&sine(f, 30.0, 512), 30.0, (0.7, 4.0)).unwrap();
        assert_eq!(hr, 60.0 * f);
    }

    #[test]
    fn hr_ignores_gain_and_offset() {
        let base = sine(1.3, 30.0, 256);
        let transformed: Vec<f64> = base.iter().map(|v| 17.0 * v - 4.0).collect();
        let a = hr_from_signal(&base, 30.0, (0.7, 4.0)).unwrap();
        let b = hr_from_signal(&transformed, 30.0, (0.7, 4.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hr_degenerate_inputs() {
        assert!(matches!(
            hr_from_signal(&vec![0.25; 512], 30.0, (0.7, 4.0)),
            Err(MetricsError::NoPulse)
        ));
        assert!(matches!(
            hr_from_signal(&sine(1.2, 30.0, 50), 30.0, (0.7, 4.0)),
            Err(MetricsError::TooShort {
                needed: 86,
                found: 50
            })
        ));
        // 90 samples at 30 Hz resolve to 1/3 Hz bins: 0.667 and 1.0 straddle
        // a (0.7, 0.8) band without landing in it.
        assert!(matches!(
            hr_from_signal(&sine(1.2, 30.0, 90), 30.0, (0.7, 0.8)),
            Err(MetricsError::BandUnresolvable { .. })
        ));
        assert!(matches!(
            hr_from_signal(&sine(1.0, 30.0, 128), 30.0, (4.0, 0.7)),
            Err(MetricsError::BadBand { .. })
        ));
    }

    #[test]
    fn metrics_hand_example() {
        let report = metrics(&[60.0, 62.0, 64.0], &[61.0, 61.0, 65.0]).unwrap();
        assert!((report.mae - 1.0).abs() < 1e-12);
        assert!((report.rmse - 1.0).abs() < 1e-12);
        let expected_mape = (100.0 / 3.0) * (1.0 / 60.0 + 1.0 / 62.0 + 1.0 / 64.0);
        assert!((report.mape_percent - expected_mape).abs() < 1e-12);
        assert_eq!(report.n, 3);
    }

    #[test]
    fn metrics_perfect_and_anticorrelated() {
        let gt = [60.0, 70.0, 80.0];
        let report = metrics(&gt, &gt).unwrap();
        assert_eq!(report.mae, 0.0);
        assert_eq!(report.rmse, 0.0);
        assert_eq!(report.mape_percent, 0.0);
        assert!((report.pearson_r.unwrap() - 1.0).abs() < 1e-12);

        let report = metrics(&[60.0, 70.0], &[70.0, 60.0]).unwrap();
        assert!((report.pearson_r.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_edge_cases() {
        assert!(matches!(
            metrics(&[60.0, 0.0], &[61.0, 62.0]),
            Err(MetricsError::ZeroGroundTruth { index: 1 })
        ));
        // Single pair: errors defined, correlation absent.
        let single = metrics(&[72.0], &[70.0]).unwrap();
        assert_eq!(single.pearson_r, None);
        assert!((single.mae - 2.0).abs() < 1e-12);
        // Constant predictions: correlation undefined.
        let flat = metrics(&[60.0, 70.0], &[65.0, 65.0]).unwrap();
        assert_eq!(flat.pearson_r, None);
    }

    #[test]
    fn rmse_dominates_mae() {
        for seed in 0..50u64 {
            let gt: Vec<f64> = (0..20)
                .map(|i| 60.0 + 60.0 * rng::unit_f64(seed, i))
                .collect();
            let pred: Vec<f64> = (0..20)
                .map(|i| 60.0 + 60.0 * rng::unit_f64(seed + 1000, i))
                .collect();
            let report = metrics(&gt, &pred).unwrap();
            assert!(report.rmse >= report.mae - 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn pearson_affine_invariance() {
        let xs: Vec<f64> = (0..16).map(|i| rng::unit_f64(8, i)).collect();
        let up: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -0.5 * x + 2.0).collect();
        assert!((pearson_r(&xs, &up).unwrap() - 1.0).abs() < 1e-9);
        assert!((pearson_r(&xs, &down).unwrap() + 1.0).abs() < 1e-9);
    }
}
