//! Brute-force reference implementations ("oracles") used by the test suites.
//!
//! Everything here is written as plain nested loops over plain slices, with no
//! FFT library, no shared helpers from the production crate, and no attention
//! to speed. The point is independence: when `hot-core` computes a spectrum or
//! a harmonic ratio through its optimized path, tests compare the result
//! against these direct evaluations of the same definitions.

/// Direct O((H*W)^2) unnormalized 2-D DFT of a single real plane.
///
/// `plane` is row-major `h x w`. Returns row-major complex bins as
/// `(re, im)` pairs, bin `(u, v)` at index `u * w + v`:
///
/// `F[u, v] = sum_{y, x} plane[y, x] * exp(-2*pi*i*(u*y/h + v*x/w))`
pub fn dft2_direct(plane: &[f64], h: usize, w: usize) -> Vec<(f64, f64)> {
    assert_eq!(plane.len(), h * w, "plane length must be h*w");
    let mut out = vec![(0.0, 0.0); h * w];
    for u in 0..h {
        for v in 0..w {
            let mut re = 0.0;
            let mut im = 0.0;
            for y in 0..h {
                for x in 0..w {
                    let ang = -2.0
                        * std::f64::consts::PI
                        * (u as f64 * y as f64 / h as f64 + v as f64 * x as f64 / w as f64);
                    let px = plane[y * w + x];
                    re += px * ang.cos();
                    im += px * ang.sin();
                }
            }
            out[u * w + v] = (re, im);
        }
    }
    out
}

/// Direct O((H*W)^2) inverse of [`dft2_direct`], normalized by `1/(h*w)`.
///
/// Returns complex samples; for spectra of real planes the imaginary parts
/// come back at rounding level.
pub fn idft2_direct(spectrum: &[(f64, f64)], h: usize, w: usize) -> Vec<(f64, f64)> {
    assert_eq!(spectrum.len(), h * w, "spectrum length must be h*w");
    let mut out = vec![(0.0, 0.0); h * w];
    let norm = 1.0 / (h as f64 * w as f64);
    for y in 0..h {
        for x in 0..w {
            let mut re = 0.0;
            let mut im = 0.0;
            for u in 0..h {
                for v in 0..w {
                    let ang = 2.0
                        * std::f64::consts::PI
                        * (u as f64 * y as f64 / h as f64 + v as f64 * x as f64 / w as f64);
                    let (fr, fi) = spectrum[u * w + v];
                    let (c, s) = (ang.cos(), ang.sin());
                    re += fr * c - fi * s;
                    im += fr * s + fi * c;
                }
            }
            out[y * w + x] = (re * norm, im * norm);
        }
    }
    out
}

/// Enumerates the low-frequency flag grid straight from the selection rule:
/// bin `(u, v)` is flagged iff `min(u, h-u) < beta*h/2` and
/// `min(v, w-v) < beta*w/2` (cyclic distance, strict inequality).
pub fn mask_flags_direct(h: usize, w: usize, beta: f64) -> Vec<bool> {
    let mut flags = vec![false; h * w];
    for u in 0..h {
        for v in 0..w {
            let du = (u.min(h - u)) as f64;
            let dv = (v.min(w - v)) as f64;
            flags[u * w + v] = du < beta * h as f64 / 2.0 && dv < beta * w as f64 / 2.0;
        }
    }
    flags
}

/// Direct windowed-DFT band energies for one token position.
///
/// `tokens` is row-major `t_prime x dim`; `t` is the 1-based token index.
/// The window of length `window_len` is gathered cyclically starting at `t`,
/// tapered by a symmetric Hann window written out inline, and transformed by
/// direct O(W^2) summation per channel. Returns the channel-averaged squared
/// magnitudes for bins `0..=window_len/2`.
pub fn windowed_energy_direct(
    tokens: &[f64],
    t_prime: usize,
    dim: usize,
    t: usize,
    window_len: usize,
) -> Vec<f64> {
    assert_eq!(
        tokens.len(),
        t_prime * dim,
        "tokens length must be t_prime*dim"
    );
    assert!(
        t >= 1 && t <= t_prime,
        "t is 1-based and must be in 1..=t_prime"
    );
    assert!(window_len >= 2, "window_len must be at least 2");
    let wlen = window_len;
    let k_count = wlen / 2 + 1;

    // Cyclic gather: rows m = 0..W-1 pick token ((t + m - 1) mod T') + 1, 1-based.
    let mut rows = vec![0.0; wlen * dim];
    for m in 0..wlen {
        let src = (t + m - 1) % t_prime; // 0-based row of the 1-based pick
        for d in 0..dim {
            rows[m * dim + d] = tokens[src * dim + d];
        }
    }

    // Symmetric Hann taper.
    for (m, chunk) in rows.chunks_mut(dim).enumerate() {
        let taper = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * m as f64 / (wlen as f64 - 1.0)).cos();
        for value in chunk.iter_mut() {
            *value *= taper;
        }
    }

    let mut energy = vec![0.0; k_count];
    for k in 0..k_count {
        let mut acc = 0.0;
        for d in 0..dim {
            let mut re = 0.0;
            let mut im = 0.0;
            for m in 0..wlen {
                let ang = -2.0 * std::f64::consts::PI * k as f64 * m as f64 / wlen as f64;
                re += rows[m * dim + d] * ang.cos();
                im += rows[m * dim + d] * ang.sin();
            }
            acc += re * re + im * im;
        }
        energy[k] = acc / dim as f64;
    }
    energy
}

/// Full independent descriptor path: windowed energies per token position,
/// band restriction by `f_min <= k * token_rate_hz / window_len <= f_max`
/// (inclusive), fundamental = band argmax (smallest bin on ties), second
/// harmonic bin clamped to the top bin, ratio regularized by `eps_h`.
#[allow(clippy::too_many_arguments)]
pub fn harmonic_ratios_direct(
    tokens: &[f64],
    t_prime: usize,
    dim: usize,
    window_len: usize,
    token_rate_hz: f64,
    f_min: f64,
    f_max: f64,
    eps_h: f64,
) -> Vec<f64> {
    let k_count = window_len / 2 + 1;
    let band: Vec<usize> = (0..k_count)
        .filter(|&k| {
            let f = k as f64 * token_rate_hz / window_len as f64;
            f_min <= f && f <= f_max
        })
        .collect();
    assert!(
        !band.is_empty(),
        "band resolves to no bins at this rate/window"
    );

    let mut ratios = Vec::with_capacity(t_prime);
    for t in 1..=t_prime {
        let energy = windowed_energy_direct(tokens, t_prime, dim, t, window_len);
        let mut k1 = band[0];
        for &k in &band[1..] {
            if energy[k] > energy[k1] {
                k1 = k;
            }
        }
        let k2 = (2 * k1).min(k_count - 1);
        ratios.push(energy[k2] / (energy[k1] + eps_h));
    }
    ratios
}

/// Largest relative deviation `|a-b| / max(|b|, floor)` over two slices.
pub fn max_rel_dev(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "slices must have equal length");
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / y.abs().max(floor))
        .fold(0.0, f64::max)
}
