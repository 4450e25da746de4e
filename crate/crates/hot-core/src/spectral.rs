//! Frequency-domain appearance transfer.
//!
//! A clip is a stack of multi-channel frames. Each frame channel is sent
//! through an unnormalized 2-D DFT; inside a small low-frequency region the
//! amplitude is replaced with a reference frame's amplitude while the phase is
//! kept; everything outside the region is copied bit-for-bit in the spectral
//! domain; the inverse transform (normalized by `1/(H*W)`) returns to pixels.
//!
//! The low-frequency region is defined on cyclic frequency distance: bin
//! `(u, v)` of an `H x W` plane belongs to the region iff
//! `min(u, H-u) < beta*H/2` and `min(v, W-v) < beta*W/2`, both strict. The
//! region is conjugate-symmetric, which is what keeps the swapped spectrum of
//! a real frame conjugate-symmetric and hence the output real. `beta = 0`
//! selects nothing (the transfer is an identity up to rounding); `beta`
//! close to 1 selects almost everything.
//!
//! The inverse transform checks that the accumulated imaginary residue stays
//! below `MAX_RESIDUAL_IMAG` and errors otherwise — a large residue means the
//! spectrum was not conjugate-symmetric, i.e. someone edited bins in a way
//! that has no real-valued preimage.

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

use crate::parallel;

/// Largest max-abs imaginary residue `idft2` silently discards.
pub const MAX_RESIDUAL_IMAG: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum SpectralError {
    #[error("frame data has {found} values, expected {expected} (= c*h*w)")]
    DataLength { expected: usize, found: usize },
    #[error("need channels >= 1 and height, width >= 2, got {channels}x{height}x{width}")]
    BadDims {
        channels: usize,
        height: usize,
        width: usize,
    },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("clip has no frames")]
    EmptyClip,
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: Shape, found: Shape },
    #[error("mask is {mask_height}x{mask_width} but planes are {height}x{width}")]
    MaskShape {
        mask_height: usize,
        mask_width: usize,
        height: usize,
        width: usize,
    },
    #[error("beta {beta} outside [0, 1)")]
    BadBeta { beta: f64 },
    #[error("inverse transform left imaginary residue {max_abs:.3e} > {MAX_RESIDUAL_IMAG:.1e}")]
    ResidualImaginary { max_abs: f64 },
}

/// `(channels, height, width)` of a frame or spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

impl Shape {
    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One multi-channel image, stored row-major as `[channel][row][column]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    shape: Shape,
    data: Vec<f64>,
}

impl Frame {
    /// Validates dimensions, length, and finiteness.
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self, SpectralError> {
        if channels == 0 || height < 2 || width < 2 {
            return Err(SpectralError::BadDims {
                channels,
                height,
                width,
            });
        }
        let shape = Shape {
            channels,
            height,
            width,
        };
        if data.len() != shape.len() {
            return Err(SpectralError::DataLength {
                expected: shape.len(),
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite { index });
        }
        Ok(Self { shape, data })
    }

    /// Builds a frame by evaluating `f(channel, row, column)`. The closure
    /// must produce finite values.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, SpectralError> {
        if channels == 0 || height < 2 || width < 2 {
            return Err(SpectralError::BadDims {
                channels,
                height,
                width,
            });
        }
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn get(&self, channel: usize, row: usize, column: usize) -> f64 {
        self.data[(channel * self.shape.height + row) * self.shape.width + column]
    }

    /// Row-major plane of one channel.
    pub fn channel(&self, channel: usize) -> &[f64] {
        let plane = self.shape.height * self.shape.width;
        &self.data[channel * plane..(channel + 1) * plane]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mean over all pixels of one channel.
    pub fn channel_mean(&self, channel: usize) -> f64 {
        let plane = self.channel(channel);
        plane.iter().sum::<f64>() / plane.len() as f64
    }
}

/// A temporally ordered stack of same-shaped frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    frames: Vec<Frame>,
}

impl Clip {
    pub fn new(frames: Vec<Frame>) -> Result<Self, SpectralError> {
        let first = frames.first().ok_or(SpectralError::EmptyClip)?.shape();
        for frame in &frames {
            if frame.shape() != first {
                return Err(SpectralError::ShapeMismatch {
                    expected: first,
                    found: frame.shape(),
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.frames[0].shape()
    }
}

/// Complex 2-D spectrum of each channel of a frame, same layout as [`Frame`].
#[derive(Debug, Clone)]
pub struct Spectrum {
    shape: Shape,
    data: Vec<Complex<f64>>,
}

impl Spectrum {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Coefficient at frequency `(u, v)` of one channel.
    pub fn get(&self, channel: usize, u: usize, v: usize) -> Complex<f64> {
        self.data[(channel * self.shape.height + u) * self.shape.width + v]
    }

    /// `| coefficient |` at `(u, v)`.
    pub fn amplitude(&self, channel: usize, u: usize, v: usize) -> f64 {
        self.get(channel, u, v).norm()
    }

    pub fn as_slice(&self) -> &[Complex<f64>] {
        &self.data
    }

    /// `sum |X[u,v]|^2` over one channel plane.
    pub fn channel_energy(&self, channel: usize) -> f64 {
        let plane = self.shape.height * self.shape.width;
        self.data[channel * plane..(channel + 1) * plane]
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }
}

/// Strict cyclic low-frequency selector for `H x W` spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct LowFreqMask {
    height: usize,
    width: usize,
    beta: f64,
    flags: Vec<bool>,
}

impl LowFreqMask {
    /// Flags every bin whose cyclic distance to DC is below `beta*extent/2`
    /// along both axes.
    pub fn build(height: usize, width: usize, beta: f64) -> Result<Self, SpectralError> {
        if height < 2 || width < 2 {
            return Err(SpectralError::BadDims {
                channels: 1,
                height,
                width,
            });
        }
        if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
            return Err(SpectralError::BadBeta { beta });
        }
        let cut_u = beta * height as f64 / 2.0;
        let cut_v = beta * width as f64 / 2.0;
        let mut flags = Vec::with_capacity(height * width);
        for u in 0..height {
            let du = u.min(height - u) as f64;
            for v in 0..width {
                let dv = v.min(width - v) as f64;
                flags.push(du < cut_u && dv < cut_v);
            }
        }
        Ok(Self {
            height,
            width,
            beta,
            flags,
        })
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.flags[u * self.width + v]
    }

    /// Number of selected bins.
    pub fn census(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }
}

/// Forward and inverse plans for one plane size, shareable across threads.
struct Plans {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn for_shape(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            col_fwd: planner.plan_fft_forward(height),
            row_inv: planner.plan_fft_inverse(width),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    /// Row pass then column pass, in place. `inverse` picks the plan pair;
    /// no normalization is applied here.
    fn transform_plane(&self, plane: &mut [Complex<f64>], inverse: bool) {
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(plane);
        let mut transposed = vec![Complex::default(); plane.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                transposed[x * self.height + y] = plane[y * self.width + x];
            }
        }
        col.process(&mut transposed);
        for y in 0..self.height {
            for x in 0..self.width {
                plane[y * self.width + x] = transposed[x * self.height + y];
            }
        }
    }
}

fn dft2_with(plans: &Plans, frame: &Frame) -> Spectrum {
    let shape = frame.shape();
    let mut data: Vec<Complex<f64>> = frame
        .as_slice()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    let plane = shape.height * shape.width;
    for c in 0..shape.channels {
        plans.transform_plane(&mut data[c * plane..(c + 1) * plane], false);
    }
    Spectrum { shape, data }
}

fn idft2_with(plans: &Plans, spectrum: &Spectrum) -> Result<Frame, SpectralError> {
    let shape = spectrum.shape();
    let mut data = spectrum.as_slice().to_vec();
    let plane = shape.height * shape.width;
    for c in 0..shape.channels {
        plans.transform_plane(&mut data[c * plane..(c + 1) * plane], true);
    }
    let norm = 1.0 / (shape.height * shape.width) as f64;
    let mut max_imag = 0.0f64;
    let real: Vec<f64> = data
        .iter()
        .map(|z| {
            let scaled = z * norm;
            max_imag = max_imag.max(scaled.im.abs());
            scaled.re
        })
        .collect();
    if !(max_imag <= MAX_RESIDUAL_IMAG) {
        return Err(SpectralError::ResidualImaginary { max_abs: max_imag });
    }
    Frame::new(shape.channels, shape.height, shape.width, real)
}

/// Unnormalized forward 2-D DFT of every channel.
pub fn dft2(frame: &Frame) -> Spectrum {
    let shape = frame.shape();
    dft2_with(&Plans::for_shape(shape.height, shape.width), frame)
}

/// Inverse 2-D DFT normalized by `1/(H*W)`. Errors if the imaginary residue
/// exceeds [`MAX_RESIDUAL_IMAG`], which indicates a non-conjugate-symmetric
/// spectrum.
pub fn idft2(spectrum: &Spectrum) -> Result<Frame, SpectralError> {
    let shape = spectrum.shape();
    idft2_with(&Plans::for_shape(shape.height, shape.width), spectrum)
}

fn check_mask(shape: Shape, mask: &LowFreqMask) -> Result<(), SpectralError> {
    if mask.height != shape.height || mask.width != shape.width {
        return Err(SpectralError::MaskShape {
            mask_height: mask.height,
            mask_width: mask.width,
            height: shape.height,
            width: shape.width,
        });
    }
    Ok(())
}

/// Swaps low-frequency amplitudes of `source_spectrum` for the reference's
/// while keeping the source phase; bins outside the mask are copied verbatim.
///
/// A source coefficient of exactly zero has no phase, so the reference
/// amplitude is planted on the real axis there.
fn swap_amplitudes(
    source_spectrum: &Spectrum,
    reference_spectrum: &Spectrum,
    mask: &LowFreqMask,
) -> Result<Spectrum, SpectralError> {
    let shape = source_spectrum.shape();
    if reference_spectrum.shape() != shape {
        return Err(SpectralError::ShapeMismatch {
            expected: shape,
            found: reference_spectrum.shape(),
        });
    }
    check_mask(shape, mask)?;
    let plane = shape.height * shape.width;
    let mut data = source_spectrum.as_slice().to_vec();
    for c in 0..shape.channels {
        for (offset, flagged) in mask.flags.iter().enumerate() {
            if !flagged {
                continue;
            }
            let index = c * plane + offset;
            let target_amp = reference_spectrum.as_slice()[index].norm();
            let src = data[index];
            let src_amp = src.norm();
            data[index] = if src_amp == 0.0 {
                Complex::new(target_amp, 0.0)
            } else {
                src * (target_amp / src_amp)
            };
        }
    }
    Ok(Spectrum { shape, data })
}

/// Amplitude transfer for a single frame against a same-shaped reference.
pub fn fda_frame(
    source: &Frame,
    reference: &Frame,
    mask: &LowFreqMask,
) -> Result<Frame, SpectralError> {
    let shape = source.shape();
    if reference.shape() != shape {
        return Err(SpectralError::ShapeMismatch {
            expected: shape,
            found: reference.shape(),
        });
    }
    let plans = Plans::for_shape(shape.height, shape.width);
    let swapped = swap_amplitudes(
        &dft2_with(&plans, source),
        &dft2_with(&plans, reference),
        mask,
    )?;
    idft2_with(&plans, &swapped)
}

/// Applies the amplitude transfer to every frame of a clip against one
/// reference frame. The reference spectrum is computed once; frames are
/// processed independently (in parallel when the `parallel` feature is on).
pub fn fda_clip(clip: &Clip, reference: &Frame, mask: &LowFreqMask) -> Result<Clip, SpectralError> {
    let shape = clip.shape();
    if reference.shape() != shape {
        return Err(SpectralError::ShapeMismatch {
            expected: shape,
            found: reference.shape(),
        });
    }
    check_mask(shape, mask)?;
    let plans = Plans::for_shape(shape.height, shape.width);
    let reference_spectrum = dft2_with(&plans, reference);
    let frames = parallel::try_map_indexed(clip.len(), |t| {
        let swapped = swap_amplitudes(
            &dft2_with(&plans, &clip.frames()[t]),
            &reference_spectrum,
            mask,
        )?;
        idft2_with(&plans, &swapped)
    })?;
    Clip::new(frames)
}
