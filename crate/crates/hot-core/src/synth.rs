//! Seeded synthetic clips with a known appearance domain and a known pulse.
//!
//! A clip is assembled from four ingredients, all deterministic in the seed:
//!
//! * a per-channel *base face* — 0.5 plus three low-frequency cosines with
//!   seeded amplitudes, integer frequencies, and phases;
//! * a multiplicative *illumination field* — a plane tilted by a horizontal
//!   and a vertical gradient;
//! * the *pulse*: `pulse_amp * s(t) * skin_pattern`, where
//!   `s(t) = cos(2 pi hr t / (60 fps)) + harmonic2_rel * cos(4 pi hr t /
//!   (60 fps))` and the skin pattern is an ellipse indicator minus its
//!   spatial mean — zero spatial mean puts the pulse strictly outside the DC
//!   bin, so a low-frequency amplitude swap cannot silently erase all of it;
//! * optional white noise.
//!
//! Per-channel tint offsets and the illumination gradients are the "domain
//! appearance" knobs: two specs differing only in those fields play the role
//! of two recording environments. The surrogate feature extractor stands in
//! for a learned backbone: temporal average pooling by a stride, spatial 8x8
//! block means, and a fixed seeded channel lift with unit-norm rows.
//!
//! All randomness is counter-based: every value is a pure function of
//! `(seed, stream tag, element index)`, which makes generation bit-stable
//! across runs, platforms, and thread counts.

use crate::harmonic::FeatureMap;
use crate::parallel;
use crate::rng;
use crate::spectral::{dft2, Clip, Frame, LowFreqMask, SpectralError};
use crate::tensor_io::{parse_kv_lines, ConfigError};

/// Channels per synthetic frame (RGB-like).
pub const CHANNELS: usize = 3;

const TAG_FACE: u64 = 0x01;
const TAG_NOISE: u64 = 0x02;
const TAG_LIFT: u64 = 0x03;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("spec field {field}: {detail}")]
    BadSpec { field: &'static str, detail: String },
    #[error("unknown spec key `{key}`")]
    UnknownKey { key: String },
    #[error("spec key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error(transparent)]
    Lines(#[from] ConfigError),
    #[error(transparent)]
    Frame(#[from] SpectralError),
    #[error(transparent)]
    Feature(#[from] crate::harmonic::HarmonicError),
    #[error("stride {stride} does not divide the {frames} frames")]
    StrideMismatch { stride: usize, frames: usize },
    #[error("identity lift needs dim = {channels} channels, got {dim}")]
    IdentityLift { dim: usize, channels: usize },
    #[error("spatial pooling to 8x8 needs height, width >= 8, got {height}x{width}")]
    SpatialTooSmall { height: usize, width: usize },
    #[error("channel {channel} outside 0..{channels}")]
    ChannelOutOfRange { channel: usize, channels: usize },
    #[error("mode ({u},{v}) outside the {height}x{width} spectrum")]
    ModeOutOfRange {
        u: usize,
        v: usize,
        height: usize,
        width: usize,
    },
    #[error("mode ({u},{v}) lies inside the replaced low-frequency region")]
    ModeInsideMask { u: usize, v: usize },
    #[error("mask is {mask_height}x{mask_width} but frames are {height}x{width}")]
    MaskMismatch {
        mask_height: usize,
        mask_width: usize,
        height: usize,
        width: usize,
    },
    #[error("no spatial mode outside the mask carries pulse energy")]
    NoPulseMode,
}

/// Scene description for one synthetic recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub hr_bpm: f64,
    pub fps: f64,
    pub num_frames: usize,
    pub height: usize,
    pub width: usize,
    /// Ellipse center `(cy, cx)` in pixels. Integer coordinates keep the
    /// pattern torus-symmetric and its spectrum real.
    pub ellipse_center: (f64, f64),
    /// Ellipse semi-axes `(ay, ax)` in pixels.
    pub ellipse_axes: (f64, f64),
    pub pulse_amp: f64,
    /// Per-channel additive offsets — the domain's color cast.
    pub tint: [f64; CHANNELS],
    /// `(gx, gy)` slopes of the illumination plane.
    pub illum_gradient: (f64, f64),
    pub noise_sigma: f64,
    /// Relative amplitude of the pulse's second harmonic, in `[0, 1]`.
    pub harmonic2_rel: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            hr_bpm: 72.0,
            fps: 30.0,
            num_frames: 128,
            height: 32,
            width: 32,
            ellipse_center: (16.0, 16.0),
            ellipse_axes: (10.0, 7.0),
            pulse_amp: 0.02,
            tint: [0.05, 0.0, -0.03],
            illum_gradient: (0.2, -0.1),
            noise_sigma: 0.0,
            harmonic2_rel: 0.3,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |field: &'static str, detail: String| Err(SynthError::BadSpec { field, detail });
        if !(self.hr_bpm.is_finite() && (42.0..=240.0).contains(&self.hr_bpm)) {
            return bad("hr_bpm", format!("{} outside [42, 240]", self.hr_bpm));
        }
        // The pulse must sit strictly inside the default physiological band,
        // or the ground truth would be unrecoverable by construction.
        let hz = self.hr_bpm / 60.0;
        if !(0.7 < hz && hz < 4.0) {
            return bad(
                "hr_bpm",
                format!(
                    "{} bpm = {hz} Hz not strictly inside (0.7, 4.0)",
                    self.hr_bpm
                ),
            );
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad("fps", format!("{} must be > 0", self.fps));
        }
        if self.num_frames == 0 {
            return bad("num_frames", "must be >= 1".into());
        }
        if self.height < 8 || self.width < 8 {
            return bad(
                "height/width",
                format!("{}x{} must be >= 8x8", self.height, self.width),
            );
        }
        let (cy, cx) = self.ellipse_center;
        if !(cy.is_finite()
            && cx.is_finite()
            && (0.0..self.height as f64).contains(&cy)
            && (0.0..self.width as f64).contains(&cx))
        {
            return bad("ellipse_center", format!("({cy}, {cx}) outside the frame"));
        }
        let (ay, ax) = self.ellipse_axes;
        if !(ay.is_finite() && ax.is_finite() && ay > 0.0 && ax > 0.0) {
            return bad("ellipse_axes", format!("({ay}, {ax}) must be positive"));
        }
        if !(self.pulse_amp.is_finite() && self.pulse_amp >= 0.0) {
            return bad("pulse_amp", format!("{} must be >= 0", self.pulse_amp));
        }
        if self.tint.iter().any(|t| !t.is_finite()) {
            return bad("tint", format!("{:?} must be finite", self.tint));
        }
        if !(self.illum_gradient.0.is_finite() && self.illum_gradient.1.is_finite()) {
            return bad("illum_gradient", "gradients must be finite".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma", format!("{} must be >= 0", self.noise_sigma));
        }
        if !(self.harmonic2_rel.is_finite() && (0.0..=1.0).contains(&self.harmonic2_rel)) {
            return bad(
                "harmonic2_rel",
                format!("{} outside [0, 1]", self.harmonic2_rel),
            );
        }
        // The indicator must have both inside and outside pixels, or the
        // mean-removed pattern vanishes and the clip carries no pulse.
        let inside = ellipse_indicator(self).iter().filter(|&&v| v).count();
        if inside == 0 || inside == self.height * self.width {
            return bad(
                "skin_ellipse",
                format!(
                    "{inside} of {} pixels inside; pattern is constant",
                    self.height * self.width
                ),
            );
        }
        Ok(())
    }

    /// Parses `key=value` spec text on top of the defaults. When `height` or
    /// `width` are given without an explicit ellipse center, the center
    /// follows the new frame midpoint.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut spec = Self::default();
        let mut center_y: Option<f64> = None;
        let mut center_x: Option<f64> = None;
        for (key, value) in parse_kv_lines(text)? {
            let bad = || SynthError::BadValue {
                key: key.clone(),
                value: value.clone(),
            };
            match key.as_str() {
                "hr_bpm" => spec.hr_bpm = value.parse().map_err(|_| bad())?,
                "fps" => spec.fps = value.parse().map_err(|_| bad())?,
                "num_frames" => spec.num_frames = value.parse().map_err(|_| bad())?,
                "height" => spec.height = value.parse().map_err(|_| bad())?,
                "width" => spec.width = value.parse().map_err(|_| bad())?,
                "ellipse_cy" => center_y = Some(value.parse().map_err(|_| bad())?),
                "ellipse_cx" => center_x = Some(value.parse().map_err(|_| bad())?),
                "ellipse_ay" => spec.ellipse_axes.0 = value.parse().map_err(|_| bad())?,
                "ellipse_ax" => spec.ellipse_axes.1 = value.parse().map_err(|_| bad())?,
                "pulse_amp" => spec.pulse_amp = value.parse().map_err(|_| bad())?,
                "tint_r" => spec.tint[0] = value.parse().map_err(|_| bad())?,
                "tint_g" => spec.tint[1] = value.parse().map_err(|_| bad())?,
                "tint_b" => spec.tint[2] = value.parse().map_err(|_| bad())?,
                "illum_gx" => spec.illum_gradient.0 = value.parse().map_err(|_| bad())?,
                "illum_gy" => spec.illum_gradient.1 = value.parse().map_err(|_| bad())?,
                "noise_sigma" => spec.noise_sigma = value.parse().map_err(|_| bad())?,
                "harmonic2_rel" => spec.harmonic2_rel = value.parse().map_err(|_| bad())?,
                _ => return Err(SynthError::UnknownKey { key }),
            }
        }
        spec.ellipse_center = (
            center_y.unwrap_or(spec.height as f64 / 2.0),
            center_x.unwrap_or(spec.width as f64 / 2.0),
        );
        spec.validate()?;
        Ok(spec)
    }

    /// Pulse waveform value at frame `t`.
    pub fn waveform(&self, t: usize) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * self.hr_bpm * t as f64 / (self.fps * 60.0);
        phase.cos() + self.harmonic2_rel * (2.0 * phase).cos()
    }
}

/// The reference pulse signal paired with a generated clip.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Unclamped waveform sample per frame, at `fps`.
    pub bvp: Vec<f64>,
    pub hr_bpm: f64,
}

fn ellipse_indicator(spec: &SynthSpec) -> Vec<bool> {
    let (cy, cx) = spec.ellipse_center;
    let (ay, ax) = spec.ellipse_axes;
    let mut flags = Vec::with_capacity(spec.height * spec.width);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let dy = (y as f64 - cy) / ay;
            let dx = (x as f64 - cx) / ax;
            flags.push(dy * dy + dx * dx <= 1.0);
        }
    }
    flags
}

/// Ellipse indicator minus its spatial mean: the zero-mean plane that carries
/// the pulse. Row-major `height x width`.
pub fn skin_pattern(spec: &SynthSpec) -> Result<Vec<f64>, SynthError> {
    spec.validate()?;
    let flags = ellipse_indicator(spec);
    let mean = flags.iter().filter(|&&v| v).count() as f64 / (spec.height * spec.width) as f64;
    Ok(flags
        .iter()
        .map(|&v| if v { 1.0 - mean } else { -mean })
        .collect())
}

/// One channel of the seeded base texture: 0.5 plus three cosines with
/// amplitudes in `[0.02, 0.06]`, integer frequencies in `{1, 2, 3}` per axis,
/// and uniform phases.
fn base_face_value(face_seed: u64, c: usize, y: usize, x: usize, h: usize, w: usize) -> f64 {
    let mut value = 0.5;
    for i in 0..3 {
        let k = ((c * 3 + i) * 4) as u64;
        let amp = 0.02 + 0.04 * rng::unit_f64(face_seed, k);
        let fy = 1 + (rng::mix64(face_seed, k + 1) % 3) as usize;
        let fx = 1 + (rng::mix64(face_seed, k + 2) % 3) as usize;
        let phase = 2.0 * std::f64::consts::PI * rng::unit_f64(face_seed, k + 3);
        let angle = 2.0
            * std::f64::consts::PI
            * (fy as f64 * y as f64 / h as f64 + fx as f64 * x as f64 / w as f64)
            + phase;
        value += amp * angle.cos();
    }
    value
}

fn illum_value(gradient: (f64, f64), y: usize, x: usize, h: usize, w: usize) -> f64 {
    let (gx, gy) = gradient;
    1.0 + gx * (x as f64 / (w - 1) as f64 - 0.5) + gy * (y as f64 / (h - 1) as f64 - 0.5)
}

/// Generates the clip and its ground-truth pulse. Identical `(spec, seed)`
/// pairs produce bit-identical output; frames are built in parallel when the
/// `parallel` feature is on, which cannot change the result because every
/// sample is a pure function of its indices.
pub fn gen_clip(spec: &SynthSpec, seed: u64) -> Result<(Clip, GroundTruth), SynthError> {
    spec.validate()?;
    let face_seed = rng::derive(seed, TAG_FACE);
    let noise_seed = rng::derive(seed, TAG_NOISE);
    let pattern = skin_pattern(spec)?;
    let (h, w) = (spec.height, spec.width);

    let frames = parallel::try_map_indexed(spec.num_frames, |t| {
        let s = spec.waveform(t);
        Frame::from_fn(CHANNELS, h, w, |c, y, x| {
            let mut value = spec.tint[c]
                + illum_value(spec.illum_gradient, y, x, h, w)
                    * base_face_value(face_seed, c, y, x, h, w)
                + spec.pulse_amp * s * pattern[y * w + x];
            if spec.noise_sigma > 0.0 {
                let index = (((t * CHANNELS + c) * h + y) * w + x) as u64;
                value += spec.noise_sigma * rng::normal_f64(noise_seed, index);
            }
            value.clamp(0.0, 1.0)
        })
    })?;
    let bvp: Vec<f64> = (0..spec.num_frames).map(|t| spec.waveform(t)).collect();
    Ok((
        Clip::new(frames)?,
        GroundTruth {
            bvp,
            hr_bpm: spec.hr_bpm,
        },
    ))
}

/// A static frame with the given appearance and no pulse — the "target
/// domain" image an amplitude transfer borrows from.
pub fn gen_reference(
    tint: [f64; CHANNELS],
    illum_gradient: (f64, f64),
    height: usize,
    width: usize,
    seed: u64,
) -> Result<Frame, SynthError> {
    let face_seed = rng::derive(seed, TAG_FACE);
    let frame = Frame::from_fn(CHANNELS, height, width, |c, y, x| {
        (tint[c]
            + illum_value(illum_gradient, y, x, height, width)
                * base_face_value(face_seed, c, y, x, height, width))
        .clamp(0.0, 1.0)
    })?;
    Ok(frame)
}

/// How pooled pixel channels become feature channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelLift {
    /// Features are the pooled pixels themselves; requires `dim = CHANNELS`.
    Identity,
    /// A fixed random `dim x CHANNELS` map with unit-norm rows, derived from
    /// this seed.
    Seeded(u64),
}

/// Surrogate backbone: temporal mean pooling by `stride`, spatial pooling to
/// 8x8 block means (floor-partition boundaries), then the channel lift.
/// Token rate becomes `fps / stride`.
pub fn surrogate_features(
    clip: &Clip,
    fps: f64,
    dim: usize,
    stride: usize,
    lift: ChannelLift,
) -> Result<FeatureMap, SynthError> {
    let shape = clip.shape();
    if shape.height < 8 || shape.width < 8 {
        return Err(SynthError::SpatialTooSmall {
            height: shape.height,
            width: shape.width,
        });
    }
    if stride == 0 || clip.len() % stride != 0 {
        return Err(SynthError::StrideMismatch {
            stride,
            frames: clip.len(),
        });
    }
    let t_prime = clip.len() / stride;
    let channels = shape.channels;
    let matrix: Vec<f64> = match lift {
        ChannelLift::Identity => {
            if dim != channels {
                return Err(SynthError::IdentityLift { dim, channels });
            }
            let mut m = vec![0.0; dim * channels];
            for d in 0..dim {
                m[d * channels + d] = 1.0;
            }
            m
        }
        ChannelLift::Seeded(seed) => {
            let lift_seed = rng::derive(seed, TAG_LIFT);
            let mut m = vec![0.0; dim * channels];
            for d in 0..dim {
                let row = &mut m[d * channels..(d + 1) * channels];
                for (c, slot) in row.iter_mut().enumerate() {
                    *slot = rng::normal_f64(lift_seed, (d * channels + c) as u64);
                }
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                debug_assert!(norm > 0.0, "degenerate lift row");
                for slot in row.iter_mut() {
                    *slot /= norm;
                }
            }
            m
        }
    };

    // Pooled pixel block means per (t', c, by, bx), then lifted to `dim`.
    let blocks = 8usize;
    let mut pooled = vec![0.0; t_prime * channels * blocks * blocks];
    for tp in 0..t_prime {
        for c in 0..channels {
            for by in 0..blocks {
                let y0 = by * shape.height / blocks;
                let y1 = (by + 1) * shape.height / blocks;
                for bx in 0..blocks {
                    let x0 = bx * shape.width / blocks;
                    let x1 = (bx + 1) * shape.width / blocks;
                    let mut sum = 0.0;
                    for dt in 0..stride {
                        let frame = &clip.frames()[tp * stride + dt];
                        for y in y0..y1 {
                            for x in x0..x1 {
                                sum += frame.get(c, y, x);
                            }
                        }
                    }
                    let count = (stride * (y1 - y0) * (x1 - x0)) as f64;
                    pooled[((tp * channels + c) * blocks + by) * blocks + bx] = sum / count;
                }
            }
        }
    }

    let mut data = vec![0.0; dim * t_prime * blocks * blocks];
    for d in 0..dim {
        for tp in 0..t_prime {
            for by in 0..blocks {
                for bx in 0..blocks {
                    let mut value = 0.0;
                    for c in 0..channels {
                        value += matrix[d * channels + c]
                            * pooled[((tp * channels + c) * blocks + by) * blocks + bx];
                    }
                    data[((d * t_prime + tp) * blocks + by) * blocks + bx] = value;
                }
            }
        }
    }
    Ok(FeatureMap::new(
        dim,
        t_prime,
        blocks,
        blocks,
        fps / stride as f64,
        data,
    )?)
}

/// Time series of the real part of one spatial DFT coefficient, evaluated by
/// direct summation per frame. The probe mode must lie outside the replaced
/// low-frequency region, otherwise the reading says nothing about dynamics
/// surviving the transfer.
pub fn extract_mode_signal(
    clip: &Clip,
    mode: (usize, usize),
    channel: usize,
    mask: &LowFreqMask,
) -> Result<Vec<f64>, SynthError> {
    let shape = clip.shape();
    let (u, v) = mode;
    if channel >= shape.channels {
        return Err(SynthError::ChannelOutOfRange {
            channel,
            channels: shape.channels,
        });
    }
    if u >= shape.height || v >= shape.width {
        return Err(SynthError::ModeOutOfRange {
            u,
            v,
            height: shape.height,
            width: shape.width,
        });
    }
    if mask.height() != shape.height || mask.width() != shape.width {
        return Err(SynthError::MaskMismatch {
            mask_height: mask.height(),
            mask_width: mask.width(),
            height: shape.height,
            width: shape.width,
        });
    }
    if mask.contains(u, v) {
        return Err(SynthError::ModeInsideMask { u, v });
    }
    // Re(sum p * exp(-i theta)) = sum p * cos(theta); one cosine table serves
    // every frame.
    let table: Vec<f64> = (0..shape.height)
        .flat_map(|y| {
            (0..shape.width).map(move |x| {
                let theta = 2.0
                    * std::f64::consts::PI
                    * (u as f64 * y as f64 / shape.height as f64
                        + v as f64 * x as f64 / shape.width as f64);
                theta.cos()
            })
        })
        .collect();
    Ok(clip
        .frames()
        .iter()
        .map(|frame| {
            frame
                .channel(channel)
                .iter()
                .zip(&table)
                .map(|(p, c)| p * c)
                .sum()
        })
        .collect())
}

/// The out-of-mask, non-DC spatial mode where the skin pattern concentrates
/// the most (real-part) energy — the natural probe for [`extract_mode_signal`].
pub fn dominant_pulse_mode(
    spec: &SynthSpec,
    mask: &LowFreqMask,
) -> Result<(usize, usize), SynthError> {
    if mask.height() != spec.height || mask.width() != spec.width {
        return Err(SynthError::MaskMismatch {
            mask_height: mask.height(),
            mask_width: mask.width(),
            height: spec.height,
            width: spec.width,
        });
    }
    let pattern = skin_pattern(spec)?;
    let frame = Frame::new(1, spec.height, spec.width, pattern)?;
    let spectrum = dft2(&frame);
    let mut best: Option<((usize, usize), f64)> = None;
    for u in 0..spec.height {
        for v in 0..spec.width {
            if (u, v) == (0, 0) || mask.contains(u, v) {
                continue;
            }
            let energy = spectrum.get(0, u, v).re.abs();
            match best {
                Some((_, top)) if energy <= top => {}
                _ => best = Some(((u, v), energy)),
            }
        }
    }
    match best {
        Some((mode, energy)) if energy > 0.0 => Ok(mode),
        _ => Err(SynthError::NoPulseMode),
    }
}
