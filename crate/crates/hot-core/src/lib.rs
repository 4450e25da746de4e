//! Core library for the `hot` toolkit.
//!
//! The pipeline this crate implements, end to end:
//!
//! 1. [`synth`] generates seeded synthetic video clips with a planted
//!    quasi-periodic pulse, plus reference frames with a different tint and
//!    illumination.
//! 2. [`spectral`] transfers low-frequency amplitude statistics from a
//!    reference frame onto every frame of a clip while preserving phase, so a
//!    clip can be restyled without touching its out-of-band content.
//! 3. [`harmonic`] pools feature maps into per-step tokens and computes a
//!    cyclic windowed-DFT descriptor: the ratio of second-harmonic to
//!    fundamental band energy at every token position.
//! 4. [`transport`] aligns two token sequences with entropic optimal
//!    transport under a cosine + harmonic-penalty cost.
//! 5. [`metrics`] scores recovered pulse signals and heart-rate estimates.
//! 6. [`tensor_io`] reads and writes the binary tensor container, the signal
//!    CSV table, and the `key=value` run configuration shared by the tools.
//!
//! All numeric work is in `f64`; files store `f32` payloads. Randomness is
//! counter-based ([`rng`]): every sample is a pure function of a seed and an
//! element index, so outputs are reproducible regardless of evaluation order
//! or thread count.

pub mod harmonic;
pub mod metrics;
pub mod parallel;
pub mod rng;
pub mod spectral;
pub mod synth;
pub mod tensor_io;
pub mod transport;

pub use spectral::{Clip, Frame, LowFreqMask, Spectrum};
pub use tensor_io::RunConfig;
