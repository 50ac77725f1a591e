//! Dual-camera video demoireing.
//!
//! A focused frame carries sharp texture and moire; a defocused frame of the
//! same scene is nearly moire-free but blurred. This crate provides:
//!
//! - [`synth`]: a screen-to-sensor simulator producing focused/defocused/ground-truth
//!   triples and constant-translation video sequences,
//! - [`align`]: optical-flow alignment of the defocused frame with occlusion masking,
//! - [`recover`]: joint bilateral filtering of the focused frame under a clean guide,
//! - [`metrics`]: PSNR, SSIM, temporal consistency and frequency-domain distances,
//! - [`pipeline`]: the frame-wise pipeline, its ablation modes and configuration.

pub mod align;
pub mod error;
pub mod imgcore;
pub mod metrics;
pub mod pipeline;
pub mod recover;
pub mod synth;

pub use error::{Error, Result};
pub use imgcore::Image;
