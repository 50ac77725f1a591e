//! Synthetic focused/defocused data generation.

mod chain;
pub mod dataset;
pub mod demosaic;
mod mosaic;
pub mod testcard;

/// Linear subpixel expansion of a screen pixel.
pub const SUBPIXEL_FACTOR: usize = 3;

pub use chain::{
    aligned_gt, brightness_compensate, composite_foreground, draw_video_params, frame_homography, gt_homography,
    random_homography,
    sample_rng, synth_pair, synth_video, warped_mosaic, BrightnessMode, Foreground, SynthConfig,
    SyntheticSample, VideoParams, VideoSynthConfig,
};
pub use demosaic::{demosaic, demosaic_unclamped};
pub use mosaic::{bayer_sample, subpixel_mosaic, BayerPattern, StripeLayout};
