//! Image representation and the low-level raster operations shared by every
//! other module: PNG I/O, Gaussian blur, resampling, color conversion and
//! projective warping.

pub mod border;
mod color;
mod filter;
mod homography;
mod image;
mod png_io;
mod resample;

pub use color::{chroma_energy, rgb_to_ycbcr, ycbcr_to_rgb};
pub use filter::{blur_radius, gaussian_blur, gaussian_blur_with_radius, gaussian_kernel, separable_filter};
pub use homography::{warp_projective, Homography};
pub use image::{sample_bilinear, Image, LUMA_WEIGHTS};
pub use png_io::{load_png, load_png_with_alpha, quantize, save_png, PngDepth};
pub use resample::{downsample_box, resize_bilinear};
