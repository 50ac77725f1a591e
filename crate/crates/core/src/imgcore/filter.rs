use rayon::prelude::*;

use super::border;
use super::image::Image;
use crate::error::{Error, Result};

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f32> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| (w / z) as f32).collect()
}

/// Truncation radius used by [`gaussian_blur`]: `ceil(3 * sigma)`.
pub fn blur_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

/// Separable Gaussian blur with radius `ceil(3 * sigma)` and half-sample
/// symmetric borders.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "blur sigma must be positive, got {sigma}"
        )));
    }
    Ok(gaussian_blur_with_radius(img, sigma, blur_radius(sigma)))
}

/// Separable Gaussian blur truncated at an explicit radius.
pub fn gaussian_blur_with_radius(img: &Image, sigma: f64, radius: usize) -> Image {
    let kernel = gaussian_kernel(sigma, radius);
    separable_filter(img, &kernel)
}

/// Applies the same symmetric 1-D kernel along rows then columns.
pub fn separable_filter(img: &Image, kernel: &[f32]) -> Image {
    let (w, h) = img.dims();
    let mut out = img.clone();
    if w == 0 || h == 0 {
        return out;
    }
    let r = (kernel.len() / 2) as isize;
    for c in 0..img.channels() {
        let src = img.plane(c);
        let mut tmp = vec![0.0f32; w * h];
        tmp.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            let line = &src[y * w..(y + 1) * w];
            for (x, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0f32;
                for (k, &wk) in kernel.iter().enumerate() {
                    let xi = border::reflect(x as isize + k as isize - r, w);
                    acc += wk * line[xi];
                }
                *o = acc;
            }
        });
        out.plane_mut(c)
            .par_chunks_mut(w)
            .enumerate()
            .for_each(|(y, row)| {
                for (k, &wk) in kernel.iter().enumerate() {
                    let yi = border::reflect(y as isize + k as isize - r, h);
                    let line = &tmp[yi * w..(yi + 1) * w];
                    if k == 0 {
                        for (o, &v) in row.iter_mut().zip(line) {
                            *o = wk * v;
                        }
                    } else {
                        for (o, &v) in row.iter_mut().zip(line) {
                            *o += wk * v;
                        }
                    }
                }
            });
    }
    out
}
