use super::image::{sample_bilinear, Image};
use crate::error::{Error, Result};

/// Bilinear resize with pixel-center mapping (align-corners false).
///
/// Output pixel `i` samples the source at `(i + 0.5) * in / out - 0.5`,
/// clamped to the valid range. A same-size call returns the input unchanged.
pub fn resize_bilinear(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidParameter(format!(
            "resize target must be non-empty, got {out_w}x{out_h}"
        )));
    }
    let (w, h) = img.dims();
    if w == 0 || h == 0 {
        return Err(Error::TooSmall("cannot resize an empty image".into()));
    }
    if (w, h) == (out_w, out_h) {
        return Ok(img.clone());
    }
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let xs: Vec<f32> = (0..out_w).map(|i| ((i as f64 + 0.5) * sx - 0.5) as f32).collect();
    let ys: Vec<f32> = (0..out_h).map(|j| ((j as f64 + 0.5) * sy - 0.5) as f32).collect();
    let mut out = Image::new(out_w, out_h, img.channels());
    for c in 0..img.channels() {
        let src = img.plane(c);
        let dst = out.plane_mut(c);
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                dst[j * out_w + i] = sample_bilinear(src, w, h, x, y);
            }
        }
    }
    Ok(out)
}

/// Area-average downsampling by an integer factor.
///
/// Each output pixel is the mean of a `factor x factor` block; trailing
/// rows/columns that do not fill a whole block are dropped.
pub fn downsample_box(img: &Image, factor: usize) -> Result<Image> {
    if factor == 0 {
        return Err(Error::InvalidParameter("downsample factor must be >= 1".into()));
    }
    let (w, h) = img.dims();
    let (ow, oh) = (w / factor, h / factor);
    if ow == 0 || oh == 0 {
        return Err(Error::TooSmall(format!(
            "{w}x{h} image cannot be reduced by {factor}"
        )));
    }
    let norm = 1.0 / (factor * factor) as f32;
    let mut out = Image::new(ow, oh, img.channels());
    for c in 0..img.channels() {
        let src = img.plane(c);
        let dst = out.plane_mut(c);
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0f32;
                for dy in 0..factor {
                    let row = &src[(oy * factor + dy) * w + ox * factor..];
                    acc += row[..factor].iter().sum::<f32>();
                }
                dst[oy * ow + ox] = acc * norm;
            }
        }
    }
    Ok(out)
}
