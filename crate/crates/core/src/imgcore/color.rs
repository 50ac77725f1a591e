use super::image::Image;
use crate::error::Result;

/// RGB to full-range BT.601 YCbCr. Y lands in `[0, 1]`, Cb/Cr in `[-0.5, 0.5]`.
pub fn rgb_to_ycbcr(img: &Image) -> Result<Image> {
    img.require_rgb()?;
    let n = img.plane_len();
    let mut out = Image::new(img.width(), img.height(), 3);
    let src = img.data();
    let dst = out.data_mut();
    for i in 0..n {
        let (r, g, b) = (src[i], src[n + i], src[2 * n + i]);
        dst[i] = 0.299 * r + 0.587 * g + 0.114 * b;
        dst[n + i] = -0.168_736 * r - 0.331_264 * g + 0.5 * b;
        dst[2 * n + i] = 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    }
    Ok(out)
}

/// Inverse of [`rgb_to_ycbcr`].
pub fn ycbcr_to_rgb(img: &Image) -> Result<Image> {
    img.require_rgb()?;
    let n = img.plane_len();
    let mut out = Image::new(img.width(), img.height(), 3);
    let src = img.data();
    let dst = out.data_mut();
    for i in 0..n {
        let (y, cb, cr) = (src[i], src[n + i], src[2 * n + i]);
        dst[i] = y + 1.402 * cr;
        dst[n + i] = y - 0.344_136 * cb - 0.714_136 * cr;
        dst[2 * n + i] = y + 1.772 * cb;
    }
    Ok(out)
}

/// Mean of `|Cb| + |Cr|` over all pixels; zero for achromatic images.
pub fn chroma_energy(img: &Image) -> Result<f64> {
    let ycc = rgb_to_ycbcr(img)?;
    let n = ycc.plane_len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = ycc
        .plane(1)
        .iter()
        .zip(ycc.plane(2))
        .map(|(&cb, &cr)| (cb.abs() + cr.abs()) as f64)
        .sum();
    Ok(total / n as f64)
}
