//! Gradient-corrected linear demosaicing (Malvar, He & Cutler, 2004).
//!
//! Each missing color is a bilinear estimate plus a scaled Laplacian of the
//! color that was actually sampled at the site. The eight-fold scaled 5x5
//! stencils are:
//!
//! ```text
//!   G at R/B            R at G (R left/right)   R at G (R above/below)   R at B
//!   .  .  -1  .  .      .  .  1/2  .  .         .  .  -1  .  .           .  . -3/2 .  .
//!   .  .   2  .  .      . -1   .  -1  .         . -1   4  -1  .          .  2   .  2  .
//!  -1  2   4  2 -1     -1  4   5   4 -1        1/2 .   5   .  1/2      -3/2 .   6  . -3/2
//!   .  .   2  .  .      . -1   .  -1  .         . -1   4  -1  .          .  2   .  2  .
//!   .  .  -1  .  .      .  .  1/2  .  .         .  .  -1  .  .           .  . -3/2 .  .
//! ```
//!
//! B is recovered with the same stencils with the roles of R and B swapped.

use rayon::prelude::*;

use super::mosaic::BayerPattern;
use crate::error::{Error, Result};
use crate::imgcore::{border, Image};

pub type Stencil = [[f32; 5]; 5];

pub const G_AT_RB: Stencil = [
    [0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [-1.0, 2.0, 4.0, 2.0, -1.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0],
];

/// Missing color sampled to the left and right of a green site.
pub const RB_AT_G_ROW: Stencil = [
    [0.0, 0.0, 0.5, 0.0, 0.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [-1.0, 4.0, 5.0, 4.0, -1.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.5, 0.0, 0.0],
];

/// Missing color sampled above and below a green site.
pub const RB_AT_G_COL: Stencil = [
    [0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, -1.0, 4.0, -1.0, 0.0],
    [0.5, 0.0, 5.0, 0.0, 0.5],
    [0.0, -1.0, 4.0, -1.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0],
];

/// R at a B site, or B at an R site.
pub const RB_AT_BR: Stencil = [
    [0.0, 0.0, -1.5, 0.0, 0.0],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [-1.5, 0.0, 6.0, 0.0, -1.5],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [0.0, 0.0, -1.5, 0.0, 0.0],
];

pub const STENCIL_SCALE: f32 = 1.0 / 8.0;

/// Stencil estimating `channel` at `(x, y)`; `None` when the site samples it.
pub fn stencil_for(pattern: BayerPattern, x: usize, y: usize, channel: usize) -> Option<&'static Stencil> {
    let site = pattern.channel_at(x, y);
    if site == channel {
        return None;
    }
    if channel == 1 {
        return Some(&G_AT_RB);
    }
    if site == 1 {
        // green site: is the wanted color on this row?
        if pattern.channel_at(x + 1, y) == channel {
            Some(&RB_AT_G_ROW)
        } else {
            Some(&RB_AT_G_COL)
        }
    } else {
        Some(&RB_AT_BR)
    }
}

fn check_mosaic(mosaic: &Image) -> Result<()> {
    mosaic.require_gray()?;
    let (w, h) = mosaic.dims();
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "mosaic dimensions must be even, got {w}x{h}"
        )));
    }
    if w < 4 || h < 4 {
        return Err(Error::TooSmall(format!("mosaic must be at least 4x4, got {w}x{h}")));
    }
    Ok(())
}

/// Demosaics without the final clamp, exposing the raw stencil responses.
pub fn demosaic_unclamped(mosaic: &Image, pattern: BayerPattern) -> Result<Image> {
    check_mosaic(mosaic)?;
    let (w, h) = mosaic.dims();
    let src = mosaic.plane(0);

    // 2-pixel whole-sample mirror keeps the CFA phase across the border
    let pw = w + 4;
    let ph = h + 4;
    let mut padded = vec![0.0f32; pw * ph];
    for py in 0..ph {
        let sy = border::reflect101(py as isize - 2, h);
        for px in 0..pw {
            let sx = border::reflect101(px as isize - 2, w);
            padded[py * pw + px] = src[sy * w + sx];
        }
    }

    let n = w * h;
    let mut out = vec![0.0f32; 3 * n];
    let (r_plane, rest) = out.split_at_mut(n);
    let (g_plane, b_plane) = rest.split_at_mut(n);
    r_plane
        .par_chunks_mut(w)
        .zip(g_plane.par_chunks_mut(w))
        .zip(b_plane.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((r_row, g_row), b_row))| {
            for x in 0..w {
                let center = padded[(y + 2) * pw + x + 2];
                let rows = [&mut *r_row, &mut *g_row, &mut *b_row];
                for (c, row) in rows.into_iter().enumerate() {
                    row[x] = match stencil_for(pattern, x, y, c) {
                        None => center,
                        Some(st) => {
                            let mut acc = 0.0f32;
                            for (dy, st_row) in st.iter().enumerate() {
                                let line = &padded[(y + dy) * pw + x..];
                                for (dx, &k) in st_row.iter().enumerate() {
                                    if k != 0.0 {
                                        acc += k * line[dx];
                                    }
                                }
                            }
                            acc * STENCIL_SCALE
                        }
                    };
                }
            }
        });
    Image::from_vec(w, h, 3, out)
}

/// Gradient-corrected linear demosaic, clamped to `[0, 1]`.
pub fn demosaic(mosaic: &Image, pattern: BayerPattern) -> Result<Image> {
    let mut out = demosaic_unclamped(mosaic, pattern)?;
    out.clamp01_in_place();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::mosaic::bayer_sample;

    #[test]
    fn every_stencil_has_unit_dc_gain() {
        for st in [&G_AT_RB, &RB_AT_G_ROW, &RB_AT_G_COL, &RB_AT_BR] {
            let s: f32 = st.iter().flatten().sum();
            assert_eq!(s * STENCIL_SCALE, 1.0);
        }
    }

    #[test]
    fn constant_image_reproduced() {
        let img = Image::from_fn(10, 8, 3, |_, _, c| [0.3, 0.55, 0.8][c]);
        for pattern in [BayerPattern::Rggb, BayerPattern::Bggr, BayerPattern::Grbg, BayerPattern::Gbrg] {
            let m = bayer_sample(&img, pattern).unwrap();
            let out = demosaic(&m, pattern).unwrap();
            for (a, b) in out.data().iter().zip(img.data()) {
                assert!((a - b).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn odd_or_tiny_mosaics_are_rejected() {
        assert!(demosaic(&Image::new(5, 4, 1), BayerPattern::Rggb).is_err());
        assert!(demosaic(&Image::new(4, 7, 1), BayerPattern::Rggb).is_err());
        assert!(demosaic(&Image::new(2, 2, 1), BayerPattern::Rggb).is_err());
        assert!(demosaic(&Image::new(4, 4, 3), BayerPattern::Rggb).is_err());
    }

    #[test]
    fn stencil_selection_for_rggb() {
        let p = BayerPattern::Rggb;
        assert!(stencil_for(p, 0, 0, 0).is_none());
        assert_eq!(stencil_for(p, 0, 0, 1), Some(&G_AT_RB));
        assert_eq!(stencil_for(p, 0, 0, 2), Some(&RB_AT_BR));
        assert_eq!(stencil_for(p, 1, 0, 0), Some(&RB_AT_G_ROW));
        assert_eq!(stencil_for(p, 1, 0, 2), Some(&RB_AT_G_COL));
        assert_eq!(stencil_for(p, 0, 1, 0), Some(&RB_AT_G_COL));
        assert_eq!(stencil_for(p, 0, 1, 2), Some(&RB_AT_G_ROW));
        assert_eq!(stencil_for(p, 1, 1, 0), Some(&RB_AT_BR));
    }
}
