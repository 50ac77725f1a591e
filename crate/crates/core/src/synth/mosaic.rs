use crate::error::{Error, Result};
use crate::imgcore::Image;

/// Orientation of the RGB stripes inside each 3x3 screen cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StripeLayout {
    /// Columns R, G, B repeated over three rows.
    #[default]
    Vertical,
    /// Rows R, G, B repeated over three columns.
    Horizontal,
}

/// Color filter array arrangement, named by the top-left 2x2 tile read row by row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BayerPattern {
    #[default]
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl BayerPattern {
    /// Channel index (0 = R, 1 = G, 2 = B) sampled at `(x, y)`.
    #[inline]
    pub fn channel_at(self, x: usize, y: usize) -> usize {
        let tile = match self {
            BayerPattern::Rggb => [[0, 1], [1, 2]],
            BayerPattern::Bggr => [[2, 1], [1, 0]],
            BayerPattern::Grbg => [[1, 0], [2, 1]],
            BayerPattern::Gbrg => [[1, 2], [0, 1]],
        };
        tile[y & 1][x & 1]
    }
}

impl std::str::FromStr for BayerPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rggb" => Ok(BayerPattern::Rggb),
            "bggr" => Ok(BayerPattern::Bggr),
            "grbg" => Ok(BayerPattern::Grbg),
            "gbrg" => Ok(BayerPattern::Gbrg),
            other => Err(Error::InvalidParameter(format!("unknown Bayer pattern {other}"))),
        }
    }
}

/// Expands each pixel into a 3x3 cell of emitting subpixels.
///
/// With the vertical layout, cell column 0 lights only the R plane, column 1
/// only G and column 2 only B; every other plane sample is zero.
pub fn subpixel_mosaic(gt: &Image, layout: StripeLayout) -> Result<Image> {
    gt.require_rgb()?;
    let (w, h) = gt.dims();
    Ok(Image::from_fn(3 * w, 3 * h, 3, |x, y, c| {
        let lit = match layout {
            StripeLayout::Vertical => x % 3,
            StripeLayout::Horizontal => y % 3,
        };
        if lit == c {
            gt.get(x / 3, y / 3, c)
        } else {
            0.0
        }
    }))
}

/// Samples one color per photosite through the color filter array.
pub fn bayer_sample(img: &Image, pattern: BayerPattern) -> Result<Image> {
    img.require_rgb()?;
    let (w, h) = img.dims();
    Ok(Image::from_fn(w, h, 1, |x, y, _| {
        img.get(x, y, pattern.channel_at(x, y))
    }))
}
