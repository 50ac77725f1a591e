use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use png::{BitDepth, ColorType};

use super::image::Image;
use crate::error::{Error, Result};

/// Storage depth for [`save_png`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PngDepth {
    #[default]
    Eight,
    Sixteen,
}

impl PngDepth {
    pub fn max_code(self) -> f64 {
        match self {
            PngDepth::Eight => 255.0,
            PngDepth::Sixteen => 65535.0,
        }
    }
}

impl std::str::FromStr for PngDepth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "8" => Ok(PngDepth::Eight),
            "16" => Ok(PngDepth::Sixteen),
            other => Err(Error::InvalidParameter(format!("bit depth must be 8 or 16, got {other}"))),
        }
    }
}

/// Loads an 8- or 16-bit grayscale/RGB PNG into `[0, 1]`; alpha is dropped.
pub fn load_png(path: impl AsRef<Path>) -> Result<Image> {
    load_png_with_alpha(path).map(|(img, _)| img)
}

/// Like [`load_png`], also returning the alpha plane when the file has one.
pub fn load_png_with_alpha(path: impl AsRef<Path>) -> Result<(Image, Option<Image>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info()?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf)?;

    let (color_channels, has_alpha) = match info.color_type {
        ColorType::Grayscale => (1, false),
        ColorType::GrayscaleAlpha => (1, true),
        ColorType::Rgb => (3, false),
        ColorType::Rgba => (3, true),
        ColorType::Indexed => {
            return Err(Error::UnsupportedPng(format!(
                "{}: indexed color is not supported",
                path.display()
            )))
        }
    };
    let (bytes_per_sample, max) = match info.bit_depth {
        BitDepth::Eight => (1, 255.0f32),
        BitDepth::Sixteen => (2, 65535.0f32),
        other => {
            return Err(Error::UnsupportedPng(format!(
                "{}: bit depth {:?} is not supported",
                path.display(),
                other
            )))
        }
    };

    let (w, h) = (info.width as usize, info.height as usize);
    let stride = color_channels + usize::from(has_alpha);
    let mut img = Image::new(w, h, color_channels);
    let mut alpha = has_alpha.then(|| Image::new(w, h, 1));
    let n = w * h;
    for y in 0..h {
        let line = &buf[y * info.line_size..];
        for x in 0..w {
            for s in 0..stride {
                let off = (x * stride + s) * bytes_per_sample;
                let code = if bytes_per_sample == 1 {
                    line[off] as f32
                } else {
                    u16::from_be_bytes([line[off], line[off + 1]]) as f32
                };
                let v = code / max;
                if s < color_channels {
                    img.data_mut()[s * n + y * w + x] = v;
                } else if let Some(a) = alpha.as_mut() {
                    a.data_mut()[y * w + x] = v;
                }
            }
        }
    }
    Ok((img, alpha))
}

/// Quantizes one sample: clamp to `[0, 1]`, then round half away from zero.
#[inline]
pub fn quantize(v: f32, depth: PngDepth) -> u16 {
    let max = depth.max_code();
    ((v as f64).clamp(0.0, 1.0) * max).round() as u16
}

/// Writes an image as an 8- or 16-bit grayscale/RGB PNG.
pub fn save_png(img: &Image, path: impl AsRef<Path>, depth: PngDepth) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = img.dims();
    if w == 0 || h == 0 {
        return Err(Error::InvalidParameter("cannot save an empty image".into()));
    }
    let ch = img.channels();
    let n = w * h;
    let bytes_per_sample = match depth {
        PngDepth::Eight => 1,
        PngDepth::Sixteen => 2,
    };
    let mut bytes = Vec::with_capacity(n * ch * bytes_per_sample);
    let data = img.data();
    for i in 0..n {
        for c in 0..ch {
            let q = quantize(data[c * n + i], depth);
            match depth {
                PngDepth::Eight => bytes.push(q as u8),
                PngDepth::Sixteen => bytes.extend_from_slice(&q.to_be_bytes()),
            }
        }
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    encoder.set_color(if ch == 1 { ColorType::Grayscale } else { ColorType::Rgb });
    encoder.set_depth(match depth {
        PngDepth::Eight => BitDepth::Eight,
        PngDepth::Sixteen => BitDepth::Sixteen,
    });
    let mut writer = encoder.write_header()?;
    writer.write_image_data(&bytes)?;
    writer.finish()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, w: u32, h: u32, color: ColorType, depth: BitDepth, data: &[u8]) {
        let file = File::create(path).unwrap();
        let mut enc = png::Encoder::new(BufWriter::new(file), w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut writer = enc.write_header().unwrap();
        writer.write_image_data(data).unwrap();
    }

    #[test]
    fn white_and_dark_red_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.png");
        write_raw(&p, 1, 1, ColorType::Rgb, BitDepth::Eight, &[255, 255, 255]);
        assert_eq!(load_png(&p).unwrap().data(), &[1.0, 1.0, 1.0]);
        write_raw(&p, 1, 1, ColorType::Rgb, BitDepth::Eight, &[128, 0, 0]);
        assert_eq!(load_png(&p).unwrap().data(), &[128.0 / 255.0, 0.0, 0.0]);
    }

    #[test]
    fn sixteen_bit_gray_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ramp.png");
        let img = Image::from_vec(2, 2, 1, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
        save_png(&img, &p, PngDepth::Sixteen).unwrap();
        let once = load_png(&p).unwrap();
        let p2 = dir.path().join("ramp2.png");
        save_png(&once, &p2, PngDepth::Sixteen).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(load_png(&p2).unwrap(), once);
        for (a, b) in once.data().iter().zip(img.data()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-7);
        }
    }

    #[test]
    fn quantization_rules() {
        assert_eq!(quantize(0.5, PngDepth::Eight), 128);
        assert_eq!(quantize(-0.1, PngDepth::Eight), 0);
        assert_eq!(quantize(1.7, PngDepth::Eight), 255);
        assert_eq!(quantize(1.0, PngDepth::Sixteen), 65535);
    }

    #[test]
    fn saved_bytes_follow_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.png");
        let img = Image::from_vec(3, 1, 1, vec![0.5, -0.1, 1.0]).unwrap();
        save_png(&img, &p, PngDepth::Eight).unwrap();
        let back = load_png(&p).unwrap();
        assert_eq!(back.data(), &[128.0 / 255.0, 0.0, 1.0]);
    }

    #[test]
    fn alpha_is_dropped_but_available() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        write_raw(&p, 1, 1, ColorType::Rgba, BitDepth::Eight, &[10, 20, 30, 51]);
        let (img, alpha) = load_png_with_alpha(&p).unwrap();
        assert_eq!(img.channels(), 3);
        assert_eq!(alpha.unwrap().data(), &[0.2]);
        assert_eq!(load_png(&p).unwrap().channels(), 3);
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_png(dir.path().join("nope.png")),
            Err(Error::MissingFile(_))
        ));
        let p = dir.path().join("low.png");
        write_raw(&p, 8, 1, ColorType::Grayscale, BitDepth::Four, &[0x12, 0x34, 0x56, 0x78]);
        assert!(matches!(load_png(&p), Err(Error::UnsupportedPng(_))));
        let bad = dir.path().join("nested/missing/out.png");
        assert!(save_png(&Image::new(1, 1, 1), bad, PngDepth::Eight).is_err());
    }
}
