use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgcore::{resize_bilinear, sample_bilinear, Image};

/// Middlebury `.flo` magic number ("PIEH" when read as ASCII).
pub const FLO_MAGIC: f32 = 202021.25;

/// Dense per-pixel displacement field.
///
/// `flow(p) = (u, v)` relates two frames by `a(p) ≈ b(p + flow(p))`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::uniform(width, height, 0.0, 0.0)
    }

    pub fn uniform(width: usize, height: usize, u: f32, v: f32) -> Self {
        FlowField {
            width,
            height,
            u: vec![u; width * height],
            v: vec![v; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> (f32, f32)) -> Self {
        let mut field = Self::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                let (u, v) = f(x, y);
                field.u[y * width + x] = u;
                field.v[y * width + x] = v;
            }
        }
        field
    }

    pub fn from_components(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        if u.len() != width * height || v.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} flow vectors", width * height),
                found: format!("{}/{}", u.len(), v.len()),
            });
        }
        if u.iter().chain(&v).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("flow components must be finite".into()));
        }
        Ok(FlowField { width, height, u, v })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, uv: (f32, f32)) {
        let i = y * self.width + x;
        self.u[i] = uv.0;
        self.v[i] = uv.1;
    }

    /// Bilinear sample at a real-valued position, clamped to the field.
    #[inline]
    pub fn sample(&self, x: f32, y: f32) -> (f32, f32) {
        (
            sample_bilinear(&self.u, self.width, self.height, x, y),
            sample_bilinear(&self.v, self.width, self.height, x, y),
        )
    }

    /// Bilinear resize to `w x h`, scaling `u` and `v` by the size ratios.
    pub fn resize_rescaled(&self, w: usize, h: usize) -> Result<FlowField> {
        if (w, h) == self.dims() {
            return Ok(self.clone());
        }
        let su = w as f32 / self.width as f32;
        let sv = h as f32 / self.height as f32;
        let u = Image::from_vec(self.width, self.height, 1, self.u.clone())?;
        let v = Image::from_vec(self.width, self.height, 1, self.v.clone())?;
        let u = resize_bilinear(&u, w, h)?.into_data().into_iter().map(|c| c * su).collect();
        let v = resize_bilinear(&v, w, h)?.into_data().into_iter().map(|c| c * sv).collect();
        FlowField::from_components(w, h, u, v)
    }

    /// Serializes to Middlebury `.flo` bytes.
    pub fn to_flo_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.u.len());
        out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
        out.extend_from_slice(&(self.width as i32).to_le_bytes());
        out.extend_from_slice(&(self.height as i32).to_le_bytes());
        for (u, v) in self.u.iter().zip(&self.v) {
            out.extend_from_slice(&u.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses Middlebury `.flo` bytes.
    pub fn from_flo_bytes(bytes: &[u8]) -> Result<FlowField> {
        if bytes.len() < 12 {
            return Err(Error::FlowFormat(format!("header truncated ({} bytes)", bytes.len())));
        }
        let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
        let magic = f32::from_le_bytes(word(0));
        if magic != FLO_MAGIC {
            return Err(Error::FlowFormat(format!("bad magic {magic}, expected {FLO_MAGIC}")));
        }
        let w = i32::from_le_bytes(word(4));
        let h = i32::from_le_bytes(word(8));
        if w <= 0 || h <= 0 {
            return Err(Error::FlowFormat(format!("invalid size {w}x{h}")));
        }
        let (w, h) = (w as usize, h as usize);
        let expected = w
            .checked_mul(h)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::FlowFormat("size overflow".into()))?;
        let payload = &bytes[12..];
        if payload.len() < expected {
            return Err(Error::FlowFormat(format!(
                "payload truncated: {} of {expected} bytes",
                payload.len()
            )));
        }
        if payload.len() > expected {
            return Err(Error::FlowFormat(format!(
                "{} trailing bytes after payload",
                payload.len() - expected
            )));
        }
        let mut u = Vec::with_capacity(w * h);
        let mut v = Vec::with_capacity(w * h);
        for px in payload.chunks_exact(8) {
            u.push(f32::from_le_bytes([px[0], px[1], px[2], px[3]]));
            v.push(f32::from_le_bytes([px[4], px[5], px[6], px[7]]));
        }
        FlowField::from_components(w, h, u, v).map_err(|_| Error::FlowFormat("non-finite flow values".into()))
    }
}

/// Reads a Middlebury `.flo` file.
pub fn load_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FlowField::from_flo_bytes(&bytes)
}

/// Writes a Middlebury `.flo` file.
pub fn save_flo(field: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, field.to_flo_bytes()).map_err(|e| Error::io(path, e))
}
