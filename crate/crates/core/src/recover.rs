//! Joint bilateral filtering of the focused frame under a clean guide.
//!
//! Range weights come from the guide's luma and are shared by all channels of
//! the filtered image. `sigma_range` is expressed in 8-bit code values.

use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgcore::{border, Image};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JbfParams {
    /// Odd window side in pixels.
    pub window: usize,
    /// Range sigma on the 0-255 scale.
    pub sigma_range: f64,
    /// Spatial sigma in pixels.
    pub sigma_spatial: f64,
}

impl Default for JbfParams {
    fn default() -> Self {
        JbfParams {
            window: 51,
            sigma_range: 10.0,
            sigma_spatial: 10.0,
        }
    }
}

impl JbfParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "JBF window must be odd and at least 3, got {}",
                self.window
            )));
        }
        for (name, s) in [("sigma_range", self.sigma_range), ("sigma_spatial", self.sigma_spatial)] {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {s}")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.window / 2
    }

    /// Range sigma on the unit intensity scale.
    #[inline]
    pub fn sigma_range_unit(&self) -> f64 {
        self.sigma_range / 255.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum JbfMethod {
    /// Bilateral grid.
    #[default]
    Fast,
    /// Direct windowed sum.
    Naive,
}

impl FromStr for JbfMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" | "grid" => Ok(JbfMethod::Fast),
            "naive" => Ok(JbfMethod::Naive),
            other => Err(Error::Parse(format!("unknown JBF method '{other}'"))),
        }
    }
}

fn check_inputs(input: &Image, guide: &Image, p: &JbfParams) -> Result<()> {
    p.validate()?;
    input.check_same_dims(guide)?;
    if input.width() == 0 || input.height() == 0 {
        return Err(Error::EmptyInput("JBF input is empty".into()));
    }
    Ok(())
}

/// Direct evaluation over the `window x window` neighbourhood with
/// half-sample symmetric borders.
pub fn jbf_naive(input: &Image, guide: &Image, p: &JbfParams) -> Result<Image> {
    check_inputs(input, guide, p)?;
    let (w, h) = input.dims();
    let g = guide.luma();
    let g = g.plane(0);
    let r = p.radius() as isize;
    let spatial: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * p.sigma_spatial * p.sigma_spatial)).exp())
        .collect();
    let sr = p.sigma_range_unit();
    let inv_2sr2 = 1.0 / (2.0 * sr * sr);
    let xs: Vec<usize> = (-r..w as isize + r).map(|i| border::reflect(i, w)).collect();
    let ys: Vec<usize> = (-r..h as isize + r).map(|i| border::reflect(i, h)).collect();
    let channels = input.channels();
    let n = w * h;

    let mut interleaved = vec![0.0f32; n * channels];
    interleaved
        .par_chunks_mut(w * channels)
        .enumerate()
        .for_each(|(y, row)| {
            let mut acc = vec![0.0f64; channels];
            for x in 0..w {
                let gp = g[y * w + x] as f64;
                acc.iter_mut().for_each(|a| *a = 0.0);
                let mut norm = 0.0f64;
                for (j, &ws_y) in spatial.iter().enumerate() {
                    let qy = ys[y + j];
                    for (i, &ws_x) in spatial.iter().enumerate() {
                        let q = qy * w + xs[x + i];
                        let d = g[q] as f64 - gp;
                        let wt = ws_y * ws_x * (-d * d * inv_2sr2).exp();
                        norm += wt;
                        for (c, a) in acc.iter_mut().enumerate() {
                            *a += wt * input.data()[c * n + q] as f64;
                        }
                    }
                }
                for c in 0..channels {
                    row[x * channels + c] = (acc[c] / norm) as f32;
                }
            }
        });
    Ok(deinterleave(w, h, channels, &interleaved))
}

fn deinterleave(w: usize, h: usize, channels: usize, data: &[f32]) -> Image {
    let n = w * h;
    let mut out = Image::new(w, h, channels);
    for c in 0..channels {
        for (i, o) in out.plane_mut(c).iter_mut().enumerate() {
            *o = data[i * channels + c];
        }
    }
    debug_assert_eq!(data.len(), n * channels);
    out
}

/// Grid padding in cells around the splatted region: two for the blur
/// support, one for trilinear neighbours.
const GRID_PAD: usize = 3;

/// Variance of the grid blur in squared cells. Linear splatting and linear
/// slicing each contribute 1/6, so the composite kernel has unit variance,
/// i.e. the requested sigma.
const GRID_BLUR_VARIANCE: f64 = 2.0 / 3.0;

fn grid_blur_taps() -> [f32; 5] {
    let mut taps = [0.0f64; 5];
    for (i, t) in taps.iter_mut().enumerate() {
        let k = i as f64 - 2.0;
        *t = (-k * k / (2.0 * GRID_BLUR_VARIANCE)).exp();
    }
    let z: f64 = taps.iter().sum();
    taps.map(|t| (t / z) as f32)
}

struct Grid {
    nx: usize,
    ny: usize,
    nz: usize,
    /// Accumulators per cell: one sum per channel, then the weight.
    stride: usize,
    data: Vec<f32>,
}

impl Grid {
    #[inline]
    fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ((iy * self.nx + ix) * self.nz + iz) * self.stride
    }
}

/// Bilateral-grid approximation of [`jbf_naive`].
///
/// The mirror-padded image (padding = window radius) is splatted with linear
/// weights into cells of `sigma_spatial` pixels by `sigma_range` levels, the
/// grid is blurred with a 5-tap Gaussian per axis, and each output pixel is
/// read back by trilinear interpolation at its position and guide value.
pub fn jbf_fast(input: &Image, guide: &Image, p: &JbfParams) -> Result<Image> {
    check_inputs(input, guide, p)?;
    let (w, h) = input.dims();
    let channels = input.channels();
    let stride = channels + 1;
    let n = w * h;
    let gl = guide.luma();
    let g = gl.plane(0);
    let r = p.radius();
    let ss = p.sigma_spatial;
    let sr = p.sigma_range_unit();
    let gmin = g.iter().copied().fold(f32::INFINITY, f32::min) as f64;
    let gmax = g.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;

    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let nx = ((pw - 1) as f64 / ss).floor() as usize + 1 + 2 * GRID_PAD;
    let ny = ((ph - 1) as f64 / ss).floor() as usize + 1 + 2 * GRID_PAD;
    let nz = ((gmax - gmin) / sr).floor() as usize + 1 + 2 * GRID_PAD;
    let pad = GRID_PAD as f64;

    let xs: Vec<usize> = (0..pw).map(|i| border::reflect(i as isize - r as isize, w)).collect();
    let ys: Vec<usize> = (0..ph).map(|i| border::reflect(i as isize - r as isize, h)).collect();
    // cell coordinate of every padded row/column: (lower index, upper weight)
    let cell = |i: usize| {
        let f = i as f64 / ss + pad;
        let i0 = f.floor();
        (i0 as usize, (f - i0) as f32)
    };
    let col_cells: Vec<(usize, f32)> = (0..pw).map(cell).collect();
    let row_cells: Vec<(usize, f32)> = (0..ph).map(cell).collect();
    let zc = |v: f32| {
        let f = (v as f64 - gmin) / sr + pad;
        let i0 = f.floor();
        (i0 as usize, (f - i0) as f32)
    };

    // Splat by gathering: each grid row collects the padded image rows that
    // touch it, so rows are filled independently and in a fixed order.
    let slab = nx * nz * stride;
    let mut grid = Grid {
        nx,
        ny,
        nz,
        stride,
        data: vec![0.0f32; ny * slab],
    };
    grid.data.par_chunks_mut(slab).enumerate().for_each(|(iy, out)| {
        for (py, &(cy, ty)) in row_cells.iter().enumerate() {
            let wy = if cy == iy {
                1.0 - ty
            } else if cy + 1 == iy {
                ty
            } else {
                continue;
            };
            if wy == 0.0 {
                continue;
            }
            let sy = ys[py];
            for (px, &(cx, tx)) in col_cells.iter().enumerate() {
                let q = sy * w + xs[px];
                let (cz, tz) = zc(g[q]);
                for (ix, wx) in [(cx, 1.0 - tx), (cx + 1, tx)] {
                    for (iz, wz) in [(cz, 1.0 - tz), (cz + 1, tz)] {
                        let wt = wy * wx * wz;
                        let base = (ix * nz + iz) * stride;
                        for c in 0..channels {
                            out[base + c] += wt * input.data()[c * n + q];
                        }
                        out[base + channels] += wt;
                    }
                }
            }
        }
    });

    blur_grid(&mut grid);

    let mut interleaved = vec![0.0f32; n * channels];
    interleaved
        .par_chunks_mut(w * channels)
        .enumerate()
        .for_each(|(y, row)| {
            let (cy, ty) = row_cells[y + r];
            let mut acc = vec![0.0f32; stride];
            for x in 0..w {
                let (cx, tx) = col_cells[x + r];
                let (cz, tz) = zc(g[y * w + x]);
                acc.iter_mut().for_each(|a| *a = 0.0);
                for (iy, wy) in [(cy, 1.0 - ty), (cy + 1, ty)] {
                    for (ix, wx) in [(cx, 1.0 - tx), (cx + 1, tx)] {
                        for (iz, wz) in [(cz, 1.0 - tz), (cz + 1, tz)] {
                            let wt = wy * wx * wz;
                            let base = grid.index(ix, iy, iz);
                            for (a, v) in acc.iter_mut().zip(&grid.data[base..base + stride]) {
                                *a += wt * v;
                            }
                        }
                    }
                }
                let norm = acc[channels];
                for c in 0..channels {
                    row[x * channels + c] = if norm > 1e-12 {
                        acc[c] / norm
                    } else {
                        input.data()[c * n + y * w + x]
                    };
                }
            }
        });
    Ok(deinterleave(w, h, channels, &interleaved))
}

fn blur_grid(grid: &mut Grid) {
    let taps = grid_blur_taps();
    let (nx, ny, nz, stride) = (grid.nx, grid.ny, grid.nz, grid.stride);
    let slab = nx * nz * stride;
    let line = nz * stride;

    // z and x stay inside one grid row
    grid.data.par_chunks_mut(slab).for_each(|row| {
        let mut tmp = vec![0.0f32; slab];
        for ix in 0..nx {
            for iz in 0..nz {
                let dst = ix * line + iz * stride;
                for (k, &t) in taps.iter().enumerate() {
                    let z = iz as isize + k as isize - 2;
                    if z < 0 || z >= nz as isize {
                        continue;
                    }
                    let src = ix * line + z as usize * stride;
                    for s in 0..stride {
                        tmp[dst + s] += t * row[src + s];
                    }
                }
            }
        }
        row.iter_mut().for_each(|v| *v = 0.0);
        for ix in 0..nx {
            for (k, &t) in taps.iter().enumerate() {
                let x = ix as isize + k as isize - 2;
                if x < 0 || x >= nx as isize {
                    continue;
                }
                let (dst, src) = (ix * line, x as usize * line);
                for s in 0..line {
                    row[dst + s] += t * tmp[src + s];
                }
            }
        }
    });

    let src = grid.data.clone();
    grid.data.par_chunks_mut(slab).enumerate().for_each(|(iy, row)| {
        row.iter_mut().for_each(|v| *v = 0.0);
        for (k, &t) in taps.iter().enumerate() {
            let y = iy as isize + k as isize - 2;
            if y < 0 || y >= ny as isize {
                continue;
            }
            let from = &src[y as usize * slab..(y as usize + 1) * slab];
            for (o, v) in row.iter_mut().zip(from) {
                *o += t * v;
            }
        }
    });
}

/// Filters the focused frame `i_f` under the guide `i_r`.
pub fn recover(i_f: &Image, i_r: &Image, p: &JbfParams) -> Result<Image> {
    recover_with(i_f, i_r, p, JbfMethod::Fast)
}

pub fn recover_with(i_f: &Image, i_r: &Image, p: &JbfParams, method: JbfMethod) -> Result<Image> {
    match method {
        JbfMethod::Fast => jbf_fast(i_f, i_r, p),
        JbfMethod::Naive => jbf_naive(i_f, i_r, p),
    }
}
