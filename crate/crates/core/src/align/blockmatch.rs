use rayon::prelude::*;

use super::flow::FlowField;
use crate::error::{Error, Result};
use crate::imgcore::{downsample_box, gaussian_blur, resize_bilinear, Image};

const PRESMOOTH: f64 = 1.5;
const PENALTY: f64 = 3e-4;

/// Parameters for the pyramidal block-matching estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockMatchParams {
    pub levels: usize,
    /// Search half-width in pixels at every level.
    pub radius: usize,
    pub block: usize,
    /// Gaussian sigma (pixels) applied to both luma images before matching;
    /// suppresses moire and evens out a focus difference. 0 disables it.
    pub presmooth: f64,
    /// Cost added per squared pixel of departure from the coarser estimate
    /// (or from zero, whichever is nearer), in luma² per pixel. Keeps
    /// textureless blocks from wandering.
    pub penalty: f64,
}

impl Default for BlockMatchParams {
    fn default() -> Self {
        BlockMatchParams {
            levels: 4,
            radius: 4,
            block: 8,
            presmooth: PRESMOOTH,
            penalty: PENALTY,
        }
    }
}

impl BlockMatchParams {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.block == 0 {
            return Err(Error::InvalidParameter("levels and block must be at least 1".into()));
        }
        if !(self.presmooth >= 0.0 && self.presmooth.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "presmooth sigma must be finite and non-negative, got {}",
                self.presmooth
            )));
        }
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "motion penalty must be finite and non-negative, got {}",
                self.penalty
            )));
        }
        Ok(())
    }

    /// Smallest frame side the pyramid accepts.
    pub fn min_side(&self) -> usize {
        self.block << (self.levels - 1)
    }

    /// Largest level count (up to `self.levels`) that fits a `w x h` frame.
    pub fn levels_for(&self, w: usize, h: usize) -> usize {
        let mut levels = self.levels.max(1);
        while levels > 1 && (w.min(h) >> (levels - 1)) < self.block {
            levels -= 1;
        }
        levels
    }
}

/// Coarse-to-fine block matching from `a` to `b`.
///
/// Returns `F` with `a(p) ≈ b(p + F(p))`. Each block searches integer
/// displacements within `±radius` of the upsampled coarser estimate and of
/// zero. The cost is the per-pixel SSD of mean-removed luma, so a brightness
/// offset between the cameras does not pull blocks along a gradient, plus
/// `penalty` times the squared distance to the nearer of those two centers;
/// equal costs resolve to the smallest displacement. Motion of faint texture
/// is underestimated where its matching gain is below the penalty. Block vectors sit
/// at block centers and are bilinearly interpolated to every pixel.
pub fn estimate_flow_blockmatch(a: &Image, b: &Image, params: BlockMatchParams) -> Result<FlowField> {
    params.validate()?;
    a.check_same_dims(b)?;
    let (w, h) = a.dims();
    if w.min(h) < params.min_side() {
        return Err(Error::TooSmall(format!(
            "{w}x{h} frame is too small for {} pyramid levels with {}-pixel blocks",
            params.levels, params.block
        )));
    }
    let smooth = |img: &Image| -> Result<Image> {
        let l = img.luma();
        if params.presmooth > 0.0 {
            gaussian_blur(&l, params.presmooth)
        } else {
            Ok(l)
        }
    };
    let mut pyr_a = vec![smooth(a)?];
    let mut pyr_b = vec![smooth(b)?];
    for _ in 1..params.levels {
        let na = downsample_box(pyr_a.last().unwrap(), 2)?;
        let nb = downsample_box(pyr_b.last().unwrap(), 2)?;
        pyr_a.push(na);
        pyr_b.push(nb);
    }

    let mut field: Option<FlowField> = None;
    for level in (0..params.levels).rev() {
        let (la, lb) = (&pyr_a[level], &pyr_b[level]);
        let (lw, lh) = la.dims();
        let predictor = match field.take() {
            Some(coarse) => upsample_flow(&coarse, lw, lh)?,
            None => FlowField::zeros(lw, lh),
        };
        field = Some(match_level(la, lb, &predictor, params)?);
    }
    Ok(field.expect("at least one level"))
}

/// Doubles a coarse field onto the next finer grid.
fn upsample_flow(coarse: &FlowField, w: usize, h: usize) -> Result<FlowField> {
    let (cw, ch) = coarse.dims();
    let u = Image::from_vec(cw, ch, 1, coarse.u().to_vec())?;
    let v = Image::from_vec(cw, ch, 1, coarse.v().to_vec())?;
    let u = resize_bilinear(&u, w, h)?.into_data().into_iter().map(|c| 2.0 * c).collect();
    let v = resize_bilinear(&v, w, h)?.into_data().into_iter().map(|c| 2.0 * c).collect();
    FlowField::from_components(w, h, u, v)
}

fn match_level(a: &Image, b: &Image, predictor: &FlowField, p: BlockMatchParams) -> Result<FlowField> {
    let (w, h) = a.dims();
    let nbx = w.div_ceil(p.block);
    let nby = h.div_ceil(p.block);
    let (pa, pb) = (a.plane(0), b.plane(0));
    let r = p.radius as i64;

    let vectors: Vec<(i64, i64)> = (0..nbx * nby)
        .into_par_iter()
        .map(|i| {
            let (bx, by) = (i % nbx, i / nbx);
            let x0 = bx * p.block;
            let y0 = by * p.block;
            let x1 = (x0 + p.block).min(w);
            let y1 = (y0 + p.block).min(h);
            let (cx, cy) = ((x0 + x1 - 1) / 2, (y0 + y1 - 1) / 2);
            let (pu, pv) = predictor.get(cx, cy);
            let (pu, pv) = (pu.round() as i64, pv.round() as i64);
            let mut best = (f64::INFINITY, i64::MAX, 0i64, 0i64);
            let centers: &[(i64, i64)] = if (pu, pv) == (0, 0) { &[(0, 0)] } else { &[(pu, pv), (0, 0)] };
            for &(cu, cv) in centers {
                for dy in cv - r..=cv + r {
                    for dx in cu - r..=cu + r {
                        let dist = ((dx - pu).pow(2) + (dy - pv).pow(2)).min(dx * dx + dy * dy) as f64;
                        let cost = block_zssd(pa, pb, w, h, (x0, y0, x1, y1), dx, dy) + p.penalty * dist;
                        let mag = dx * dx + dy * dy;
                        if cost < best.0 || (cost == best.0 && mag < best.1) {
                            best = (cost, mag, dx, dy);
                        }
                    }
                }
            }
            (best.2, best.3)
        })
        .collect();

    let centers_x: Vec<f32> = (0..nbx)
        .map(|bx| {
            let x0 = bx * p.block;
            (x0 + (x0 + p.block).min(w) - 1) as f32 / 2.0
        })
        .collect();
    let centers_y: Vec<f32> = (0..nby)
        .map(|by| {
            let y0 = by * p.block;
            (y0 + (y0 + p.block).min(h) - 1) as f32 / 2.0
        })
        .collect();
    let mut u = vec![0.0f32; w * h];
    let mut v = vec![0.0f32; w * h];
    u.par_chunks_mut(w)
        .zip(v.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (urow, vrow))| {
            let (j0, j1, fy) = bracket(&centers_y, y as f32);
            for x in 0..w {
                let (i0, i1, fx) = bracket(&centers_x, x as f32);
                let at = |i: usize, j: usize| vectors[j * nbx + i];
                let lerp2 = |sel: fn((i64, i64)) -> i64| {
                    let top = sel(at(i0, j0)) as f32 * (1.0 - fx) + sel(at(i1, j0)) as f32 * fx;
                    let bot = sel(at(i0, j1)) as f32 * (1.0 - fx) + sel(at(i1, j1)) as f32 * fx;
                    top * (1.0 - fy) + bot * fy
                };
                urow[x] = lerp2(|d| d.0);
                vrow[x] = lerp2(|d| d.1);
            }
        });
    FlowField::from_components(w, h, u, v)
}

/// Neighbouring sample indices and weight for `t` on a sorted center grid,
/// clamped at both ends.
fn bracket(centers: &[f32], t: f32) -> (usize, usize, f32) {
    let last = centers.len() - 1;
    if t <= centers[0] {
        return (0, 0, 0.0);
    }
    if t >= centers[last] {
        return (last, last, 0.0);
    }
    let i = centers.partition_point(|&c| c <= t) - 1;
    let f = (t - centers[i]) / (centers[i + 1] - centers[i]);
    (i, i + 1, f)
}

/// Mean squared difference of the two blocks after removing each block's mean.
fn block_zssd(
    a: &[f32],
    b: &[f32],
    w: usize,
    h: usize,
    (x0, y0, x1, y1): (usize, usize, usize, usize),
    dx: i64,
    dy: i64,
) -> f64 {
    let (wi, hi) = (w as i64 - 1, h as i64 - 1);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for y in y0..y1 {
        let by = (y as i64 + dy).clamp(0, hi) as usize;
        let arow = &a[y * w..(y + 1) * w];
        let brow = &b[by * w..(by + 1) * w];
        let (mut s, mut sq) = (0.0f32, 0.0f32);
        for x in x0..x1 {
            let bx = (x as i64 + dx).clamp(0, wi) as usize;
            let d = arow[x] - brow[bx];
            s += d;
            sq += d * d;
        }
        sum += s as f64;
        sum_sq += sq as f64;
    }
    let n = ((x1 - x0) * (y1 - y0)) as f64;
    let mean = sum / n;
    (sum_sq / n - mean * mean).max(0.0)
}
