use rayon::prelude::*;

use super::flow::FlowField;
use super::mask::OcclusionMask;
use crate::error::{Error, Result};
use crate::imgcore::{sample_bilinear, Image};

/// Forward-backward consistency thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OcclusionParams {
    pub alpha: f32,
    pub beta: f32,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        OcclusionParams { alpha: 0.01, beta: 0.5 }
    }
}

impl OcclusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "occlusion thresholds must be non-negative (alpha {}, beta {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

fn check_flow_dims(img: (usize, usize), flow: &FlowField) -> Result<()> {
    if img != flow.dims() {
        return Err(Error::dims(img, flow.dims()));
    }
    Ok(())
}

/// `out(p) = img(p + flow(p))`, bilinear with clamp-to-edge.
pub fn backward_warp(img: &Image, flow: &FlowField) -> Result<Image> {
    check_flow_dims(img.dims(), flow)?;
    let (w, h) = img.dims();
    let mut out = Image::new(w, h, img.channels());
    for c in 0..img.channels() {
        let src = img.plane(c);
        out.plane_mut(c)
            .par_chunks_mut(w)
            .enumerate()
            .for_each(|(y, row)| {
                for (x, o) in row.iter_mut().enumerate() {
                    let (u, v) = flow.get(x, y);
                    *o = sample_bilinear(src, w, h, x as f32 + u, y as f32 + v);
                }
            });
    }
    Ok(out)
}

/// Marks `p` valid when the backward flow sampled at `p + fwd(p)` cancels
/// the forward flow within `alpha·(|fwd|² + |bwd|²) + beta`.
pub fn occlusion_mask(fwd: &FlowField, bwd: &FlowField, params: OcclusionParams) -> Result<OcclusionMask> {
    params.validate()?;
    check_flow_dims(fwd.dims(), bwd)?;
    let (w, h) = fwd.dims();
    let mut data = vec![0u8; w * h];
    data.par_chunks_mut(w.max(1)).enumerate().for_each(|(y, row)| {
        for (x, m) in row.iter_mut().enumerate() {
            let (fu, fv) = fwd.get(x, y);
            let (bu, bv) = bwd.sample(x as f32 + fu, y as f32 + fv);
            let (su, sv) = (fu + bu, fv + bv);
            let lhs = su * su + sv * sv;
            let rhs = params.alpha * (fu * fu + fv * fv + bu * bu + bv * bv) + params.beta;
            *m = u8::from(lhs <= rhs);
        }
    });
    Ok(OcclusionMask::from_raw(w, h, data))
}

/// `warped·M + focused·(1 − M)`.
pub fn composite_aligned(warped_d: &Image, focused: &Image, mask: &OcclusionMask) -> Result<Image> {
    warped_d.check_same_shape(focused)?;
    if mask.dims() != focused.dims() {
        return Err(Error::dims(focused.dims(), mask.dims()));
    }
    let mut out = focused.clone();
    for c in 0..focused.channels() {
        let src = warped_d.plane(c);
        for (i, o) in out.plane_mut(c).iter_mut().enumerate() {
            if mask.values()[i] != 0 {
                *o = src[i];
            }
        }
    }
    Ok(out)
}
