use std::path::Path;

use log::warn;

use super::config::{FlowSource, PipelineConfig, PipelineMode};
use crate::align::{
    backward_warp, composite_aligned, estimate_flow_blockmatch, load_flo, occlusion_mask, FlowField,
    OcclusionMask,
};
use crate::error::{Error, Result};
use crate::imgcore::{resize_bilinear, Image};
use crate::recover::recover_with;

/// Forward flow (focused → defocused) and, when available, the reverse field.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowPair {
    pub forward: FlowField,
    pub backward: Option<FlowField>,
}

impl FlowPair {
    pub fn zeros(w: usize, h: usize) -> Self {
        FlowPair {
            forward: FlowField::zeros(w, h),
            backward: Some(FlowField::zeros(w, h)),
        }
    }

    /// Reads `.flo` files and rescales them to `w x h` when sized differently.
    pub fn load(forward: &Path, backward: Option<&Path>, w: usize, h: usize) -> Result<Self> {
        let forward = load_flo(forward)?.resize_rescaled(w, h)?;
        let backward = match backward {
            Some(p) => Some(load_flo(p)?.resize_rescaled(w, h)?),
            None => None,
        };
        Ok(FlowPair { forward, backward })
    }
}

/// Intermediate products of one pipeline pass.
#[derive(Clone, Debug)]
pub struct FrameResult {
    pub output: Image,
    /// `I_A`: the aligned defocused frame with occlusions filled from `I_F`.
    pub aligned: Image,
    /// `I_D'`: the warped defocused frame.
    pub warped: Image,
    pub mask: OcclusionMask,
    pub flow: FlowField,
}

fn working_size(w: usize, h: usize, limit: (usize, usize)) -> (usize, usize) {
    (w.min(limit.0), h.min(limit.1))
}

/// Block-matching flow in both directions at the configured working
/// resolution, upscaled to the frame size. `I_F(p) ≈ I_D(p + F(p))`.
pub fn estimate_flows(i_f: &Image, i_d: &Image, cfg: &PipelineConfig) -> Result<FlowPair> {
    i_f.check_same_dims(i_d)?;
    let (w, h) = i_f.dims();
    let (fw, fh) = working_size(w, h, cfg.flow_size);
    let (a, b) = if (fw, fh) == (w, h) {
        (i_f.clone(), i_d.clone())
    } else {
        (resize_bilinear(i_f, fw, fh)?, resize_bilinear(i_d, fw, fh)?)
    };
    let mut params = cfg.blockmatch;
    params.levels = params.levels_for(fw, fh);
    let forward = estimate_flow_blockmatch(&a, &b, params)?.resize_rescaled(w, h)?;
    let backward = estimate_flow_blockmatch(&b, &a, params)?.resize_rescaled(w, h)?;
    Ok(FlowPair {
        forward,
        backward: Some(backward),
    })
}

/// Flow for one frame according to `cfg.flow_source`. Estimation failures
/// degrade to zero flow with a warning.
pub fn resolve_flows(i_f: &Image, i_d: &Image, cfg: &PipelineConfig, stem: Option<&str>) -> Result<FlowPair> {
    let (w, h) = i_f.dims();
    match &cfg.flow_source {
        FlowSource::BlockMatch => match estimate_flows(i_f, i_d, cfg) {
            Ok(f) => Ok(f),
            Err(e @ Error::DimensionMismatch { .. }) => Err(e),
            Err(e) => {
                warn!("flow estimation failed ({e}); using zero flow");
                Ok(FlowPair::zeros(w, h))
            }
        },
        FlowSource::External { forward, backward } => FlowPair::load(forward, backward.as_deref(), w, h),
        FlowSource::ExternalDir(dir) => {
            let stem = stem.ok_or_else(|| {
                Error::InvalidParameter("a flow directory needs frame names to locate files".into())
            })?;
            let fwd = dir.join(format!("{stem}.flo"));
            let bwd = dir.join(format!("{stem}.bwd.flo"));
            FlowPair::load(&fwd, bwd.exists().then_some(bwd.as_path()), w, h)
        }
    }
}

/// Runs alignment, guide selection and recovery for one frame pair.
pub fn run_frame(i_f: &Image, i_d: &Image, cfg: &PipelineConfig, guide: Option<&Image>) -> Result<Image> {
    run_frame_detailed(i_f, i_d, cfg, guide).map(|r| r.output)
}

pub fn run_frame_detailed(
    i_f: &Image,
    i_d: &Image,
    cfg: &PipelineConfig,
    guide: Option<&Image>,
) -> Result<FrameResult> {
    check_frame_inputs(i_f, i_d, cfg, guide)?;
    let flows = if cfg.mode == PipelineMode::NoAlignment {
        None
    } else {
        Some(resolve_flows(i_f, i_d, cfg, None)?)
    };
    run_frame_with_flows(i_f, i_d, cfg, guide, flows)
}

fn check_frame_inputs(i_f: &Image, i_d: &Image, cfg: &PipelineConfig, guide: Option<&Image>) -> Result<()> {
    cfg.validate()?;
    i_f.check_same_shape(i_d)?;
    if let Some(g) = guide {
        i_f.check_same_dims(g)?;
    }
    if cfg.mode == PipelineMode::Guided && guide.is_none() {
        return Err(Error::MissingGuide);
    }
    Ok(())
}

/// As [`run_frame_detailed`] with precomputed flow. `None` (or
/// no-alignment mode) leaves the defocused frame unwarped.
pub fn run_frame_with_flows(
    i_f: &Image,
    i_d: &Image,
    cfg: &PipelineConfig,
    guide: Option<&Image>,
    flows: Option<FlowPair>,
) -> Result<FrameResult> {
    check_frame_inputs(i_f, i_d, cfg, guide)?;
    let (w, h) = i_f.dims();
    let flows = match flows {
        Some(f) if cfg.mode != PipelineMode::NoAlignment => Some(f),
        _ => None,
    };
    let (warped, aligned, mask, flow) = match flows {
        None => (
            i_d.clone(),
            i_d.clone(),
            OcclusionMask::all_valid(w, h),
            FlowField::zeros(w, h),
        ),
        Some(FlowPair { forward, backward }) => {
            if forward.dims() != (w, h) {
                return Err(Error::dims((w, h), forward.dims()));
            }
            let warped = backward_warp(i_d, &forward)?;
            let mask = match &backward {
                Some(b) => occlusion_mask(&forward, b, cfg.occlusion)?,
                None => {
                    warn!("no backward flow available; skipping the occlusion check");
                    OcclusionMask::all_valid(w, h)
                }
            };
            let aligned = composite_aligned(&warped, i_f, &mask)?;
            (warped, aligned, mask, forward)
        }
    };
    let g = match (cfg.mode, guide) {
        (PipelineMode::Guided, Some(g)) => g.clone(),
        (PipelineMode::NoJbf, Some(g)) => g.clone(),
        _ => aligned.clone(),
    };
    let output = match cfg.mode {
        PipelineMode::NoJbf => g,
        _ => recover_with(i_f, &g, &cfg.jbf, cfg.jbf_method)?,
    };
    Ok(FrameResult {
        output,
        aligned,
        warped,
        mask,
        flow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recover::{jbf_fast, JbfParams};

    fn textured(w: usize, h: usize, shift: f32) -> Image {
        Image::from_fn(w, h, 3, |x, y, c| {
            let (x, y) = (x as f32 - shift, y as f32);
            0.5 + 0.2 * (0.29 * x + c as f32).sin() * (0.19 * y).cos() + 0.1 * (0.07 * x * y / 40.0).sin()
        })
    }

    fn small_cfg(mode: PipelineMode) -> PipelineConfig {
        PipelineConfig {
            mode,
            jbf: JbfParams { window: 11, sigma_range: 10.0, sigma_spatial: 3.0 },
            ..Default::default()
        }
    }

    #[test]
    fn guided_requires_guide() {
        let img = textured(32, 32, 0.0);
        let r = run_frame(&img, &img, &small_cfg(PipelineMode::Guided), None);
        assert!(matches!(r, Err(Error::MissingGuide)));
        assert!(run_frame(&img, &img, &small_cfg(PipelineMode::Guided), Some(&img)).is_ok());
    }

    #[test]
    fn identical_pair_is_self_filtering() {
        let img = textured(64, 64, 0.0);
        let cfg = small_cfg(PipelineMode::JbfOnly);
        let out = run_frame(&img, &img, &cfg, None).unwrap();
        let oracle = jbf_fast(&img, &img, &cfg.jbf).unwrap();
        assert_eq!(out, oracle);
        for c in 0..3 {
            assert!((out.channel_mean(c) - img.channel_mean(c)).abs() <= 2.0 / 255.0);
        }
    }

    #[test]
    fn no_jbf_with_full_mask_returns_warped() {
        let f = textured(64, 48, 0.0);
        let d = textured(64, 48, 2.0);
        let cfg = small_cfg(PipelineMode::NoJbf);
        let flow = FlowField::uniform(64, 48, 2.0, 0.0);
        let pair = FlowPair {
            forward: flow.clone(),
            backward: Some(FlowField::uniform(64, 48, -2.0, 0.0)),
        };
        let r = run_frame_with_flows(&f, &d, &cfg, None, Some(pair)).unwrap();
        assert_eq!(r.mask.valid_count(), 64 * 48);
        assert_eq!(r.output, backward_warp(&d, &flow).unwrap());
    }

    #[test]
    fn no_alignment_uses_defocused_frame() {
        let f = textured(40, 40, 0.0);
        let d = textured(40, 40, 3.0);
        let cfg = small_cfg(PipelineMode::NoAlignment);
        let r = run_frame_detailed(&f, &d, &cfg, None).unwrap();
        assert_eq!(r.aligned, d);
        assert_eq!(r.output, jbf_fast(&f, &d, &cfg.jbf).unwrap());
    }

    #[test]
    fn mismatched_frames_are_rejected() {
        let f = textured(40, 40, 0.0);
        let d = textured(40, 32, 0.0);
        assert!(run_frame(&f, &d, &small_cfg(PipelineMode::JbfOnly), None).is_err());
    }

    #[test]
    fn tiny_frames_fall_back_to_zero_flow() {
        let f = textured(6, 6, 0.0);
        let cfg = small_cfg(PipelineMode::NoJbf);
        let r = run_frame_detailed(&f, &f, &cfg, None).unwrap();
        assert!(r.flow.u().iter().all(|&u| u == 0.0));
        assert_eq!(r.output, f);
    }

    #[test]
    fn flow_is_upscaled_from_working_size() {
        let f = textured(128, 64, 0.0);
        let d = textured(128, 64, 4.0);
        let cfg = PipelineConfig { flow_size: (64, 32), ..small_cfg(PipelineMode::JbfOnly) };
        let flows = estimate_flows(&f, &d, &cfg).unwrap();
        assert_eq!(flows.forward.dims(), (128, 64));
        let mut us: Vec<f32> = flows.forward.u().to_vec();
        us.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = us[us.len() / 2];
        assert!((median - 4.0).abs() <= 1.0, "median {median}");
    }
}
