//! Flow estimation and I/O, backward warping, forward-backward occlusion
//! detection and aligned-frame compositing.

mod blockmatch;
mod flow;
mod mask;
mod warp;

pub use blockmatch::{estimate_flow_blockmatch, BlockMatchParams};
pub use flow::{load_flo, save_flo, FlowField, FLO_MAGIC};
pub use mask::OcclusionMask;
pub use warp::{backward_warp, composite_aligned, occlusion_mask, OcclusionParams};
