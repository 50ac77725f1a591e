//! The frame-wise pipeline: align the defocused frame, pick a guide, and
//! filter the focused frame under it.

mod config;
mod frame;
mod sequence;

pub use config::{FlowSource, PipelineConfig, PipelineMode};
pub use frame::{
    estimate_flows, resolve_flows, run_frame, run_frame_detailed, run_frame_with_flows, FlowPair, FrameResult,
};
pub use sequence::{list_frames, run_frame_lists, run_sequence, thread_count, worker_pool, SequenceOutput, RUN_MANIFEST_NAME, THREADS_ENV};
