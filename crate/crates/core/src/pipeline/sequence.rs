use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;

use super::config::{FlowSource, PipelineConfig, PipelineMode};
use super::frame::{resolve_flows, run_frame_with_flows};
use crate::error::{Error, Result};
use crate::imgcore::{load_png, save_png};
use crate::synth::dataset::list_pngs;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DUALMOIRE_THREADS";

pub const RUN_MANIFEST_NAME: &str = "run_manifest.txt";

/// Worker count from [`THREADS_ENV`], or the number of CPUs when unset.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Parse(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// A rayon pool bounded by [`thread_count`].
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceOutput {
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

/// PNG files in `dir` sorted by name, optionally only those whose stem ends
/// with `suffix` (e.g. `_focused` in a dataset split).
pub fn list_frames(dir: &Path, suffix: Option<&str>) -> Result<Vec<PathBuf>> {
    let all = list_pngs(dir)?;
    Ok(match suffix {
        Some(sfx) => all.into_iter().filter(|p| stem(p).ends_with(sfx)).collect(),
        None => all,
    })
}

/// Runs the pipeline on every frame pair of two directories.
///
/// Frames pair up by sorted file name. Each output is `<index:05>.png` in
/// `out_dir`, next to a manifest recording the inputs and settings.
pub fn run_sequence(dir_f: &Path, dir_d: &Path, cfg: &PipelineConfig, out_dir: &Path) -> Result<SequenceOutput> {
    let focused = list_pngs(dir_f)?;
    let defocused = list_pngs(dir_d)?;
    let guides = match &cfg.guide_dir {
        Some(dir) => Some(list_pngs(dir)?),
        None => None,
    };
    run_frame_lists(&focused, &defocused, guides.as_deref(), cfg, out_dir)
}

/// As [`run_sequence`] over explicit, already ordered frame lists.
pub fn run_frame_lists(
    focused: &[PathBuf],
    defocused: &[PathBuf],
    guides: Option<&[PathBuf]>,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<SequenceOutput> {
    cfg.validate()?;
    if focused.len() != defocused.len() {
        return Err(Error::CountMismatch {
            focused: focused.len(),
            defocused: defocused.len(),
        });
    }
    if focused.is_empty() {
        return Err(Error::EmptyInput("no frames to process".into()));
    }
    if let Some(g) = guides {
        if g.len() != focused.len() {
            return Err(Error::CountMismatch {
                focused: focused.len(),
                defocused: g.len(),
            });
        }
    } else if cfg.mode == PipelineMode::Guided {
        return Err(Error::MissingGuide);
    }
    if let FlowSource::External { .. } = cfg.flow_source {
        if focused.len() > 1 {
            return Err(Error::InvalidParameter(
                "a single external flow file applies to one frame pair; use a flow directory".into(),
            ));
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let pool = worker_pool()?;
    info!("processing {} frame pairs on {} workers", focused.len(), pool.current_num_threads());
    let outputs = pool.install(|| {
        (0..focused.len())
            .into_par_iter()
            .map(|i| {
                let i_f = load_png(&focused[i])?;
                let i_d = load_png(&defocused[i])?;
                let guide = match guides {
                    Some(g) => Some(load_png(&g[i])?),
                    None => None,
                };
                let flows = match cfg.mode {
                    PipelineMode::NoAlignment => None,
                    _ => {
                        i_f.check_same_shape(&i_d)?;
                        Some(resolve_flows(&i_f, &i_d, cfg, Some(&stem(&focused[i])))?)
                    }
                };
                let r = run_frame_with_flows(&i_f, &i_d, cfg, guide.as_ref(), flows)?;
                let out = out_dir.join(format!("{i:05}.png"));
                save_png(&r.output, &out, cfg.depth)?;
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut text = String::from("# dualmoire run v1\n");
    for line in cfg.to_config_string().lines() {
        let _ = writeln!(text, "# {line}");
    }
    text.push_str("# index focused defocused guide output\n");
    for (i, out) in outputs.iter().enumerate() {
        let guide = guides.map_or_else(|| "-".to_string(), |g| g[i].display().to_string());
        let _ = writeln!(
            text,
            "{i} {} {} {guide} {}",
            focused[i].display(),
            defocused[i].display(),
            out.display()
        );
    }
    let manifest = out_dir.join(RUN_MANIFEST_NAME);
    fs::write(&manifest, text).map_err(|e| Error::io(&manifest, e))?;
    Ok(SequenceOutput { outputs, manifest })
}
