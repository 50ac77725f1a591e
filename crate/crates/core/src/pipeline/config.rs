use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::align::{BlockMatchParams, OcclusionParams};
use crate::error::{Error, Result};
use crate::imgcore::PngDepth;
use crate::recover::{JbfMethod, JbfParams};

/// Which guide feeds the recovery step, and which steps run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PipelineMode {
    /// Guide is the aligned defocused frame.
    #[default]
    JbfOnly,
    /// Guide is an externally supplied restored frame.
    Guided,
    /// Returns the guide without filtering.
    NoJbf,
    /// Uses the unwarped defocused frame as the aligned frame.
    NoAlignment,
}

impl PipelineMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineMode::JbfOnly => "jbf-only",
            PipelineMode::Guided => "guided",
            PipelineMode::NoJbf => "no-jbf",
            PipelineMode::NoAlignment => "no-alignment",
        }
    }
}

impl FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jbf-only" => Ok(PipelineMode::JbfOnly),
            "guided" => Ok(PipelineMode::Guided),
            "no-jbf" => Ok(PipelineMode::NoJbf),
            "no-alignment" => Ok(PipelineMode::NoAlignment),
            other => Err(Error::Parse(format!(
                "unknown mode '{other}' (expected jbf-only, guided, no-jbf or no-alignment)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum FlowSource {
    /// Built-in pyramidal block matching.
    #[default]
    BlockMatch,
    /// One `.flo` file for a single frame pair. Without a backward field the
    /// occlusion check is skipped.
    External {
        forward: PathBuf,
        backward: Option<PathBuf>,
    },
    /// Directory holding `<stem>.flo` and optionally `<stem>.bwd.flo` per
    /// focused frame.
    ExternalDir(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub mode: PipelineMode,
    pub flow_source: FlowSource,
    /// Flow is estimated at most at this size, then upscaled.
    pub flow_size: (usize, usize),
    pub blockmatch: BlockMatchParams,
    pub occlusion: OcclusionParams,
    pub jbf: JbfParams,
    pub jbf_method: JbfMethod,
    pub guide_dir: Option<PathBuf>,
    pub depth: PngDepth,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: PipelineMode::JbfOnly,
            flow_source: FlowSource::BlockMatch,
            flow_size: (704, 396),
            blockmatch: BlockMatchParams::default(),
            occlusion: OcclusionParams::default(),
            jbf: JbfParams::default(),
            jbf_method: JbfMethod::Fast,
            guide_dir: None,
            depth: PngDepth::Eight,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value '{value}' for '{key}'")))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.jbf.validate()?;
        self.occlusion.validate()?;
        self.blockmatch.validate()?;
        if self.flow_size.0 == 0 || self.flow_size.1 == 0 {
            return Err(Error::InvalidParameter("flow size must be non-zero".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "mode" => self.mode = value.parse()?,
            "flow_width" => self.flow_size.0 = parse(key, value)?,
            "flow_height" => self.flow_size.1 = parse(key, value)?,
            "flow_levels" => self.blockmatch.levels = parse(key, value)?,
            "flow_radius" => self.blockmatch.radius = parse(key, value)?,
            "flow_block" => self.blockmatch.block = parse(key, value)?,
            "flow_presmooth" => self.blockmatch.presmooth = parse(key, value)?,
            "flow_penalty" => self.blockmatch.penalty = parse(key, value)?,
            "occlusion_alpha" => self.occlusion.alpha = parse(key, value)?,
            "occlusion_beta" => self.occlusion.beta = parse(key, value)?,
            "jbf_window" => self.jbf.window = parse(key, value)?,
            "jbf_sigma_range" => self.jbf.sigma_range = parse(key, value)?,
            "jbf_sigma_spatial" => self.jbf.sigma_spatial = parse(key, value)?,
            "jbf_method" => self.jbf_method = value.parse()?,
            "guide_dir" => self.guide_dir = Some(PathBuf::from(value)),
            "flow_dir" => self.flow_source = FlowSource::ExternalDir(PathBuf::from(value)),
            "external_flow" => {
                let backward = match &self.flow_source {
                    FlowSource::External { backward, .. } => backward.clone(),
                    _ => None,
                };
                self.flow_source = FlowSource::External {
                    forward: PathBuf::from(value),
                    backward,
                };
            }
            "external_flow_backward" => match &mut self.flow_source {
                FlowSource::External { backward, .. } => *backward = Some(PathBuf::from(value)),
                _ => {
                    return Err(Error::Parse(
                        "external_flow_backward requires external_flow to be set first".into(),
                    ))
                }
            },
            "output_depth" => self.depth = value.parse()?,
            other => return Err(Error::Parse(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_config_str(text)?;
        Ok(cfg)
    }

    pub fn apply_config_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_config_str(&text)
    }

    /// Settings in the same `key = value` form accepted by
    /// [`PipelineConfig::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("mode", self.mode.as_str().into());
        kv("flow_width", self.flow_size.0.to_string());
        kv("flow_height", self.flow_size.1.to_string());
        kv("flow_levels", self.blockmatch.levels.to_string());
        kv("flow_radius", self.blockmatch.radius.to_string());
        kv("flow_block", self.blockmatch.block.to_string());
        kv("flow_presmooth", self.blockmatch.presmooth.to_string());
        kv("flow_penalty", self.blockmatch.penalty.to_string());
        kv("occlusion_alpha", self.occlusion.alpha.to_string());
        kv("occlusion_beta", self.occlusion.beta.to_string());
        kv("jbf_window", self.jbf.window.to_string());
        kv("jbf_sigma_range", self.jbf.sigma_range.to_string());
        kv("jbf_sigma_spatial", self.jbf.sigma_spatial.to_string());
        kv(
            "jbf_method",
            match self.jbf_method {
                JbfMethod::Fast => "fast".into(),
                JbfMethod::Naive => "naive".into(),
            },
        );
        if let Some(d) = &self.guide_dir {
            kv("guide_dir", d.display().to_string());
        }
        match &self.flow_source {
            FlowSource::BlockMatch => {}
            FlowSource::External { forward, backward } => {
                kv("external_flow", forward.display().to_string());
                if let Some(b) = backward {
                    kv("external_flow_backward", b.display().to_string());
                }
            }
            FlowSource::ExternalDir(d) => kv("flow_dir", d.display().to_string()),
        }
        kv(
            "output_depth",
            match self.depth {
                PngDepth::Eight => "8".into(),
                PngDepth::Sixteen => "16".into(),
            },
        );
        out
    }
}
