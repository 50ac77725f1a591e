use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use dualmoire::align::{save_flo, BlockMatchParams};
use dualmoire::imgcore::{load_png, save_png, PngDepth};
use dualmoire::metrics::evaluate;
use dualmoire::pipeline::{
    estimate_flows, list_frames, run_frame_detailed, run_frame_lists, FlowSource, PipelineConfig, PipelineMode,
};
use dualmoire::recover::JbfMethod;
use dualmoire::synth::dataset::{generate_dataset, generate_video_dataset, DatasetSpec, GtSource, VideoDatasetSpec};
use dualmoire::synth::{BayerPattern, BrightnessMode, StripeLayout, SynthConfig, VideoSynthConfig};
use dualmoire::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "dualmoire", version, about = "Dual-camera moire synthesis and removal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a focused/defocused/ground-truth image dataset.
    Synth(SynthArgs),
    /// Generate a constant-translation video sequence.
    SynthVideo(SynthVideoArgs),
    /// Estimate optical flow from --a to --b and write a .flo file.
    Flow(FlowArgs),
    /// Demoire one focused/defocused pair.
    Demoire(DemoireArgs),
    /// Demoire every frame pair of two directories.
    Run(RunArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got '{s}'"))?;
    let w: usize = w.parse().map_err(|_| format!("bad width in '{s}'"))?;
    let h: usize = h.parse().map_err(|_| format!("bad height in '{s}'"))?;
    if w == 0 || h == 0 {
        return Err("size must be non-zero".into());
    }
    Ok((w, h))
}

fn parse_layout(s: &str) -> std::result::Result<StripeLayout, String> {
    match s {
        "vertical" => Ok(StripeLayout::Vertical),
        "horizontal" => Ok(StripeLayout::Horizontal),
        _ => Err(format!("expected vertical or horizontal, got '{s}'")),
    }
}

fn parse_brightness(s: &str) -> std::result::Result<BrightnessMode, String> {
    match s {
        "global" => Ok(BrightnessMode::GlobalLuma),
        "per-channel" => Ok(BrightnessMode::PerChannel),
        _ => Err(format!("expected global or per-channel, got '{s}'")),
    }
}

#[derive(Args, Debug)]
struct ChainArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset root.
    #[arg(long)]
    out: PathBuf,
    /// RGBA PNG foreground assets.
    #[arg(long)]
    foreground: Option<PathBuf>,
    /// Ground-truth PNG directory; procedural scenes when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Ground-truth size, WxH. Required size for procedural scenes.
    #[arg(long, value_parser = parse_size)]
    size: Option<(usize, usize)>,
    /// Corner jitter as a fraction of the shorter side.
    #[arg(long, default_value_t = 0.05)]
    jitter: f64,
    #[arg(long, default_value = "rggb")]
    bayer: BayerPattern,
    #[arg(long, default_value = "vertical", value_parser = parse_layout)]
    stripes: StripeLayout,
    #[arg(long, default_value = "global", value_parser = parse_brightness)]
    brightness: BrightnessMode,
    /// Output bit depth (8 or 16).
    #[arg(long, default_value = "8")]
    depth: PngDepth,
}

const DEFAULT_SIZE: (usize, usize) = (192, 128);

impl ChainArgs {
    fn config(&self) -> SynthConfig {
        SynthConfig {
            homography_jitter: self.jitter,
            bayer_pattern: self.bayer,
            stripe_layout: self.stripes,
            brightness: self.brightness,
            with_foreground: self.foreground.is_some(),
            seed: self.seed,
            ..Default::default()
        }
    }

    fn source(&self) -> Result<GtSource> {
        match &self.input {
            Some(dir) => GtSource::from_dir(dir, self.size),
            None => {
                let (w, h) = self.size.unwrap_or(DEFAULT_SIZE);
                Ok(GtSource::procedural(w, h))
            }
        }
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, default_value_t = 20)]
    count: u64,
    #[arg(long, default_value = "train")]
    split: String,
    /// Chance that a sample receives a foreground when assets are given.
    #[arg(long, default_value_t = 0.5)]
    foreground_probability: f64,
}

#[derive(Args, Debug)]
struct SynthVideoArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, default_value_t = 8)]
    frames: usize,
    #[arg(long, default_value = "video")]
    split: String,
    /// Camera translation per frame in mosaic pixels, in [5, 20]; random when omitted.
    #[arg(long)]
    translation: Option<f64>,
    /// Horizontal drift of procedural content per frame, in pixels.
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
}

#[derive(Args, Debug, Clone)]
struct FlowParamArgs {
    #[arg(long)]
    flow_levels: Option<usize>,
    #[arg(long)]
    flow_radius: Option<usize>,
    #[arg(long)]
    flow_block: Option<usize>,
    /// Luma smoothing sigma before block matching, in pixels (0 disables).
    #[arg(long)]
    flow_presmooth: Option<f64>,
    /// Block-matching cost per squared pixel of departure from the coarser estimate or zero.
    #[arg(long)]
    flow_penalty: Option<f64>,
    /// Flow working resolution, WxH (default 704x396).
    #[arg(long, value_parser = parse_size)]
    flow_size: Option<(usize, usize)>,
}

impl FlowParamArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.flow_levels {
            cfg.blockmatch.levels = v;
        }
        if let Some(v) = self.flow_radius {
            cfg.blockmatch.radius = v;
        }
        if let Some(v) = self.flow_block {
            cfg.blockmatch.block = v;
        }
        if let Some(v) = self.flow_presmooth {
            cfg.blockmatch.presmooth = v;
        }
        if let Some(v) = self.flow_penalty {
            cfg.blockmatch.penalty = v;
        }
        if let Some(v) = self.flow_size {
            cfg.flow_size = v;
        }
    }
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the reverse field (b to a).
    #[arg(long)]
    backward_out: Option<PathBuf>,
    #[command(flatten)]
    params: FlowParamArgs,
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// Flat `key = value` settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// jbf-only, guided, no-jbf or no-alignment.
    #[arg(long)]
    mode: Option<PipelineMode>,
    #[arg(long)]
    jbf_window: Option<usize>,
    #[arg(long)]
    jbf_sigma_range: Option<f64>,
    #[arg(long)]
    jbf_sigma_spatial: Option<f64>,
    /// Use the direct JBF instead of the bilateral grid.
    #[arg(long)]
    naive: bool,
    #[arg(long)]
    occlusion_alpha: Option<f32>,
    #[arg(long)]
    occlusion_beta: Option<f32>,
    /// Output bit depth (8 or 16).
    #[arg(long)]
    depth: Option<PngDepth>,
    #[command(flatten)]
    flow: FlowParamArgs,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(v) = self.jbf_window {
            cfg.jbf.window = v;
        }
        if let Some(v) = self.jbf_sigma_range {
            cfg.jbf.sigma_range = v;
        }
        if let Some(v) = self.jbf_sigma_spatial {
            cfg.jbf.sigma_spatial = v;
        }
        if self.naive {
            cfg.jbf_method = JbfMethod::Naive;
        }
        if let Some(v) = self.occlusion_alpha {
            cfg.occlusion.alpha = v;
        }
        if let Some(v) = self.occlusion_beta {
            cfg.occlusion.beta = v;
        }
        if let Some(d) = self.depth {
            cfg.depth = d;
        }
        self.flow.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct DemoireArgs {
    #[arg(long)]
    focused: PathBuf,
    #[arg(long)]
    defocused: PathBuf,
    /// Restored guide frame for guided mode.
    #[arg(long)]
    guide: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Precomputed forward flow (focused to defocused).
    #[arg(long)]
    external: Option<PathBuf>,
    /// Precomputed reverse flow; without it the occlusion check is skipped.
    #[arg(long, requires = "external")]
    external_backward: Option<PathBuf>,
    /// Also write the aligned frame.
    #[arg(long)]
    aligned_out: Option<PathBuf>,
    /// Also write the occlusion mask (white = valid).
    #[arg(long)]
    mask_out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Focused frame directory.
    #[arg(long, required_unless_present = "dataset")]
    focused: Option<PathBuf>,
    /// Defocused frame directory.
    #[arg(long, required_unless_present = "dataset")]
    defocused: Option<PathBuf>,
    /// Dataset split holding `*_focused.png` and `*_defocused.png` frames.
    #[arg(long, conflicts_with_all = ["focused", "defocused"])]
    dataset: Option<PathBuf>,
    /// Guide frame directory for guided mode.
    #[arg(long)]
    guide_dir: Option<PathBuf>,
    /// Directory of `<stem>.flo` / `<stem>.bwd.flo` files.
    #[arg(long)]
    flow_dir: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Only use prediction files whose name (without extension) ends with this.
    #[arg(long)]
    pred_suffix: Option<String>,
    /// Only use ground-truth files whose name (without extension) ends with this.
    #[arg(long)]
    gt_suffix: Option<String>,
    /// Also report temporal consistency of the predictions.
    #[arg(long)]
    video: bool,
    /// Write the key=value summary to this file as well.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = DatasetSpec {
        root: args.chain.out.clone(),
        split: args.split.clone(),
        count: args.count,
        source: args.chain.source()?,
        foreground_dir: args.chain.foreground.clone(),
        foreground_probability: args.foreground_probability,
        config: args.chain.config(),
        depth: args.chain.depth,
    };
    let manifest = generate_dataset(&spec)?;
    println!(
        "wrote {} samples to {}",
        manifest.entries.len(),
        spec.root.join(&spec.split).display()
    );
    Ok(())
}

fn cmd_synth_video(args: &SynthVideoArgs) -> Result<()> {
    let spec = VideoDatasetSpec {
        root: args.chain.out.clone(),
        split: args.split.clone(),
        source: args.chain.source()?,
        content_drift: args.drift,
        foreground_dir: args.chain.foreground.clone(),
        config: VideoSynthConfig {
            base: args.chain.config(),
            frame_count: args.frames,
            translation_per_frame: args.translation,
            ..Default::default()
        },
        depth: args.chain.depth,
    };
    let manifest = generate_video_dataset(&spec)?;
    println!(
        "wrote {} frames to {}",
        manifest.entries.len(),
        spec.root.join(&spec.split).display()
    );
    Ok(())
}

fn cmd_flow(args: &FlowArgs) -> Result<()> {
    let a = load_png(&args.a)?;
    let b = load_png(&args.b)?;
    let mut cfg = PipelineConfig {
        blockmatch: BlockMatchParams::default(),
        ..Default::default()
    };
    args.params.apply(&mut cfg);
    cfg.validate()?;
    let flows = estimate_flows(&a, &b, &cfg)?;
    save_flo(&flows.forward, &args.out)?;
    if let (Some(path), Some(bwd)) = (&args.backward_out, &flows.backward) {
        save_flo(bwd, path)?;
    }
    Ok(())
}

fn cmd_demoire(args: &DemoireArgs) -> Result<()> {
    let mut cfg = args.pipeline.config()?;
    if let Some(fwd) = &args.external {
        cfg.flow_source = FlowSource::External {
            forward: fwd.clone(),
            backward: args.external_backward.clone(),
        };
    }
    if args.guide.is_some() && args.pipeline.mode.is_none() && cfg.mode == PipelineMode::JbfOnly {
        cfg.mode = PipelineMode::Guided;
    }
    let i_f = load_png(&args.focused)?;
    let i_d = load_png(&args.defocused)?;
    let guide = args.guide.as_ref().map(load_png).transpose()?;
    let r = run_frame_detailed(&i_f, &i_d, &cfg, guide.as_ref())?;
    save_png(&r.output, &args.out, cfg.depth)?;
    if let Some(p) = &args.aligned_out {
        save_png(&r.aligned, p, cfg.depth)?;
    }
    if let Some(p) = &args.mask_out {
        save_png(&r.mask.to_image(), p, PngDepth::Eight)?;
    }
    info!("{} of {} pixels flow-consistent", r.mask.valid_count(), i_f.plane_len());
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = args.pipeline.config()?;
    if let Some(d) = &args.guide_dir {
        cfg.guide_dir = Some(d.clone());
        if args.pipeline.mode.is_none() && cfg.mode == PipelineMode::JbfOnly {
            cfg.mode = PipelineMode::Guided;
        }
    }
    if let Some(d) = &args.flow_dir {
        cfg.flow_source = FlowSource::ExternalDir(d.clone());
    }
    let (focused, defocused) = match &args.dataset {
        Some(dir) => (list_frames(dir, Some("_focused"))?, list_frames(dir, Some("_defocused"))?),
        None => {
            let f = args.focused.as_deref().expect("clap enforces --focused");
            let d = args.defocused.as_deref().expect("clap enforces --defocused");
            (list_frames(f, None)?, list_frames(d, None)?)
        }
    };
    let guides = cfg.guide_dir.as_deref().map(|d| list_frames(d, None)).transpose()?;
    let out = run_frame_lists(&focused, &defocused, guides.as_deref(), &cfg, &args.out)?;
    println!("wrote {} frames to {}", out.outputs.len(), args.out.display());
    Ok(())
}

fn frame_name(p: &Path) -> String {
    p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let preds = list_frames(&args.pred, args.pred_suffix.as_deref())?;
    let gts = list_frames(&args.gt, args.gt_suffix.as_deref())?;
    if preds.len() != gts.len() {
        return Err(Error::CountMismatch {
            focused: preds.len(),
            defocused: gts.len(),
        });
    }
    let names = preds.iter().map(|p| frame_name(p)).collect();
    let load_all = |paths: &[PathBuf]| paths.iter().map(load_png).collect::<Result<Vec<_>>>();
    let report = evaluate(names, &load_all(&preds)?, &load_all(&gts)?, args.video)?;
    print!("{}", report.render_lines());
    let summary = report.render_summary();
    print!("{summary}");
    if let Some(p) = &args.summary {
        fs::write(p, &summary).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::Parse(_) | Error::MissingGuide => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match dualmoire::pipeline::worker_pool() {
        Ok(pool) => pool.install(|| match &cli.command {
            Command::Synth(a) => cmd_synth(a),
            Command::SynthVideo(a) => cmd_synth_video(a),
            Command::Flow(a) => cmd_flow(a),
            Command::Demoire(a) => cmd_demoire(a),
            Command::Run(a) => cmd_run(a),
            Command::Eval(a) => cmd_eval(a),
        }),
        Err(e) => Err(e),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
