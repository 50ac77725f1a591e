//! On-disk dataset layout and manifests.
//!
//! ```text
//! <root>/<split>/00000_focused.png
//! <root>/<split>/00000_defocused.png
//! <root>/<split>/00000_gt.png
//! <root>/<split>/manifest.txt
//! ```
//!
//! The manifest starts with `#` comment lines (generator settings) followed
//! by one whitespace-separated record per sample:
//! `index seed h00 h01 h02 h10 h11 h12 h20 h21 h22 sigma_defocus sigma_foreground translation`,
//! with `-` marking absent values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::chain::{sample_rng, synth_pair, synth_video, Foreground, SynthConfig, SyntheticSample, VideoSynthConfig};
use super::testcard::{Scene, SceneKind};
use crate::error::{Error, Result};
use crate::imgcore::{load_png_with_alpha, resize_bilinear, save_png, Image, PngDepth};

pub const MANIFEST_NAME: &str = "manifest.txt";
const MANIFEST_MAGIC: &str = "# dualmoire manifest v1";

// stream keys so scene/foreground draws never overlap the chain's stream
const SCENE_KEY: u64 = 0x5343_454e_4553_0001;
const FOREGROUND_KEY: u64 = 0x464f_5245_4752_0002;

/// One manifest record.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub index: u64,
    pub seed: u64,
    pub homography: [f64; 9],
    pub sigma_defocus: f64,
    pub sigma_foreground: Option<f64>,
    pub translation: Option<f64>,
}

impl From<&SyntheticSample> for ManifestEntry {
    fn from(s: &SyntheticSample) -> Self {
        ManifestEntry {
            index: s.index,
            seed: s.seed,
            homography: s.homography.to_row_array(),
            sigma_defocus: s.sigma_defocus,
            sigma_foreground: s.sigma_foreground,
            translation: s.translation,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl ManifestEntry {
    pub fn to_line(&self) -> String {
        let mut line = format!("{} {}", self.index, self.seed);
        for h in self.homography {
            write!(line, " {h}").unwrap();
        }
        write!(
            line,
            " {} {} {}",
            self.sigma_defocus,
            opt(self.sigma_foreground),
            opt(self.translation)
        )
        .unwrap();
        line
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 14 {
            return Err(Error::Parse(format!(
                "manifest record needs 14 fields, found {}: {line:?}",
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {s:?} in manifest")))
        };
        let opt_num = |s: &str| -> Result<Option<f64>> {
            if s == "-" {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        let int = |s: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad integer {s:?} in manifest")))
        };
        let mut homography = [0.0; 9];
        for (h, s) in homography.iter_mut().zip(&fields[2..11]) {
            *h = num(s)?;
        }
        Ok(ManifestEntry {
            index: int(fields[0])?,
            seed: int(fields[1])?,
            homography,
            sigma_defocus: num(fields[11])?,
            sigma_foreground: opt_num(fields[12])?,
            translation: opt_num(fields[13])?,
        })
    }
}

/// Manifest contents: `key=value` settings from the header plus records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub settings: Vec<(String, String)>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(MANIFEST_MAGIC);
        out.push('\n');
        for (k, v) in &self.settings {
            writeln!(out, "# {k}={v}").unwrap();
        }
        out.push_str(
            "# columns: index seed h00 h01 h02 h10 h11 h12 h20 h21 h22 sigma_defocus sigma_foreground translation\n",
        );
        for e in &self.entries {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(l) if l.trim() == MANIFEST_MAGIC => {}
            _ => return Err(Error::Parse("missing manifest header".into())),
        }
        let mut m = Manifest::default();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    m.settings.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            m.entries.push(ManifestEntry::parse_line(line)?);
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn setting(&self, key: &str) -> Option<&str> {
        self.settings
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// File names of the three images of sample `index`.
pub fn sample_paths(dir: &Path, index: u64) -> [PathBuf; 3] {
    [
        dir.join(format!("{index:05}_focused.png")),
        dir.join(format!("{index:05}_defocused.png")),
        dir.join(format!("{index:05}_gt.png")),
    ]
}

/// Sorted `*.png` files of a directory.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path();
        let is_png = p
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && p.is_file() {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Foreground asset with its matte; opaque when the file has no alpha.
#[derive(Clone, Debug)]
pub struct ForegroundAsset {
    pub image: Image,
    pub alpha: Image,
}

pub fn load_foreground_assets(dir: &Path) -> Result<Vec<ForegroundAsset>> {
    let files = list_pngs(dir)?;
    if files.is_empty() {
        return Err(Error::EmptyInput(format!("no PNG foregrounds in {}", dir.display())));
    }
    files
        .iter()
        .map(|p| {
            let (img, alpha) = load_png_with_alpha(p)?;
            let alpha = alpha.unwrap_or_else(|| Image::filled(img.width(), img.height(), 1, 1.0));
            Ok(ForegroundAsset {
                image: img.to_rgb(),
                alpha,
            })
        })
        .collect()
}

/// Scales an asset to a random size and position on a `w x h` canvas.
pub fn place_foreground(asset: &ForegroundAsset, w: usize, h: usize, rng: &mut impl Rng) -> Result<Foreground> {
    let frac: f64 = rng.gen_range(0.3..=0.6);
    let target = (frac * w.min(h) as f64).max(2.0);
    let (aw, ah) = asset.image.dims();
    let s = target / aw.max(ah) as f64;
    let fw = ((aw as f64 * s).round() as usize).clamp(1, w);
    let fh = ((ah as f64 * s).round() as usize).clamp(1, h);
    let img = resize_bilinear(&asset.image, fw, fh)?;
    let alpha = resize_bilinear(&asset.alpha, fw, fh)?;
    let x0 = rng.gen_range(0..=w - fw);
    let y0 = rng.gen_range(0..=h - fh);
    let mut canvas = Image::new(w, h, 3);
    let mut matte = Image::new(w, h, 1);
    for y in 0..fh {
        for x in 0..fw {
            for c in 0..3 {
                canvas.set(x0 + x, y0 + y, c, img.get(x, y, c));
            }
            matte.set(x0 + x, y0 + y, 0, alpha.get(x, y, 0));
        }
    }
    Ok(Foreground {
        image: canvas,
        alpha: matte,
    })
}

/// Where ground-truth frames come from.
#[derive(Clone, Debug)]
pub enum GtSource {
    /// Procedural scenes cycling through the given kinds.
    Procedural { width: usize, height: usize, kinds: Vec<SceneKind> },
    /// PNG files, cycled by sample index; resized when `size` is set.
    Files { paths: Vec<PathBuf>, size: Option<(usize, usize)> },
}

impl GtSource {
    pub fn procedural(width: usize, height: usize) -> Self {
        GtSource::Procedural {
            width,
            height,
            kinds: SceneKind::ALL.to_vec(),
        }
    }

    pub fn from_dir(dir: &Path, size: Option<(usize, usize)>) -> Result<Self> {
        let paths = list_pngs(dir)?;
        if paths.is_empty() {
            return Err(Error::EmptyInput(format!("no PNG images in {}", dir.display())));
        }
        Ok(GtSource::Files { paths, size })
    }

    pub fn describe(&self) -> String {
        match self {
            GtSource::Procedural { width, height, kinds } => {
                let names: Vec<String> = kinds.iter().map(|k| format!("{k:?}").to_lowercase()).collect();
                format!("procedural:{width}x{height}:{}", names.join(","))
            }
            GtSource::Files { paths, size } => {
                let size = size.map_or("native".to_string(), |(w, h)| format!("{w}x{h}"));
                format!("files:{}:{size}", paths.len())
            }
        }
    }

    /// Ground truth for sample `index`; `offset_px` shifts procedural content.
    pub fn load(&self, seed: u64, index: u64, offset_px: f64) -> Result<Image> {
        match self {
            GtSource::Procedural { width, height, kinds } => {
                if kinds.is_empty() {
                    return Err(Error::EmptyInput("no scene kinds selected".into()));
                }
                let kind = kinds[(index % kinds.len() as u64) as usize];
                let mut rng = sample_rng(seed ^ SCENE_KEY, index);
                Ok(Scene::random(kind, &mut rng).render(*width, *height, offset_px))
            }
            GtSource::Files { paths, size } => {
                let p = &paths[(index % paths.len() as u64) as usize];
                let (img, _) = load_png_with_alpha(p)?;
                let img = img.to_rgb();
                match size {
                    Some((w, h)) => resize_bilinear(&img, *w, *h),
                    None => Ok(img),
                }
            }
        }
    }
}

/// Settings for a still-image dataset.
#[derive(Clone, Debug)]
pub struct DatasetSpec {
    pub root: PathBuf,
    pub split: String,
    pub count: u64,
    pub source: GtSource,
    pub foreground_dir: Option<PathBuf>,
    /// Probability that a sample receives a foreground when assets exist.
    pub foreground_probability: f64,
    pub config: SynthConfig,
    pub depth: PngDepth,
}

fn save_sample(dir: &Path, s: &SyntheticSample, depth: PngDepth) -> Result<()> {
    let [f, d, g] = sample_paths(dir, s.index);
    save_png(&s.focused, f, depth)?;
    save_png(&s.defocused, d, depth)?;
    save_png(&s.gt, g, depth)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Renders and writes `spec.count` samples, returning the manifest.
///
/// Samples are generated in parallel; each one depends only on
/// `(seed, index)`, so the output is independent of scheduling.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Manifest> {
    spec.config.validate()?;
    let dir = spec.root.join(&spec.split);
    create_dir(&dir)?;
    let assets = match &spec.foreground_dir {
        Some(d) if spec.config.with_foreground => load_foreground_assets(d)?,
        _ => Vec::new(),
    };
    let seed = spec.config.seed;
    let entries = (0..spec.count)
        .into_par_iter()
        .map(|index| {
            let gt = spec.source.load(seed, index, 0.0)?;
            let fg = pick_foreground(&assets, spec.foreground_probability, seed, index, gt.dims())?;
            let sample = synth_pair(&gt, fg.as_ref(), &spec.config, index)?;
            save_sample(&dir, &sample, spec.depth)?;
            Ok(ManifestEntry::from(&sample))
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        settings: settings_for(&spec.config, &spec.source, spec.count, spec.depth, spec.foreground_dir.as_deref()),
        entries,
    };
    manifest.write(&dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

fn pick_foreground(
    assets: &[ForegroundAsset],
    probability: f64,
    seed: u64,
    index: u64,
    (w, h): (usize, usize),
) -> Result<Option<Foreground>> {
    if assets.is_empty() {
        return Ok(None);
    }
    let mut rng: ChaCha8Rng = sample_rng(seed ^ FOREGROUND_KEY, index);
    if !rng.gen_bool(probability.clamp(0.0, 1.0)) {
        return Ok(None);
    }
    let asset = &assets[rng.gen_range(0..assets.len())];
    place_foreground(asset, w, h, &mut rng).map(Some)
}

fn settings_for(
    cfg: &SynthConfig,
    source: &GtSource,
    count: u64,
    depth: PngDepth,
    fg_dir: Option<&Path>,
) -> Vec<(String, String)> {
    vec![
        ("seed".into(), cfg.seed.to_string()),
        ("count".into(), count.to_string()),
        ("source".into(), source.describe()),
        (
            "defocus_sigma_range".into(),
            format!("{},{}", cfg.defocus_sigma_range.0, cfg.defocus_sigma_range.1),
        ),
        (
            "foreground_sigma_range".into(),
            format!("{},{}", cfg.foreground_sigma_range.0, cfg.foreground_sigma_range.1),
        ),
        ("homography_jitter".into(), cfg.homography_jitter.to_string()),
        ("bayer_pattern".into(), format!("{:?}", cfg.bayer_pattern).to_lowercase()),
        ("stripe_layout".into(), format!("{:?}", cfg.stripe_layout).to_lowercase()),
        ("brightness".into(), format!("{:?}", cfg.brightness).to_lowercase()),
        (
            "foreground_dir".into(),
            fg_dir.map_or("-".into(), |p| p.display().to_string()),
        ),
        (
            "bit_depth".into(),
            match depth {
                PngDepth::Eight => "8".into(),
                PngDepth::Sixteen => "16".into(),
            },
        ),
    ]
}

/// Settings for a constant-translation video.
#[derive(Clone, Debug)]
pub struct VideoDatasetSpec {
    pub root: PathBuf,
    pub split: String,
    pub source: GtSource,
    /// Horizontal drift of procedural content per frame, in GT pixels.
    pub content_drift: f64,
    pub foreground_dir: Option<PathBuf>,
    pub config: VideoSynthConfig,
    pub depth: PngDepth,
}

/// Renders ground-truth frames for a video from `source`.
pub fn video_frames(source: &GtSource, seed: u64, frames: usize, drift: f64) -> Result<Vec<Image>> {
    match source {
        GtSource::Procedural { .. } => (0..frames)
            .map(|t| source.load(seed, 0, drift * t as f64))
            .collect(),
        GtSource::Files { .. } => (0..frames as u64).map(|t| source.load(seed, t, 0.0)).collect(),
    }
}

pub fn generate_video_dataset(spec: &VideoDatasetSpec) -> Result<Manifest> {
    spec.config.validate()?;
    let dir = spec.root.join(&spec.split);
    create_dir(&dir)?;
    let seed = spec.config.base.seed;
    let frames = video_frames(&spec.source, seed, spec.config.frame_count, spec.content_drift)?;
    let fg = match &spec.foreground_dir {
        Some(d) if spec.config.base.with_foreground => {
            let assets = load_foreground_assets(d)?;
            pick_foreground(&assets, 1.0, seed, 0, frames[0].dims())?
        }
        _ => None,
    };
    let samples = synth_video(&frames, fg.as_ref(), &spec.config)?;
    samples
        .par_iter()
        .map(|s| save_sample(&dir, s, spec.depth))
        .collect::<Result<Vec<_>>>()?;
    let mut settings = settings_for(
        &spec.config.base,
        &spec.source,
        spec.config.frame_count as u64,
        spec.depth,
        spec.foreground_dir.as_deref(),
    );
    settings.push(("content_drift".into(), spec.content_drift.to_string()));
    if let Some(first) = samples.get(1) {
        settings.push(("translation_per_frame".into(), opt(first.translation)));
    }
    let manifest = Manifest {
        settings,
        entries: samples.iter().map(ManifestEntry::from).collect(),
    };
    manifest.write(&dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn manifest_line_round_trip(
            index in 0u64..1_000_000,
            seed in any::<u64>(),
            h in prop::array::uniform9(-1e3f64..1e3),
            sd in 0.1f64..10.0,
            sf in prop::option::of(0.1f64..10.0),
            t in prop::option::of(0.0f64..500.0),
        ) {
            let e = ManifestEntry { index, seed, homography: h, sigma_defocus: sd, sigma_foreground: sf, translation: t };
            prop_assert_eq!(ManifestEntry::parse_line(&e.to_line()).unwrap(), e);
        }
    }

    #[test]
    fn manifest_rejects_garbage() {
        assert!(Manifest::parse("hello\n1 2 3").is_err());
        let text = format!("{MANIFEST_MAGIC}\n1 2 3\n");
        assert!(Manifest::parse(&text).is_err());
    }

    #[test]
    fn manifest_settings_are_read_back() {
        let m = Manifest {
            settings: vec![("seed".into(), "7".into())],
            entries: vec![],
        };
        let back = Manifest::parse(&m.render()).unwrap();
        assert_eq!(back.setting("seed"), Some("7"));
    }

    #[test]
    fn placed_foreground_fits_canvas() {
        let asset = ForegroundAsset {
            image: Image::filled(40, 20, 3, 0.7),
            alpha: Image::filled(40, 20, 1, 1.0),
        };
        let mut rng = sample_rng(1, 1);
        let fg = place_foreground(&asset, 32, 24, &mut rng).unwrap();
        assert_eq!(fg.image.dims(), (32, 24));
        let covered = fg.alpha.data().iter().filter(|&&a| a > 0.5).count();
        assert!(covered > 0 && covered < 32 * 24);
    }
}
