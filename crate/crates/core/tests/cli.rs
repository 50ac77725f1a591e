use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dualmoire::align::{save_flo, FlowField};
use dualmoire::imgcore::{load_png, save_png, PngDepth};
use dualmoire::synth::dataset::{Manifest, MANIFEST_NAME};
use dualmoire::Image;

fn dualmoire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualmoire"))
        .args(args)
        .env("DUALMOIRE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn textured(w: usize, h: usize, shift: f32) -> Image {
    Image::from_fn(w, h, 3, |x, y, c| {
        let (x, y) = (x as f32 - shift, y as f32);
        0.5 + 0.25 * (0.37 * x + c as f32).sin() * (0.23 * y).cos() + 0.1 * (0.11 * (x + 2.0 * y)).sin()
    })
}

fn synth(root: &Path, count: &str) {
    let out = dualmoire(&["synth", "--out", p(root), "--count", count, "--seed", "3", "--size", "64x48"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&dualmoire(&["--help"])), 0);
    assert_eq!(code(&dualmoire(&["--version"])), 0);
    assert_eq!(code(&dualmoire(&["demoire", "--help"])), 0);
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&dualmoire(&[])), 1);
    assert_eq!(code(&dualmoire(&["synth", "--bogus"])), 1);
    assert_eq!(code(&dualmoire(&["synth", "--out", p(tmp.path()), "--jitter", "0.5"])), 1);

    let img = textured(32, 32, 0.0);
    let (f, d) = (tmp.path().join("f.png"), tmp.path().join("d.png"));
    save_png(&img, &f, PngDepth::Eight).unwrap();
    save_png(&img, &d, PngDepth::Eight).unwrap();
    let out_png = tmp.path().join("o.png");
    let out = dualmoire(&["demoire", "--focused", p(&f), "--defocused", p(&d), "--mode", "guided", "--out", p(&out_png)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("guide"));
    assert!(!out_png.exists());
}

#[test]
fn data_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.png");
    let out = dualmoire(&["demoire", "--focused", p(&missing), "--defocused", p(&missing), "--out", p(&tmp.path().join("o.png"))]);
    assert_eq!(code(&out), 2);

    let (a, b) = (tmp.path().join("a.png"), tmp.path().join("b.png"));
    save_png(&textured(32, 32, 0.0), &a, PngDepth::Eight).unwrap();
    save_png(&textured(40, 32, 0.0), &b, PngDepth::Eight).unwrap();
    let out = dualmoire(&["flow", "--a", p(&a), "--b", p(&b), "--out", p(&tmp.path().join("f.flo"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn synth_writes_the_dataset_layout() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "3");
    let dir = tmp.path().join("train");
    for i in 0..3 {
        for kind in ["focused", "defocused", "gt"] {
            let img = load_png(dir.join(format!("{i:05}_{kind}.png"))).unwrap();
            assert_eq!((img.dims(), img.channels()), ((64, 48), 3));
        }
    }
    let manifest = Manifest::read(&dir.join(MANIFEST_NAME)).unwrap();
    let indices: Vec<u64> = manifest.entries.iter().map(|e| e.index).collect();
    assert_eq!(indices, vec![0, 1, 2]);
    assert!(manifest.entries.iter().all(|e| e.seed == 3));
    assert!(manifest.entries.iter().all(|e| (3.2..=4.0).contains(&e.sigma_defocus)));

    let out = dualmoire(&["synth-video", "--out", p(tmp.path()), "--frames", "3", "--translation", "9", "--size", "48x32"]);
    assert_eq!(code(&out), 0);
    let video = Manifest::read(&tmp.path().join("video").join(MANIFEST_NAME)).unwrap();
    let shifts: Vec<Option<f64>> = video.entries.iter().map(|e| e.translation).collect();
    assert_eq!(shifts, vec![Some(0.0), Some(9.0), Some(18.0)]);
}

/// Reads a Middlebury flow file byte by byte.
fn parse_flo(bytes: &[u8]) -> (usize, usize, Vec<(f32, f32)>) {
    let word = |i: usize| -> [u8; 4] { bytes[4 * i..4 * i + 4].try_into().unwrap() };
    assert_eq!(f32::from_le_bytes(word(0)), 202021.25);
    assert_eq!(&bytes[..4], b"PIEH");
    let w = i32::from_le_bytes(word(1)) as usize;
    let h = i32::from_le_bytes(word(2)) as usize;
    assert_eq!(bytes.len(), 12 + 8 * w * h);
    let uv = (0..w * h)
        .map(|k| (f32::from_le_bytes(word(3 + 2 * k)), f32::from_le_bytes(word(4 + 2 * k))))
        .collect();
    (w, h, uv)
}

fn median(mut v: Vec<f32>) -> f32 {
    v.sort_by(f32::total_cmp);
    v[v.len() / 2]
}

#[test]
fn flow_writes_middlebury_fields_in_both_directions() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.png"), tmp.path().join("b.png"));
    save_png(&textured(96, 64, 0.0), &a, PngDepth::Sixteen).unwrap();
    save_png(&textured(96, 64, 3.0), &b, PngDepth::Sixteen).unwrap();
    let (fwd, bwd) = (tmp.path().join("f.flo"), tmp.path().join("b.flo"));
    let out = dualmoire(&["flow", "--a", p(&a), "--b", p(&b), "--out", p(&fwd), "--backward-out", p(&bwd), "--flow-levels", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let (w, h, uv) = parse_flo(&fs::read(&fwd).unwrap());
    assert_eq!((w, h), (96, 64));
    let u = median(uv.iter().map(|f| f.0).collect());
    assert!((u - 3.0).abs() <= 0.5, "forward median u {u}");
    let (_, _, uv) = parse_flo(&fs::read(&bwd).unwrap());
    let u = median(uv.iter().map(|f| f.0).collect());
    assert!((u + 3.0).abs() <= 0.5, "backward median u {u}");
}

#[test]
fn demoire_uses_external_flow_and_a_supplied_guide() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "1");
    let dir = tmp.path().join("train");
    let (f, d, g) = (dir.join("00000_focused.png"), dir.join("00000_defocused.png"), dir.join("00000_gt.png"));
    let (fwd, bwd) = (tmp.path().join("z.flo"), tmp.path().join("z.bwd.flo"));
    save_flo(&FlowField::zeros(64, 48), &fwd).unwrap();
    save_flo(&FlowField::zeros(64, 48), &bwd).unwrap();
    let (o, aligned, mask) = (tmp.path().join("o.png"), tmp.path().join("a.png"), tmp.path().join("m.png"));
    let out = dualmoire(&[
        "demoire", "--focused", p(&f), "--defocused", p(&d), "--guide", p(&g), "--external", p(&fwd),
        "--external-backward", p(&bwd), "--out", p(&o), "--aligned-out", p(&aligned), "--mask-out", p(&mask),
        "--jbf-window", "15",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(load_png(&aligned).unwrap(), load_png(&d).unwrap());
    assert!(load_png(&mask).unwrap().data().iter().all(|&v| v == 1.0));
    let (i_f, gt, i_o) = (load_png(&f).unwrap(), load_png(&g).unwrap(), load_png(&o).unwrap());
    let psnr = dualmoire::metrics::psnr;
    assert!(psnr(&i_o, &gt).unwrap() > psnr(&i_f, &gt).unwrap());
}

#[test]
fn run_processes_a_dataset_with_guides_and_a_flow_directory() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "3");
    let dir = tmp.path().join("train");
    let (guides, flows, out_dir) = (tmp.path().join("guides"), tmp.path().join("flows"), tmp.path().join("out"));
    fs::create_dir_all(&guides).unwrap();
    fs::create_dir_all(&flows).unwrap();
    for i in 0..3 {
        fs::copy(dir.join(format!("{i:05}_gt.png")), guides.join(format!("{i:05}.png"))).unwrap();
        save_flo(&FlowField::zeros(64, 48), flows.join(format!("{i:05}_focused.flo"))).unwrap();
    }
    let out = dualmoire(&[
        "run", "--dataset", p(&dir), "--guide-dir", p(&guides), "--flow-dir", p(&flows), "--out", p(&out_dir),
        "--jbf-window", "15",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..3 {
        assert_eq!(load_png(out_dir.join(format!("{i:05}.png"))).unwrap().dims(), (64, 48));
    }
    let manifest = fs::read_to_string(out_dir.join("run_manifest.txt")).unwrap();
    assert!(manifest.starts_with("# dualmoire run v1\n"));
    assert!(manifest.contains("# mode = guided"));
    let rows: Vec<&str> = manifest.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("1 ") && rows[1].contains("00001_focused.png") && rows[1].contains("00001.png"));

    // a flow directory missing a frame's file is a data error
    fs::remove_file(flows.join("00002_focused.flo")).unwrap();
    let out = dualmoire(&["run", "--dataset", p(&dir), "--flow-dir", p(&flows), "--out", p(&out_dir)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn eval_reports_per_frame_and_summary_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "2");
    let dir = tmp.path().join("train");
    let summary = tmp.path().join("summary.txt");
    let out = dualmoire(&[
        "eval", "--pred", p(&dir), "--gt", p(&dir), "--pred-suffix", "_gt", "--gt-suffix", "_gt", "--video",
        "--summary", p(&summary),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&summary).unwrap();
    assert!(text.contains("frames=2\n"));
    assert!(text.contains("psnr=100.000000000"));
    assert!(text.contains("ssim=1.000000000"));
    assert!(text.contains("t_mse="));
    assert!(String::from_utf8_lossy(&out.stdout).contains(&text));

    let out = dualmoire(&["eval", "--pred", p(&dir), "--gt", p(&dir), "--pred-suffix", "_focused", "--gt-suffix", "_gt"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let psnr: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("psnr="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(psnr < 40.0);
}
