//! Fidelity and temporal-consistency metrics.
//!
//! Images are compared on the unit scale. SSIM runs on BT.601 luma; the
//! temporal metrics compare adjacent frames of one sequence with no motion
//! compensation.

use std::fmt::Write as _;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::imgcore::{gaussian_kernel, Image};

/// Reported PSNR for identical inputs.
pub const PSNR_CAP_DB: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

/// Compensated arithmetic mean; zero for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut k = KahanSum::default();
    values.iter().for_each(|&v| k.add(v));
    k.total() / values.len() as f64
}

/// Mean squared error on the unit scale.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.data().is_empty() {
        return Err(Error::EmptyInput("cannot compare empty images".into()));
    }
    let mut k = KahanSum::default();
    for (x, y) in a.data().iter().zip(b.data()) {
        let d = *x as f64 - *y as f64;
        k.add(d * d);
    }
    Ok(k.total() / a.data().len() as f64)
}

/// `10·log10(1 / MSE)`, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    if m <= 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((-10.0 * m.log10()).min(PSNR_CAP_DB))
}

/// Mean absolute difference.
pub fn l1_distance(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.data().is_empty() {
        return Err(Error::EmptyInput("cannot compare empty images".into()));
    }
    let mut k = KahanSum::default();
    for (x, y) in a.data().iter().zip(b.data()) {
        k.add((*x as f64 - *y as f64).abs());
    }
    Ok(k.total() / a.data().len() as f64)
}

/// Valid-mode separable correlation of a row-major plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|j| k[j] * rows[(y + j) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

/// SSIM on luma with an 11x11 Gaussian window (sigma 1.5), averaged over all
/// positions where the window fits.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_dims(b)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    let k: Vec<f64> = gaussian_kernel(SSIM_SIGMA, SSIM_WINDOW / 2)
        .into_iter()
        .map(f64::from)
        .collect();
    let ks = k.iter().sum::<f64>();
    let k: Vec<f64> = k.iter().map(|v| v / ks).collect();
    let la: Vec<f64> = a.luma().data().iter().map(|&v| v as f64).collect();
    let lb: Vec<f64> = b.luma().data().iter().map(|&v| v as f64).collect();
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        la.iter().zip(&lb).map(|(&x, &y)| f(x, y)).collect()
    };
    let inputs = [
        la.clone(),
        lb.clone(),
        prod(&|x, _| x * x),
        prod(&|_, y| y * y),
        prod(&|x, y| x * y),
    ];
    let filtered: Vec<Vec<f64>> = inputs
        .par_iter()
        .map(|p| filter_valid(p, w, h, &k).0)
        .collect();
    let (ma, mb, aa, bb, ab) = (&filtered[0], &filtered[1], &filtered[2], &filtered[3], &filtered[4]);
    let mut acc = KahanSum::default();
    for i in 0..ma.len() {
        let (mua, mub) = (ma[i], mb[i]);
        let va = aa[i] - mua * mua;
        let vb = bb[i] - mub * mub;
        let cov = ab[i] - mua * mub;
        let num = (2.0 * mua * mub + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (mua * mua + mub * mub + SSIM_C1) * (va + vb + SSIM_C2);
        acc.add(num / den);
    }
    Ok(acc.total() / ma.len() as f64)
}

/// Orthonormal 2-D DFT of one plane.
fn dft2(plane: &[f64], w: usize, h: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex<f64>> {
    let mut data: Vec<Complex<f64>> = plane.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let row_fft = planner.plan_fft_forward(w);
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(h);
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = data[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            data[y * w + x] = col[y];
        }
    }
    let scale = 1.0 / ((w * h) as f64).sqrt();
    data.iter_mut().for_each(|c| *c *= scale);
    data
}

/// Mean absolute difference of orthonormal 2-D DFT coefficients, averaged
/// over channels.
pub fn hf_distance(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let (w, h) = a.dims();
    if w == 0 || h == 0 {
        return Err(Error::EmptyInput("cannot compare empty images".into()));
    }
    let mut planner = FftPlanner::new();
    let mut per_channel = Vec::with_capacity(a.channels());
    for c in 0..a.channels() {
        // the transform is linear, so transform the difference once
        let diff: Vec<f64> = a
            .plane(c)
            .iter()
            .zip(b.plane(c))
            .map(|(&x, &y)| x as f64 - y as f64)
            .collect();
        let coeffs = dft2(&diff, w, h, &mut planner);
        let mut k = KahanSum::default();
        coeffs.iter().for_each(|z| k.add(z.norm()));
        per_channel.push(k.total() / (w * h) as f64);
    }
    Ok(mean(&per_channel))
}

fn check_sequence(frames: &[Image]) -> Result<()> {
    if frames.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "temporal metrics need at least 2 frames, got {}",
            frames.len()
        )));
    }
    for f in &frames[1..] {
        frames[0].check_same_shape(f)?;
    }
    Ok(())
}

/// Mean adjacent-frame MSE on the 0-255 scale.
pub fn t_mse(frames: &[Image]) -> Result<f64> {
    check_sequence(frames)?;
    let per_pair = frames
        .par_windows(2)
        .map(|p| mse(&p[0], &p[1]).map(|m| m * 255.0 * 255.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&per_pair))
}

/// Mean adjacent-frame SSIM.
pub fn t_ssim(frames: &[Image]) -> Result<f64> {
    check_sequence(frames)?;
    let per_pair = frames
        .par_windows(2)
        .map(|p| ssim(&p[0], &p[1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&per_pair))
}

/// One named metric across frames.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub mean: f64,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        let mean = mean(&values);
        MetricSeries {
            name: name.into(),
            values,
            mean,
        }
    }
}

/// Per-frame fidelity metrics plus optional sequence-level scores.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub frame_names: Vec<String>,
    pub series: Vec<MetricSeries>,
    /// Sequence-level values such as `t_mse`.
    pub sequence: Vec<(String, f64)>,
}

impl MetricReport {
    pub fn frame_count(&self) -> usize {
        self.frame_names.len()
    }

    pub fn get(&self, name: &str) -> Option<&MetricSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn sequence_value(&self, name: &str) -> Option<f64> {
        self.sequence.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// One line per frame, then the means.
    pub fn render_lines(&self) -> String {
        let mut out = String::new();
        for (i, name) in self.frame_names.iter().enumerate() {
            let _ = write!(out, "{name}");
            for s in &self.series {
                let _ = write!(out, " {}={:.6}", s.name, s.values[i]);
            }
            out.push('\n');
        }
        for s in &self.series {
            let _ = writeln!(out, "mean {}={:.6}", s.name, s.mean);
        }
        for (n, v) in &self.sequence {
            let _ = writeln!(out, "sequence {n}={v:.6}");
        }
        out
    }

    /// Machine-readable `key=value` summary.
    pub fn render_summary(&self) -> String {
        let mut out = format!("frames={}\n", self.frame_count());
        for s in &self.series {
            let _ = writeln!(out, "{}={:.9}", s.name, s.mean);
        }
        for (n, v) in &self.sequence {
            let _ = writeln!(out, "{n}={v:.9}");
        }
        out
    }
}

/// Scores `preds` against `gts` frame by frame. With `video`, adds `t_mse`
/// and `t_ssim` of the predicted sequence.
pub fn evaluate(frame_names: Vec<String>, preds: &[Image], gts: &[Image], video: bool) -> Result<MetricReport> {
    if preds.len() != gts.len() || preds.len() != frame_names.len() {
        return Err(Error::CountMismatch {
            focused: preds.len(),
            defocused: gts.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput("no frames to evaluate".into()));
    }
    let rows = preds
        .par_iter()
        .zip(gts.par_iter())
        .map(|(p, g)| -> Result<[f64; 4]> {
            Ok([psnr(p, g)?, ssim(p, g)?, l1_distance(p, g)?, hf_distance(p, g)?])
        })
        .collect::<Result<Vec<_>>>()?;
    let column = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<_>>();
    let series = vec![
        MetricSeries::new("psnr", column(0)),
        MetricSeries::new("ssim", column(1)),
        MetricSeries::new("l1", column(2)),
        MetricSeries::new("hf", column(3)),
    ];
    let mut sequence = Vec::new();
    if video {
        sequence.push(("t_mse".to_string(), t_mse(preds)?));
        sequence.push(("t_ssim".to_string(), t_ssim(preds)?));
    }
    Ok(MetricReport {
        frame_names,
        series,
        sequence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, c: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h * c).map(|_| rng.gen::<f32>()).collect();
        Image::from_vec(w, h, c, data).unwrap()
    }

    #[test]
    fn psnr_reference_values() {
        let a = Image::filled(8, 8, 3, 0.0);
        let b = Image::filled(8, 8, 3, 1.0);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        assert!(psnr(&a, &b).unwrap().abs() < 1e-12);
        // every sample off by 10 code values: MSE = 100 / 255^2
        let c = Image::filled(8, 8, 1, 0.5);
        let d = Image::filled(8, 8, 1, 0.5 + 10.0 / 255.0);
        let expected = 10.0 * (255.0f64 * 255.0 / 100.0).log10();
        assert!((psnr(&c, &d).unwrap() - expected).abs() < 1e-4);
        assert!((expected - 28.13).abs() < 0.005);
        assert!(psnr(&a, &Image::filled(8, 7, 3, 0.0)).is_err());
    }

    #[test]
    fn ssim_constant_images() {
        let a = Image::filled(16, 16, 3, 0.5);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let lo = Image::filled(16, 16, 3, 0.25);
        let hi = Image::filled(16, 16, 3, 0.75);
        let expected = (2.0 * 0.25 * 0.75 + SSIM_C1) / (0.25 * 0.25 + 0.75 * 0.75 + SSIM_C1);
        assert!((ssim(&lo, &hi).unwrap() - expected).abs() < 1e-6);
        assert!(matches!(ssim(&Image::filled(10, 20, 1, 0.0), &Image::filled(10, 20, 1, 0.0)), Err(Error::TooSmall(_))));
    }

    #[test]
    fn ssim_of_identical_texture_is_one() {
        let a = random_image(32, 24, 3, 1);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        let b = random_image(32, 24, 3, 2);
        assert!(ssim(&a, &b).unwrap() < 0.5);
    }

    #[test]
    fn hf_distance_of_dc_shift() {
        let a = random_image(12, 10, 3, 3);
        let c = 0.05f32;
        let b = a.map(|v| v + c);
        let expected = c as f64 / ((12 * 10) as f64).sqrt();
        assert!((hf_distance(&b, &a).unwrap() - expected).abs() < 1e-7);
        assert_eq!(hf_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn hf_distance_matches_direct_dft() {
        let a = random_image(6, 5, 1, 4);
        let b = random_image(6, 5, 1, 5);
        let (w, h) = (6usize, 5usize);
        let mut total = 0.0;
        for v in 0..h {
            for u in 0..w {
                let mut acc = Complex::new(0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let d = a.get(x, y, 0) as f64 - b.get(x, y, 0) as f64;
                        let phase = -2.0 * std::f64::consts::PI * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                        acc += Complex::from_polar(d, phase);
                    }
                }
                total += acc.norm() / ((w * h) as f64).sqrt();
            }
        }
        let expected = total / (w * h) as f64;
        assert!((hf_distance(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn l1_reference_values() {
        let z = Image::filled(4, 4, 3, 0.0);
        let o = Image::filled(4, 4, 3, 1.0);
        assert_eq!(l1_distance(&z, &z).unwrap(), 0.0);
        assert_eq!(l1_distance(&z, &o).unwrap(), 1.0);
        let half = Image::from_fn(4, 4, 3, |x, _, _| if x < 2 { 1.0 } else { 0.0 });
        assert_eq!(l1_distance(&half, &z).unwrap(), 0.5);
    }

    #[test]
    fn temporal_reference_values() {
        let z = Image::filled(12, 12, 3, 0.0);
        let o = Image::filled(12, 12, 3, 1.0);
        let stat = vec![z.clone(); 4];
        assert_eq!(t_mse(&stat).unwrap(), 0.0);
        assert!((t_ssim(&stat).unwrap() - 1.0).abs() < 1e-12);
        let alt = vec![z.clone(), o.clone(), z.clone(), o.clone()];
        assert!((t_mse(&alt).unwrap() - 255.0 * 255.0).abs() < 1e-9);
        let a = random_image(12, 12, 3, 6);
        let b = random_image(12, 12, 3, 7);
        let c = random_image(12, 12, 3, 8);
        let m1 = mse(&a, &b).unwrap() * 65025.0;
        let m2 = mse(&b, &c).unwrap() * 65025.0;
        assert!((t_mse(&[a.clone(), b, c]).unwrap() - (m1 + m2) / 2.0).abs() < 1e-9);
        assert!(t_mse(&[a]).is_err());
    }

    #[test]
    fn report_means_match_values() {
        let preds: Vec<Image> = (0..5).map(|i| random_image(16, 16, 3, 20 + i)).collect();
        let gts: Vec<Image> = (0..5).map(|i| random_image(16, 16, 3, 40 + i)).collect();
        let names = (0..5).map(|i| format!("{i:05}")).collect();
        let r = evaluate(names, &preds, &gts, true).unwrap();
        assert_eq!(r.frame_count(), 5);
        for s in &r.series {
            let plain = s.values.iter().sum::<f64>() / s.values.len() as f64;
            assert!((s.mean - plain).abs() <= 1e-9);
        }
        assert!(r.sequence_value("t_mse").is_some());
        assert!(r.render_summary().contains("psnr="));
        assert!(r.render_lines().lines().count() >= 5);
    }

    #[test]
    fn noise_lowers_psnr() {
        let a = random_image(32, 32, 3, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let noise: Vec<f32> = (0..a.data().len()).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let mut last = f64::INFINITY;
        for amp in [0.01f32, 0.02, 0.05, 0.1, 0.2] {
            let data = a.data().iter().zip(&noise).map(|(v, n)| v + amp * n).collect();
            let b = Image::from_vec(32, 32, 3, data).unwrap();
            let p = psnr(&a, &b).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    fn image_strategy() -> impl Strategy<Value = Image> {
        prop::collection::vec(0.0f32..1.0, 12 * 12 * 3)
            .prop_map(|v| Image::from_vec(12, 12, 3, v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn symmetric_and_flip_invariant(a in image_strategy(), b in image_strategy()) {
            let p = psnr(&a, &b).unwrap();
            prop_assert_eq!(p, psnr(&b, &a).unwrap());
            let s = ssim(&a, &b).unwrap();
            prop_assert!((s - ssim(&b, &a).unwrap()).abs() < 1e-12);
            let (fa, fb) = (a.flip_horizontal(), b.flip_horizontal());
            prop_assert!((p - psnr(&fa, &fb).unwrap()).abs() < 1e-9);
            prop_assert!((s - ssim(&fa, &fb).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn hf_triangle_inequality(a in image_strategy(), b in image_strategy(), c in image_strategy()) {
            let ab = hf_distance(&a, &b).unwrap();
            let ac = hf_distance(&a, &c).unwrap();
            let cb = hf_distance(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9);
            prop_assert!(ab >= 0.0);
        }
    }
}
