//! Procedural ground-truth screen content for dataset generation without
//! external images.

use rand::Rng;

use crate::imgcore::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneKind {
    /// Achromatic linear ramp at a random angle.
    Ramp,
    /// Achromatic test card: gray bars, checkerboard and rings.
    Card,
    /// Colored shapes over a gradient with mild texture.
    Natural,
}

impl SceneKind {
    pub const ALL: [SceneKind; 3] = [SceneKind::Ramp, SceneKind::Card, SceneKind::Natural];

    pub fn is_achromatic(self) -> bool {
        !matches!(self, SceneKind::Natural)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

#[derive(Clone, Debug, PartialEq)]
enum SceneData {
    Ramp { angle: f64, lo: f64, hi: f64 },
    Card { levels: [f64; 8], checker: f64, ring_period: f64, base: f64 },
    Natural { c0: [f64; 3], c1: [f64; 3], angle: f64, shapes: Vec<(Shape, [f64; 3])>, texture: [f64; 4] },
}

/// A resolution-independent scene; coordinates are normalized to the frame
/// width so a scene can be rendered at any size or horizontal offset.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    data: SceneData,
}

fn color(rng: &mut impl Rng) -> [f64; 3] {
    [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)]
}

/// Anti-aliased inside test: 1 inside, 0 outside, linear over one pixel.
fn coverage(signed_dist_px: f64) -> f64 {
    (0.5 - signed_dist_px).clamp(0.0, 1.0)
}

impl Scene {
    pub fn random(kind: SceneKind, rng: &mut impl Rng) -> Scene {
        let data = match kind {
            SceneKind::Ramp => {
                let lo = rng.gen_range(0.05..0.3);
                SceneData::Ramp {
                    angle: rng.gen_range(0.0..std::f64::consts::TAU),
                    lo,
                    hi: rng.gen_range(lo + 0.4..0.95),
                }
            }
            SceneKind::Card => {
                let mut levels = [0.0; 8];
                for (i, l) in levels.iter_mut().enumerate() {
                    *l = 0.1 + 0.8 * i as f64 / 7.0;
                }
                if rng.gen_bool(0.5) {
                    levels.reverse();
                }
                SceneData::Card {
                    levels,
                    checker: rng.gen_range(0.04..0.1),
                    ring_period: rng.gen_range(0.05..0.12),
                    base: rng.gen_range(0.3..0.7),
                }
            }
            SceneKind::Natural => {
                let n = rng.gen_range(5..10);
                let shapes = (0..n)
                    .map(|_| {
                        let shape = if rng.gen_bool(0.5) {
                            Shape::Ellipse {
                                cx: rng.gen_range(0.0..1.0),
                                cy: rng.gen_range(0.0..1.0),
                                rx: rng.gen_range(0.05..0.25),
                                ry: rng.gen_range(0.05..0.25),
                            }
                        } else {
                            let (x0, y0) = (rng.gen_range(-0.1..0.8), rng.gen_range(-0.1..0.8));
                            Shape::Rect {
                                x0,
                                y0,
                                x1: x0 + rng.gen_range(0.08..0.4),
                                y1: y0 + rng.gen_range(0.08..0.4),
                            }
                        };
                        (shape, color(rng))
                    })
                    .collect();
                SceneData::Natural {
                    c0: color(rng),
                    c1: color(rng),
                    angle: rng.gen_range(0.0..std::f64::consts::TAU),
                    shapes,
                    texture: [
                        rng.gen_range(8.0..30.0),
                        rng.gen_range(8.0..30.0),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                        rng.gen_range(0.01..0.04),
                    ],
                }
            }
        };
        Scene { data }
    }

    pub fn kind(&self) -> SceneKind {
        match self.data {
            SceneData::Ramp { .. } => SceneKind::Ramp,
            SceneData::Card { .. } => SceneKind::Card,
            SceneData::Natural { .. } => SceneKind::Natural,
        }
    }

    /// Renders at `w x h`, with content shifted left by `offset_px` pixels.
    pub fn render(&self, w: usize, h: usize, offset_px: f64) -> Image {
        let scale = w.max(1) as f64;
        let px = 1.0 / scale;
        Image::from_fn(w, h, 3, |x, y, c| {
            let u = (x as f64 + offset_px) * px;
            let v = y as f64 * px;
            self.sample(u, v, c, scale, h as f64 / scale) as f32
        })
    }

    fn sample(&self, u: f64, v: f64, c: usize, scale: f64, aspect: f64) -> f64 {
        match &self.data {
            SceneData::Ramp { angle, lo, hi } => {
                let (s, co) = angle.sin_cos();
                // project onto the ramp direction, normalized over the frame diagonal
                let span = co.abs() + s.abs() * aspect;
                let t = ((u - 0.5) * co + (v - 0.5 * aspect) * s) / span + 0.5;
                lo + (hi - lo) * t.clamp(0.0, 1.0)
            }
            SceneData::Card { levels, checker, ring_period, base } => {
                let top = v < 0.35 * aspect;
                if top {
                    let band = ((u.rem_euclid(1.0)) * 8.0).floor() as usize;
                    levels[band.min(7)]
                } else if u.rem_euclid(1.0) < 0.5 {
                    let cx = (u / checker).floor() as i64;
                    let cy = (v / checker).floor() as i64;
                    if (cx + cy).rem_euclid(2) == 0 {
                        0.2
                    } else {
                        0.8
                    }
                } else {
                    let dx = u.rem_euclid(1.0) - 0.75;
                    let dy = v - 0.675 * aspect;
                    let r = (dx * dx + dy * dy).sqrt();
                    base + 0.25 * (std::f64::consts::TAU * r / ring_period).cos()
                }
            }
            SceneData::Natural { c0, c1, angle, shapes, texture } => {
                let (s, co) = angle.sin_cos();
                let t = (((u - 0.5) * co + (v - 0.5) * s) + 0.5).clamp(0.0, 1.0);
                let mut val = c0[c] + (c1[c] - c0[c]) * t;
                for (shape, col) in shapes {
                    let d_px = match *shape {
                        Shape::Ellipse { cx, cy, rx, ry } => {
                            let (dx, dy) = ((u - cx) / rx, (v - cy) / ry);
                            let r = (dx * dx + dy * dy).sqrt();
                            (r - 1.0) * rx.min(ry) * scale
                        }
                        Shape::Rect { x0, y0, x1, y1 } => {
                            let dx = (x0 - u).max(u - x1);
                            let dy = (y0 - v).max(v - y1);
                            dx.max(dy) * scale
                        }
                    };
                    let a = coverage(d_px);
                    val = col[c] * a + val * (1.0 - a);
                }
                let [fx, fy, ph, amp] = *texture;
                val += amp * (fx * u + ph).sin() * (fy * v + 0.5 * ph).cos();
                val.clamp(0.0, 1.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::chroma_energy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn achromatic_scenes_have_zero_chroma() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [SceneKind::Ramp, SceneKind::Card] {
            for _ in 0..4 {
                let img = Scene::random(kind, &mut rng).render(40, 30, 0.0);
                assert!(chroma_energy(&img).unwrap() < 1e-6);
            }
        }
    }

    #[test]
    fn natural_scene_has_color_and_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = Scene::random(SceneKind::Natural, &mut rng).render(64, 48, 0.0);
        assert!(chroma_energy(&img).unwrap() > 0.01);
        assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn offset_shifts_content() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let scene = Scene::random(SceneKind::Natural, &mut rng);
        let a = scene.render(32, 16, 0.0);
        let b = scene.render(32, 16, 4.0);
        for y in 0..16 {
            for x in 0..28 {
                assert!((b.get(x, y, 1) - a.get(x + 4, y, 1)).abs() < 1e-6);
            }
        }
    }
}
