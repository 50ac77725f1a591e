//! Oracles shared by the integration tests.
#![allow(dead_code)]

use dualmoire::Image;

// Published coefficients, times 8, written out independently of the crate.
const G_AT_R: [[f32; 5]; 5] = [
    [0., 0., -1., 0., 0.],
    [0., 0., 2., 0., 0.],
    [-1., 2., 4., 2., -1.],
    [0., 0., 2., 0., 0.],
    [0., 0., -1., 0., 0.],
];
const R_AT_G_RROW: [[f32; 5]; 5] = [
    [0., 0., 0.5, 0., 0.],
    [0., -1., 0., -1., 0.],
    [-1., 4., 5., 4., -1.],
    [0., -1., 0., -1., 0.],
    [0., 0., 0.5, 0., 0.],
];
const R_AT_B: [[f32; 5]; 5] = [
    [0., 0., -1.5, 0., 0.],
    [0., 2., 0., 2., 0.],
    [-1.5, 0., 6., 0., -1.5],
    [0., 2., 0., 2., 0.],
    [0., 0., -1.5, 0., 0.],
];

fn transpose(k: [[f32; 5]; 5]) -> [[f32; 5]; 5] {
    let mut t = [[0.0; 5]; 5];
    for (i, row) in k.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t[j][i] = v;
        }
    }
    t
}

/// Which stencil reconstructs `channel` at an RGGB site, from the layout alone.
pub fn rggb_kernel(x: usize, y: usize, channel: usize) -> Option<[[f32; 5]; 5]> {
    let site = match (y % 2, x % 2) {
        (0, 0) => 0,
        (1, 1) => 2,
        _ => 1,
    };
    if site == channel {
        return None;
    }
    Some(match (site, channel) {
        (_, 1) => G_AT_R,
        (0, 2) | (2, 0) => R_AT_B,
        // green site on an R row: R neighbours left/right, B above/below
        (1, 0) if y % 2 == 0 => R_AT_G_RROW,
        (1, 0) => transpose(R_AT_G_RROW),
        (1, 2) if y % 2 == 1 => R_AT_G_RROW,
        (1, 2) => transpose(R_AT_G_RROW),
        _ => unreachable!(),
    })
}

/// Smooth, non-periodic color texture.
pub fn textured(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, 3, |x, y, c| {
        let (x, y) = (x as f32, y as f32);
        0.5 + 0.2 * (0.31 * x + 0.7 * c as f32).sin() * (0.17 * y).cos() + 0.1 * (0.05 * x * y / 7.0).sin()
    })
}

/// Half-sample symmetric index, repeated as often as needed.
pub fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}
