use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use rayon::prelude::*;

use super::image::{sample_bilinear, Image};
use crate::error::{Error, Result};

/// Projective transform of the plane, stored with `m[2][2] == 1`.
///
/// Maps source coordinates to destination coordinates:
/// `(x', y', w') = H (x, y, 1)`, `(x'/w', y'/w')`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

const SINGULAR_EPS: f64 = 1e-12;

impl Homography {
    pub fn identity() -> Self {
        Homography {
            m: Matrix3::identity(),
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography {
            m: Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0),
        }
    }

    /// Wraps a matrix, normalizing the bottom-right coefficient to one.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularHomography);
        }
        let s = m[(2, 2)];
        if s.abs() < SINGULAR_EPS {
            return Err(Error::SingularHomography);
        }
        let m = m / s;
        let upper = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        if upper.abs() < SINGULAR_EPS || m.determinant().abs() < SINGULAR_EPS {
            return Err(Error::SingularHomography);
        }
        Ok(Homography { m })
    }

    /// Row-major coefficients.
    pub fn from_row_slice(v: &[f64; 9]) -> Result<Self> {
        Self::from_matrix(Matrix3::from_row_slice(v))
    }

    pub fn to_row_array(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = self.m[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Exact solution of the 4-point direct linear transform with `h33 = 1`.
    pub fn from_correspondences(src: &[(f64, f64); 4], dst: &[(f64, f64); 4]) -> Result<Self> {
        let mut a = SMatrix::<f64, 8, 8>::zeros();
        let mut b = SVector::<f64, 8>::zeros();
        for i in 0..4 {
            let (x, y) = src[i];
            let (u, v) = dst[i];
            let r = 2 * i;
            a[(r, 0)] = x;
            a[(r, 1)] = y;
            a[(r, 2)] = 1.0;
            a[(r, 6)] = -u * x;
            a[(r, 7)] = -u * y;
            b[r] = u;
            a[(r + 1, 3)] = x;
            a[(r + 1, 4)] = y;
            a[(r + 1, 5)] = 1.0;
            a[(r + 1, 6)] = -v * x;
            a[(r + 1, 7)] = -v * y;
            b[r + 1] = v;
        }
        let h = a.lu().solve(&b).ok_or(Error::SingularHomography)?;
        Self::from_matrix(Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0))
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.m.try_inverse().ok_or(Error::SingularHomography)?;
        Self::from_matrix(inv)
    }

    /// `other ∘ self`: apply `self` first, then `other`.
    pub fn then(&self, other: &Homography) -> Result<Self> {
        Self::from_matrix(other.m * self.m)
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let p = self.m * Vector3::new(x, y, 1.0);
        (p.x / p.z, p.y / p.z)
    }
}

/// Inverse-mapped projective warp with bilinear sampling and clamp-to-edge.
///
/// Output pixel `p` takes the source value at `H⁻¹ p`; pixel centers sit on
/// integer coordinates.
pub fn warp_projective(img: &Image, h: &Homography, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidParameter("warp target must be non-empty".into()));
    }
    let (w, h_in) = img.dims();
    if w == 0 || h_in == 0 {
        return Err(Error::TooSmall("cannot warp an empty image".into()));
    }
    let inv = h.inverse()?;
    let m = inv.m;
    let mut coords = vec![(0.0f32, 0.0f32); out_w * out_h];
    coords
        .par_chunks_mut(out_w)
        .enumerate()
        .for_each(|(y, row)| {
            let yf = y as f64;
            for (x, slot) in row.iter_mut().enumerate() {
                let xf = x as f64;
                let sx = m[(0, 0)] * xf + m[(0, 1)] * yf + m[(0, 2)];
                let sy = m[(1, 0)] * xf + m[(1, 1)] * yf + m[(1, 2)];
                let sw = m[(2, 0)] * xf + m[(2, 1)] * yf + m[(2, 2)];
                // points behind the projection center map to the far edge
                let sw = if sw.abs() < SINGULAR_EPS { SINGULAR_EPS } else { sw };
                *slot = ((sx / sw) as f32, (sy / sw) as f32);
            }
        });
    let mut out = Image::new(out_w, out_h, img.channels());
    for c in 0..img.channels() {
        let src = img.plane(c);
        out.plane_mut(c)
            .par_iter_mut()
            .zip(coords.par_iter())
            .for_each(|(o, &(sx, sy))| *o = sample_bilinear(src, w, h_in, sx, sy));
    }
    Ok(out)
}
