use crate::imgcore::Image;

/// Binary validity map: 1 where the flow is forward-backward consistent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OcclusionMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl OcclusionMask {
    pub fn all_valid(width: usize, height: usize) -> Self {
        OcclusionMask {
            width,
            height,
            data: vec![1; width * height],
        }
    }

    pub fn all_occluded(width: usize, height: usize) -> Self {
        OcclusionMask {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(u8::from(f(x, y)));
            }
        }
        OcclusionMask { width, height, data }
    }

    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        OcclusionMask { width, height, data }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn values(&self) -> &[u8] {
        &self.data
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&m| m != 0).count()
    }

    /// Single-channel image with 1.0 on valid pixels.
    pub fn to_image(&self) -> Image {
        Image::from_vec(
            self.width,
            self.height,
            1,
            self.data.iter().map(|&m| f32::from(m)).collect(),
        )
        .expect("mask dimensions are consistent")
    }
}
