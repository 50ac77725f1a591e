//! Index remapping for out-of-range coordinates.

/// Half-sample symmetric reflection: `-1 -> 0`, `-2 -> 1`, `n -> n - 1`.
///
/// Every source sample receives a total weight of one under a normalized
/// symmetric kernel, so filtering with this border keeps the image mean.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Whole-sample reflection without repeating the edge: `-1 -> 1`, `n -> n - 2`.
///
/// Preserves index parity, which keeps a Bayer phase intact across the border.
#[inline]
pub fn reflect101(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    if m < n {
        m as usize
    } else {
        (period - m) as usize
    }
}

#[inline]
pub fn clamp(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_repeats_edge() {
        let got: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect(-7, 1), 0);
    }

    #[test]
    fn reflect101_skips_edge_and_keeps_parity() {
        let got: Vec<usize> = (-3..8).map(|i| reflect101(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1]);
        for i in -20..20isize {
            assert_eq!(reflect101(i, 6) % 2, i.rem_euclid(2) as usize);
        }
    }

    #[test]
    fn clamp_replicates() {
        assert_eq!(clamp(-5, 3), 0);
        assert_eq!(clamp(7, 3), 2);
        assert_eq!(clamp(1, 3), 1);
    }
}
