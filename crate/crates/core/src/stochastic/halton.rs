use crate::error::{Result, TcaError};

/// Highest dimension served by [`low_discrepancy_points`].
pub const MAX_HALTON_DIM: usize = 16;

pub const PRIMES: [u64; MAX_HALTON_DIM] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton point with sequence index `index` (1-based; index 0 is the origin
/// and is skipped by [`low_discrepancy_points`]).
pub(crate) fn halton_point(index: u64, dim: usize, out: &mut [f64]) {
    for (d, slot) in out.iter_mut().enumerate().take(dim) {
        *slot = radical_inverse(index, PRIMES[d]);
    }
}

/// First `count` points of the unscrambled Halton sequence in `[0,1)^dim`,
/// bases being the first `dim` primes, starting from index 1.
pub fn low_discrepancy_points(dim: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || dim > MAX_HALTON_DIM {
        return Err(TcaError::Domain(format!(
            "quasi-random dimension must be in 1..={MAX_HALTON_DIM}, got {dim}"
        )));
    }
    if count == 0 {
        return Err(TcaError::invalid("point count must be at least 1"));
    }
    let mut pts = Vec::with_capacity(count);
    for i in 1..=count as u64 {
        let mut p = vec![0.0; dim];
        halton_point(i, dim, &mut p);
        pts.push(p);
    }
    Ok(pts)
}
