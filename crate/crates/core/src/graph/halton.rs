use crate::error::{Error, Result};
use crate::worlds::Config;

const PRIMES: [u64; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

/// Number of dimensions the Halton generator supports.
pub const MAX_HALTON_DIM: usize = PRIMES.len();

fn radical_inverse(mut index: u64, base: u64) -> f64 {
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

/// Halton point `index` (1-based); coordinate `k` uses the `k`-th prime as base.
pub fn halton_point(index: u64, dim: usize) -> Result<Config> {
    if index == 0 {
        return Err(Error::InvalidArgument("halton index starts at 1".into()));
    }
    if dim == 0 || dim > MAX_HALTON_DIM {
        return Err(Error::HaltonDimension { dim, max: MAX_HALTON_DIM });
    }
    Config::new(PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect())
}

/// The first `n` Halton points, indices `1..=n`.
pub fn halton_points(n: usize, dim: usize) -> Result<Vec<Config>> {
    (1..=n as u64).map(|i| halton_point(i, dim)).collect()
}
