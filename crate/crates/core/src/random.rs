//! Seeded random fields with prescribed frequency support.
//!
//! Every generator takes an explicit RNG; [`stream_rng`] derives independent
//! per-trial streams from `(seed, stream)` so serial and parallel callers see
//! the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectral::{Grid, SpectralField};
use crate::Complex64;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Gaussian coefficients weighted by `weight(ξ)`, normalized to unit `L²`
/// (the zero field if the weight vanishes on every grid frequency).
pub fn random_weighted(grid: &Grid, rng: &mut ChaCha8Rng, weight: impl Fn(f64) -> f64) -> SpectralField {
    let coeffs: Vec<Complex64> = grid
        .frequencies()
        .iter()
        .map(|&xi| {
            let z = gaussian(rng);
            z * weight(xi)
        })
        .collect();
    let f = SpectralField::from_coeffs(grid, coeffs);
    let n = f.l2_norm();
    if n > 0.0 {
        f.scale_real(1.0 / n)
    } else {
        f
    }
}

/// Unit-norm field with Gaussian coefficients on `lo <= |ξ| <= hi`.
pub fn random_band_limited(grid: &Grid, lo: f64, hi: f64, seed: u64) -> SpectralField {
    let mut rng = stream_rng(seed, 0);
    random_weighted(grid, &mut rng, |xi| if (lo..=hi).contains(&xi.abs()) { 1.0 } else { 0.0 })
}

/// Unit-norm field localized to Littlewood-Paley band `j` (coefficients
/// shaped by the band symbol).
pub fn random_in_band(grid: &Grid, j: u32, rng: &mut ChaCha8Rng) -> SpectralField {
    random_weighted(grid, rng, |xi| crate::spectral::lp_symbol(j, xi))
}

/// Real-valued smooth random field: Gaussian spectral envelope
/// `exp(-(ξ/width)²)`, unit `L²` norm.
pub fn random_smooth_real(grid: &Grid, width: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let f = random_weighted(grid, rng, |xi| (-(xi / width).powi(2)).exp());
    let real = f.map_values(|z| Complex64::new(z.re, 0.0));
    let n = real.l2_norm();
    if n > 0.0 {
        real.scale_real(1.0 / n)
    } else {
        real
    }
}
