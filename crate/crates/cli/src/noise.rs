//! Deterministic Gaussian noise injection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tvpwl::ScalarGrid;

/// Add zero-mean Gaussian noise with standard deviation `std`, reproducible
/// from `seed`. `std = 0` returns the input unchanged.
pub fn add_gaussian_noise(u: &ScalarGrid, std: f64, seed: u64) -> Result<ScalarGrid, tvpwl::Error> {
    if std < 0.0 || !std.is_finite() {
        return Err(tvpwl::Error::InvalidParameter(format!(
            "noise standard deviation must be nonnegative, got {std}"
        )));
    }
    if std == 0.0 {
        return Ok(u.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).expect("validated std");
    let values = u
        .values()
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    ScalarGrid::from_values(u.geometry().clone(), values)
}
