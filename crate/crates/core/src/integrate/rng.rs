//! Reproducible random streams: one ChaCha8 stream per `(seed, path index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type PathRng = ChaCha8Rng;

/// Independent stream for path `index` under master `seed`. Streams depend
/// only on these two numbers, never on scheduling.
pub fn path_rng(seed: u64, index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One Brownian increment with variance `dt`.
#[inline]
pub fn brownian_increment<R: rand::Rng + ?Sized>(rng: &mut R, sqrt_dt: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sqrt_dt * z
}

/// `steps` independent `N(0, dt)` increments.
pub fn brownian_increments<R: rand::Rng + ?Sized>(rng: &mut R, dt: f64, steps: usize) -> Vec<f64> {
    assert!(dt > 0.0, "dt must be positive");
    let sqrt_dt = dt.sqrt();
    (0..steps).map(|_| brownian_increment(rng, sqrt_dt)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_when_no_steps() {
        assert!(brownian_increments(&mut path_rng(1, 0), 0.1, 0).is_empty());
    }

    #[test]
    fn increments_have_variance_dt() {
        let n = 1_000_000;
        let dt = 0.01;
        let db = brownian_increments(&mut path_rng(3, 0), dt, n);
        let mean = db.iter().sum::<f64>() / n as f64;
        let var = db.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * (dt / n as f64).sqrt());
        assert!((var - dt).abs() < 3.0 * dt * (2.0 / n as f64).sqrt(), "{var}");
    }

    #[test]
    fn same_seed_same_stream() {
        let a = brownian_increments(&mut path_rng(42, 7), 0.01, 1000);
        let b = brownian_increments(&mut path_rng(42, 7), 0.01, 1000);
        assert_eq!(a, b);
        let c = brownian_increments(&mut path_rng(42, 8), 0.01, 1000);
        assert_ne!(a, c);
    }
}
