use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;

/// Noise standard deviation giving `snr_db` relative to the mean power of `m`.
pub fn noise_sigma(m: &NonNegMatrix, snr_db: f64) -> f64 {
    let power = m.as_slice().iter().map(|v| v * v).sum::<f64>() / m.as_slice().len() as f64;
    (power * 10f64.powf(-snr_db / 10.0)).sqrt()
}

/// I.i.d. `N(0, σ²)` field shaped like `m`, with `σ` from [`noise_sigma`].
pub fn gaussian_noise(m: &NonNegMatrix, snr_db: f64, seed: u64) -> Result<(Array2<f64>, f64)> {
    if m.as_slice().is_empty() {
        return Err(Error::EmptyInput("noise target".into()));
    }
    let sigma = noise_sigma(m, snr_db);
    if !sigma.is_finite() {
        return Err(Error::Config(format!("snr {snr_db} dB gives non-finite noise")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Array2::from_shape_simple_fn(m.shape(), || normal.sample(&mut rng));
    Ok((noise, sigma))
}

/// `max(m + noise, 0)`.
pub fn add_gaussian_noise_snr(m: &NonNegMatrix, snr_db: f64, seed: u64) -> Result<NonNegMatrix> {
    let (noise, _) = gaussian_noise(m, snr_db, seed)?;
    let sum = (m.as_array() + &noise).mapv(|v| v.max(0.0));
    NonNegMatrix::from_array(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_from_definition() {
        let m = NonNegMatrix::ones(10, 10).unwrap();
        assert!((noise_sigma(&m, 10.0).powi(2) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn huge_snr_is_nearly_identity() {
        let m = NonNegMatrix::new(2, 3, vec![0.5, 1.0, 2.0, 0.1, 0.0, 3.0]).unwrap();
        let out = add_gaussian_noise_snr(&m, 300.0, 4).unwrap();
        assert!(out.max_abs_diff(&m).unwrap() < 1e-6);
    }

    #[test]
    fn deterministic_and_non_negative() {
        let m = NonNegMatrix::filled(20, 20, 0.2).unwrap();
        let a = add_gaussian_noise_snr(&m, 0.0, 9).unwrap();
        assert_eq!(a, add_gaussian_noise_snr(&m, 0.0, 9).unwrap());
        assert_ne!(a, add_gaussian_noise_snr(&m, 0.0, 10).unwrap());
        assert!(a.as_slice().contains(&0.0));
    }
}
