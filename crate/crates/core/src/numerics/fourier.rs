use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex Fourier coefficients `f_k` for `|k| <= k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonics {
    k_max: usize,
    values: Vec<Complex64>,
}

impl Harmonics {
    pub fn from_values(k_max: usize, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), 2 * k_max + 1, "expected 2*k_max+1 coefficients");
        Self { k_max, values }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Coefficient at harmonic `k`, or `None` outside the band.
    pub fn get(&self, k: i64) -> Option<Complex64> {
        if k.unsigned_abs() as usize > self.k_max {
            return None;
        }
        Some(self.values[(k + self.k_max as i64) as usize])
    }

    /// Coefficients ordered from `-k_max` to `k_max`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let offset = self.k_max as i64;
        self.values.iter().enumerate().map(move |(i, v)| (i as i64 - offset, *v))
    }
}

/// Discrete approximation of `(1/2π) ∫ f(φ) e^{-ikφ} dφ` from samples of `f`
/// on the uniform grid `φ_j = 2πj/G`.
///
/// `G` must be a power of two and at least `4 (2 k_max + 1)`.
pub fn periodic_fourier_coefficients(samples: &[Complex64], k_max: usize) -> Result<Harmonics> {
    let g = samples.len();
    if !g.is_power_of_two() {
        return Err(Error::Config(format!("fourier grid size {g} is not a power of two")));
    }
    if g < 4 * (2 * k_max + 1) {
        return Err(Error::Config(format!(
            "fourier grid size {g} too small for k_max = {k_max} (need >= {})",
            4 * (2 * k_max + 1)
        )));
    }
    let mut buffer = samples.to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(g).process(&mut buffer);
    let scale = 1.0 / g as f64;
    let values = (-(k_max as i64)..=k_max as i64)
        .map(|k| buffer[k.rem_euclid(g as i64) as usize] * scale)
        .collect();
    Ok(Harmonics { k_max, values })
}
