//! The light-mediated pair potential between atoms on the ring and its
//! Fourier harmonics.
//!
//! ```text
//! V(φ) = -cos[2 k₀ρ q(φ) - ℓ φ] / (k₀ρ q(φ)),   q(φ) = sqrt(sin²(φ/2) + ε²)
//! ```

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{periodic_fourier_coefficients, Harmonics};

/// Cutoff used when none is given.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Dimensionless configuration of the pumped ring plus band truncations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Collective light-atom coupling γ.
    pub gamma: f64,
    /// Short-distance cutoff ε of the pair potential.
    pub epsilon: f64,
    /// Ring radius in units of the inverse pump wavenumber.
    pub k0_rho: f64,
    /// Pump winding number ℓ.
    pub ell: i32,
    /// OAM band half-width: amplitudes are kept for `|m| <= m_max`.
    pub m_max: usize,
    /// Number of retained potential harmonics.
    pub k_max: usize,
}

impl SystemParams {
    /// Parameters with the default band `m_max = |ℓ| + ceil(k₀ρ) + 12`,
    /// `k_max = 2 m_max`.
    pub fn new(gamma: f64, epsilon: f64, k0_rho: f64, ell: i32) -> Result<Self> {
        let m_max = Self::default_m_max(k0_rho, ell);
        Self::with_band(gamma, epsilon, k0_rho, ell, m_max, 2 * m_max)
    }

    pub fn with_band(
        gamma: f64,
        epsilon: f64,
        k0_rho: f64,
        ell: i32,
        m_max: usize,
        k_max: usize,
    ) -> Result<Self> {
        let params = Self { gamma, epsilon, k0_rho, ell, m_max, k_max };
        params.validate()?;
        Ok(params)
    }

    pub fn default_m_max(k0_rho: f64, ell: i32) -> usize {
        let radius = if k0_rho.is_finite() && k0_rho > 0.0 { k0_rho.ceil() as usize } else { 0 };
        ell.unsigned_abs() as usize + radius + 12
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.k0_rho.is_finite() && self.k0_rho > 0.0) {
            return Err(Error::Config(format!("k0_rho must be > 0, got {}", self.k0_rho)));
        }
        if self.m_max < self.ell.unsigned_abs() as usize + 2 {
            return Err(Error::Config(format!(
                "m_max must be >= |ell| + 2 = {}, got {}",
                self.ell.unsigned_abs() + 2,
                self.m_max
            )));
        }
        if self.k_max > 2 * self.m_max {
            return Err(Error::Config(format!(
                "k_max must be <= 2 m_max = {}, got {}",
                2 * self.m_max,
                self.k_max
            )));
        }
        Ok(())
    }

    /// Stable 64-bit digest of every field.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.gamma.to_bits().to_le_bytes());
        hasher.update(self.epsilon.to_bits().to_le_bytes());
        hasher.update(self.k0_rho.to_bits().to_le_bytes());
        hasher.update(self.ell.to_le_bytes());
        hasher.update((self.m_max as u64).to_le_bytes());
        hasher.update((self.k_max as u64).to_le_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
    }
}

/// Evaluates the pair potential at azimuthal separation `phi`.
pub fn pair_potential(phi: f64, params: &SystemParams) -> f64 {
    let phi = phi.rem_euclid(TAU);
    let half = (0.5 * phi).sin();
    let q = (half * half + params.epsilon * params.epsilon).sqrt();
    let kq = params.k0_rho * q;
    -(2.0 * kq - params.ell as f64 * phi).cos() / kq
}

/// Quadrature grid for the harmonics: a power of two that resolves both the
/// requested band and the cusp of width ~ε at zero separation.
pub fn quadrature_grid_size(params: &SystemParams) -> usize {
    let by_cutoff = (64.0 / params.epsilon).ceil() as usize;
    8192usize.max(32 * params.k_max).max(by_cutoff).next_power_of_two()
}

/// Largest change tolerated in any harmonic when the grid is doubled.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-10;

/// Harmonics `V_k` of the pair potential for `|k| <= k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierPotential {
    coefficients: Harmonics,
    params_fingerprint: u64,
}

impl FourierPotential {
    /// Builds the spectrum and checks it against a doubled grid.
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let grid = quadrature_grid_size(params);
        let coarse = sampled_harmonics(params, grid)?;
        let fine = sampled_harmonics(params, 2 * grid)?;
        for ((k, a), (_, b)) in coarse.iter().zip(fine.iter()) {
            let change = (a - b).norm();
            if change > CONVERGENCE_TOLERANCE || !change.is_finite() {
                return Err(Error::Resolution { k, change });
            }
        }
        Ok(Self {
            coefficients: fine,
            params_fingerprint: params.fingerprint(),
        })
    }

    pub fn k_max(&self) -> usize {
        self.coefficients.k_max()
    }

    /// `V_k`, or a range error outside the band.
    pub fn coefficient(&self, k: i64) -> Result<Complex64> {
        self.coefficients.get(k).ok_or(Error::Range { m: k, k_max: self.k_max() })
    }

    pub fn harmonics(&self) -> &Harmonics {
        &self.coefficients
    }

    pub fn params_fingerprint(&self) -> u64 {
        self.params_fingerprint
    }

    /// `V_0`, the mean potential; real.
    pub fn mean(&self) -> f64 {
        self.coefficients.get(0).map(|v| v.re).unwrap_or_default()
    }
}

/// Shorthand for [`FourierPotential::new`].
pub fn fourier_coefficients(params: &SystemParams) -> Result<FourierPotential> {
    FourierPotential::new(params)
}

fn sampled_harmonics(params: &SystemParams, grid: usize) -> Result<Harmonics> {
    let samples: Vec<Complex64> = (0..grid)
        .map(|j| pair_potential(TAU * j as f64 / grid as f64, params).into())
        .collect();
    let raw = periodic_fourier_coefficients(&samples, params.k_max)?;
    // V(φ) is real, so project onto V_{-k} = conj(V_k).
    let k_max = params.k_max as i64;
    let values = (-k_max..=k_max)
        .map(|k| {
            let a = raw.get(k).expect("in band");
            let b = raw.get(-k).expect("in band");
            (a + b.conj()) * 0.5
        })
        .collect();
    Ok(Harmonics::from_values(params.k_max, values))
}

/// Rate coefficients `g_k = γ |Im V_k|` for `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCoefficients {
    values: Vec<f64>,
}

impl RateCoefficients {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Single channel `k` with rate `g`, everything else zero.
    pub fn single_channel(k: usize, g: f64, k_max: usize) -> Self {
        let mut values = vec![0.0; k_max];
        values[k - 1] = g;
        Self { values }
    }

    /// `g_k`; zero for `k = 0` or beyond the table.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.values.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn k_max(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, g)| (i + 1, *g))
    }

    /// Channel with the largest rate (lowest `k` on ties).
    pub fn dominant(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, g) in self.iter() {
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((k, g));
            }
        }
        best.filter(|(_, g)| *g > 0.0).map(|(k, _)| k)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub fn rate_coefficients(fp: &FourierPotential, gamma: f64) -> RateCoefficients {
    RateCoefficients {
        values: (1..=fp.k_max() as i64)
            .map(|k| gamma * fp.coefficients.get(k).expect("in band").im.abs())
            .collect(),
    }
}

/// Dispersion coefficients `α_k = (γ/2) Re V_k` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionCoefficients {
    values: Vec<f64>,
}

impl DispersionCoefficients {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().copied().enumerate()
    }
}

pub fn dispersion_coefficients(fp: &FourierPotential, gamma: f64) -> DispersionCoefficients {
    DispersionCoefficients {
        values: (0..=fp.k_max() as i64)
            .map(|k| 0.5 * gamma * fp.coefficients.get(k).expect("in band").re)
            .collect(),
    }
}
