//! Far-field light scattered by the ring.
//!
//! The dimensionless field is the OAM expansion
//!
//! ```text
//! M(θ, φ) = Σ_m (−i)^{ℓ+m} J_{ℓ+m}(k₀ρ sin θ) Φ_m e^{i(ℓ+m)φ}
//! ```
//!
//! and [`field_quadrature`] evaluates the same field directly as an integral
//! over the atomic density, which serves as an independent check.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{bunching, BunchingSpectrum, StateVector};
use crate::error::{Error, Result};
use crate::numerics::bessel_j;

/// Default polar and azimuthal grid sizes.
pub const DEFAULT_THETA_COUNT: usize = 181;
pub const DEFAULT_PHI_COUNT: usize = 256;

/// `(−i)^n` for integer `n`.
fn minus_i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// Upper bound on `|J_n(x)|`: `min(1, (|x|/2)^|n| / |n|!)`.
fn bessel_bound(n: i64, x: f64) -> f64 {
    let half = 0.5 * x.abs();
    let mut bound: f64 = 1.0;
    for k in 1..=n.unsigned_abs() {
        bound *= half / k as f64;
        if bound == 0.0 {
            break;
        }
    }
    bound.min(1.0)
}

/// A field value with a bound on the contribution of the harmonics left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// Evaluates the OAM expansion keeping the harmonics `|m| <= m_band`.
pub fn field_expansion(
    bunching: &BunchingSpectrum,
    ell: i32,
    k0_rho: f64,
    theta: f64,
    phi: f64,
    m_band: usize,
) -> Result<FieldSample> {
    if m_band > bunching.band() {
        return Err(Error::Config(format!(
            "m_band = {m_band} exceeds the bunching band {}",
            bunching.band()
        )));
    }
    let x = k0_rho * theta.sin();
    let ell = ell as i64;
    let mut value = Complex64::new(0.0, 0.0);
    let mut tail_bound = 0.0;
    for (m, phi_m) in bunching.iter() {
        if phi_m == Complex64::new(0.0, 0.0) {
            continue;
        }
        let order = ell + m;
        if m.unsigned_abs() as usize > m_band {
            tail_bound += bessel_bound(order, x) * phi_m.norm();
            continue;
        }
        let j = bessel_j(order as i32, x)?;
        value += minus_i_pow(order) * j * phi_m * Complex64::from_polar(1.0, order as f64 * phi);
    }
    Ok(FieldSample { value, tail_bound })
}

/// Direct evaluation of
/// `∫₀^{2π} e^{−i k₀ρ sinθ cos(φ−φ′) + iℓφ′} |Ψ(φ′)|² dφ′`
/// on a uniform `grid_size`-point trapezoid rule, where
/// `|Ψ|² = (1/2π)|Σ c_m e^{imφ′}|²`.
pub fn field_quadrature(
    state: &StateVector,
    ell: i32,
    k0_rho: f64,
    theta: f64,
    phi: f64,
    grid_size: usize,
) -> Result<Complex64> {
    let width = 2 * state.m_max() + 1;
    if grid_size < 16 * width {
        return Err(Error::Config(format!(
            "quadrature grid {grid_size} below 16 x band width ({})",
            16 * width
        )));
    }
    let x = k0_rho * theta.sin();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..grid_size {
        let angle = TAU * j as f64 / grid_size as f64;
        let psi: Complex64 = state
            .modes()
            .zip(state.amplitudes())
            .map(|(m, c)| c * Complex64::from_polar(1.0, m as f64 * angle))
            .sum();
        let phase = -x * (phi - angle).cos() + ell as f64 * angle;
        acc += Complex64::from_polar(psi.norm_sqr(), phase);
    }
    Ok(acc / grid_size as f64)
}

/// Contribution of one bunching harmonic to the averaged intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityComponent {
    /// OAM of the scattered photons, `ℓ′ = ℓ + m`.
    pub ell_prime: i64,
    pub m: i64,
    /// `J²_{ℓ+m}(k₀ρ sinθ) |Φ_m|²`.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedIntensity {
    pub total: f64,
    pub components: Vec<IntensityComponent>,
}

impl AveragedIntensity {
    /// Weight of the component carrying OAM `ell_prime` (zero if absent).
    pub fn component(&self, ell_prime: i64) -> f64 {
        self.components
            .iter()
            .find(|c| c.ell_prime == ell_prime)
            .map_or(0.0, |c| c.weight)
    }
}

/// Azimuthal average `Ī(θ) = Σ_m J²_{ℓ+m}(k₀ρ sinθ) |Φ_m|²` and its terms.
pub fn averaged_intensity(bunching: &BunchingSpectrum, ell: i32, k0_rho: f64, theta: f64) -> Result<AveragedIntensity> {
    let x = k0_rho * theta.sin();
    let components = bunching
        .iter()
        .map(|(m, phi_m)| {
            let ell_prime = ell as i64 + m;
            let j = bessel_j(ell_prime as i32, x)?;
            Ok(IntensityComponent { ell_prime, m, weight: j * j * phi_m.norm_sqr() })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = components.iter().map(|c| c.weight).sum();
    Ok(AveragedIntensity { total, components })
}

/// Field and intensity on a uniform `(θ, φ)` product grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiationPattern {
    /// Polar angles from 0 to π inclusive.
    pub theta_grid: Vec<f64>,
    /// Azimuthal angles in `[0, 2π)`.
    pub phi_grid: Vec<f64>,
    /// `field[i][j] = M(theta_grid[i], phi_grid[j])`.
    pub field: Vec<Vec<Complex64>>,
    pub avg_intensity: Vec<f64>,
    pub components: Vec<Vec<IntensityComponent>>,
}

impl RadiationPattern {
    pub fn intensity(&self, theta_index: usize, phi_index: usize) -> f64 {
        self.field[theta_index][phi_index].norm_sqr()
    }
}

/// Radiation pattern of a state on a `theta_count × phi_count` grid.
pub fn pattern_grid(state: &StateVector, ell: i32, k0_rho: f64, theta_count: usize, phi_count: usize) -> Result<RadiationPattern> {
    pattern_from_bunching(&bunching(state), ell, k0_rho, theta_count, phi_count)
}

/// As [`pattern_grid`], from an explicit bunching spectrum. Rows are computed
/// in parallel and assembled in θ order.
pub fn pattern_from_bunching(
    bunching: &BunchingSpectrum,
    ell: i32,
    k0_rho: f64,
    theta_count: usize,
    phi_count: usize,
) -> Result<RadiationPattern> {
    if theta_count < 2 || phi_count < 2 {
        return Err(Error::Config(format!(
            "radiation grid needs at least 2x2 points, got {theta_count}x{phi_count}"
        )));
    }
    let theta_grid: Vec<f64> = (0..theta_count)
        .map(|i| PI * i as f64 / (theta_count - 1) as f64)
        .collect();
    let phi_grid: Vec<f64> = (0..phi_count).map(|j| TAU * j as f64 / phi_count as f64).collect();
    let ell64 = ell as i64;

    let rows = theta_grid
        .par_iter()
        .map(|&theta| {
            let x = k0_rho * theta.sin();
            let terms = bunching
                .iter()
                .map(|(m, phi_m)| {
                    let order = ell64 + m;
                    Ok((order, minus_i_pow(order) * bessel_j(order as i32, x)? * phi_m))
                })
                .collect::<Result<Vec<_>>>()?;
            let row = phi_grid
                .iter()
                .map(|&phi| {
                    terms
                        .iter()
                        .map(|&(order, a)| a * Complex64::from_polar(1.0, order as f64 * phi))
                        .sum()
                })
                .collect::<Vec<Complex64>>();
            let avg = averaged_intensity(bunching, ell, k0_rho, theta)?;
            Ok((row, avg))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut field = Vec::with_capacity(theta_count);
    let mut avg_intensity = Vec::with_capacity(theta_count);
    let mut components = Vec::with_capacity(theta_count);
    for (row, avg) in rows {
        field.push(row);
        avg_intensity.push(avg.total);
        components.push(avg.components);
    }
    Ok(RadiationPattern { theta_grid, phi_grid, field, avg_intensity, components })
}

/// `|M(θ, φ_j)|²` on `phi_count` uniform azimuths, full bunching band.
pub fn azimuthal_intensity(
    bunching: &BunchingSpectrum,
    ell: i32,
    k0_rho: f64,
    theta: f64,
    phi_count: usize,
) -> Result<Vec<f64>> {
    (0..phi_count)
        .map(|j| {
            let phi = TAU * j as f64 / phi_count as f64;
            Ok(field_expansion(bunching, ell, k0_rho, theta, phi, bunching.band())?.value.norm_sqr())
        })
        .collect()
}

/// Local maxima of a periodic sequence (strictly greater than the left
/// neighbour, at least the right one).
pub fn count_periodic_maxima(values: &[f64]) -> usize {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let prev = values[(i + n - 1) % n];
            let next = values[(i + 1) % n];
            values[i] > prev && values[i] >= next
        })
        .count()
}
