//! Linear stability of the uniform (unbunched) condensate.
//!
//! Each bunching harmonic `m` evolves with the eigenvalue pair
//! `λ_m = ±i m sqrt(m² + γ V_m)`; a finite `Im V_m` is what makes
//! `Re λ_m` nonzero.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::principal_sqrt;
use crate::potential::{FourierPotential, SystemParams};

/// Both roots `(+λ, −λ)` for harmonic `m`.
pub fn eigenvalues(params: &SystemParams, fp: &FourierPotential, m: i64) -> Result<(Complex64, Complex64)> {
    let v = fp.coefficient(m)?;
    Ok(eigenvalue_pair(m, params.gamma, v))
}

/// Eigenvalue pair from an explicit harmonic `V_m`.
pub fn eigenvalue_pair(m: i64, gamma: f64, v_m: Complex64) -> (Complex64, Complex64) {
    let mf = m as f64;
    let root = principal_sqrt(Complex64::new(mf * mf, 0.0) + v_m * gamma);
    let plus = Complex64::new(0.0, mf) * root;
    (plus, -plus)
}

/// `|Re λ_m|`.
pub fn growth_rate(params: &SystemParams, fp: &FourierPotential, m: i64) -> Result<f64> {
    Ok(eigenvalues(params, fp, m)?.0.re.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySpectrum {
    pub modes: Vec<i64>,
    pub eigenvalue_pairs: Vec<(Complex64, Complex64)>,
    pub growth_rates: Vec<f64>,
}

impl StabilitySpectrum {
    pub fn new(params: &SystemParams, fp: &FourierPotential, modes: RangeInclusive<i64>) -> Result<Self> {
        let modes: Vec<i64> = modes.collect();
        let eigenvalue_pairs = modes
            .iter()
            .map(|&m| eigenvalues(params, fp, m))
            .collect::<Result<Vec<_>>>()?;
        let growth_rates = eigenvalue_pairs.iter().map(|(p, _)| p.re.abs()).collect();
        Ok(Self { modes, eigenvalue_pairs, growth_rates })
    }

    /// Mode with the largest growth rate and that rate (lowest `m` on ties).
    pub fn dominant(&self) -> Option<(i64, f64)> {
        let mut best: Option<(i64, f64)> = None;
        for (&m, &r) in self.modes.iter().zip(&self.growth_rates) {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((m, r));
            }
        }
        best
    }
}

/// Growth-rate map over ring radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSweep {
    pub k0_rho: Vec<f64>,
    pub modes: Vec<i64>,
    /// `rates[i][j]` is `|Re λ|` for `k0_rho[i]` and `modes[j]`.
    pub rates: Vec<Vec<f64>>,
    pub argmax_m: Vec<i64>,
    pub max_rate: Vec<f64>,
}

/// Evaluates the growth rates on a `(k₀ρ, m)` grid. Each radius rebuilds the
/// potential spectrum; radii are processed in parallel and assembled in
/// input order.
pub fn spectrum_sweep(
    template: &SystemParams,
    k0_rho_grid: &[f64],
    m_range: RangeInclusive<i64>,
) -> Result<SpectrumSweep> {
    if k0_rho_grid.is_empty() {
        return Err(Error::Config("spectrum sweep needs at least one k0_rho value".into()));
    }
    if m_range.is_empty() {
        return Err(Error::Config("spectrum sweep needs a nonempty mode range".into()));
    }
    let reach = m_range.start().unsigned_abs().max(m_range.end().unsigned_abs()) as usize;
    let rows: Vec<StabilitySpectrum> = k0_rho_grid
        .par_iter()
        .map(|&k0_rho| {
            let k_max = template.k_max.max(reach);
            let m_max = template.m_max.max(k_max.div_ceil(2));
            let params = SystemParams { k0_rho, m_max, k_max, ..*template };
            FourierPotential::new(&params)
                .and_then(|fp| StabilitySpectrum::new(&params, &fp, m_range.clone()))
                .map_err(|e| annotate(e, k0_rho))
        })
        .collect::<Result<_>>()?;

    let modes: Vec<i64> = m_range.collect();
    let (argmax_m, max_rate) = rows
        .iter()
        .map(|row| row.dominant().expect("nonempty mode range"))
        .unzip();
    Ok(SpectrumSweep {
        k0_rho: k0_rho_grid.to_vec(),
        modes,
        rates: rows.into_iter().map(|r| r.growth_rates).collect(),
        argmax_m,
        max_rate,
    })
}

fn annotate(err: Error, k0_rho: f64) -> Error {
    match err {
        Error::Config(msg) => Error::Config(format!("sweep point k0_rho = {k0_rho}: {msg}")),
        Error::Domain(msg) => Error::Domain(format!("sweep point k0_rho = {k0_rho}: {msg}")),
        other => other,
    }
}

/// Threshold ratios `γ|V_m| / m²` separating the regimes.
pub const CLASSICAL_RATIO: f64 = 10.0;
pub const QUANTUM_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Classical,
    Quantum,
    Intermediate,
}

pub fn classify_regime(m: i64, gamma: f64, v_m: Complex64) -> Regime {
    let coupling = gamma * v_m.norm();
    let kinetic = (m * m) as f64;
    if coupling > CLASSICAL_RATIO * kinetic {
        Regime::Classical
    } else if coupling < QUANTUM_RATIO * kinetic {
        Regime::Quantum
    } else {
        Regime::Intermediate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(gamma: f64, k0_rho: f64, ell: i32) -> (SystemParams, FourierPotential) {
        let p = SystemParams::new(gamma, 0.1, k0_rho, ell).unwrap();
        let fp = FourierPotential::new(&p).unwrap();
        (p, fp)
    }

    #[test]
    fn free_rotor() {
        let (p, fp) = system(0.0, 2.0, 1);
        for m in 1..6 {
            let (a, b) = eigenvalues(&p, &fp, m).unwrap();
            assert!((a - Complex64::new(0.0, (m * m) as f64)).norm() < 1e-14);
            assert_eq!(a, -b);
        }
        let spec = StabilitySpectrum::new(&p, &fp, -10..=10).unwrap();
        assert!(spec.growth_rates.iter().all(|&r| r < 1e-14));
    }

    #[test]
    fn no_growth_without_winding() {
        let (p, fp) = system(0.2, 4.0, 0);
        for m in 1..=20 {
            assert!(growth_rate(&p, &fp, m).unwrap() < 1e-14);
        }
    }

    #[test]
    fn zero_mode_is_neutral() {
        let (p, fp) = system(0.5, 3.0, 2);
        assert_eq!(growth_rate(&p, &fp, 0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_band_mode() {
        let (p, fp) = system(0.5, 3.0, 2);
        let err = eigenvalues(&p, &fp, fp.k_max() as i64 + 1).unwrap_err();
        assert!(matches!(err, Error::Range { .. }));
    }

    #[test]
    fn sign_of_mode_does_not_change_rate() {
        let (p, fp) = system(0.3, 4.5, 1);
        for m in 1..=12 {
            let a = growth_rate(&p, &fp, m).unwrap();
            let b = growth_rate(&p, &fp, -m).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn quantum_limit() {
        let v = Complex64::new(0.3, -0.7);
        for m in 1..5i64 {
            let gamma = 1e-3 * (m * m) as f64 / v.norm();
            let rate = eigenvalue_pair(m, gamma, v).0.re.abs();
            let approx = gamma * v.im.abs() / 2.0;
            assert!((rate - approx).abs() < 0.01 * approx);
        }
    }

    #[test]
    fn classical_limit() {
        let v = Complex64::new(0.3, -0.7);
        for m in 1..5i64 {
            let gamma = 1e3 * (m * m) as f64 / v.norm();
            let lambda = eigenvalue_pair(m, gamma, v).0;
            let approx = m as f64 * (gamma * v.norm()).sqrt();
            assert!((lambda.norm() - approx).abs() < 0.01 * approx);
        }
    }

    #[test]
    fn regimes() {
        let v = Complex64::new(0.0, 1.0);
        assert_eq!(classify_regime(2, 0.0, v), Regime::Quantum);
        assert_eq!(classify_regime(2, 400.0, v), Regime::Classical);
        assert_eq!(classify_regime(2, 4.0, v), Regime::Intermediate);
    }

    #[test]
    fn sweep_matches_direct_call() {
        let p = SystemParams::new(0.2, 0.1, 3.0, 1).unwrap();
        let sweep = spectrum_sweep(&p, &[3.0], 1..=10).unwrap();
        let fp = FourierPotential::new(&SystemParams { k_max: p.k_max.max(10), ..p }).unwrap();
        for (j, m) in (1..=10).enumerate() {
            assert_eq!(sweep.rates[0][j], growth_rate(&p, &fp, m).unwrap());
        }
    }

    #[test]
    fn sweep_without_coupling_is_flat() {
        let p = SystemParams::new(0.0, 0.1, 1.0, 1).unwrap();
        let sweep = spectrum_sweep(&p, &[1.0, 2.0, 5.0], 1..=8).unwrap();
        assert!(sweep.rates.iter().flatten().all(|&r| r == 0.0));
    }

    #[test]
    fn sweep_peak_follows_radius() {
        let p = SystemParams::new(0.2, 0.1, 1.0, 1).unwrap();
        let grid = [2.0, 4.0, 6.0, 8.0];
        let sweep = spectrum_sweep(&p, &grid, 1..=20).unwrap();
        for (k0, m) in grid.iter().zip(&sweep.argmax_m) {
            assert!((m - k0.round() as i64).abs() <= 1, "k0ρ={k0}: argmax {m}");
        }
    }

    #[test]
    fn empty_sweep_rejected() {
        let p = SystemParams::new(0.2, 0.1, 1.0, 1).unwrap();
        assert!(spectrum_sweep(&p, &[], 1..=3).is_err());
    }
}
