//! Coupled-mode dynamics of the OAM amplitudes `c_m`:
//!
//! ```text
//! dc_m/dτ = -i m² c_m - i (γ/2) Σ_k V_k c_{m-k} Φ_k,   Φ_k = Σ_n c*_{n-k} c_n
//! ```
//!
//! The band `|m| <= m_max` is truncated hard: amplitudes outside it are zero
//! and never wrap around.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_ode, OdeControls, Trajectory};
use crate::potential::{FourierPotential, SystemParams};

/// Largest tolerated `|Σ|c_m|² − 1|` at any sample.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;
/// Largest tolerated population in the outer tenth of the band.
pub const EDGE_POPULATION_LIMIT: f64 = 1e-6;
/// Default seed amplitude for the non-condensed modes.
pub const DEFAULT_SEED_AMPLITUDE: f64 = 1e-4;

/// Amplitudes `c_m` for `m ∈ [−m_max, m_max]` at time `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub tau: f64,
    m_max: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(tau: f64, m_max: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 2 * m_max + 1 {
            return Err(Error::Config(format!(
                "state needs {} amplitudes for m_max = {m_max}, got {}",
                2 * m_max + 1,
                amplitudes.len()
            )));
        }
        Ok(Self { tau, m_max, amplitudes })
    }

    /// All population in the single mode `m`.
    pub fn single_mode(m_max: usize, m: i64) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * m_max + 1];
        amplitudes[(m + m_max as i64) as usize] = Complex64::new(1.0, 0.0);
        Self { tau: 0.0, m_max, amplitudes }
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    /// Amplitudes ordered from `m = −m_max` upward.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.m_max {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitudes[(m + self.m_max as i64) as usize]
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let m = self.m_max as i64;
        -m..=m
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// How the seed amplitudes of the non-condensed modes are phased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "seed")]
pub enum SeedMode {
    /// Real positive seeds.
    Deterministic,
    /// Uniformly random phases drawn from a ChaCha8 stream with this seed.
    Random(u64),
}

/// A condensate in `m = 0` with every other mode seeded at `seed_amplitude`.
pub fn default_initial_state(params: &SystemParams, seed_amplitude: f64, mode: SeedMode) -> Result<StateVector> {
    if !(seed_amplitude > 0.0 && seed_amplitude <= 1e-2) {
        return Err(Error::Config(format!(
            "seed amplitude must lie in (0, 1e-2], got {seed_amplitude}"
        )));
    }
    let m_max = params.m_max;
    let mut rng = match mode {
        SeedMode::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        SeedMode::Deterministic => None,
    };
    let mut amplitudes = Vec::with_capacity(2 * m_max + 1);
    for m in -(m_max as i64)..=m_max as i64 {
        if m == 0 {
            let rest = 2.0 * m_max as f64 * seed_amplitude * seed_amplitude;
            amplitudes.push(Complex64::new((1.0 - rest).sqrt(), 0.0));
            continue;
        }
        let phase = rng.as_mut().map_or(0.0, |r| r.gen::<f64>() * TAU);
        amplitudes.push(Complex64::from_polar(seed_amplitude, phase));
    }
    StateVector::new(0.0, m_max, amplitudes)
}

/// Azimuthal bunching `Φ_m` for `|m| <= band`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BunchingSpectrum {
    band: usize,
    coefficients: Vec<Complex64>,
}

impl BunchingSpectrum {
    pub fn from_coefficients(band: usize, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != 2 * band + 1 {
            return Err(Error::Config(format!(
                "bunching spectrum needs {} coefficients for band {band}",
                2 * band + 1
            )));
        }
        Ok(Self { band, coefficients })
    }

    /// Builds a spectrum from `Φ_m` for `m >= 0`; negative harmonics follow
    /// from `Φ_{−m} = conj(Φ_m)`. `Φ_0` is forced to its real part.
    pub fn from_nonnegative(values: &[Complex64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("bunching spectrum needs at least Φ_0".into()));
        }
        let band = values.len() - 1;
        let mut coefficients = vec![Complex64::new(0.0, 0.0); 2 * band + 1];
        for (m, v) in values.iter().enumerate() {
            let v = if m == 0 { Complex64::new(v.re, 0.0) } else { *v };
            coefficients[band + m] = v;
            coefficients[band - m] = v.conj();
        }
        Ok(Self { band, coefficients })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn get(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.band {
            return Complex64::new(0.0, 0.0);
        }
        self.coefficients[(m + self.band as i64) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let b = self.band as i64;
        self.coefficients.iter().enumerate().map(move |(i, v)| (i as i64 - b, *v))
    }
}

/// `Φ_m = Σ_n c*_{n−m} c_n` over the full band `|m| <= 2 m_max`.
pub fn bunching(state: &StateVector) -> BunchingSpectrum {
    let band = 2 * state.m_max;
    let mut coefficients = vec![Complex64::new(0.0, 0.0); 2 * band + 1];
    bunching_into(&state.amplitudes, band, &mut coefficients[band..]);
    for m in 1..=band {
        coefficients[band - m] = coefficients[band + m].conj();
    }
    BunchingSpectrum { band, coefficients }
}

/// Writes `Φ_k` for `k = 0..out.len()` (nonnegative harmonics only).
fn bunching_into(c: &[Complex64], band: usize, out: &mut [Complex64]) {
    let n = c.len();
    for (k, slot) in out.iter_mut().enumerate().take(band + 1) {
        *slot = if k < n {
            c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a.conj() * b).sum()
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
}

/// `N_m = |c_m|²`, ordered like the amplitudes.
pub fn populations(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(|c| c.norm_sqr()).collect()
}

/// `⟨ω⟩ = Σ_m m N_m` in units of the angular recoil frequency.
pub fn mean_angular_velocity(state: &StateVector) -> f64 {
    state.modes().zip(&state.amplitudes).map(|(m, c)| m as f64 * c.norm_sqr()).sum()
}

/// Modes on each side counted as band edge: 5% of the band per side.
pub fn edge_width(m_max: usize) -> usize {
    ((0.05 * (2 * m_max + 1) as f64).ceil() as usize).max(1)
}

/// Population in the outer tenth of the band.
pub fn edge_population(amplitudes: &[Complex64]) -> f64 {
    let m_max = (amplitudes.len() - 1) / 2;
    let w = edge_width(m_max).min(m_max + 1);
    let lower: f64 = amplitudes[..w].iter().map(|c| c.norm_sqr()).sum();
    let upper: f64 = amplitudes[amplitudes.len() - w..].iter().map(|c| c.norm_sqr()).sum();
    lower + upper
}

/// Right-hand side of the amplitude equations with reusable scratch space.
///
/// The equations are split into a diagonal part `−i ω_m c_m` with
/// `ω_m = m² + (γ/2) V_0` (the mean-field shift for a normalized state) and
/// the remaining coupling, so that [`evolve`] can integrate the coupling in
/// the frame rotating with `ω_m`.
#[derive(Debug, Clone)]
pub struct CoupledModes {
    m_max: usize,
    half_gamma: f64,
    potential: Vec<Complex64>,
    frequencies: Vec<f64>,
    weights: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl CoupledModes {
    pub fn new(params: &SystemParams, fp: &FourierPotential) -> Result<Self> {
        let k_max = params.k_max.min(2 * params.m_max);
        let potential: Vec<Complex64> = (0..=2 * k_max as i64)
            .map(|i| fp.coefficient(i - k_max as i64))
            .collect::<Result<_>>()?;
        let shift = 0.5 * params.gamma * potential[k_max].re;
        let frequencies = (-(params.m_max as i64)..=params.m_max as i64)
            .map(|m| (m * m) as f64 + shift)
            .collect();
        let width = 2 * params.m_max + 1;
        Ok(Self {
            m_max: params.m_max,
            half_gamma: 0.5 * params.gamma,
            potential,
            frequencies,
            weights: vec![Complex64::new(0.0, 0.0); 2 * k_max + 1],
            scratch: vec![Complex64::new(0.0, 0.0); width],
        })
    }

    fn k_max(&self) -> usize {
        (self.potential.len() - 1) / 2
    }

    /// `ω_m`, ordered like the amplitudes.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Coupling part `−i (γ/2) [Σ_k V_k Φ_k c_{m−k} − V_0 c_m]` in
    /// `O(m_max · k_max)`.
    pub fn coupling_into(&mut self, c: &[Complex64], out: &mut [Complex64]) {
        let n = c.len();
        debug_assert_eq!(n, 2 * self.m_max + 1);
        let k_max = self.k_max();
        let k_off = k_max as i64;

        // W_k = V_k Φ_k with Φ_{-k} = conj(Φ_k); the k = 0 entry carries
        // V_0 (Φ_0 − 1) since V_0 is already in ω_m.
        bunching_into(c, k_max, &mut self.weights[k_max..]);
        for k in 1..=k_max {
            self.weights[k_max - k] = self.weights[k_max + k].conj();
        }
        self.weights[k_max] -= 1.0;
        for (w, v) in self.weights.iter_mut().zip(&self.potential) {
            *w *= v;
        }

        for (i, slot) in out.iter_mut().enumerate() {
            // c_{m−k} in band: 0 <= i − k < n.
            let k_lo = (i as i64 - (n as i64 - 1)).max(-k_off);
            let k_hi = (i as i64).min(k_off);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in k_lo..=k_hi {
                acc += self.weights[(k + k_off) as usize] * c[(i as i64 - k) as usize];
            }
            let a = acc * self.half_gamma;
            *slot = Complex64::new(a.im, -a.re);
        }
    }

    /// Full `dc/dτ`.
    pub fn derivative_into(&mut self, c: &[Complex64], out: &mut [Complex64]) {
        self.coupling_into(c, out);
        for ((slot, ci), w) in out.iter_mut().zip(c).zip(&self.frequencies) {
            *slot += Complex64::new(ci.im * w, -ci.re * w);
        }
    }

    /// `da/dτ` for the rotating-frame amplitudes `a_m = c_m e^{iω_m τ}`.
    fn rotating_frame_into(&mut self, tau: f64, a: &[Complex64], out: &mut [Complex64]) {
        let mut c = std::mem::take(&mut self.scratch);
        for ((ci, ai), w) in c.iter_mut().zip(a).zip(&self.frequencies) {
            *ci = ai * Complex64::from_polar(1.0, -w * tau);
        }
        self.coupling_into(&c, out);
        for (slot, w) in out.iter_mut().zip(&self.frequencies) {
            *slot *= Complex64::from_polar(1.0, w * tau);
        }
        self.scratch = c;
    }
}

fn rotate(amplitudes: &mut [Complex64], frequencies: &[f64], tau: f64, sign: f64) {
    for (a, w) in amplitudes.iter_mut().zip(frequencies) {
        *a *= Complex64::from_polar(1.0, sign * w * tau);
    }
}

/// One evaluation of the amplitude equations.
pub fn derivative(state: &StateVector, params: &SystemParams, fp: &FourierPotential) -> Result<Vec<Complex64>> {
    let mut system = CoupledModes::new(&SystemParams { m_max: state.m_max, ..*params }, fp)?;
    let mut out = vec![Complex64::new(0.0, 0.0); state.amplitudes.len()];
    system.derivative_into(&state.amplitudes, &mut out);
    Ok(out)
}

/// Integrated trajectory plus the accuracy diagnostics gathered on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub m_max: usize,
    pub trajectory: Trajectory<Complex64>,
    pub max_norm_drift: f64,
    pub max_edge_population: f64,
}

impl Evolution {
    pub fn state(&self, index: usize) -> StateVector {
        StateVector {
            tau: self.trajectory.times[index],
            m_max: self.m_max,
            amplitudes: self.trajectory.states[index].clone(),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = StateVector> + '_ {
        (0..self.trajectory.len()).map(|i| self.state(i))
    }

    pub fn final_state(&self) -> StateVector {
        self.state(self.trajectory.len() - 1)
    }
}

/// Integrates the amplitude equations from `initial` up to `tau_end`,
/// sampling every `stride`. The integrator advances the rotating-frame
/// amplitudes `a_m = c_m e^{iω_m τ}`, so the free rotation is exact and only the
/// coupling is discretized. No renormalization is applied; the norm drift
/// and band-edge population are checked at every sample.
pub fn evolve(
    initial: &StateVector,
    params: &SystemParams,
    fp: &FourierPotential,
    tau_end: f64,
    controls: &OdeControls,
    stride: f64,
) -> Result<Evolution> {
    if initial.m_max != params.m_max {
        return Err(Error::Config(format!(
            "initial state band m_max = {} differs from params m_max = {}",
            initial.m_max, params.m_max
        )));
    }
    let norm0 = initial.norm_sqr();
    if (norm0 - 1.0).abs() > NORM_DRIFT_LIMIT {
        return Err(Error::Config(format!("initial state not normalized (Σ|c|² = {norm0})")));
    }
    let edge0 = edge_population(&initial.amplitudes);
    if edge0 > EDGE_POPULATION_LIMIT {
        return Err(Error::Truncation {
            tau: initial.tau,
            edge_population: edge0,
            limit: EDGE_POPULATION_LIMIT,
            m_max: params.m_max,
        });
    }

    let mut system = CoupledModes::new(params, fp)?;
    let frequencies = system.frequencies().to_vec();
    let mut a0 = initial.amplitudes.clone();
    rotate(&mut a0, &frequencies, initial.tau, 1.0);
    let mut trajectory = integrate_ode(
        |tau, a: &[Complex64], da: &mut [Complex64]| system.rotating_frame_into(tau, a, da),
        &a0,
        (initial.tau, tau_end),
        controls,
        stride,
    )?;
    for (tau, state) in trajectory.times.iter().zip(trajectory.states.iter_mut()) {
        rotate(state, &frequencies, *tau, -1.0);
    }

    let mut max_norm_drift: f64 = 0.0;
    let mut max_edge_population: f64 = 0.0;
    for (tau, c) in trajectory.iter() {
        let drift = (c.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::Tolerance {
                tau,
                quantity: "norm drift",
                value: drift,
                limit: NORM_DRIFT_LIMIT,
            });
        }
        let edge = edge_population(c);
        if edge > EDGE_POPULATION_LIMIT {
            return Err(Error::Truncation {
                tau,
                edge_population: edge,
                limit: EDGE_POPULATION_LIMIT,
                m_max: params.m_max,
            });
        }
        max_norm_drift = max_norm_drift.max(drift);
        max_edge_population = max_edge_population.max(edge);
    }

    Ok(Evolution {
        m_max: params.m_max,
        trajectory,
        max_norm_drift,
        max_edge_population,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn system(gamma: f64) -> (SystemParams, FourierPotential) {
        let p = SystemParams::new(gamma, 0.1, 1.0, 1).unwrap();
        let fp = FourierPotential::new(&p).unwrap();
        (p, fp)
    }

    #[test]
    fn seeded_state_normalization() {
        let (p, _) = system(0.05);
        let s = default_initial_state(&p, 1e-4, SeedMode::Deterministic).unwrap();
        let n0 = s.amplitude(0).norm_sqr();
        assert!((n0 - (1.0 - 2.0 * p.m_max as f64 * 1e-8)).abs() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(s.amplitudes().iter().all(|a| a.im == 0.0 && a.re > 0.0));
        assert_eq!(s, default_initial_state(&p, 1e-4, SeedMode::Deterministic).unwrap());
    }

    #[test]
    fn random_seeds_are_reproducible() {
        let (p, _) = system(0.05);
        let a = default_initial_state(&p, 1e-3, SeedMode::Random(7)).unwrap();
        let b = default_initial_state(&p, 1e-3, SeedMode::Random(7)).unwrap();
        let d = default_initial_state(&p, 1e-3, SeedMode::Random(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
        for m in a.modes().filter(|&m| m != 0) {
            assert!((a.amplitude(m).norm() - 1e-3).abs() < 1e-18);
        }
    }

    #[test]
    fn seed_limits() {
        let (p, _) = system(0.05);
        assert!(default_initial_state(&p, 0.0, SeedMode::Deterministic).is_err());
        assert!(default_initial_state(&p, 0.02, SeedMode::Deterministic).is_err());
        let tiny = default_initial_state(&p, 1e-300, SeedMode::Deterministic).unwrap();
        assert_eq!(tiny.amplitude(0), c(1.0, 0.0));
    }

    #[test]
    fn bunching_examples() {
        let uniform = StateVector::single_mode(4, 0);
        let phi = bunching(&uniform);
        for (m, v) in phi.iter() {
            assert_eq!(v, if m == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        }
        for j in -4..=4 {
            let phi = bunching(&StateVector::single_mode(4, j));
            for (m, v) in phi.iter() {
                assert_eq!(v.norm(), if m == 0 { 1.0 } else { 0.0 });
            }
        }
        let mut amps = vec![c(0.0, 0.0); 9];
        amps[4] = c(FRAC_1_SQRT_2, 0.0);
        amps[5] = c(FRAC_1_SQRT_2, 0.0);
        let s = StateVector::new(0.0, 4, amps).unwrap();
        let phi = bunching(&s);
        assert!((phi.get(1) - 0.5).norm() < 1e-15);
        assert!((phi.get(-1) - 0.5).norm() < 1e-15);
        assert!((phi.get(0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn observables() {
        let uniform = StateVector::single_mode(3, 0);
        assert_eq!(populations(&uniform)[3], 1.0);
        assert_eq!(mean_angular_velocity(&uniform), 0.0);
        assert_eq!(mean_angular_velocity(&StateVector::single_mode(3, 1)), 1.0);

        let mut amps = vec![c(0.0, 0.0); 7];
        amps[3] = c(FRAC_1_SQRT_2, 0.0);
        amps[5] = c(0.0, FRAC_1_SQRT_2);
        let s = StateVector::new(0.0, 3, amps).unwrap();
        assert!((mean_angular_velocity(&s) - 1.0).abs() < 1e-15);
        let n = populations(&s);
        assert!((n[3] - 0.5).abs() < 1e-15 && (n[5] - 0.5).abs() < 1e-15);
        for (pop, a) in n.iter().zip(s.amplitudes()) {
            assert_eq!(*pop, a.norm_sqr());
        }
    }

    #[test]
    fn uniform_state_only_shifts_phase() {
        let (p, fp) = system(0.3);
        let s = StateVector::single_mode(p.m_max, 0);
        let d = derivative(&s, &p, &fp).unwrap();
        let v0 = fp.coefficient(0).unwrap();
        for (m, v) in s.modes().zip(&d) {
            if m == 0 {
                let expect = c(0.0, -0.15) * v0;
                assert!((v - expect).norm() < 1e-15);
            } else {
                assert_eq!(*v, c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn free_evolution_derivative() {
        let (p, fp) = system(0.0);
        let s = default_initial_state(&p, 1e-3, SeedMode::Random(3)).unwrap();
        let d = derivative(&s, &p, &fp).unwrap();
        for (m, (v, a)) in s.modes().zip(d.iter().zip(s.amplitudes())) {
            assert!((v - c(0.0, -((m * m) as f64)) * a).norm() < 1e-15);
        }
    }

    #[test]
    fn free_rotation_of_single_mode() {
        let (p, fp) = system(0.0);
        let s = StateVector::single_mode(p.m_max, 1);
        let ev = evolve(&s, &p, &fp, 50.0, &OdeControls::default(), 5.0).unwrap();
        for state in ev.states() {
            let expect = Complex64::from_polar(1.0, -state.tau);
            assert!((state.amplitude(1) - expect).norm() < 1e-7);
            assert!((populations(&state)[p.m_max + 1] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mismatched_band_rejected() {
        let (p, fp) = system(0.05);
        let s = StateVector::single_mode(p.m_max + 1, 0);
        assert!(evolve(&s, &p, &fp, 1.0, &OdeControls::default(), 1.0).is_err());
    }

    #[test]
    fn populated_edge_is_truncation_error() {
        let (p, fp) = system(0.05);
        let s = StateVector::single_mode(p.m_max, p.m_max as i64);
        let err = evolve(&s, &p, &fp, 1.0, &OdeControls::default(), 1.0).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn edge_width_scales_with_band() {
        assert_eq!(edge_width(14), 2);
        assert_eq!(edge_width(2), 1);
        assert_eq!(edge_width(40), 5);
    }
}
