//! Population rate equations of the superradiant cascade and the phase
//! equations that accompany them. The ladder starts at `m = 0` and only
//! climbs: `m >= 0` throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_ode, OdeControls, Trajectory};
use crate::potential::{DispersionCoefficients, RateCoefficients};

/// Largest tolerated drift of `Σ N_m`.
pub const POPULATION_DRIFT_LIMIT: f64 = 1e-9;
/// Populations below `-NEGATIVE_LIMIT` are an integration failure.
pub const NEGATIVE_LIMIT: f64 = 1e-12;
/// Largest tolerated growth of the population in the top tenth of the band.
pub const EDGE_GROWTH_LIMIT: f64 = 1e-6;
/// Default seed population of every excited mode.
pub const DEFAULT_SEED_POPULATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateState {
    pub tau: f64,
    /// `N_m` for `m = 0..=m_max`.
    pub populations: Vec<f64>,
    /// `φ_m` in radians for the same modes.
    pub phases: Vec<f64>,
}

impl RateState {
    pub fn new(tau: f64, populations: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if populations.is_empty() || populations.len() != phases.len() {
            return Err(Error::Config("rate state needs matching, nonempty populations and phases".into()));
        }
        if populations.iter().any(|&n| n.is_nan() || n < 0.0) {
            return Err(Error::Config("rate state populations must be >= 0".into()));
        }
        let total: f64 = populations.iter().sum();
        if (total - 1.0).abs() > POPULATION_DRIFT_LIMIT {
            return Err(Error::Config(format!("rate state populations sum to {total}, not 1")));
        }
        Ok(Self { tau, populations, phases })
    }

    /// `N_0 = 1 − m_max·seed`, every other mode at `seed`, phases zero.
    pub fn seeded(m_max: usize, seed_population: f64) -> Result<Self> {
        if !(seed_population >= 0.0 && seed_population * (m_max as f64) < 1.0) {
            return Err(Error::Config(format!(
                "seed population {seed_population} invalid for m_max = {m_max}"
            )));
        }
        let mut populations = vec![seed_population; m_max + 1];
        populations[0] = 1.0 - m_max as f64 * seed_population;
        Self::new(0.0, populations, vec![0.0; m_max + 1])
    }

    pub fn m_max(&self) -> usize {
        self.populations.len() - 1
    }

    pub fn mean_m(&self) -> f64 {
        self.populations.iter().enumerate().map(|(m, n)| m as f64 * n).sum()
    }
}

/// `dN_m/dτ = [Σ_{k=1}^{m} g_k N_{m−k} − Σ_{k≥1} g_k N_{m+k}] N_m`, with the
/// upper sum cut at the band edge.
pub fn rate_derivative(populations: &[f64], g: &RateCoefficients) -> Vec<f64> {
    let mut out = vec![0.0; populations.len()];
    rate_derivative_into(populations, g, &mut out);
    out
}

fn rate_derivative_into(n: &[f64], g: &RateCoefficients, out: &mut [f64]) {
    let len = n.len();
    for m in 0..len {
        let gain: f64 = (1..=m).map(|k| g.get(k) * n[m - k]).sum();
        let loss: f64 = (1..len - m).map(|k| g.get(k) * n[m + k]).sum();
        out[m] = (gain - loss) * n[m];
    }
}

/// `dφ_m/dτ = −(m² + γV_0) − [Σ_{k=1}^{m} α_k N_{m−k} + Σ_{k≥1} α_k N_{m+k}]`.
pub fn phase_derivative(populations: &[f64], alpha: &DispersionCoefficients, gamma_v0: f64) -> Vec<f64> {
    let mut out = vec![0.0; populations.len()];
    phase_derivative_into(populations, alpha, gamma_v0, &mut out);
    out
}

fn phase_derivative_into(n: &[f64], alpha: &DispersionCoefficients, gamma_v0: f64, out: &mut [f64]) {
    let len = n.len();
    for m in 0..len {
        let below: f64 = (1..=m).map(|k| alpha.get(k) * n[m - k]).sum();
        let above: f64 = (1..len - m).map(|k| alpha.get(k) * n[m + k]).sum();
        out[m] = -((m * m) as f64 + gamma_v0) - (below + above);
    }
}

/// Modes at the top of the band watched for truncation: 10% of the band.
pub fn edge_width(m_max: usize) -> usize {
    ((0.1 * (m_max + 1) as f64).ceil() as usize).max(1)
}

fn edge_population(n: &[f64]) -> f64 {
    let w = edge_width(n.len() - 1).min(n.len());
    n[n.len() - w..].iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEvolution {
    pub m_max: usize,
    /// Raw integrator output: each state is `[N_0..N_mmax, φ_0..φ_mmax]`.
    pub trajectory: Trajectory<f64>,
    pub max_population_drift: f64,
    pub max_edge_growth: f64,
}

impl RateEvolution {
    /// Sample `index` with populations clamped at zero.
    pub fn state(&self, index: usize) -> RateState {
        let y = &self.trajectory.states[index];
        let (n, phi) = y.split_at(self.m_max + 1);
        RateState {
            tau: self.trajectory.times[index],
            populations: n.iter().map(|v| v.max(0.0)).collect(),
            phases: phi.to_vec(),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = RateState> + '_ {
        (0..self.trajectory.len()).map(|i| self.state(i))
    }

    pub fn final_state(&self) -> RateState {
        self.state(self.trajectory.len() - 1)
    }
}

/// Integrates populations and phases together, sampling every `stride`.
pub fn evolve_rates(
    initial: &RateState,
    g: &RateCoefficients,
    alpha: &DispersionCoefficients,
    gamma_v0: f64,
    tau_end: f64,
    controls: &OdeControls,
    stride: f64,
) -> Result<RateEvolution> {
    let len = initial.populations.len();
    let mut y0 = initial.populations.clone();
    y0.extend_from_slice(&initial.phases);
    let total0: f64 = initial.populations.iter().sum();
    let edge0 = edge_population(&initial.populations);

    let trajectory = integrate_ode(
        |_, y: &[f64], dy: &mut [f64]| {
            let (n, _) = y.split_at(len);
            let (dn, dphi) = dy.split_at_mut(len);
            rate_derivative_into(n, g, dn);
            phase_derivative_into(n, alpha, gamma_v0, dphi);
        },
        &y0,
        (initial.tau, tau_end),
        controls,
        stride,
    )?;

    let mut max_population_drift: f64 = 0.0;
    let mut max_edge_growth: f64 = 0.0;
    for (tau, y) in trajectory.iter() {
        let n = &y[..len];
        if let Some((m, &v)) = n.iter().enumerate().find(|(_, &v)| v < -NEGATIVE_LIMIT) {
            return Err(Error::Integration {
                tau,
                reason: format!("population N_{m} = {v:.3e} went negative"),
            });
        }
        let drift = (n.iter().sum::<f64>() - total0).abs();
        if drift > POPULATION_DRIFT_LIMIT {
            return Err(Error::Tolerance {
                tau,
                quantity: "population drift",
                value: drift,
                limit: POPULATION_DRIFT_LIMIT,
            });
        }
        let growth = edge_population(n) - edge0;
        if growth > EDGE_GROWTH_LIMIT {
            return Err(Error::Truncation {
                tau,
                edge_population: growth,
                limit: EDGE_GROWTH_LIMIT,
                m_max: len - 1,
            });
        }
        max_population_drift = max_population_drift.max(drift);
        max_edge_growth = max_edge_growth.max(growth);
    }

    Ok(RateEvolution {
        m_max: len - 1,
        trajectory,
        max_population_drift,
        max_edge_growth,
    })
}

/// Delay until a single channel `0 → k` with rate `g` and initial population
/// `N_k(0) = seed` reaches the half-way point.
pub fn delay_time(g: f64, seed: f64) -> f64 {
    ((1.0 - seed) / seed).ln() / g
}

/// Closed-form populations `(N_0, N_k)` of a single channel:
/// `N_{0,k}(τ) = ½{1 ∓ tanh[g(τ − τ₀)/2]}` with `τ₀` from [`delay_time`].
///
/// Evaluated in logistic form so the tails keep full relative precision;
/// the two populations always sum to exactly 1.
pub fn two_state_analytic(g: f64, seed: f64, tau: f64) -> (f64, f64) {
    let z = g * (tau - delay_time(g, seed));
    let small = 1.0 / (1.0 + z.abs().exp());
    let large = 1.0 - small;
    if z >= 0.0 {
        (small, large)
    } else {
        (large, small)
    }
}
