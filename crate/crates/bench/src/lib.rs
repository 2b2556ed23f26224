//! Fixtures shared by the benchmarks.

use oamring::dynamics::{default_initial_state, SeedMode};
use oamring::{FourierPotential, StateVector, SystemParams};

/// The small-ring configuration (`k₀ρ = 1`, `ℓ = 1`, `γ = 0.05`).
pub fn small_ring() -> (SystemParams, FourierPotential, StateVector) {
    let params = SystemParams::new(0.05, 0.1, 1.0, 1).expect("valid params");
    let fp = FourierPotential::new(&params).expect("converged potential");
    let state = default_initial_state(&params, 1e-3, SeedMode::Random(1)).expect("valid seed");
    (params, fp, state)
}
