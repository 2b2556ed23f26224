//! Superradiant transfer of quantized orbital angular momentum between a
//! Laguerre-Gaussian pump and a Bose-Einstein condensate confined to a ring.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: Bessel functions, periodic Fourier coefficients, an
//!   adaptive Runge–Kutta integrator.
//! * [`potential`]: the light-mediated pair potential on the ring and its
//!   harmonics `V_k`, with rate (`g_k`) and dispersion (`α_k`) coefficients.
//! * [`stability`]: eigenvalues of the uniform state and growth-rate sweeps.
//! * [`dynamics`]: the coupled-mode equations for the OAM amplitudes `c_m`.
//! * [`rate_model`]: population rate equations of the superradiant cascade.
//! * [`radiation`]: far-field scattered field and its OAM decomposition.

pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod potential;
pub mod radiation;
pub mod rate_model;
pub mod stability;

pub use dynamics::{BunchingSpectrum, SeedMode, StateVector};
pub use error::{Error, ErrorKind, Result};
pub use numerics::{OdeControls, Trajectory};
pub use potential::{DispersionCoefficients, FourierPotential, RateCoefficients, SystemParams};
pub use radiation::RadiationPattern;
pub use rate_model::RateState;
pub use stability::{Regime, StabilitySpectrum};

pub use num_complex::Complex64;
