//! Numerical kernels shared by the physics modules: integer-order Bessel
//! functions, periodic Fourier coefficients, an adaptive Dormand–Prince
//! integrator and the principal complex square root.

mod bessel;
mod fourier;
mod ode;

pub use bessel::bessel_j;
pub use fourier::{periodic_fourier_coefficients, Harmonics};
pub use ode::{integrate_ode, OdeControls, OdeScalar, Trajectory};

use num_complex::Complex64;

/// Principal branch of the complex square root.
///
/// The result has a nonnegative real part; on the branch cut (purely
/// imaginary result) the imaginary part is taken nonnegative, so `-1` maps to
/// `i` regardless of the sign of zero in the input.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return if z.re >= 0.0 {
            Complex64::new(z.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-z.re).sqrt())
        };
    }
    // Kahan-style evaluation avoiding cancellation in |z| - re.
    let modulus = z.norm();
    let t = ((modulus + z.re.abs()) / 2.0).sqrt();
    if z.re >= 0.0 {
        Complex64::new(t, z.im / (2.0 * t))
    } else {
        let im = if z.im >= 0.0 { t } else { -t };
        let w = Complex64::new(z.im.abs() / (2.0 * t), im);
        if w.re == 0.0 && w.im < 0.0 {
            -w
        } else {
            w
        }
    }
}
