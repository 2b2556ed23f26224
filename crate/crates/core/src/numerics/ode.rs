use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element type the integrator can advance: real or complex amplitudes.
pub trait OdeScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl OdeScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Step-size control for [`integrate_ode`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
}

impl Default for OdeControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 1.0,
            initial_step: 1e-3,
        }
    }
}

impl OdeControls {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.rel_tol) && positive(self.abs_tol) && positive(self.max_step)) {
            return Err(Error::Config(format!(
                "ode controls need rel_tol, abs_tol, max_step > 0 (got {:?})",
                self
            )));
        }
        if !positive(self.initial_step) {
            return Err(Error::Config("initial_step must be > 0".into()));
        }
        Ok(())
    }
}

/// Sampled solution: `states[i]` is the state at `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub states: Vec<Vec<T>>,
    /// Accepted steps taken over the whole span.
    pub steps: usize,
}

impl<T> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &[T])> {
        Some((*self.times.last()?, self.states.last()?.as_slice()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[T])> {
        self.times.iter().copied().zip(self.states.iter().map(Vec::as_slice))
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const PI_ALPHA: f64 = 0.7 / 5.0;
const PI_BETA: f64 = 0.4 / 5.0;

/// Integrates `y' = rhs(τ, y)` over `span` with the Dormand–Prince 5(4) pair
/// and a PI step controller, recording the state every `sample_stride`
/// (plus the end point). Sample times are hit exactly by shortening the step
/// that would overshoot them.
///
/// `rhs(τ, y, dy)` writes the derivative into `dy`.
pub fn integrate_ode<T, F>(
    mut rhs: F,
    y0: &[T],
    span: (f64, f64),
    controls: &OdeControls,
    sample_stride: f64,
) -> Result<Trajectory<T>>
where
    T: OdeScalar,
    F: FnMut(f64, &[T], &mut [T]),
{
    controls.validate()?;
    let (t_start, t_end) = span;
    if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
        return Err(Error::Config(format!("empty or invalid time span {span:?}")));
    }
    if !(sample_stride.is_finite() && sample_stride > 0.0) {
        return Err(Error::Config(format!("sample stride must be > 0, got {sample_stride}")));
    }

    let n = y0.len();
    let mut y = y0.to_vec();
    let mut stages: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    let mut scratch = vec![T::zero(); n];
    let mut y_new = vec![T::zero(); n];

    let mut trajectory = Trajectory {
        times: vec![t_start],
        states: vec![y.clone()],
        steps: 0,
    };

    let mut t = t_start;
    let mut h = controls.initial_step.min(controls.max_step);
    let mut err_prev: f64 = 1e-4;
    let mut sample_index = 1u64;
    let next_sample = |i: u64| (t_start + i as f64 * sample_stride).min(t_end);
    let mut target = next_sample(sample_index);

    rhs(t, &y, &mut stages[0]);

    while t < t_end {
        let mut step = h.min(controls.max_step);
        let mut lands_on_target = false;
        if t + step >= target {
            step = target - t;
            lands_on_target = true;
        }
        if step <= f64::EPSILON * t.abs().max(1.0) * 4.0 {
            return Err(Error::Integration {
                tau: t,
                reason: format!("step size underflow (h = {step:.3e})"),
            });
        }

        let (k_first, k_rest) = stages.split_at_mut(1);
        let k1 = &k_first[0];
        let [k2, k3, k4, k5, k6, k7] = k_rest else {
            unreachable!()
        };

        combine(&mut scratch, &y, step, &[(A21, k1)]);
        rhs(t + C2 * step, &scratch, k2);
        combine(&mut scratch, &y, step, &[(A31, k1), (A32, k2)]);
        rhs(t + C3 * step, &scratch, k3);
        combine(&mut scratch, &y, step, &[(A41, k1), (A42, k2), (A43, k3)]);
        rhs(t + C4 * step, &scratch, k4);
        combine(&mut scratch, &y, step, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        rhs(t + C5 * step, &scratch, k5);
        combine(
            &mut scratch,
            &y,
            step,
            &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
        );
        rhs(t + step, &scratch, k6);
        combine(&mut y_new, &y, step, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        rhs(t + step, &y_new, k7);

        let mut acc = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * step;
            let scale = controls.abs_tol
                + controls.rel_tol * y[i].magnitude().max(y_new[i].magnitude());
            let r = e.magnitude() / scale;
            acc += r * r;
        }
        let err = if n == 0 { 0.0 } else { (acc / n as f64).sqrt() };
        if !err.is_finite() {
            return Err(Error::Integration {
                tau: t,
                reason: "non-finite state or derivative".into(),
            });
        }

        if err <= 1.0 {
            t = if lands_on_target { target } else { t + step };
            std::mem::swap(&mut y, &mut y_new);
            let (first, rest) = stages.split_at_mut(1);
            std::mem::swap(&mut first[0], &mut rest[5]);
            trajectory.steps += 1;

            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-PI_ALPHA) * err_prev.powf(PI_BETA))
                    .clamp(MIN_FACTOR, MAX_FACTOR)
            };
            err_prev = err.max(1e-4);
            // A step shortened to hit a sample says nothing about the
            // admissible size, so keep the previous proposal in that case.
            if !lands_on_target || step >= h {
                h = step * factor;
            }

            if lands_on_target {
                trajectory.times.push(t);
                trajectory.states.push(y.clone());
                sample_index += 1;
                target = next_sample(sample_index);
                if target <= t {
                    break;
                }
            }
        } else {
            let factor = (SAFETY * err.powf(-1.0 / 5.0)).max(MIN_FACTOR);
            h = step * factor;
        }
    }
    Ok(trajectory)
}

fn combine<T: OdeScalar>(out: &mut [T], y: &[T], h: f64, terms: &[(f64, &Vec<T>)]) {
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (a, k) in terms {
            acc = acc + k[i] * *a;
        }
        *slot = y[i] + acc * h;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn phase_rotation_reaches_minus_one() {
        let i = Complex64::new(0.0, 1.0);
        let tr = integrate_ode(
            |_, y: &[Complex64], dy: &mut [Complex64]| dy[0] = i * y[0],
            &[Complex64::new(1.0, 0.0)],
            (0.0, PI),
            &OdeControls::default(),
            PI,
        )
        .unwrap();
        let (t, y) = tr.last().unwrap();
        assert_eq!(t, PI);
        assert!((y[0] + 1.0).norm() < 1e-8, "{}", y[0]);
        assert_eq!(tr.times, vec![0.0, PI]);
    }

    #[test]
    fn zero_field_is_constant() {
        let tr = integrate_ode(
            |_, _: &[f64], dy: &mut [f64]| dy.iter_mut().for_each(|d| *d = 0.0),
            &[1.5, -2.0],
            (0.0, 10.0),
            &OdeControls::default(),
            1.0,
        )
        .unwrap();
        assert_eq!(tr.len(), 11);
        for (_, y) in tr.iter() {
            assert_eq!(y, &[1.5, -2.0]);
        }
    }

    #[test]
    fn harmonic_oscillator_closes_orbit() {
        let controls = OdeControls::default();
        let tr = integrate_ode(
            |_, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            (0.0, TAU),
            &controls,
            0.5,
        )
        .unwrap();
        let (t, y) = tr.last().unwrap();
        assert_eq!(t, TAU);
        let err = ((y[0] - 1.0).powi(2) + y[1].powi(2)).sqrt();
        assert!(err < 10.0 * controls.rel_tol, "err {err:e}");
        for (t, y) in tr.iter() {
            assert!((y[0] - t.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn error_decreases_with_tolerance() {
        let mut last = f64::INFINITY;
        for &rtol in &[1e-5, 5e-6, 2.5e-6, 1.25e-6, 6.25e-7, 3.125e-7] {
            let controls = OdeControls { rel_tol: rtol, abs_tol: rtol * 1e-3, ..Default::default() };
            let tr = integrate_ode(
                |_, y: &[f64], dy: &mut [f64]| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                &[1.0, 0.0],
                (0.0, 20.0),
                &controls,
                20.0,
            )
            .unwrap();
            let y = tr.last().unwrap().1;
            let err = (y[0] - 20f64.cos()).abs() + (y[1] + 20f64.sin()).abs();
            assert!(err < last, "rtol {rtol}: {err:e} !< {last:e}");
            last = err;
        }
    }

    #[test]
    fn deterministic_bitwise() {
        let run = || {
            integrate_ode(
                |t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0] * t.sin(),
                &[1.0],
                (0.0, 30.0),
                &OdeControls::default(),
                0.7,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn reports_stiff_failure() {
        let controls = OdeControls { max_step: 1.0, ..Default::default() };
        let err = integrate_ode(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
            &[1.0],
            (0.0, 2.0),
            &controls,
            0.1,
        )
        .unwrap_err();
        match err {
            Error::Integration { tau, .. } => assert!(tau > 0.9 && tau <= 1.0, "{tau}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = |_: f64, _: &[f64], _: &mut [f64]| {};
        assert!(integrate_ode(f, &[0.0], (1.0, 1.0), &OdeControls::default(), 1.0).is_err());
        let bad = OdeControls { rel_tol: 0.0, ..Default::default() };
        assert!(integrate_ode(f, &[0.0], (0.0, 1.0), &bad, 1.0).is_err());
        assert!(integrate_ode(f, &[0.0], (0.0, 1.0), &OdeControls::default(), 0.0).is_err());
    }
}
