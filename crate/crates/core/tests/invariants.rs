use oamring::dynamics::{bunching, evolve, StateVector};
use oamring::potential::{DispersionCoefficients, RateCoefficients};
use oamring::rate_model::{phase_derivative, rate_derivative};
use oamring::{Complex64, FourierPotential, OdeControls, SystemParams};
use proptest::prelude::*;

fn normalized_state(m_max: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * m_max + 1)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(move |v| {
            let mut c: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            let norm = c.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            c.iter_mut().for_each(|a| *a /= norm);
            StateVector::new(0.0, m_max, c).unwrap()
        })
}

fn populations(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_map(|v| {
        let total: f64 = v.iter().sum::<f64>().max(1e-300);
        v.into_iter().map(|n| n / total).collect()
    })
}

proptest! {
    #[test]
    fn bunching_is_hermitian_and_bounded(state in normalized_state(6)) {
        let b = bunching(&state);
        prop_assert!((b.get(0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        for m in 1..=b.band() as i64 {
            prop_assert_eq!(b.get(-m), b.get(m).conj());
            prop_assert!(b.get(m).norm() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn rate_equations_conserve_population(
        n in populations(12),
        g in prop::collection::vec(0.0f64..0.5, 11),
    ) {
        let d = rate_derivative(&n, &RateCoefficients::new(g));
        let scale: f64 = d.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!(d.iter().sum::<f64>().abs() < 1e-15 * scale);
    }

    #[test]
    fn phase_equations_match_term_by_term_sum(
        n in populations(10),
        alpha in prop::collection::vec(-0.3f64..0.3, 9),
        gamma_v0 in -2.0f64..2.0,
    ) {
        let coefficients = DispersionCoefficients::new(alpha.clone());
        let d = phase_derivative(&n, &coefficients, gamma_v0);
        let a = |k: usize| alpha.get(k).copied().unwrap_or(0.0);
        for (m, &dm) in d.iter().enumerate() {
            let mut expected = -((m * m) as f64 + gamma_v0);
            let mut magnitude = (m * m) as f64 + gamma_v0.abs();
            for (j, nj) in n.iter().enumerate() {
                let k = j.abs_diff(m);
                if k > 0 {
                    expected -= a(k) * nj;
                    magnitude += (a(k) * nj).abs();
                }
            }
            prop_assert!((dm - expected).abs() <= 1e-14 * magnitude.max(1.0));
        }
    }
}

#[test]
fn free_evolution_keeps_every_modulus() {
    let params = SystemParams::with_band(0.0, 0.1, 2.0, 1, 5, 10).unwrap();
    let fp = FourierPotential::new(&params).unwrap();
    let c: Vec<Complex64> = (0..11).map(|i| Complex64::from_polar(1.0, 0.3 * i as f64)).collect();
    let norm = (11.0f64).sqrt();
    let c: Vec<Complex64> = c.into_iter().map(|a| a / norm).collect();
    // The outer modes sit at the band edge; use a state that leaves them empty.
    let mut c = c;
    c[0] = Complex64::new(0.0, 0.0);
    c[10] = Complex64::new(0.0, 0.0);
    let norm = c.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    c.iter_mut().for_each(|a| *a /= norm);
    let initial = StateVector::new(0.0, 5, c.clone()).unwrap();
    let ev = evolve(&initial, &params, &fp, 100.0, &OdeControls::default(), 10.0).unwrap();
    for state in ev.states() {
        for (a, b) in state.amplitudes().iter().zip(&c) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }
}
