use crate::error::{Error, Result};

/// Arguments at or below this magnitude use the ascending power series.
const SERIES_LIMIT: f64 = 2.0;

/// Bessel function of the first kind `J_n(x)` for integer order.
///
/// Small arguments are summed from the power series. Everything else runs
/// Miller's downward recurrence from well above `max(n, x)` and normalizes
/// with `J_0 + 2 Σ J_2k = 1`, which keeps absolute accuracy near machine
/// precision for both `n < x` and `n > x`.
pub fn bessel_j(n: i32, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j argument must be finite, got {x}")));
    }
    let order = n.unsigned_abs();
    // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x).
    let mut sign = 1.0;
    if n < 0 && order % 2 == 1 {
        sign = -sign;
    }
    if x < 0.0 && order % 2 == 1 {
        sign = -sign;
    }
    let ax = x.abs();
    let value = if ax == 0.0 {
        if order == 0 {
            1.0
        } else {
            0.0
        }
    } else if ax <= SERIES_LIMIT {
        series(order, ax)
    } else {
        miller(order, ax)
    };
    Ok(sign * value)
}

fn series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
        if term == 0.0 {
            return 0.0;
        }
    }
    let q = half * half;
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= -q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(n: u32, x: f64) -> f64 {
    const BIG: f64 = 1e200;
    let reach = (n as f64).max(x);
    let mut start = (reach + 40.0 + 2.0 * (40.0 * reach).sqrt()) as u32;
    start += start % 2;

    let two_over_x = 2.0 / x;
    let mut above = 0.0; // J_{k+1}
    let mut current = 1e-300; // J_k
    let mut norm = 0.0;
    let mut at_order = 0.0;
    let mut k = start;
    while k > 0 {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        k -= 1;
        if k.is_multiple_of(2) && k > 0 {
            norm += 2.0 * current;
        }
        if k == n {
            at_order = current;
        }
        if current.abs() > BIG {
            current /= BIG;
            above /= BIG;
            norm /= BIG;
            at_order /= BIG;
        }
    }
    norm += current;
    at_order / norm
}
