//! The C^∞ step built from `h(x) = exp(−1/x)`.
//!
//! `step(x) = h(x) / (h(x) + h(1 − x))` with `h(x) = 0` for `x ≤ 0`. It is 0
//! for `x ≤ 0`, 1 for `x ≥ 1`, strictly increasing in between, and satisfies
//! `step(x) + step(1 − x) = 1`, so `step(1/2) = 1/2` exactly.

fn h(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

pub fn step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = h(x);
        a / (a + h(1.0 - x))
    }
}

/// Smooth ramp from 1 (at or below `lo`) down to 0 (at or above `hi`).
pub fn ramp_down(x: f64, lo: f64, hi: f64) -> f64 {
    1.0 - step((x - lo) / (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_endpoints_and_symmetry() {
        assert_eq!(step(-1.0), 0.0);
        assert_eq!(step(0.0), 0.0);
        assert_eq!(step(1.0), 1.0);
        assert_eq!(step(0.5), 0.5);
        for x in [0.1, 0.3, 0.77, 0.95] {
            assert!((step(x) + step(1.0 - x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn step_is_monotone() {
        let mut prev = 0.0;
        for i in 1..1000 {
            let v = step(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
    }
}
