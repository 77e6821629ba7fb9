//! Scalar helpers shared by the models and losses. All transcendental
//! functions go through `libm` so results do not depend on `std`.

use alloc::vec::Vec;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

/// Sign with `sign(0) = 0`, used as the ℓ1 subgradient.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow for large `|x|`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -libm::log1p(exp(-x))
    } else {
        x - libm::log1p(exp(x))
    }
}

/// `ln(1 + e^x)`, the positivity transform for HAKE relation moduli.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(exp(-x.abs()))
}

/// Inverse of [`softplus`] for `y > 0`.
#[inline]
pub fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        ln(libm::expm1(y))
    }
}

/// Softmax with max subtraction. Empty input yields an empty vector.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|&s| exp(s - max)).collect();
    let total: f64 = out.iter().sum();
    for w in &mut out {
        *w /= total;
    }
    out
}

pub fn l2_norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sigmoid_matches_naive_in_safe_range() {
        for &x in &[-20.0, -3.0, -0.5, 0.0, 0.5, 3.0, 20.0] {
            let naive = ln(1.0 / (1.0 + exp(-x)));
            assert!((log_sigmoid(x) - naive).abs() < 1e-12, "x = {x}");
        }
        assert!((log_sigmoid(0.0) + core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn log_sigmoid_is_finite_at_extremes() {
        assert_eq!(log_sigmoid(1e6), 0.0);
        assert_eq!(log_sigmoid(-1e6), -1e6);
    }

    #[test]
    fn softplus_round_trips() {
        for &y in &[1e-6, 0.1, 1.0, 5.0, 40.0] {
            assert!((softplus(softplus_inv(y)) - y).abs() < 1e-9 * y.max(1.0));
        }
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[1.0, 2.0, 3.0]);
        let b = softmax(&[1001.0, 1002.0, 1003.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
