//! Small numeric helpers: exact-or-log coefficients, log binomials, log-sum-exp.

use std::f64::consts::LN_2;

/// A positive count carried exactly while it fits in 128 bits, and always in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    exact: Option<u128>,
    ln: f64,
}

impl Coefficient {
    pub fn one() -> Self {
        Self {
            exact: Some(1),
            ln: 0.0,
        }
    }

    pub fn from_exact(x: u128) -> Self {
        Self {
            exact: Some(x),
            ln: (x as f64).ln(),
        }
    }

    pub fn from_ln(ln: f64) -> Self {
        Self { exact: None, ln }
    }

    /// Multiplies by a factor given exactly (when it fit) and as a natural log.
    pub(crate) fn times(self, exact: Option<u128>, ln: f64) -> Self {
        Self {
            exact: self.exact.zip(exact).and_then(|(a, b)| a.checked_mul(b)),
            ln: self.ln + ln,
        }
    }

    /// Divides by `2^k`; the exact value must be divisible.
    pub(crate) fn halved(self, k: u32) -> Self {
        let exact = self.exact.map(|x| {
            debug_assert_eq!(
                x.trailing_zeros().min(k),
                k,
                "coefficient {x} not divisible by 2^{k}"
            );
            x >> k
        });
        Self {
            exact,
            ln: self.ln - f64::from(k) * LN_2,
        }
    }

    /// Exact integer value, if it fits in 128 bits.
    pub fn exact(&self) -> Option<u128> {
        self.exact
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Natural log of the value.
    pub fn ln(&self) -> f64 {
        match self.exact {
            Some(x) => (x as f64).ln(),
            None => self.ln,
        }
    }
}

/// `C(n, k)` if it fits in 128 bits.
pub fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    match binomial_u128(n, k) {
        Some(x) if x < (1u128 << 53) => (x as f64).ln(),
        _ => statrs::function::factorial::ln_binomial(n, k),
    }
}

/// `ln C(m, 2)` for small `m`.
#[inline]
pub(crate) fn ln_pairs(m: u32) -> f64 {
    (f64::from(m) * f64::from(m - 1) / 2.0).ln()
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln Σ exp(x_i)`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial_u128(5, 2), Some(10));
        assert_eq!(binomial_u128(0, 0), Some(1));
        assert_eq!(binomial_u128(60, 30), Some(118264581564861424));
        assert_eq!(binomial_u128(3, 5), Some(0));
        assert!(binomial_u128(200, 100).is_none());
        assert!((ln_binomial(200, 100) - 135.7532_f64).abs() < 0.01);
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn coefficient_tracks_both_forms() {
        let c = Coefficient::one().times(Some(12), 12f64.ln()).halved(2);
        assert_eq!(c.exact(), Some(3));
        assert!((c.ln() - 3f64.ln()).abs() < 1e-15);
        let big = Coefficient::from_exact(u128::MAX).times(Some(2), LN_2);
        assert!(!big.is_exact());
        assert!((big.ln() - (u128::MAX as f64).ln() - LN_2).abs() < 1e-9);
    }

    #[test]
    fn log_sums() {
        assert!((log_add_exp(0.0, 0.0) - LN_2).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + LN_2)).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
