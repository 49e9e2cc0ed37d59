//! Small numeric helpers shared across modules.

use statrs::function::factorial::{ln_binomial, ln_factorial};

/// `√(n!)` in log space, for `n` up to a few thousand.
pub fn ln_sqrt_factorial(n: usize) -> f64 {
    0.5 * ln_factorial(n as u64)
}

/// `√((n + j)! / n!)` for `n = 0..d`: the coefficient of `â^j` at output level `n`.
pub fn lowering_coefficients(d: usize, j: usize) -> Vec<f64> {
    (0..d)
        .map(|n| {
            if n + j >= d {
                0.0
            } else {
                (ln_sqrt_factorial(n + j) - ln_sqrt_factorial(n)).exp()
            }
        })
        .collect()
}

/// `log(x^k)` with the convention `0^0 = 1`.
pub fn ln_pow(x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

/// Row `n` holds `C(n, k) t^k (1 − t)^{n − k}` for `k = 0..=n`.
pub fn binomial_table(d: usize, t: f64) -> Vec<Vec<f64>> {
    (0..d)
        .map(|n| {
            (0..=n)
                .map(|k| {
                    let l = ln_binomial(n as u64, k as u64) + ln_pow(t, k) + ln_pow(1.0 - t, n - k);
                    l.exp()
                })
                .collect()
        })
        .collect()
}

pub fn ln_binom(n: usize, k: usize) -> f64 {
    ln_binomial(n as u64, k as u64)
}

pub fn factorial(n: usize) -> f64 {
    ln_factorial(n as u64).exp()
}
