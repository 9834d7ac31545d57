//! Poisson weights and the regularized lower incomplete gamma function
//! with integer shape.
//!
//! Everything in this module reduces to the weights `w_k(t) = e^{-t} t^k / k!`.
//! For integer shape `n ≥ 1` the regularized lower incomplete gamma
//! `P(n, t) = γ(n, t) / Γ(n)` equals the Poisson tail probability
//! `P[N_t ≥ n] = 1 − Σ_{k<n} w_k(t)`, so it is evaluated as a finite weight
//! sum with the stable multiplicative recurrence `w_{k+1} = w_k · t/(k+1)`,
//! switching to the complementary series `Σ_{k≥n} w_k(t)` once the head sum
//! saturates. No general-purpose (non-integer shape) incomplete gamma is
//! provided or needed.

use std::sync::OnceLock;
use thiserror::Error;

/// Arguments outside the domain of the gamma kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    /// The integer shape of `P(n, t)` must be at least 1.
    #[error("shape must be a positive integer")]
    ZeroShape,
    /// `t` must be finite and nonnegative.
    #[error("argument must be finite and nonnegative, got {0}")]
    BadArgument(f64),
}

/// Above this argument `e^{-t}` is too close to the underflow threshold to
/// anchor the weight recurrence; weights are then summed in log space.
const LOG_SPACE_T: f64 = 650.0;

/// A single Poisson point mass `e^{-t} t^k / k!`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonWeight {
    /// The index `k` of the mass.
    pub shape: u32,
    /// The nonnegative argument `t`.
    pub argument: f64,
    /// The value `e^{-t} t^k / k!`, always in `[0, 1]`.
    pub value: f64,
}

impl PoissonWeight {
    pub fn new(shape: u32, argument: f64) -> Result<Self, DomainError> {
        let value = poisson_weight(shape, argument)?;
        Ok(Self { shape, argument, value })
    }
}

/// `e^{-t} t^k / k!`, computed in log space so that large `k` and `t`
/// neither overflow the numerator nor underflow prematurely.
pub fn poisson_weight(k: u32, t: f64) -> Result<f64, DomainError> {
    check_argument(t)?;
    Ok(pw(k, t))
}

/// Regularized lower incomplete gamma `P(n, t) = γ(n, t)/Γ(n)` for integer
/// shape `n ≥ 1`, i.e. `1 − e^{-t} Σ_{k=0}^{n-1} t^k/k!`.
///
/// Monotone nondecreasing in `t` and nonincreasing in `n`; the identity
/// `P(n+1, t) = P(n, t) − e^{-t} t^n/n!` holds to close to machine accuracy.
pub fn regularized_lower_gamma(shape: u32, t: f64) -> Result<f64, DomainError> {
    if shape == 0 {
        return Err(DomainError::ZeroShape);
    }
    check_argument(t)?;
    Ok(reg_lower_gamma(shape, t))
}

fn check_argument(t: f64) -> Result<(), DomainError> {
    if !t.is_finite() || t < 0.0 {
        return Err(DomainError::BadArgument(t));
    }
    Ok(())
}

/// Unchecked kernel behind [`poisson_weight`]; `t` must be finite, `t ≥ 0`.
///
/// Uses the same multiplicative recurrence as the partial sums in
/// [`reg_lower_gamma`], so the identity `P(n, t) − P(n+1, t) = w_n(t)` holds
/// to within a few rounding steps rather than log-space drift.
pub(crate) fn pw(k: u32, t: f64) -> f64 {
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if t >= LOG_SPACE_T {
        return (f64::from(k) * t.ln() - t - ln_factorial(k)).exp();
    }
    let mut w = (-t).exp();
    for j in 1..=k {
        w *= t / f64::from(j);
        if w == 0.0 && f64::from(j) > t {
            // Underflowed on the decreasing side; every later term is 0 too.
            return 0.0;
        }
    }
    w
}

/// Unchecked kernel behind [`regularized_lower_gamma`]; `n ≥ 1`, `t ≥ 0`.
///
/// Whichever of head (`Σ_{k<n} w_k`) and tail (`Σ_{k≥n} w_k`) is the smaller
/// side is summed directly, so both `P` and `1 − P` keep full relative
/// accuracy; the mean `t` splits the two regimes.
pub(crate) fn reg_lower_gamma(n: u32, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if t >= LOG_SPACE_T {
        return reg_lower_gamma_extreme(n, t);
    }
    if f64::from(n) > t {
        // P = Σ_{k≥n} w_k is the small side; the term ratio t/(k+1) < 1
        // keeps the series convergent.
        let mut term = pw(n, t);
        let mut sum = term;
        let mut k = n;
        while term > sum * 1e-17 && k < n + 2_000_000 {
            k += 1;
            term *= t / f64::from(k);
            sum += term;
        }
        sum.min(1.0)
    } else {
        let mut w = (-t).exp();
        let mut head = w;
        for k in 1..n {
            w *= t / f64::from(k);
            head += w;
        }
        (1.0 - head).clamp(0.0, 1.0)
    }
}

/// `t` so large that `e^{-t}` underflows: sum whichever of head/tail is the
/// small side in log space, anchored at its largest term.
fn reg_lower_gamma_extreme(n: u32, t: f64) -> f64 {
    let ln_w = |k: u32| f64::from(k) * t.ln() - t - ln_factorial(k);
    if f64::from(n) <= t {
        // Head mass P[N_t < n] is the small side; terms increase with k on
        // 0..n, so descend from k = n−1.
        let top = ln_w(n - 1);
        let mut sum = 0.0;
        let mut k = n - 1;
        loop {
            let term = (ln_w(k) - top).exp();
            sum += term;
            if term < sum * 1e-18 || k == 0 {
                break;
            }
            k -= 1;
        }
        (1.0 - sum * top.exp()).clamp(0.0, 1.0)
    } else {
        // Tail mass P[N_t ≥ n] is the small side; terms decrease with k.
        let top = ln_w(n);
        let mut sum = 0.0;
        let mut k = n;
        loop {
            let term = (ln_w(k) - top).exp();
            sum += term;
            if term < sum * 1e-18 || k > n + 100_000_000 {
                break;
            }
            k += 1;
        }
        (sum * top.exp()).clamp(0.0, 1.0)
    }
}

const LN_FACT_TABLE_LEN: usize = 4096;

/// `ln k!`, from a lazily built table for small `k` and a Stirling series
/// beyond it.
pub(crate) fn ln_factorial(k: u32) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut v = vec![0.0; LN_FACT_TABLE_LEN];
        for i in 2..LN_FACT_TABLE_LEN {
            v[i] = v[i - 1] + (i as f64).ln();
        }
        v
    });
    match table.get(k as usize) {
        Some(&v) => v,
        None => ln_gamma_stirling(f64::from(k) + 1.0),
    }
}

/// Stirling series for `ln Γ(x)`, adequate for the large arguments that fall
/// off the factorial table (relative error far below 1e-16 for x > 4000).
fn ln_gamma_stirling(x: f64) -> f64 {
    const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_7;
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}
