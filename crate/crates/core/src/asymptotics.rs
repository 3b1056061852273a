//! Closed-form `log K` exponents of the branching processes used as
//! oracles for the simulator.

/// Branching process without immigration started at `K^beta`:
/// `beta + (b - d) t`, clamped at 0.
pub fn bp_exponent(b: f64, d: f64, beta: f64, t: f64) -> f64 {
    (beta + (b - d) * t).max(0.0)
}

/// Branching process with immigration rate `K^c e^{a s}` (absolute time
/// `s`), started at `K^beta`:
/// `((beta ∨ c) + (b - d) t) ∨ (c + a t) ∨ 0`.
///
/// Holds on `[delta, T]` for any `delta > 0` when `c > 0`, or `c = 0` and
/// `a > 0`.
pub fn bpi_exponent(b: f64, d: f64, a: f64, c: f64, beta: f64, t: f64) -> f64 {
    (beta.max(c) + (b - d) * t).max(c + a * t).max(0.0)
}

/// Window `[c - abar eps, c + abar eps]` that a process started below the
/// immigration level reaches by rescaled time `eps`, for any
/// `abar > |b - d| ∨ |a|`.
pub fn immigration_window(c: f64, abar: f64, eps: f64) -> (f64, f64) {
    (c - abar * eps, c + abar * eps)
}
