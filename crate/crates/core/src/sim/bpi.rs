//! Linear birth-death process with time-inhomogeneous immigration
//! `K^c e^{a s}` (`s` in model time), used to check the exponent formula
//! in [`crate::asymptotics::bpi_exponent`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use super::{replica_rng, TrajectorySample, DEFAULT_MAX_EVENTS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BpiMethod {
    /// Event by event, immigration by thinning. Cost grows with `K^c`.
    Thinning,
    /// Steps through the exact transition law; cost independent of `K`.
    Transition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpiConfig {
    pub b: f64,
    pub d: f64,
    pub a: f64,
    pub c: f64,
    /// Initial exponent; the process starts at `⌊K^beta0 - 1⌋`.
    pub beta0: f64,
    pub k: f64,
    pub horizon: f64,
    pub seed: u64,
    pub grid_dt: f64,
    pub method: BpiMethod,
    pub max_events: u64,
}

impl BpiConfig {
    pub fn new(
        b: f64,
        d: f64,
        a: f64,
        c: f64,
        beta0: f64,
        k: f64,
        horizon: f64,
        seed: u64,
    ) -> Self {
        Self {
            b,
            d,
            a,
            c,
            beta0,
            k,
            horizon,
            seed,
            grid_dt: 0.01,
            method: BpiMethod::Transition,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.k >= 10.0 && self.k.is_finite()) {
            return Err(Error::SimConfig(format!("K must be >= 10, got {}", self.k)));
        }
        if self.b < 0.0 || self.d < 0.0 || !self.b.is_finite() || !self.d.is_finite() {
            return Err(Error::SimConfig(
                "rates must be finite and non-negative".into(),
            ));
        }
        if !self.a.is_finite() || !self.c.is_finite() || !(self.beta0 >= 0.0) {
            return Err(Error::SimConfig(
                "a, c must be finite and beta0 >= 0".into(),
            ));
        }
        if !(self.horizon > 0.0) || !(self.grid_dt > 0.0) {
            return Err(Error::SimConfig(
                "horizon and grid step must be positive".into(),
            ));
        }
        Ok(())
    }

    fn immigration(&self, s: f64) -> f64 {
        self.k.powf(self.c) * (self.a * s).exp()
    }
}

/// Law of a single lineage after time `tau`: extinct with probability
/// `p0`, otherwise `1 + Geom(q)`.
pub(crate) fn lineage_law(b: f64, d: f64, tau: f64) -> (f64, f64) {
    let r = b - d;
    if (r * tau).abs() < 1e-8 {
        let p = 1.0 + b * tau;
        return (d * tau / p, b * tau / p);
    }
    let em1 = (r * tau).exp_m1();
    let denom = b * em1 + r;
    (d * em1 / denom, b * em1 / denom)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("finite positive mean")
        .sample(rng) as u64
}

/// Failures before `shape` successes, success probability `1 - q`, via the
/// gamma-Poisson mixture (`shape` may be fractional).
fn neg_binomial(rng: &mut ChaCha8Rng, shape: f64, q: f64) -> u64 {
    if shape <= 0.0 || q <= 0.0 {
        return 0;
    }
    let g = Gamma::new(shape, q / (1.0 - q))
        .expect("valid gamma")
        .sample(rng);
    poisson(rng, g)
}

fn one_lineage(rng: &mut ChaCha8Rng, b: f64, d: f64, tau: f64) -> u64 {
    let (p0, q) = lineage_law(b, d, tau);
    if rng.random::<f64>() < p0 {
        return 0;
    }
    1 + Geometric::new(1.0 - q)
        .expect("valid geometric")
        .sample(rng)
}

pub fn simulate_bpi(config: &BpiConfig) -> Result<TrajectorySample> {
    simulate_bpi_stream(config, 0)
}

pub fn simulate_bpi_stream(config: &BpiConfig, stream: u64) -> Result<TrajectorySample> {
    config.check()?;
    let mut rng = replica_rng(config.seed, stream);
    let lk = config.k.ln();
    let z0 = (super::floor_pow(config.k, config.beta0) - 1.0).max(0.0) as u64;
    let grid_len = (config.horizon / config.grid_dt + 1e-9).floor() as usize + 1;
    let mut sample = TrajectorySample {
        names: vec!["Z".into()],
        k: config.k,
        alpha: None,
        seed: config.seed,
        stream,
        times: Vec::with_capacity(grid_len),
        counts: Vec::with_capacity(grid_len),
        final_counts: Vec::new(),
        final_time: config.horizon,
        events: 0,
        truncated: false,
        max_drift: 0.0,
    };
    let z = match config.method {
        BpiMethod::Thinning => thinning(config, &mut rng, z0, lk, grid_len, &mut sample),
        BpiMethod::Transition => transition(config, &mut rng, z0, lk, grid_len, &mut sample),
    };
    sample.final_counts = vec![z];
    Ok(sample)
}

fn thinning(
    cfg: &BpiConfig,
    rng: &mut ChaCha8Rng,
    mut z: u64,
    lk: f64,
    grid_len: usize,
    out: &mut TrajectorySample,
) -> u64 {
    let t_end = cfg.horizon * lk;
    let dt_abs = cfg.grid_dt * lk;
    // Immigration bound refreshed on segments where it varies by <= 50%.
    let seg = if cfg.a == 0.0 {
        t_end
    } else {
        1.5f64.ln() / cfg.a.abs()
    };
    let mut t = 0.0;
    let mut seg_end = seg.min(t_end);
    let mut next_grid = 0usize;
    loop {
        let bound = cfg.immigration(t).max(cfg.immigration(seg_end));
        let own = z as f64 * (cfg.b + cfg.d);
        let total = own + bound;
        let mut t_new = t - rng.random::<f64>().ln() / total;
        let crossed = t_new > seg_end;
        if crossed {
            t_new = seg_end;
        }
        while next_grid < grid_len && next_grid as f64 * dt_abs <= t_new.min(t_end) {
            out.times.push(next_grid as f64 * cfg.grid_dt);
            out.counts.push(vec![z]);
            next_grid += 1;
        }
        if t_new >= t_end {
            break;
        }
        t = t_new;
        if crossed {
            seg_end = (seg_end + seg).min(t_end);
            continue;
        }
        if out.events >= cfg.max_events {
            out.truncated = true;
            out.final_time = t / lk;
            break;
        }
        let u = rng.random::<f64>() * total;
        if u < z as f64 * cfg.b {
            z += 1;
            out.events += 1;
        } else if u < own {
            z -= 1;
            out.events += 1;
        } else if u - own < cfg.immigration(t) {
            z += 1;
            out.events += 1;
        }
    }
    z
}

fn transition(
    cfg: &BpiConfig,
    rng: &mut ChaCha8Rng,
    mut z: u64,
    lk: f64,
    grid_len: usize,
    out: &mut TrajectorySample,
) -> u64 {
    const RESIDUAL_MEAN: f64 = 2.0;
    let dt_abs = cfg.grid_dt * lk;
    let mut t = 0.0;
    out.times.push(0.0);
    out.counts.push(vec![z]);
    for i in 1..grid_len {
        let target = i as f64 * dt_abs;
        while t < target {
            let g0 = cfg.immigration(t);
            let h_res = if cfg.a == 0.0 {
                f64::INFINITY
            } else {
                (2.0 * RESIDUAL_MEAN / (g0 * cfg.a.abs())).sqrt()
            };
            let h = h_res.min(target - t);
            let (g_lo, g_hi) = {
                let g1 = cfg.immigration(t + h);
                (g0.min(g1), g0.max(g1))
            };

            // Existing individuals.
            let (p0, q) = lineage_law(cfg.b, cfg.d, h);
            let survivors = if z == 0 || p0 <= 0.0 {
                z
            } else {
                Binomial::new(z, 1.0 - p0)
                    .expect("valid binomial")
                    .sample(rng)
            };
            let mut next = survivors + neg_binomial(rng, survivors as f64, q);

            // Homogeneous immigration at rate g_lo.
            next += if cfg.b > 0.0 {
                neg_binomial(rng, g_lo / cfg.b, q)
            } else if cfg.d > 0.0 {
                poisson(rng, g_lo * -(-cfg.d * h).exp_m1() / cfg.d)
            } else {
                poisson(rng, g_lo * h)
            };

            // Remaining immigration, rate g(u) - g_lo, arrival by arrival.
            if cfg.a != 0.0 {
                let mass = if cfg.a > 0.0 {
                    g0 * ((cfg.a * h).exp_m1() / cfg.a - h)
                } else {
                    g0 * ((cfg.a * h).exp_m1() / cfg.a) - g_lo * h
                };
                let arrivals = poisson(rng, mass);
                let peak = g_hi - g_lo;
                for _ in 0..arrivals {
                    let u = loop {
                        let u = rng.random::<f64>() * h;
                        if rng.random::<f64>() * peak <= cfg.immigration(t + u) - g_lo {
                            break u;
                        }
                    };
                    next += one_lineage(rng, cfg.b, cfg.d, h - u);
                }
            }
            z = next;
            t += h;
            out.events += 1;
        }
        out.times.push(i as f64 * cfg.grid_dt);
        out.counts.push(vec![z]);
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lineage_law_matches_known_means() {
        // Mean of one lineage is e^{(b-d) t}: (1 - p0) / (1 - q).
        for (b, d, t) in [
            (1.0, 2.0, 0.7),
            (2.0, 1.0, 0.3),
            (1.5, 1.5, 2.0),
            (1.0, 0.0, 1.0),
        ] {
            let (p0, q) = lineage_law(b, d, t);
            let mean = (1.0 - p0) / (1.0 - q);
            assert!((mean - ((b - d) * t).exp()).abs() < 1e-12, "{b} {d} {t}");
        }
        // Pure death.
        let (p0, q) = lineage_law(0.0, 1.0, 1.0);
        assert!((p0 - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn starting_count_and_grid() {
        let mut cfg = BpiConfig::new(1.0, 2.0, 0.5, 0.4, 0.2, 1000.0, 0.5, 1);
        cfg.grid_dt = 0.1;
        let s = simulate_bpi(&cfg).unwrap();
        assert_eq!(s.counts[0], vec![2]);
        assert_eq!(s.times.len(), 6);
        assert_eq!(s.alpha, None);
    }

    /// Mean `E Z(s)` for immigration `g e^{a u}`, no initial individuals.
    fn mean_from_zero(b: f64, d: f64, a: f64, g: f64, s: f64) -> f64 {
        let r = b - d;
        g * ((a * s).exp() - (r * s).exp()) / (a - r)
    }

    #[test]
    fn both_methods_hit_the_mean() {
        let (b, d, a, c, k) = (1.0, 2.0, 0.5, 0.4, 100.0);
        let horizon = 0.4;
        let s_abs = horizon * f64::ln(k);
        let exact = mean_from_zero(b, d, a, k.powf(c), s_abs);
        for method in [BpiMethod::Thinning, BpiMethod::Transition] {
            let n = 4000;
            let vals: Vec<f64> = (0..n)
                .map(|i| {
                    let mut cfg = BpiConfig::new(b, d, a, c, 0.0, k, horizon, 5);
                    cfg.grid_dt = horizon;
                    cfg.method = method;
                    simulate_bpi_stream(&cfg, i).unwrap().final_counts[0] as f64
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - exact).abs() < 4.0 * se,
                "{method:?}: {mean} vs {exact} (se {se})"
            );
        }
    }
}
