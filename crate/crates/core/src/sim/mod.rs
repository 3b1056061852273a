//! Exact event-driven simulation of the individual-based process.
//!
//! An individual of trait `v` gives birth at rate `b_v`; with probability
//! `mu_K = K^(-1/alpha)` the offspring mutates to `w` with probability
//! `m(v, w)`. It dies at rate `d_v + sum_w c_{v,w} N_w / K`.
//!
//! Internally time runs in model units; every input and output time is on
//! the rescaled scale `t / log K`.
//!
//! Random streams: replica `i` of base seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` with `set_stream(i)`. [`simulate`] uses
//! stream 0, so it coincides with replica 0.

mod bpi;
mod compare;

pub use bpi::{simulate_bpi, simulate_bpi_stream, BpiConfig, BpiMethod};
pub use compare::{
    compare_to_limit, convergence_study, CompareOptions, CompareReport, ConvergenceReport, KRow,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lv::equilibrium;
use crate::model::{distances, TraitGraphModel};

pub const DEFAULT_MAX_EVENTS: u64 = 2_000_000_000;
/// Full rate recomputation period, in events.
pub const RECOMPUTE_EVERY: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    /// `⌊K n̄_w(v0)⌋` on `v0`, `⌊K^((1 - d(v0,w)/alpha)_+)⌋ - 1` elsewhere.
    Residents(Vec<usize>),
    Counts(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub k: f64,
    pub initial: InitialState,
    /// Rescaled horizon.
    pub horizon: f64,
    pub seed: u64,
    /// Rescaled sampling step.
    pub grid_dt: f64,
    pub max_events: u64,
    /// When false, competition is switched off (pure linear birth-death).
    pub competition: bool,
}

impl SimConfig {
    pub fn new(k: f64, initial: InitialState, horizon: f64, seed: u64) -> Self {
        Self {
            k,
            initial,
            horizon,
            seed,
            grid_dt: 0.01,
            max_events: DEFAULT_MAX_EVENTS,
            competition: true,
        }
    }

    pub fn log_k(&self) -> f64 {
        self.k.ln()
    }

    fn check(&self) -> Result<()> {
        if !(self.k >= 10.0 && self.k.is_finite()) {
            return Err(Error::SimConfig(format!("K must be >= 10, got {}", self.k)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::SimConfig("horizon must be positive".into()));
        }
        if !(self.grid_dt > 0.0 && self.grid_dt.is_finite()) {
            return Err(Error::SimConfig("grid step must be positive".into()));
        }
        Ok(())
    }
}

/// Sampled trajectory. `counts[i][v]` is `N_v` at rescaled time `times[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub names: Vec<String>,
    pub k: f64,
    /// Absent for auxiliary processes without a mutation exponent.
    pub alpha: Option<f64>,
    pub seed: u64,
    pub stream: u64,
    pub times: Vec<f64>,
    pub counts: Vec<Vec<u64>>,
    pub final_counts: Vec<u64>,
    /// Rescaled time reached (the horizon unless truncated).
    pub final_time: f64,
    pub events: u64,
    pub truncated: bool,
    /// Largest relative gap between cached and recomputed rates.
    pub max_drift: f64,
}

impl TrajectorySample {
    /// `log(1 + N_v)/log K` on the grid.
    pub fn exponents(&self) -> Vec<Vec<f64>> {
        let lk = self.k.ln();
        self.counts
            .iter()
            .map(|row| row.iter().map(|&n| (n as f64).ln_1p() / lk).collect())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let lk = self.k.ln();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend(self.names.iter().map(|n| format!("N_{n}")));
        header.extend(self.names.iter().map(|n| format!("beta_{n}")));
        w.write_record(&header).expect("in-memory csv");
        for (t, row) in self.times.iter().zip(&self.counts) {
            let mut rec = vec![t.to_string()];
            rec.extend(row.iter().map(|n| n.to_string()));
            rec.extend(row.iter().map(|&n| ((n as f64).ln_1p() / lk).to_string()));
            w.write_record(&rec).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.seed,
            "stream": self.stream,
            "k": self.k,
            "events": self.events,
            "truncated": self.truncated,
            "final_time": self.final_time,
            "final_state": self.names.iter().zip(&self.final_counts)
                .map(|(n, c)| (n.clone(), serde_json::json!(c)))
                .collect::<serde_json::Map<_, _>>(),
            "max_rate_drift": self.max_drift,
        })
    }
}

/// `log(1 + sum_v N_v)/log K` on the grid.
pub fn total_mass_exponent(sample: &TrajectorySample) -> Vec<f64> {
    let lk = sample.k.ln();
    sample
        .counts
        .iter()
        .map(|row| (row.iter().sum::<u64>() as f64).ln_1p() / lk)
        .collect()
}

/// Replica `stream` of `seed`.
pub fn replica_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn initial_counts(model: &TraitGraphModel, config: &SimConfig) -> Result<Vec<u64>> {
    let n = model.len();
    match &config.initial {
        InitialState::Counts(c) => {
            if c.len() != n {
                return Err(Error::SimConfig(format!(
                    "expected {n} initial counts, got {}",
                    c.len()
                )));
            }
            Ok(c.clone())
        }
        InitialState::Residents(v0) => {
            let eq = equilibrium(model, v0)?;
            let table = distances(model);
            (0..n)
                .map(|w| {
                    if v0.contains(&w) {
                        return Ok((config.k * eq.values[w]).floor() as u64);
                    }
                    let d = table.from_set(v0, w)?;
                    let beta = d.over(model.alpha()).map_or(0.0, |x| (1.0 - x).max(0.0));
                    Ok((floor_pow(config.k, beta) - 1.0).max(0.0) as u64)
                })
                .collect()
        }
    }
}

/// `⌊K^beta⌋`, tolerant of `powf` landing just below an integer.
pub(crate) fn floor_pow(k: f64, beta: f64) -> f64 {
    (k.powf(beta) * (1.0 + 1e-12)).floor()
}

/// Per-trait cached quantities; death rates derive from the pressure.
struct State<'a> {
    model: &'a TraitGraphModel,
    n: Vec<u64>,
    /// `sum_w c_{v,w} N_w`.
    pressure: Vec<f64>,
    inv_k: f64,
    competition: bool,
}

impl<'a> State<'a> {
    fn new(model: &'a TraitGraphModel, counts: Vec<u64>, k: f64, competition: bool) -> Self {
        let mut s = Self {
            model,
            pressure: vec![0.0; counts.len()],
            n: counts,
            inv_k: 1.0 / k,
            competition,
        };
        s.pressure = s.fresh_pressure();
        s
    }

    fn fresh_pressure(&self) -> Vec<f64> {
        (0..self.n.len())
            .map(|v| {
                if !self.competition {
                    return 0.0;
                }
                (0..self.n.len())
                    .map(|w| self.model.competition(v, w) * self.n[w] as f64)
                    .sum()
            })
            .collect()
    }

    fn change(&mut self, w: usize, up: bool) {
        if up {
            self.n[w] += 1;
        } else {
            self.n[w] -= 1;
        }
        if self.competition {
            let sign = if up { 1.0 } else { -1.0 };
            for v in 0..self.n.len() {
                self.pressure[v] += sign * self.model.competition(v, w);
            }
        }
    }

    fn birth(&self, v: usize) -> f64 {
        self.n[v] as f64 * self.model.birth(v)
    }

    fn death(&self, v: usize) -> f64 {
        self.n[v] as f64 * (self.model.death(v) + self.pressure[v] * self.inv_k)
    }

    /// Replaces the cached pressure; returns the relative drift observed.
    fn refresh(&mut self) -> f64 {
        let fresh = self.fresh_pressure();
        let mut drift = 0.0f64;
        for (cached, exact) in self.pressure.iter().zip(&fresh) {
            let scale = exact.abs().max(1.0);
            drift = drift.max((cached - exact).abs() / scale);
        }
        self.pressure = fresh;
        drift
    }
}

pub fn simulate(model: &TraitGraphModel, config: &SimConfig) -> Result<TrajectorySample> {
    simulate_stream(model, config, 0)
}

/// Simulates replica `stream` of `config.seed`.
pub fn simulate_stream(
    model: &TraitGraphModel,
    config: &SimConfig,
    stream: u64,
) -> Result<TrajectorySample> {
    config.check()?;
    let report = crate::model::validate_model(model);
    if report.has_structural_issues() {
        return Err(Error::Config(report.to_string()));
    }
    let counts = initial_counts(model, config)?;
    let mut rng = replica_rng(config.seed, stream);
    let lk = config.log_k();
    let mu = model.mutation_probability(config.k);
    let n = model.len();
    let t_end = config.horizon * lk;
    let dt_abs = config.grid_dt * lk;
    let grid_len = (config.horizon / config.grid_dt + 1e-9).floor() as usize + 1;

    // Cumulative mutation kernels.
    let kernels: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|v| {
            let mut acc = 0.0;
            model
                .out_neighbors(v)
                .iter()
                .map(|&w| {
                    acc += model.mutation(v, w);
                    (w, acc)
                })
                .collect()
        })
        .collect();

    let mut state = State::new(model, counts, config.k, config.competition);
    let mut sample = TrajectorySample {
        names: model.names().to_vec(),
        k: config.k,
        alpha: Some(model.alpha()),
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
    let mut next_grid = 0usize;
    let mut t = 0.0;
    let mut rates = vec![0.0; 2 * n];

    loop {
        let mut total = 0.0;
        for v in 0..n {
            rates[2 * v] = state.birth(v);
            rates[2 * v + 1] = state.death(v);
            total += rates[2 * v] + rates[2 * v + 1];
        }
        let t_new = if total > 0.0 {
            t - rng.random::<f64>().ln() / total
        } else {
            f64::INFINITY
        };
        while next_grid < grid_len && (next_grid as f64) * dt_abs <= t_new.min(t_end) {
            sample.times.push(next_grid as f64 * config.grid_dt);
            sample.counts.push(state.n.clone());
            next_grid += 1;
        }
        if t_new > t_end {
            break;
        }
        if sample.events >= config.max_events {
            sample.truncated = true;
            sample.final_time = t / lk;
            break;
        }
        t = t_new;
        sample.events += 1;

        let mut u = rng.random::<f64>() * total;
        let mut channel = 2 * n - 1;
        for (i, &r) in rates.iter().enumerate() {
            if u < r {
                channel = i;
                break;
            }
            u -= r;
        }
        // Guard against landing on an empty channel through rounding.
        while rates[channel] <= 0.0 {
            channel -= 1;
        }
        let v = channel / 2;
        if channel % 2 == 1 {
            state.change(v, false);
        } else if !kernels[v].is_empty() && rng.random::<f64>() < mu {
            let x = rng.random::<f64>() * kernels[v].last().map_or(1.0, |k| k.1);
            let w = kernels[v]
                .iter()
                .find(|(_, acc)| x < *acc)
                .map_or(kernels[v].last().unwrap().0, |k| k.0);
            state.change(w, true);
        } else {
            state.change(v, true);
        }
        if sample.events % RECOMPUTE_EVERY == 0 {
            sample.max_drift = sample.max_drift.max(state.refresh());
        }
    }
    sample.max_drift = sample.max_drift.max(state.refresh());
    sample.final_counts = state.n.clone();
    Ok(sample)
}

/// Runs `n_seeds` replicas on a pool of `parallelism` threads. Replica `i`
/// uses stream `i`; results come back in replica order.
pub fn run_replicas(
    model: &TraitGraphModel,
    config: &SimConfig,
    n_seeds: usize,
    parallelism: usize,
) -> Result<Vec<TrajectorySample>> {
    if n_seeds == 0 {
        return Err(Error::SimConfig("at least one replica is required".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::SimConfig(e.to_string()))?;
    pool.install(|| {
        (0..n_seeds as u64)
            .into_par_iter()
            .map(|i| simulate_stream(model, config, i))
            .collect()
    })
}
