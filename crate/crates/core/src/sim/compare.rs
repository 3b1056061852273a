use serde::{Deserialize, Serialize};

use super::{run_replicas, SimConfig, TrajectorySample};
use crate::error::{Error, Result};
use crate::limit::LimitRun;
use crate::model::TraitGraphModel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    /// Half-width of the windows around invasion times excluded from the
    /// density comparison.
    pub delta: f64,
    /// Compare only on `t <= t_max`.
    pub t_max: Option<f64>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            delta: 0.05,
            t_max: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// Per replica: `sup_t max_w |beta^K_w(t) - beta_w(t)|`.
    pub beta_errors: Vec<f64>,
    /// Per replica: `sup max_w |N_w/K - n_w(t)|` away from invasion times.
    pub density_errors: Vec<f64>,
    pub median_beta: f64,
    pub median_density: f64,
    /// Largest time compared.
    pub t_end: f64,
    pub truncated: usize,
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn compare_to_limit(
    samples: &[TrajectorySample],
    run: &LimitRun,
    opts: &CompareOptions,
) -> Result<CompareReport> {
    let log = &run.log;
    let t_end = opts.t_max.map_or(log.end_time(), |t| t.min(log.end_time()));
    let jumps = log.invasion_times();
    let mut beta_errors = Vec::with_capacity(samples.len());
    let mut density_errors = Vec::with_capacity(samples.len());
    for s in samples {
        if s.alpha != Some(log.alpha) {
            return Err(Error::Mismatch(format!(
                "simulation alpha {:?} differs from limit alpha {}",
                s.alpha, log.alpha
            )));
        }
        if s.names != log.trait_names {
            return Err(Error::Mismatch(format!(
                "simulation traits {:?} differ from limit traits {:?}",
                s.names, log.trait_names
            )));
        }
        let exps = s.exponents();
        let mut sup_beta = 0.0f64;
        let mut sup_density = 0.0f64;
        for ((&t, row), beta) in s.times.iter().zip(&s.counts).zip(&exps) {
            if t > t_end || t > s.final_time {
                break;
            }
            let limit = run.paths.evaluate(t)?;
            for (b, l) in beta.iter().zip(&limit) {
                sup_beta = sup_beta.max((b - l).abs());
            }
            if jumps.iter().all(|&sk| (t - sk).abs() >= opts.delta) {
                let n = run.jump.evaluate(t)?;
                for (&count, nbar) in row.iter().zip(n) {
                    sup_density = sup_density.max((count as f64 / s.k - nbar).abs());
                }
            }
        }
        beta_errors.push(sup_beta);
        density_errors.push(sup_density);
    }
    Ok(CompareReport {
        median_beta: median(&beta_errors),
        median_density: median(&density_errors),
        beta_errors,
        density_errors,
        t_end,
        truncated: samples.iter().filter(|s| s.truncated).count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub k: f64,
    pub report: CompareReport,
    pub mean_events: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<KRow>,
    /// Median exponent error strictly decreases along the `K` ladder.
    pub decreasing: bool,
}

impl ConvergenceReport {
    pub fn medians(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.report.median_beta).collect()
    }
}

/// Runs `n_seeds` replicas for every `K` in `ks` (other settings from
/// `base`) and compares each batch with `run`.
pub fn convergence_study(
    model: &TraitGraphModel,
    run: &LimitRun,
    base: &SimConfig,
    ks: &[f64],
    n_seeds: usize,
    parallelism: usize,
    opts: &CompareOptions,
) -> Result<ConvergenceReport> {
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let cfg = SimConfig { k, ..base.clone() };
        let samples = run_replicas(model, &cfg, n_seeds, parallelism)?;
        let report = compare_to_limit(&samples, run, opts)?;
        let mean_events =
            samples.iter().map(|s| s.events as f64).sum::<f64>() / samples.len() as f64;
        rows.push(KRow {
            k,
            report,
            mean_events,
        });
    }
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].report.median_beta < w[0].report.median_beta);
    Ok(ConvergenceReport { rows, decreasing })
}
