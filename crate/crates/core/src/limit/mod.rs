//! Deterministic `log K` time-scale limit.
//!
//! Between two events every exponent is the upper envelope of the affine
//! lines `beta_u(tau) - d(u,w)/alpha + (t - tau) f_u` over living traits
//! `u`, clamped at zero. Events are invasions (a non-resident reaches 1,
//! the resident set is replaced by the support of the new Lotka-Volterra
//! equilibrium) and mutant arrivals (a dead trait becomes positive). All
//! event times are roots of affine functions and are computed in closed
//! form.

mod log;
mod path;

pub use log::{
    Event, EventKind, EventLog, JumpProcessPath, JumpStep, LivingInterval, LogSummary, Phase,
    Termination, TerminationReason,
};
pub use path::{evaluate_beta, Breakpoint, ExponentPath};

use crate::error::{Error, Result};
use crate::lv::{equilibrium_with, invasion_fitness, LvEquilibrium, LvOptions, Stability};
use crate::model::{distances, validate_model, DistanceTable, TraitGraphModel};

/// Two event times closer than this are simultaneous.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// Macroscopic resident set `v0`; other traits start at
    /// `(1 - d(v0, w)/alpha)_+`.
    Residents(Vec<usize>),
    /// Arbitrary starting exponents. Traits at exactly 1 form `v0` and
    /// every trait is lifted to `max_u(beta_u - d(u, w)/alpha)`.
    Exponents(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitOptions {
    pub horizon: f64,
    pub tie_tol: f64,
    pub lv: LvOptions,
    /// Guard against runaway event loops.
    pub max_events: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            tie_tol: TIE_TOL,
            lv: LvOptions::default(),
            max_events: 100_000,
        }
    }
}

impl LimitOptions {
    pub fn with_horizon(horizon: f64) -> Self {
        Self {
            horizon,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitRun {
    pub paths: ExponentPath,
    pub log: EventLog,
    pub jump: JumpProcessPath,
}

/// Starting exponents and the initial resident set.
pub fn initial_exponents(
    model: &TraitGraphModel,
    init: &InitialCondition,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let table = distances(model);
    initial_with_table(model, &table, init)
}

fn initial_with_table(
    model: &TraitGraphModel,
    table: &DistanceTable,
    init: &InitialCondition,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let n = model.len();
    let alpha = model.alpha();
    match init {
        InitialCondition::Residents(v0) => {
            let mut v0 = v0.clone();
            v0.sort_unstable();
            v0.dedup();
            let beta = (0..n)
                .map(|w| {
                    let d = table.from_set(&v0, w)?;
                    Ok(d.over(alpha).map_or(0.0, |x| (1.0 - x).max(0.0)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((beta, v0))
        }
        InitialCondition::Exponents(tilde) => {
            if tilde.len() != n {
                return Err(Error::Config(format!(
                    "expected {n} initial exponents, got {}",
                    tilde.len()
                )));
            }
            if tilde.iter().any(|b| !(0.0..=1.0).contains(b)) {
                return Err(Error::Config("initial exponents must lie in [0, 1]".into()));
            }
            let v0: Vec<usize> = (0..n).filter(|&v| tilde[v] == 1.0).collect();
            if v0.is_empty() {
                return Err(Error::EmptySet);
            }
            let beta = (0..n)
                .map(|w| {
                    (0..n)
                        .filter(|&u| tilde[u] > 0.0)
                        .filter_map(|u| table.get(u, w).over(alpha).map(|d| tilde[u] - d))
                        .fold(0.0, f64::max)
                })
                .collect();
            Ok((beta, v0))
        }
    }
}

pub fn run_limit(model: &TraitGraphModel, v0: &[usize], horizon: f64) -> Result<LimitRun> {
    run_limit_with(
        model,
        &InitialCondition::Residents(v0.to_vec()),
        &LimitOptions::with_horizon(horizon),
    )
}

/// An affine line `a + slope * s` in time `s` since the current event.
#[derive(Clone, Copy, Debug)]
struct Line {
    a: f64,
    slope: f64,
    source: usize,
}

const ZERO_LINE: usize = usize::MAX;

pub fn run_limit_with(
    model: &TraitGraphModel,
    init: &InitialCondition,
    opts: &LimitOptions,
) -> Result<LimitRun> {
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::Config(format!(
            "horizon must be positive and finite, got {}",
            opts.horizon
        )));
    }
    let report = validate_model(model);
    if !report.is_ok() {
        return Err(Error::Config(report.to_string()));
    }
    let n = model.len();
    let alpha = model.alpha();
    let table = distances(model);
    let (mut beta, v0) = initial_with_table(model, &table, init)?;
    let mut paths = ExponentPath::new(&beta);
    let mut log = EventLog::new(model, opts.horizon);

    let eq0 = equilibrium_with(model, &v0, &opts.lv)?;
    if !(eq0.is_uga() && eq0.support == v0) {
        let detail = format!(
            "initial resident set is {:?} with support {:?}",
            eq0.classification, eq0.support
        );
        log.phases
            .push(Phase::new(0.0, v0.clone(), eq0.clone(), vec![0.0; n]));
        log.terminate(0.0, TerminationReason::Initial, detail);
        let jump = log.jump_process();
        return Ok(LimitRun { paths, log, jump });
    }

    let mut residents = v0.clone();
    let mut fitness = phase_fitness(model, &eq0);
    log.phases.push(Phase::new(0.0, v0, eq0, fitness.clone()));
    let mut living: Vec<bool> = beta.iter().map(|&b| b > 0.0).collect();
    let mut tau = 0.0;
    let tie = opts.tie_tol;

    for _ in 0..opts.max_events {
        // Candidate event delays, per trait.
        let mut invasion = vec![f64::INFINITY; n];
        let mut arrival = vec![f64::INFINITY; n];
        for w in 0..n {
            if living[w] && !residents.contains(&w) && fitness[w] > 0.0 {
                invasion[w] = ((1.0 - beta[w]) / fitness[w]).max(0.0);
            }
        }
        for w in (0..n).filter(|&w| !living[w]) {
            for u in (0..n).filter(|&u| living[u] && fitness[u] > 0.0) {
                if let Some(d) = table.get(u, w).over(alpha) {
                    arrival[w] = arrival[w].min(((d - beta[u]) / fitness[u]).max(0.0));
                }
            }
        }
        let next_inv = invasion.iter().copied().fold(f64::INFINITY, f64::min);
        let next_arr = arrival.iter().copied().fold(f64::INFINITY, f64::min);
        let delta = next_inv.min(next_arr);

        if tau + delta > opts.horizon {
            let span = opts.horizon - tau;
            let hits = advance(
                model, &table, &beta, &living, &fitness, tau, span, 0.0, &mut paths,
            );
            for (w, t) in hits.inside {
                log.push(t, EventKind::ZeroHit { trait_index: w });
            }
            paths.end = opts.horizon;
            let detail = if delta.is_infinite() {
                "no further event: stationary tail".to_string()
            } else {
                format!("next event at {} lies beyond the horizon", tau + delta)
            };
            log.terminate(opts.horizon, TerminationReason::Horizon, detail);
            let jump = log.jump_process();
            return Ok(LimitRun { paths, log, jump });
        }

        let t_next = tau + delta;
        let hits = advance(
            model, &table, &beta, &living, &fitness, tau, delta, tie, &mut paths,
        );
        let was_positive: Vec<bool> = beta.iter().map(|&b| b > 0.0).collect();
        beta = end_values(model, &table, &beta, &living, &fitness, delta);
        paths.end = t_next;

        let invaders: Vec<usize> = (0..n).filter(|&w| invasion[w] - delta < tie).collect();
        let arrivals: Vec<usize> = (0..n).filter(|&w| arrival[w] - delta < tie).collect();
        for &w in &invaders {
            beta[w] = 1.0;
        }
        for &w in &arrivals {
            beta[w] = 0.0;
        }
        // Traits reaching 0 within the tie tolerance of t_next, from above.
        let mut late_zero = Vec::new();
        for &(w, t) in &hits.inside {
            log.push(t, EventKind::ZeroHit { trait_index: w });
            if t_next - t < tie && !residents.contains(&w) {
                late_zero.push(w);
            }
        }
        for &(w, _) in &hits.after {
            if !residents.contains(&w) {
                late_zero.push(w);
            }
            // Hits that round onto t_next would otherwise go unrecorded.
            if beta[w] == 0.0 && was_positive[w] {
                log.push(t_next, EventKind::ZeroHit { trait_index: w });
            }
        }

        if !invaders.is_empty() {
            let stop = |log: &mut EventLog, paths: &mut ExponentPath, reason, detail: String| {
                for (w, &b) in beta.iter().enumerate() {
                    paths.push(w, t_next, b, 0.0);
                }
                log.terminate(t_next, reason, detail);
            };
            if invaders.len() > 1 {
                stop(
                    &mut log,
                    &mut paths,
                    TerminationReason::IvA,
                    format!("simultaneous invaders {invaders:?}"),
                );
                break;
            }
            let invader = invaders[0];
            if !late_zero.is_empty() {
                let detail = format!("traits {late_zero:?} reach 0 at the invasion of {invader}");
                stop(&mut log, &mut paths, TerminationReason::IvC, detail);
                break;
            }
            if !arrivals.is_empty() {
                let detail = format!("traits {arrivals:?} arise at the invasion of {invader}");
                stop(&mut log, &mut paths, TerminationReason::IvD, detail);
                break;
            }
            let mut union = residents.clone();
            union.push(invader);
            union.sort_unstable();
            let eq = equilibrium_with(model, &union, &opts.lv)?;
            if eq.classification != Stability::UniqueGloballyAttractive {
                let detail = format!("equilibrium of {union:?} is {:?}", eq.classification);
                stop(&mut log, &mut paths, TerminationReason::IvB, detail);
                break;
            }
            residents = eq.support.clone();
            fitness = phase_fitness(model, &eq);
            log.push(
                t_next,
                EventKind::Invasion {
                    invader,
                    residents: residents.clone(),
                    union: union.clone(),
                },
            );
            if let Some(last) = log.phases.last_mut() {
                last.end = t_next;
            }
            log.phases
                .push(Phase::new(t_next, union, eq, fitness.clone()));
        }
        for &w in &arrivals {
            log.push(t_next, EventKind::MutantArrival { trait_index: w });
        }

        // Living set update: drop exhausted traits, then add arrivals.
        let before: Vec<usize> = (0..n).filter(|&w| living[w]).collect();
        log.living.push(LivingInterval {
            start: tau,
            end: t_next,
            living: before,
        });
        for w in 0..n {
            if living[w] && beta[w] == 0.0 {
                living[w] = false;
            }
        }
        for &w in &arrivals {
            living[w] = true;
        }
        tau = t_next;
    }

    if log.termination.is_none() {
        log.terminate(
            tau,
            TerminationReason::Horizon,
            "event budget exhausted".into(),
        );
    }
    let jump = log.jump_process();
    Ok(LimitRun { paths, log, jump })
}

/// Fitness against the phase equilibrium, with residents pinned at exactly 0.
fn phase_fitness(model: &TraitGraphModel, eq: &LvEquilibrium) -> Vec<f64> {
    let mut f = invasion_fitness(model, eq).values;
    for &v in &eq.support {
        f[v] = 0.0;
    }
    f
}

fn lines_into(
    model: &TraitGraphModel,
    table: &DistanceTable,
    beta: &[f64],
    living: &[bool],
    fitness: &[f64],
    w: usize,
    out: &mut Vec<Line>,
) {
    out.clear();
    let alpha = model.alpha();
    for u in (0..beta.len()).filter(|&u| living[u]) {
        if let Some(d) = table.get(u, w).over(alpha) {
            out.push(Line {
                a: beta[u] - d,
                slope: fitness[u],
                source: u,
            });
        }
    }
    out.push(Line {
        a: 0.0,
        slope: 0.0,
        source: ZERO_LINE,
    });
}

/// Upper envelope of `lines` on `[0, span]` as `(start, line)` pieces.
fn envelope(lines: &[Line], span: f64) -> Vec<(f64, Line)> {
    let better = |x: &Line, y: &Line, s: f64| {
        let (vx, vy) = (x.a + x.slope * s, y.a + y.slope * s);
        vx > vy || (vx == vy && (x.slope > y.slope || (x.slope == y.slope && x.source < y.source)))
    };
    let mut cur = lines[0];
    for l in &lines[1..] {
        if better(l, &cur, 0.0) {
            cur = *l;
        }
    }
    let mut pieces = vec![(0.0, cur)];
    let mut s = 0.0;
    loop {
        let mut next: Option<(f64, Line)> = None;
        for l in lines {
            if l.slope <= cur.slope {
                continue;
            }
            let cross = ((cur.a - l.a) / (l.slope - cur.slope)).max(s);
            if cross >= span {
                continue;
            }
            let take = match next {
                None => true,
                Some((c, best)) => cross < c || (cross == c && better(l, &best, cross + 1.0)),
            };
            if take {
                next = Some((cross, *l));
            }
        }
        match next {
            Some((cross, l)) => {
                s = cross;
                cur = l;
                if let Some(last) = pieces.last_mut().filter(|p| p.0 == cross) {
                    *last = (cross, l);
                } else {
                    pieces.push((cross, l));
                }
            }
            None => return pieces,
        }
    }
}

/// Zero hits found while extending the paths.
struct ZeroHits {
    /// Strictly inside the step.
    inside: Vec<(usize, f64)>,
    /// Within `lookahead` after the end of the step.
    after: Vec<(usize, f64)>,
}

/// Extends every path over `[tau, tau + span]`.
#[allow(clippy::too_many_arguments)]
fn advance(
    model: &TraitGraphModel,
    table: &DistanceTable,
    beta: &[f64],
    living: &[bool],
    fitness: &[f64],
    tau: f64,
    span: f64,
    lookahead: f64,
    paths: &mut ExponentPath,
) -> ZeroHits {
    let mut hits = ZeroHits {
        inside: Vec::new(),
        after: Vec::new(),
    };
    let mut lines = Vec::new();
    for w in 0..beta.len() {
        lines_into(model, table, beta, living, fitness, w, &mut lines);
        let pieces = envelope(&lines, span + lookahead);
        let mut prev_positive = beta[w] > 0.0;
        for (k, &(s, line)) in pieces.iter().enumerate() {
            let t = tau + s;
            let zero_hit = line.source == ZERO_LINE && prev_positive && k > 0;
            if s < span {
                let value = if k == 0 {
                    beta[w]
                } else {
                    (line.a + line.slope * s).max(0.0)
                };
                paths.push(w, t, value, line.slope);
                if zero_hit {
                    hits.inside.push((w, t));
                }
            } else if zero_hit {
                hits.after.push((w, t));
            }
            prev_positive = line.source != ZERO_LINE;
        }
    }
    let order = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    hits.inside.sort_by(order);
    hits.after.sort_by(order);
    hits
}

fn end_values(
    model: &TraitGraphModel,
    table: &DistanceTable,
    beta: &[f64],
    living: &[bool],
    fitness: &[f64],
    span: f64,
) -> Vec<f64> {
    let mut lines = Vec::new();
    (0..beta.len())
        .map(|w| {
            lines_into(model, table, beta, living, fitness, w, &mut lines);
            lines
                .iter()
                .map(|l| l.a + l.slope * span)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Free-function form of [`EventLog::jump_process`].
pub fn jump_process(log: &EventLog) -> JumpProcessPath {
    log.jump_process()
}
