use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lv::LvEquilibrium;
use crate::model::TraitGraphModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminationReason {
    /// The initial resident set has no unique globally attractive
    /// equilibrium supported on all of it.
    #[serde(rename = "initial")]
    Initial,
    /// More than one trait invades at once.
    #[serde(rename = "iv-a")]
    IvA,
    /// The post-invasion equilibrium is not uniquely globally attractive.
    #[serde(rename = "iv-b")]
    IvB,
    /// A non-resident reaches 0 from above at an invasion time.
    #[serde(rename = "iv-c")]
    IvC,
    /// A mutant arises at an invasion time.
    #[serde(rename = "iv-d")]
    IvD,
    #[serde(rename = "horizon")]
    Horizon,
}

impl TerminationReason {
    pub fn label(self) -> &'static str {
        match self {
            Self::Initial => "initial",
            Self::IvA => "iv-a",
            Self::IvB => "iv-b",
            Self::IvC => "iv-c",
            Self::IvD => "iv-d",
            Self::Horizon => "horizon",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    Invasion {
        invader: usize,
        /// Support of the new equilibrium.
        residents: Vec<usize>,
        /// Previous residents plus the invader.
        union: Vec<usize>,
    },
    MutantArrival {
        trait_index: usize,
    },
    /// Informational: a trait's exponent reaches 0 between events.
    ZeroHit {
        trait_index: usize,
    },
    Termination {
        reason: TerminationReason,
    },
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::ZeroHit { .. } => 0,
            EventKind::MutantArrival { .. } => 1,
            EventKind::Invasion { .. } => 2,
            EventKind::Termination { .. } => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// One resident phase `[s_k, s_{k+1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub start: f64,
    pub end: f64,
    pub union_set: Vec<usize>,
    pub residents: Vec<usize>,
    pub equilibrium: LvEquilibrium,
    /// Invasion fitness of every trait; residents are exactly 0.
    pub fitness: Vec<f64>,
}

impl Phase {
    pub(crate) fn new(
        start: f64,
        union_set: Vec<usize>,
        equilibrium: LvEquilibrium,
        fitness: Vec<f64>,
    ) -> Self {
        Self {
            start,
            end: start,
            union_set,
            residents: equilibrium.support.clone(),
            equilibrium,
            fitness,
        }
    }
}

/// Living set `M` on `(start, end]`, i.e. between two consecutive
/// invasion/arrival times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LivingInterval {
    pub start: f64,
    pub end: f64,
    pub living: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub time: f64,
    pub reason: TerminationReason,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub trait_names: Vec<String>,
    pub alpha: f64,
    pub horizon: f64,
    pub events: Vec<Event>,
    pub phases: Vec<Phase>,
    pub living: Vec<LivingInterval>,
    pub termination: Option<Termination>,
}

impl EventLog {
    pub(crate) fn new(model: &TraitGraphModel, horizon: f64) -> Self {
        Self {
            trait_names: model.names().to_vec(),
            alpha: model.alpha(),
            horizon,
            events: Vec::new(),
            phases: Vec::new(),
            living: Vec::new(),
            termination: None,
        }
    }

    /// Inserts keeping events ordered by time, then zero hits, arrivals,
    /// invasions, termination.
    pub(crate) fn push(&mut self, time: f64, kind: EventKind) {
        let key = (time, kind.rank());
        let pos = self
            .events
            .partition_point(|e| (e.time, e.kind.rank()) <= key);
        self.events.insert(pos, Event { time, kind });
    }

    pub(crate) fn terminate(&mut self, time: f64, reason: TerminationReason, detail: String) {
        if let Some(last) = self.phases.last_mut() {
            last.end = time;
        }
        self.push(time, EventKind::Termination { reason });
        self.termination = Some(Termination {
            time,
            reason,
            detail,
        });
    }

    /// `T_0` when the construction stopped before the horizon.
    pub fn t0(&self) -> Option<f64> {
        self.termination
            .as_ref()
            .filter(|t| t.reason != TerminationReason::Horizon)
            .map(|t| t.time)
    }

    pub fn end_time(&self) -> f64 {
        self.termination.as_ref().map_or(self.horizon, |t| t.time)
    }

    pub fn invasion_times(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Invasion { .. }))
            .map(|e| e.time)
            .collect()
    }

    pub fn invaders(&self) -> Vec<usize> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Invasion { invader, .. } => Some(invader),
                _ => None,
            })
            .collect()
    }

    /// Resident sets `v_0, v_1, ...`.
    pub fn succession(&self) -> Vec<Vec<usize>> {
        self.phases.iter().map(|p| p.residents.clone()).collect()
    }

    /// Times of mutant arrivals of trait `w`.
    pub fn arrivals_of(&self, w: usize) -> Vec<f64> {
        self.events
            .iter()
            .filter(
                |e| matches!(e.kind, EventKind::MutantArrival { trait_index } if trait_index == w),
            )
            .map(|e| e.time)
            .collect()
    }

    /// First time at which `w` belongs to the resident set.
    pub fn first_resident_time(&self, w: usize) -> Option<f64> {
        self.phases
            .iter()
            .find(|p| p.residents.contains(&w))
            .map(|p| p.start)
    }

    /// The `tau` sequence: 0, then every invasion and arrival time.
    pub fn tau_times(&self) -> Vec<f64> {
        let mut ts = vec![0.0];
        ts.extend(self.living.iter().map(|l| l.end));
        ts
    }

    pub fn jump_process(&self) -> JumpProcessPath {
        let end = self.end_time();
        JumpProcessPath {
            steps: self
                .phases
                .iter()
                .map(|p| JumpStep {
                    start: p.start,
                    residents: p.residents.clone(),
                    values: p.equilibrium.values.clone(),
                })
                .collect(),
            end,
        }
    }

    /// JSON document with trait names in place of indices.
    pub fn to_json(&self) -> Value {
        let names = |set: &[usize]| -> Vec<&str> {
            set.iter().map(|&i| self.trait_names[i].as_str()).collect()
        };
        let by_name = |values: &[f64]| -> serde_json::Map<String, Value> {
            self.trait_names
                .iter()
                .zip(values)
                .map(|(n, v)| (n.clone(), json!(v)))
                .collect()
        };
        let events: Vec<Value> = self
            .events
            .iter()
            .map(|e| match &e.kind {
                EventKind::Invasion {
                    invader,
                    residents,
                    union,
                } => json!({
                    "time": e.time,
                    "kind": "invasion",
                    "invader": self.trait_names[*invader],
                    "union": names(union),
                    "residents": names(residents),
                }),
                EventKind::MutantArrival { trait_index } => json!({
                    "time": e.time,
                    "kind": "mutant_arrival",
                    "trait": self.trait_names[*trait_index],
                }),
                EventKind::ZeroHit { trait_index } => json!({
                    "time": e.time,
                    "kind": "zero_hit",
                    "trait": self.trait_names[*trait_index],
                }),
                EventKind::Termination { reason } => json!({
                    "time": e.time,
                    "kind": "termination",
                    "reason": reason.label(),
                }),
            })
            .collect();
        let phases: Vec<Value> = self
            .phases
            .iter()
            .map(|p| {
                json!({
                    "start": p.start,
                    "end": p.end,
                    "union": names(&p.union_set),
                    "residents": names(&p.residents),
                    "classification": p.equilibrium.classification,
                    "equilibrium": by_name(&p.equilibrium.values),
                    "fitness": by_name(&p.fitness),
                })
            })
            .collect();
        let living: Vec<Value> = self
            .living
            .iter()
            .map(|l| json!({"start": l.start, "end": l.end, "living": names(&l.living)}))
            .collect();
        json!({
            "traits": self.trait_names,
            "alpha": self.alpha,
            "horizon": self.horizon,
            "events": events,
            "phases": phases,
            "living_sets": living,
            "termination": self.termination.as_ref().map(|t| json!({
                "time": t.time,
                "reason": t.reason.label(),
                "detail": t.detail,
            })),
            "t0": self.t0(),
        })
    }

    /// Reads back the fields of [`EventLog::to_json`] needed to compare
    /// against simulations.
    pub fn summary_from_json(value: &Value) -> Result<LogSummary> {
        let bad = |what: &str| Error::Config(format!("event log: missing or malformed `{what}`"));
        let alpha = value
            .get("alpha")
            .and_then(Value::as_f64)
            .ok_or_else(|| bad("alpha"))?;
        let traits = value
            .get("traits")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("traits"))?
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| bad("traits")))
            .collect::<Result<Vec<_>>>()?;
        let invasion_times = value
            .get("events")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("events"))?
            .iter()
            .filter(|e| e.get("kind").and_then(Value::as_str) == Some("invasion"))
            .map(|e| {
                e.get("time")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| bad("events.time"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LogSummary {
            alpha,
            traits,
            invasion_times,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogSummary {
    pub alpha: f64,
    pub traits: Vec<String>,
    pub invasion_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpStep {
    pub start: f64,
    pub residents: Vec<usize>,
    pub values: Vec<f64>,
}

/// Piecewise-constant `N(t)`: the equilibrium of the current resident set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpProcessPath {
    pub steps: Vec<JumpStep>,
    pub end: f64,
}

impl JumpProcessPath {
    pub fn evaluate(&self, t: f64) -> Result<&[f64]> {
        if !(0.0..=self.end).contains(&t) || self.steps.is_empty() {
            return Err(Error::TimeOutOfRange { t, end: self.end });
        }
        let i = self.steps.partition_point(|s| s.start <= t);
        Ok(&self.steps[i.saturating_sub(1)].values)
    }

    pub fn jump_times(&self) -> Vec<f64> {
        self.steps.iter().skip(1).map(|s| s.start).collect()
    }
}
