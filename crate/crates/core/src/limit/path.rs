use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Start of an affine piece: value at `t` and the slope until the next
/// breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    pub value: f64,
    pub slope: f64,
}

/// Piecewise-affine exponent trajectories, one breakpoint list per trait,
/// on `[0, end]` in rescaled time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentPath {
    pub traits: Vec<Vec<Breakpoint>>,
    pub end: f64,
}

impl ExponentPath {
    pub(crate) fn new(initial: &[f64]) -> Self {
        Self {
            traits: initial
                .iter()
                .map(|&value| {
                    vec![Breakpoint {
                        t: 0.0,
                        value,
                        slope: 0.0,
                    }]
                })
                .collect(),
            end: 0.0,
        }
    }

    /// Starts a new piece at `t`. A piece that would have zero length
    /// replaces the previous one.
    pub(crate) fn push(&mut self, w: usize, t: f64, value: f64, slope: f64) {
        let list = &mut self.traits[w];
        let last = list.last_mut().expect("paths start with a breakpoint");
        if last.t == t {
            *last = Breakpoint { t, value, slope };
        } else {
            list.push(Breakpoint { t, value, slope });
        }
    }

    pub fn len(&self) -> usize {
        self.traits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traits.is_empty()
    }

    pub fn breakpoints(&self, w: usize) -> &[Breakpoint] {
        &self.traits[w]
    }

    /// Value of trait `w` at time `t`; breakpoint times return the stored value.
    pub fn value(&self, w: usize, t: f64) -> Result<f64> {
        if !(0.0..=self.end).contains(&t) {
            return Err(Error::TimeOutOfRange { t, end: self.end });
        }
        Ok(value_at(&self.traits[w], t))
    }

    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        if !(0.0..=self.end).contains(&t) {
            return Err(Error::TimeOutOfRange { t, end: self.end });
        }
        Ok(self.traits.iter().map(|bp| value_at(bp, t)).collect())
    }

    /// Sorted union of all breakpoint times plus the end time.
    pub fn breakpoint_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.traits.iter().flatten().map(|b| b.t).collect();
        ts.push(self.end);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// CSV with header `t,beta_<trait>...` at every breakpoint, merged with
    /// a uniform grid when `grid_dt` is given.
    pub fn to_csv(&self, names: &[String], grid_dt: Option<f64>) -> String {
        let mut times = self.breakpoint_times();
        if let Some(dt) = grid_dt.filter(|dt| *dt > 0.0) {
            let steps = (self.end / dt).floor() as usize;
            times.extend(
                (0..=steps)
                    .map(|i| i as f64 * dt)
                    .filter(|t| *t <= self.end),
            );
            times.sort_by(f64::total_cmp);
            times.dedup();
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend(names.iter().map(|n| format!("beta_{n}")));
        w.write_record(&header).expect("in-memory csv");
        for t in times {
            let mut row = vec![t.to_string()];
            row.extend(self.traits.iter().map(|bp| value_at(bp, t).to_string()));
            w.write_record(&row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
    }
}

fn value_at(bps: &[Breakpoint], t: f64) -> f64 {
    let i = bps.partition_point(|b| b.t <= t);
    let b = &bps[i.saturating_sub(1)];
    if b.t == t {
        b.value
    } else {
        (b.value + b.slope * (t - b.t)).max(0.0)
    }
}

/// Free-function form of [`ExponentPath::evaluate`].
pub fn evaluate_beta(path: &ExponentPath, t: f64) -> Result<Vec<f64>> {
    path.evaluate(t)
}
