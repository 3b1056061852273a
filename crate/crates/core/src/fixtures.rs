//! Named scenarios with their defining fitness conditions and expected
//! limit behaviour.
//!
//! Parameters are ours; the scenarios only prescribe sign and timing
//! conditions on fitnesses. Every fixture re-checks its conditions when
//! built, so a parameter edit that breaks one is reported by name.
//!
//! Unless stated otherwise, `b - d = 1` and `c_{v,v} = 1`, so `n̄_v = 1` and
//! `f_{w,v} = 1 - c_{w,v}`. Pairs left unspecified get `f = -0.5`.

use serde::Serialize;

use crate::error::Result;
use crate::limit::{run_limit, LimitRun};
use crate::lv::{equilibrium, invasion_fitness};
use crate::model::{ModelBuilder, ModelConfig, TraitGraphModel};
use crate::valley::{ValleyConfig, ValleyTransition};

const DEFAULT_FITNESS: f64 = -0.5;

/// Monomorphic and set fitnesses addressed by trait name.
pub struct FitnessView<'a> {
    pub model: &'a TraitGraphModel,
}

impl FitnessView<'_> {
    fn idx(&self, name: &str) -> usize {
        self.model
            .index_of(name)
            .unwrap_or_else(|_| panic!("unknown trait {name}"))
    }

    /// `f_{w,v}` against the monomorphic equilibrium of `v`.
    pub fn f(&self, w: &str, v: &str) -> f64 {
        self.f_set(w, &[v])
    }

    /// `f_{w,set}` against the equilibrium of `set`.
    pub fn f_set(&self, w: &str, set: &[&str]) -> f64 {
        let set: Vec<usize> = set.iter().map(|s| self.idx(s)).collect();
        let eq = equilibrium(self.model, &set).expect("valid set");
        invasion_fitness(self.model, &eq).get(self.idx(w))
    }

    pub fn alpha(&self) -> f64 {
        self.model.alpha()
    }

    /// `w ≫ v`: `w` invades `v` and fixates.
    pub fn dominates(&self, w: &str, v: &str) -> bool {
        self.f(w, v) > 0.0 && self.f(v, w) < 0.0
    }

    /// `w ≡ v`: mutual invasibility.
    pub fn coexist(&self, w: &str, v: &str) -> bool {
        self.f(w, v) > 0.0 && self.f(v, w) > 0.0
    }

    /// `w ⌢ v`: neither invades the other.
    pub fn exclusive(&self, w: &str, v: &str) -> bool {
        self.f(w, v) < 0.0 && self.f(v, w) < 0.0
    }
}

#[derive(Clone, Copy)]
pub struct Condition {
    pub label: &'static str,
    pub check: fn(&FitnessView) -> bool,
}

impl std::fmt::Debug for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label)
    }
}

/// Closed-form event time.
#[derive(Clone, Copy)]
pub struct SymbolicTime {
    pub label: &'static str,
    pub eval: fn(&FitnessView) -> f64,
}

impl std::fmt::Debug for SymbolicTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FixtureStatus {
    Valid,
    Invalid { condition: String },
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub summary: &'static str,
    pub model: TraitGraphModel,
    pub v0: Vec<usize>,
    pub horizon: f64,
    pub conditions: Vec<Condition>,
    /// Expected resident succession, by trait name.
    pub succession: Vec<Vec<&'static str>>,
    /// Expected first invasion time.
    pub first_invasion: Option<SymbolicTime>,
    pub valley: Option<ValleyConfig>,
    pub status: FixtureStatus,
}

impl Fixture {
    fn new(
        name: &'static str,
        summary: &'static str,
        model: TraitGraphModel,
        v0: &[&str],
        horizon: f64,
        conditions: Vec<Condition>,
        succession: Vec<Vec<&'static str>>,
    ) -> Self {
        let v0 = model.indices_of(v0).expect("fixture residents exist");
        let mut fx = Self {
            name,
            summary,
            model,
            v0,
            horizon,
            conditions,
            succession,
            first_invasion: None,
            valley: None,
            status: FixtureStatus::Valid,
        };
        fx.status = fx.validate();
        fx
    }

    fn with_first_invasion(mut self, label: &'static str, eval: fn(&FitnessView) -> f64) -> Self {
        self.first_invasion = Some(SymbolicTime { label, eval });
        self
    }

    fn with_valley(mut self, valley: ValleyConfig) -> Self {
        self.valley = Some(valley);
        self
    }

    pub fn view(&self) -> FitnessView<'_> {
        FitnessView { model: &self.model }
    }

    /// Every condition with its truth value.
    pub fn check_conditions(&self) -> Vec<(&'static str, bool)> {
        let view = self.view();
        self.conditions
            .iter()
            .map(|c| (c.label, (c.check)(&view)))
            .collect()
    }

    /// First failing condition, if any.
    pub fn validate(&self) -> FixtureStatus {
        match self.check_conditions().into_iter().find(|(_, ok)| !ok) {
            Some((label, _)) => FixtureStatus::Invalid {
                condition: label.to_string(),
            },
            None => FixtureStatus::Valid,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == FixtureStatus::Valid
    }

    /// Same fixture on another model; conditions are re-evaluated.
    pub fn with_model(&self, model: TraitGraphModel) -> Self {
        let mut fx = Self {
            model,
            ..self.clone()
        };
        fx.status = fx.validate();
        fx
    }

    /// Sets `c_{w,v}` so that the monomorphic fitness `f_{w,v}` equals
    /// `fitness`, then re-validates.
    pub fn with_fitness(&self, w: &str, v: &str, fitness: f64) -> Result<Self> {
        let (wi, vi) = (self.model.index_of(w)?, self.model.index_of(v)?);
        let nbar = self.model.net_growth(vi) / self.model.competition(vi, vi);
        let c = (self.model.net_growth(wi) - fitness) / nbar;
        Ok(self.with_model(self.model.with_competition(wi, vi, c)?))
    }

    pub fn run_limit(&self) -> Result<LimitRun> {
        run_limit(&self.model, &self.v0, self.horizon)
    }

    pub fn expected_first_invasion(&self) -> Option<f64> {
        self.first_invasion.map(|s| (s.eval)(&self.view()))
    }

    pub fn succession_indices(&self) -> Vec<Vec<usize>> {
        self.succession
            .iter()
            .map(|set| {
                let mut ix = self.model.indices_of(set).expect("fixture traits exist");
                ix.sort_unstable();
                ix
            })
            .collect()
    }

    /// Self-contained configuration, including the initial residents and
    /// any valley declaration.
    pub fn to_config(&self) -> ModelConfig {
        let mut cfg = self.model.to_config();
        cfg.initial_residents = Some(
            self.v0
                .iter()
                .map(|&i| self.model.name(i).to_string())
                .collect(),
        );
        cfg.valley = self.valley.clone();
        cfg
    }
}

/// Builds a model from a fitness table. `c_{w,v} = (r_w - f_{w,v}) / n̄_v`
/// with `n̄_v = r_v` since `c_{v,v} = 1`.
fn from_fitness(
    names: &[&str],
    edges: &[(&str, &str)],
    alpha: f64,
    (b, d): (f64, f64),
    fitness: &[(&str, &str, f64)],
) -> TraitGraphModel {
    let r = b - d;
    let mut builder = ModelBuilder::new(names)
        .edges(edges)
        .all_rates(b, d)
        .alpha(alpha);
    for &w in names {
        for &v in names {
            if w != v {
                builder = builder.competition(w, v, (r - DEFAULT_FITNESS) / r);
            }
        }
    }
    for &(w, v, f) in fitness {
        builder = builder.competition(w, v, (r - f) / r);
    }
    builder.build().expect("fixture model is valid")
}

fn valley(states: &[&str], transitions: &[(&str, &str, &str, &str)]) -> ValleyConfig {
    ValleyConfig {
        states: states.iter().map(|s| s.to_string()).collect(),
        transitions: transitions
            .iter()
            .map(|&(from, to, intermediate, first_fit)| ValleyTransition {
                from: from.into(),
                to: to.into(),
                intermediate: intermediate.into(),
                first_fit: first_fit.into(),
            })
            .collect(),
        initial: Some(states[0].to_string()),
    }
}

macro_rules! cond {
    ($label:expr, |$v:ident| $body:expr) => {
        Condition {
            label: $label,
            check: |$v: &FitnessView| $body,
        }
    };
}

/// Ancestry through back mutations around a loop.
pub fn loop_back_mutation() -> Fixture {
    let model = from_fitness(
        &["0", "1", "2", "3"],
        &[("0", "1"), ("1", "2"), ("2", "0"), ("0", "3")],
        2.5,
        (1.0, 0.0),
        &[
            ("1", "0", 0.9),
            ("0", "1", -0.3),
            ("2", "1", 0.5),
            ("1", "2", -0.5),
            ("3", "0", -0.1),
            ("0", "3", -0.5),
            ("3", "1", -0.6),
            ("1", "3", -0.5),
            ("0", "2", 0.1),
            ("2", "0", 0.8),
            ("3", "2", 0.2),
            ("2", "3", -0.5),
        ],
    );
    Fixture::new(
        "loop",
        "resident 3 descends from the loop 0-1-2 rather than directly from 0",
        model,
        &["0"],
        12.0,
        vec![
            cond!("alpha > 2", |v| v.alpha() > 2.0),
            cond!("0 << 1", |v| v.dominates("1", "0")),
            cond!("1 << 2", |v| v.dominates("2", "1")),
            cond!("3 ⌢ 0", |v| v.exclusive("3", "0")),
            cond!("3 ⌢ 1", |v| v.exclusive("3", "1")),
            cond!("0 ≡ 2", |v| v.coexist("0", "2")),
            cond!("3 > {0,2}", |v| v.f_set("3", &["0", "2"]) > 0.0),
            cond!("2 < 3", |v| v.f("2", "3") < 0.0),
            cond!("f_{2,0} < 2 f_{1,0}", |v| v.f("2", "0")
                < 2.0 * v.f("1", "0")),
            cond!("f_{0,1} >= f_{3,1}", |v| v.f("0", "1") >= v.f("3", "1")),
            cond!("f_{2,0} <= f_{1,0}", |v| v.f("2", "0") <= v.f("1", "0")),
            cond!("(1 - 1/alpha)/f_{0,1} < -(1 - 4/alpha)/f_{2,1}", |v| {
                let a = v.alpha();
                (1.0 - 1.0 / a) / v.f("0", "1") < -(1.0 - 4.0 / a) / v.f("2", "1")
            }),
        ],
        vec![vec!["0"], vec!["1"], vec!["2"], vec!["0", "2"], vec!["3"]],
    )
    .with_first_invasion("(1/alpha)/f_{1,0}", |v| (1.0 / v.alpha()) / v.f("1", "0"))
}

const SQUARE: [&str; 4] = ["00", "01", "10", "11"];
const SQUARE_EDGES: [(&str, &str); 4] = [("00", "01"), ("00", "10"), ("01", "11"), ("10", "11")];

/// More resident traits than mutation steps.
pub fn longer_path() -> Fixture {
    let model = from_fitness(
        &SQUARE,
        &SQUARE_EDGES,
        2.5,
        (1.0, 0.0),
        &[
            ("01", "00", 0.5),
            ("00", "01", -0.5),
            ("10", "01", 0.6),
            ("01", "10", -0.5),
            ("11", "10", 0.5),
            ("10", "11", -0.5),
            ("11", "01", 0.3),
            ("01", "11", -0.5),
            ("10", "00", -0.2),
            ("00", "10", -0.2),
            ("11", "00", -0.2),
            ("00", "11", -0.2),
        ],
    );
    Fixture::new(
        "longer-path",
        "00 -> 01 -> 10 -> 11 although 11 is two mutations from 00",
        model,
        &["00"],
        4.0,
        vec![
            cond!("alpha > 2", |v| v.alpha() > 2.0),
            cond!("00 << 01", |v| v.dominates("01", "00")),
            cond!("01 << 10", |v| v.dominates("10", "01")),
            cond!("10 << 11", |v| v.dominates("11", "10")),
            cond!("01 << 11", |v| v.dominates("11", "01")),
            cond!("10 ⌢ 00", |v| v.exclusive("10", "00")),
            cond!("11 ⌢ 00", |v| v.exclusive("11", "00")),
            cond!("f_{11,00} < f_{01,00}", |v| v.f("11", "00")
                < v.f("01", "00")),
            cond!("f_{10,01} > f_{11,01}", |v| v.f("10", "01")
                > v.f("11", "01")),
        ],
        vec![vec!["00"], vec!["01"], vec!["10"], vec!["11"]],
    )
    .with_first_invasion("(1/alpha)/f_{01,00}", |v| {
        (1.0 / v.alpha()) / v.f("01", "00")
    })
}

/// Fewer resident traits than mutation steps.
pub fn shorter_path() -> Fixture {
    let model = from_fitness(
        &SQUARE,
        &SQUARE_EDGES,
        2.5,
        (1.0, 0.0),
        &[
            ("01", "00", 0.2),
            ("11", "00", 0.6),
            ("00", "11", -0.5),
            ("10", "00", -0.3),
            ("01", "11", -0.5),
            ("10", "11", -0.5),
        ],
    );
    Fixture::new(
        "shorter-path",
        "00 -> 11 directly, skipping the fit intermediate 01",
        model,
        &["00"],
        4.0,
        vec![
            cond!("alpha > 2", |v| v.alpha() > 2.0),
            cond!("01 > 00", |v| v.f("01", "00") > 0.0),
            cond!("11 >> 00", |v| v.dominates("11", "00")),
            cond!("10 < 00", |v| v.f("10", "00") < 0.0),
            cond!("01 < 11", |v| v.f("01", "11") < 0.0),
            cond!("10 < 11", |v| v.f("10", "11") < 0.0),
            cond!("2/f_{11,00} < 1/f_{01,00}", |v| 2.0 / v.f("11", "00")
                < 1.0 / v.f("01", "00")),
        ],
        vec![vec!["00"], vec!["11"]],
    )
    .with_first_invasion("(2/alpha)/f_{11,00}", |v| {
        (2.0 / v.alpha()) / v.f("11", "00")
    })
}

const ANARCHY: [&str; 4] = ["1", "2a", "2b", "3"];
const ANARCHY_FITNESS: [(&str, &str, f64); 12] = [
    ("2a", "1", 0.5),
    ("1", "2a", -0.5),
    ("3", "1", 0.3),
    ("2b", "1", 0.2),
    ("1", "2b", -0.5),
    ("3", "2a", 0.4),
    ("2a", "3", -0.5),
    ("2b", "2a", 0.6),
    ("2a", "2b", -0.5),
    ("3", "2b", 0.2),
    ("1", "3", -0.5),
    ("2b", "3", -0.5),
];

fn anarchy_conditions() -> Vec<Condition> {
    vec![
        cond!("alpha > 3", |v| v.alpha() > 3.0),
        cond!("1 << 2a", |v| v.dominates("2a", "1")),
        cond!("2a << 3", |v| v.dominates("3", "2a")),
        cond!("2a << 2b", |v| v.dominates("2b", "2a")),
        cond!("1 < 2b", |v| v.f("1", "2b") < 0.0),
        cond!("1 < 3", |v| v.f("1", "3") < 0.0),
        cond!("2b < 3", |v| v.f("2b", "3") < 0.0),
        cond!("f_{2a,1} >= f_{3,1}", |v| v.f("2a", "1") >= v.f("3", "1")),
        cond!("f_{2a,1} >= f_{2b,1}", |v| v.f("2a", "1") >= v.f("2b", "1")),
        cond!("1/f_{2b,2a} < 1/f_{3,2a}", |v| 1.0 / v.f("2b", "2a")
            < 1.0 / v.f("3", "2a")),
        cond!("1/f_{3,2a} < 2/f_{2b,2a}", |v| 1.0 / v.f("3", "2a")
            < 2.0 / v.f("2b", "2a")),
        cond!("0 < f_{3,2b}", |v| v.f("3", "2b") > 0.0),
        cond!("f_{3,2b} < f_{3,2a}", |v| v.f("3", "2b") < v.f("3", "2a")),
    ]
}

/// Edge set without the shortcut `2a -> 2b`: 1 -> 2a -> 3.
pub fn price_of_anarchy_e1() -> Fixture {
    let model = from_fitness(
        &ANARCHY,
        &[("1", "2a"), ("2a", "3"), ("2b", "3"), ("3", "2b")],
        3.5,
        (1.0, 0.0),
        &ANARCHY_FITNESS,
    );
    Fixture::new(
        "anarchy-e1",
        "without the extra edge 3 fixates right after 2a",
        model,
        &["1"],
        4.0,
        anarchy_conditions(),
        vec![vec!["1"], vec!["2a"], vec!["3"]],
    )
}

/// Adding `2a -> 2b` delays the arrival of 3: 1 -> 2a -> 2b -> 3.
pub fn price_of_anarchy() -> Fixture {
    let model = from_fitness(
        &ANARCHY,
        &[
            ("1", "2a"),
            ("2a", "3"),
            ("2b", "3"),
            ("2a", "2b"),
            ("3", "2b"),
        ],
        3.5,
        (1.0, 0.0),
        &ANARCHY_FITNESS,
    );
    Fixture::new(
        "anarchy",
        "an extra mutation path makes the fittest trait appear later",
        model,
        &["1"],
        4.0,
        anarchy_conditions(),
        vec![vec!["1"], vec!["2a"], vec!["2b"], vec!["3"]],
    )
}

/// Residents cycle against the direction of mutation, with shrinking gaps.
pub fn counter_cycle() -> Fixture {
    let model = ModelBuilder::new(&["1", "2", "3"])
        .edges(&[("1", "2"), ("2", "3"), ("3", "1")])
        .competition("1", "2", 0.4)
        .competition("2", "3", 0.4)
        .competition("3", "1", 0.4)
        .competition("2", "1", 1.5)
        .competition("3", "2", 1.5)
        .competition("1", "3", 1.5)
        .alpha(2.5)
        .build()
        .expect("cycle model is valid");
    Fixture::new(
        "cycle",
        "residents 1 -> 3 -> 2 -> 1 while mutations run 1 -> 2 -> 3 -> 1",
        model,
        &["1"],
        2.7,
        vec![
            cond!("alpha > 2", |v| v.alpha() > 2.0),
            cond!("1 >> 2", |v| v.dominates("1", "2")),
            cond!("2 >> 3", |v| v.dominates("2", "3")),
            cond!("3 >> 1", |v| v.dominates("3", "1")),
            cond!("f_{2,3} > -f_{1,3}", |v| v.f("2", "3") > -v.f("1", "3")),
            cond!("f_{1,2} > -f_{3,2}", |v| v.f("1", "2") > -v.f("3", "2")),
            cond!("f_{3,1} > -f_{2,1}", |v| v.f("3", "1") > -v.f("2", "1")),
        ],
        vec![vec!["1"], vec!["3"], vec!["2"], vec!["1"]],
    )
    .with_first_invasion("(2/alpha)/f_{3,1}", |v| (2.0 / v.alpha()) / v.f("3", "1"))
}

/// Jump to a trait beyond the mutation cut-off.
pub fn large_jump() -> Fixture {
    let model = from_fitness(
        &["0", "1", "2", "3", "4"],
        &[("0", "1"), ("1", "2"), ("2", "3"), ("3", "4")],
        3.5,
        (1.0, 0.0),
        &[
            ("1", "0", -0.5),
            ("2", "0", -0.5),
            ("3", "0", 0.3),
            ("4", "0", 0.9),
        ],
    );
    Fixture::new(
        "large-jump",
        "0 -> 4 although trait 4 is absent at time 0",
        model,
        &["0"],
        3.0,
        vec![
            cond!("3 < alpha < 4", |v| v.alpha() > 3.0 && v.alpha() < 4.0),
            cond!("1 < 0", |v| v.f("1", "0") < 0.0),
            cond!("2 < 0", |v| v.f("2", "0") < 0.0),
            cond!("3 > 0", |v| v.f("3", "0") > 0.0),
            cond!("4 > 0", |v| v.f("4", "0") > 0.0),
            cond!("0,1,2,3 < 4", |v| ["0", "1", "2", "3"]
                .iter()
                .all(|w| v.f(w, "4") < 0.0)),
            cond!(
                "1/f_{4,0} + (-1+4/alpha)/f_{3,0} < (3/alpha)/f_{3,0}",
                |v| {
                    let a = v.alpha();
                    1.0 / v.f("4", "0") + (-1.0 + 4.0 / a) / v.f("3", "0")
                        < (3.0 / a) / v.f("3", "0")
                }
            ),
        ],
        vec![vec!["0"], vec!["4"]],
    )
    .with_first_invasion("(-1+4/alpha)/f_{3,0} + 1/f_{4,0}", |v| {
        (-1.0 + 4.0 / v.alpha()) / v.f("3", "0") + 1.0 / v.f("4", "0")
    })
}

/// Jump across two traits beyond the cut-off.
pub fn large_jump_five() -> Fixture {
    let model = from_fitness(
        &["0", "1", "2", "3", "4", "5"],
        &[("0", "1"), ("1", "2"), ("2", "3"), ("3", "4"), ("4", "5")],
        3.5,
        (1.0, 0.0),
        &[
            ("1", "0", -0.5),
            ("2", "0", -0.5),
            ("3", "0", 0.3),
            ("4", "0", 0.6),
            ("5", "0", 1.0),
        ],
    );
    Fixture::new(
        "large-jump-5",
        "0 -> 5 with two intermediate arrivals",
        model,
        &["0"],
        3.0,
        vec![
            cond!("3 < alpha < 4", |v| v.alpha() > 3.0 && v.alpha() < 4.0),
            cond!("1,2 < 0", |v| v.f("1", "0") < 0.0 && v.f("2", "0") < 0.0),
            cond!("3,4,5 > 0", |v| ["3", "4", "5"]
                .iter()
                .all(|w| v.f(w, "0") > 0.0)),
            cond!("0,1,2,3,4 < 5", |v| ["0", "1", "2", "3", "4"]
                .iter()
                .all(|w| v.f(w, "5") < 0.0)),
            cond!("f_{3,0} < f_{4,0} < f_{5,0}", |v| {
                v.f("3", "0") < v.f("4", "0") && v.f("4", "0") < v.f("5", "0")
            }),
            cond!(
                "(-1+4/alpha)/f_{3,0} + (1/alpha)/f_{4,0} + 1/f_{5,0} < (3/alpha)/f_{3,0}",
                |v| {
                    let a = v.alpha();
                    (-1.0 + 4.0 / a) / v.f("3", "0")
                        + (1.0 / a) / v.f("4", "0")
                        + 1.0 / v.f("5", "0")
                        < (3.0 / a) / v.f("3", "0")
                }
            ),
        ],
        vec![vec!["0"], vec!["5"]],
    )
    .with_first_invasion(
        "(-1+4/alpha)/f_{3,0} + (1/alpha)/f_{4,0} + 1/f_{5,0}",
        |v| {
            let a = v.alpha();
            (-1.0 + 4.0 / a) / v.f("3", "0") + (1.0 / a) / v.f("4", "0") + 1.0 / v.f("5", "0")
        },
    )
}

/// Two-state effective walk across a valley through `i`.
pub fn valley_two_sites() -> Fixture {
    let model = from_fitness(
        &["0", "i", "1a", "1b"],
        &[
            ("0", "i"),
            ("i", "0"),
            ("i", "1a"),
            ("i", "1b"),
            ("1b", "i"),
            ("1a", "1b"),
        ],
        0.5,
        (1.0, 0.0),
        &[
            ("1a", "0", 0.4),
            ("0", "1a", -0.5),
            ("0", "1b", 0.3),
            ("1b", "0", -0.4),
            ("1b", "1a", 0.5),
            ("1a", "1b", -0.5),
            ("i", "0", -0.5),
            ("i", "1a", -0.5),
            ("i", "1b", -0.8),
        ],
    );
    Fixture::new(
        "valley-2",
        "effective jumps between 0 and 1b across the unfit trait i",
        model,
        &["0"],
        1.0,
        vec![
            cond!("0 < alpha < 1", |v| v.alpha() > 0.0 && v.alpha() < 1.0),
            cond!("1a >> 0", |v| v.dominates("1a", "0")),
            cond!("0 >> 1b", |v| v.dominates("0", "1b")),
            cond!("1b >> 1a", |v| v.dominates("1b", "1a")),
            cond!("i < 0", |v| v.f("i", "0") < 0.0),
            cond!("i < 1a", |v| v.f("i", "1a") < 0.0),
            cond!("i < 1b", |v| v.f("i", "1b") < 0.0),
        ],
        vec![vec!["0"]],
    )
    .with_valley(valley(
        &["0", "1b"],
        &[("0", "1b", "i", "1a"), ("1b", "0", "i", "0")],
    ))
}

/// Three-state effective walk with valleys through `i`, `j`, `k`.
pub fn valley_three_sites() -> Fixture {
    let model = from_fitness(
        &["0", "i", "j", "k", "1a", "1b", "2a", "2b"],
        &[
            ("0", "i"),
            ("0", "j"),
            ("i", "1a"),
            ("i", "0"),
            ("j", "2a"),
            ("j", "0"),
            ("k", "2a"),
            ("k", "1a"),
            ("1a", "1b"),
            ("2a", "2b"),
            ("1b", "i"),
            ("1b", "k"),
            ("2b", "j"),
            ("2b", "k"),
        ],
        0.5,
        (2.0, 1.0),
        &[
            ("1a", "0", 0.4),
            ("0", "1a", -0.5),
            ("2a", "0", 0.3),
            ("0", "2a", -0.5),
            ("2a", "1b", 0.35),
            ("1b", "2a", -0.5),
            ("1b", "1a", 0.5),
            ("1a", "1b", -0.5),
            ("2b", "2a", 0.5),
            ("2a", "2b", -0.5),
            ("1a", "2b", 0.45),
            ("2b", "1a", -0.5),
            ("0", "1b", 0.3),
            ("1b", "0", -0.4),
            ("0", "2b", 0.25),
            ("2b", "0", -0.4),
            ("1b", "2b", 0.2),
            ("2b", "1b", -0.4),
            ("i", "0", -0.5),
            ("i", "1b", -0.6),
            ("j", "0", -0.7),
            ("j", "2b", -0.5),
            ("k", "1b", -0.5),
            ("k", "2b", -0.8),
        ],
    );
    Fixture::new(
        "valley-3",
        "effective walk on {0, 1b, 2b} through three valleys",
        model,
        &["0"],
        1.0,
        vec![
            cond!("0 < alpha < 1", |v| v.alpha() > 0.0 && v.alpha() < 1.0),
            cond!("1a >> 0", |v| v.dominates("1a", "0")),
            cond!("2a >> 0", |v| v.dominates("2a", "0")),
            cond!("2a >> 1b", |v| v.dominates("2a", "1b")),
            cond!("1b >> 1a", |v| v.dominates("1b", "1a")),
            cond!("2b >> 2a", |v| v.dominates("2b", "2a")),
            cond!("1a >> 2b", |v| v.dominates("1a", "2b")),
            cond!("0 >> 1b", |v| v.dominates("0", "1b")),
            cond!("0 >> 2b", |v| v.dominates("0", "2b")),
            cond!("1b >> 2b", |v| v.dominates("1b", "2b")),
            cond!("i < 0", |v| v.f("i", "0") < 0.0),
            cond!("j < 0", |v| v.f("j", "0") < 0.0),
            cond!("k < 1a", |v| v.f("k", "1a") < 0.0),
            cond!("k < 1b", |v| v.f("k", "1b") < 0.0),
            cond!("i < 1a", |v| v.f("i", "1a") < 0.0),
            cond!("i < 1b", |v| v.f("i", "1b") < 0.0),
            cond!("j < 2a", |v| v.f("j", "2a") < 0.0),
            cond!("j < 2b", |v| v.f("j", "2b") < 0.0),
            cond!("k < 2a", |v| v.f("k", "2a") < 0.0),
            cond!("k < 2b", |v| v.f("k", "2b") < 0.0),
        ],
        vec![vec!["0"]],
    )
    .with_valley(valley(
        &["0", "1b", "2b"],
        &[
            ("0", "1b", "i", "1a"),
            ("1b", "0", "i", "0"),
            ("0", "2b", "j", "2a"),
            ("2b", "0", "j", "0"),
            ("1b", "2b", "k", "2a"),
            ("2b", "1b", "k", "1a"),
        ],
    ))
}

/// One fixture per scenario, conditions already evaluated.
pub fn fixture_registry() -> Vec<Fixture> {
    vec![
        loop_back_mutation(),
        longer_path(),
        shorter_path(),
        price_of_anarchy(),
        counter_cycle(),
        large_jump(),
        large_jump_five(),
        valley_two_sites(),
        valley_three_sites(),
    ]
}

pub fn fixture_by_name(name: &str) -> Option<Fixture> {
    fixture_registry()
        .into_iter()
        .chain(std::iter::once(price_of_anarchy_e1()))
        .find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_valid() {
        let reg = fixture_registry();
        assert_eq!(reg.len(), 9);
        for fx in &reg {
            assert_eq!(
                fx.status,
                FixtureStatus::Valid,
                "{}: {:?}",
                fx.name,
                fx.check_conditions()
            );
        }
        assert!(price_of_anarchy_e1().is_valid());
    }

    #[test]
    fn shorter_path_predicate_holds() {
        let fx = shorter_path();
        let (_, ok) = fx
            .check_conditions()
            .into_iter()
            .find(|(l, _)| *l == "2/f_{11,00} < 1/f_{01,00}")
            .unwrap();
        assert!(ok);
    }

    #[test]
    fn perturbation_names_the_broken_condition() {
        let fx = shorter_path().with_fitness("01", "00", 0.4).unwrap();
        assert_eq!(
            fx.status,
            FixtureStatus::Invalid {
                condition: "2/f_{11,00} < 1/f_{01,00}".into()
            }
        );
    }

    #[test]
    fn fitness_table_is_reproduced() {
        let fx = valley_three_sites();
        let v = fx.view();
        assert!((v.f("1a", "2b") - 0.45).abs() < 1e-12);
        assert!((v.f("k", "2b") + 0.8).abs() < 1e-12);
        assert!((v.f("1b", "i") - DEFAULT_FITNESS).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip_keeps_residents_and_valley() {
        let fx = valley_two_sites();
        let cfg = fx.to_config();
        let back = ModelConfig::from_json_str(&cfg.to_json_pretty()).unwrap();
        assert_eq!(back.initial_residents, Some(vec!["0".to_string()]));
        assert_eq!(back.valley, fx.valley);
        assert_eq!(back.to_model().unwrap(), fx.model);
    }
}

#[cfg(test)]
mod limit_runs {
    use super::*;

    #[test]
    fn successions_match() {
        for fx in fixture_registry()
            .into_iter()
            .chain([price_of_anarchy_e1()])
        {
            let run = fx.run_limit().unwrap();
            let names: Vec<Vec<&str>> = run
                .log
                .succession()
                .iter()
                .map(|s| s.iter().map(|&i| fx.model.name(i)).collect())
                .collect();
            assert_eq!(names, fx.succession, "{}", fx.name);
            assert_eq!(run.log.succession(), fx.succession_indices(), "{}", fx.name);
            if let Some(s1) = fx.expected_first_invasion() {
                assert!(
                    (run.log.invasion_times()[0] - s1).abs() < 1e-9,
                    "{}",
                    fx.name
                );
            }
        }
    }
}
