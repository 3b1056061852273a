//! Trait graph, per-trait rates and the mutation kernel.
//!
//! A [`TraitGraphModel`] is immutable once built. Traits are addressed by
//! dense indices fixed by the declared order; names only matter at the I/O
//! boundary.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default half-width of the excluded band around each integer value of alpha.
pub const DEFAULT_ALPHA_GUARD: f64 = 1e-6;

const KERNEL_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TraitGraphModel {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
    birth: Vec<f64>,
    death: Vec<f64>,
    competition: Vec<Vec<f64>>,
    mutation: Vec<Vec<f64>>,
    alpha: f64,
}

/// How mutant offspring pick their trait.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// Uniform over the out-neighbours of each trait.
    Uniform,
    /// Explicit `m(v, w)` entries; unspecified pairs are 0.
    Explicit(Vec<(usize, usize, f64)>),
}

impl TraitGraphModel {
    /// Assembles a model from index-based parts. Structural problems
    /// (shape mismatches, negative or non-finite rates, self loops) are
    /// errors; modelling assumptions are checked by [`validate_model`].
    pub fn from_parts(
        names: Vec<String>,
        edges: Vec<(usize, usize)>,
        birth: Vec<f64>,
        death: Vec<f64>,
        competition: Vec<Vec<f64>>,
        kernel: Kernel,
        alpha: f64,
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Config("at least one trait is required".into()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate trait `{name}`")));
            }
        }
        if birth.len() != n || death.len() != n {
            return Err(Error::Config(
                "birth/death must have one entry per trait".into(),
            ));
        }
        if competition.len() != n || competition.iter().any(|row| row.len() != n) {
            return Err(Error::Config(format!("competition must be {n}x{n}")));
        }
        for (label, v) in [("birth", &birth), ("death", &death)] {
            if let Some(i) = v.iter().position(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Config(format!(
                    "{label} rate of `{}` must be finite and >= 0",
                    names[i]
                )));
            }
        }
        for (i, row) in competition.iter().enumerate() {
            if let Some(j) = row.iter().position(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Config(format!(
                    "competition c[{}][{}] must be finite and >= 0",
                    names[i], names[j]
                )));
            }
        }
        if !alpha.is_finite() {
            return Err(Error::Config("alpha must be finite".into()));
        }

        let mut edges = edges;
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(Error::TraitOutOfRange(a.max(b)));
            }
            if a == b {
                return Err(Error::Config(format!("self loop on `{}`", names[a])));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut out = vec![Vec::new(); n];
        for &(a, b) in &edges {
            out[a].push(b);
        }

        let mut mutation = vec![vec![0.0; n]; n];
        match kernel {
            Kernel::Uniform => {
                for (v, targets) in out.iter().enumerate() {
                    let p = 1.0 / targets.len().max(1) as f64;
                    for &w in targets {
                        mutation[v][w] = p;
                    }
                }
            }
            Kernel::Explicit(entries) => {
                for (v, w, p) in entries {
                    if v >= n || w >= n {
                        return Err(Error::TraitOutOfRange(v.max(w)));
                    }
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::Config(format!(
                            "mutation m[{}][{}] must be finite and >= 0",
                            names[v], names[w]
                        )));
                    }
                    mutation[v][w] = p;
                }
            }
        }

        Ok(Self {
            names,
            index,
            edges,
            out,
            birth,
            death,
            competition,
            mutation,
            alpha,
        })
    }

    pub fn from_config(config: &ModelConfig) -> Result<Self> {
        config.to_model()
    }

    /// Parses a JSON model description. Errors carry the field path and
    /// the line/column of the problem.
    pub fn from_json_str(text: &str) -> Result<Self> {
        ModelConfig::from_json_str(text)?.to_model()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownTrait(name.to_string()))
    }

    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|s| self.index_of(s.as_ref())).collect()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn has_edge(&self, v: usize, w: usize) -> bool {
        self.out[v].contains(&w)
    }

    pub fn birth(&self, v: usize) -> f64 {
        self.birth[v]
    }

    pub fn death(&self, v: usize) -> f64 {
        self.death[v]
    }

    /// Net growth rate `b_v - d_v` of a rare trait without competition.
    pub fn net_growth(&self, v: usize) -> f64 {
        self.birth[v] - self.death[v]
    }

    /// `c_{v,w}`: competitive pressure of one `w` individual on a `v`
    /// individual, per unit of carrying capacity.
    pub fn competition(&self, v: usize, w: usize) -> f64 {
        self.competition[v][w]
    }

    pub fn competition_matrix(&self) -> &[Vec<f64>] {
        &self.competition
    }

    pub fn mutation(&self, v: usize, w: usize) -> f64 {
        self.mutation[v][w]
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Mutation probability per birth, `K^(-1/alpha)`.
    pub fn mutation_probability(&self, k: f64) -> f64 {
        k.powf(-1.0 / self.alpha)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    /// Returns a copy with a single competition coefficient replaced.
    pub fn with_competition(&self, v: usize, w: usize, value: f64) -> Result<Self> {
        if v >= self.len() || w >= self.len() {
            return Err(Error::TraitOutOfRange(v.max(w)));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Config("competition must be finite and >= 0".into()));
        }
        let mut next = self.clone();
        next.competition[v][w] = value;
        Ok(next)
    }

    pub fn with_rates(&self, v: usize, birth: f64, death: f64) -> Result<Self> {
        if v >= self.len() {
            return Err(Error::TraitOutOfRange(v));
        }
        if !(birth.is_finite() && death.is_finite() && birth >= 0.0 && death >= 0.0) {
            return Err(Error::Config("rates must be finite and >= 0".into()));
        }
        let mut next = self.clone();
        next.birth[v] = birth;
        next.death[v] = death;
        Ok(next)
    }

    /// Serializable description of this model (explicit kernel, dense matrix).
    pub fn to_config(&self) -> ModelConfig {
        let name = |i: usize| self.names[i].clone();
        let mut mutation = BTreeMap::new();
        for (v, row) in self.mutation.iter().enumerate() {
            let entries: BTreeMap<String, f64> = row
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(w, p)| (name(w), *p))
                .collect();
            if !entries.is_empty() {
                mutation.insert(name(v), entries);
            }
        }
        ModelConfig {
            traits: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (name(a), name(b)))
                .collect(),
            birth: (0..self.len()).map(|i| (name(i), self.birth[i])).collect(),
            death: (0..self.len()).map(|i| (name(i), self.death[i])).collect(),
            competition: CompetitionSpec::Dense(self.competition.clone()),
            mutation: MutationSpec::Explicit(mutation),
            alpha: self.alpha,
            initial_residents: None,
            valley: None,
        }
    }
}

/// Index-based builder, mostly for tests and fixtures.
#[derive(Clone, Debug)]
pub struct ModelBuilder {
    names: Vec<String>,
    edges: Vec<(String, String)>,
    birth: Vec<f64>,
    death: Vec<f64>,
    competition: Vec<Vec<f64>>,
    explicit_kernel: Option<Vec<(String, String, f64)>>,
    alpha: f64,
}

impl ModelBuilder {
    /// Starts with `b = 1`, `d = 0`, `c = I` and alpha 2.5.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        let n = names.len();
        let mut competition = vec![vec![0.0; n]; n];
        for (i, row) in competition.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            edges: Vec::new(),
            birth: vec![1.0; n],
            death: vec![0.0; n],
            competition,
            explicit_kernel: None,
            alpha: 2.5,
        }
    }

    fn idx(&self, name: &str) -> usize {
        self.names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown trait `{name}` in builder"))
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.into(), to.into()));
        self
    }

    pub fn edges(mut self, pairs: &[(&str, &str)]) -> Self {
        for (a, b) in pairs {
            self.edges.push(((*a).into(), (*b).into()));
        }
        self
    }

    /// Adds both `a -> b` and `b -> a`.
    pub fn undirected(self, a: &str, b: &str) -> Self {
        self.edge(a, b).edge(b, a)
    }

    pub fn rates(mut self, v: &str, birth: f64, death: f64) -> Self {
        let i = self.idx(v);
        self.birth[i] = birth;
        self.death[i] = death;
        self
    }

    pub fn all_rates(mut self, birth: f64, death: f64) -> Self {
        self.birth.iter_mut().for_each(|b| *b = birth);
        self.death.iter_mut().for_each(|d| *d = death);
        self
    }

    pub fn competition(mut self, v: &str, w: &str, c: f64) -> Self {
        let (i, j) = (self.idx(v), self.idx(w));
        self.competition[i][j] = c;
        self
    }

    /// Sets every off-diagonal coefficient to `c`.
    pub fn off_diagonal(mut self, c: f64) -> Self {
        for (i, row) in self.competition.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                if i != j {
                    *x = c;
                }
            }
        }
        self
    }

    pub fn mutation(mut self, v: &str, w: &str, p: f64) -> Self {
        self.explicit_kernel
            .get_or_insert_with(Vec::new)
            .push((v.into(), w.into(), p));
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn build(self) -> Result<TraitGraphModel> {
        let lookup = |name: &str| {
            self.names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::UnknownTrait(name.to_string()))
        };
        let edges = self
            .edges
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>>>()?;
        let kernel = match &self.explicit_kernel {
            None => Kernel::Uniform,
            Some(entries) => Kernel::Explicit(
                entries
                    .iter()
                    .map(|(a, b, p)| Ok((lookup(a)?, lookup(b)?, *p)))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        TraitGraphModel::from_parts(
            self.names.clone(),
            edges,
            self.birth.clone(),
            self.death.clone(),
            self.competition.clone(),
            kernel,
            self.alpha,
        )
    }
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

/// On-disk model description. Field names are part of the file contract:
///
/// ```json
/// {
///   "traits": ["1", "2", "3"],
///   "edges": [["1", "2"], ["2", "3"], ["3", "1"]],
///   "birth": {"1": 1.0, "2": 1.0, "3": 1.0},
///   "death": {"1": 0.0, "2": 0.0, "3": 0.0},
///   "competition": [[1.0, 0.4, 1.5], [1.5, 1.0, 0.4], [0.4, 1.5, 1.0]],
///   "mutation": "uniform",
///   "alpha": 2.5,
///   "initial_residents": ["1"]
/// }
/// ```
///
/// `competition` may also be a sparse map `{"v": {"w": c}}` (missing
/// entries are 0); `mutation` may be a sparse map of `m(v, w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub traits: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    pub birth: BTreeMap<String, f64>,
    pub death: BTreeMap<String, f64>,
    pub competition: CompetitionSpec,
    #[serde(default)]
    pub mutation: MutationSpec,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_residents: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valley: Option<crate::valley::ValleyConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CompetitionSpec {
    Dense(Vec<Vec<f64>>),
    Sparse(BTreeMap<String, BTreeMap<String, f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MutationSpec {
    Keyword(KernelKeyword),
    Explicit(BTreeMap<String, BTreeMap<String, f64>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKeyword {
    Uniform,
}

impl Default for MutationSpec {
    fn default() -> Self {
        MutationSpec::Keyword(KernelKeyword::Uniform)
    }
}

impl ModelConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(Error::from_json)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model config serializes")
    }

    pub fn to_model(&self) -> Result<TraitGraphModel> {
        let n = self.traits.len();
        let pos: HashMap<&str, usize> = self
            .traits
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let lookup = |field: &str, name: &str| {
            pos.get(name)
                .copied()
                .ok_or_else(|| Error::Config(format!("{field}: unknown trait `{name}`")))
        };

        let per_trait = |field: &str, map: &BTreeMap<String, f64>| -> Result<Vec<f64>> {
            for key in map.keys() {
                lookup(field, key)?;
            }
            self.traits
                .iter()
                .map(|t| {
                    map.get(t).copied().ok_or_else(|| {
                        Error::Config(format!("{field}: missing entry for trait `{t}`"))
                    })
                })
                .collect()
        };
        let birth = per_trait("birth", &self.birth)?;
        let death = per_trait("death", &self.death)?;

        let competition = match &self.competition {
            CompetitionSpec::Dense(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!(
                        "competition: expected a {n}x{n} matrix"
                    )));
                }
                rows.clone()
            }
            CompetitionSpec::Sparse(map) => {
                let mut m = vec![vec![0.0; n]; n];
                for (v, row) in map {
                    let i = lookup("competition", v)?;
                    for (w, c) in row {
                        m[i][lookup("competition", w)?] = *c;
                    }
                }
                m
            }
        };

        let edges = self
            .edges
            .iter()
            .map(|(a, b)| Ok((lookup("edges", a)?, lookup("edges", b)?)))
            .collect::<Result<Vec<_>>>()?;

        let kernel = match &self.mutation {
            MutationSpec::Keyword(KernelKeyword::Uniform) => Kernel::Uniform,
            MutationSpec::Explicit(map) => {
                let mut entries = Vec::new();
                for (v, row) in map {
                    let i = lookup("mutation", v)?;
                    for (w, p) in row {
                        entries.push((i, lookup("mutation", w)?, *p));
                    }
                }
                Kernel::Explicit(entries)
            }
        };

        TraitGraphModel::from_parts(
            self.traits.clone(),
            edges,
            birth,
            death,
            competition,
            kernel,
            self.alpha,
        )
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationOptions {
    /// Half-width of the excluded band around every positive integer.
    pub alpha_guard: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            alpha_guard: DEFAULT_ALPHA_GUARD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    SelfCompetition {
        trait_name: String,
        value: f64,
    },
    KernelWithoutEdge {
        from: String,
        to: String,
        value: f64,
    },
    EdgeWithoutKernel {
        from: String,
        to: String,
    },
    KernelNotNormalized {
        trait_name: String,
        sum: f64,
    },
    AlphaNotPositive {
        alpha: f64,
    },
    AlphaIntegerAdjacent {
        alpha: f64,
        integer: u64,
    },
}

impl ValidationIssue {
    /// Issues that make the microscopic process ill-defined (as opposed to
    /// only excluding the log K limit theorem).
    pub fn is_structural(&self) -> bool {
        !matches!(self, ValidationIssue::AlphaIntegerAdjacent { .. })
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SelfCompetition { trait_name, value } => {
                write!(
                    f,
                    "self-competition of `{trait_name}` must be positive (got {value})"
                )
            }
            Self::KernelWithoutEdge { from, to, value } => {
                write!(
                    f,
                    "m({from},{to}) = {value} but ({from},{to}) is not an edge"
                )
            }
            Self::EdgeWithoutKernel { from, to } => {
                write!(f, "edge ({from},{to}) has zero mutation probability")
            }
            Self::KernelNotNormalized { trait_name, sum } => {
                write!(
                    f,
                    "mutation kernel of `{trait_name}` sums to {sum}, expected 1"
                )
            }
            Self::AlphaNotPositive { alpha } => write!(f, "alpha must be positive (got {alpha})"),
            Self::AlphaIntegerAdjacent { alpha, integer } => {
                write!(
                    f,
                    "alpha integer-adjacent: {alpha} is within the guard band of {integer}"
                )
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_structural_issues(&self) -> bool {
        self.issues.iter().any(ValidationIssue::is_structural)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "ok");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

pub fn validate_model(model: &TraitGraphModel) -> ValidationReport {
    validate_model_with(model, &ValidationOptions::default())
}

pub fn validate_model_with(model: &TraitGraphModel, opts: &ValidationOptions) -> ValidationReport {
    let mut issues = Vec::new();
    let n = model.len();
    for v in 0..n {
        let c = model.competition(v, v);
        if c <= 0.0 {
            issues.push(ValidationIssue::SelfCompetition {
                trait_name: model.name(v).to_string(),
                value: c,
            });
        }
    }
    for v in 0..n {
        let mut sum = 0.0;
        for w in 0..n {
            let p = model.mutation(v, w);
            sum += p;
            let edge = model.has_edge(v, w);
            if p > 0.0 && !edge {
                issues.push(ValidationIssue::KernelWithoutEdge {
                    from: model.name(v).to_string(),
                    to: model.name(w).to_string(),
                    value: p,
                });
            } else if edge && p <= 0.0 {
                issues.push(ValidationIssue::EdgeWithoutKernel {
                    from: model.name(v).to_string(),
                    to: model.name(w).to_string(),
                });
            }
        }
        if !model.out_neighbors(v).is_empty() && (sum - 1.0).abs() > KERNEL_SUM_TOL {
            issues.push(ValidationIssue::KernelNotNormalized {
                trait_name: model.name(v).to_string(),
                sum,
            });
        }
    }
    let alpha = model.alpha();
    if alpha <= 0.0 {
        issues.push(ValidationIssue::AlphaNotPositive { alpha });
    } else {
        let nearest = alpha.round();
        if nearest >= 1.0 && (alpha - nearest).abs() <= opts.alpha_guard {
            issues.push(ValidationIssue::AlphaIntegerAdjacent {
                alpha,
                integer: nearest as u64,
            });
        }
    }
    ValidationReport { issues }
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

/// Directed graph distance. `Unreachable` orders after every finite value,
/// so minima ignore it naturally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Distance {
    Finite(u32),
    Unreachable,
}

impl Distance {
    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Unreachable => None,
        }
    }

    pub fn is_reachable(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    /// `d / alpha`, or `None` when unreachable.
    pub fn over(self, alpha: f64) -> Option<f64> {
        self.finite().map(|d| d as f64 / alpha)
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Unreachable => write!(f, "unreachable"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceTable {
    n: usize,
    d: Vec<Distance>,
}

impl DistanceTable {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, from: usize, to: usize) -> Distance {
        self.d[from * self.n + to]
    }

    /// `d(set, target) = min_{v in set} d(v, target)`.
    pub fn from_set(&self, set: &[usize], target: usize) -> Result<Distance> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        self.check(target)?;
        set.iter()
            .map(|&v| self.check(v).map(|_| self.get(v, target)))
            .try_fold(Distance::Unreachable, |acc, d| d.map(|d| acc.min(d)))
    }

    /// `d(source, set) = min_{v in set} d(source, v)`.
    pub fn to_set(&self, source: usize, set: &[usize]) -> Result<Distance> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        self.check(source)?;
        set.iter()
            .map(|&v| self.check(v).map(|_| self.get(source, v)))
            .try_fold(Distance::Unreachable, |acc, d| d.map(|d| acc.min(d)))
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::TraitOutOfRange(v))
        }
    }
}

/// All-pairs directed distances by breadth-first search from every trait.
pub fn distances(model: &TraitGraphModel) -> DistanceTable {
    let n = model.len();
    let mut d = vec![Distance::Unreachable; n * n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        let row = &mut d[s * n..(s + 1) * n];
        row[s] = Distance::Finite(0);
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let Distance::Finite(du) = row[u] else {
                unreachable!()
            };
            for &w in model.out_neighbors(u) {
                if row[w] == Distance::Unreachable {
                    row[w] = Distance::Finite(du + 1);
                    queue.push_back(w);
                }
            }
        }
    }
    DistanceTable { n, d }
}

/// Free-function form of [`DistanceTable::from_set`].
pub fn set_distance(
    table: &DistanceTable,
    source_set: &[usize],
    target: usize,
) -> Result<Distance> {
    table.from_set(source_set, target)
}
