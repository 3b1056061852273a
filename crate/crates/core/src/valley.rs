//! Fitness-valley crossing on the `K^(-1+2/alpha)` time scale.
//!
//! When every resident is separated from the next fit trait by a single
//! unfit intermediate, the macroscopic state performs a Markov jump
//! process between effective states. Each rate is assembled from the
//! resident equilibrium, the mutation weight into the valley, the
//! excursion functional `lambda(rho)` of the intermediate's subcritical
//! lineage, and the survival probability `f/b` of the first fit mutant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lv::monomorphic_equilibrium;
use crate::model::TraitGraphModel;

pub const LAMBDA_TOL: f64 = 1e-12;

/// `rho_{i,j} = b_i / (b_i + d_i + c_{ij} n̄_j)`, the probability that the
/// next event of an `i` individual in a `j` population is a birth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoValue {
    pub value: f64,
    /// `rho < 1/2`, equivalently `f_{i,j} < 0`.
    pub admissible: bool,
}

pub fn rho(model: &TraitGraphModel, intermediate: usize, resident: usize) -> Result<RhoValue> {
    let eq = monomorphic_equilibrium(model, resident)?;
    let nbar = eq.values[resident];
    if nbar <= 0.0 {
        return Err(Error::NoResidentEquilibrium(
            model.name(resident).to_string(),
        ));
    }
    if intermediate >= model.len() {
        return Err(Error::TraitOutOfRange(intermediate));
    }
    let b = model.birth(intermediate);
    let value =
        b / (b + model.death(intermediate) + model.competition(intermediate, resident) * nbar);
    Ok(RhoValue {
        value,
        admissible: value < 0.5,
    })
}

/// `lambda(rho) = sum_{k>=1} (2k)!/((k-1)!(k+1)!) rho^k (1-rho)^(k+1)`.
///
/// Terms follow the ratio `2(k+1)(2k+1)/(k(k+2)) rho(1-rho)`, which never
/// exceeds `q = 4 rho (1-rho)`, so after term `t_k` the remainder is at
/// most `t_k q/(1-q)`. Summation stops once that bound drops below
/// `tol` times the partial sum.
pub fn lambda(rho: f64, tol: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&rho) {
        return Err(Error::LambdaDivergent(rho));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let x = rho * (1.0 - rho);
    let q = 4.0 * x;
    let tail_factor = q / (1.0 - q);
    let mut term = rho * (1.0 - rho) * (1.0 - rho);
    let mut sum = 0.0;
    let mut k = 1.0f64;
    loop {
        sum += term;
        if term * tail_factor < tol * sum {
            return Ok(sum);
        }
        term *= 2.0 * (k + 1.0) * (2.0 * k + 1.0) / (k * (k + 2.0)) * x;
        k += 1.0;
    }
}

/// Partial sum of the first `terms` terms (used to audit the stopping rule).
pub fn lambda_partial(rho: f64, terms: usize) -> f64 {
    let x = rho * (1.0 - rho);
    let mut term = rho * (1.0 - rho) * (1.0 - rho);
    let mut sum = 0.0;
    for k in 1..=terms {
        sum += term;
        let k = k as f64;
        term *= 2.0 * (k + 1.0) * (2.0 * k + 1.0) / (k * (k + 2.0)) * x;
    }
    sum
}

/// Number of terms [`lambda`] sums before stopping.
pub fn lambda_terms(rho: f64, tol: f64) -> usize {
    let x = rho * (1.0 - rho);
    let tail_factor = 4.0 * x / (1.0 - 4.0 * x);
    let mut term = rho * (1.0 - rho) * (1.0 - rho);
    let mut sum = 0.0;
    let mut k = 1usize;
    loop {
        sum += term;
        if term * tail_factor < tol * sum || term == 0.0 {
            return k;
        }
        let kf = k as f64;
        term *= 2.0 * (kf + 1.0) * (2.0 * kf + 1.0) / (kf * (kf + 2.0)) * x;
        k += 1;
    }
}

/// One effective transition `from -> to` through the unfit `intermediate`;
/// `first_fit` is the first trait beyond the valley that can invade `from`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValleyTransition {
    pub from: String,
    pub to: String,
    pub intermediate: String,
    pub first_fit: String,
}

/// Valley description as it appears under `"valley"` in a model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValleyConfig {
    pub states: Vec<String>,
    pub transitions: Vec<ValleyTransition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateIngredients {
    pub nbar_from: f64,
    pub birth_from: f64,
    pub mutation_weight: f64,
    pub fitness_intermediate: f64,
    pub rho: f64,
    pub lambda: f64,
    pub fitness_first_fit: f64,
    pub birth_first_fit: f64,
}

impl RateIngredients {
    /// `n̄_x b_x m(x,i) lambda(rho_{i,x}) f_{first,x} / (|f_{i,x}| b_first)`.
    pub fn product(&self) -> f64 {
        self.nbar_from
            * self.birth_from
            * self.mutation_weight
            * self.lambda
            * self.fitness_first_fit
            / (self.fitness_intermediate.abs() * self.birth_first_fit)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValleyRate {
    pub from: String,
    pub to: String,
    pub intermediate: String,
    pub first_fit: String,
    pub rate: f64,
    pub ingredients: Option<RateIngredients>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValleyRates {
    pub states: Vec<String>,
    /// `matrix[x][y]` is the rate from state `x` to state `y`.
    pub matrix: Vec<Vec<f64>>,
    pub rates: Vec<ValleyRate>,
}

impl ValleyRates {
    pub fn is_valid(&self) -> bool {
        self.rates.iter().all(|r| r.issues.is_empty())
    }

    pub fn exit_rate(&self, x: usize) -> f64 {
        self.matrix[x].iter().sum()
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownTrait(name.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("rates serialize")
    }

    /// Builds a chain directly from a rate matrix (no ingredients).
    pub fn from_matrix(states: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = states.len();
        if n == 0 || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!(
                "rate matrix must be {n}x{n} with n >= 1"
            )));
        }
        if matrix.iter().flatten().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Config("rates must be finite and >= 0".into()));
        }
        Ok(Self {
            states,
            matrix,
            rates: Vec::new(),
        })
    }
}

/// Fitness of `w` against the monomorphic equilibrium of `x`.
fn mono_fitness(model: &TraitGraphModel, w: usize, x: usize, nbar_x: f64) -> f64 {
    model.net_growth(w) - model.competition(w, x) * nbar_x
}

pub fn crossing_rates(model: &TraitGraphModel, spec: &ValleyConfig) -> Result<ValleyRates> {
    let states = spec.states.clone();
    let n = states.len();
    if n == 0 {
        return Err(Error::EmptySet);
    }
    for s in &states {
        model.index_of(s)?;
    }
    let mut matrix = vec![vec![0.0; n]; n];
    let mut rates = Vec::with_capacity(spec.transitions.len());
    for tr in &spec.transitions {
        let sx = states.iter().position(|s| *s == tr.from).ok_or_else(|| {
            Error::Config(format!("transition source `{}` is not a state", tr.from))
        })?;
        let sy = states.iter().position(|s| *s == tr.to).ok_or_else(|| {
            Error::Config(format!("transition target `{}` is not a state", tr.to))
        })?;
        let x = model.index_of(&tr.from)?;
        let i = model.index_of(&tr.intermediate)?;
        let first = model.index_of(&tr.first_fit)?;
        let mut issues = Vec::new();

        let nbar = monomorphic_equilibrium(model, x)?.values[x];
        if nbar <= 0.0 {
            issues.push(format!("`{}` has no positive equilibrium", tr.from));
            rates.push(ValleyRate {
                from: tr.from.clone(),
                to: tr.to.clone(),
                intermediate: tr.intermediate.clone(),
                first_fit: tr.first_fit.clone(),
                rate: 0.0,
                ingredients: None,
                issues,
            });
            continue;
        }
        let rho_v = rho(model, i, x)?;
        let f_i = mono_fitness(model, i, x, nbar);
        let f_first = mono_fitness(model, first, x, nbar);
        let m = model.mutation(x, i);
        if m <= 0.0 {
            issues.push(format!(
                "no mutation from `{}` to `{}`",
                tr.from, tr.intermediate
            ));
        }
        if !model.has_edge(i, first) {
            issues.push(format!(
                "`{}` is not a mutational neighbour of `{}`",
                tr.first_fit, tr.intermediate
            ));
        }
        let lam = if rho_v.admissible {
            lambda(rho_v.value, LAMBDA_TOL)?
        } else {
            issues.push(format!(
                "intermediate `{}` is not unfit against `{}` (rho = {})",
                tr.intermediate, tr.from, rho_v.value
            ));
            f64::NAN
        };
        let tol = crate::lv::GENERICITY_TOL
            * model
                .birth(first)
                .max(model.death(first))
                .max(f64::MIN_POSITIVE);
        if f_first.abs() < tol {
            issues.push(format!(
                "genericity: f({},{}) vanishes",
                tr.first_fit, tr.from
            ));
        } else if f_first < 0.0 {
            issues.push(format!(
                "first fit trait `{}` cannot invade `{}`",
                tr.first_fit, tr.from
            ));
        }
        if model.birth(first) <= 0.0 {
            issues.push(format!("`{}` has zero birth rate", tr.first_fit));
        }
        let ingredients = RateIngredients {
            nbar_from: nbar,
            birth_from: model.birth(x),
            mutation_weight: m,
            fitness_intermediate: f_i,
            rho: rho_v.value,
            lambda: lam,
            fitness_first_fit: f_first,
            birth_first_fit: model.birth(first),
        };
        let product = ingredients.product();
        let rate = if product.is_finite() {
            product.max(0.0)
        } else {
            0.0
        };
        matrix[sx][sy] += rate;
        rates.push(ValleyRate {
            from: tr.from.clone(),
            to: tr.to.clone(),
            intermediate: tr.intermediate.clone(),
            first_fit: tr.first_fit.clone(),
            rate,
            ingredients: Some(ingredients),
            issues,
        });
    }
    Ok(ValleyRates {
        states,
        matrix,
        rates,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtmcPath {
    /// Jump times, starting with 0.
    pub times: Vec<f64>,
    /// State entered at each time.
    pub states: Vec<usize>,
    pub horizon: f64,
    /// Reached a state with no outgoing rate.
    pub absorbed: bool,
    /// Total time spent in each state.
    pub holding: Vec<f64>,
    /// `transitions[x][y]`: number of observed `x -> y` jumps.
    pub transitions: Vec<Vec<u64>>,
}

impl CtmcPath {
    pub fn occupancy(&self) -> Vec<f64> {
        self.holding.iter().map(|h| h / self.horizon).collect()
    }

    /// Empirical `x -> y` rate with its standard error `sqrt(n)/holding`.
    pub fn empirical_rate(&self, x: usize, y: usize) -> (f64, f64) {
        let n = self.transitions[x][y] as f64;
        let h = self.holding[x];
        if h <= 0.0 {
            return (f64::NAN, f64::NAN);
        }
        (n / h, n.sqrt() / h)
    }

    pub fn state_at(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        self.states[i.saturating_sub(1)]
    }

    pub fn to_csv(&self, names: &[String]) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "state"]).expect("in-memory csv");
        for (t, s) in self.times.iter().zip(&self.states) {
            w.write_record([t.to_string(), names[*s].clone()])
                .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
    }
}

/// Exact sample of the effective chain on `[0, horizon]`.
pub fn simulate_ctmc(
    rates: &ValleyRates,
    initial: usize,
    horizon: f64,
    seed: u64,
) -> Result<CtmcPath> {
    let n = rates.states.len();
    if initial >= n {
        return Err(Error::TraitOutOfRange(initial));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config("horizon must be positive and finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = CtmcPath {
        times: vec![0.0],
        states: vec![initial],
        horizon,
        absorbed: false,
        holding: vec![0.0; n],
        transitions: vec![vec![0; n]; n],
    };
    let mut t = 0.0;
    let mut x = initial;
    loop {
        let total = rates.exit_rate(x);
        if total <= 0.0 {
            path.absorbed = true;
            path.holding[x] += horizon - t;
            return Ok(path);
        }
        let wait = Exp::new(total).expect("positive rate").sample(&mut rng);
        if t + wait >= horizon {
            path.holding[x] += horizon - t;
            return Ok(path);
        }
        t += wait;
        path.holding[x] += wait;
        let mut u = rng.random::<f64>() * total;
        let mut y = n - 1;
        for (j, &r) in rates.matrix[x].iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            if u < r {
                y = j;
                break;
            }
            u -= r;
            y = j;
        }
        path.transitions[x][y] += 1;
        path.times.push(t);
        path.states.push(y);
        x = y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;

    #[test]
    fn rho_direct_substitution() {
        // b_i = 1, d_i = 1, c_{ij} n̄_j = 1
        let m = ModelBuilder::new(&["j", "i"])
            .rates("j", 2.0, 1.0)
            .rates("i", 1.0, 1.0)
            .competition("i", "j", 1.0)
            .build()
            .unwrap();
        let r = rho(&m, 1, 0).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.admissible);
    }

    #[test]
    fn rho_at_zero_fitness_is_flagged() {
        // b_i = d_i + c_{ij} n̄_j
        let m = ModelBuilder::new(&["j", "i"])
            .rates("j", 2.0, 1.0)
            .rates("i", 1.5, 0.5)
            .competition("i", "j", 1.0)
            .build()
            .unwrap();
        let r = rho(&m, 1, 0).unwrap();
        assert_eq!(r.value, 0.5);
        assert!(!r.admissible);
        assert!(matches!(
            lambda(r.value, LAMBDA_TOL),
            Err(Error::LambdaDivergent(_))
        ));
    }

    #[test]
    fn rho_needs_a_resident() {
        let m = ModelBuilder::new(&["j", "i"])
            .rates("j", 1.0, 1.0)
            .build()
            .unwrap();
        assert!(matches!(
            rho(&m, 1, 0),
            Err(Error::NoResidentEquilibrium(_))
        ));
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda(0.0, LAMBDA_TOL).unwrap(), 0.0);
        assert!((lambda(0.25, LAMBDA_TOL).unwrap() - 0.5).abs() < 1e-11);
        assert!(lambda(0.6, LAMBDA_TOL).is_err());
        assert!(lambda(-0.1, LAMBDA_TOL).is_err());
    }

    #[test]
    fn stopping_rule_bounds_the_tail() {
        for rho in [0.05, 0.2, 0.35, 0.45, 0.49] {
            let tol = 1e-12;
            let k = lambda_terms(rho, tol);
            let truncated = lambda(rho, tol).unwrap();
            let longer = lambda_partial(rho, k + 50);
            assert!(
                (truncated - longer).abs() < 2.0 * tol * truncated,
                "rho = {rho}"
            );
        }
    }

    #[test]
    fn single_state_chain_is_constant() {
        let rates = ValleyRates::from_matrix(vec!["a".into()], vec![vec![0.0]]).unwrap();
        let path = simulate_ctmc(&rates, 0, 10.0, 1).unwrap();
        assert!(path.absorbed);
        assert_eq!(path.states, vec![0]);
        assert_eq!(path.occupancy(), vec![1.0]);
    }

    #[test]
    fn ctmc_csv() {
        let rates = ValleyRates::from_matrix(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let path = simulate_ctmc(&rates, 0, 5.0, 3).unwrap();
        let csv = path.to_csv(&rates.states);
        assert!(csv.starts_with("t,state\n0,a\n"));
        assert_eq!(csv.lines().count(), path.times.len() + 1);
    }
}
