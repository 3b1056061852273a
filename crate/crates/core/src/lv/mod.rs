//! The mutation-free Lotka-Volterra system on a trait subset `v`:
//!
//! `dn_w/dt = n_w (b_w - d_w - sum_{u in v} c_{w,u} n_u)`, `w in v`.
//!
//! Equilibria are found by enumerating candidate supports; stability is a
//! local Hurwitz test combined with a multi-start integration heuristic for
//! global attractivity.

pub mod ode;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TraitGraphModel;

/// Largest input set handled by exhaustive support enumeration.
pub const MAX_ENUMERATED: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    UniqueGloballyAttractive,
    NotUnique,
    NotAttractive,
    NoPositiveEquilibrium,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LvOptions {
    /// Candidate supports whose submatrix has a larger 1-norm condition
    /// number are skipped.
    pub max_condition: f64,
    pub starts: usize,
    pub rtol: f64,
    /// Every start must end within this max-norm distance of the equilibrium.
    pub landing_tol: f64,
    /// Upper bound on the integration horizon of each start.
    pub max_horizon: f64,
    pub seed: u64,
    /// Skip the multi-start integration (local test only).
    pub local_only: bool,
}

impl Default for LvOptions {
    fn default() -> Self {
        Self {
            max_condition: 1e12,
            starts: 32,
            rtol: 1e-9,
            landing_tol: 1e-6,
            max_horizon: 1e6,
            seed: 0x1f0e_5eed,
            local_only: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LvEquilibrium {
    pub input_set: Vec<usize>,
    /// `n̄_w` for every trait of the model; zero off the support.
    pub values: Vec<f64>,
    pub support: Vec<usize>,
    pub classification: Stability,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl LvEquilibrium {
    pub fn is_uga(&self) -> bool {
        self.classification == Stability::UniqueGloballyAttractive
    }

    /// Max-norm residual of `r_S = C_SS n_S` on the support.
    pub fn residual(&self, model: &TraitGraphModel) -> f64 {
        self.support
            .iter()
            .map(|&w| {
                let pressure: f64 = self
                    .support
                    .iter()
                    .map(|&u| model.competition(w, u) * self.values[u])
                    .sum();
                (model.net_growth(w) - pressure).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Invasion fitness of every trait against a fixed equilibrium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessTable {
    pub values: Vec<f64>,
}

impl FitnessTable {
    pub fn get(&self, w: usize) -> f64 {
        self.values[w]
    }
}

fn sorted_set(set: &[usize], n: usize) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&bad) = s.iter().find(|&&v| v >= n) {
        return Err(Error::TraitOutOfRange(bad));
    }
    Ok(s)
}

/// `n̄ = (b - d)/c_vv ∨ 0` for a single trait.
pub fn monomorphic_equilibrium(model: &TraitGraphModel, v: usize) -> Result<LvEquilibrium> {
    if v >= model.len() {
        return Err(Error::TraitOutOfRange(v));
    }
    let mut values = vec![0.0; model.len()];
    let r = model.net_growth(v);
    let c = model.competition(v, v);
    let (support, classification, diagnostics) = if r > 0.0 && c > 0.0 {
        values[v] = r / c;
        (vec![v], Stability::UniqueGloballyAttractive, vec![])
    } else if r > 0.0 {
        (
            vec![],
            Stability::NoPositiveEquilibrium,
            vec!["unbounded growth: no self-competition".into()],
        )
    } else {
        (vec![], Stability::NoPositiveEquilibrium, vec![])
    };
    Ok(LvEquilibrium {
        input_set: vec![v],
        values,
        support,
        classification,
        diagnostics,
    })
}

pub fn equilibrium(model: &TraitGraphModel, subset: &[usize]) -> Result<LvEquilibrium> {
    equilibrium_with(model, subset, &LvOptions::default())
}

pub fn equilibrium_with(
    model: &TraitGraphModel,
    subset: &[usize],
    opts: &LvOptions,
) -> Result<LvEquilibrium> {
    let input = sorted_set(subset, model.len())?;
    if input.len() == 1 {
        return monomorphic_equilibrium(model, input[0]);
    }
    let m = input.len();
    let mut diagnostics = Vec::new();
    let blank = |classification, diagnostics| LvEquilibrium {
        input_set: input.clone(),
        values: vec![0.0; model.len()],
        support: vec![],
        classification,
        diagnostics,
    };
    if m > MAX_ENUMERATED {
        diagnostics.push(format!(
            "{m} traits exceed the enumeration limit of {MAX_ENUMERATED}"
        ));
        return Ok(blank(Stability::Undetermined, diagnostics));
    }

    let r: Vec<f64> = input.iter().map(|&w| model.net_growth(w)).collect();
    let c = DMatrix::from_fn(m, m, |i, j| model.competition(input[i], input[j]));

    // Saturated feasible points, largest supports first.
    let mut saturated: Vec<(u64, Vec<f64>)> = Vec::new();
    let mut masks: Vec<u64> = (1..(1u64 << m)).collect();
    masks.sort_by_key(|mask| (std::cmp::Reverse(mask.count_ones()), *mask));
    for mask in masks {
        let idx: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let Some(sol) = solve_support(&c, &r, &idx, opts.max_condition, &mut diagnostics, &input)
        else {
            continue;
        };
        if sol.iter().any(|&x| x <= 0.0) {
            continue;
        }
        let mut full = vec![0.0; m];
        for (k, &i) in idx.iter().enumerate() {
            full[i] = sol[k];
        }
        let saturated_here = (0..m).filter(|i| mask >> i & 1 == 0).all(|i| {
            let f = r[i] - (0..m).map(|j| c[(i, j)] * full[j]).sum::<f64>();
            f <= 0.0
        });
        if saturated_here {
            saturated.push((mask, full));
        }
    }
    let empty_saturated = r.iter().all(|&x| x <= 0.0);

    let (mask, local) = match (saturated.len(), empty_saturated) {
        (0, _) => {
            return Ok(blank(Stability::NoPositiveEquilibrium, diagnostics));
        }
        (1, false) => saturated.pop().unwrap(),
        (k, _) => {
            diagnostics.push(format!(
                "{} saturated equilibria",
                k + empty_saturated as usize
            ));
            let (mask, local) = saturated.swap_remove(0);
            return Ok(assemble(
                model,
                &input,
                mask,
                &local,
                Stability::NotUnique,
                diagnostics,
            ));
        }
    };

    let Some(decay) = hurwitz_margin(&c, &r, &local, mask) else {
        diagnostics.push("Jacobian is not Hurwitz at the saturated equilibrium".into());
        return Ok(assemble(
            model,
            &input,
            mask,
            &local,
            Stability::NotAttractive,
            diagnostics,
        ));
    };
    if opts.local_only {
        return Ok(assemble(
            model,
            &input,
            mask,
            &local,
            Stability::UniqueGloballyAttractive,
            diagnostics,
        ));
    }
    let classification = match multistart(&c, &r, &local, decay, opts) {
        Ok(()) => Stability::UniqueGloballyAttractive,
        Err(msg) => {
            diagnostics.push(msg);
            Stability::Undetermined
        }
    };
    Ok(assemble(
        model,
        &input,
        mask,
        &local,
        classification,
        diagnostics,
    ))
}

fn assemble(
    model: &TraitGraphModel,
    input: &[usize],
    mask: u64,
    local: &[f64],
    classification: Stability,
    diagnostics: Vec<String>,
) -> LvEquilibrium {
    let mut values = vec![0.0; model.len()];
    let mut support = Vec::new();
    for (i, &w) in input.iter().enumerate() {
        if mask >> i & 1 == 1 {
            values[w] = local[i];
            support.push(w);
        }
    }
    LvEquilibrium {
        input_set: input.to_vec(),
        values,
        support,
        classification,
        diagnostics,
    }
}

/// Solves `C_SS n = r_S` with partial pivoting and one refinement step.
fn solve_support(
    c: &DMatrix<f64>,
    r: &[f64],
    idx: &[usize],
    max_condition: f64,
    diagnostics: &mut Vec<String>,
    input: &[usize],
) -> Option<Vec<f64>> {
    let k = idx.len();
    let a = DMatrix::from_fn(k, k, |i, j| c[(idx[i], idx[j])]);
    let rhs = DVector::from_iterator(k, idx.iter().map(|&i| r[i]));
    let lu = a.clone().lu();
    let inv = lu.try_inverse();
    let cond = inv.as_ref().map(|inv| norm1(&a) * norm1(inv));
    match cond {
        Some(cond) if cond.is_finite() && cond <= max_condition => {}
        other => {
            let names: Vec<usize> = idx.iter().map(|&i| input[i]).collect();
            diagnostics.push(format!(
                "support {names:?} skipped: condition number {}",
                other.map_or("inf".to_string(), |c| format!("{c:e}"))
            ));
            return None;
        }
    }
    let mut x = lu.solve(&rhs)?;
    let resid = &rhs - &a * &x;
    if let Some(dx) = lu.solve(&resid) {
        x += dx;
    }
    Some(x.iter().copied().collect())
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Smallest decay rate of the linearisation at a saturated point, or
/// `None` if some eigenvalue has nonnegative real part.
fn hurwitz_margin(c: &DMatrix<f64>, r: &[f64], n: &[f64], mask: u64) -> Option<f64> {
    let m = r.len();
    let on: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
    let mut margin = f64::INFINITY;
    // Excluded traits: the Jacobian is block triangular and their
    // eigenvalues are their invasion fitnesses.
    for i in (0..m).filter(|i| mask >> i & 1 == 0) {
        let f = r[i] - (0..m).map(|j| c[(i, j)] * n[j]).sum::<f64>();
        if f >= 0.0 {
            return None;
        }
        margin = margin.min(-f);
    }
    let k = on.len();
    let jac = DMatrix::from_fn(k, k, |a, b| -n[on[a]] * c[(on[a], on[b])]);
    for ev in jac.complex_eigenvalues().iter() {
        if !(ev.re < 0.0) {
            return None;
        }
        margin = margin.min(-ev.re);
    }
    Some(margin)
}

/// Latin-hypercube starts in the positive orthant, each integrated until
/// it settles or the horizon runs out.
fn multistart(
    c: &DMatrix<f64>,
    r: &[f64],
    target: &[f64],
    decay: f64,
    opts: &LvOptions,
) -> Result<(), String> {
    let m = r.len();
    let scale = (0..m)
        .map(|i| r[i].max(0.0) / c[(i, i)])
        .chain(target.iter().copied())
        .fold(1e-3, f64::max)
        * 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_starts = opts.starts.max(1);
    let strata: Vec<Vec<usize>> = (0..m)
        .map(|_| {
            let mut p: Vec<usize> = (0..n_starts).collect();
            for i in (1..n_starts).rev() {
                p.swap(i, rng.random_range(0..=i));
            }
            p
        })
        .collect();
    let rhs = |y: &[f64], dy: &mut [f64]| {
        for i in 0..m {
            let mut pressure = 0.0;
            for j in 0..m {
                pressure += c[(i, j)] * y[j];
            }
            dy[i] = y[i] * (r[i] - pressure);
        }
    };
    // Enough time for the slowest linear mode to contract by e^-40 after
    // the transient.
    let horizon = (1e3 + 40.0 / decay).min(opts.max_horizon);
    let chunk = (10.0 / decay).clamp(5.0, 1e3);
    let tol = ode::Tolerances {
        rtol: opts.rtol,
        atol: 1e-14,
        max_steps: 2_000_000,
    };
    for s in 0..n_starts {
        let mut y: Vec<f64> = (0..m)
            .map(|i| {
                let u: f64 = rng.random();
                scale * (strata[i][s] as f64 + u.max(1e-3)) / n_starts as f64
            })
            .collect();
        let mut t = 0.0;
        let mut h = 0.0;
        let mut landed = false;
        while t < horizon {
            let t1 = (t + chunk).min(horizon);
            ode::integrate(&rhs, &mut y, t, t1, &mut h, &tol)
                .map_err(|e| format!("start {s}: {e}"))?;
            t = t1;
            let dist = max_dist(&y, target);
            if dist < opts.landing_tol * 1e-2 {
                landed = true;
                break;
            }
        }
        let dist = max_dist(&y, target);
        if !landed && dist >= opts.landing_tol {
            return Err(format!(
                "start {s} ended {dist:e} away from the equilibrium at t = {t}"
            ));
        }
    }
    Ok(())
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `f_{w,v} = b_w - d_w - sum_u c_{w,u} n̄_u(v)` for every trait `w`.
pub fn invasion_fitness(model: &TraitGraphModel, eq: &LvEquilibrium) -> FitnessTable {
    let values = (0..model.len())
        .map(|w| {
            let pressure: f64 = eq
                .support
                .iter()
                .map(|&u| model.competition(w, u) * eq.values[u])
                .sum();
            model.net_growth(w) - pressure
        })
        .collect();
    FitnessTable { values }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GenericityReport {
    pub tolerance: f64,
    pub flags: Vec<GenericityFlag>,
    /// Subsets whose equilibrium is not uniquely attractive.
    pub skipped: Vec<(Vec<usize>, Stability)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericityFlag {
    pub subset: Vec<usize>,
    pub trait_index: usize,
    pub fitness: f64,
}

impl GenericityReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Default relative tolerance for [`genericity_check`].
pub const GENERICITY_TOL: f64 = 1e-9;

/// Flags near-zero invasion fitnesses of non-support traits. The threshold
/// is `rel_tol` times the largest birth or death rate of the model.
pub fn genericity_check(
    model: &TraitGraphModel,
    subsets: &[Vec<usize>],
    rel_tol: f64,
) -> Result<GenericityReport> {
    let max_rate = (0..model.len())
        .map(|v| model.birth(v).max(model.death(v)))
        .fold(0.0, f64::max);
    let tolerance = rel_tol * max_rate.max(f64::MIN_POSITIVE);
    let mut report = GenericityReport {
        tolerance,
        ..Default::default()
    };
    let opts = LvOptions {
        local_only: true,
        ..Default::default()
    };
    for subset in subsets {
        let eq = equilibrium_with(model, subset, &opts)?;
        if eq.classification != Stability::UniqueGloballyAttractive {
            report
                .skipped
                .push((eq.input_set.clone(), eq.classification));
            continue;
        }
        let fit = invasion_fitness(model, &eq);
        for w in 0..model.len() {
            if !eq.support.contains(&w) && fit.get(w).abs() < tolerance {
                report.flags.push(GenericityFlag {
                    subset: eq.input_set.clone(),
                    trait_index: w,
                    fitness: fit.get(w),
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;

    fn two(c12: f64, c21: f64) -> TraitGraphModel {
        ModelBuilder::new(&["1", "2"])
            .competition("1", "2", c12)
            .competition("2", "1", c21)
            .build()
            .unwrap()
    }

    #[test]
    fn monomorphic_cases() {
        let m = ModelBuilder::new(&["v"])
            .rates("v", 2.0, 1.0)
            .build()
            .unwrap();
        let eq = monomorphic_equilibrium(&m, 0).unwrap();
        assert_eq!(eq.values, vec![1.0]);
        assert!(eq.is_uga());

        let m = ModelBuilder::new(&["v"])
            .rates("v", 1.0, 2.0)
            .build()
            .unwrap();
        let eq = monomorphic_equilibrium(&m, 0).unwrap();
        assert_eq!(eq.values, vec![0.0]);
        assert_eq!(eq.classification, Stability::NoPositiveEquilibrium);
        assert!(eq.support.is_empty());

        let m = ModelBuilder::new(&["v"])
            .rates("v", 3.0, 1.0)
            .competition("v", "v", 4.0)
            .build()
            .unwrap();
        assert_eq!(monomorphic_equilibrium(&m, 0).unwrap().values, vec![0.5]);
    }

    #[test]
    fn coexistence_matches_closed_form() {
        let m = two(0.5, 0.5);
        let eq = equilibrium(&m, &[0, 1]).unwrap();
        assert_eq!(eq.classification, Stability::UniqueGloballyAttractive);
        assert_eq!(eq.support, vec![0, 1]);
        // n̄_i = (r_i c_jj - r_j c_ij)/(c_ii c_jj - c_ij c_ji)
        let expect = (1.0 - 0.5) / (1.0 - 0.25);
        for v in &eq.values {
            assert!((v - expect).abs() < 1e-14);
        }
        assert!(eq.residual(&m) <= 1e-10);
    }

    #[test]
    fn competitive_exclusion() {
        // f_{2,1} = 1 - 0.4 > 0, f_{1,2} = 1 - 1.5 < 0
        let m = two(1.5, 0.4);
        let eq = equilibrium(&m, &[0, 1]).unwrap();
        assert_eq!(eq.classification, Stability::UniqueGloballyAttractive);
        assert_eq!(eq.support, vec![1]);
        assert_eq!(eq.values[0], 0.0);
    }

    #[test]
    fn bistability_is_not_unique() {
        let m = two(1.5, 1.5);
        let eq = equilibrium(&m, &[0, 1]).unwrap();
        assert_eq!(eq.classification, Stability::NotUnique);
    }

    #[test]
    fn singleton_equals_monomorphic() {
        let m = two(0.3, 0.7).with_rates(1, 3.0, 0.5).unwrap();
        assert_eq!(
            equilibrium(&m, &[1]).unwrap(),
            monomorphic_equilibrium(&m, 1).unwrap()
        );
    }

    #[test]
    fn empty_subset_is_an_error() {
        assert!(matches!(
            equilibrium(&two(1.0, 1.0), &[]),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn nothing_grows() {
        let m = two(0.5, 0.5)
            .with_rates(0, 1.0, 2.0)
            .unwrap()
            .with_rates(1, 0.5, 0.5)
            .unwrap();
        let eq = equilibrium(&m, &[0, 1]).unwrap();
        assert_eq!(eq.classification, Stability::NoPositiveEquilibrium);
        assert!(eq.support.is_empty());
    }

    #[test]
    fn singular_submatrix_is_skipped_with_diagnostic() {
        // Identical rows: the coexistence system is singular.
        let m = two(1.0, 1.0);
        let eq = equilibrium(&m, &[0, 1]).unwrap();
        assert!(eq
            .diagnostics
            .iter()
            .any(|d| d.contains("condition number")));
    }

    #[test]
    fn rock_paper_scissors_is_not_attractive() {
        // May-Leonard with a + b > 2: the interior point is a saddle focus.
        let m = ModelBuilder::new(&["a", "b", "c"])
            .competition("a", "b", 0.5)
            .competition("b", "c", 0.5)
            .competition("c", "a", 0.5)
            .competition("a", "c", 2.0)
            .competition("b", "a", 2.0)
            .competition("c", "b", 2.0)
            .build()
            .unwrap();
        let eq = equilibrium(&m, &[0, 1, 2]).unwrap();
        assert_ne!(eq.classification, Stability::UniqueGloballyAttractive);
    }

    #[test]
    fn three_species_coexistence_is_attractive() {
        let m = ModelBuilder::new(&["a", "b", "c"])
            .off_diagonal(0.2)
            .build()
            .unwrap();
        let eq = equilibrium(&m, &[0, 1, 2]).unwrap();
        assert_eq!(eq.classification, Stability::UniqueGloballyAttractive);
        assert_eq!(eq.support, vec![0, 1, 2]);
        assert!(eq.residual(&m) <= 1e-10);
        let fit = invasion_fitness(&m, &eq);
        assert!(fit.values.iter().all(|f| f.abs() < 1e-12));
    }

    #[test]
    fn cycle_fitnesses() {
        let m = ModelBuilder::new(&["1", "2", "3"])
            .edges(&[("1", "2"), ("2", "3"), ("3", "1")])
            .competition("1", "2", 0.4)
            .competition("2", "3", 0.4)
            .competition("3", "1", 0.4)
            .competition("2", "1", 1.5)
            .competition("3", "2", 1.5)
            .competition("1", "3", 1.5)
            .alpha(2.5)
            .build()
            .unwrap();
        let eq = equilibrium(&m, &[0]).unwrap();
        let f = invasion_fitness(&m, &eq);
        assert!((f.get(2) - 0.6).abs() < 1e-12);
        assert!((f.get(1) + 0.5).abs() < 1e-12);
        let eq3 = equilibrium(&m, &[2]).unwrap();
        let f3 = invasion_fitness(&m, &eq3);
        assert!(f3.get(1) > -f3.get(0));

        let singletons: Vec<Vec<usize>> = (0..3).map(|v| vec![v]).collect();
        assert!(genericity_check(&m, &singletons, GENERICITY_TOL)
            .unwrap()
            .is_clean());
        assert!(genericity_check(&m, &[], GENERICITY_TOL)
            .unwrap()
            .flags
            .is_empty());
    }

    #[test]
    fn engineered_zero_fitness_is_flagged() {
        // c_{w,v} = (b_w - d_w)/n̄_v makes f_{w,v} vanish.
        let m = two(1.0, 1.0);
        let report = genericity_check(&m, &[vec![0]], GENERICITY_TOL).unwrap();
        assert_eq!(report.flags.len(), 1);
        assert_eq!(report.flags[0].trait_index, 1);
    }
}
