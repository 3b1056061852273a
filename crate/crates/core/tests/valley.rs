use evoflight::fixtures::{valley_three_sites, valley_two_sites};
use evoflight::valley::{crossing_rates, lambda, rho, simulate_ctmc, LAMBDA_TOL};
use evoflight::{invasion_fitness, monomorphic_equilibrium};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

fn exact_partial(rho: BigRational, terms: u32) -> f64 {
    let one = BigRational::one();
    let q = &one - &rho;
    let mut sum = BigRational::zero();
    let mut catalan = BigInt::one();
    let mut rho_k = one.clone();
    let mut q_k = q.clone();
    for k in 1..=terms {
        // Cat_k = Cat_{k-1} * 2(2k - 1)/(k + 1)
        catalan = catalan * BigInt::from(2 * (2 * k - 1)) / BigInt::from(k + 1);
        rho_k = rho_k * &rho;
        q_k = q_k * &q;
        sum += BigRational::from_integer(BigInt::from(k) * &catalan) * &rho_k * &q_k;
    }
    sum.to_f64().unwrap()
}

#[test]
fn lambda_matches_exact_rational_partial_sums() {
    for tenths in 1..=4 {
        let r = BigRational::new(BigInt::from(tenths), BigInt::from(10));
        let exact = exact_partial(r, 200);
        let rho = tenths as f64 / 10.0;
        let series = lambda(rho, LAMBDA_TOL).unwrap();
        // 200 terms leave a tail that is only visible at 0.4.
        let tail_bound = if tenths == 4 { 1e-3 } else { 1e-12 };
        assert!(
            (series - exact).abs() < tail_bound,
            "{rho}: {series} vs {exact}"
        );
        assert!((series - rho / (1.0 - 2.0 * rho)).abs() < 1e-10);
    }
    assert_eq!(lambda(0.0, LAMBDA_TOL).unwrap(), 0.0);
}

#[test]
fn two_site_rates_are_the_displayed_products() {
    let fx = valley_two_sites();
    let m = &fx.model;
    let idx = |s: &str| m.index_of(s).unwrap();
    let rates = crossing_rates(m, fx.valley.as_ref().unwrap()).unwrap();
    assert!(rates.is_valid());
    for (x, first, to) in [("0", "1a", "1b"), ("1b", "0", "0")] {
        let (x, i, first) = (idx(x), idx("i"), idx(first));
        let eq = monomorphic_equilibrium(m, x).unwrap();
        let f = invasion_fitness(m, &eq);
        let nbar = eq.values[x];
        let rho_ix = m.birth(i) / (m.birth(i) + m.death(i) + m.competition(i, x) * nbar);
        let expected =
            nbar * m.birth(x) / f.get(i).abs() * lambda(rho_ix, LAMBDA_TOL).unwrap() * f.get(first)
                / m.birth(first);
        let from = rates.state_index(m.name(x)).unwrap();
        let to = rates.state_index(to).unwrap();
        assert!(
            (rates.matrix[from][to] - expected).abs() < 1e-12 * expected,
            "{} -> {to}",
            m.name(x)
        );
        assert!((rho(m, i, x).unwrap().value - rho_ix).abs() < 1e-15);
    }
}

#[test]
fn three_site_rates_carry_the_half_kernel_weight() {
    let fx = valley_three_sites();
    let m = &fx.model;
    let rates = crossing_rates(m, fx.valley.as_ref().unwrap()).unwrap();
    assert!(rates.is_valid());
    assert_eq!(rates.rates.len(), 6);
    for r in &rates.rates {
        let ing = r.ingredients.as_ref().unwrap();
        assert_eq!(ing.mutation_weight, 0.5, "{} -> {}", r.from, r.to);
        let x = m.index_of(&r.from).unwrap();
        let i = m.index_of(&r.intermediate).unwrap();
        let first = m.index_of(&r.first_fit).unwrap();
        let eq = monomorphic_equilibrium(m, x).unwrap();
        let f = invasion_fitness(m, &eq);
        let expected = eq.values[x] * m.birth(x) / 2.0 / f.get(i).abs()
            * lambda(rho(m, i, x).unwrap().value, LAMBDA_TOL).unwrap()
            * f.get(first)
            / m.birth(first);
        assert!((r.rate - expected).abs() < 1e-12 * expected);
        assert!(r.rate > 0.0);
    }
}

#[test]
fn ctmc_exit_rates_are_recovered() {
    let fx = valley_three_sites();
    let rates = crossing_rates(&fx.model, fx.valley.as_ref().unwrap()).unwrap();
    let slowest = (0..3)
        .map(|x| rates.exit_rate(x))
        .fold(f64::INFINITY, f64::min);
    let path = simulate_ctmc(&rates, 0, 40_000.0 / slowest, 17).unwrap();
    for x in 0..3 {
        for y in 0..3 {
            if x == y {
                continue;
            }
            let (est, se) = path.empirical_rate(x, y);
            assert!(
                (est - rates.matrix[x][y]).abs() <= 3.0 * se,
                "{x}->{y}: {est} vs {} (se {se})",
                rates.matrix[x][y]
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Scaling `b` of the first fit trait at fixed net growth scales the
    /// rate by the inverse factor.
    #[test]
    fn rate_is_inverse_in_first_fit_birth(factor in 1.1f64..4.0, which in 0usize..6) {
        let fx = valley_three_sites();
        let spec = fx.valley.clone().unwrap();
        let base = crossing_rates(&fx.model, &spec).unwrap();
        let t = &spec.transitions[which];
        let first = fx.model.index_of(&t.first_fit).unwrap();
        let (b, d) = (fx.model.birth(first), fx.model.death(first));
        let scaled = fx.model.with_rates(first, factor * b, d + (factor - 1.0) * b).unwrap();
        let after = crossing_rates(&scaled, &spec).unwrap();
        let (r0, r1) = (base.rates[which].rate, after.rates[which].rate);
        prop_assert!((r1 * factor - r0).abs() < 1e-12 * r0);
    }
}
