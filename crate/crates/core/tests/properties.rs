mod support;

use evoflight::model::Kernel;
use evoflight::{
    distances, equilibrium, invasion_fitness, monomorphic_equilibrium, run_limit, EventKind,
    LimitRun, Stability, TraitGraphModel,
};
use proptest::prelude::*;
use support::floyd_warshall;

#[derive(Clone, Debug)]
struct Params {
    n: usize,
    edges: Vec<bool>,
    birth: Vec<f64>,
    death_frac: Vec<f64>,
    comp: Vec<f64>,
    alpha: f64,
}

fn params(max_n: usize) -> impl Strategy<Value = Params> {
    (2..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<bool>(), n * n),
            prop::collection::vec(0.5f64..2.0, n),
            prop::collection::vec(0.0f64..0.4, n),
            prop::collection::vec(0.2f64..1.8, n * n),
            (1.1f64..3.9).prop_filter("alpha away from integers", |a| (a - a.round()).abs() > 0.05),
        )
            .prop_map(|(n, edges, birth, death_frac, comp, alpha)| Params {
                n,
                edges,
                birth,
                death_frac,
                comp,
                alpha,
            })
    })
}

fn build(p: &Params) -> TraitGraphModel {
    let n = p.n;
    let names = (0..n).map(|i| format!("t{i}")).collect();
    let edges = (0..n)
        .flat_map(|u| (0..n).map(move |w| (u, w)))
        .filter(|&(u, w)| u != w && p.edges[u * n + w])
        .collect();
    let death = p
        .birth
        .iter()
        .zip(&p.death_frac)
        .map(|(b, f)| b * f)
        .collect();
    let comp = (0..n)
        .map(|v| {
            (0..n)
                .map(|w| {
                    if v == w {
                        0.5 + p.comp[v * n + w]
                    } else {
                        p.comp[v * n + w]
                    }
                })
                .collect()
        })
        .collect();
    TraitGraphModel::from_parts(
        names,
        edges,
        p.birth.clone(),
        death,
        comp,
        Kernel::Uniform,
        p.alpha,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bfs_matches_floyd_warshall(p in params(7)) {
        let m = build(&p);
        let bfs = distances(&m);
        let fw = floyd_warshall(&m);
        for u in 0..m.len() {
            for w in 0..m.len() {
                prop_assert_eq!(bfs.get(u, w).finite(), fw[u][w]);
            }
        }
    }

    #[test]
    fn distance_triangle_inequality(p in params(7)) {
        let m = build(&p);
        let d = distances(&m);
        let n = m.len();
        for u in 0..n {
            for x in 0..n {
                for w in 0..n {
                    if let (Some(a), Some(b)) = (d.get(u, x).finite(), d.get(x, w).finite()) {
                        let direct = d.get(u, w).finite();
                        prop_assert!(direct.is_some_and(|c| c <= a + b));
                    }
                }
            }
        }
    }

    #[test]
    fn resident_fitness_is_zero(p in params(6)) {
        let m = build(&p);
        for v in 0..m.len() {
            let eq = monomorphic_equilibrium(&m, v).unwrap();
            prop_assert!(invasion_fitness(&m, &eq).get(v).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_species_classification(
        r in (0.5f64..2.0, 0.5f64..2.0),
        diag in (0.5f64..2.0, 0.5f64..2.0),
        off in (0.0f64..2.5, 0.0f64..2.5),
    ) {
        let (r1, r2) = r;
        let (c11, c22) = diag;
        let (c12, c21) = off;
        let f21 = r2 - c21 * r1 / c11;
        let f12 = r1 - c12 * r2 / c22;
        prop_assume!(f21.abs() > 1e-3 && f12.abs() > 1e-3);
        let m = TraitGraphModel::from_parts(
            vec!["a".into(), "b".into()],
            vec![],
            vec![r1, r2],
            vec![0.0, 0.0],
            vec![vec![c11, c12], vec![c21, c22]],
            Kernel::Uniform,
            2.5,
        ).unwrap();
        let eq = equilibrium(&m, &[0, 1]).unwrap();
        match (f21 > 0.0, f12 > 0.0) {
            (true, true) => {
                prop_assert_eq!(eq.classification, Stability::UniqueGloballyAttractive);
                prop_assert_eq!(&eq.support, &vec![0, 1]);
                prop_assert!(eq.residual(&m) < 1e-10);
            }
            (true, false) => {
                prop_assert_eq!(eq.classification, Stability::UniqueGloballyAttractive);
                prop_assert_eq!(&eq.support, &vec![1]);
            }
            (false, true) => {
                prop_assert_eq!(eq.classification, Stability::UniqueGloballyAttractive);
                prop_assert_eq!(&eq.support, &vec![0]);
            }
            (false, false) => prop_assert_eq!(eq.classification, Stability::NotUnique),
        }
    }
}

fn phase_at(run: &LimitRun, t: f64) -> &evoflight::limit::Phase {
    let phases = &run.log.phases;
    let i = phases.partition_point(|p| p.start <= t);
    &phases[i.saturating_sub(1)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn limit_invariants(p in params(5)) {
        let m = build(&p);
        let run = run_limit(&m, &[0], 6.0).unwrap();
        prop_assert_eq!(&run, &run_limit(&m, &[0], 6.0).unwrap());
        if run.log.phases.is_empty() {
            return Ok(());
        }
        let alpha = m.alpha();
        let d = distances(&m);
        let n = m.len();

        for w in 0..n {
            let bps = run.paths.breakpoints(w);
            for pair in bps.windows(2) {
                // Continuity across breakpoints.
                let reached = (pair[0].value + pair[0].slope * (pair[1].t - pair[0].t)).max(0.0);
                prop_assert!((reached - pair[1].value).abs() < 1e-9, "jump in trait {} at {}", w, pair[1].t);
            }
            for b in bps {
                prop_assert!(b.value <= 1.0 + 1e-12);
                if b.t < run.paths.end && b.slope != 0.0 {
                    let phase = phase_at(&run, b.t);
                    prop_assert!(
                        phase.fitness.iter().any(|f| (f - b.slope).abs() < 1e-12),
                        "slope {} of trait {} at {} is not a phase fitness", b.slope, w, b.t
                    );
                }
            }
        }

        // Light cone at every breakpoint time.
        for t in run.paths.breakpoint_times() {
            let beta = run.paths.evaluate(t).unwrap();
            for u in 0..n {
                for w in 0..n {
                    if let Some(s) = d.get(u, w).over(alpha) {
                        prop_assert!(beta[w] >= beta[u] - s - 1e-9, "light cone {}->{} at {}", u, w, t);
                    }
                }
            }
        }

        // Event spacing recomputed from the recorded state.
        for interval in &run.log.living {
            let beta = run.paths.evaluate(interval.start).unwrap();
            let phase = phase_at(&run, interval.start);
            let outside: Vec<usize> = (0..n).filter(|w| !interval.living.contains(w)).collect();
            let mut delta = f64::INFINITY;
            for &w in &interval.living {
                let f = phase.fitness[w];
                if f <= 0.0 {
                    continue;
                }
                let reach = outside
                    .iter()
                    .filter_map(|&x| d.get(w, x).over(alpha))
                    .fold(1.0f64, f64::min);
                delta = delta.min((reach - beta[w]) / f);
            }
            prop_assert!(
                (delta - (interval.end - interval.start)).abs() < 1e-12,
                "interval {:?}: recomputed {}", interval, delta
            );
        }

        // Arrivals coincide with an in-neighbour at 1/alpha.
        for e in &run.log.events {
            if let EventKind::MutantArrival { trait_index: w } = e.kind {
                let beta = run.paths.evaluate(e.time).unwrap();
                let ok = (0..n).any(|u| m.has_edge(u, w) && (beta[u] - 1.0 / alpha).abs() < 1e-9);
                prop_assert!(ok, "arrival of {} at {}", w, e.time);
            }
        }
    }
}
