//! Reference implementations used as test oracles. Deliberately naive and
//! independent of the library's event engine.
#![allow(dead_code)]

use evoflight::lv::{equilibrium, invasion_fitness};
use evoflight::{LimitRun, TraitGraphModel};

/// All-pairs hop distances by Floyd-Warshall.
pub fn floyd_warshall(model: &TraitGraphModel) -> Vec<Vec<Option<u32>>> {
    let n = model.len();
    let mut d = vec![vec![None; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = Some(0);
    }
    for &(u, w) in model.edges() {
        if u != w {
            d[u][w] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

pub struct DenseTrack {
    pub times: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub invasions: Vec<f64>,
}

/// Advances every exponent by explicit steps of size `dt`:
/// own growth at the current fitness for positive exponents, then the
/// max over pushes `beta_u - d(u,w)/alpha`, with invasions triggered when a
/// non-resident exponent reaches 1.
pub fn dense_tracker(
    model: &TraitGraphModel,
    v0: &[usize],
    horizon: f64,
    dt: f64,
    record_every: usize,
) -> DenseTrack {
    let n = model.len();
    let alpha = model.alpha();
    let dist = floyd_warshall(model);
    let shift = |u: usize, w: usize| dist[u][w].map(|d| d as f64 / alpha);

    let mut beta: Vec<f64> = (0..n)
        .map(|w| {
            let d = v0.iter().filter_map(|&u| dist[u][w]).min();
            d.map_or(0.0, |d| (1.0 - d as f64 / alpha).max(0.0))
        })
        .collect();
    let phase = |set: &[usize]| {
        let eq = equilibrium(model, set).expect("equilibrium");
        let table = invasion_fitness(model, &eq);
        let f: Vec<f64> = (0..n)
            .map(|w| {
                if eq.support.contains(&w) {
                    0.0
                } else {
                    table.get(w)
                }
            })
            .collect();
        (eq.support, f)
    };
    let (mut residents, mut fit) = phase(v0);

    let steps = (horizon / dt).round() as usize;
    let mut track = DenseTrack {
        times: vec![0.0],
        betas: vec![beta.clone()],
        invasions: Vec::new(),
    };
    let mut own = vec![0.0; n];
    for k in 1..=steps {
        for w in 0..n {
            own[w] = if beta[w] > 0.0 {
                (beta[w] + fit[w] * dt).max(0.0)
            } else {
                0.0
            };
        }
        for w in 0..n {
            let mut b = own[w];
            for u in 0..n {
                if u != w && own[u] > 0.0 {
                    if let Some(s) = shift(u, w) {
                        b = b.max(own[u] - s);
                    }
                }
            }
            beta[w] = if residents.contains(&w) { 1.0 } else { b };
        }
        let invader = (0..n)
            .filter(|w| !residents.contains(w) && beta[*w] >= 1.0)
            .max_by(|a, b| beta[*a].total_cmp(&beta[*b]));
        if let Some(w) = invader {
            let mut union = residents.clone();
            union.push(w);
            union.sort_unstable();
            (residents, fit) = phase(&union);
            beta[w] = 1.0;
            track.invasions.push(k as f64 * dt);
        }
        if k % record_every == 0 || k == steps {
            track.times.push(k as f64 * dt);
            track.betas.push(beta.clone());
        }
    }
    track
}

/// Sup-norm gap between the tracker and the engine over the engine's
/// time range.
pub fn sup_gap(track: &DenseTrack, run: &LimitRun) -> f64 {
    let mut gap = 0.0f64;
    for (t, b) in track.times.iter().zip(&track.betas) {
        if *t > run.paths.end {
            break;
        }
        let e = run.paths.evaluate(*t).unwrap();
        for (x, y) in b.iter().zip(&e) {
            gap = gap.max((x - y).abs());
        }
    }
    gap
}
