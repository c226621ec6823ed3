#![allow(dead_code)]

use dilated_egt::oracle::random_treeplex;
use dilated_egt::treeplex::Treeplex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random treeplex for property tests: depth at most 3, at most `max_vars` variables.
pub fn treeplex(seed: u64, max_vars: usize) -> Treeplex {
    random_treeplex(&mut rng(seed), 3, max_vars)
}

/// Interior point whose behavioral entries span several orders of magnitude.
pub fn spread_interior<R: Rng>(rng: &mut R, t: &Treeplex, log_spread: f64) -> Vec<f64> {
    let behavioral: Vec<Vec<f64>> = t
        .simplexes()
        .iter()
        .map(|s| {
            let w: Vec<f64> = (0..s.len())
                .map(|_| (-rng.gen_range(0.0..log_spread)).exp())
                .collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|v| v / z).collect()
        })
        .collect();
    t.sequence_from_behavioral(&behavioral)
}

pub fn direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|a| a.abs()).sum()
}

pub fn l2_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

pub fn linf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
