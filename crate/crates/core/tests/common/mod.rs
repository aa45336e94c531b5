#![allow(dead_code)]

use consensus_core::{ConsensusMatrix, PiecewiseControl, SwitchedSystem};
use nalgebra::DVector;
use rand::Rng;

/// Off-diagonal rates uniform in `[0, 3)`, each zeroed with probability `sparsity`.
pub fn random_consensus<R: Rng>(rng: &mut R, n: usize, sparsity: f64) -> ConsensusMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i != j && !rng.gen_bool(sparsity) {
                *v = rng.gen_range(0.0..3.0);
            }
        }
        let off: f64 = row.iter().sum();
        row[i] = -off;
    }
    ConsensusMatrix::from_rows(&rows).unwrap()
}

pub fn random_system<R: Rng>(rng: &mut R, n: usize, r: usize, sparsity: f64) -> SwitchedSystem {
    SwitchedSystem::new((0..r).map(|_| random_consensus(rng, n, sparsity)).collect()).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0))
}

pub fn random_simplex_point<R: Rng>(rng: &mut R, r: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..r).map(|_| -rng.gen_range(1e-3f64..1.0).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random relaxed control with `segments` pieces of random lengths.
pub fn random_control<R: Rng>(rng: &mut R, r: usize, segments: usize, horizon: f64) -> PiecewiseControl {
    let mut cuts: Vec<f64> = (0..segments - 1).map(|_| rng.gen_range(0.0..horizon)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut bp = vec![0.0];
    bp.extend(cuts.into_iter().filter(|&t| t > 0.0));
    bp.push(horizon);
    let values = (0..bp.len() - 1).map(|_| random_simplex_point(rng, r)).collect();
    PiecewiseControl::new(bp, values).unwrap()
}

/// Random bang-bang control.
pub fn random_switching<R: Rng>(rng: &mut R, r: usize, segments: usize, horizon: f64) -> PiecewiseControl {
    let mut seq = Vec::with_capacity(segments);
    for _ in 0..segments {
        seq.push(rng.gen_range(0..r));
    }
    let mut cuts: Vec<f64> = (0..segments - 1).map(|_| rng.gen_range(0.0..horizon)).collect();
    cuts.sort_by(f64::total_cmp);
    PiecewiseControl::bang_bang(&seq, &cuts, horizon, r).unwrap()
}
