//! Bang-bang search: enumerate vertex sequences, grid the arc lengths,
//! polish the best candidates with Nelder–Mead on the switch times.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{minimize, NelderMeadOptions};
use super::{build_report, Method, OCProblem, OptimizationReport};
use crate::consensus::consensus_distance;
use crate::dynamics::{PiecewiseControl, DEFAULT_SAMPLES_PER_SEGMENT};
use crate::error::{Error, Result};
use crate::expm::expm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BangBangOptions {
    /// `None` picks 4 for `n <= 3, r = 2` and 6 otherwise.
    pub max_switches: Option<usize>,
    /// Coarse grid: arc lengths are multiples of `T / grid`.
    pub grid: usize,
    /// Nelder–Mead iterations per refinement pass.
    pub refine_iters: usize,
    /// Grid candidates refined per sequence length.
    pub refine_top: usize,
    /// Search the periodic-after-three-switches family when the switch cap
    /// binds (three agents, two subsystems only).
    pub periodic_family: bool,
    pub samples_per_segment: usize,
}

impl Default for BangBangOptions {
    fn default() -> Self {
        Self {
            max_switches: None,
            grid: 16,
            refine_iters: 200,
            refine_top: 6,
            periodic_family: true,
            samples_per_segment: DEFAULT_SAMPLES_PER_SEGMENT,
        }
    }
}

impl BangBangOptions {
    pub fn default_max_switches(n: usize, r: usize) -> usize {
        if n <= 3 && r == 2 {
            4
        } else {
            6
        }
    }

    pub fn with_max_switches(mut self, k: usize) -> Self {
        self.max_switches = Some(k);
        self
    }
}

/// Best member of the periodic family: arc `first` on `[0, t1)`, then arcs
/// of lengths `t21` and `t32` alternating until `T - final_len`, then
/// `final_bang` to the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicCandidate {
    pub control: PiecewiseControl,
    pub cost: f64,
    pub first: usize,
    pub t1: f64,
    pub t21: f64,
    pub t32: f64,
    pub final_bang: usize,
    pub final_len: f64,
}

#[derive(Debug, Clone)]
struct Candidate {
    signed: f64,
    sequence: Vec<usize>,
    switch_times: Vec<f64>,
}

const POLISH_SCALE: f64 = 0.05;

pub fn solve_bang_bang(prob: &OCProblem, opts: &BangBangOptions) -> Result<OptimizationReport> {
    if opts.grid < 8 {
        return Err(Error::InvalidOption(format!(
            "grid must be at least 8, got {}",
            opts.grid
        )));
    }
    let n = prob.dim();
    let r = prob.inputs();
    let cap = opts
        .max_switches
        .unwrap_or_else(|| BangBangOptions::default_max_switches(n, r));
    let horizon = prob.horizon;
    let s = prob.sense.sign();
    let mats = prob.sys.raw_matrices();
    let h = horizon / opts.grid as f64;

    // exp(A_i c h) for c = 0..=grid
    let cache: Vec<Vec<DMatrix<f64>>> = mats
        .iter()
        .map(|a| {
            (0..=opts.grid)
                .map(|c| expm(&(a * (c as f64 * h))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut best: Option<Candidate> = None;
    let mut improved_at = 0;
    let mut evaluations = 0usize;
    // r = 1 has a single sequence of length one
    let max_len = if r == 1 { 1 } else { (cap + 1).min(opts.grid) };
    for len in 1..=max_len {
        let seqs = sequences(len, r);
        let per_seq: Vec<Vec<(f64, Vec<usize>)>> = seqs
            .par_iter()
            .map(|seq| grid_search(seq, &cache, &prob.x0, opts.grid, s, 2))
            .collect();
        evaluations += seqs.len() * binomial(opts.grid - 1, len - 1);
        let mut pool: Vec<(f64, usize, Vec<usize>)> = per_seq
            .into_iter()
            .enumerate()
            .flat_map(|(i, v)| v.into_iter().map(move |(c, comp)| (c, i, comp)))
            .collect();
        pool.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        pool.truncate(opts.refine_top.max(1));

        let refined: Vec<Candidate> = pool
            .par_iter()
            .map(|(c, i, comp)| refine(prob, &seqs[*i], comp, *c, h, opts))
            .collect::<Result<_>>()?;
        let round_best = refined
            .into_iter()
            .reduce(|a, b| if b.signed < a.signed { b } else { a })
            .unwrap();
        let adopt = match &best {
            None => true,
            Some(b) => round_best.signed < b.signed - 1e-12 * b.signed.abs(),
        };
        if adopt {
            best = Some(round_best);
            improved_at = len - 1;
        }
    }

    let best = best.expect("at least one sequence length is searched");
    let control = PiecewiseControl::bang_bang(&best.sequence, &best.switch_times, horizon, r)?;
    let mut report = build_report(prob, control, Method::BangBangGrid, opts.samples_per_segment)?;
    report.iterations = evaluations;
    report.flags.switch_cap_binding = cap > 0 && r > 1 && improved_at == cap;
    if report.flags.switch_cap_binding && opts.periodic_family && n == 3 && r == 2 {
        report.periodic = Some(periodic_search(prob, opts)?);
    }
    Ok(report)
}

/// All words of length `len` over `0..r` without equal neighbours.
fn sequences(len: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for pos in 0..len {
        let mut next = Vec::new();
        for w in &out {
            for i in 0..r {
                if pos == 0 || w[pos - 1] != i {
                    let mut v = w.clone();
                    v.push(i);
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

// Depth-first over compositions of `grid` into `seq.len()` positive parts,
// reusing partial products; keeps the `keep` best compositions.
fn grid_search(
    seq: &[usize],
    cache: &[Vec<DMatrix<f64>>],
    x0: &DVector<f64>,
    grid: usize,
    s: f64,
    keep: usize,
) -> Vec<(f64, Vec<usize>)> {
    let mut top: Vec<(f64, Vec<usize>)> = Vec::with_capacity(keep + 1);
    let mut comp = Vec::with_capacity(seq.len());
    descend(seq, cache, x0, grid, s, keep, &mut comp, &mut top);
    top
}

#[allow(clippy::too_many_arguments)]
fn descend(
    seq: &[usize],
    cache: &[Vec<DMatrix<f64>>],
    x: &DVector<f64>,
    remaining: usize,
    s: f64,
    keep: usize,
    comp: &mut Vec<usize>,
    top: &mut Vec<(f64, Vec<usize>)>,
) {
    let pos = comp.len();
    let arcs_left = seq.len() - pos;
    if arcs_left == 1 {
        let xt = &cache[seq[pos]][remaining] * x;
        let cost = s * consensus_distance(&xt);
        comp.push(remaining);
        if top.len() < keep || cost < top.last().unwrap().0 {
            top.push((cost, comp.clone()));
            top.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            top.truncate(keep);
        }
        comp.pop();
        return;
    }
    for c in 1..=remaining - (arcs_left - 1) {
        let next = &cache[seq[pos]][c] * x;
        comp.push(c);
        descend(seq, cache, &next, remaining - c, s, keep, comp, top);
        comp.pop();
    }
}

fn repair_times(t: &[f64], horizon: f64) -> Vec<f64> {
    let mut v: Vec<f64> = t.iter().map(|x| x.clamp(0.0, horizon)).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn refine(
    prob: &OCProblem,
    seq: &[usize],
    comp: &[usize],
    grid_cost: f64,
    h: f64,
    opts: &BangBangOptions,
) -> Result<Candidate> {
    let horizon = prob.horizon;
    let r = prob.inputs();
    let mut start = Vec::with_capacity(comp.len().saturating_sub(1));
    let mut acc = 0usize;
    for c in &comp[..comp.len() - 1] {
        acc += c;
        start.push(acc as f64 * h);
    }
    let objective = |t: &[f64]| -> f64 {
        let times = repair_times(t, horizon);
        PiecewiseControl::bang_bang(seq, &times, horizon, r)
            .and_then(|u| prob.signed_cost(&u))
            .unwrap_or(f64::NAN)
    };
    let mut best_t = start.clone();
    let mut best_v = grid_cost;
    if !start.is_empty() && opts.refine_iters > 0 {
        for step in [0.5 * h, POLISH_SCALE * h] {
            let res = minimize(
                &objective,
                &best_t,
                &NelderMeadOptions {
                    max_iters: opts.refine_iters,
                    diameter_tol: 1e-8 * horizon,
                    initial_step: step,
                },
            );
            if res.value < best_v {
                best_v = res.value;
                best_t = repair_times(&res.x, horizon);
            }
        }
    }
    Ok(Candidate {
        signed: best_v,
        sequence: seq.to_vec(),
        switch_times: best_t,
    })
}

#[derive(Debug, Clone, Copy)]
struct PeriodicParams {
    first: usize,
    final_bang: usize,
    t1: f64,
    t21: f64,
    t32: f64,
    final_len: f64,
}

impl PeriodicParams {
    fn arcs(&self, horizon: f64) -> (Vec<usize>, Vec<f64>) {
        let span = horizon - self.final_len;
        let mut seq = vec![self.first];
        let mut switches = Vec::new();
        let mut t = self.t1.min(span);
        let mut current = self.first;
        while t < span {
            switches.push(t);
            current = 1 - current;
            seq.push(current);
            let len = if current == self.first { self.t32 } else { self.t21 };
            t = (t + len).min(span);
        }
        if self.final_len > 0.0 {
            switches.push(span);
            seq.push(self.final_bang);
        }
        (seq, switches)
    }

    fn control(&self, horizon: f64) -> Result<PiecewiseControl> {
        let (seq, switches) = self.arcs(horizon);
        PiecewiseControl::bang_bang(&seq, &switches, horizon, 2)
    }
}

// Members with arcs shorter than `T / (2 grid)` are excluded; the family
// would otherwise degenerate into chattering approximations of relaxed
// controls.
fn periodic_search(prob: &OCProblem, opts: &BangBangOptions) -> Result<PeriodicCandidate> {
    let horizon = prob.horizon;
    let min_arc = horizon / (2 * opts.grid) as f64;
    let levels = 8;
    let step = horizon / levels as f64;
    let eval = |p: &PeriodicParams| -> f64 {
        p.control(horizon)
            .and_then(|u| prob.signed_cost(&u))
            .unwrap_or(f64::NAN)
    };
    let mut starts = Vec::new();
    for first in 0..2 {
        for final_bang in 0..2 {
            for i1 in 0..levels {
                for ia in 1..=levels {
                    for ib in 1..=levels {
                        for jf in 0..levels - i1 {
                            starts.push(PeriodicParams {
                                first,
                                final_bang,
                                t1: i1 as f64 * step,
                                t21: ia as f64 * step / 2.0,
                                t32: ib as f64 * step / 2.0,
                                final_len: jf as f64 * step,
                            });
                        }
                    }
                }
            }
        }
    }
    let mut scored: Vec<(f64, usize)> = starts.par_iter().enumerate().map(|(i, p)| (eval(p), i)).collect();
    scored.retain(|(v, _)| v.is_finite());
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(4);

    let clip = |base: &PeriodicParams, x: &[f64]| -> PeriodicParams {
        let t1 = x[0].clamp(0.0, horizon);
        let final_len = x[3].clamp(0.0, horizon - t1);
        PeriodicParams {
            t1,
            t21: x[1].max(min_arc),
            t32: x[2].max(min_arc),
            final_len,
            ..*base
        }
    };
    let refined: Vec<(f64, PeriodicParams)> = scored
        .par_iter()
        .map(|&(v0, i)| {
            let base = starts[i];
            let x0 = [base.t1, base.t21, base.t32, base.final_len];
            let res = minimize(
                |x| eval(&clip(&base, x)),
                &x0,
                &NelderMeadOptions {
                    max_iters: opts.refine_iters,
                    diameter_tol: 1e-8 * horizon,
                    initial_step: 0.5 * step,
                },
            );
            if res.value < v0 {
                (res.value, clip(&base, &res.x))
            } else {
                (v0, base)
            }
        })
        .collect();
    let (_, p) = refined
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .ok_or_else(|| Error::InvalidOption("periodic family produced no admissible member".into()))?;
    let control = p.control(horizon)?;
    let cost = prob.cost(&control)?;
    Ok(PeriodicCandidate {
        control,
        cost,
        first: p.first,
        t1: p.t1,
        t21: p.t21,
        t32: p.t32,
        final_bang: p.final_bang,
        final_len: p.final_len,
    })
}
