//! Conditional-gradient sweep over bin-wise constant relaxed controls.
//!
//! The derivative of the signed cost `s V(x(T))` with respect to the value
//! `u_i` on a control segment is `2 int_segment m_i dt`, with `m_i` taken
//! from the costate `lambda(T) = s P x(T)`. Each iteration moves every bin
//! toward the simplex vertex with the smallest such derivative, with an
//! Armijo backtracking step.

use serde::{Deserialize, Serialize};

use super::{analyze_control, at_consensus, build_report, Method, OCProblem, OptimizationReport};
use crate::dynamics::{vertex, PiecewiseControl};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxedOptions {
    pub time_bins: usize,
    pub max_iters: usize,
    /// Stop once an accepted step improves the signed cost by less than this.
    pub tol: f64,
    /// Even number of sub-steps per bin used for the gradient quadrature.
    pub samples_per_bin: usize,
}

impl Default for RelaxedOptions {
    fn default() -> Self {
        Self {
            time_bins: 64,
            max_iters: 500,
            tol: 1e-12,
            samples_per_bin: 16,
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-10;

/// `d(s V(x(T))) / d u_i` on every segment of `control`, by Simpson's rule
/// over `samples_per_segment` (rounded up to even) sub-steps.
pub fn relaxed_gradient(
    prob: &OCProblem,
    control: &PiecewiseControl,
    samples_per_segment: usize,
) -> Result<Vec<Vec<f64>>> {
    let samples = (samples_per_segment.max(2) + 1) & !1;
    let a = analyze_control(prob, control, samples)?;
    let r = prob.inputs();
    let m = &a.switching.values;
    let mut grad = Vec::with_capacity(control.num_segments());
    for (j, (start, end, _)) in control.segments().enumerate() {
        let h = (end - start) / samples as f64;
        let base = j * samples;
        let mut g = vec![0.0; r];
        for k in 0..=samples {
            let w = if k == 0 || k == samples {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            for (gi, mi) in g.iter_mut().zip(&m[base + k]) {
                *gi += w * mi;
            }
        }
        for gi in &mut g {
            *gi *= 2.0 * h / 3.0;
        }
        grad.push(g);
    }
    Ok(grad)
}

pub fn solve_relaxed(prob: &OCProblem, opts: &RelaxedOptions) -> Result<OptimizationReport> {
    if opts.time_bins < 16 {
        return Err(Error::InvalidOption(format!(
            "time_bins must be at least 16, got {}",
            opts.time_bins
        )));
    }
    let r = prob.inputs();
    let horizon = prob.horizon;
    let mut bins = vec![vec![1.0 / r as f64; r]; opts.time_bins];
    let mut control = PiecewiseControl::from_bins(bins.clone(), horizon)?;
    let mut cost = prob.signed_cost(&control)?;
    let mut iterations = 0;

    if !at_consensus(&prob.x0) {
        while iterations < opts.max_iters {
            iterations += 1;
            let grad = relaxed_gradient(prob, &control, opts.samples_per_bin)?;
            let targets: Vec<usize> = grad
                .iter()
                .map(|g| (0..r).fold(0, |b, i| if g[i] < g[b] { i } else { b }))
                .collect();
            let slope: f64 = grad
                .iter()
                .zip(&bins)
                .zip(&targets)
                .map(|((g, u), &k)| (0..r).map(|i| g[i] * (vertex(k, r)[i] - u[i])).sum::<f64>())
                .sum();
            if slope >= -f64::EPSILON * cost.abs() {
                break;
            }
            let mut gamma = 1.0;
            let mut accepted = None;
            while gamma >= MIN_STEP {
                let trial: Vec<Vec<f64>> = bins
                    .iter()
                    .zip(&targets)
                    .map(|(u, &k)| step_toward(u, k, gamma))
                    .collect();
                let trial_control = PiecewiseControl::from_bins(trial.clone(), horizon)?;
                let trial_cost = prob.signed_cost(&trial_control)?;
                if trial_cost <= cost + ARMIJO * gamma * slope {
                    accepted = Some((trial, trial_control, trial_cost));
                    break;
                }
                gamma *= 0.5;
            }
            let Some((trial, trial_control, trial_cost)) = accepted else {
                break;
            };
            let gain = cost - trial_cost;
            bins = trial;
            control = trial_control;
            cost = trial_cost;
            if gain < opts.tol {
                break;
            }
        }
    }

    let mut report = build_report(prob, control.simplified(), Method::RelaxedSweep, opts.samples_per_bin)?;
    report.iterations = iterations;
    Ok(report)
}

fn step_toward(u: &[f64], k: usize, gamma: f64) -> Vec<f64> {
    let mut v: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(i, &ui)| {
            let target = if i == k { 1.0 } else { 0.0 };
            (ui + gamma * (target - ui)).max(0.0)
        })
        .collect();
    let sum: f64 = v.iter().sum();
    for x in &mut v {
        *x /= sum;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_stays_on_simplex() {
        let u = [0.2, 0.3, 0.5];
        assert_eq!(step_toward(&u, 1, 1.0), vec![0.0, 1.0, 0.0]);
        let v = step_toward(&u, 0, 0.25);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((v[0] - 0.4).abs() < 1e-15);
    }
}
