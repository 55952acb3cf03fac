//! Full-batch gradient descent for one binary linear problem
//!
//! `min_{w,b} (1/N) sum_i loss(y_i (w.x_i + b)) + (reg/2) |w|^2`
//!
//! with Armijo backtracking, so every accepted epoch lowers the objective.

use super::{Objective, TrainConfig};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value after each accepted epoch (index 0 is the start).
    pub losses: Vec<f64>,
}

fn loss_and_slope(objective: Objective, z: f64) -> (f64, f64) {
    match objective {
        Objective::Logistic => {
            // log(1 + e^-z), stable for large |z|
            let loss = if z > 0.0 {
                (-z).exp().ln_1p()
            } else {
                -z + z.exp().ln_1p()
            };
            (loss, -super::sigmoid(-z))
        }
        Objective::Hinge => {
            let gap = (1.0 - z).max(0.0);
            (gap * gap, -2.0 * gap)
        }
    }
}

fn data_loss(objective: Objective, margins: &[f64]) -> f64 {
    margins
        .iter()
        .map(|&z| loss_and_slope(objective, z).0)
        .sum::<f64>()
        / margins.len() as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits `w, b` with `targets[i] == true` as the positive side.
pub fn fit_binary(
    x: &[&SparseVector],
    targets: &[bool],
    dim: usize,
    reg: f64,
    cfg: &TrainConfig,
) -> LinearFit {
    let n = x.len().max(1) as f64;
    let y: Vec<f64> = targets
        .iter()
        .map(|&t| if t { 1.0 } else { -1.0 })
        .collect();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;

    // signed margins y_i (w.x_i + b)
    let mut margins = vec![0.0; x.len()];
    let objective = |margins: &[f64], w_sq: f64| {
        let data = if margins.is_empty() {
            0.0
        } else {
            data_loss(cfg.objective, margins)
        };
        data + 0.5 * reg * w_sq
    };
    let mut w_sq = 0.0;
    let mut current = objective(&margins, w_sq);
    let mut losses = vec![current];

    // inverse smoothness bound as the first step
    let mean_sq = x.iter().map(|v| v.squared_norm() + 1.0).sum::<f64>() / n;
    let curvature = match cfg.objective {
        Objective::Logistic => 0.25,
        Objective::Hinge => 2.0,
    };
    let mut step = 1.0 / (curvature * mean_sq + reg);

    let mut grad_w = vec![0.0; dim];
    let mut dir = vec![0.0; x.len()];
    for _ in 0..cfg.max_epochs {
        grad_w.iter_mut().zip(&w).for_each(|(g, wi)| *g = reg * wi);
        let mut grad_b = 0.0;
        for ((v, &yi), &z) in x.iter().zip(&y).zip(&margins) {
            let slope = loss_and_slope(cfg.objective, z).1 * yi / n;
            if slope != 0.0 {
                for &(j, xj) in v.entries() {
                    grad_w[j] += slope * xj;
                }
                grad_b += slope;
            }
        }
        let grad_sq = dot(&grad_w, &grad_w) + grad_b * grad_b;
        if grad_sq == 0.0 {
            break;
        }
        // change of each signed margin per unit step along -grad
        for ((d, v), &yi) in dir.iter_mut().zip(x).zip(&y) {
            *d = yi * (v.dot_dense(&grad_w) + grad_b);
        }
        let w_dot_g = dot(&w, &grad_w);
        let g_sq = dot(&grad_w, &grad_w);

        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = margins
                .iter()
                .zip(&dir)
                .map(|(z, d)| z - step * d)
                .collect();
            let trial_w_sq = w_sq - 2.0 * step * w_dot_g + step * step * g_sq;
            let value = objective(&trial, trial_w_sq.max(0.0));
            if value <= current - 0.5 * step * grad_sq {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let Some(trial) = accepted else { break };
        w.iter_mut()
            .zip(&grad_w)
            .for_each(|(wi, g)| *wi -= step * g);
        b -= step * grad_b;
        margins = trial;
        // recompute to avoid drift in the incremental norm
        w_sq = dot(&w, &w);
        let previous = current;
        current = objective(&margins, w_sq);
        losses.push(current);
        step *= 1.5;
        if previous - current <= cfg.tolerance * previous.abs().max(1.0) {
            break;
        }
    }
    LinearFit {
        weights: w,
        bias: b,
        losses,
    }
}
