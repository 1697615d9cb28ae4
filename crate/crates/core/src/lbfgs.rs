// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once the convergence measure drops to this.
    pub tolerance: f64,
    /// Measure accepted when f is stationary to working precision.
    pub precision_tolerance: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 12,
            max_iterations: 2000,
            tolerance: 1e-8,
            precision_tolerance: 1e-5,
        }
    }
}

/// Relative size of objective changes that rounding can no longer resolve.
const RESOLUTION: f64 = 64.0 * f64::EPSILON;
/// Consecutive accepted steps without a decrease before giving up.
const MAX_FLAT_STEPS: usize = 5;

#[derive(Debug, Clone)]
pub(crate) struct LbfgsReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` (which returns the value and fills the gradient) from `x0`.
/// `measure(x, value, grad)` is the convergence measure compared with the
/// tolerances; the run also ends when the quasi-Newton model predicts a
/// decrease below the rounding resolution of f.
pub(crate) fn minimize(
    mut f: impl FnMut(&[f64], &mut [f64]) -> f64,
    x0: Vec<f64>,
    opts: LbfgsOptions,
    mut measure: impl FnMut(&[f64], f64, &[f64]) -> f64,
) -> LbfgsReport {
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut history = vec![fx];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut failures = 0;
    let mut flat = 0;
    let finish =
        |x: Vec<f64>, fx: f64, m: f64, iterations: usize, precision_limited: bool, history| {
            let limit = if precision_limited {
                opts.precision_tolerance
            } else {
                opts.tolerance
            };
            LbfgsReport {
                x,
                value: fx,
                iterations,
                converged: m <= limit,
                history,
            }
        };

    for iter in 0..opts.max_iterations {
        let m = measure(&x, fx, &g);
        if m <= opts.tolerance {
            return finish(x, fx, m, iter, false, history);
        }
        // Two-loop recursion for d = -H g.
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        let gnorm = dot(&g, &g).sqrt();
        let first_step = 0.1 * dot(&x, &x).sqrt().max(1e-3) / gnorm.max(f64::MIN_POSITIVE);
        let scale = match pairs.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => first_step,
        };
        d.iter_mut().for_each(|di| *di *= scale);
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().map(|v| -first_step * v).collect();
            slope = dot(&g, &d);
        }
        if !pairs.is_empty() && -slope <= RESOLUTION * fx.abs() {
            return finish(x, fx, m, iter, true, history);
        }

        let mut step = 1.0;
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..60 {
            x_new
                .iter_mut()
                .zip(&x)
                .zip(&d)
                .for_each(|((xn, xi), di)| *xn = xi + step * di);
            f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || f_new > fx {
            // Retry once from steepest descent before giving up.
            failures += 1;
            if failures > 1 || pairs.is_empty() {
                return finish(x, fx, m, iter, true, history);
            }
            pairs.clear();
            continue;
        }
        failures = 0;
        flat = if f_new < fx { 0 } else { flat + 1 };
        if flat >= MAX_FLAT_STEPS {
            return finish(x, fx, m, iter, true, history);
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        history.push(fx);
    }
    let m = measure(&x, fx, &g);
    finish(x, fx, m, opts.max_iterations, false, history)
}
