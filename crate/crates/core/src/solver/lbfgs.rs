//! Limited-memory BFGS with backtracking on an extended-real objective.
//!
//! Infinite trial values (barrier violations) are treated like failed Armijo
//! tests, so iterates never leave the finite-energy region.

use crate::error::{Error, Result};
use std::collections::VecDeque;

pub trait Objective {
    /// Value and gradient; the value may be `+∞`.
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>);

    /// Maps an iterate to its canonical representative (e.g. removes the mean).
    fn project(&self, _x: &mut [f64]) {}
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Absolute tolerance on the gradient ∞-norm.
    pub gtol: f64,
    /// Largest coordinate change allowed in the very first step.
    pub first_step: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 12,
            max_iterations: 5000,
            gtol: 1e-8,
            first_step: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_inf: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting with the initial one.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Two-loop recursion: `-H g` for the current curvature pairs.
fn direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

pub fn lbfgs(obj: &dyn Objective, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<LbfgsOutcome> {
    let mut x = x0;
    obj.project(&mut x);
    let (mut fx, mut g) = obj.eval(&x);
    if !fx.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut trace = vec![fx];
    let mut iterations = 0;
    let mut stalls = 0;
    loop {
        let gn = inf_norm(&g);
        if gn <= opts.gtol {
            return Ok(LbfgsOutcome { x, value: fx, grad_inf: gn, iterations, converged: true, trace });
        }
        if iterations >= opts.max_iterations || stalls >= 2 {
            return Ok(LbfgsOutcome { x, value: fx, grad_inf: gn, iterations, converged: false, trace });
        }
        let mut d = direction(&g, &pairs);
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut t = if pairs.is_empty() { (opts.first_step / inf_norm(&d)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let mut xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            obj.project(&mut xt);
            let (ft, gt) = obj.eval(&xt);
            let armijo = ft <= fx + 1e-4 * t * slope;
            // below the resolution of f, accept any step that shrinks the gradient
            let flat = ft <= fx + 8.0 * f64::EPSILON * fx.abs() && inf_norm(&gt) < gn;
            if ft.is_finite() && (armijo || flat) {
                accepted = Some((xt, ft, gt));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((xn, fnew, gnew)) = accepted else {
            // no progress along this direction: restart from steepest descent once
            stalls += 1;
            pairs.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        stalls = if fnew < fx || inf_norm(&gnew) < gn { 0 } else { stalls + 1 };
        x = xn;
        fx = fnew;
        g = gnew;
        trace.push(fx);
    }
}
