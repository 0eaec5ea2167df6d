//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! The objective supplies its own gradient; the QSVD cost uses central
//! finite differences for it.

use std::collections::VecDeque;

/// Objective evaluated at `x`, writing the gradient into `grad`.
pub trait Objective {
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<F> Objective for F
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    fn evaluate(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once the objective drops to this value.
    pub target: f64,
    /// Stop when the largest gradient component falls below this.
    pub gtol: f64,
    /// Stop when `(f_prev - f) / f_prev` falls below this.
    pub ftol: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 20,
            max_iterations: 1000,
            target: 0.0,
            gtol: 1e-10,
            ftol: 1e-10,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective at the starting point and after every accepted step.
    pub trace: Vec<f64>,
    pub stop: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Probe {
    step: f64,
    value: f64,
    slope: f64,
}

struct Counter<'a, O: Objective> {
    objective: &'a mut O,
    evaluations: usize,
}

impl<O: Objective> Counter<'_, O> {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluations += 1;
        self.objective.evaluate(x, grad)
    }
}

/// Minimizer of the cubic through two probes, safeguarded into the
/// interior of the bracket.
fn interpolate(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.step, hi.step);
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    let mid = 0.5 * (a + b);
    if disc < 0.0 || !disc.is_finite() {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (right - left);
    if !t.is_finite() || t < left + margin || t > right - margin {
        mid
    } else {
        t
    }
}

/// Strong-Wolfe line search along `dir`. On success `x_new`, `g_new` hold
/// the accepted point and the returned value is its objective.
#[allow(clippy::too_many_arguments)]
fn line_search<O: Objective>(
    f: &mut Counter<'_, O>,
    opts: &LbfgsOptions,
    x: &[f64],
    value: f64,
    slope0: f64,
    dir: &[f64],
    initial: f64,
    x_new: &mut [f64],
    g_new: &mut [f64],
) -> Option<f64> {
    let eval_at = |f: &mut Counter<'_, O>, step: f64, x_new: &mut [f64], g_new: &mut [f64]| {
        for ((xn, xi), di) in x_new.iter_mut().zip(x).zip(dir) {
            *xn = xi + step * di;
        }
        let v = f.eval(x_new, g_new);
        Probe { step, value: v, slope: dot(g_new, dir) }
    };

    let mut prev = Probe { step: 0.0, value, slope: slope0 };
    let mut step = initial;
    let mut bracket: Option<(Probe, Probe)> = None;

    for i in 0..opts.max_line_search {
        let cur = eval_at(f, step, x_new, g_new);
        if !cur.value.is_finite() {
            step *= 0.5;
            continue;
        }
        if cur.value > value + opts.c1 * step * slope0 || (i > 0 && cur.value >= prev.value) {
            bracket = Some((prev, cur));
            break;
        }
        if cur.slope.abs() <= -opts.c2 * slope0 {
            return Some(cur.value);
        }
        if cur.slope >= 0.0 {
            bracket = Some((cur, prev));
            break;
        }
        let next = (2.0 * step).min(step * 10.0);
        prev = cur;
        step = next;
    }

    let (mut lo, mut hi) = bracket?;
    for _ in 0..opts.max_line_search {
        let trial = interpolate(&lo, &hi);
        if (hi.step - lo.step).abs() < 1e-16 * lo.step.abs().max(1.0) {
            break;
        }
        let cur = eval_at(f, trial, x_new, g_new);
        if cur.value > value + opts.c1 * trial * slope0 || cur.value >= lo.value {
            hi = cur;
        } else {
            if cur.slope.abs() <= -opts.c2 * slope0 {
                return Some(cur.value);
            }
            if cur.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // Fall back to the best sufficient-decrease point seen, if any.
    if lo.step > 0.0 && lo.value < value {
        let v = eval_at(f, lo.step, x_new, g_new);
        return Some(v.value);
    }
    None
}

/// Minimizes `objective` from `x0`.
pub fn minimize<O: Objective>(objective: &mut O, x0: &[f64], opts: &LbfgsOptions) -> LbfgsResult {
    let n = x0.len();
    let mut f = Counter { objective, evaluations: 0 };
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut value = f.eval(&x, &mut g);
    let mut trace = vec![value];

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut alpha = vec![0.0; opts.memory];
    let mut iterations = 0;

    let stop = loop {
        if value <= opts.target {
            break StopReason::TargetReached;
        }
        if inf_norm(&g) < opts.gtol {
            break StopReason::GradientTolerance;
        }
        if iterations >= opts.max_iterations {
            break StopReason::MaxIterations;
        }

        // two-loop recursion
        for (d, gi) in dir.iter_mut().zip(&g) {
            *d = -gi;
        }
        for (k, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &dir);
            alpha[k] = a;
            for (d, yi) in dir.iter_mut().zip(y) {
                *d -= a * yi;
            }
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            dir.iter_mut().for_each(|d| *d *= gamma);
        }
        for (k, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &dir);
            for (d, si) in dir.iter_mut().zip(s) {
                *d += (alpha[k] - b) * si;
            }
        }

        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            for (d, gi) in dir.iter_mut().zip(&g) {
                *d = -gi;
            }
            slope = dot(&g, &dir);
        }
        let initial = if history.is_empty() { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };

        let accepted = line_search(&mut f, opts, &x, value, slope, &dir, initial, &mut x_new, &mut g_new);
        let new_value = match accepted {
            Some(v) if v <= value => v,
            _ => {
                if history.is_empty() {
                    break StopReason::LineSearchFailed;
                }
                history.clear();
                continue;
            }
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).max(f64::MIN_POSITIVE).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let prev = value;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        value = new_value;
        trace.push(value);
        iterations += 1;

        if prev > 0.0 && (prev - value) / prev < opts.ftol && value > opts.target {
            break StopReason::FunctionTolerance;
        }
    };

    LbfgsResult { x, value, iterations, evaluations: f.evaluations, trace, stop }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn solves_rosenbrock() {
        let mut f = rosenbrock;
        let r = minimize(&mut f, &[-1.2, 1.0], &LbfgsOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.trace.len(), r.iterations + 1);
    }

    #[test]
    fn quadratic_reaches_target() {
        let mut f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for (i, (xi, gi)) in x.iter().zip(g.iter_mut()).enumerate() {
                let w = (i + 1) as f64;
                v += w * xi * xi;
                *gi = 2.0 * w * xi;
            }
            v
        };
        let opts = LbfgsOptions { target: 1e-20, ..Default::default() };
        let r = minimize(&mut f, &[1.0; 8], &opts);
        assert_eq!(r.stop, StopReason::TargetReached);
        assert!(r.value <= 1e-20);
    }

    #[test]
    fn respects_iteration_cap() {
        let mut f = rosenbrock;
        let opts = LbfgsOptions { max_iterations: 3, ..Default::default() };
        let r = minimize(&mut f, &[-1.2, 1.0], &opts);
        assert_eq!(r.iterations, 3);
        assert_eq!(r.stop, StopReason::MaxIterations);
    }
}
