//! Bounded derivative-free minimization.
//!
//! An adaptive Nelder–Mead simplex (dimension-dependent coefficients) with
//! box projection and restarts around the incumbent. Every point handed to
//! the objective lies inside the box.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::sim::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Stop when the spread of simplex values drops below this.
    pub tolerance: f64,
    /// Initial simplex edge as a fraction of each coordinate's range.
    pub initial_step: f64,
    pub max_restarts: usize,
}

impl OptimizationProblem {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, budget: usize) -> Self {
        OptimizationProblem {
            lower,
            upper,
            budget,
            tolerance: 1e-4,
            initial_step: 0.1,
            max_restarts: 3,
        }
    }

    /// Box `[lo, hi]` on every coordinate.
    pub fn uniform_box(dimension: usize, lo: f64, hi: f64, budget: usize) -> Self {
        Self::new(vec![lo; dimension], vec![hi; dimension], budget)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_initial_step(mut self, step: f64) -> Self {
        self.initial_step = step;
        self
    }

    pub fn with_max_restarts(mut self, restarts: usize) -> Self {
        self.max_restarts = restarts;
        self
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    fn validate(&self, start: &[f64]) -> Result<()> {
        let n = self.dimension();
        if self.upper.len() != n || start.len() != n {
            return Err(validation("bounds and start point differ in dimension"));
        }
        if n == 0 {
            return Err(validation("zero-dimensional problem"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > u) {
            return Err(validation("lower bound exceeds upper bound"));
        }
        if start
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(x, (l, u))| x < l || x > u)
        {
            return Err(validation("start point outside bounds"));
        }
        if self.budget < n + 2 {
            return Err(validation(format!("budget {} below dimension + 2", self.budget)));
        }
        Ok(())
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    /// (evaluation index, objective value), one entry per evaluation.
    pub history: Vec<(usize, f64)>,
    pub evaluations_used: usize,
    pub converged: bool,
    pub restarts: usize,
}

impl OptimizationTrace {
    /// Running minimum over the history.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.history
            .iter()
            .scan(f64::INFINITY, |best, &(_, v)| {
                *best = best.min(v);
                Some(*best)
            })
            .collect()
    }

    /// CSV with columns `evaluation,value,best_so_far`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "evaluation,value,best_so_far")?;
        for ((i, v), b) in self.history.iter().zip(self.best_so_far()) {
            writeln!(out, "{i},{v},{b}")?;
        }
        Ok(())
    }
}

/// Counts evaluations, enforces the box and records the trace.
struct Recorder<'a, F> {
    problem: &'a OptimizationProblem,
    objective: F,
    history: Vec<(usize, f64)>,
    best_params: Vec<f64>,
    best_value: f64,
}

impl<F: FnMut(&[f64]) -> f64> Recorder<'_, F> {
    fn remaining(&self) -> usize {
        self.problem.budget - self.history.len()
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        debug_assert!(x
            .iter()
            .zip(self.problem.lower.iter().zip(&self.problem.upper))
            .all(|(v, (l, u))| v >= l && v <= u));
        let value = (self.objective)(x);
        let index = self.history.len();
        if !value.is_finite() {
            return Err(Error::NonFinite { evaluation: index });
        }
        self.history.push((index, value));
        if value < self.best_value {
            self.best_value = value;
            self.best_params = x.to_vec();
        }
        Ok(value)
    }
}

/// Minimizes `objective` inside the problem's box, starting from `start`.
/// Running out of budget is not an error; the best point found is returned.
pub fn minimize(
    problem: &OptimizationProblem,
    objective: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    seed: u64,
) -> Result<OptimizationTrace> {
    problem.validate(start)?;
    let mut rec = Recorder {
        problem,
        objective,
        history: Vec::new(),
        best_params: start.to_vec(),
        best_value: f64::INFINITY,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.dimension();
    let mut step = problem.initial_step;
    let mut restarts = 0;
    let mut converged;
    let mut centre = start.to_vec();
    loop {
        let before = rec.best_value;
        converged = simplex_run(&mut rec, &centre, step, &mut rng)?;
        let improved = before - rec.best_value > problem.tolerance;
        let can_restart = restarts < problem.max_restarts && rec.remaining() >= n + 2;
        if !converged || !can_restart || (restarts > 0 && !improved) {
            break;
        }
        restarts += 1;
        step *= 0.5;
        centre = rec.best_params.clone();
    }
    Ok(OptimizationTrace {
        best_params: rec.best_params,
        best_value: rec.best_value,
        evaluations_used: rec.history.len(),
        history: rec.history,
        converged,
        restarts,
    })
}

/// One simplex descent. Returns true when it stopped on the tolerance.
fn simplex_run<F: FnMut(&[f64]) -> f64>(
    rec: &mut Recorder<'_, F>,
    centre: &[f64],
    step: f64,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let problem = rec.problem;
    let n = problem.dimension();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let (rho, sigma) = if n == 1 { (0.5, 0.5) } else { (rho, sigma) };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((centre.to_vec(), rec.eval(centre)?));
    for i in 0..n {
        if rec.remaining() == 0 {
            return Ok(false);
        }
        let range = problem.upper[i] - problem.lower[i];
        // Random sign on each edge so restarts explore new directions.
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let mut v = centre.to_vec();
        let mut h = sign * step * range.max(f64::EPSILON);
        if v[i] + h > problem.upper[i] || v[i] + h < problem.lower[i] {
            h = -h;
        }
        v[i] += h;
        problem.project(&mut v);
        let f = rec.eval(&v)?;
        simplex.push((v, f));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < problem.tolerance {
            return Ok(true);
        }
        if rec.remaining() == 0 {
            return Ok(false);
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / nf)
            .collect();
        let toward = |coef: f64, worst: &[f64]| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            problem.project(&mut p);
            p
        };
        let worst = simplex[n].0.clone();
        let xr = toward(alpha, &worst);
        let fr = rec.eval(&xr)?;
        if fr < simplex[0].1 {
            if rec.remaining() == 0 {
                simplex[n] = (xr, fr);
                continue;
            }
            let xe = toward(alpha * gamma, &worst);
            let fe = rec.eval(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        if rec.remaining() == 0 {
            return Ok(false);
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = toward(alpha * rho, &worst);
            let fc = rec.eval(&xc)?;
            (xc, fc)
        } else {
            let xc = toward(-rho, &worst);
            let fc = rec.eval(&xc)?;
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if rec.remaining() == 0 {
                return Ok(false);
            }
            let mut v: Vec<f64> = best
                .iter()
                .zip(&vertex.0)
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            problem.project(&mut v);
            let f = rec.eval(&v)?;
            *vertex = (v, f);
        }
    }
}

/// The start point used by restart `k` of [`multistart_minimize`]: uniform
/// in the box, seeded from `(seed, k)`.
pub fn multistart_start(problem: &OptimizationProblem, seed: u64, k: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[k as u64, 0]));
    problem
        .lower
        .iter()
        .zip(&problem.upper)
        .map(|(l, u)| l + (u - l) * rng.random::<f64>())
        .collect()
}

/// Seed passed to [`minimize`] for restart `k` of [`multistart_minimize`].
pub fn multistart_seed(seed: u64, k: usize) -> u64 {
    derive_seed(seed, &[k as u64, 1])
}

/// Best of `n_starts` independent runs plus every per-run trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultistartTrace {
    pub best: OptimizationTrace,
    pub best_index: usize,
    pub runs: Vec<OptimizationTrace>,
}

pub fn multistart_minimize(
    problem: &OptimizationProblem,
    mut objective: impl FnMut(&[f64]) -> f64,
    n_starts: usize,
    seed: u64,
) -> Result<MultistartTrace> {
    if n_starts == 0 {
        return Err(validation("need at least one start"));
    }
    let mut runs = Vec::with_capacity(n_starts);
    for k in 0..n_starts {
        let start = multistart_start(problem, seed, k);
        runs.push(minimize(problem, &mut objective, &start, multistart_seed(seed, k))?);
    }
    let best_index = (0..n_starts)
        .min_by(|&a, &b| runs[a].best_value.total_cmp(&runs[b].best_value))
        .unwrap_or(0);
    Ok(MultistartTrace { best: runs[best_index].clone(), best_index, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::cell::RefCell;
    use std::f64::consts::TAU;

    #[test]
    fn one_dimensional_quadratic() {
        let p = OptimizationProblem::uniform_box(1, 0.0, TAU, 200).with_tolerance(1e-10);
        let t = minimize(&p, |x| (x[0] - 1.0).powi(2), &[0.0], 1).unwrap();
        assert_abs_diff_eq!(t.best_params[0], 1.0, epsilon = 1e-3);
        assert!(t.evaluations_used <= 200);
    }

    #[test]
    fn flat_objective_stops_on_tolerance() {
        let p = OptimizationProblem::uniform_box(3, 0.0, TAU, 500);
        let t = minimize(&p, |_| 0.7, &[1.0, 1.0, 1.0], 3).unwrap();
        assert_eq!(t.best_value, 0.7);
        assert!(t.converged);
        assert!(t.evaluations_used < 500);
    }

    #[test]
    fn budget_is_respected_and_best_not_worse_than_start() {
        let p = OptimizationProblem::uniform_box(4, -2.0, 2.0, 40).with_tolerance(0.0);
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>() + x[0].sin();
        let start = [1.5, -1.0, 0.2, 0.9];
        let t = minimize(&p, f, &start, 5).unwrap();
        assert_eq!(t.evaluations_used, 40);
        assert_eq!(t.history.len(), 40);
        assert!(t.best_value <= f(&start));
    }

    #[test]
    fn every_evaluation_inside_box() {
        let p = OptimizationProblem::new(vec![0.0, -1.0], vec![0.5, 1.0], 300);
        let seen = RefCell::new(Vec::new());
        // Minimum sits outside the box, pulling the simplex onto the boundary.
        let f = |x: &[f64]| {
            seen.borrow_mut().push(x.to_vec());
            (x[0] - 3.0).powi(2) + (x[1] + 4.0).powi(2)
        };
        let t = minimize(&p, f, &[0.1, 0.0], 11).unwrap();
        for x in seen.borrow().iter() {
            assert!((0.0..=0.5).contains(&x[0]) && (-1.0..=1.0).contains(&x[1]));
        }
        assert_abs_diff_eq!(t.best_params[0], 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(t.best_params[1], -1.0, epsilon = 1e-3);
    }

    #[test]
    fn non_finite_objective_aborts() {
        let p = OptimizationProblem::uniform_box(2, 0.0, 1.0, 50);
        let err = minimize(&p, |x| if x[0] > 0.15 { f64::NAN } else { x[0] }, &[0.1, 0.1], 0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn invalid_problems_rejected() {
        let p = OptimizationProblem::uniform_box(2, 0.0, 1.0, 3);
        assert!(minimize(&p, |_| 0.0, &[0.5, 0.5], 0).is_err());
        let p = OptimizationProblem::uniform_box(2, 0.0, 1.0, 30);
        assert!(minimize(&p, |_| 0.0, &[1.5, 0.5], 0).is_err());
        let p = OptimizationProblem::new(vec![1.0], vec![0.0], 30);
        assert!(minimize(&p, |_| 0.0, &[0.5], 0).is_err());
    }

    #[test]
    fn trace_is_reproducible_for_fixed_seed() {
        let p = OptimizationProblem::uniform_box(3, 0.0, TAU, 150);
        let f = |x: &[f64]| x.iter().map(|v| v.sin()).sum::<f64>();
        let a = minimize(&p, f, &[1.0, 2.0, 3.0], 42).unwrap();
        let b = minimize(&p, f, &[1.0, 2.0, 3.0], 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multistart_single_start_equals_minimize() {
        let p = OptimizationProblem::uniform_box(2, 0.0, TAU, 120);
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] - 4.0).powi(2);
        let m = multistart_minimize(&p, f, 1, 17).unwrap();
        let direct = minimize(&p, f, &multistart_start(&p, 17, 0), multistart_seed(17, 0)).unwrap();
        assert_eq!(m.best, direct);
    }

    #[test]
    fn multistart_convex_runs_agree() {
        let p = OptimizationProblem::uniform_box(2, 0.0, TAU, 400).with_tolerance(1e-12);
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + 3.0 * (x[1] - 4.0).powi(2);
        let m = multistart_minimize(&p, f, 5, 8).unwrap();
        for run in &m.runs {
            assert_abs_diff_eq!(run.best_params[0], 2.0, epsilon = 1e-3);
            assert_abs_diff_eq!(run.best_params[1], 4.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn multistart_keeps_best_run_on_multimodal_function() {
        let rastrigin = |x: &[f64]| {
            20.0 + x.iter().map(|v| v * v - 10.0 * (TAU * v).cos()).sum::<f64>()
        };
        let p = OptimizationProblem::uniform_box(2, -5.12, 5.12, 300);
        let m = multistart_minimize(&p, rastrigin, 5, 2).unwrap();
        let min_of_runs = m.runs.iter().map(|r| r.best_value).fold(f64::INFINITY, f64::min);
        assert_eq!(m.best.best_value, min_of_runs);
        assert!(m.runs.iter().all(|r| m.best.best_value <= r.best_value));
    }

    #[test]
    fn csv_export_has_running_minimum() {
        let p = OptimizationProblem::uniform_box(1, 0.0, 4.0, 30);
        let t = minimize(&p, |x| (x[0] - 2.5).powi(2), &[0.0], 0).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("evaluation,value,best_so_far"));
        let best: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(best.len(), t.evaluations_used);
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*best.last().unwrap(), t.best_value);
    }
}
