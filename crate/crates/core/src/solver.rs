//! The Frank-Wolfe loop.

use std::time::{Duration, Instant};

use crate::par::Execution;
use crate::problems::Problem;
use crate::stepsize::{StepContext, StepOutcome, StepStrategy};
use crate::{Error, Result, Vector};

#[derive(Clone, Debug, PartialEq)]
pub struct StopCriteria {
    pub max_iters: usize,
    pub gap_tol: f64,
    pub wall_budget: Option<Duration>,
    /// Store every iterate in the trace. Turn off for very long runs.
    pub keep_iterates: bool,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self { max_iters: 1000, gap_tol: 1e-10, wall_budget: None, keep_iterates: true }
    }
}

impl StopCriteria {
    pub fn iterations(max_iters: usize) -> Self {
        Self { max_iters, ..Self::default() }
    }

    pub fn with_gap_tol(mut self, gap_tol: f64) -> Self {
        self.gap_tol = gap_tol;
        self
    }

    pub fn without_iterates(mut self) -> Self {
        self.keep_iterates = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !(self.gap_tol >= 0.0) {
            return Err(Error::InvalidInput(format!("gap tolerance must be nonnegative, got {}", self.gap_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    GapTol,
    MaxIters,
    Budget,
    DegenerateGradient,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::GapTol => "gap_tol",
            Termination::MaxIters => "max_iters",
            Termination::Budget => "budget",
            Termination::DegenerateGradient => "degenerate_gradient",
        }
    }
}

/// State at iteration `k` and the step taken from it.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Option<Vector>,
    pub value: f64,
    pub gap: f64,
    /// `f(x_k) − f*`, when the optimal value is known.
    pub primal_gap: Option<f64>,
    /// Step taken from `x_k`; zero on the final record.
    pub gamma: f64,
    /// Strategy's running constant after choosing the step.
    pub constant: Option<f64>,
    /// Cumulative oracle counts up to and including this iteration's step.
    pub lmo_calls: u64,
    pub f_evals: u64,
    pub grad_evals: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub records: Vec<IterateRecord>,
    pub problem: String,
    pub strategy: String,
    pub terminated_by: Termination,
}

impl Trace {
    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("traces hold at least one record")
    }

    /// Records that took a step, i.e. all but the final one.
    pub fn steps(&self) -> &[IterateRecord] {
        &self.records[..self.records.len().saturating_sub(1)]
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gap).collect()
    }

    pub fn primal_gaps(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.primal_gap).collect()
    }

    pub fn iterates(&self) -> Option<Vec<Vector>> {
        self.records.iter().map(|r| r.x.clone()).collect()
    }

    /// First iteration index whose gap is at most `tol`.
    pub fn first_gap_below(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| r.gap <= tol).map(|r| r.k)
    }
}

/// `⟨−∇f(x), v(x) − x⟩` with `v(x)` from the (uncounted) oracle.
pub fn fw_gap(problem: &Problem, x: &Vector) -> Result<f64> {
    Error::check_dim(problem.dim(), x.len())?;
    let g = problem.objective().evaluator().gradient(x);
    match problem.set().lmo_uncounted(&g) {
        Ok(v) => Ok(-g.dot(&(v - x))),
        Err(Error::DegenerateGradient) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `(1 − γ)x + γv`.
pub fn convex_update(x: &Vector, v: &Vector, gamma: f64) -> Result<Vector> {
    Error::check_dim(x.len(), v.len())?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidInput(format!("step {gamma} is outside [0, 1]")));
    }
    Ok(x * (1.0 - gamma) + v * gamma)
}

/// Runs Frank-Wolfe from the problem's starting point.
///
/// Each iteration evaluates the gradient, calls the oracle, measures the gap,
/// stops if the gap is at most `gap_tol`, asks the strategy for a step and
/// updates. The trace ends with a record of the last iterate.
pub fn fw_run(problem: &Problem, strategy: &mut dyn StepStrategy, stop: &StopCriteria) -> Result<Trace> {
    stop.validate()?;
    let problem = problem.fresh();
    let objective = problem.objective();
    let set = problem.set();
    let fstar = problem.fstar();
    let started = Instant::now();
    let mut records = Vec::new();
    let mut x = problem.x0().clone();
    let mut k = 0;
    let terminated_by = loop {
        let (value, grad) = objective.value_and_gradient(&x);
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Strategy { iteration: k, source: Box::new(Error::NonFinite) });
        }
        let mut record = IterateRecord {
            k,
            x: stop.keep_iterates.then(|| x.clone()),
            value,
            gap: 0.0,
            primal_gap: fstar.map(|f| value - f),
            gamma: 0.0,
            constant: None,
            lmo_calls: 0,
            f_evals: 0,
            grad_evals: 0,
        };
        let counters = |r: &mut IterateRecord| {
            r.lmo_calls = set.lmo_calls();
            r.f_evals = objective.value_count();
            r.grad_evals = objective.gradient_count();
        };
        let vertex = match set.lmo(&grad) {
            Ok(v) => v,
            Err(Error::DegenerateGradient) => {
                counters(&mut record);
                records.push(record);
                break Termination::DegenerateGradient;
            }
            Err(e) => return Err(e),
        };
        let gap = -grad.dot(&(&vertex - &x));
        if gap < -1e-12 * (1.0 + value.abs()) {
            return Err(Error::NegativeGap { iteration: k, gap });
        }
        record.gap = gap;
        let halt = if gap <= stop.gap_tol {
            Some(Termination::GapTol)
        } else if k >= stop.max_iters {
            Some(Termination::MaxIters)
        } else if stop.wall_budget.is_some_and(|b| started.elapsed() >= b) {
            Some(Termination::Budget)
        } else {
            None
        };
        if let Some(t) = halt {
            counters(&mut record);
            records.push(record);
            break t;
        }
        let ctx = StepContext { x: &x, vertex: &vertex, grad: &grad, value, iteration: k, gap };
        let outcome =
            strategy.step(&ctx, objective).map_err(|e| Error::Strategy { iteration: k, source: Box::new(e) })?;
        let decision = match outcome {
            StepOutcome::Step(d) => d,
            StepOutcome::Converged => {
                counters(&mut record);
                records.push(record);
                break Termination::GapTol;
            }
        };
        record.gamma = decision.gamma;
        record.constant = decision.constant;
        counters(&mut record);
        records.push(record);
        x = convex_update(&x, &vertex, decision.gamma)
            .map_err(|e| Error::Strategy { iteration: k, source: Box::new(e) })?;
        k += 1;
        if !set.contains(&x) {
            return Err(Error::InfeasibleIterate { iteration: k });
        }
    };
    Ok(Trace { records, problem: problem.label().to_string(), strategy: strategy.label(), terminated_by })
}

/// One cell of a batch: a problem, a strategy factory and stop criteria.
pub struct Job<'a> {
    pub problem: &'a Problem,
    pub strategy: Box<dyn Fn() -> Result<Box<dyn StepStrategy>> + Send + Sync + 'a>,
    pub stop: StopCriteria,
}

/// Runs independent jobs, in parallel when `exec` allows; results keep input order.
pub fn run_batch(jobs: &[Job<'_>], exec: Execution) -> Vec<Result<Trace>> {
    exec.map(jobs, |job| {
        let mut strategy = (job.strategy)()?;
        fw_run(job.problem, strategy.as_mut(), &job.stop)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::projection_problem;
    use crate::stepsize::{ExactLineSearch, Scheduled};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn convex_update_examples() {
        let (x, v) = (dvector![0.0, 0.0], dvector![2.0, 0.0]);
        assert_eq!(convex_update(&x, &v, 0.0).unwrap(), x);
        assert_eq!(convex_update(&x, &v, 1.0).unwrap(), v);
        assert_eq!(convex_update(&x, &v, 0.5).unwrap(), dvector![1.0, 0.0]);
        assert!(convex_update(&x, &v, 1.5).is_err());
        assert!(convex_update(&x, &v, -0.1).is_err());
    }

    #[test]
    fn gap_examples() {
        let p = projection_problem(dvector![2.0, 0.0], 1.0, dvector![0.0, 0.0], "p").unwrap();
        assert_relative_eq!(fw_gap(&p, &dvector![0.0, 0.0]).unwrap(), 2.0);
        assert_relative_eq!(fw_gap(&p, &dvector![1.0, 0.0]).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn one_exact_step_reaches_boundary_optimum() {
        let p = projection_problem(dvector![2.0, 0.0], 1.0, dvector![0.0, 0.0], "p").unwrap();
        let t = fw_run(&p, &mut ExactLineSearch, &StopCriteria::default()).unwrap();
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.records[1].x.as_ref().unwrap(), &dvector![1.0, 0.0]);
        assert_eq!(t.records[1].gap, 0.0);
        assert_eq!(t.terminated_by, Termination::GapTol);
    }

    #[test]
    fn optimal_start_gives_single_record() {
        let p = projection_problem(dvector![2.0, 0.0], 1.0, dvector![1.0, 0.0], "p").unwrap();
        let t = fw_run(&p, &mut Scheduled, &StopCriteria::default()).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.terminated_by, Termination::GapTol);
    }

    #[test]
    fn iteration_cap_bounds_records() {
        let p = projection_problem(dvector![0.2, 0.1], 1.0, dvector![0.0, 0.0], "p").unwrap();
        let t = fw_run(&p, &mut Scheduled, &StopCriteria::iterations(3)).unwrap();
        assert_eq!(t.records.len(), 4);
        assert_eq!(t.terminated_by, Termination::MaxIters);
        assert!(t.records.iter().enumerate().all(|(i, r)| r.k == i));
    }

    #[test]
    fn degenerate_gradient_terminates() {
        let p = projection_problem(dvector![0.2, 0.0], 1.0, dvector![0.2, 0.0], "p").unwrap();
        let t = fw_run(&p, &mut Scheduled, &StopCriteria::default()).unwrap();
        assert_eq!(t.terminated_by, Termination::DegenerateGradient);
        assert_eq!(t.records.len(), 1);
    }
}
