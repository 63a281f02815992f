//! Objectives, feasible sets, affine reparametrizations and datasets.

mod affine;
mod data;
mod objective;
mod sets;

use std::sync::Arc;

use nalgebra::SymmetricEigen;

pub use affine::AffineMap;
pub use data::{load_dataset_csv, synthesize_dataset, Dataset, Loss, Provenance, TaskKind};
pub use objective::{
    make_erm_objective, make_projection_objective, make_quadratic_objective, sigmoid, softplus, AffinePullback,
    EmpiricalRisk, Evaluator, KnownConstants, Objective, Projection, Quadratic,
};
pub use sets::{lmo_ball, lmo_ellipsoid, FeasibleSet, MEMBERSHIP_TOL};

use crate::geometry::{strong_convexity_oracle, ChordInset, ConvexBody, Gauge};
use crate::par::Sampling;
use crate::{Error, Matrix, Result, Vector};

/// `min_{x ∈ C} f(x)` with a feasible starting point.
#[derive(Clone, Debug)]
pub struct Problem {
    objective: Objective,
    set: FeasibleSet,
    x0: Vector,
    label: String,
}

impl Problem {
    pub fn new(objective: Objective, set: FeasibleSet, x0: Vector, label: impl Into<String>) -> Result<Self> {
        Error::check_dim(set.dim(), objective.dim())?;
        Error::check_dim(set.dim(), x0.len())?;
        if !set.contains(&x0) {
            return Err(Error::InvalidInput("starting point lies outside the feasible set".into()));
        }
        Ok(Self { objective, set, x0, label: label.into() })
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn fstar(&self) -> Option<f64> {
        self.objective.known().fstar
    }

    pub fn with_fstar(mut self, fstar: f64) -> Self {
        self.objective = self.objective.with_fstar(fstar);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Fresh copy with zeroed oracle counters.
    pub fn fresh(&self) -> Self {
        let p = self.clone();
        p.objective.reset_counters();
        p.set.reset_counters();
        p
    }
}

/// Radial projection of `x̄` onto the centered ball and the optimal value.
pub fn projection_optimum(target: &Vector, radius: f64) -> (Vector, f64) {
    let n = target.norm();
    if n <= radius {
        (target.clone(), 0.0)
    } else {
        (target * (radius / n), 0.5 * (n - radius).powi(2))
    }
}

/// `½‖x − x̄‖²` over the centered ball of `radius`, with the optimal value filled in.
pub fn projection_problem(target: Vector, radius: f64, x0: Vector, label: impl Into<String>) -> Result<Problem> {
    let (_, fstar) = projection_optimum(&target, radius);
    let dim = target.len();
    let objective = make_projection_objective(target).with_fstar(fstar);
    Problem::new(objective, FeasibleSet::centered_ball(dim, radius)?, x0, label)
}

/// Reparametrizes `p` by `x = By + b`.
///
/// The new problem minimizes `f(By + b)` over `B⁻¹(C − b)`, starting from
/// `B⁻¹(x₀ − b)`. Iterates of the original problem are recovered with
/// [`AffineMap::apply`]. Constants are carried over: `f*` unchanged, the
/// Euclidean `L` and `μ` scaled by `σ_max²` and `σ_min²`.
pub fn transform_problem(p: &Problem, map: &AffineMap) -> Result<Problem> {
    Error::check_dim(p.dim(), map.dim())?;
    let known = p.objective().known();
    let pullback = AffinePullback::new(Arc::clone(p.objective().evaluator()), map.clone())?;
    let objective = Objective::new(
        pullback,
        KnownConstants {
            smoothness: known.smoothness.map(|l| l * map.sigma_max().powi(2)),
            strong_convexity: known.strong_convexity.map(|m| m * map.sigma_min().powi(2)),
            fstar: known.fstar,
            unconstrained_min: known.unconstrained_min,
        },
    );
    let set = p.set().pull_back(map)?;
    let mut x0 = map.invert(p.x0());
    if !set.contains(&x0) {
        // Pull a starting point that rounding nudged across the boundary back inside.
        let c = set.center().clone();
        let r = set.normalized_radius(&x0);
        x0 = &c + (&x0 - &c) / r;
    }
    Problem::new(objective, set, x0, format!("{}@cond={:.0e}", p.label(), map.condition_number()))
}

/// Unconstrained minimizer of a smooth convex objective by damped Newton steps.
///
/// Fails when the Hessian is unavailable or singular, or when the iterates run
/// off to infinity (e.g. logistic loss on separable data).
pub fn unconstrained_minimizer(objective: &Objective, start: &Vector) -> Result<Vector> {
    Error::check_dim(objective.dim(), start.len())?;
    let eval = objective.evaluator();
    let mut x = start.clone();
    for _ in 0..200 {
        let (value, grad) = eval.value_and_gradient(&x);
        let hessian =
            eval.hessian(&x).ok_or_else(|| Error::Estimation("objective has no Hessian for a Newton solve".into()))?;
        let step = hessian
            .cholesky()
            .ok_or_else(|| Error::Estimation("Hessian is not positive definite".into()))?
            .solve(&grad);
        let decrement = grad.dot(&step);
        let small_step = step.norm() <= 1e-6 * (1.0 + x.norm());
        if small_step && decrement <= 1e-14 * (1.0 + value.abs()) {
            return Ok(x - step);
        }
        let mut t = 1.0;
        while eval.value(&(&x - &step * t)) > value - 0.25 * t * decrement {
            t *= 0.5;
            if t < 1e-12 {
                // No certifiable decrease left: converged only if the step is already tiny.
                return if small_step { Ok(x) } else { Err(Error::Estimation("Newton line search failed".into())) };
            }
        }
        x -= step * t;
        if !(x.norm() < 1e8) {
            return Err(Error::Estimation("no finite unconstrained minimizer".into()));
        }
    }
    Err(Error::Estimation("Newton iterations did not converge".into()))
}

/// Empirical risk over the centered ball whose radius puts the unconstrained
/// minimizer at `ratio` times the radius, started at the origin.
pub fn erm_problem(dataset: &Dataset, loss: Loss, ratio: f64) -> Result<Problem> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidInput(format!("radius ratio must be positive, got {ratio}")));
    }
    let objective = make_erm_objective(dataset, loss)?;
    let d = dataset.dim();
    let xstar = unconstrained_minimizer(&objective, &Vector::zeros(d))?;
    let radius = xstar.norm() / ratio;
    if !(radius > 0.0) {
        return Err(Error::Data("unconstrained minimizer is at the origin; no radius fits".into()));
    }
    let label = format!("{}-erm(n={},d={d},ratio={ratio})", loss.name(), dataset.len());
    Problem::new(objective, FeasibleSet::centered_ball(d, radius)?, Vector::zeros(d), label)
}

/// Minimizer of `½xᵀHx + qᵀx + c` over `‖x‖ ≤ radius` for positive definite `H`.
///
/// Solves the trust-region secular equation `‖(H + λI)⁻¹q‖ = radius` by bisection.
pub fn quadratic_ball_minimum(hessian: &Matrix, linear: &Vector, constant: f64, radius: f64) -> Result<(Vector, f64)> {
    let d = linear.len();
    Error::check_dim(d, hessian.nrows())?;
    let eig = SymmetricEigen::new(hessian.clone());
    if !(eig.eigenvalues.min() > 0.0) {
        return Err(Error::InvalidInput("quadratic Hessian must be positive definite".into()));
    }
    let q = eig.eigenvectors.tr_mul(linear);
    let point_at = |lambda: f64| -> Vector {
        let coords = Vector::from_fn(d, |i, _| -q[i] / (eig.eigenvalues[i] + lambda));
        &eig.eigenvectors * coords
    };
    let value = |x: &Vector| 0.5 * x.dot(&(hessian * x)) + linear.dot(x) + constant;
    let free = point_at(0.0);
    if free.norm() <= radius {
        let v = value(&free);
        return Ok((free, v));
    }
    let (mut lo, mut hi) = (0.0, q.norm() / radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if point_at(mid).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let x = point_at(hi);
    let x = &x * (radius / x.norm()).min(1.0);
    let v = value(&x);
    Ok((x, v))
}

/// `(L, α, c)` for the projection problem over `½‖By‖² ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantTriple {
    pub smoothness: f64,
    pub alpha: f64,
    pub c: f64,
}

/// Closed-form constants next to independently measured ones.
#[derive(Clone, Copy, Debug)]
pub struct ExampleConstants {
    /// `(σ_max, σ_min/(√2 σ_max), σ_max(1 − ‖x̄‖))`, the textbook formulas.
    pub printed: ConstantTriple,
    /// Largest Hessian eigenvalue, sampled strong-convexity constant of the
    /// transformed set (halved inset, Euclidean gauge), and the sampled minimum
    /// of `‖∇f̃‖` over the transformed set.
    pub oracle: ConstantTriple,
}

/// Constants of `min ½‖By − x̄‖²` subject to `½‖By‖² ≤ 1`.
pub fn projection_example_constants(b: &Matrix, target: &Vector, sampling: Sampling) -> Result<ExampleConstants> {
    let map = AffineMap::linear(b.clone())?;
    Error::check_dim(map.dim(), target.len())?;
    let (smin, smax) = (map.sigma_min(), map.sigma_max());
    let printed =
        ConstantTriple { smoothness: smax, alpha: smin / (2f64.sqrt() * smax), c: smax * (1.0 - target.norm()) };
    let set = FeasibleSet::from_factor(b.clone(), Vector::zeros(map.dim()), 2f64.sqrt())?;
    let gauge = Gauge::euclidean(map.dim());
    let alpha = strong_convexity_oracle(&set, &gauge, ChordInset::Halved, sampling)?.alpha;
    let grad_norm = |y: &Vector| b.tr_mul(&(b * y - target)).norm();
    let c = sampling
        .map(|rng| {
            let u = crate::par::unit_direction(rng, map.dim());
            let edge = set.boundary_point(&u);
            let inner = set.random_member(rng);
            grad_norm(&edge).min(grad_norm(&inner))
        })
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let top = SymmetricEigen::new(b.tr_mul(b)).eigenvalues.max();
    Ok(ExampleConstants { printed, oracle: ConstantTriple { smoothness: top, alpha, c } })
}
