use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::SymmetricEigen;

use super::affine::AffineMap;
use super::data::{Dataset, Loss};
use crate::{Error, Matrix, Result, Vector};

/// Value and gradient of a differentiable function on `ℝᵈ`.
pub trait Evaluator: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        (self.value(x), self.gradient(x))
    }

    /// `dᵀ H d` for objectives with a constant Hessian `H`.
    fn curvature(&self, _d: &Vector) -> Option<f64> {
        None
    }

    /// Hessian at `x`, when cheap to form.
    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        None
    }
}

/// Constants known in closed form for an objective, all w.r.t. the Euclidean norm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KnownConstants {
    /// Gradient Lipschitz constant `L`.
    pub smoothness: Option<f64>,
    /// Strong convexity modulus `μ`.
    pub strong_convexity: Option<f64>,
    /// Optimal value over the feasible set.
    pub fstar: Option<f64>,
    /// Optimal value without constraints.
    pub unconstrained_min: Option<f64>,
}

/// An evaluator with known constants and call counters.
pub struct Objective {
    evaluator: Arc<dyn Evaluator>,
    known: KnownConstants,
    evals: AtomicU64,
    grads: AtomicU64,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("evaluator", &self.evaluator)
            .field("known", &self.known)
            .field("evals", &self.evals.load(Ordering::Relaxed))
            .field("grads", &self.grads.load(Ordering::Relaxed))
            .finish()
    }
}

impl Clone for Objective {
    fn clone(&self) -> Self {
        Self {
            evaluator: Arc::clone(&self.evaluator),
            known: self.known,
            evals: AtomicU64::new(self.evals.load(Ordering::Relaxed)),
            grads: AtomicU64::new(self.grads.load(Ordering::Relaxed)),
        }
    }
}

impl Objective {
    pub fn new(evaluator: impl Evaluator + 'static, known: KnownConstants) -> Self {
        Self::from_arc(Arc::new(evaluator), known)
    }

    pub fn from_arc(evaluator: Arc<dyn Evaluator>, known: KnownConstants) -> Self {
        Self { evaluator, known, evals: AtomicU64::new(0), grads: AtomicU64::new(0) }
    }

    pub fn dim(&self) -> usize {
        self.evaluator.dim()
    }

    pub fn evaluator(&self) -> &Arc<dyn Evaluator> {
        &self.evaluator
    }

    pub fn known(&self) -> &KnownConstants {
        &self.known
    }

    pub fn with_known(mut self, known: KnownConstants) -> Self {
        self.known = known;
        self
    }

    pub fn with_fstar(mut self, fstar: f64) -> Self {
        self.known.fstar = Some(fstar);
        self
    }

    pub fn value(&self, x: &Vector) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.evaluator.value(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        debug_assert_eq!(x.len(), self.dim());
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.evaluator.gradient(x)
    }

    /// Counts as one value and one gradient evaluation.
    pub fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        debug_assert_eq!(x.len(), self.dim());
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.evaluator.value_and_gradient(x)
    }

    pub fn curvature(&self, d: &Vector) -> Option<f64> {
        self.evaluator.curvature(d)
    }

    pub fn hessian(&self, x: &Vector) -> Option<Matrix> {
        self.evaluator.hessian(x)
    }

    pub fn value_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn gradient_count(&self) -> u64 {
        self.grads.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.evals.store(0, Ordering::Relaxed);
        self.grads.store(0, Ordering::Relaxed);
    }
}

/// `½‖x − x̄‖²`.
#[derive(Clone, Debug)]
pub struct Projection {
    pub target: Vector,
}

impl Evaluator for Projection {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * (x - &self.target).norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        x - &self.target
    }

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let g = x - &self.target;
        (0.5 * g.norm_squared(), g)
    }

    fn curvature(&self, d: &Vector) -> Option<f64> {
        Some(d.norm_squared())
    }

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        Some(Matrix::identity(self.dim(), self.dim()))
    }
}

/// Projection objective `½‖x − x̄‖²` with `L = μ = 1` and unconstrained minimum 0.
pub fn make_projection_objective(target: Vector) -> Objective {
    Objective::new(
        Projection { target },
        KnownConstants {
            smoothness: Some(1.0),
            strong_convexity: Some(1.0),
            fstar: None,
            unconstrained_min: Some(0.0),
        },
    )
}

/// `½xᵀHx + qᵀx + c` with symmetric `H`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub hessian: Matrix,
    pub linear: Vector,
    pub constant: f64,
}

impl Evaluator for Quadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x) + self.constant
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.hessian * x + &self.linear
    }

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let hx = &self.hessian * x;
        (0.5 * x.dot(&hx) + self.linear.dot(x) + self.constant, hx + &self.linear)
    }

    fn curvature(&self, d: &Vector) -> Option<f64> {
        Some(d.dot(&(&self.hessian * d)))
    }

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        Some(self.hessian.clone())
    }
}

/// Strongly convex quadratic with `L`, `μ` and the unconstrained minimum filled in.
pub fn make_quadratic_objective(hessian: Matrix, linear: Vector, constant: f64) -> Result<Objective> {
    let d = linear.len();
    if hessian.nrows() != d || hessian.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: hessian.nrows() });
    }
    if (&hessian - hessian.transpose()).amax() > 1e-12 * (1.0 + hessian.amax()) {
        return Err(Error::InvalidInput("quadratic Hessian must be symmetric".into()));
    }
    let eig = SymmetricEigen::new(hessian.clone());
    let mu = eig.eigenvalues.min();
    let l = eig.eigenvalues.max();
    if !(mu > 0.0) {
        return Err(Error::InvalidInput("quadratic Hessian must be positive definite".into()));
    }
    let xmin = -hessian
        .clone()
        .lu()
        .solve(&linear)
        .ok_or_else(|| Error::InvalidInput("quadratic Hessian is singular".into()))?;
    let q = Quadratic { hessian, linear, constant };
    let unconstrained = q.value(&xmin);
    Ok(Objective::new(
        q,
        KnownConstants {
            smoothness: Some(l),
            strong_convexity: Some(mu),
            fstar: None,
            unconstrained_min: Some(unconstrained),
        },
    ))
}

/// `(1/n) Σ l(a_iᵀx, y_i)` over a dataset.
#[derive(Clone, Debug)]
pub struct EmpiricalRisk {
    features: Matrix,
    labels: Vector,
    loss: Loss,
}

impl EmpiricalRisk {
    pub fn loss(&self) -> Loss {
        self.loss
    }

    fn n(&self) -> f64 {
        self.features.nrows() as f64
    }
}

/// `log(1 + eᵗ)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + e⁻ᵗ)` without overflow.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Evaluator for EmpiricalRisk {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        let scores = &self.features * x;
        let total: f64 = match self.loss {
            Loss::Quadratic => scores.iter().zip(self.labels.iter()).map(|(s, y)| 0.5 * (s - y).powi(2)).sum(),
            Loss::Logistic => scores.iter().zip(self.labels.iter()).map(|(s, y)| softplus(-y * s)).sum(),
        };
        total / self.n()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let scores = &self.features * x;
        let n = self.n();
        let (value, residual): (f64, Vector) = match self.loss {
            Loss::Quadratic => {
                let r = &scores - &self.labels;
                (0.5 * r.norm_squared() / n, r)
            }
            Loss::Logistic => {
                let v = scores.iter().zip(self.labels.iter()).map(|(s, y)| softplus(-y * s)).sum::<f64>() / n;
                let r = Vector::from_iterator(
                    scores.len(),
                    scores.iter().zip(self.labels.iter()).map(|(s, y)| -y * sigmoid(-y * s)),
                );
                (v, r)
            }
        };
        (value, self.features.tr_mul(&residual) / n)
    }

    fn curvature(&self, d: &Vector) -> Option<f64> {
        match self.loss {
            Loss::Quadratic => Some((&self.features * d).norm_squared() / self.n()),
            Loss::Logistic => None,
        }
    }

    fn hessian(&self, x: &Vector) -> Option<Matrix> {
        let n = self.n();
        match self.loss {
            Loss::Quadratic => Some(self.features.tr_mul(&self.features) / n),
            Loss::Logistic => {
                let scores = &self.features * x;
                let mut weighted = self.features.clone();
                for (i, s) in scores.iter().enumerate() {
                    let p = sigmoid(*s);
                    weighted.row_mut(i).scale_mut(p * (1.0 - p));
                }
                Some(self.features.tr_mul(&weighted) / n)
            }
        }
    }
}

/// Empirical risk with `L = λ_max(AᵀA)/n`, quartered for the logistic loss.
pub fn make_erm_objective(dataset: &Dataset, loss: Loss) -> Result<Objective> {
    dataset.validate_for(loss)?;
    let features = dataset.features().clone();
    let n = features.nrows() as f64;
    let gram = features.tr_mul(&features);
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.max() / n;
    let bottom = eig.eigenvalues.min() / n;
    let known = match loss {
        Loss::Quadratic => KnownConstants {
            smoothness: Some(top),
            strong_convexity: (bottom > 0.0).then_some(bottom),
            ..Default::default()
        },
        Loss::Logistic => KnownConstants { smoothness: Some(top / 4.0), ..Default::default() },
    };
    Ok(Objective::new(EmpiricalRisk { features, labels: dataset.labels().clone(), loss }, known))
}

/// `y ↦ f(By + b)`.
#[derive(Clone, Debug)]
pub struct AffinePullback {
    inner: Arc<dyn Evaluator>,
    map: AffineMap,
}

impl AffinePullback {
    pub fn new(inner: Arc<dyn Evaluator>, map: AffineMap) -> Result<Self> {
        Error::check_dim(inner.dim(), map.dim())?;
        Ok(Self { inner, map })
    }
}

impl Evaluator for AffinePullback {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn value(&self, y: &Vector) -> f64 {
        self.inner.value(&self.map.apply(y))
    }

    fn gradient(&self, y: &Vector) -> Vector {
        self.map.matrix().tr_mul(&self.inner.gradient(&self.map.apply(y)))
    }

    fn value_and_gradient(&self, y: &Vector) -> (f64, Vector) {
        let (v, g) = self.inner.value_and_gradient(&self.map.apply(y));
        (v, self.map.matrix().tr_mul(&g))
    }

    fn curvature(&self, d: &Vector) -> Option<f64> {
        self.inner.curvature(&(self.map.matrix() * d))
    }

    fn hessian(&self, y: &Vector) -> Option<Matrix> {
        let b = self.map.matrix();
        self.inner.hessian(&self.map.apply(y)).map(|h| b.transpose() * h * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn counters_increase_by_one_per_call() {
        let f = make_projection_objective(dvector![1.0, 2.0]);
        let x = dvector![0.0, 0.0];
        f.value(&x);
        assert_eq!((f.value_count(), f.gradient_count()), (1, 0));
        f.gradient(&x);
        assert_eq!((f.value_count(), f.gradient_count()), (1, 1));
        f.value_and_gradient(&x);
        assert_eq!((f.value_count(), f.gradient_count()), (2, 2));
    }

    #[test]
    fn stable_logistic_pieces() {
        assert_relative_eq!(softplus(0.0), 2f64.ln());
        assert_relative_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert_relative_eq!(sigmoid(-800.0), 0.0);
        assert_relative_eq!(sigmoid(800.0), 1.0);
        assert_relative_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn quadratic_constants() {
        let f = make_quadratic_objective(dmatrix![2.0, 0.0; 0.0, 8.0], dvector![2.0, 0.0], 0.0).unwrap();
        assert_eq!(f.known().smoothness, Some(8.0));
        assert_eq!(f.known().strong_convexity, Some(2.0));
        assert_relative_eq!(f.known().unconstrained_min.unwrap(), -1.0);
        assert!(make_quadratic_objective(dmatrix![1.0, 0.0; 0.0, 0.0], dvector![0.0, 0.0], 0.0).is_err());
    }
}
