//! Estimators of the theoretical constants and checks of the convergence theory.

use std::ops::Range;

use rand::Rng;

use crate::geometry::{ConvexBody, Gauge, GaugeBody};
use crate::par::{unit_direction, Execution, Sampling};
use crate::problems::{transform_problem, AffineMap, Objective, Problem};
use crate::solver::{fw_run, StopCriteria, Trace};
use crate::stepsize::{build_strategy, ExactLineSearch, StrategyKind, StrategyParams};
use crate::{Error, Result, Vector};

/// Iterations skipped at the start of rate fits and step checks.
pub const BURN_IN: usize = 5;

/// `{2⁰, 2⁻¹, …, 2⁻²⁰}`.
pub fn default_h_grid() -> Vec<f64> {
    (0..=20).map(|i| 0.5f64.powi(i)).collect()
}

/// Frank-Wolfe direction and gap at `x`, or `None` where the gap vanishes.
fn fw_direction(problem: &Problem, x: &Vector) -> Result<Option<(f64, Vector, f64)>> {
    let eval = problem.objective().evaluator();
    let (f, g) = eval.value_and_gradient(x);
    let v = match problem.set().lmo_uncounted(&g) {
        Ok(v) => v,
        Err(Error::DegenerateGradient) => return Ok(None),
        Err(e) => return Err(e),
    };
    let d = v - x;
    let gap = -g.dot(&d);
    if !(gap > 0.0) {
        return Ok(None);
    }
    Ok(Some((f, d, gap)))
}

/// `2[f(x + hδ) − f(x) + h·gap] / (h²·gap)`, with a bound on its rounding error.
fn pointwise_constant(objective: &Objective, x: &Vector, f: f64, d: &Vector, gap: f64, h: f64) -> (f64, f64) {
    let eval = objective.evaluator();
    let moved = eval.value(&(x + d * h));
    let num = moved - f + h * gap;
    let scale = h * h * gap;
    let rounding = 4.0 * f64::EPSILON * (f.abs() + moved.abs() + h * gap + eval.gradient(x).norm() * x.norm());
    (2.0 * num / scale, 2.0 * rounding / scale)
}

/// Pointwise directional constant `2[f(x + hδ) − f(x) + h·gap]/(h²·gap)` for the
/// Frank-Wolfe direction at `x`; `None` where the gap vanishes.
pub fn pointwise_directional_constant(problem: &Problem, x: &Vector, h: f64) -> Result<Option<f64>> {
    Ok(fw_direction(problem, x)?.map(|(f, d, gap)| pointwise_constant(problem.objective(), x, f, &d, gap, h).0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessEstimate {
    pub value: f64,
    pub probes_used: usize,
    pub probes_skipped: usize,
    /// Probe index and step achieving the maximum.
    pub argmax: (usize, f64),
}

/// Largest pointwise constant over probes and an `h` grid.
///
/// Probes with zero gap are skipped, as are `(x, h)` pairs whose finite
/// difference is below rounding resolution (relative error above 1e-6).
/// `weight(x, f(x))` multiplies each pointwise value; the plain estimator uses 1.
fn estimate_weighted(
    problem: &Problem,
    probes: &[Vector],
    h_grid: &[f64],
    exec: Execution,
    weight: impl Fn(f64) -> f64 + Sync + Send,
) -> Result<SmoothnessEstimate> {
    if h_grid.iter().any(|h| !(*h > 0.0 && *h <= 1.0)) {
        return Err(Error::InvalidInput("step grid must lie in (0, 1]".into()));
    }
    let per_probe = exec.map(probes, |x| -> Result<Option<(f64, f64)>> {
        if !problem.set().contains(x) {
            return Err(Error::InvalidInput("probe point lies outside the feasible set".into()));
        }
        let Some((f, d, gap)) = fw_direction(problem, x)? else {
            return Ok(None);
        };
        let w = weight(f);
        let mut best: Option<(f64, f64)> = None;
        for &h in h_grid {
            let (value, err) = pointwise_constant(problem.objective(), x, f, &d, gap, h);
            if !value.is_finite() || err > 1e-6 * value.abs().max(1e-3) {
                continue;
            }
            let value = value * w;
            if best.is_none_or(|(b, _)| value > b) {
                best = Some((value, h));
            }
        }
        Ok(best)
    });
    let mut out = SmoothnessEstimate { value: f64::NEG_INFINITY, probes_used: 0, probes_skipped: 0, argmax: (0, 0.0) };
    for (i, r) in per_probe.into_iter().enumerate() {
        match r? {
            Some((v, h)) => {
                out.probes_used += 1;
                if v > out.value {
                    out.value = v;
                    out.argmax = (i, h);
                }
            }
            None => out.probes_skipped += 1,
        }
    }
    if out.probes_used == 0 {
        return Err(Error::Estimation("every probe had a zero gap or unresolvable differences".into()));
    }
    Ok(out)
}

/// Empirical directional smoothness constant `𝓛̂`.
pub fn estimate_directional_smoothness(
    problem: &Problem,
    probes: &[Vector],
    h_grid: &[f64],
    exec: Execution,
) -> Result<SmoothnessEstimate> {
    estimate_weighted(problem, probes, h_grid, exec, |_| 1.0)
}

/// Empirical modified constant: each pointwise value is scaled by `√((f(x) − f*)/h₀)`.
pub fn estimate_modified_smoothness(
    problem: &Problem,
    probes: &[Vector],
    h_grid: &[f64],
    exec: Execution,
) -> Result<SmoothnessEstimate> {
    let fstar =
        problem.fstar().ok_or_else(|| Error::InvalidInput("modified estimate needs a known optimal value".into()))?;
    let h0 = problem.objective().evaluator().value(problem.x0()) - fstar;
    if !(h0 > 0.0) {
        return Err(Error::InvalidInput("starting point is already optimal".into()));
    }
    estimate_weighted(problem, probes, h_grid, exec, move |f| ((f - fstar).max(0.0) / h0).sqrt())
}

/// Random members of the feasible set, half on the boundary, half inside.
pub fn random_probes(problem: &Problem, sampling: Sampling) -> Vec<Vector> {
    let set = problem.set();
    sampling.map(|rng| {
        if rng.random::<bool>() {
            set.boundary_point(&unit_direction(rng, set.dim()))
        } else {
            set.random_member(rng)
        }
    })
}

/// Iterates stored in a trace.
pub fn trajectory_probes(trace: &Trace) -> Vec<Vector> {
    trace.records.iter().filter_map(|r| r.x.clone()).collect()
}

/// Probe set used by default: an exact line-search trajectory plus `count` random members.
pub fn default_probes(problem: &Problem, count: usize, seed: u64) -> Result<Vec<Vector>> {
    let reference = fw_run(problem, &mut ExactLineSearch, &StopCriteria::iterations(500))?;
    let mut probes = trajectory_probes(&reference);
    probes.extend(random_probes(problem, Sampling::new(count, seed)));
    Ok(probes)
}

/// Optimal-value proxy: the best value of a long exact line-search run, which
/// stops early once the gap certifies it to `1e-13`.
pub fn reference_fstar(problem: &Problem, iters: usize) -> Result<f64> {
    let stop = StopCriteria::iterations(iters).with_gap_tol(1e-13).without_iterates();
    let trace = fw_run(problem, &mut ExactLineSearch, &stop)?;
    Ok(trace.records.iter().map(|r| r.value).fold(f64::INFINITY, f64::min))
}

/// Sampled lower-confidence value of `c_ω = inf_{x ∈ C} ω_*(−∇f(x))`.
pub fn estimate_c_omega(problem: &Problem, gauge: &Gauge, extra: &[Vector], sampling: Sampling) -> Result<f64> {
    Error::check_dim(problem.dim(), gauge.dim())?;
    let eval = problem.objective().evaluator();
    let dual_at = |x: &Vector| gauge.dual_unchecked(&-eval.gradient(x));
    let samples = random_probes(problem, sampling);
    let a = sampling.exec.min_of(&samples, dual_at);
    let b = sampling.exec.min_of(extra, dual_at);
    Ok(a.min(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantSource {
    Analytic,
    Oracle,
}

/// Constants of one gauge: smoothness, strong convexity, set constant (full
/// inset), lower bound on the dual gradient, asymmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryConstants {
    pub gauge: String,
    pub smoothness: f64,
    pub strong_convexity: Option<f64>,
    pub alpha: f64,
    pub c: f64,
    pub kappa: f64,
    pub source: ConstantSource,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

/// `L / (c·α)`, the bound on the directional smoothness constant.
pub fn theory_bound_linear(tc: &TheoryConstants) -> Result<f64> {
    Ok(positive("L", tc.smoothness)? / (positive("c", tc.c)? * positive("alpha", tc.alpha)?))
}

/// Smallest [`theory_bound_linear`] over several gauges.
pub fn best_bound_over_gauges(list: &[TheoryConstants]) -> Result<f64> {
    if list.is_empty() {
        return Err(Error::InvalidInput("need at least one gauge".into()));
    }
    list.iter().map(theory_bound_linear).try_fold(f64::INFINITY, |m, b| b.map(|b| m.min(b)))
}

/// Per-iteration contraction `max{1/2, 1 − 1/(2𝓛)}`.
pub fn theory_rate_linear(constant: f64) -> f64 {
    0.5f64.max(1.0 - 1.0 / (2.0 * constant))
}

/// `4h₀·max{1, 18𝓛̃²}/(k + 2)²`.
pub fn theory_rate_sublinear(h0: f64, constant: f64, k: usize) -> f64 {
    4.0 * h0 * 1f64.max(18.0 * constant * constant) / ((k + 2) as f64).powi(2)
}

/// `κ√2·L/(α√μ) · 1/√h₀`, the bound on the modified constant.
pub fn theory_bound_modified(tc: &TheoryConstants, h0: f64) -> Result<f64> {
    let mu = tc
        .strong_convexity
        .ok_or_else(|| Error::InvalidInput("modified bound needs a strong convexity constant".into()))?;
    Ok(positive("kappa", tc.kappa)? * 2f64.sqrt() * positive("L", tc.smoothness)?
        / (positive("alpha", tc.alpha)? * positive("mu", mu)?.sqrt())
        / positive("h0", h0)?.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// Fitted per-iteration contraction, for rate fits.
    pub empirical_rho: Option<f64>,
    pub theory_rho: Option<f64>,
    /// Constant of the `C/(k + 2)²` envelope, for recurrence checks.
    pub sublinear_c: Option<f64>,
    pub passed: bool,
    pub window: Range<usize>,
    /// First index at which a checked inequality failed.
    pub violation: Option<usize>,
    /// Smallest slack seen (negative means violated).
    pub worst_slack: f64,
}

/// Checks `h_{k+1} ≤ h_k·max{1/2, 1 − M√h_k}` (slack 1e-10) and
/// `h_k ≤ C/(k + 2)²` with `C = max{4h₀, 18/M²}`.
pub fn recurrence_check(primal_gaps: &[f64], m: f64) -> Result<RateReport> {
    positive("M", m)?;
    let Some(&h0) = primal_gaps.first() else {
        return Err(Error::InvalidInput("recurrence check needs primal gaps".into()));
    };
    let c = (4.0 * h0).max(18.0 / (m * m));
    let mut violation = None;
    let mut worst = f64::INFINITY;
    for (k, &h) in primal_gaps.iter().enumerate() {
        let env = c / ((k + 2) as f64).powi(2) - h;
        let step = primal_gaps
            .get(k + 1)
            .map(|&next| h * 0.5f64.max(1.0 - m * h.max(0.0).sqrt()) + 1e-10 - next)
            .unwrap_or(f64::INFINITY);
        let slack = env.min(step);
        worst = worst.min(slack);
        if (env < -1e-10 || step < 0.0) && violation.is_none() {
            violation = Some(if step < 0.0 { k + 1 } else { k });
        }
    }
    Ok(RateReport {
        empirical_rho: None,
        theory_rho: None,
        sublinear_c: Some(c),
        passed: violation.is_none(),
        window: 0..primal_gaps.len(),
        violation,
        worst_slack: worst,
    })
}

/// Checks `h_{k+1} ≤ max{1/2, 1 − 1/(2𝓛_k)}·h_k + 1e-12` using each step's accepted constant.
pub fn linear_step_check(trace: &Trace) -> Result<RateReport> {
    let h = trace
        .primal_gaps()
        .ok_or_else(|| Error::InvalidInput("linear step check needs a known optimal value".into()))?;
    let mut violation = None;
    let mut worst = f64::INFINITY;
    for (k, rec) in trace.steps().iter().enumerate() {
        let Some(c) = rec.constant else {
            return Err(Error::InvalidInput("linear step check needs accepted constants".into()));
        };
        let slack = theory_rate_linear(c) * h[k] + 1e-12 - h[k + 1];
        worst = worst.min(slack);
        if slack < 0.0 && violation.is_none() {
            violation = Some(k + 1);
        }
    }
    Ok(RateReport {
        empirical_rho: None,
        theory_rho: None,
        sublinear_c: None,
        passed: violation.is_none(),
        window: 0..h.len(),
        violation,
        worst_slack: worst,
    })
}

/// Geometric rate `exp(slope)` of a least-squares line through `log values[k]`.
///
/// The window is cut at the first nonpositive value; fewer than five
/// remaining points is an error. Passes when the fit is at most
/// `theory_rho + 0.02`.
pub fn rate_fit(values: &[f64], window: Range<usize>, theory_rho: f64) -> Result<RateReport> {
    let start = window.start.min(values.len());
    let end = window.end.min(values.len());
    let end = values[start..end].iter().position(|v| !(*v > 0.0)).map_or(end, |p| start + p);
    let n = end.saturating_sub(start);
    if n < 5 {
        return Err(Error::Estimation(format!("rate fit needs at least 5 positive points, found {n}")));
    }
    let ks: Vec<f64> = (start..end).map(|k| k as f64).collect();
    let ys: Vec<f64> = values[start..end].iter().map(|v| v.ln()).collect();
    let mk = ks.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = ks.iter().zip(&ys).map(|(k, y)| (k - mk) * (y - my)).sum();
    let sxx: f64 = ks.iter().map(|k| (k - mk).powi(2)).sum();
    let rho = (sxy / sxx).exp();
    Ok(RateReport {
        empirical_rho: Some(rho),
        theory_rho: Some(theory_rho),
        sublinear_c: None,
        passed: rho <= theory_rho + 0.02,
        window: start..end,
        violation: None,
        worst_slack: theory_rho + 0.02 - rho,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorstSlack {
    pub slack: f64,
    pub passed: bool,
}

impl WorstSlack {
    fn from_slack(slack: f64) -> Self {
        Self { slack, passed: slack >= -1e-9 }
    }
}

/// Worst slacks of the interpolation, gradient-upper and gradient-lower
/// inequalities over random samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityReport {
    /// `γf(x) + (1−γ)f(y) − f(z_γ) − μγ(1−γ)[(1−γ)ω²(x−y) + γω²(y−x)]/2`.
    pub interpolation: WorstSlack,
    /// `f(y) − f_min − ω_*²(−∇f(y))/(2L)` against the unconstrained minimum.
    pub gradient_upper: WorstSlack,
    /// `ω_*(∇f(x)) − √(μ/2)·√(f(x) − f*)` against the constrained optimum.
    pub gradient_lower: WorstSlack,
    pub samples: usize,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.interpolation.passed && self.gradient_upper.passed && self.gradient_lower.passed
    }
}

/// Samples `(x, y, γ)` in the set and evaluates the three inequalities with slack 1e-9.
///
/// The objective's known constants are Euclidean; they are rescaled for norm-ball
/// gauges of other radii. Other gauges are rejected.
pub fn inequality_suite(
    objective: &Objective,
    set: &dyn ConvexBody,
    gauge: &Gauge,
    sampling: Sampling,
) -> Result<InequalityReport> {
    Error::check_dim(set.dim(), objective.dim())?;
    Error::check_dim(set.dim(), gauge.dim())?;
    let known = objective.known();
    let (Some(l), Some(mu), Some(fstar), Some(fmin)) =
        (known.smoothness, known.strong_convexity, known.fstar, known.unconstrained_min)
    else {
        return Err(Error::InvalidInput("inequality suite needs known L, mu, f* and the unconstrained minimum".into()));
    };
    let GaugeBody::NormBall { radius } = gauge.body() else {
        return Err(Error::InvalidInput("known constants translate only to norm-ball gauges".into()));
    };
    let (l, mu) = (l * radius * radius, mu * radius * radius);
    let eval = objective.evaluator();
    let member = |rng: &mut rand_chacha::ChaCha8Rng| {
        if rng.random::<bool>() {
            set.boundary_point(&unit_direction(rng, set.dim()))
        } else {
            set.random_member(rng)
        }
    };
    let slacks = sampling.map(|rng| {
        let x = member(rng);
        let y = member(rng);
        let gamma: f64 = rng.random();
        let z = &x * gamma + &y * (1.0 - gamma);
        let diff = &x - &y;
        let (fw, bw) = (gauge.eval_unchecked(&diff), gauge.eval_unchecked(&-&diff));
        let interp = gamma * eval.value(&x) + (1.0 - gamma) * eval.value(&y)
            - eval.value(&z)
            - 0.5 * mu * gamma * (1.0 - gamma) * ((1.0 - gamma) * fw * fw + gamma * bw * bw);
        let (fy, gy) = eval.value_and_gradient(&y);
        let upper = fy - fmin - gauge.dual_unchecked(&-&gy).powi(2) / (2.0 * l);
        let (fx, gx) = eval.value_and_gradient(&x);
        let lower = gauge.dual_unchecked(&gx) - (0.5 * mu).sqrt() * (fx - fstar).max(0.0).sqrt();
        [interp, upper, lower]
    });
    let worst = |i: usize| slacks.iter().map(|s| s[i]).fold(f64::INFINITY, f64::min);
    Ok(InequalityReport {
        interpolation: WorstSlack::from_slack(worst(0)),
        gradient_upper: WorstSlack::from_slack(worst(1)),
        gradient_lower: WorstSlack::from_slack(worst(2)),
        samples: sampling.count,
    })
}

/// How closely a run on a reparametrized problem tracks the original.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceReport {
    pub strategy: StrategyKind,
    pub condition_number: f64,
    /// Records compared (the shorter run's length).
    pub compared: usize,
    /// `max_k ‖x_k − (By_k + b)‖ / ‖x_k‖`.
    pub iterate_deviation: f64,
    /// `max_k |γ_k − γ̃_k| / γ_k`.
    pub step_deviation: f64,
    /// `max_k |𝓛_k − 𝓛̃_k| / 𝓛_k`, for strategies that keep a constant.
    pub constant_deviation: Option<f64>,
    /// Largest running constant in the original and transformed runs.
    pub max_constants: Option<(f64, f64)>,
    pub original: Trace,
    pub transformed: Trace,
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
    }
}

/// Runs `kind` on `problem` and on its reparametrization by `map` for `iters`
/// iterations, then compares iterates (mapped back), steps and constants.
pub fn affine_covariance_report(
    problem: &Problem,
    map: &AffineMap,
    kind: StrategyKind,
    params: &StrategyParams,
    iters: usize,
) -> Result<CovarianceReport> {
    let transformed = transform_problem(problem, map)?;
    let stop = StopCriteria::iterations(iters);
    let original = fw_run(problem, build_strategy(kind, params, problem)?.as_mut(), &stop)?;
    let other = fw_run(&transformed, build_strategy(kind, params, &transformed)?.as_mut(), &stop)?;
    Ok(compare_runs(kind, map, original, other))
}

/// Compares a run with one on the problem reparametrized by `map`, over their common prefix.
pub fn compare_runs(kind: StrategyKind, map: &AffineMap, original: Trace, transformed: Trace) -> CovarianceReport {
    let n = original.records.len().min(transformed.records.len());
    let mut iterate_deviation: f64 = 0.0;
    let mut step_deviation: f64 = 0.0;
    let mut constant_deviation: Option<f64> = None;
    for (a, b) in original.records[..n].iter().zip(&transformed.records[..n]) {
        if let (Some(x), Some(y)) = (&a.x, &b.x) {
            let back = map.apply(y);
            let scale = if x.norm() > 0.0 { x.norm() } else { 1.0 };
            iterate_deviation = iterate_deviation.max((x - back).norm() / scale);
        }
    }
    let steps = original.steps().len().min(transformed.steps().len());
    for (a, b) in original.steps()[..steps].iter().zip(&transformed.steps()[..steps]) {
        step_deviation = step_deviation.max(relative(a.gamma, b.gamma));
        if let (Some(ca), Some(cb)) = (a.constant, b.constant) {
            constant_deviation = Some(constant_deviation.unwrap_or(0.0).max(relative(ca, cb)));
        }
    }
    let max_const = |t: &Trace| t.records.iter().filter_map(|r| r.constant).reduce(f64::max);
    let max_constants = max_const(&original).zip(max_const(&transformed));
    CovarianceReport {
        strategy: kind,
        condition_number: map.condition_number(),
        compared: n,
        iterate_deviation,
        step_deviation,
        constant_deviation,
        max_constants,
        original,
        transformed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn tc(l: f64, c: f64, alpha: f64) -> TheoryConstants {
        TheoryConstants {
            gauge: "l2".into(),
            smoothness: l,
            strong_convexity: Some(1.0),
            alpha,
            c,
            kappa: 1.0,
            source: ConstantSource::Analytic,
        }
    }

    #[test]
    fn bound_formulas() {
        assert_relative_eq!(theory_bound_linear(&tc(1.0, 1.0, 1.0)).unwrap(), 1.0);
        assert_relative_eq!(theory_bound_linear(&tc(1.0, 0.5, 0.5)).unwrap(), 4.0);
        assert!(theory_bound_linear(&tc(1.0, 0.0, 0.5)).is_err());
        assert_relative_eq!(best_bound_over_gauges(&[tc(1.0, 1.0, 1.0), tc(1.0, 0.5, 0.5)]).unwrap(), 1.0);
        assert!(best_bound_over_gauges(&[]).is_err());
        assert_relative_eq!(theory_rate_linear(1.0), 0.5);
        assert_relative_eq!(theory_rate_linear(10.0), 0.95);
        assert_relative_eq!(theory_rate_sublinear(1.0, 1.0, 0), 18.0);
        let m = tc(1.0, 1.0, 1.0 / 2f64.sqrt());
        assert_relative_eq!(theory_bound_modified(&m, 2.0).unwrap(), 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(
            theory_bound_modified(&m, 4.0).unwrap() * 2f64.sqrt(),
            theory_bound_modified(&m, 2.0).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn rate_fit_examples() {
        let geo: Vec<f64> = (0..40).map(|k| 0.9f64.powi(k)).collect();
        let r = rate_fit(&geo, 5..40, 0.9).unwrap();
        assert_relative_eq!(r.empirical_rho.unwrap(), 0.9, max_relative = 1e-12);
        assert!(r.passed);
        let flat = vec![2.0; 20];
        assert_relative_eq!(rate_fit(&flat, 5..20, 0.5).unwrap().empirical_rho.unwrap(), 1.0);
        let mut cut = geo.clone();
        cut[8] = 0.0;
        assert!(rate_fit(&cut, 5..40, 0.9).is_err());
    }

    #[test]
    fn recurrence_examples() {
        assert!(recurrence_check(&[0.0; 10], 1.0).unwrap().passed);
        let h = [1.0, 0.6, 0.4, 0.45, 0.2];
        let r = recurrence_check(&h, 0.1).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violation, Some(3));
        assert!(recurrence_check(&[], 1.0).is_err());
    }

    #[test]
    fn pointwise_constant_on_centered_quadratic() {
        let p = crate::problems::projection_problem(dvector![0.0, 0.0], 1.0, dvector![1.0, 0.0], "q").unwrap();
        for h in [1.0, 0.5, 0.25] {
            let v = pointwise_directional_constant(&p, &dvector![1.0, 0.0], h).unwrap().unwrap();
            assert_relative_eq!(v, 2.0, max_relative = 1e-12);
        }
    }
}
