//! Built-in problem battery and the named verification criteria.
//!
//! Every criterion returns a [`CriterionResult`] instead of panicking, so the
//! same code drives the acceptance tests and the command-line `verify` table.

use std::time::{Duration, Instant};

use nalgebra::dvector;

use crate::analysis::{
    affine_covariance_report, default_h_grid, estimate_c_omega, estimate_directional_smoothness,
    estimate_modified_smoothness, inequality_suite, linear_step_check, random_probes, rate_fit, recurrence_check,
    theory_bound_linear, theory_bound_modified, theory_rate_linear, trajectory_probes, ConstantSource, TheoryConstants,
    BURN_IN,
};
use crate::geometry::{
    analytic_ball_certificate, asymmetry_constant, level_set_alpha, scaling_inequality_check, strong_convexity_oracle,
    ChordInset, ConvexBody, Gauge,
};
use crate::par::{gaussian_vector, seeded_rng, unit_direction, Execution, Sampling};
use crate::problems::{
    make_projection_objective, make_quadratic_objective, projection_problem, quadratic_ball_minimum, transform_problem,
    AffineMap, FeasibleSet, Problem,
};
use crate::solver::{fw_run, StopCriteria, Trace};
use crate::stepsize::{
    backtracking_affine_invariant, backtracking_norm, AffineBacktracking, ExactLineSearch, FixedStep, ModifiedStep,
    NormBacktracking, StepContext, StepOutcome, StrategyKind, StrategyParams, Trial,
};
use crate::{Error, Matrix, Result, Vector};

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<40} {:>8.3}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

fn criterion(id: &'static str, name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, name, passed, detail, elapsed: start.elapsed() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Geometry,
    Inequalities,
    Invariance,
    Rates,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometry" => Ok(Suite::Geometry),
            "inequalities" => Ok(Suite::Inequalities),
            "invariance" => Ok(Suite::Invariance),
            "rates" => Ok(Suite::Rates),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidInput(format!(
                "unknown suite '{other}' (expected geometry, inequalities, invariance, rates or all)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub exec: Execution,
    /// Multiplies the certified set constant before the scaling-inequality
    /// check; any factor well above one must make that check fail.
    pub alpha_inflation: Option<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 7, exec: Execution::default(), alpha_inflation: None }
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    let want = |s: Suite| suite == Suite::All || suite == s;
    if want(Suite::Invariance) {
        out.push(affine_covariance_criterion(opts));
        out.push(affine_backtracking_invariance_criterion(opts));
    }
    if want(Suite::Rates) {
        out.push(backtracking_constant_criterion(opts));
        out.push(smoothness_bound_criterion(opts));
        out.push(linear_rate_criterion(opts));
        out.push(norm_backtracking_step_criterion(opts));
        out.push(sublinear_recurrence_criterion(opts));
    }
    if want(Suite::Geometry) {
        out.push(geometry_criterion(opts));
    }
    if want(Suite::Inequalities) {
        out.push(inequality_criterion(opts));
    }
    if want(Suite::Rates) {
        out.push(hand_trace_criterion());
    }
    out.sort_by_key(|r| r.id.parse::<u32>().unwrap_or(u32::MAX));
    out
}

/// `½‖x − x̄‖²` over the unit ball with `x̄ = 1·ratio/√d` and a uniformly random start.
pub fn benchmark_projection(dim: usize, ratio: f64, seed: u64) -> Result<Problem> {
    let target = Vector::from_element(dim, ratio / (dim as f64).sqrt());
    let ball = FeasibleSet::centered_ball(dim, 1.0)?;
    let x0 = ball.random_member(&mut seeded_rng(seed));
    projection_problem(target, 1.0, x0, format!("projection(d={dim},ratio={ratio})"))
}

/// Ball projections with the optimum strictly outside, across dimensions,
/// radii and distances.
pub fn projection_battery(seed: u64) -> Result<Vec<Problem>> {
    let cases: [(usize, f64, f64); 6] =
        [(20, 1.0, 1.1), (2, 1.0, 2.0), (5, 2.0, 1.5), (10, 0.5, 3.0), (50, 1.0, 1.05), (3, 1.0, 1.2)];
    cases
        .iter()
        .enumerate()
        .map(|(i, &(d, radius, ratio))| {
            let mut rng = seeded_rng(seed.wrapping_add(i as u64));
            let target = unit_direction(&mut rng, d) * (radius * ratio);
            let ball = FeasibleSet::centered_ball(d, radius)?;
            let x0 = ball.random_member(&mut rng);
            projection_problem(target, radius, x0, format!("ball(d={d},r={radius},ratio={ratio})"))
        })
        .collect()
}

/// Two- and three-dimensional balls and ellipsoids with a projection target outside.
pub fn low_dimensional_battery(seed: u64) -> Result<Vec<Problem>> {
    let mut rng = seeded_rng(seed);
    let sets = vec![
        ("ball2", FeasibleSet::centered_ball(2, 1.0)?, dvector![2.0, 0.5]),
        ("ball3", FeasibleSet::ball(dvector![0.2, -0.1, 0.3], 1.5)?, dvector![1.0, 2.5, -1.0]),
        (
            "ellipse-flat",
            FeasibleSet::ellipsoid(Matrix::from_diagonal(&dvector![1.0, 4.0]), 1.0, Vector::zeros(2))?,
            dvector![0.3, 1.5],
        ),
        (
            "ellipse-tall",
            FeasibleSet::ellipsoid(Matrix::from_diagonal(&dvector![4.0, 1.0]), 2.0, dvector![0.1, 0.0])?,
            dvector![2.0, 2.0],
        ),
        (
            "ellipsoid3",
            FeasibleSet::ellipsoid(
                Matrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 0.5]),
                1.0,
                Vector::zeros(3),
            )?,
            dvector![0.5, -2.0, 2.5],
        ),
    ];
    sets.into_iter()
        .map(|(name, set, target)| {
            if set.contains(&target) {
                return Err(Error::InvalidInput(format!("{name}: projection target must lie outside")));
            }
            let x0 = set.random_member(&mut rng);
            Problem::new(make_projection_objective(target), set, x0, name)
        })
        .collect()
}

fn backtracking_runs(problem: &Problem) -> Result<(Trace, Trace, Trace)> {
    let stop = StopCriteria::iterations(500);
    let exact = fw_run(problem, &mut ExactLineSearch, &stop)?;
    let affine = fw_run(problem, &mut AffineBacktracking::new(1.0)?, &stop)?;
    let norm = fw_run(problem, &mut NormBacktracking::new(1.0)?, &stop)?;
    Ok((exact, affine, norm))
}

fn probes_from(problem: &Problem, traces: &[&Trace], count: usize, seed: u64, exec: Execution) -> Vec<Vector> {
    let mut probes: Vec<Vector> = traces.iter().flat_map(|t| trajectory_probes(t)).collect();
    probes.extend(random_probes(problem, Sampling::new(count, seed).with_exec(exec)));
    probes
}

fn accepted_constants(trace: &Trace) -> Vec<f64> {
    trace.steps().iter().filter_map(|r| r.constant).collect()
}

/// Exact line search on a problem and its reparametrization produce the same iterates.
pub fn affine_covariance_criterion(opts: &SuiteOptions) -> CriterionResult {
    criterion("1", "affine covariance (exact)", || {
        let p = benchmark_projection(20, 1.1, opts.seed)?;
        let params = StrategyParams::default();
        let mut ok = true;
        let mut parts = Vec::new();
        for (cond, tol) in [(1e2, 1e-8), (1e6, 1e-3)] {
            let start = Instant::now();
            let map = AffineMap::random(20, cond, opts.seed ^ 0x5eed)?;
            let r = affine_covariance_report(&p, &map, StrategyKind::Exact, &params, 50)?;
            let secs = start.elapsed().as_secs_f64();
            ok &= r.iterate_deviation <= tol && secs < 1.0 && r.compared > 1;
            parts.push(format!("cond={cond:.0e}: dev={:.2e} (tol {tol:.0e}, {secs:.3}s)", r.iterate_deviation));
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Affine-invariant backtracking emits the same steps and constants after reparametrization.
pub fn affine_backtracking_invariance_criterion(opts: &SuiteOptions) -> CriterionResult {
    criterion("2", "affine invariance (backtracking)", || {
        let start = Instant::now();
        let p = benchmark_projection(20, 1.1, opts.seed)?;
        let map = AffineMap::random(20, 1e6, opts.seed ^ 0x5eed)?;
        let r = affine_covariance_report(&p, &map, StrategyKind::AffineBacktracking, &StrategyParams::default(), 200)?;
        let secs = start.elapsed().as_secs_f64();
        let cdev = r.constant_deviation.unwrap_or(f64::INFINITY);
        let (m0, m1) = r.max_constants.unwrap_or((f64::NAN, f64::NAN));
        let ok = cdev <= 1e-6 && r.step_deviation <= 1e-6 && m0 == m1 && secs < 1.0;
        Ok((
            ok,
            format!(
                "{} steps, step dev={:.2e}, constant dev={cdev:.2e}, max constant {m0} vs {m1} ({secs:.3}s)",
                r.compared, r.step_deviation
            ),
        ))
    })
}

/// After warm-up, accepted backtracking constants stay below twice the estimated constant.
pub fn backtracking_constant_criterion(opts: &SuiteOptions) -> CriterionResult {
    criterion("3", "backtracking constant < 2x estimate", || {
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for (i, p) in projection_battery(opts.seed)?.iter().enumerate() {
            let (exact, affine, norm) = backtracking_runs(p)?;
            let probes = probes_from(p, &[&exact, &affine, &norm], 200, opts.seed + i as u64, opts.exec);
            let est = estimate_directional_smoothness(p, &probes, &default_h_grid(), opts.exec)?.value;
            let warmup = (1.0 / est).log2().ceil().max(0.0) as usize;
            let consts = accepted_constants(&affine);
            for c in consts.iter().skip(warmup) {
                worst = worst.max(c / (2.0 * est));
                ok &= *c <= 2.0 * est * (1.0 + 1e-6);
            }
        }
        Ok((ok, format!("max accepted/(2*estimate) = {worst:.4}")))
    })
}

/// The estimated constant respects the `L/(c·α)` bound computed from oracle constants.
pub fn smoothness_bound_criterion(opts: &SuiteOptions) -> CriterionResult {
    criterion("4", "smoothness bound L/(c*alpha)", || {
        let mut ok = true;
        let mut parts = Vec::new();
        let problems = low_dimensional_battery(opts.seed)?;
        for (i, p) in problems.iter().enumerate() {
            let seed = opts.seed.wrapping_mul(31).wrapping_add(i as u64);
            let gauge = Gauge::euclidean(p.dim());
            let stop = StopCriteria::iterations(500);
            let exact = fw_run(p, &mut ExactLineSearch, &stop)?;
            let affine = fw_run(p, &mut AffineBacktracking::new(1.0)?, &stop)?;
            let probes = probes_from(p, &[&exact, &affine], 200, seed, opts.exec);
            let est = estimate_directional_smoothness(p, &probes, &default_h_grid(), opts.exec)?.value;
            let cert = strong_convexity_oracle(
                p.set(),
                &gauge,
                ChordInset::Full,
                Sampling::new(100_000, seed).with_exec(opts.exec),
            )?;
            let c = estimate_c_omega(p, &gauge, &probes, Sampling::new(10_000, seed + 1).with_exec(opts.exec))?;
            let tc = TheoryConstants {
                gauge: gauge.label(),
                smoothness: p.objective().known().smoothness.unwrap_or(1.0),
                strong_convexity: p.objective().known().strong_convexity,
                alpha: cert.alpha,
                c,
                kappa: 1.0,
                source: ConstantSource::Oracle,
            };
            let bound = theory_bound_linear(&tc)?;
            ok &= est <= 1.02 * bound;
            parts.push(format!("{} {est:.3}<={bound:.3}", p.label()));
        }
        Ok((ok && problems.len() >= 5, parts.join(", ")))
    })
}

/// Geometric rate of affine-invariant backtracking, and the fixed `1/L` step's collapse
/// under an ill-conditioned map.
pub fn linear_rate_criterion(opts: &SuiteOptions) -> CriterionResult {
    criterion("5", "linear rate and 1/L separation", || {
        let p = benchmark_projection(20, 1.1, opts.seed)?;
        let trace = fw_run(&p, &mut AffineBacktracking::new(1.0)?, &StopCriteria::iterations(200))?;
        let reached = trace.first_gap_below(1e-10);
        let (exact, _, norm) = backtracking_runs(&p)?;
        let probes = probes_from(&p, &[&exact, &trace, &norm], 200, opts.seed, opts.exec);
        let est = estimate_directional_smoothness(&p, &probes, &default_h_grid(), opts.exec)?.value;
        let h = trace.primal_gaps().ok_or_else(|| Error::InvalidInput("missing optimal value".into()))?;
        let fit = rate_fit(&h, BURN_IN..h.len(), theory_rate_linear(est))?;
        let per_step = linear_step_check(&trace)?;

        let map = AffineMap::random(20, 1e6, opts.seed ^ 0x5eed)?;
        let q = transform_problem(&p, &map)?;
        let coarse = StopCriteria::iterations(200).with_gap_tol(1e-4);
        let fast = fw_run(&q, &mut AffineBacktracking::new(1.0)?, &coarse)?;
        let n_fast = fast.first_gap_below(1e-4).ok_or_else(|| Error::Estimation("backtracking missed 1e-4".into()))?;
        let l = q.objective().known().smoothness.ok_or_else(|| Error::InvalidInput("missing L".into()))?;
        let budget = 10_000 * n_fast.max(1);
        let slow_stop = StopCriteria::iterations(budget).with_gap_tol(1e-4).without_iterates();
        let slow = fw_run(&q, &mut FixedStep::inverse_l(l)?, &slow_stop)?;
        let separated = slow.first_gap_below(1e-4).is_none();

        let ok = reached.is_some() && fit.passed && per_step.passed && separated;
        Ok((
            ok,
            format!(
                "gap<=1e-10 at k={}, rho={:.4} vs theory {:.4} (estimate {est:.3}), per-step worst slack {:.1e}; \
                 1e-4: backtracking {n_fast} iters, 1/L gap {:.2e} after {budget}",
                reached.map_or("never".into(), |k| k.to_string()),
                fit.empirical_rho.unwrap_or(f64::NAN),
                fit.theory_rho.unwrap_or(f64::NAN),
                per_step.worst_slack,
                slow.last().gap,
            ),
        ))
    })
}

/// Euclidean backtracking takes steps of at least `min{1, 1/(2𝓛̂)}` after burn-in,
/// and the worst-case steps of both backtracking rules are within a factor two.
pub fn norm_backtracking_step_criterion(opts: &SuiteOptions) -> CriterionResult {
    criterion("6", "backtracking steps vs estimate", || {
        let mut ok = true;
        let mut min_ratio = f64::INFINITY;
        let mut agreement: Vec<f64> = Vec::new();
        for (i, p) in projection_battery(opts.seed)?.iter().enumerate() {
            let (exact, affine, norm) = backtracking_runs(p)?;
            let probes = probes_from(p, &[&exact, &affine, &norm], 200, opts.seed + i as u64, opts.exec);
            let est = estimate_directional_smoothness(p, &probes, &default_h_grid(), opts.exec)?.value;
            let floor = 1f64.min(1.0 / (2.0 * est));
            let steps = |t: &Trace| t.steps().iter().skip(BURN_IN).map(|r| r.gamma).collect::<Vec<_>>();
            let (norm_steps, affine_steps) = (steps(&norm), steps(&affine));
            for g in &norm_steps {
                min_ratio = min_ratio.min(g / floor);
                ok &= *g >= floor * (1.0 - 1e-12);
            }
            let worst = |s: &[f64]| s.iter().copied().fold(f64::INFINITY, f64::min);
            if !norm_steps.is_empty() && !affine_steps.is_empty() {
                let r = worst(&norm_steps) / worst(&affine_steps);
                ok &= (0.5..=2.0).contains(&r);
                agreement.push(r);
            }
        }
        let lo = agreement.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = agreement.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((ok, format!("min step/floor = {min_ratio:.4}; worst-step ratio norm/affine in [{lo:.3}, {hi:.3}]")))
    })
}

/// The modified step obeys the sublinear recurrence and its `C/(k + 2)²` envelope.
pub fn sublinear_recurrence_criterion(opts: &SuiteOptions) -> CriterionResult {
    criterion("7", "sublinear recurrence (modified step)", || {
        let p = benchmark_projection(20, 1.0, opts.seed)?;
        let fstar = p.fstar().ok_or_else(|| Error::InvalidInput("missing optimal value".into()))?;
        let h0 = p.objective().evaluator().value(p.x0()) - fstar;
        let tc = TheoryConstants {
            gauge: "l2".into(),
            smoothness: 1.0,
            strong_convexity: Some(1.0),
            alpha: analytic_ball_certificate(1.0, ChordInset::Full)?.alpha,
            c: f64::NAN,
            kappa: 1.0,
            source: ConstantSource::Analytic,
        };
        let constant = theory_bound_modified(&tc, h0)?;
        let stop = StopCriteria::iterations(500).with_gap_tol(0.0);
        let trace = fw_run(&p, &mut ModifiedStep::new(constant, h0, fstar)?, &stop)?;
        let h = trace.primal_gaps().ok_or_else(|| Error::InvalidInput("missing optimal value".into()))?;
        let m = 1.0 / (2.0 * constant * h0.sqrt());
        let report = recurrence_check(&h, m)?;
        let probes = probes_from(&p, &[&trace], 200, opts.seed, opts.exec);
        let est = estimate_modified_smoothness(&p, &probes, &default_h_grid(), opts.exec)?.value;
        let ok = report.passed && h.len() >= 500 && est <= constant * 1.02;
        Ok((
            ok,
            format!(
                "{} iterates, worst slack {:.2e}, C={:.3e}, final h={:.2e}; modified estimate {est:.3} <= bound {constant:.3}",
                h.len(),
                report.worst_slack,
                report.sublinear_c.unwrap_or(f64::NAN),
                h.last().copied().unwrap_or(f64::NAN),
            ),
        ))
    })
}

fn gauge_axioms(gauge: &Gauge, sampling: Sampling) -> (bool, f64) {
    let dim = gauge.dim();
    let kappa = gauge.analytic_asymmetry();
    let worst = sampling.map(|rng| {
        let x = gaussian_vector(rng, dim);
        let y = gaussian_vector(rng, dim);
        let t: f64 = rand::Rng::random_range(rng, 0.0..10.0);
        let (wx, wy) = (gauge.eval_unchecked(&x), gauge.eval_unchecked(&y));
        let homogeneity = 1e-10 * wx.max(1e-300) * t - (gauge.eval_unchecked(&(&x * t)) - t * wx).abs();
        let triangle = wx + wy + 1e-10 - gauge.eval_unchecked(&(&x + &y));
        let asym = kappa * gauge.eval_unchecked(&-&x) * (1.0 + 1e-10) - wx;
        homogeneity.min(triangle).min(asym).min(if wx > 0.0 { 1.0 } else { -1.0 })
    });
    let zero_ok = gauge.eval_unchecked(&Vector::zeros(dim)) == 0.0;
    let w = worst.into_iter().fold(f64::INFINITY, f64::min);
    (zero_ok && w >= 0.0, w)
}

fn dual_consistency(gauge: &Gauge, directions: usize, boundary: usize, seed: u64, exec: Execution) -> f64 {
    let dim = gauge.dim();
    let edge: Vec<Vector> =
        Sampling::new(boundary, seed).with_exec(exec).map(|rng| gauge.unit_point(&unit_direction(rng, dim)));
    let errors = Sampling::new(directions, seed + 1).with_exec(exec).map(|rng| {
        let v = gaussian_vector(rng, dim);
        let sampled = edge.iter().map(|x| v.dot(x)).fold(f64::NEG_INFINITY, f64::max);
        let exact = gauge.dual_unchecked(&v);
        (exact - sampled).abs() / exact.abs()
    });
    errors.into_iter().fold(0.0, f64::max)
}

/// Gauge axioms, support functions, the scaling inequality, the level-set
/// constant and the shifted-ball asymmetry constant.
pub fn geometry_criterion(opts: &SuiteOptions) -> CriterionResult {
    criterion("8", "geometry suite", || {
        let exec = opts.exec;
        let seed = opts.seed;
        let gauges = [
            Gauge::euclidean(2),
            Gauge::ellipsoid(Matrix::from_diagonal(&dvector![0.25, 1.0]))?,
            Gauge::shifted_ball(dvector![0.5, 0.0], 1.0)?,
        ];
        let mut parts = Vec::new();
        let mut ok = true;

        let mut axiom_worst = f64::INFINITY;
        let mut dual_worst: f64 = 0.0;
        for (i, g) in gauges.iter().enumerate() {
            let (pass, w) = gauge_axioms(g, Sampling::new(10_000, seed + i as u64).with_exec(exec));
            ok &= pass;
            axiom_worst = axiom_worst.min(w);
            dual_worst = dual_worst.max(dual_consistency(g, 1_000, 10_000, seed + 10 + i as u64, exec));
        }
        ok &= dual_worst <= 0.01;
        parts.push(format!("axioms worst slack {axiom_worst:.1e}"));
        parts.push(format!("dual rel err {dual_worst:.1e}"));

        let sets = [
            ("ball", FeasibleSet::centered_ball(2, 1.0)?),
            ("ellipse", FeasibleSet::ellipsoid(Matrix::from_diagonal(&dvector![1.0, 4.0]), 1.0, Vector::zeros(2))?),
        ];
        let scaling_gauges = [Gauge::euclidean(2), Gauge::shifted_ball(dvector![0.5, 0.0], 1.0)?];
        let mut scaling_ok = true;
        let mut scaling_worst = f64::INFINITY;
        for (si, (_, set)) in sets.iter().enumerate() {
            for (gi, g) in scaling_gauges.iter().enumerate() {
                let s = seed + 100 + (si * 2 + gi) as u64;
                let cert =
                    strong_convexity_oracle(set, g, ChordInset::Full, Sampling::new(100_000, s).with_exec(exec))?;
                let alpha = cert.alpha * opts.alpha_inflation.unwrap_or(1.0);
                let checks = Sampling::new(1_000, s + 1).with_exec(exec).map(|rng| -> Result<f64> {
                    let x = if rand::Rng::random::<bool>(rng) {
                        set.boundary_point(&unit_direction(rng, 2))
                    } else {
                        set.random_member(rng)
                    };
                    let phi = unit_direction(rng, 2);
                    let c = scaling_inequality_check(set, g, alpha, &x, &phi)?;
                    let v = set.support_point(&phi)?;
                    let rhs = alpha * g.dual(&phi)? * g.eval(&(&v - &x))?.powi(2);
                    // Sampled constants overshoot slightly; allow 1% of the right-hand side.
                    Ok(c.slack + 0.01 * rhs)
                });
                for c in checks {
                    let c = c?;
                    scaling_worst = scaling_worst.min(c);
                    scaling_ok &= c >= -1e-12;
                }
            }
        }
        ok &= scaling_ok;
        parts.push(if scaling_ok {
            format!("scaling inequality ok (worst {scaling_worst:.1e})")
        } else {
            format!("scaling inequality VIOLATED (worst {scaling_worst:.1e})")
        });

        let mut level_ok = true;
        for (j, level) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let h = Matrix::from_diagonal(&dvector![1.0, 4.0]);
            let set = FeasibleSet::ellipsoid(h, 2.0 * level, Vector::zeros(2))?;
            let cert = strong_convexity_oracle(
                &set,
                &Gauge::euclidean(2),
                ChordInset::Halved,
                Sampling::new(20_000, seed + 200 + j as u64).with_exec(exec),
            )?;
            let floor = level_set_alpha(4.0, 1.0, level, 1.0)?;
            level_ok &= cert.alpha >= floor * (1.0 - 1e-9);
        }
        ok &= level_ok;
        parts.push(format!("level-set constant {}", if level_ok { "ok" } else { "VIOLATED" }));

        let asym = asymmetry_constant(&gauges[2], Sampling::new(100_000, seed + 300).with_exec(exec));
        ok &= (asym.sampled - 3.0).abs() <= 1e-3 && asym.consistent();
        parts.push(format!("shifted-ball asymmetry {:.6}", asym.sampled));
        Ok((ok, parts.join("; ")))
    })
}

/// Interpolation, gradient-upper and gradient-lower inequalities on quadratics over balls.
pub fn inequality_criterion(opts: &SuiteOptions) -> CriterionResult {
    criterion("9", "inequality suite", || {
        let mut rng = seeded_rng(opts.seed);
        let mut cases = Vec::new();
        let target = dvector![2.0, 0.5];
        cases.push((make_projection_objective(target.clone()).with_fstar(projection_fstar(&target, 1.0)), 1.0));
        let target = dvector![0.1, -0.2, 0.3, 0.0, 0.1];
        cases.push((make_projection_objective(target.clone()).with_fstar(projection_fstar(&target, 1.0)), 1.0));
        for d in [2usize, 3, 6] {
            let a =
                Matrix::from_fn(d, d, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
            let h = a.tr_mul(&a) + Matrix::identity(d, d) * 0.5;
            let q = gaussian_vector(&mut rng, d) * 2.0;
            let radius = 0.75;
            let (_, fstar) = quadratic_ball_minimum(&h, &q, 0.0, radius)?;
            cases.push((make_quadratic_objective(h, q, 0.0)?.with_fstar(fstar), radius));
        }
        let mut ok = true;
        let mut worst = [f64::INFINITY; 3];
        for (i, (f, radius)) in cases.iter().enumerate() {
            let set = FeasibleSet::centered_ball(f.dim(), *radius)?;
            let r = inequality_suite(
                f,
                &set,
                &Gauge::euclidean(f.dim()),
                Sampling::new(10_000, opts.seed + i as u64).with_exec(opts.exec),
            )?;
            ok &= r.passed();
            worst[0] = worst[0].min(r.interpolation.slack);
            worst[1] = worst[1].min(r.gradient_upper.slack);
            worst[2] = worst[2].min(r.gradient_lower.slack);
        }
        Ok((
            ok,
            format!(
                "{} objectives; worst slacks interpolation {:.1e}, gradient upper {:.1e}, gradient lower {:.1e}",
                cases.len(),
                worst[0],
                worst[1],
                worst[2]
            ),
        ))
    })
}

fn projection_fstar(target: &Vector, radius: f64) -> f64 {
    crate::problems::projection_optimum(target, radius).1
}

fn trial(constant: f64, gamma: f64, model: f64, value: f64, accepted: bool) -> Trial {
    Trial { constant, gamma, model, value, accepted }
}

/// The two backtracking rules on `½‖x‖²` from `(1, 0)` towards `(−1, 0)`.
pub fn hand_trace_criterion() -> CriterionResult {
    criterion("10", "hand-traced backtracking", || {
        let f = make_projection_objective(dvector![0.0, 0.0]);
        let (x, v) = (dvector![1.0, 0.0], dvector![-1.0, 0.0]);
        let g = f.gradient(&x);
        let ctx = StepContext { x: &x, vertex: &v, grad: &g, value: 0.5, iteration: 0, gap: 2.0 };
        let affine = match backtracking_affine_invariant(&ctx, &f, 1.0)? {
            StepOutcome::Step(d) => d,
            StepOutcome::Converged => return Ok((false, "affine rule signalled convergence".into())),
        };
        let norm = match backtracking_norm(&ctx, &f, 1.0)? {
            StepOutcome::Step(d) => d,
            StepOutcome::Converged => return Ok((false, "norm rule signalled convergence".into())),
        };
        let affine_want =
            vec![trial(0.5, 1.0, -1.0, 0.5, false), trial(1.0, 1.0, -0.5, 0.5, false), trial(2.0, 0.5, 0.0, 0.0, true)];
        let norm_want = vec![trial(0.5, 1.0, -0.5, 0.5, false), trial(1.0, 0.5, 0.0, 0.0, true)];
        let next = crate::solver::convex_update(&x, &v, affine.gamma)?;
        let ok = affine.trials == affine_want
            && affine.gamma == 0.5
            && affine.constant == Some(2.0)
            && norm.trials == norm_want
            && norm.gamma == 0.5
            && norm.constant == Some(1.0)
            && next == dvector![0.0, 0.0];
        Ok((
            ok,
            format!(
                "affine: constants {:?} -> step {}; norm: constants {:?} -> step {}; next iterate {:?}",
                affine.trials.iter().map(|t| t.constant).collect::<Vec<_>>(),
                affine.gamma,
                norm.trials.iter().map(|t| t.constant).collect::<Vec<_>>(),
                norm.gamma,
                next.as_slice()
            ),
        ))
    })
}
