//! Step-size policies for the Frank-Wolfe update `x + γ(v − x)`.

use crate::problems::{Objective, Problem};
use crate::{Error, Result, Vector};

/// Absolute slack on sufficient-decrease tests, absorbing roundoff.
pub const DECREASE_SLACK: f64 = 1e-12;
/// Doublings allowed before backtracking gives up.
pub const MAX_DOUBLINGS: usize = 64;
/// Final bracket width of the golden-section line search.
pub const GOLDEN_TOL: f64 = 1e-10;

/// What a strategy sees at iteration `k`.
#[derive(Clone, Copy, Debug)]
pub struct StepContext<'a> {
    pub x: &'a Vector,
    /// Vertex returned by the linear minimization oracle.
    pub vertex: &'a Vector,
    pub grad: &'a Vector,
    pub value: f64,
    pub iteration: usize,
    /// `⟨−∇f(x), v − x⟩`.
    pub gap: f64,
}

impl StepContext<'_> {
    /// Frank-Wolfe direction `v − x`.
    pub fn direction(&self) -> Vector {
        self.vertex - self.x
    }
}

/// One candidate constant examined by a backtracking search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trial {
    pub constant: f64,
    pub gamma: f64,
    /// Upper model value the trial point had to beat.
    pub model: f64,
    /// Objective value at the trial point.
    pub value: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepDecision {
    pub gamma: f64,
    /// Running constant of the strategy after this step, if it keeps one.
    pub constant: Option<f64>,
    /// Objective evaluations spent choosing the step.
    pub f_evals: usize,
    /// Candidates examined, in order; empty for non-searching strategies.
    pub trials: Vec<Trial>,
}

impl StepDecision {
    fn plain(gamma: f64) -> Self {
        Self { gamma, constant: None, f_evals: 0, trials: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Step(StepDecision),
    /// The point is already optimal to working precision.
    Converged,
}

impl StepOutcome {
    pub fn decision(&self) -> Option<&StepDecision> {
        match self {
            StepOutcome::Step(d) => Some(d),
            StepOutcome::Converged => None,
        }
    }
}

/// A stateful step-size policy; one instance drives one run.
pub trait StepStrategy: Send {
    fn label(&self) -> String;

    fn step(&mut self, ctx: &StepContext<'_>, objective: &Objective) -> Result<StepOutcome>;
}

/// `2/(k + 2)`.
pub fn scheduled_step(ctx: &StepContext<'_>) -> StepDecision {
    StepDecision::plain(2.0 / (ctx.iteration as f64 + 2.0))
}

/// `argmin_{γ ∈ [0,1]} f(x + γd)`; closed form for constant-curvature objectives,
/// golden-section search otherwise.
pub fn exact_linesearch(ctx: &StepContext<'_>, objective: &Objective) -> Result<StepOutcome> {
    let d = ctx.direction();
    if !(ctx.gap > 0.0) || d.norm() == 0.0 {
        return Ok(StepOutcome::Converged);
    }
    if let Some(curv) = objective.curvature(&d) {
        let gamma = if curv > 0.0 { (ctx.gap / curv).clamp(0.0, 1.0) } else { 1.0 };
        return Ok(StepOutcome::Step(StepDecision::plain(gamma)));
    }
    let phi = |g: f64| -> Result<f64> {
        let v = objective.value(&(ctx.x + &d * g));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - ratio * (b - a);
    let mut e = a + ratio * (b - a);
    let (mut fc, mut fe) = (phi(c)?, phi(e)?);
    let mut evals = 2;
    while b - a > GOLDEN_TOL {
        if fc <= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - ratio * (b - a);
            fc = phi(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + ratio * (b - a);
            fe = phi(e)?;
        }
        evals += 1;
    }
    let mut gamma = 0.5 * (a + b);
    // The bracket can only close on an endpoint from inside; check it directly.
    if b >= 1.0 - GOLDEN_TOL {
        let f1 = phi(1.0)?;
        evals += 1;
        if f1 <= fc.min(fe) {
            gamma = 1.0;
        }
    }
    Ok(StepOutcome::Step(StepDecision { gamma, constant: None, f_evals: evals, trials: Vec::new() }))
}

/// `min{1, 1/L}`.
pub fn fixed_inverse_l_step(l: f64) -> Result<StepDecision> {
    if !(l > 0.0) {
        return Err(Error::InvalidInput(format!("smoothness constant must be positive, got {l}")));
    }
    Ok(StepDecision::plain((1.0 / l).min(1.0)))
}

/// `min{1, 1/𝓛}` for a directional smoothness constant `𝓛`.
pub fn directional_fixed_step(constant: f64) -> Result<StepDecision> {
    if !(constant > 0.0) {
        return Err(Error::InvalidInput(format!("directional constant must be positive, got {constant}")));
    }
    Ok(StepDecision::plain((1.0 / constant).min(1.0)))
}

/// Halve the previous constant, then double until the trial point sits under
/// the model. `trial(c)` returns the step and model value for constant `c`.
fn backtrack(
    ctx: &StepContext<'_>,
    objective: &Objective,
    previous: f64,
    trial: impl Fn(f64) -> (f64, f64),
) -> Result<StepDecision> {
    if !(previous > 0.0 && previous.is_finite()) {
        return Err(Error::InvalidInput(format!("backtracking constant must be positive, got {previous}")));
    }
    let d = ctx.direction();
    let mut constant = previous / 2.0;
    let mut trials = Vec::new();
    for _ in 0..=MAX_DOUBLINGS {
        let (gamma, model) = trial(constant);
        let value = objective.value(&(ctx.x + &d * gamma));
        if value.is_nan() || model.is_nan() {
            return Err(Error::NonFinite);
        }
        let accepted = value <= model + DECREASE_SLACK;
        trials.push(Trial { constant, gamma, model, value, accepted });
        if accepted {
            return Ok(StepDecision { gamma, constant: Some(constant), f_evals: trials.len(), trials });
        }
        constant *= 2.0;
    }
    Err(Error::BacktrackingCap(MAX_DOUBLINGS))
}

/// Backtracking on the Euclidean quadratic model
/// `f(x) + ⟨∇f(x), y − x⟩ + (L/2)‖y − x‖²` with `γ(L) = min{gap/(L‖d‖²), 1}`.
pub fn backtracking_norm(ctx: &StepContext<'_>, objective: &Objective, previous: f64) -> Result<StepOutcome> {
    let d2 = ctx.direction().norm_squared();
    if !(ctx.gap > 0.0) || d2 == 0.0 {
        return Ok(StepOutcome::Converged);
    }
    let gap = ctx.gap;
    let f = ctx.value;
    backtrack(ctx, objective, previous, |l| {
        let gamma = (gap / (l * d2)).min(1.0);
        (gamma, f - gamma * gap + 0.5 * l * gamma * gamma * d2)
    })
    .map(StepOutcome::Step)
}

/// Backtracking on the affine-invariant model
/// `f(x) − (γ − 𝓛γ²/2)·gap` with `γ(𝓛) = min{1/𝓛, 1}`.
///
/// Only `f` values and the gap enter, so the emitted `(γ, 𝓛)` sequence does
/// not change under affine reparametrization of the problem.
pub fn backtracking_affine_invariant(
    ctx: &StepContext<'_>,
    objective: &Objective,
    previous: f64,
) -> Result<StepOutcome> {
    if !(ctx.gap > 0.0) {
        return Ok(StepOutcome::Converged);
    }
    let gap = ctx.gap;
    let f = ctx.value;
    backtrack(ctx, objective, previous, |c| {
        let gamma = (1.0 / c).min(1.0);
        (gamma, f - (gamma - 0.5 * c * gamma * gamma) * gap)
    })
    .map(StepOutcome::Step)
}

/// `min{1, √((f(x) − f*)/h₀)/𝓛̃}`, the step tuned to the modified directional
/// smoothness constant `𝓛̃`.
pub fn modified_step(ctx: &StepContext<'_>, constant: f64, h0: f64, fstar: f64) -> Result<StepOutcome> {
    if !(constant > 0.0) {
        return Err(Error::InvalidInput(format!("modified constant must be positive, got {constant}")));
    }
    if !(h0 > 0.0) {
        return Err(Error::InvalidInput(format!("initial suboptimality must be positive, got {h0}")));
    }
    let sub = ctx.value - fstar;
    if sub < -DECREASE_SLACK {
        return Err(Error::FstarInconsistent(sub));
    }
    if sub <= 0.0 || !(ctx.gap > 0.0) {
        return Ok(StepOutcome::Converged);
    }
    let gamma = ((sub / h0).sqrt() / constant).min(1.0);
    Ok(StepOutcome::Step(StepDecision::plain(gamma)))
}

/// The step policies available to runs and experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Scheduled,
    Exact,
    FixedInverseL,
    DirectionalFixed,
    NormBacktracking,
    AffineBacktracking,
    Modified,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Scheduled,
        StrategyKind::Exact,
        StrategyKind::FixedInverseL,
        StrategyKind::DirectionalFixed,
        StrategyKind::NormBacktracking,
        StrategyKind::AffineBacktracking,
        StrategyKind::Modified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Scheduled => "scheduled",
            StrategyKind::Exact => "exact",
            StrategyKind::FixedInverseL => "fixed",
            StrategyKind::DirectionalFixed => "directional",
            StrategyKind::NormBacktracking => "backtracking",
            StrategyKind::AffineBacktracking => "affine-backtracking",
            StrategyKind::Modified => "modified",
        }
    }

    /// Whether iterates map exactly under affine reparametrization.
    pub fn is_affine_covariant(self) -> bool {
        !matches!(self, StrategyKind::FixedInverseL | StrategyKind::NormBacktracking)
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = StrategyKind::ALL.iter().map(|k| k.name()).collect();
            Error::InvalidInput(format!("unknown strategy '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// Inputs a strategy may need beyond the problem itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategyParams {
    /// Starting constant for both backtracking rules.
    pub initial_constant: f64,
    /// `L` for the fixed step; defaults to the problem's known smoothness.
    pub smoothness: Option<f64>,
    /// `𝓛` for the directional fixed step.
    pub directional: Option<f64>,
    /// `𝓛̃` for the modified step.
    pub modified: Option<f64>,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self { initial_constant: 1.0, smoothness: None, directional: None, modified: None }
    }
}

/// Builds a fresh strategy instance for one run on `problem`.
pub fn build_strategy(kind: StrategyKind, params: &StrategyParams, problem: &Problem) -> Result<Box<dyn StepStrategy>> {
    let missing = |what: &str| Error::InvalidInput(format!("strategy '{kind}' needs {what}"));
    Ok(match kind {
        StrategyKind::Scheduled => Box::new(Scheduled),
        StrategyKind::Exact => Box::new(ExactLineSearch),
        StrategyKind::FixedInverseL => {
            let l = params
                .smoothness
                .or(problem.objective().known().smoothness)
                .ok_or_else(|| missing("a smoothness constant"))?;
            Box::new(FixedStep::inverse_l(l)?)
        }
        StrategyKind::DirectionalFixed => {
            Box::new(FixedStep::directional(params.directional.ok_or_else(|| missing("a directional constant"))?)?)
        }
        StrategyKind::NormBacktracking => Box::new(NormBacktracking::new(params.initial_constant)?),
        StrategyKind::AffineBacktracking => Box::new(AffineBacktracking::new(params.initial_constant)?),
        StrategyKind::Modified => {
            let fstar = problem.fstar().ok_or_else(|| missing("a known optimal value"))?;
            let h0 = problem.objective().evaluator().value(problem.x0()) - fstar;
            Box::new(ModifiedStep::new(params.modified.ok_or_else(|| missing("a modified constant"))?, h0, fstar)?)
        }
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Scheduled;

impl StepStrategy for Scheduled {
    fn label(&self) -> String {
        StrategyKind::Scheduled.name().into()
    }

    fn step(&mut self, ctx: &StepContext<'_>, _: &Objective) -> Result<StepOutcome> {
        if !(ctx.gap > 0.0) {
            return Ok(StepOutcome::Converged);
        }
        Ok(StepOutcome::Step(scheduled_step(ctx)))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExactLineSearch;

impl StepStrategy for ExactLineSearch {
    fn label(&self) -> String {
        StrategyKind::Exact.name().into()
    }

    fn step(&mut self, ctx: &StepContext<'_>, objective: &Objective) -> Result<StepOutcome> {
        exact_linesearch(ctx, objective)
    }
}

/// Constant step `min{1, 1/c}` for a given smoothness-type constant `c`.
#[derive(Clone, Copy, Debug)]
pub struct FixedStep {
    kind: StrategyKind,
    gamma: f64,
}

impl FixedStep {
    pub fn inverse_l(l: f64) -> Result<Self> {
        Ok(Self { kind: StrategyKind::FixedInverseL, gamma: fixed_inverse_l_step(l)?.gamma })
    }

    pub fn directional(constant: f64) -> Result<Self> {
        Ok(Self { kind: StrategyKind::DirectionalFixed, gamma: directional_fixed_step(constant)?.gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl StepStrategy for FixedStep {
    fn label(&self) -> String {
        self.kind.name().into()
    }

    fn step(&mut self, ctx: &StepContext<'_>, _: &Objective) -> Result<StepOutcome> {
        if !(ctx.gap > 0.0) {
            return Ok(StepOutcome::Converged);
        }
        Ok(StepOutcome::Step(StepDecision::plain(self.gamma)))
    }
}

/// Euclidean backtracking keeping the running `L_k`.
#[derive(Clone, Copy, Debug)]
pub struct NormBacktracking {
    estimate: f64,
}

impl NormBacktracking {
    pub fn new(initial: f64) -> Result<Self> {
        if !(initial > 0.0) {
            return Err(Error::InvalidInput(format!("initial constant must be positive, got {initial}")));
        }
        Ok(Self { estimate: initial })
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }
}

impl StepStrategy for NormBacktracking {
    fn label(&self) -> String {
        StrategyKind::NormBacktracking.name().into()
    }

    fn step(&mut self, ctx: &StepContext<'_>, objective: &Objective) -> Result<StepOutcome> {
        let out = backtracking_norm(ctx, objective, self.estimate)?;
        if let StepOutcome::Step(StepDecision { constant: Some(c), .. }) = &out {
            self.estimate = *c;
        }
        Ok(out)
    }
}

/// Affine-invariant backtracking keeping the running `𝓛_k`.
#[derive(Clone, Copy, Debug)]
pub struct AffineBacktracking {
    estimate: f64,
}

impl AffineBacktracking {
    pub fn new(initial: f64) -> Result<Self> {
        if !(initial > 0.0) {
            return Err(Error::InvalidInput(format!("initial constant must be positive, got {initial}")));
        }
        Ok(Self { estimate: initial })
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }
}

impl StepStrategy for AffineBacktracking {
    fn label(&self) -> String {
        StrategyKind::AffineBacktracking.name().into()
    }

    fn step(&mut self, ctx: &StepContext<'_>, objective: &Objective) -> Result<StepOutcome> {
        let out = backtracking_affine_invariant(ctx, objective, self.estimate)?;
        if let StepOutcome::Step(StepDecision { constant: Some(c), .. }) = &out {
            self.estimate = *c;
        }
        Ok(out)
    }
}

/// Step driven by the modified directional constant; needs `f*` and `h₀ = f(x₀) − f*`.
#[derive(Clone, Copy, Debug)]
pub struct ModifiedStep {
    constant: f64,
    h0: f64,
    fstar: f64,
}

impl ModifiedStep {
    pub fn new(constant: f64, h0: f64, fstar: f64) -> Result<Self> {
        if !(constant > 0.0) || !(h0 > 0.0) || !fstar.is_finite() {
            return Err(Error::InvalidInput(
                "modified step needs a positive constant, positive h0 and a finite optimal value".into(),
            ));
        }
        Ok(Self { constant, h0, fstar })
    }
}

impl StepStrategy for ModifiedStep {
    fn label(&self) -> String {
        StrategyKind::Modified.name().into()
    }

    fn step(&mut self, ctx: &StepContext<'_>, _: &Objective) -> Result<StepOutcome> {
        modified_step(ctx, self.constant, self.h0, self.fstar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_erm_objective, make_projection_objective, synthesize_dataset, Loss, TaskKind};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn ctx<'a>(x: &'a Vector, v: &'a Vector, g: &'a Vector, value: f64, k: usize) -> StepContext<'a> {
        let gap = -g.dot(&(v - x));
        StepContext { x, vertex: v, grad: g, value, iteration: k, gap }
    }

    #[test]
    fn scheduled_examples() {
        let (x, v, g) = (dvector![0.0], dvector![1.0], dvector![-1.0]);
        for (k, want) in [(0, 1.0), (2, 0.5), (8, 0.2)] {
            assert_relative_eq!(scheduled_step(&ctx(&x, &v, &g, 0.0, k)).gamma, want);
        }
    }

    #[test]
    fn fixed_examples() {
        assert_eq!(fixed_inverse_l_step(1.0).unwrap().gamma, 1.0);
        assert_eq!(fixed_inverse_l_step(4.0).unwrap().gamma, 0.25);
        assert_eq!(fixed_inverse_l_step(0.5).unwrap().gamma, 1.0);
        assert_eq!(directional_fixed_step(2.0).unwrap().gamma, 0.5);
        assert_eq!(directional_fixed_step(1.0).unwrap().gamma, 1.0);
        assert_eq!(directional_fixed_step(0.25).unwrap().gamma, 1.0);
        assert!(fixed_inverse_l_step(0.0).is_err());
    }

    #[test]
    fn exact_closed_form_examples() {
        let f = make_projection_objective(dvector![1.0, 0.0]);
        let (x, v) = (dvector![0.0, 0.0], dvector![1.0, 0.0]);
        let g = f.gradient(&x);
        let d = exact_linesearch(&ctx(&x, &v, &g, f.value(&x), 0), &f).unwrap();
        assert_eq!(d.decision().unwrap().gamma, 1.0);

        let f = make_projection_objective(dvector![0.0, 0.0]);
        let (x, v) = (dvector![1.0, 0.0], dvector![-1.0, 0.0]);
        let g = f.gradient(&x);
        let d = exact_linesearch(&ctx(&x, &v, &g, 0.5, 0), &f).unwrap();
        assert_relative_eq!(d.decision().unwrap().gamma, 0.5);

        let d = exact_linesearch(&ctx(&x, &x, &g, 0.5, 0), &f).unwrap();
        assert_eq!(d, StepOutcome::Converged);
    }

    #[test]
    fn golden_section_matches_fine_grid() {
        let data = synthesize_dataset(40, 3, TaskKind::Classification, 2).unwrap();
        let f = make_erm_objective(&data, Loss::Logistic).unwrap();
        let x = dvector![0.0, 0.0, 0.0];
        let g = f.gradient(&x);
        let v = -&g * (2.0 / g.norm());
        let out = exact_linesearch(&ctx(&x, &v, &g, f.value(&x), 0), &f).unwrap();
        let gamma = out.decision().unwrap().gamma;
        let phi = |t: f64| f.value(&(&x + (&v - &x) * t));
        let grid_best = (0..=10_000).map(|i| i as f64 / 10_000.0).fold(f64::INFINITY, |m, t| m.min(phi(t)));
        assert!(phi(gamma) <= grid_best + 1e-12);
    }

    #[test]
    fn modified_examples() {
        let (x, v, g) = (dvector![0.0], dvector![1.0], dvector![-1.0]);
        let c = ctx(&x, &v, &g, 2.0, 0);
        assert_eq!(modified_step(&c, 4.0, 2.0, 0.0).unwrap().decision().unwrap().gamma, 0.25);
        let c = ctx(&x, &v, &g, 0.25, 3);
        assert_relative_eq!(modified_step(&c, 1.0, 1.0, 0.0).unwrap().decision().unwrap().gamma, 0.5);
        let c = ctx(&x, &v, &g, -1e-9, 3);
        assert!(matches!(modified_step(&c, 1.0, 1.0, 0.0), Err(Error::FstarInconsistent(_))));
        let c = ctx(&x, &v, &g, 0.0, 3);
        assert_eq!(modified_step(&c, 1.0, 1.0, 0.0).unwrap(), StepOutcome::Converged);
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("armijo".parse::<StrategyKind>().is_err());
    }
}
