use fwaffine::geometry::ConvexBody;
use fwaffine::par::{gaussian_vector, seeded_rng, Execution};
use fwaffine::problems::{projection_problem, transform_problem, AffineMap, FeasibleSet, Problem};
use fwaffine::solver::{fw_run, run_batch, Job, StopCriteria, Trace};
use fwaffine::stepsize::{
    backtracking_affine_invariant, backtracking_norm, build_strategy, AffineBacktracking, ExactLineSearch,
    NormBacktracking, StepContext, StepOutcome, StepStrategy, StrategyKind, StrategyParams,
};
use fwaffine::Vector;
use proptest::prelude::*;

fn problem(seed: u64, d: usize, ratio: f64) -> Problem {
    let mut rng = seeded_rng(seed);
    let target = gaussian_vector(&mut rng, d).normalize() * ratio;
    let x0 = FeasibleSet::centered_ball(d, 1.0).unwrap().random_member(&mut rng);
    projection_problem(target, 1.0, x0, "p").unwrap()
}

fn run(p: &Problem, s: &mut dyn StepStrategy) -> Trace {
    fw_run(p, s, &StopCriteria::iterations(300)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn runs_stay_feasible_and_monotone(seed in any::<u64>(), d in 2usize..12, ratio in 0.5..3.0f64) {
        let p = problem(seed, d, ratio);
        let strategies: Vec<Box<dyn StepStrategy>> = vec![
            Box::new(ExactLineSearch),
            Box::new(AffineBacktracking::new(1.0).unwrap()),
            Box::new(NormBacktracking::new(1.0).unwrap()),
        ];
        for mut s in strategies {
            let t = run(&p, s.as_mut());
            let values: Vec<f64> = t.records.iter().map(|r| r.value).collect();
            prop_assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            for r in &t.records {
                prop_assert!(p.set().contains(r.x.as_ref().unwrap()));
                prop_assert!(r.gap >= -1e-12);
                prop_assert!((0.0..=1.0).contains(&r.gamma));
                prop_assert!(r.primal_gap.unwrap() <= r.gap + 1e-10);
                prop_assert!(r.constant.is_none_or(|c| c > 0.0));
            }
            prop_assert!(t.records.iter().enumerate().all(|(i, r)| r.k == i));
        }
    }

    #[test]
    fn backtracking_constants_are_powers_of_two(seed in any::<u64>(), d in 2usize..10, ratio in 1.05..3.0f64) {
        let p = problem(seed, d, ratio);
        for t in [run(&p, &mut AffineBacktracking::new(1.0).unwrap()), run(&p, &mut NormBacktracking::new(1.0).unwrap())] {
            for c in t.steps().iter().filter_map(|r| r.constant) {
                prop_assert_eq!(c.log2().fract(), 0.0);
            }
        }
    }

    #[test]
    fn accepted_trials_dominate(seed in any::<u64>(), d in 2usize..8, prev_exp in -8i32..20) {
        let p = problem(seed, d, 1.5);
        let f = p.objective();
        let mut rng = seeded_rng(seed ^ 11);
        let x = p.set().random_member(&mut rng);
        let g = f.gradient(&x);
        let v = p.set().lmo_uncounted(&g).unwrap();
        let gap = -g.dot(&(&v - &x));
        prop_assume!(gap > 1e-8);
        let ctx = StepContext { x: &x, vertex: &v, grad: &g, value: f.value(&x), iteration: 0, gap };
        let prev = 2f64.powi(prev_exp);
        for outcome in [backtracking_affine_invariant(&ctx, f, prev).unwrap(), backtracking_norm(&ctx, f, prev).unwrap()] {
            let StepOutcome::Step(d) = outcome else { panic!("positive gap must produce a step") };
            let last = d.trials.last().unwrap();
            prop_assert!(last.accepted && last.value <= last.model + 1e-12);
            prop_assert!(d.trials[..d.trials.len() - 1].iter().all(|t| !t.accepted && t.value > t.model + 1e-12));
            prop_assert_eq!(d.trials[0].constant, prev / 2.0);
            prop_assert_eq!(d.f_evals, d.trials.len());
        }
    }

    #[test]
    fn affine_backtracking_trail_is_invariant(seed in any::<u64>(), log_cond in 0.0..3.0f64) {
        let p = problem(seed, 8, 1.3);
        let q = transform_problem(&p, &AffineMap::random(8, 10f64.powf(log_cond), seed).unwrap()).unwrap();
        let (a, b) = (run(&p, &mut AffineBacktracking::new(1.0).unwrap()), run(&q, &mut AffineBacktracking::new(1.0).unwrap()));
        let n = a.steps().len().min(b.steps().len());
        prop_assert!(n > 3);
        for (ra, rb) in a.steps()[..n].iter().zip(&b.steps()[..n]) {
            prop_assert!((ra.gamma - rb.gamma).abs() <= 1e-6 * ra.gamma.abs().max(1e-300));
            prop_assert!((ra.constant.unwrap() - rb.constant.unwrap()).abs() <= 1e-6 * ra.constant.unwrap());
        }
    }
}

#[test]
fn identical_inputs_give_identical_traces() {
    let p = problem(5, 6, 1.4);
    for kind in StrategyKind::ALL {
        let params = StrategyParams { directional: Some(4.0), modified: Some(4.0), ..StrategyParams::default() };
        let mut s1 = build_strategy(kind, &params, &p).unwrap();
        let mut s2 = build_strategy(kind, &params, &p).unwrap();
        assert_eq!(run(&p, s1.as_mut()), run(&p, s2.as_mut()), "{kind}");
    }
}

#[test]
fn batch_results_match_across_execution_modes() {
    let problems: Vec<Problem> = (0..6).map(|i| problem(i, 10, 1.2)).collect();
    let jobs: Vec<Job<'_>> = problems
        .iter()
        .map(|p| Job {
            problem: p,
            strategy: Box::new(|| Ok(Box::new(AffineBacktracking::new(1.0)?) as Box<dyn StepStrategy>)),
            stop: StopCriteria::iterations(200),
        })
        .collect();
    let seq: Vec<Trace> = run_batch(&jobs, Execution::Sequential).into_iter().map(Result::unwrap).collect();
    let par: Vec<Trace> = run_batch(&jobs, Execution::Parallel).into_iter().map(Result::unwrap).collect();
    assert_eq!(seq, par);
}

#[test]
fn huge_initial_constant_recovers_by_halving() {
    let p = problem(3, 4, 1.5);
    let t = run(&p, &mut AffineBacktracking::new(2f64.powi(60)).unwrap());
    let consts: Vec<f64> = t.steps().iter().map(|r| r.constant.unwrap()).collect();
    assert_eq!(consts[0], 2f64.powi(59));
    let settle = consts.iter().position(|&c| c < 64.0).unwrap();
    assert!(consts[..settle].windows(2).all(|w| w[1] == w[0] / 2.0));
    assert!(t.last().gap <= 1e-10);
}

#[test]
fn ball_start_vector_must_be_feasible() {
    let bad = projection_problem(Vector::from_element(2, 3.0), 1.0, Vector::from_element(2, 2.0), "p");
    assert!(bad.is_err());
}
