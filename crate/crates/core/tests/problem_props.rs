use fwaffine::analysis::reference_fstar;
use fwaffine::geometry::ConvexBody;
use fwaffine::par::{gaussian_vector, seeded_rng};
use fwaffine::problems::{
    make_erm_objective, make_projection_objective, make_quadratic_objective, projection_problem, synthesize_dataset,
    transform_problem, AffineMap, FeasibleSet, Loss, Objective, TaskKind,
};
use fwaffine::{Matrix, Vector};
use proptest::prelude::*;

fn fd_agrees(f: &Objective, x: &Vector) -> bool {
    let g = f.gradient(x);
    let h = 1e-6;
    (0..x.len()).all(|i| {
        let mut e = Vector::zeros(x.len());
        e[i] = h;
        let fd = (f.value(&(x + &e)) - f.value(&(x - &e))) / (2.0 * h);
        (fd - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs())
    })
}

fn random_spd(seed: u64, d: usize) -> Matrix {
    let mut rng = seeded_rng(seed);
    let a = Matrix::from_fn(d, d, |_, _| gaussian_vector(&mut rng, 1)[0]);
    a.tr_mul(&a) + Matrix::identity(d, d) * 0.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = seeded_rng(seed);
        let ball = FeasibleSet::centered_ball(d, 1.0).unwrap();
        let x = ball.random_member(&mut rng);
        let target = gaussian_vector(&mut rng, d);
        let projection = make_projection_objective(target.clone());
        prop_assert!(fd_agrees(&projection, &x));
        let quad = make_quadratic_objective(random_spd(seed, d), target, 0.3).unwrap();
        prop_assert!(fd_agrees(&quad, &x));
        let reg = synthesize_dataset(30, d, TaskKind::Regression, seed).unwrap();
        prop_assert!(fd_agrees(&make_erm_objective(&reg, Loss::Quadratic).unwrap(), &x));
        let cls = synthesize_dataset(30, d, TaskKind::Classification, seed).unwrap();
        prop_assert!(fd_agrees(&make_erm_objective(&cls, Loss::Logistic).unwrap(), &x));
    }

    #[test]
    fn pulled_back_gradients_match_finite_differences(seed in any::<u64>(), d in 1usize..5) {
        let cond = if d == 1 { 1.0 } else { 50.0 };
        let map = AffineMap::random(d, cond, seed).unwrap();
        let mut rng = seeded_rng(seed ^ 1);
        let p = projection_problem(gaussian_vector(&mut rng, d) * 2.0, 1.0, Vector::zeros(d), "p").unwrap();
        let q = transform_problem(&p, &map).unwrap();
        let y = q.set().random_member(&mut rng);
        prop_assert!(fd_agrees(q.objective(), &y));
        let x = map.apply(&y);
        prop_assert!((q.objective().value(&y) - p.objective().value(&x)).abs() <= 1e-10 * (1.0 + p.objective().value(&x)));
    }

    #[test]
    fn lmo_returns_optimal_members(seed in any::<u64>(), d in 1usize..6, level in 0.2..3.0f64) {
        let mut rng = seeded_rng(seed);
        let center = gaussian_vector(&mut rng, d);
        let set = FeasibleSet::ellipsoid(random_spd(seed ^ 7, d), level, center).unwrap();
        let g = gaussian_vector(&mut rng, d);
        prop_assume!(g.norm() > 1e-6);
        let v = set.lmo(&g).unwrap();
        prop_assert!(set.contains(&v));
        for _ in 0..30 {
            let y = set.random_member(&mut rng);
            prop_assert!(g.dot(&v) <= g.dot(&y) + 1e-9 * (1.0 + g.norm() * y.norm()));
        }
        prop_assert_eq!(set.lmo_calls(), 1);
    }

    #[test]
    fn affine_round_trip(seed in any::<u64>(), d in 2usize..8, log_cond in 0.0..6.0f64) {
        let map = AffineMap::random(d, 10f64.powf(log_cond), seed).unwrap();
        let x = gaussian_vector(&mut seeded_rng(seed ^ 3), d);
        let err = (map.apply(&map.invert(&x)) - &x).norm();
        prop_assert!(err <= 1e-8 * map.condition_number() * (1.0 + x.norm()));
        prop_assert!((map.condition_number() - 10f64.powf(log_cond)).abs() <= 1e-6 * 10f64.powf(log_cond));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn optimal_value_survives_reparametrization(seed in any::<u64>(), log_cond in 0.0..3.0f64, ratio in 1.2..3.0f64) {
        let d = 5;
        let mut rng = seeded_rng(seed);
        let target = gaussian_vector(&mut rng, d).normalize() * ratio;
        let p = projection_problem(target, 1.0, Vector::zeros(d), "p").unwrap();
        let q = transform_problem(&p, &AffineMap::random(d, 10f64.powf(log_cond), seed).unwrap()).unwrap();
        let fstar = p.fstar().unwrap();
        prop_assert_eq!(q.fstar(), Some(fstar));
        let approx = reference_fstar(&q, 2_000).unwrap();
        prop_assert!((approx - fstar).abs() <= 1e-8 * fstar);
    }
}
