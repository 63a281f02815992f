use fwaffine::geometry::{
    analytic_ball_certificate, asymmetry_constant, scaling_inequality_check, strong_convexity_oracle, AxisBox,
    ChordInset, ConvexBody, Gauge,
};
use fwaffine::par::{gaussian_vector, seeded_rng, unit_direction, Execution, Sampling};
use fwaffine::problems::FeasibleSet;
use fwaffine::{Matrix, Vector};
use nalgebra::dvector;
use proptest::prelude::*;

fn vec2() -> impl Strategy<Value = Vector> {
    prop::collection::vec(-5.0..5.0f64, 2).prop_map(Vector::from_vec)
}

fn gauge() -> impl Strategy<Value = Gauge> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|r| Gauge::norm_ball(2, r).unwrap()),
        (0.3..3.0f64, 0.3..3.0f64, -0.2..0.2f64)
            .prop_map(|(a, b, c)| { Gauge::ellipsoid(Matrix::from_row_slice(2, 2, &[a, c, c, b])).unwrap() }),
        (-0.6..0.6f64, -0.6..0.6f64, 1.0..2.0f64)
            .prop_map(|(cx, cy, r)| Gauge::shifted_ball(dvector![cx, cy], r).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gauge_is_sublinear(g in gauge(), x in vec2(), y in vec2(), t in 0.0..20.0f64) {
        let (wx, wy) = (g.eval(&x).unwrap(), g.eval(&y).unwrap());
        prop_assert!(wx >= 0.0);
        prop_assert!((g.eval(&(&x * t)).unwrap() - t * wx).abs() <= 1e-10 * (1.0 + t * wx));
        prop_assert!(g.eval(&(&x + &y)).unwrap() <= wx + wy + 1e-10);
        prop_assert!(wx <= g.analytic_asymmetry() * g.eval(&-&x).unwrap() * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn unit_points_have_unit_gauge(g in gauge(), u in vec2()) {
        prop_assume!(u.norm() > 1e-3);
        prop_assert!((g.eval(&g.unit_point(&u)).unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn dual_bounds_pairing_and_is_attained(g in gauge(), v in vec2(), x in vec2()) {
        prop_assume!(v.norm() > 1e-3);
        let dual = g.dual(&v).unwrap();
        prop_assert!(v.dot(&x) <= dual * g.eval(&x).unwrap() + 1e-9 * (1.0 + v.norm() * x.norm()));
        let z = g.dual_argmax(&v);
        prop_assert!(g.eval(&z).unwrap() <= 1.0 + 1e-9);
        prop_assert!((v.dot(&z) - dual).abs() <= 1e-9 * (1.0 + dual));
    }

    #[test]
    fn scaling_inequality_on_balls_with_analytic_constant(
        r in 0.3..3.0f64, seed in any::<u64>(),
    ) {
        let set = FeasibleSet::centered_ball(3, r).unwrap();
        let gauge = Gauge::euclidean(3);
        let alpha = analytic_ball_certificate(r, ChordInset::Full).unwrap().alpha;
        let mut rng = seeded_rng(seed);
        for _ in 0..20 {
            let x = set.random_member(&mut rng);
            let phi = gaussian_vector(&mut rng, 3);
            prop_assert!(scaling_inequality_check(&set, &gauge, alpha, &x, &phi).unwrap().holds);
        }
    }

    #[test]
    fn support_points_maximize_pairing(seed in any::<u64>(), a in 0.5..4.0f64, b in 0.5..4.0f64) {
        let set = FeasibleSet::ellipsoid(Matrix::from_diagonal(&dvector![a, b]), 1.5, dvector![0.3, -0.2]).unwrap();
        let mut rng = seeded_rng(seed);
        let phi = unit_direction(&mut rng, 2);
        let v = set.support_point(&phi).unwrap();
        prop_assert!(set.contains(&v));
        for _ in 0..50 {
            let y = set.random_member(&mut rng);
            prop_assert!(phi.dot(&y) <= phi.dot(&v) + 1e-9);
        }
    }
}

#[test]
fn oracle_is_deterministic_across_execution_modes() {
    let set = FeasibleSet::ellipsoid(Matrix::from_diagonal(&dvector![1.0, 4.0]), 1.0, Vector::zeros(2)).unwrap();
    let g = Gauge::shifted_ball(dvector![0.5, 0.0], 1.0).unwrap();
    let run =
        |exec| strong_convexity_oracle(&set, &g, ChordInset::Full, Sampling::new(5_000, 3).with_exec(exec)).unwrap();
    let (seq, par) = (run(Execution::Sequential), run(Execution::Parallel));
    assert_eq!(seq.alpha.to_bits(), par.alpha.to_bits());
    assert_eq!(seq.seed, Some(3));
}

#[test]
fn oracle_overestimates_but_approaches_ball_constant() {
    let set = FeasibleSet::centered_ball(2, 2.0).unwrap();
    for variant in [ChordInset::Full, ChordInset::Halved] {
        let exact = analytic_ball_certificate(2.0, variant).unwrap().alpha;
        let cert = strong_convexity_oracle(&set, &Gauge::euclidean(2), variant, Sampling::new(20_000, 1)).unwrap();
        assert!(cert.alpha >= exact * (1.0 - 1e-9), "{variant:?}: {} < {exact}", cert.alpha);
        assert!(cert.alpha <= exact * 1.01, "{variant:?}: {} vs {exact}", cert.alpha);
    }
}

#[test]
fn polytope_has_no_positive_constant() {
    let cube = AxisBox::cube(2, 1.0).unwrap();
    let cert =
        strong_convexity_oracle(&cube, &Gauge::euclidean(2), ChordInset::Full, Sampling::new(20_000, 2)).unwrap();
    assert!(cert.alpha < 1e-3, "flat faces should drive the constant to zero, got {}", cert.alpha);
}

#[test]
fn too_few_oracle_samples_is_an_input_error() {
    let set = FeasibleSet::centered_ball(2, 1.0).unwrap();
    assert!(strong_convexity_oracle(&set, &Gauge::euclidean(2), ChordInset::Full, Sampling::new(99, 0)).is_err());
}

#[test]
fn shifted_ball_asymmetry_matches_closed_form() {
    let g = Gauge::shifted_ball(dvector![0.5, 0.0], 1.0).unwrap();
    let report = asymmetry_constant(&g, Sampling::new(100_000, 9));
    assert!((report.sampled - 3.0).abs() <= 1e-3);
    assert!(report.consistent());
}

#[test]
fn ellipsoid_certificate_matches_oracle() {
    let sets = [
        FeasibleSet::ellipsoid(Matrix::from_diagonal(&dvector![1.0, 4.0]), 1.0, Vector::zeros(2)).unwrap(),
        FeasibleSet::ellipsoid(Matrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 1.0]), 2.0, dvector![1.0, -1.0]).unwrap(),
        FeasibleSet::ball(dvector![0.5, 0.5], 1.5).unwrap(),
    ];
    for set in &sets {
        for variant in [ChordInset::Full, ChordInset::Halved] {
            let exact = set.euclidean_certificate(variant).unwrap().alpha;
            let sampled =
                strong_convexity_oracle(set, &Gauge::euclidean(2), variant, Sampling::new(50_000, 8)).unwrap().alpha;
            assert!(sampled >= exact * (1.0 - 1e-9), "{variant:?}: {sampled} < {exact}");
            assert!(sampled <= exact * 1.01, "{variant:?}: {sampled} vs {exact}");
        }
    }
    let ellipse = &sets[0];
    assert_eq!(ellipse.euclidean_certificate(ChordInset::Full).unwrap().alpha, 0.25);
}
