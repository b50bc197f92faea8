use fracbvp::analysis::{
    crossing, estimate_slope_range, find_intersection, first_zero_of_ml2, separation_bounds,
    uniqueness_horizon, AnalysisError, SlopeRange,
};
use fracbvp::ivp::{solve_ivp, GridConfig, IvpProblem, Method};
use fracbvp::mlf::mittag_leffler;

fn example_rhs(t: f64, y: f64) -> f64 {
    (t + 5.0).powf(-0.65) * (1.3 * t * y).sin()
}

// first positive zeros of E_{α,2}(−x), 30-digit series evaluation
const ML2_ZEROS: [(f64, f64); 3] = [
    (1.6, 13.42047398836725),
    (1.75, 9.59774287120277),
    (1.9, 9.51414312891815),
];

#[test]
fn first_zeros_match_high_precision_values() {
    for (alpha, x) in ML2_ZEROS {
        let got = first_zero_of_ml2(alpha).unwrap();
        assert!((got - x).abs() < 1e-8 * x, "alpha {alpha}: {got} vs {x}");
        assert!(mittag_leffler(alpha, 2.0, -got).unwrap().abs() < 1e-8);
    }
}

#[test]
fn no_zero_below_the_oscillation_threshold() {
    for alpha in [1.2, 1.55] {
        assert!(matches!(
            uniqueness_horizon(alpha, -1.0),
            Err(AnalysisError::NoSignChange { .. })
        ));
    }
}

#[test]
fn horizon_scales_with_the_quotient_bound() {
    let alpha = 1.75;
    let t1 = uniqueness_horizon(alpha, -1.0).unwrap();
    assert!((t1 - 9.597_742_871_202_77f64.powf(1.0 / alpha)).abs() < 1e-9);
    let t2 = uniqueness_horizon(alpha, -0.5).unwrap();
    assert!((t2 / t1 - 2f64.powf(1.0 / alpha)).abs() < 1e-9);
}

#[test]
fn slope_range_on_the_example_rhs() {
    let p = IvpProblem::new(1.55, 2.9, 1.0, -0.15, example_rhs).unwrap();
    let base = solve_ivp(&p, &GridConfig::new(290, Method::Bdf2)).unwrap();
    let coarse = estimate_slope_range(&example_rhs, &base, 1.0, 100).unwrap();
    assert!(coarse.a_lower.is_finite() && coarse.a_upper.is_finite());
    assert!(coarse.a_lower < 0.0 && 0.0 < coarse.a_upper);

    // brute force at ten times the resolution in both τ and y
    let fine_base = solve_ivp(&p, &GridConfig::new(2900, Method::Bdf2)).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&t, &y) in fine_base.times.iter().zip(&fine_base.values) {
        for k in 1..=1000 {
            let u = k as f64 / 1000.0;
            for du in [u, -u] {
                let q = (example_rhs(t, y + du) - example_rhs(t, y)) / du;
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
    }
    assert!(
        (coarse.a_lower - lo).abs() <= 0.05 * lo.abs(),
        "{coarse:?} vs {lo}"
    );
    assert!(
        (coarse.a_upper - hi).abs() <= 0.05 * hi.abs(),
        "{coarse:?} vs {hi}"
    );
}

#[test]
fn solved_differences_respect_the_bounds() {
    let alpha = 1.55;
    let g = GridConfig::new(800, Method::Bdf2);
    for gap in [0.05, 0.15] {
        let p1 = IvpProblem::new(alpha, 2.0, 1.0, -0.15, example_rhs).unwrap();
        let p2 = p1.with_slope(-0.15 + gap).unwrap();
        let y1 = solve_ivp(&p1, &g).unwrap();
        let y2 = solve_ivp(&p2, &g).unwrap();
        let range = estimate_slope_range(&example_rhs, &y1, 1.0, 100)
            .unwrap()
            .widen(0.1);
        for j in 0..y1.len() {
            let t = y1.times[j];
            let b = separation_bounds(alpha, gap, t, range).unwrap();
            let d = y2.values[j] - y1.values[j];
            assert!(
                b.lower_bound <= d && d <= b.upper_bound,
                "gap {gap} t {t}: {b:?} vs {d}"
            );
        }
    }
}

#[test]
fn bounds_are_sharp_for_linear_problems() {
    let (alpha, a, gap) = (1.55, -0.8, 0.3);
    let f = move |_: f64, y: f64| a * y;
    let p1 = IvpProblem::new(alpha, 2.0, 0.5, 0.1, f).unwrap();
    let p2 = p1.with_slope(0.1 + gap).unwrap();
    let g = GridConfig::new(1000, Method::Bdf2);
    let (y1, y2) = (solve_ivp(&p1, &g).unwrap(), solve_ivp(&p2, &g).unwrap());
    let range = estimate_slope_range(&f, &y1, 1.0, 10).unwrap();
    assert!((range.a_lower - a).abs() < 1e-12 && (range.a_upper - a).abs() < 1e-12);
    for j in 0..=1000 {
        let t = y1.times[j];
        let b = separation_bounds(
            alpha,
            gap,
            t,
            SlopeRange {
                a_lower: a,
                a_upper: a,
            },
        )
        .unwrap();
        assert_eq!(b.lower_bound, b.upper_bound);
        let d = y2.values[j] - y1.values[j];
        assert!((d - b.lower_bound).abs() <= 1e-6, "t {t}");
    }
}

#[test]
fn horizon_for_the_example_covers_its_interval() {
    let p = IvpProblem::new(1.55, 2.9, 1.0, -0.15, example_rhs).unwrap();
    let base = solve_ivp(&p, &GridConfig::new(290, Method::Bdf2)).unwrap();
    let range = estimate_slope_range(&example_rhs, &base, 1.0, 100).unwrap();
    match uniqueness_horizon(1.55, range.a_lower) {
        Ok(t) => assert!(t >= 2.9 * 0.9, "{t}"),
        // no zero of E_{1.55,2}(−x): the lower bound never vanishes
        Err(AnalysisError::NoSignChange { .. }) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn example_solutions_cross_once_the_interval_is_long() {
    let p1 = IvpProblem::new(1.55, 5.5, 1.0, -0.15, example_rhs).unwrap();
    let p2 = p1.with_slope(-0.3).unwrap();
    let g = GridConfig::from_step(5.5, 1e-4, Method::Bdf2).unwrap();
    let x = find_intersection(&p1, &p2, &g).unwrap();
    assert!((x.t_star - 5.384).abs() <= 0.01, "{x:?}");
    assert!((x.y_star - 0.387).abs() <= 0.005, "{x:?}");

    let short = GridConfig::from_step(2.9, 1e-3, Method::Bdf2).unwrap();
    let (q1, q2) = (p1.with_horizon(2.9).unwrap(), p2.with_horizon(2.9).unwrap());
    assert_eq!(
        find_intersection(&q1, &q2, &short),
        Err(AnalysisError::NoIntersection { horizon: 2.9 })
    );
}

#[test]
fn growing_linear_solutions_never_cross() {
    let f = |_: f64, y: f64| 0.1 * y;
    let p1 = IvpProblem::new(1.5, 10.0, 1.0, 0.0, f).unwrap();
    let p2 = p1.with_slope(0.4).unwrap();
    let g = GridConfig::new(2000, Method::Abm);
    assert!(matches!(
        find_intersection(&p1, &p2, &g),
        Err(AnalysisError::NoIntersection { .. })
    ));
    let a = solve_ivp(&p1, &g).unwrap();
    assert!(crossing(&a, &solve_ivp(&p2, &g).unwrap()).is_none());
}
