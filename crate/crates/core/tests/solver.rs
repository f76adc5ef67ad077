use num::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tptg::check::{check_property, CheckOptions};
use tptg::dsl::{self, gen_nonrepudiation, Variant};
use tptg::game::random::{random_game, RandomGameParams};
use tptg::game::Tsg;
use tptg::solver::{
    self, brute_force_solve, evaluate_profile, synthesize, Direction, Kind, Objective, SolveOptions,
    DEFAULT_PROFILE_LIMIT,
};

fn objective(kind: Kind, direction: Direction) -> Objective {
    Objective { kind, direction, target: "goal".into() }
}

fn small_game(rng: &mut ChaCha8Rng) -> Tsg {
    let p = RandomGameParams { max_states: 8, goal_mass: rng.gen_range(0..4), ..Default::default() };
    random_game(rng, &p)
}

#[test]
fn value_iteration_agrees_with_exact_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SolveOptions::with_tol(1e-10);
    for _ in 0..60 {
        let g = small_game(&mut rng);
        let t = g.target("goal").unwrap();
        for kind in [Kind::ProbReach, Kind::ExpPrice] {
            for dir in [Direction::MaxMin, Direction::MinMax] {
                let exact = brute_force_solve(&g, &t, kind, dir, DEFAULT_PROFILE_LIMIT).unwrap().to_f64();
                let vi = solver::solve(&g, &objective(kind, dir), &opts).unwrap().value();
                if exact.is_infinite() {
                    assert!(vi.is_infinite(), "{kind:?} {dir:?}: oracle ∞, VI {vi}");
                } else {
                    assert!((exact - vi).abs() < 1e-7, "{kind:?} {dir:?}: oracle {exact}, VI {vi}");
                }
            }
        }
    }
}

#[test]
fn synthesized_profiles_realize_the_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = SolveOptions::default();
    for _ in 0..60 {
        let g = small_game(&mut rng);
        let t = g.target("goal").unwrap();
        for kind in [Kind::ProbReach, Kind::ExpPrice] {
            let obj = objective(kind, Direction::MaxMin);
            let r = solver::solve(&g, &obj, &opts).unwrap();
            let (profile, _) = synthesize(&g, &obj, &r, &opts).unwrap();
            let v = evaluate_profile(&g, &profile, &t, kind, &opts).unwrap();
            let (a, b) = (v[g.initial], r.value());
            assert!(a == b || (a - b).abs() < 1e-6, "{kind:?}: profile {a}, value {b}");
        }
    }
}

#[test]
fn bounded_values_grow_towards_the_unbounded_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let p = RandomGameParams { goal_mass: 4, sink_prob: 0.0, min_price: 1, ..Default::default() };
        let g = random_game(&mut rng, &p);
        let t = g.target("goal").unwrap();
        let full = solver::expected_price(&g, &t, Direction::MinMax, &SolveOptions::default()).unwrap().value();
        let mut prev = 0.0;
        for n in 0..50 {
            let v = solver::bounded_expected_price(&g, &t, Direction::MinMax, n)[g.initial];
            assert!(v >= prev - 1e-12 && v <= full + 1e-7);
            prev = v;
        }
    }
}

#[test]
fn larger_coalitions_do_at_least_as_well() {
    let p = BigRational::new(1.into(), 10.into());
    let c = dsl::compile(&gen_nonrepudiation(Variant::Malicious2, &p).unwrap()).unwrap();
    let opts = CheckOptions::default();
    let mut prop = c.props[0].clone();
    let mut values = Vec::new();
    for coalition in [vec![], vec!["R"], vec!["O", "R"]] {
        prop.coalition = coalition.into_iter().map(String::from).collect();
        values.push(check_property(&c.tptg, &prop, &opts).unwrap().value());
    }
    assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-8), "{values:?}");
    assert!((values[2] - 0.25).abs() < 1e-6);
}

#[test]
fn fig1_values() {
    let c = dsl::load(dsl::FIG1).unwrap();
    let opts = CheckOptions::default();
    let v: Vec<f64> = c.props.iter().map(|p| check_property(&c.tptg, p, &opts).unwrap().value()).collect();
    assert!((v[0] - 1.0).abs() < 1e-8);
    assert!((v[1] - 1.0).abs() < 1e-8);
    // Two lost fast deliveries push the third attempt past time 10.
    assert!((v[3] - 0.75).abs() < 1e-8);
}
