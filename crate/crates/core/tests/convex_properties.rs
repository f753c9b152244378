use fraflow::convex::{audit_pair, audit_random, Functional, PowerPotential, Quadratic, Space};
use fraflow::plaplace::{Grid, PDirichlet};
use proptest::prelude::*;

const LAMBDAS: [f64; 3] = [0.01, 0.1, 1.0];
const TOL: f64 = 1e-8;

fn builtins() -> Vec<Box<dyn Functional>> {
    let space = Space::euclidean(6);
    vec![
        Box::new(Quadratic::new(space)),
        Box::new(Quadratic::scaled(Space::weighted(6, 0.25), 3.0).unwrap()),
        Box::new(PowerPotential::new(space, 1.5).unwrap()),
        Box::new(PowerPotential::new(space, 4.0).unwrap()),
        Box::new(PDirichlet::new(Grid::line(8).unwrap(), 1.5).unwrap()),
        Box::new(PDirichlet::new(Grid::line(8).unwrap(), 3.0).unwrap()),
        Box::new(PDirichlet::new(Grid::square(4).unwrap(), 2.0).unwrap()),
        Box::new(PDirichlet::new(Grid::square(4).unwrap(), 4.0).unwrap()),
    ]
}

#[test]
fn seeded_audit_finds_no_violations() {
    for (i, phi) in builtins().iter().enumerate() {
        let summary = audit_random(phi.as_ref(), &LAMBDAS, 100, 2.0, 11 + i as u64).unwrap();
        assert!(summary.passed(TOL), "{}: {:?}", summary.functional, summary.worst);
    }
}

fn pair(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-3.0..3.0f64, dim),
        prop::collection::vec(-3.0..3.0f64, dim),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn power_potential_properties((w1, w2) in pair(6), q in 1.2..6.0f64, lambda in prop::sample::select(LAMBDAS.to_vec())) {
        let phi = PowerPotential::new(Space::euclidean(6), q).unwrap();
        let a = audit_pair(&phi, lambda, &w1, &w2, 1e-12).unwrap();
        prop_assert!(a.worst() <= TOL, "{a:?}");
    }

    #[test]
    fn p_dirichlet_properties((w1, w2) in pair(8), p in 1.3..5.0f64, lambda in prop::sample::select(LAMBDAS.to_vec())) {
        let phi = PDirichlet::new(Grid::line(8).unwrap(), p).unwrap();
        let a = audit_pair(&phi, lambda, &w1, &w2, 1e-12).unwrap();
        prop_assert!(a.worst() <= TOL, "{a:?}");
    }

    #[test]
    fn quadratic_properties((w1, w2) in pair(6), scale in 0.1..10.0f64, lambda in prop::sample::select(LAMBDAS.to_vec())) {
        let phi = Quadratic::scaled(Space::euclidean(6), scale).unwrap();
        let a = audit_pair(&phi, lambda, &w1, &w2, 1e-12).unwrap();
        prop_assert!(a.worst() <= TOL, "{a:?}");
    }
}

#[test]
fn p_dirichlet_gradient_matches_differences() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for grid in [Grid::line(16).unwrap(), Grid::square(8).unwrap()] {
        for p in [1.5, 2.0, 3.0, 4.0] {
            let phi = PDirichlet::new(grid, p).unwrap();
            for _ in 0..5 {
                let w: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let err = fraflow::convex::gradient_mismatch(&phi, &w, 1e-6);
                assert!(err <= 1e-6, "p={p} dim={} err={err:e}", grid.dim());
            }
        }
    }
}
