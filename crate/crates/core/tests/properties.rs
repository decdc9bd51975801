mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use virodyn::dynamics::{integrate, Sampling, Tolerances};
use virodyn::equilibria::equilibria;
use virodyn::stability::routh_hurwitz4;
use virodyn::{jacobian, Clearance, ModelParams, State};

#[test]
fn invariant_region_is_forward_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100 {
        let p = random_params(&mut rng);
        let s = invariant_start(&mut rng, &p);
        let o = integrate(&p, s, (0.0, 200.0), Tolerances::default(), Sampling::Steps).unwrap();
        assert!(o.is_complete(), "orbit {i} aborted: {:?}", o.termination);
        assert_eq!(o.stats.domain_violations, 0, "orbit {i} left the domain, params {p:?}, start {s:?}");
    }
}

#[test]
fn z_cap_alone_is_not_invariant_for_linear_clearance() {
    // y above c/β_z makes z grow at the cap
    let p = linear(9.5);
    let cap = p.domain_bounds().z_cap;
    let o = integrate(&p, State::new(0.0, 0.99, 0.0, cap), (0.0, 1.0), Tolerances::default(), Sampling::Steps).unwrap();
    assert!(o.stats.max.z > cap * (1.0 + 1e-6));
}

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    any::<u64>().prop_map(|seed| random_params(&mut ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn jacobian_matches_finite_differences(p in params_strategy(), seed in any::<u64>()) {
        let s = invariant_start(&mut ChaCha8Rng::seed_from_u64(seed), &p);
        let scale = s.max_abs().max(1.0);
        let j = jacobian(&p, &s).unwrap();
        let fd = fd_jacobian(&p, &s, 1e-5 * scale);
        let err = (j - fd).amax() / j.amax().max(1.0);
        prop_assert!(err <= 1e-6, "relative error {err:e}");
    }
}

#[test]
fn routh_hurwitz_agrees_with_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut stable = 0;
    while checked < 1000 {
        let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..4.0));
        let roots = companion_roots(a);
        let lead = roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if lead.abs() < 1e-9 {
            continue;
        }
        let rh = routh_hurwitz4(a[0], a[1], a[2], a[3]);
        assert_eq!(rh.stable, lead < 0.0, "{a:?} roots {roots:?}");
        stable += rh.stable as usize;
        checked += 1;
    }
    assert!(stable > 50, "sample too lopsided: {stable} stable");
}

#[test]
fn equilibria_are_exhaustive_against_grid_newton() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..20 {
        let p = random_params(&mut rng);
        let ours: Vec<State> = equilibria(&p).unwrap().feasible().map(|e| e.point).collect();
        for s in grid_newton_equilibria(&p, 5) {
            let tol = 1e-6 * s.max_abs().max(1.0);
            assert!(
                ours.iter().any(|q| q.distance(&s) <= tol),
                "set {i}: oracle zero {s:?} missing from {ours:?} ({p:?})"
            );
        }
    }
}

#[test]
fn every_reported_equilibrium_is_a_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let p = random_params(&mut rng);
        for e in equilibria(&p).unwrap().feasible() {
            assert!(e.residual <= 1e-9 * e.point.max_abs().max(1.0), "{e:?}");
        }
    }
}

#[test]
fn quadratic_box_is_invariant_from_its_corners() {
    let p = quadratic(42.0);
    let b = p.domain_bounds();
    for s in [State::new(1.0, 0.0, b.v_cap, b.z_cap), State::new(0.0, 1.0, b.v_cap, b.z_cap)] {
        let o = integrate(&p, s, (0.0, 50.0), Tolerances::default(), Sampling::Steps).unwrap();
        assert_eq!(o.stats.domain_violations, 0);
    }
    assert_eq!(p.epsilon, Clearance::Quadratic);
}
