mod common;

use toruszeros::phase_space::{
    build_x, build_z, displacement, evolve_displacement, fractional_power, momentum_route_discrepancy,
    verify_proposition1, DisplacementRoute, PhaseConvention,
};
use toruszeros::{Error, QuantumState, TrackerConfig};

use common::*;

fn max_entry(m: &nalgebra::DMatrix<toruszeros::Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[test]
fn commutation_relation() {
    for d in [3, 5] {
        let x = build_x(d).unwrap();
        let z = build_z(d).unwrap();
        let lhs = x.matrix() * z.matrix();
        let w = toruszeros::phase_space::omega(d, -1);
        let rhs = z.matrix() * x.matrix() * w;
        assert!(max_entry(&(lhs - rhs)) < 1e-12, "d = {d}");
    }
}

#[test]
fn integer_powers_match_repeated_products() {
    let op = displacement(5, 2, 1, PhaseConvention::HalfInverse).unwrap();
    let mut p = op.matrix().clone();
    for k in 2..=5 {
        p = &p * op.matrix();
        let diff = fractional_power(&op, k as f64).matrix - &p;
        assert!(max_entry(&diff) < 1e-10, "k = {k}");
    }
}

#[test]
fn even_dimension_general_displacement_is_a_domain_error() {
    assert!(matches!(displacement(4, 1, 1, PhaseConvention::HalfInverse), Err(Error::Domain(_))));
    assert!(displacement(4, 1, 0, PhaseConvention::HalfInverse).is_ok());
}

#[test]
fn reroot_and_track_routes_agree() {
    let run = &operator_runs()[0];
    let tracked = run.track(1.0, 500).unwrap();
    let times = unit_grid(1.0, 20);
    let rerooted = run.reroot(&tracked, &times).unwrap();
    assert!(max_distance(&tracked, &rerooted, &times) < 1e-6);
}

#[test]
fn state_route_matches_zeros_route() {
    let run = &operator_runs()[1];
    let from_zeros = run.track(1.0, 500).unwrap();
    let times = unit_grid(3.0, 500);
    let cfg = TrackerConfig { dt: 1.0 / 500.0, ..TrackerConfig::default() };
    let from_state = evolve_displacement(&from_zeros.initial_state, &run.op, &times, DisplacementRoute::Track(cfg)).unwrap();
    let e = set_distance(&from_state.sample(from_state.len() - 1), &from_zeros.sample(from_zeros.len() - 1), &from_zeros.cell);
    assert!(e < 1e-8);
}

#[test]
fn shift_covariance_holds_for_a_random_state() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
    let g = QuantumState::random(3, &mut rng);
    let x = build_x(3).unwrap();
    let times = unit_grid(3.0, 1000);
    let cfg = TrackerConfig { dt: 1e-3, ..TrackerConfig::default() };
    let b = evolve_displacement(&g, &x, &times, DisplacementRoute::Track(cfg)).unwrap();
    let report = verify_proposition1(&b, 1e-4).unwrap();
    assert!(report.passed(), "max violation {:e}", report.max_violation);
    assert!(momentum_route_discrepancy(&b, &checkpoints(2.0, 10)).unwrap() < 1e-8);
}

#[test]
fn x_on_even_dimension_sits_on_the_branch_cut() {
    assert!(build_x(4).unwrap().on_branch_cut());
    assert!(!build_x(3).unwrap().on_branch_cut());
}
