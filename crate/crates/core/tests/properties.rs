//! Randomized invariants.

use proptest::prelude::*;

use coulomb_lab::bogoliubov::bogoliubov_dispersion_min;
use coulomb_lab::bogoliubov::semiclassical::dispersion_objective;
use coulomb_lab::coulomb::{exact_coulomb_energy, newton_smeared_potential, onsager_chain, smeared_pair_interaction, smeared_pair_interaction_quadrature, ChargeConfiguration};
use coulomb_lab::instability::{relativistic_two_body_energy, TwoBodyTrialState};
use coulomb_lab::lieb_thirring::{box_kinetic_lower_bound, dirichlet_cube_kinetic_sum, LtParameters};
use coulomb_lab::numerics::legendre::legendre_transform;
use coulomb_lab::numerics::KineticProfile;
use coulomb_lab::report::fmt17;
use coulomb_lab::rng::stream;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn dispersion_minimum_is_a_lower_bound(tau in 1e-3f64..1e3, g in 1e-3f64..1e3, f in 0.0f64..1e3) {
        let (f_star, e) = bogoliubov_dispersion_min(tau, g).unwrap();
        prop_assert!(e <= 0.0 && e >= -0.5 * g);
        prop_assert!(dispersion_objective(tau, g, f) >= e - 1e-12 * e.abs().max(1.0));
        prop_assert!((dispersion_objective(tau, g, f_star) - e).abs() <= 1e-10 * e.abs().max(1.0));
    }

    #[test]
    fn dispersion_minimum_decreases_with_coupling(tau in 1e-3f64..1e3, g in 1e-3f64..1e3, bump in 1e-6f64..10.0) {
        let (_, e1) = bogoliubov_dispersion_min(tau, g).unwrap();
        let (_, e2) = bogoliubov_dispersion_min(tau, g + bump).unwrap();
        prop_assert!(e2 <= e1);
    }

    #[test]
    fn smeared_potential_never_exceeds_point_potential(delta in 1e-3f64..10.0, r in 1e-6f64..20.0) {
        let v = newton_smeared_potential(delta, r).unwrap();
        prop_assert!(v <= 1.0 / r * (1.0 + 1e-14));
        prop_assert!(v <= 3.0 / delta * (1.0 + 1e-14));
        prop_assert!(v > 0.0);
    }

    #[test]
    fn disjoint_balls_interact_as_points(di in 0.01f64..2.0, dj in 0.01f64..2.0, gap in 0.0f64..5.0) {
        let d = 0.5 * (di + dj) + gap;
        let quad = smeared_pair_interaction_quadrature(di, dj, d).unwrap();
        prop_assert!((quad * d - 1.0).abs() < 1e-10);
    }

    #[test]
    fn overlapping_balls_interact_less_than_points(di in 0.01f64..2.0, dj in 0.01f64..2.0, frac in 0.01f64..0.99) {
        let d = frac * 0.5 * (di + dj);
        let i = smeared_pair_interaction(di, dj, d).unwrap();
        prop_assert!(i <= 1.0 / d);
        prop_assert!((i - smeared_pair_interaction_quadrature(di, dj, d).unwrap()).abs() <= 1e-14 * i);
    }

    #[test]
    fn smeared_chain_bounds_exact_energy(seed in any::<u64>(), n in 2usize..24) {
        let c = ChargeConfiguration::random_neutral(&mut stream(seed, 0), n).unwrap();
        let chain = onsager_chain(&c).unwrap();
        let exact = exact_coulomb_energy(&c).unwrap();
        prop_assert_eq!(exact, chain.exact);
        prop_assert!(exact >= chain.final_bound);
        prop_assert!(chain.sharpened_bound >= chain.final_bound);
        prop_assert!(chain.opposite_pair_max_deviation < 1e-10);
    }

    #[test]
    fn coulomb_energy_scales_inversely(seed in any::<u64>(), n in 2usize..12, s in 0.1f64..10.0) {
        let c = ChargeConfiguration::random_neutral(&mut stream(seed, 1), n).unwrap();
        let e = exact_coulomb_energy(&c).unwrap();
        let es = exact_coulomb_energy(&c.scaled(s).unwrap()).unwrap();
        prop_assert!((es * s - e).abs() <= 1e-12 * e.abs().max(1.0));
    }

    #[test]
    fn two_body_energy_scaling(a in 0.2f64..3.0, b in 0.2f64..3.0, q in 0.0f64..3.0, m in 0.01f64..10.0, ell in 1e-2f64..1e2) {
        let t = TwoBodyTrialState::correlated(a, b).unwrap();
        let lhs = ell * relativistic_two_body_energy(&t, q, m, ell).unwrap().total;
        let rhs = relativistic_two_body_energy(&t, q, m * ell, 1.0).unwrap().total;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()).max(1e-300));
    }

    #[test]
    fn cube_kinetic_sum_exceeds_bound(n in 1usize..3000, side in 0.1f64..10.0, m in 0.1f64..10.0) {
        let p = LtParameters::semiclassical(m, 1).unwrap();
        prop_assert!(dirichlet_cube_kinetic_sum(n, side, m).unwrap() >= box_kinetic_lower_bound(n as u64, side.powi(3), &p).unwrap());
    }

    #[test]
    fn legendre_fenchel_inequality(m in 0.5f64..5.0, p in -3.0f64..3.0, v in -0.9f64..0.9) {
        let grid: Vec<f64> = (0..4001).map(|i| -12.0 + 24.0 * i as f64 / 4000.0).collect();
        let profile = KineticProfile::relativistic(m).unwrap();
        let sampled = profile.sample(&grid);
        let star = legendre_transform(&sampled, v).unwrap();
        prop_assert!(star + profile.energy(p) >= v * p - 1e-9);
        prop_assert!((star - profile.conjugate(v)).abs() < 1e-6);
    }

    #[test]
    fn fmt17_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }
}
