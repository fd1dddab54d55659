use proptest::prelude::*;
use qthermo::bath::{partial_thermalize_blocks, thermalize, IdealBath};
use qthermo::canonical::{beta_for_energy, canonical_state, mean_energy};
use qthermo::distribution::{correlation, gibbs_measure, marginal, trace_distance, ProjectorSet};
use qthermo::operator::{max_abs, partial_trace, unitary_log};
use qthermo::passivity::{is_passive, passive_form};
use qthermo::random::{random_density, random_hermitian, random_unitary, rng_from_seed};
use qthermo::Units;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_round_trip(seed in any::<u64>(), d in 1usize..7) {
        let h = random_hermitian(&mut rng_from_seed(seed), d, 2.0);
        let s = h.eig();
        prop_assert!(max_abs(&(s.reconstruct() - h.matrix())) < 1e-10);
        prop_assert!(s.orthonormality_deviation() < 1e-10);
    }

    #[test]
    fn partial_trace_keeps_trace_and_products(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut rng = rng_from_seed(seed);
        let (a, b) = (random_density(&mut rng, d1), random_density(&mut rng, d2));
        let joint = a.tensor(&b);
        let m = marginal(&joint, &[d1, d2], 0).unwrap();
        prop_assert!(max_abs(&(m.matrix() - a.matrix())) < 1e-12);
        let h = random_hermitian(&mut rng, d1 * d2, 1.0);
        let t = partial_trace(&h, &[d1, d2], 1).unwrap();
        prop_assert!((t.trace() - h.trace()).abs() < 1e-10);
        prop_assert!(correlation(&joint, [d1, d2]).unwrap().abs() < 1e-10);
    }

    #[test]
    fn unitary_log_exponentiates_back(seed in any::<u64>(), d in 1usize..6) {
        let u = random_unitary(&mut rng_from_seed(seed), d);
        let log = unitary_log(&u).unwrap();
        prop_assert!(max_abs(&(log.exp().matrix() - u.matrix())) < 1e-9);
        prop_assert!(log.phases.iter().all(|p| p.abs() <= std::f64::consts::PI + 1e-12));
    }

    #[test]
    fn passive_form_is_passive_and_isospectral(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let h = random_hermitian(&mut rng, d, 1.0);
        let rho = random_density(&mut rng, d);
        let pf = passive_form(&rho, &h).unwrap();
        prop_assert!(pf.ergotropy >= -1e-12);
        prop_assert!(is_passive(&pf.passive_state, &h).unwrap());
        prop_assert!((gibbs_measure(&pf.passive_state) - gibbs_measure(&rho)).abs() < 1e-10);
        let rotated = rho.evolve(&pf.aligning_unitary);
        prop_assert!(trace_distance(&rotated, &pf.passive_state) < 1e-9);
    }

    #[test]
    fn beta_for_energy_inverts_mean_energy(seed in any::<u64>(), d in 2usize..6, beta in 0.05f64..5.0) {
        let h = random_hermitian(&mut rng_from_seed(seed), d, 1.0);
        let e = mean_energy(&h, beta).unwrap();
        let back = beta_for_energy(&h, e).unwrap();
        prop_assert!((mean_energy(&h, back).unwrap() - e).abs() < 1e-9);
    }

    #[test]
    fn block_thermalization_is_idempotent(seed in any::<u64>(), beta in 0.1f64..4.0) {
        let mut rng = rng_from_seed(seed);
        let h = random_hermitian(&mut rng, 4, 1.0);
        let rho = random_density(&mut rng, 4);
        let k = ProjectorSet::from_index_blocks(4, &[vec![0, 2], vec![1, 3]]).unwrap();
        let once = partial_thermalize_blocks(&rho, &h, beta, &k).unwrap();
        let twice = partial_thermalize_blocks(&once, &h, beta, &k).unwrap();
        prop_assert!(max_abs(&(once.matrix() - twice.matrix())) < 1e-10);
    }

    #[test]
    fn collisions_never_raise_lyapunov(seed in any::<u64>(), g in 0.1f64..2.0, tau in 0.05f64..2.0, beta in 0.1f64..3.0) {
        let mut rng = rng_from_seed(seed);
        let h = qthermo::operator::HermitianOperator::from_real_diagonal(&[0.0, 0.7, 1.9]);
        let bath = IdealBath::partial_swap(beta, &h, g, tau).unwrap();
        let rho = random_density(&mut rng, 3);
        let trace = thermalize(&rho, &h, &bath, 10, 1, &Units::natural()).unwrap();
        prop_assert!(trace.max_lyapunov_increase() <= 1e-10);
        let can = canonical_state(&h, beta).unwrap();
        let floor = gibbs_measure(&can) + beta * can.expectation(&h);
        prop_assert!(trace.records.iter().all(|r| r.lyapunov >= floor - 1e-10));
    }
}
