use proptest::prelude::*;

use flab_core::calculus::{
    compensator, integration_by_parts_rhs, is_martingale, orthogonality_report, quadratic_covariation,
    stochastic_integral,
};
use flab_core::enlargement::verify_filtration_identities;
use flab_core::fixtures::{random_scenario, random_time_scenario};
use flab_core::jump_measure::{
    compensator_measure, fundamental_martingales, jump_measure, Mark, PredictableFunction, RandomMeasure,
};
use flab_core::random_time::{azema_cross_check, azema_report, build_random_time_bundle};
use flab_core::representation::{martingale_closure, multiplicity, solve_triple, solve_wrp};
use flab_core::space::{conditional_expectation, stop_process};
use flab_core::{Filtration, Partition, Process, StoppingTime};

/// Predictable process from per-(t, block of P_{t-1}) values.
fn predictable_from(vals: &[f64], f: &Filtration) -> Process {
    let mut k = 0;
    let mut p = Process::zeros(f.n_atoms(), f.horizon());
    for t in 1..=f.horizon() {
        for block in f.at(t - 1).blocks() {
            let v = vals[k % vals.len()];
            k += 1;
            for &a in block {
                p.set(a, t, v);
            }
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tower_property(seed in 0u64..10_000, v in prop::collection::vec(-5.0f64..5.0, 6)) {
        let s = random_scenario(seed);
        let g = s.bundle().unwrap().g;
        let v = &v[..s.space.len()];
        for fine in 0..=g.horizon() {
            for coarse in 0..=fine {
                let inner = conditional_expectation(&s.space, v, g.at(fine)).values;
                let two = conditional_expectation(&s.space, &inner, g.at(coarse)).values;
                let one = conditional_expectation(&s.space, v, g.at(coarse)).values;
                for (a, b) in two.iter().zip(&one) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn integration_by_parts(seed in 0u64..10_000) {
        let s = random_scenario(seed);
        let lhs = Process::from_fn(s.x.n_atoms(), s.horizon(), |a, t| {
            s.x.value(a, t) * s.h.value(a, t) - s.x.value(a, 0) * s.h.value(a, 0)
        });
        prop_assert!(lhs.max_abs_diff_all(&integration_by_parts_rhs(&s.x, &s.h)) <= 1e-12);
    }

    #[test]
    fn orthogonality_clauses(seed in 0u64..10_000) {
        let s = random_scenario(seed);
        let g = s.bundle().unwrap().g;
        let r = orthogonality_report(&s.x, &s.h, &g).unwrap();
        prop_assert!(r.all_clauses_hold(), "{:?}", r.clauses);
        prop_assert!(r.clause("ii").unwrap().holds);
    }

    #[test]
    fn integrals_preserve_martingales(seed in 0u64..10_000, vals in prop::collection::vec(-3.0f64..3.0, 1..20)) {
        let s = random_scenario(seed);
        let g = s.bundle().unwrap().g;
        let m = compensator(&s.x, &g).unwrap().martingale_part;
        let k = predictable_from(&vals, &g);
        let km = stochastic_integral(&k, &m, &g).unwrap();
        prop_assert!(is_martingale(&km, &g).is_martingale());
    }

    #[test]
    fn wrp_and_triple_reconstruct_identically(seed in 0u64..10_000, xi in prop::collection::vec(-4.0f64..4.0, 6)) {
        let s = random_scenario(seed);
        let g = s.bundle().unwrap().g;
        let y = martingale_closure(&xi[..s.space.len()], &g);
        let mu = jump_measure(&s.x, &s.h, &g).unwrap();
        let nu = compensator_measure(&mu, &g).unwrap();
        let zs = fundamental_martingales(&s.x, &s.h, &g).unwrap();
        let w = solve_wrp(&y, &mu, &nu, &g).unwrap();
        let tr = solve_triple(&y, &zs.z, &g, None).unwrap();
        prop_assert!(w.residual_sup <= 1e-9 && tr.residual_sup <= 1e-9);
        prop_assert!(w.reconstruction.max_abs_diff(&tr.reconstruction, g.space()) <= 1e-9);
    }

    #[test]
    fn compensated_measure_integrals(seed in 0u64..10_000, vals in prop::collection::vec(-3.0f64..3.0, 3..30)) {
        let s = random_scenario(seed);
        let g = s.bundle().unwrap().g;
        let mu = jump_measure(&s.x, &s.h, &g).unwrap();
        let nu = compensator_measure(&mu, &g).unwrap();
        let comps: Vec<Process> = (0..3).map(|i| predictable_from(&vals[i..], &g)).collect();
        let w = PredictableFunction::new(comps[0].clone(), comps[1].clone(), comps[2].clone());
        w.check_predictable(&g).unwrap();
        let diff = &mu.integrate(&w) - &nu.integrate(&w);
        prop_assert!(is_martingale(&diff, &g).is_martingale());
        let zs = fundamental_martingales(&s.x, &s.h, &g).unwrap();
        let mut sum = Process::zeros(s.x.n_atoms(), s.horizon());
        for (m, z) in Mark::ALL.iter().zip(&zs.z) {
            sum = &sum + &stochastic_integral(w.get(*m), z, &g).unwrap();
        }
        prop_assert!(diff.max_abs_diff_all(&sum) <= 1e-12);
        // total mass
        let total = mu.total_mass();
        let bracket = quadratic_covariation(&s.x, &s.h);
        prop_assert_eq!(total, &(&s.x + &s.h) - &bracket);
    }

    #[test]
    fn filtration_identities_and_monotone_multiplicity(seed in 0u64..10_000) {
        let s = random_scenario(seed);
        let b = s.bundle().unwrap();
        prop_assert!(verify_filtration_identities(&b).unwrap().all_hold());
        prop_assert!(multiplicity(&b.g) >= multiplicity(&b.f));
        prop_assert!(multiplicity(&b.f) >= multiplicity(&b.base) || s.r != Partition::trivial(s.space.len()));
    }

    #[test]
    fn stopping_composition(seed in 0u64..10_000, a in 0usize..5, c in 0usize..5) {
        let s = random_scenario(seed);
        let g = s.bundle().unwrap().g;
        let horizon = s.horizon();
        let sigma = StoppingTime::hitting_time(&s.x, 1.0);
        let rho = if a > horizon { StoppingTime::infinite(s.space.len()) } else { StoppingTime::constant(s.space.len(), a.min(c)) };
        let twice = stop_process(&stop_process(&s.h, &sigma, &g).unwrap(), &rho, &g).unwrap();
        let once = stop_process(&s.h, &sigma.min(&rho), &g).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn azema_formula_on_random_times(seed in 0u64..10_000) {
        let s = random_time_scenario(seed);
        let f = s.bundle().unwrap().f;
        let b = build_random_time_bundle(s.tau.as_ref().unwrap(), &f).unwrap();
        prop_assert!(azema_report(&b).holds());
        let c = azema_cross_check(&b).unwrap();
        prop_assert!(c.holds(), "gap {}", c.max_gap);
    }
}
