use contractlab::audit;
use contractlab::fixtures::{rng, RandomKind};
use contractlab::{
    best_response_dynamics, is_dropout_stable, is_pne, potential, ratio, subsets, ActionProfile,
    ExtendedScalar, Scalar,
};
use num_traits::Zero;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verdicts_respect_the_containment_chain(
        seed in any::<u64>(),
        kind in prop::sample::select(RandomKind::ALL.to_vec()),
    ) {
        audit::containment_chain(seed, kind).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn dynamics_climb_the_potential_and_stop_at_a_pne(
        seed in any::<u64>(),
        kind in prop::sample::select(RandomKind::ALL.to_vec()),
    ) {
        let mut r = rng(seed);
        let inst = audit::instance(&mut r, kind, 4, 8, false);
        let a = audit::contract(&mut r, inst.n(), &ratio(1, 1));
        let start: ActionProfile = inst.all_actions().iter().filter(|_| r.gen_bool(0.5)).collect();
        let out = best_response_dynamics(&inst, &start, &a, None).unwrap();
        prop_assert_eq!(out.potentials.len(), out.steps + 1);
        for w in out.potentials.windows(2) {
            // Moves by unpaid agents may leave an infinite potential unchanged.
            prop_assert!(w[1] > w[0] || (w[0] == ExtendedScalar::NegInfinity && w[1] == w[0]));
        }
        prop_assert!(is_pne(&inst, &out.profile, &a).unwrap().holds());
    }

    #[test]
    fn xos_dropout_stable_bundles_have_nonnegative_potential(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = audit::instance(&mut r, RandomKind::Xos, 4, 7, false);
        let a = audit::contract(&mut r, inst.n(), &ratio(1, 1));
        let d = audit::sample_dropout_stable(&inst, &a, &mut r);
        prop_assert!(is_dropout_stable(&inst, &d, &a).unwrap().holds());
        for agents in subsets(&(0..inst.n()).collect::<Vec<_>>()) {
            let members: Vec<usize> = agents.iter().collect();
            let mut total = Scalar::zero();
            for (s, p) in d.support() {
                let phi = potential(&inst, &inst.restrict_to_agents(s, &members), &a).unwrap();
                let ExtendedScalar::Finite(phi) = phi else {
                    return Err(TestCaseError::fail("infinite potential on a dropout-stable support"));
                };
                total += p * phi;
            }
            prop_assert!(total >= Scalar::zero(), "bundle {:?}", members);
        }
    }

    #[test]
    fn dropout_stability_bounds_scaled_costs_by_marginals(
        seed in any::<u64>(),
        kind in prop::sample::select(RandomKind::ALL.to_vec()),
    ) {
        let mut r = rng(seed);
        let inst = audit::instance(&mut r, kind, 4, 7, false);
        let a = audit::contract(&mut r, inst.n(), &ratio(1, 1));
        let d = audit::sample_dropout_stable(&inst, &a, &mut r);
        for i in (0..inst.n()).filter(|&i| !a.share(i).is_zero()) {
            let cost = d.expectation(|s| inst.cost_of(&inst.slice(s, i)));
            let marginal = d.expectation(|s| inst.value(s) - inst.value(&inst.others(s, i)));
            prop_assert!(cost / a.share(i) <= marginal);
        }
    }
}
