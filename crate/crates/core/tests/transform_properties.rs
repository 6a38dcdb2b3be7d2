use contractlab::audit;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_for_existence_yields_a_good_pne(seed in any::<u64>()) {
        audit::scaling_for_existence(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn lifting_meets_its_case_ratio(seed in any::<u64>()) {
        audit::lifting(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn robustified_contracts_keep_their_ratio_in_every_cce(seed in any::<u64>()) {
        audit::robustness(seed, 6).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn robust_scaling_keeps_a_quarter(seed in any::<u64>()) {
        audit::robust_scaling(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn supermodular_constructions_emit_pnes(seed in any::<u64>()) {
        audit::supermodular_constructions(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn supermodular_grid_optima_coincide(seed in any::<u64>()) {
        audit::supermodular_grid(seed, 4).map_err(TestCaseError::fail)?;
    }
}
