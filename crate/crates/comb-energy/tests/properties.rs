mod common;

use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn link_is_associative(seed in any::<u64>()) {
        let r = common::link_associativity(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn combs_neutralize_product_inputs(seed in any::<u64>()) {
        let r = common::neutralization(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn energy_is_subadditive_under_composition(seed in any::<u64>()) {
        let r = common::subadditivity(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn global_energy_below_local(seed in any::<u64>()) {
        let r = common::global_below_local(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn qubit_free_estimator_matches_fixed(seed in any::<u64>()) {
        let r = common::fixed_vs_free(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}
