mod common;

use barycenter_core::algorithms::exact_barycenter;
use barycenter_core::measure::centroid_set;
use barycenter_core::oracle::{brute_force_phi, enumerate_measures, MAX_ENUMERATED_SUPPORT};
use common::{instance_strategy, RawInstance};
use proptest::prelude::*;

/// Instances whose centroid set is small enough to enumerate every measure
/// on it at granularity `1/denominator` and price it exhaustively.
fn small_instances() -> impl Strategy<Value = RawInstance> {
    prop_oneof![
        instance_strategy(2..=2, 2..=3, 1..=2, 4),
        instance_strategy(3..=3, 2..=2, 1..=2, 4),
        instance_strategy(2..=2, 2..=2, 1..=3, 8),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_barycenter_beats_every_enumerated_measure(raw in small_instances()) {
        let inst = raw.build();
        let d = raw.denominator as usize;
        let exact = exact_barycenter(&inst, 1_000).unwrap();
        let support = centroid_set(inst.measures(), inst.weights(), 1_000, 0.0).unwrap();
        prop_assert!(support.len() <= MAX_ENUMERATED_SUPPORT);
        for q in enumerate_measures(&support, d, 0.0).unwrap() {
            prop_assert!(exact.phi <= brute_force_phi(&q, &inst, d).unwrap());
        }
    }
}
