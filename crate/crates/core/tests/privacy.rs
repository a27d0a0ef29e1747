mod support;

use mupir_core::pir::CapacityAchieving;
use mupir_core::placement::{AccessStructure, SystemParams};
use mupir_core::privacy::{
    default_demand_vectors, exhaustive_privacy_check, statistical_privacy_check, ExhaustiveCaps,
};
use mupir_core::protocol::{full_family, generate_query_bundles_with, DemandVector};
use mupir_core::privacy::structural_check;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::leaky::Leaky;

fn tiny() -> (SystemParams, AccessStructure) {
    (
        SystemParams::new(2, 2, 2, 1, 1, 8).unwrap(),
        AccessStructure::full(2, 1).unwrap(),
    )
}

#[test]
fn exact_audit_catches_the_leak() {
    let (params, access) = tiny();
    let family = full_family(&params);
    let caps = ExhaustiveCaps::default();
    let honest = exhaustive_privacy_check(&CapacityAchieving, &params, &access, &family, 1, &caps)
        .unwrap();
    assert!(honest.passed);
    let leaky = exhaustive_privacy_check(&Leaky, &params, &access, &family, 1, &caps).unwrap();
    assert!(!leaky.passed);
    assert!(leaky.max_tv > honest.max_tv);
    assert!(leaky.csv().lines().count() == 5);
}

#[test]
fn worked_example_statistical_audit() {
    let params = SystemParams::new(2, 3, 5, 3, 2, 80).unwrap();
    let access = AccessStructure::full(5, 3).unwrap();
    let family = full_family(&params);
    let demands = default_demand_vectors(&access, 3, 2, 17).unwrap();
    let honest = statistical_privacy_check(
        &CapacityAchieving,
        &params,
        &access,
        &family,
        1,
        &demands,
        1000,
        0.01,
        17,
    )
    .unwrap();
    assert!(honest.passed, "{}", honest.csv());
    let leaky =
        statistical_privacy_check(&Leaky, &params, &access, &family, 1, &demands, 200, 0.01, 17)
            .unwrap();
    assert!(!leaky.passed);
    assert!(!leaky.structural.passed());
}

#[test]
fn structural_invariants_on_random_plans() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (s, n, c, l, t) in [(2, 3, 5, 3, 2), (3, 2, 4, 2, 1), (2, 1, 3, 1, 0), (3, 3, 4, 1, 2)] {
        let params = SystemParams::new(s, n, c, l, t, 1).unwrap();
        let access = AccessStructure::full(c, l).unwrap();
        for seed in 0..5 {
            let d = DemandVector::random(&access, n, &mut rng);
            let plan = generate_query_bundles_with(
                &CapacityAchieving,
                &params,
                &access,
                &full_family(&params),
                &d,
                seed,
            )
            .unwrap();
            let report = structural_check(&plan, &d, &params);
            assert!(report.passed(), "{:?}", report.violations);
        }
    }
}
