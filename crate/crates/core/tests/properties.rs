mod support;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use viewnet::checker::check_decentralized_compat;
use viewnet::interaction::{matches, sd_to_nfa};
use viewnet::kernel::check_satisfaction_condition;

use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_preserves_satisfaction(seed in any::<u64>()) {
        let (sigma, r, phi) = satisfaction_triple(seed);
        prop_assert!(check_satisfaction_condition(&sigma, &r, &phi).unwrap());
    }

    #[test]
    fn compiled_interactions_match_by_search(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let t = random_term(&mut rng, 3);
        let a = sd_to_nfa(&interaction(t.clone()));
        for w in all_words(4) {
            let evs: Vec<_> = w.iter().map(|m| event(m)).collect();
            prop_assert_eq!(matches(&evs, &a), brute_accepts(&t, &w), "{:?}", w);
        }
    }

    #[test]
    fn enumeration_picks_one_per_class(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let th = random_small_cd(&mut rng);
        prop_assert!(enumeration_is_canonical(&th, 2));
    }

    #[test]
    fn compatibility_is_reflexive(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let sig = random_cd_signature(&mut rng);
        let r = random_realization(&mut rng, &sig);
        prop_assert!(check_decentralized_compat(&r, &r, &sig, 6).unwrap());
    }

    #[test]
    fn compatibility_is_symmetric(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let sig = random_cd_signature(&mut rng);
        let a = random_realization(&mut rng, &sig);
        let b = random_realization(&mut rng, &sig);
        prop_assert_eq!(
            check_decentralized_compat(&a, &b, &sig, 6).unwrap(),
            check_decentralized_compat(&b, &a, &sig, 6).unwrap()
        );
    }
}
