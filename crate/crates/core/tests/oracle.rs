mod common;

use common::oracle::{compare, configs, instance};

#[test]
fn detect_agrees_with_exhaustive_search() {
    for (name, cfg) in configs() {
        let mut found = 0;
        for seed in 0..600 {
            let inst = instance(seed);
            let c = compare(&inst, &cfg);
            assert!(c.pruning_sound, "{name}: pruning dropped a valid node, seed {seed}");
            assert!(c.agree, "{name}: verdict differs from oracle, seed {seed}");
            found += c.oracle_found as usize;
        }
        // both outcomes must be exercised
        assert!(found > 50 && found < 550, "{name}: {found} positives");
    }
}
