mod common;

use common::mining::{brute_force_support, corpus, params, TEMPLATES};
use viopat::embed::cosine_similarity;
use viopat::patterns::{
    generate_patch_candidate, match_fix_patterns, mine_fix_library, FixInstance,
};

#[test]
fn templates_are_recovered_with_exact_support() {
    for seed in [1, 2, 3, 4, 5, 6, 7, 8] {
        let c = corpus(seed, &[30, 20, 10]);
        let lib = mine_fix_library(&c.instances, &params()).unwrap();
        let mut found: Vec<(String, usize)> = Vec::new();
        for (p, members) in lib.patterns.iter().zip(&lib.clusters) {
            let refs: Vec<&FixInstance> = members.iter().map(|&i| &c.instances[i]).collect();
            assert_eq!(p.support, brute_force_support(&refs));
            found.push((p.violation_type.clone(), p.support));
        }
        found.sort();
        let mut expected: Vec<(String, usize)> = TEMPLATES
            .iter()
            .map(|t| t.to_string())
            .zip([30, 20, 10])
            .collect();
        expected.sort();
        assert_eq!(
            found,
            expected,
            "clusters {:?}",
            lib.clusters.iter().map(Vec::len).collect::<Vec<_>>()
        );

        for (t, (_, v)) in c.held_out.iter().enumerate() {
            let f = lib.code_space.features(&v.tokens).unwrap();
            let ranked =
                match_fix_patterns(&f, &v.record.violation_type, &lib.patterns, 10, true).unwrap();
            let top = &lib.patterns[ranked.entries[0].index];
            assert_eq!(top.violation_type, TEMPLATES[t]);
            let mut oracle: Vec<(f64, usize)> = lib
                .patterns
                .iter()
                .enumerate()
                .map(|(i, p)| (cosine_similarity(&f, &p.centroid_features).unwrap(), i))
                .collect();
            oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            assert_eq!(
                ranked.entries.iter().map(|e| e.index).collect::<Vec<_>>(),
                oracle.iter().map(|o| o.1).collect::<Vec<_>>()
            );
            let patch = generate_patch_candidate(v, top)
                .unwrap()
                .expect("own template applies");
            assert!(!patch.frag_b.is_empty() && !patch.frag_f.is_empty());
        }
    }
}
