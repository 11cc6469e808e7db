use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viopat::ast::TokenSequence;
use viopat::embed::{cosine_similarity, embed_sequence, train_embeddings, EmbedParams};

fn seq(tokens: Vec<String>) -> TokenSequence {
    TokenSequence { tokens }
}

/// X and Y always appear next to each other; Z lives in separate sequences.
fn cooccurrence_corpus(seed: u64) -> Vec<TokenSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = |rng: &mut ChaCha8Rng, prefix: &str| format!("{prefix}{}", rng.random_range(0..6));
    let mut out = Vec::new();
    for _ in 0..60 {
        let mut a: Vec<String> = (0..6).map(|_| filler(&mut rng, "f")).collect();
        let at = rng.random_range(0..5);
        a[at] = "X".into();
        a[at + 1] = "Y".into();
        out.push(seq(a));
        let mut b: Vec<String> = (0..6).map(|_| filler(&mut rng, "g")).collect();
        b[rng.random_range(0..6)] = "Z".into();
        out.push(seq(b));
    }
    out
}

#[test]
fn cooccurring_tokens_are_closer() {
    let mut wins = 0;
    for seed in 0..5 {
        let params = EmbedParams {
            dim: 32,
            seed,
            ..EmbedParams::default()
        };
        let table = train_embeddings(&cooccurrence_corpus(seed), &params).unwrap();
        let xy = cosine_similarity(table.vector("X"), table.vector("Y")).unwrap();
        let xz = cosine_similarity(table.vector("X"), table.vector("Z")).unwrap();
        if xy > xz {
            wins += 1;
        }
    }
    assert!(wins >= 3, "co-occurrence held for only {wins}/5 seeds");
}

#[test]
fn training_is_deterministic() {
    let corpus = cooccurrence_corpus(7);
    let params = EmbedParams {
        dim: 16,
        epochs: 3,
        seed: 9,
        ..EmbedParams::default()
    };
    let a = train_embeddings(&corpus, &params).unwrap();
    let b = train_embeddings(&corpus, &params).unwrap();
    assert_eq!(a.to_text(), b.to_text());
}

proptest! {
    #[test]
    fn cosine_is_symmetric_and_scale_invariant(
        u in prop::collection::vec(-10.0f64..10.0, 4),
        v in prop::collection::vec(-10.0f64..10.0, 4),
        alpha in 0.01f64..100.0,
    ) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
        let c = cosine_similarity(&u, &v).unwrap();
        prop_assert!((c - cosine_similarity(&v, &u).unwrap()).abs() < 1e-12);
        let scaled: Vec<f64> = u.iter().map(|x| x * alpha).collect();
        prop_assert!((c - cosine_similarity(&scaled, &v).unwrap()).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&c));
    }

    #[test]
    fn content_rows_do_not_depend_on_padding(len in 0usize..6, extra in 0usize..5) {
        let tokens: Vec<String> = (0..len).map(|i| format!("t{}", i % 3)).collect();
        let table = train_embeddings(&[seq(vec!["t0".into(), "t1".into(), "t2".into()])], &EmbedParams { dim: 4, epochs: 1, ..EmbedParams::default() }).unwrap();
        let tight = embed_sequence(&tokens, &table, len).unwrap();
        let padded = embed_sequence(&tokens, &table, len + extra).unwrap();
        prop_assert_eq!(&padded.data[..len * 4], &tight.data[..]);
        prop_assert!(padded.data[len * 4..].iter().all(|x| *x == 0.0));
    }
}
